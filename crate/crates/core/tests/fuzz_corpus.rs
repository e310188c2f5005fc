//! Replays the checked-in fuzz seeds through the same checks the fuzz
//! targets perform, so regressions show up without a nightly toolchain.

use std::fs;
use std::path::PathBuf;

use combweave::config::parse_config;
use combweave::export::{parse_report, report_json};
use combweave::mtx::{parse_splitter, read_matrix_market, Field};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn config_seeds() {
    let mut accepted = 0;
    for (name, text) in seeds("fuzz_parse_config") {
        if let Ok(cfg) = parse_config(&text) {
            let echo = serde_json::to_string(&cfg).unwrap();
            assert_eq!(parse_config(&echo).unwrap(), cfg, "{name}");
            accepted += 1;
        }
    }
    assert!(accepted >= 4);
    assert!(parse_config(&seeds("fuzz_parse_config").into_iter().find(|s| s.0 == "even_pump.toml").unwrap().1).is_err());
}

#[test]
fn matrix_market_seeds() {
    for (name, text) in seeds("fuzz_matrix_market") {
        let m = read_matrix_market(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        if m.field == Field::Complex {
            assert_eq!(m.real_part().nrows(), m.nrows);
            let _ = m.imag_part();
        } else {
            m.to_csr().unwrap();
            m.to_dense().unwrap();
        }
    }
}

#[test]
fn splitter_seeds() {
    for (name, text) in seeds("fuzz_splitter_file") {
        let res = parse_splitter(&text);
        assert_eq!(res.is_ok(), !name.contains("unbalanced"), "{name}");
    }
}

#[test]
fn report_seeds() {
    for (name, text) in seeds("fuzz_report_json") {
        match parse_report(&text) {
            Ok(report) => {
                assert_eq!(report_json(&report), text, "{name}");
                assert_eq!(parse_report(&report_json(&report)).unwrap(), report);
            }
            Err(_) => assert!(name.contains("truncated"), "{name}"),
        }
    }
}
