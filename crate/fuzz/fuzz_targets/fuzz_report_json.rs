#![no_main]
use combweave::export::{parse_report, report_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(report) = parse_report(text) {
            let again = parse_report(&report_json(&report)).unwrap();
            assert_eq!(again, report);
        }
    }
});
