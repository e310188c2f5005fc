#![no_main]
use combweave::config::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_config(text) {
            // accepted configs echo back to themselves
            let echo = serde_json::to_string(&cfg).unwrap();
            assert_eq!(parse_config(&echo).unwrap(), cfg);
        }
    }
});
