#![no_main]
use combweave::mtx::read_matrix_market;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = read_matrix_market(text) {
            let _ = m.to_csr();
            let _ = m.to_dense();
        }
    }
});
