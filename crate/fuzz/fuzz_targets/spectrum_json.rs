#![no_main]

use libfuzzer_sys::fuzz_target;
use vqc_core::dataio::spectrum_from_json;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = spectrum_from_json(text);
    }
});
