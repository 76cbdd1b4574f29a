#![no_main]

use libfuzzer_sys::fuzz_target;
use vqc_core::dataio::slice_from_json;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(slice) = slice_from_json(text) {
        assert!(slice.grid.iter().all(|row| row.len() == slice.resolution));
    }
});
