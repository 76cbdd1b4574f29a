#![no_main]

use libfuzzer_sys::fuzz_target;
use vqc_core::dataio::{slice_from_csv, slice_to_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(slice) = slice_from_csv(text) else { return };
    assert_eq!(slice.grid.len(), slice.resolution);
    let out = slice_to_csv(&slice);
    assert_eq!(slice_to_csv(&slice_from_csv(&out).expect("written slice must parse")), out);
});
