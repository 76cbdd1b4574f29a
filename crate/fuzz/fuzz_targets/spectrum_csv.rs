#![no_main]

use libfuzzer_sys::fuzz_target;
use vqc_core::dataio::{spectrum_from_csv, spectrum_to_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(spectra) = spectrum_from_csv(text) else { return };
    // Compared as text so NaN cells do not count as mismatches.
    let out = spectrum_to_csv(&spectra);
    assert_eq!(spectrum_to_csv(&spectrum_from_csv(&out).expect("written spectrum must parse")), out);
});
