#![no_main]

use libfuzzer_sys::fuzz_target;
use vqc_core::dataio::{params_from_json, params_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(params) = params_from_json(text) else { return };
    let back = params_from_json(&params_to_json(&params).unwrap()).unwrap();
    assert!(back.iter().zip(&params).all(|(a, b)| a.to_bits() == b.to_bits()));
});
