#![no_main]

use libfuzzer_sys::fuzz_target;
use vqc_core::dataio::{trace_from_json, trace_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(trace) = trace_from_json(text) else { return };
    if let Ok(out) = trace_to_json(&trace) {
        let again = trace_from_json(&out).expect("written trace must parse");
        assert_eq!(trace_to_json(&again).unwrap(), out);
    }
});
