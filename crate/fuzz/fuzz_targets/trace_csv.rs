#![no_main]

use libfuzzer_sys::fuzz_target;
use vqc_core::dataio::{trace_from_csv, trace_to_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(records) = trace_from_csv(text) else { return };
    let out = trace_to_csv(&records);
    assert_eq!(trace_to_csv(&trace_from_csv(&out).expect("written trace must parse")), out);
});
