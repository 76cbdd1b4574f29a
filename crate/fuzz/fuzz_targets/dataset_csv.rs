#![no_main]

use libfuzzer_sys::fuzz_target;
use vqc_core::dataio::{dataset_to_csv, parse_csv, LabelColumn};

fuzz_target!(|data: &[u8]| {
    // First byte picks the label column and header mode.
    let Some((&sel, body)) = data.split_first() else { return };
    let header = sel & 0x80 != 0;
    let label = if sel & 0x40 != 0 {
        LabelColumn::Name("label".into())
    } else {
        LabelColumn::Index((sel & 0x0f) as usize)
    };
    let Ok(ds) = parse_csv(body, &label, header, "fuzz") else { return };
    let n = ds.n_features();
    let again = parse_csv(dataset_to_csv(&ds).as_bytes(), &LabelColumn::Index(n), true, "fuzz")
        .expect("normalised output must parse");
    assert_eq!(dataset_to_csv(&again), dataset_to_csv(&ds));
});
