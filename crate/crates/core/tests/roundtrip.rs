use proptest::collection::vec;
use proptest::prelude::*;
use vqc_core::dataio::{
    compute_stats, dataset_to_csv, gen_synthetic_tabular, parse_csv, read_params, read_slice, read_spectrum,
    read_trace, slice_from_csv, slice_from_json, slice_to_csv, slice_to_json, spectrum_from_csv,
    spectrum_from_json, spectrum_to_csv, spectrum_to_json, trace_from_csv, trace_from_json, trace_to_csv,
    trace_to_json, write_params, write_slice, write_spectrum, write_trace, ArtifactFormat, LabelColumn,
    SpectrumRecord,
};
use vqc_core::spectra::LandscapeSlice;
use vqc_core::trainer::{IterRecord, Outcome, TraceEvent, TrainingTrace, Verdict};

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        -10.0..10.0f64,
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
        Just(f64::MAX),
    ]
}

fn record_strategy() -> impl Strategy<Value = IterRecord> {
    (finite(), finite(), 0usize..5, vec(finite(), 0..6))
        .prop_map(|(cost, lr, restarts, params)| IterRecord {
            iter: 0,
            cost,
            lr,
            restarts,
            params,
            spectrum: None,
        })
}

fn records_strategy() -> impl Strategy<Value = Vec<IterRecord>> {
    vec(record_strategy(), 0..8).prop_map(|mut rs| {
        for (k, r) in rs.iter_mut().enumerate() {
            r.iter = k;
        }
        rs
    })
}

fn spectra_strategy() -> impl Strategy<Value = Vec<SpectrumRecord>> {
    vec(vec(finite(), 1..7), 0..5).prop_map(|lists| {
        lists
            .into_iter()
            .enumerate()
            .map(|(k, eigenvalues)| SpectrumRecord {
                iter: 3 * k,
                eigenvalues,
            })
            .collect()
    })
}

fn slice_strategy() -> impl Strategy<Value = LandscapeSlice> {
    (1usize..6, finite(), finite(), vec(finite(), 0..4)).prop_flat_map(|(g, lo, hi, frozen)| {
        vec(vec(finite(), g), g).prop_map(move |grid| LandscapeSlice {
            axis_i: 1,
            axis_j: 4,
            range_lo: lo,
            range_hi: hi,
            resolution: g,
            grid,
            frozen_params: frozen.clone(),
        })
    })
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn trace_csv_roundtrip(records in records_strategy()) {
        let back = trace_from_csv(&trace_to_csv(&records)).unwrap();
        prop_assert_eq!(back.len(), records.len());
        for (a, b) in records.iter().zip(&back) {
            prop_assert_eq!(a.iter, b.iter);
            prop_assert_eq!(a.restarts, b.restarts);
            prop_assert!(same_bits(&[a.cost, a.lr], &[b.cost, b.lr]));
            prop_assert!(same_bits(&a.params, &b.params));
        }
    }

    #[test]
    fn trace_json_roundtrip(records in records_strategy(), spectrum in vec(finite(), 1..4)) {
        let mut records = records;
        if let Some(r) = records.first_mut() {
            r.spectrum = Some(spectrum);
        }
        let trace = TrainingTrace {
            records,
            events: vec![
                TraceEvent::LrDecrease { iter: 2, from: 0.5, to: 0.25 },
                TraceEvent::Hessian { iter: 4, verdict: Verdict::Restart, n_negative: 3 },
            ],
            outcome: Outcome::Stuck,
        };
        let back = trace_from_json(&trace_to_json(&trace).unwrap()).unwrap();
        prop_assert_eq!(back, trace);
    }

    #[test]
    fn spectrum_roundtrip_both_formats(spectra in spectra_strategy()) {
        prop_assert_eq!(&spectrum_from_csv(&spectrum_to_csv(&spectra)).unwrap(), &spectra);
        prop_assert_eq!(&spectrum_from_json(&spectrum_to_json(&spectra).unwrap()).unwrap(), &spectra);
    }

    #[test]
    fn slice_roundtrip_both_formats(slice in slice_strategy()) {
        prop_assert_eq!(&slice_from_json(&slice_to_json(&slice).unwrap()).unwrap(), &slice);
        let from_csv = slice_from_csv(&slice_to_csv(&slice)).unwrap();
        prop_assert_eq!(from_csv, LandscapeSlice { frozen_params: Vec::new(), ..slice });
    }

    #[test]
    fn dataset_csv_roundtrip(rows in vec((vec(-1e6..1e6f64, 3), 0u8..2), 1..20)) {
        let text = {
            let mut t = String::from("a,b,c,label\n");
            for (x, y) in &rows {
                t.push_str(&format!("{},{},{},{}\n", x[0], x[1], x[2], y));
            }
            t
        };
        let ds = parse_csv(text.as_bytes(), &LabelColumn::Name("label".into()), true, "mem").unwrap();
        let again = parse_csv(dataset_to_csv(&ds).as_bytes(), &LabelColumn::Index(3), true, "mem").unwrap();
        prop_assert_eq!(&again.features, &ds.features);
        prop_assert_eq!(&again.labels, &ds.labels);
        prop_assert_eq!(compute_stats(&again.features), ds.stats.clone());
    }
}

#[test]
fn slice_cells_use_seventeen_significant_digits() {
    let slice = LandscapeSlice {
        axis_i: 0,
        axis_j: 1,
        range_lo: -1.0,
        range_hi: 1.0,
        resolution: 2,
        grid: vec![vec![0.1, 1.0 / 3.0], vec![2.0, -7.25]],
        frozen_params: vec![],
    };
    let text = slice_to_csv(&slice);
    let cell = text.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    assert_eq!(cell, "3.3333333333333331e-1");
}

#[test]
fn trace_csv_has_header_and_one_row_per_iteration() {
    let records: Vec<IterRecord> = (0..3)
        .map(|k| IterRecord {
            iter: k,
            cost: 0.5,
            lr: 0.1,
            restarts: 0,
            params: vec![1.0, 2.0],
            spectrum: None,
        })
        .collect();
    let text = trace_to_csv(&records);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "iter,cost,lr,restarts,params_json");
}

#[test]
fn file_roundtrips_for_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let trace = TrainingTrace {
        records: vec![IterRecord {
            iter: 0,
            cost: 0.25,
            lr: 0.5,
            restarts: 0,
            params: vec![0.1, 0.2],
            spectrum: Some(vec![-0.5, 1.5]),
        }],
        events: vec![],
        outcome: Outcome::IterationLimit,
    };
    let spectra = vec![SpectrumRecord {
        iter: 0,
        eigenvalues: vec![-0.5, 1.5],
    }];
    let slice = LandscapeSlice {
        axis_i: 3,
        axis_j: 7,
        range_lo: -std::f64::consts::PI,
        range_hi: std::f64::consts::PI,
        resolution: 2,
        grid: vec![vec![0.1, 0.2], vec![0.3, 0.4]],
        frozen_params: vec![],
    };
    for fmt in [ArtifactFormat::Csv, ArtifactFormat::Json] {
        let ext = if fmt == ArtifactFormat::Csv { "csv" } else { "json" };
        let p = dir.path().join(format!("trace.{ext}"));
        write_trace(&trace, &p, fmt).unwrap();
        let back = read_trace(&p, fmt).unwrap();
        assert_eq!(back.records[0].params, trace.records[0].params);
        let p = dir.path().join(format!("spectrum.{ext}"));
        write_spectrum(&spectra, &p, fmt).unwrap();
        assert_eq!(read_spectrum(&p, fmt).unwrap(), spectra);
        let p = dir.path().join(format!("slice.{ext}"));
        write_slice(&slice, &p, fmt).unwrap();
        assert_eq!(read_slice(&p, fmt).unwrap(), slice);
    }
    let p = dir.path().join("params.json");
    write_params(&[1.5, -2.25], &p).unwrap();
    assert_eq!(read_params(&p).unwrap(), vec![1.5, -2.25]);
    let leftovers: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn malformed_artifacts_are_rejected() {
    assert!(trace_from_csv("iter,cost\n0,1\n").is_err());
    assert!(trace_from_csv("iter,cost,lr,restarts,params_json\n0,x,0.1,0,\"[]\"\n").is_err());
    assert!(spectrum_from_csv("iter,rank,eigenvalue\n0,1,0.5\n").is_err());
    assert!(slice_from_csv("#axes,0,1,-1,1,2\n0.1,0.2\n").is_err());
    assert!(slice_from_json(r#"{"i":0,"j":1,"range_lo":0,"range_hi":1,"G":2,"grid":[[1]]}"#).is_err());
}

#[test]
fn synthetic_generator_is_deterministic_and_noisy_at_ten_percent() {
    let a = gen_synthetic_tabular(200, 7).unwrap();
    assert_eq!(a.features, gen_synthetic_tabular(200, 7).unwrap().features);
    assert_eq!((a.len(), a.n_features()), (200, 8));
    let big = gen_synthetic_tabular(10_000, 1).unwrap();
    let flipped = big
        .features
        .iter()
        .zip(&big.labels)
        .filter(|(row, &y)| vqc_core::dataio::synthetic_rule(row) != y)
        .count();
    let rate = flipped as f64 / 10_000.0;
    assert!((rate - 0.10).abs() <= 0.01, "noise rate {rate}");
}
