use vqc_core::ansatz::{Classifier, ModelSpec};
use vqc_core::dataio::gen_parity_dataset;
use vqc_core::diff::{GradientVector, HessianMatrix};
use vqc_core::objective::{ClassifierObjective, Objective};
use vqc_core::trainer::{
    gd_step, init_params, train_ahlr, train_gd, AhlrConfig, GdConfig, Outcome, TraceEvent, Verdict,
};
use vqc_core::Result;

/// `x⁴/20 − x²/10`: a flat, negatively curved hump at the origin (cost 0)
/// between two wells at `x = ±1` (cost −0.05, curvature 0.4).
///
/// Near the origin a GD step multiplies `x` by `1 + η/5`, so at η = 0.5 the
/// cost moves by less than 1e-4 per step while `|x| < 0.07`: small-|x|
/// starts register as a plateau at every rate, and the Hessian there is
/// −0.2. Each schedule cycle pushes `x` further out, and once `|x|` is past
/// the plateau band the restarted η = 0.5 run no longer stalls and descends.
/// Curvature 0.4 at the wells keeps every rate in the set stable there.
struct Hump;

impl Hump {
    const FLOOR: f64 = 0.0;
}

impl Objective for Hump {
    fn n_params(&self) -> usize {
        1
    }
    fn cost(&self, p: &[f64]) -> Result<f64> {
        let x = p[0];
        Ok(x.powi(4) / 20.0 - x * x / 10.0)
    }
    fn gradient(&self, p: &[f64]) -> Result<GradientVector> {
        let x = p[0];
        Ok(GradientVector(vec![x.powi(3) / 5.0 - x / 5.0]))
    }
    fn hessian(&self, p: &[f64]) -> Result<HessianMatrix> {
        let x = p[0];
        HessianMatrix::from_rows(&[vec![0.6 * x * x - 0.2]])
    }
}

fn hump_config() -> AhlrConfig {
    AhlrConfig {
        // One dimension has a single eigenvalue; a negative one must trigger a restart.
        neg_eig_threshold: 1,
        max_iters: 300,
        ..AhlrConfig::default()
    }
}

#[test]
fn ahlr_restarts_out_of_the_hump_into_a_well() {
    let trace = train_ahlr(&Hump, vec![0.02], &hump_config()).unwrap();
    assert!(trace.restart_events() >= 1, "events: {:?}", trace.events);
    assert!(trace.final_cost().unwrap() < Hump::FLOOR - 0.04);
    assert_eq!(trace.outcome, Outcome::Converged);
    let restart_iter = trace
        .events
        .iter()
        .find_map(|e| match e {
            TraceEvent::Hessian {
                iter,
                verdict: Verdict::Restart,
                n_negative,
            } => {
                assert_eq!(*n_negative, 1);
                Some(*iter)
            }
            _ => None,
        })
        .unwrap();
    // The rate returns to the top of the set right after the restart.
    assert_eq!(trace.records[restart_iter].lr, 0.5);
    assert_eq!(trace.records[restart_iter].restarts, 1);
    assert!(trace.records[..restart_iter].iter().any(|r| r.lr == 0.01));
}

#[test]
fn fixed_small_rate_stays_on_the_hump() {
    let cfg = GdConfig {
        learning_rate: 0.01,
        max_iters: 300,
        ..GdConfig::default()
    };
    let trace = train_gd(&Hump, vec![0.02], &cfg).unwrap();
    assert!(trace.final_cost().unwrap() > Hump::FLOOR - 1e-3);
}

#[test]
fn ahlr_gives_up_after_max_restarts() {
    // Exactly on the hump the gradient vanishes, so no rate can move the point.
    let cfg = AhlrConfig {
        max_restarts: 2,
        ..hump_config()
    };
    let trace = train_ahlr(&Hump, vec![0.0], &cfg).unwrap();
    assert_eq!(trace.outcome, Outcome::Stuck);
    assert_eq!(trace.restarts(), 2);
    assert_eq!(trace.restart_events(), 2);
}

#[test]
fn ahlr_rejects_bad_configs() {
    let bad = [
        AhlrConfig { lr_set: vec![], ..AhlrConfig::default() },
        AhlrConfig { lr_set: vec![0.1, 0.5], ..AhlrConfig::default() },
        AhlrConfig { patience: 0, ..AhlrConfig::default() },
        AhlrConfig { plateau_tol: 0.0, ..AhlrConfig::default() },
    ];
    for cfg in bad {
        assert!(train_ahlr(&Hump, vec![0.5], &cfg).is_err());
    }
}

#[test]
fn gd_step_arithmetic() {
    assert_eq!(gd_step(&[1.0], &GradientVector(vec![2.0]), 0.1).unwrap(), vec![0.8]);
    assert_eq!(gd_step(&[1.0, 2.0], &GradientVector(vec![0.0, 0.0]), 0.5).unwrap(), vec![1.0, 2.0]);
    assert!(gd_step(&[1.0], &GradientVector(vec![1.0, 1.0]), 0.5).is_err());
}

#[test]
fn gd_records_cost_before_each_update() {
    let cfg = GdConfig {
        learning_rate: 0.5,
        max_iters: 5,
        ..GdConfig::default()
    };
    let trace = train_gd(&Hump, vec![1.5], &cfg).unwrap();
    assert_eq!(trace.records.len(), 5);
    for w in trace.records.windows(2) {
        let g = Hump.gradient(&w[0].params).unwrap();
        assert_eq!(w[1].params, gd_step(&w[0].params, &g, 0.5).unwrap());
        assert_eq!(w[0].cost, Hump.cost(&w[0].params).unwrap());
    }
    let one = train_gd(&Hump, vec![1.5], &GdConfig { max_iters: 1, ..cfg }).unwrap();
    assert_eq!(one.records.len(), 1);
}

fn parity_objective() -> (Classifier, ClassifierObjective) {
    let spec = ModelSpec::parity4();
    let clf = Classifier::new(spec.clone());
    let samples = gen_parity_dataset().encode(&spec).unwrap();
    let obj = ClassifierObjective::new(&clf, &samples).unwrap();
    (clf, obj)
}

#[test]
fn parity_spectrum_logging_cadence() {
    let (_, obj) = parity_objective();
    let cfg = GdConfig {
        max_iters: 7,
        log_spectrum_every: 3,
        seed: 1,
        ..GdConfig::default()
    };
    let trace = train_gd(&obj, init_params(&ModelSpec::parity4(), 1), &cfg).unwrap();
    let logged: Vec<usize> = trace.spectra().into_iter().map(|(i, _)| i).collect();
    assert_eq!(logged, vec![0, 3, 6]);
    for (_, s) in trace.spectra() {
        assert_eq!(s.len(), 36);
        assert!(s.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn parity_training_is_deterministic() {
    let (_, obj) = parity_objective();
    let cfg = GdConfig {
        max_iters: 4,
        seed: 3,
        ..GdConfig::default()
    };
    let start = init_params(&ModelSpec::parity4(), 3);
    let a = train_gd(&obj, start.clone(), &cfg).unwrap();
    let b = train_gd(&obj, start, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn wrong_start_length_is_rejected() {
    let (_, obj) = parity_objective();
    assert!(train_gd(&obj, vec![0.0; 35], &GdConfig::default()).is_err());
    assert!(train_ahlr(&obj, vec![0.0; 37], &AhlrConfig::default()).is_err());
}

#[test]
fn ahlr_lr_column_only_takes_values_from_the_set() {
    let (_, obj) = parity_objective();
    let cfg = AhlrConfig {
        max_iters: 40,
        plateau_tol: 1e-2,
        ..AhlrConfig::default()
    };
    let trace = train_ahlr(&obj, init_params(&ModelSpec::parity4(), 1), &cfg).unwrap();
    assert!(trace.records.iter().all(|r| cfg.lr_set.contains(&r.lr)));
    assert_eq!(trace.records[0].lr, 0.5);
    assert!(trace.lr_decreases() >= 1);
}
