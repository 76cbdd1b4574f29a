//! Full-batch gradient descent and the adaptive Hessian learning-rate schedule.
//!
//! Both loops record the iterate *before* it is updated: record `t` holds
//! `θ_t`, `C(θ_t)` and the learning rate that carries `θ_t` to `θ_{t+1}`. A
//! run of `max_iters` iterations therefore holds `max_iters` records and
//! applies `max_iters - 1` updates; the last record is the returned point.
//!
//! The adaptive schedule walks a strictly decreasing set of learning rates.
//! `patience` consecutive cost changes below `plateau_tol` advance to the
//! next rate. A plateau at the smallest rate triggers a Hessian check: fewer
//! than `neg_eig_threshold` eigenvalues below `-neg_eig_cut` ends the run as
//! converged, otherwise the schedule restarts from the largest rate so the
//! iterate can overshoot out of the basin, up to `max_restarts` times.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::ModelSpec;
use crate::diff::GradientVector;
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::spectra::{self, Spectrum};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub learning_rate: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub init_range: (f64, f64),
    /// Hessian spectrum cadence; 0 disables logging.
    pub log_spectrum_every: usize,
}

impl Default for GdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            max_iters: 100,
            seed: 0,
            init_range: (0.0, 2.0 * PI),
            log_spectrum_every: 0,
        }
    }
}

impl GdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        check_range(self.init_range)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AhlrConfig {
    pub lr_set: Vec<f64>,
    pub patience: usize,
    pub plateau_tol: f64,
    pub neg_eig_threshold: usize,
    pub neg_eig_cut: f64,
    pub max_restarts: usize,
    pub max_iters: usize,
    /// Extra spectrum logging cadence on top of verdict points; 0 = verdicts only.
    pub log_spectrum_every: usize,
}

impl Default for AhlrConfig {
    fn default() -> Self {
        Self {
            lr_set: vec![0.5, 0.25, 0.1, 0.05, 0.01],
            patience: 5,
            plateau_tol: 1e-4,
            neg_eig_threshold: 2,
            neg_eig_cut: 1e-6,
            max_restarts: 3,
            max_iters: 100,
            log_spectrum_every: 0,
        }
    }
}

impl AhlrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lr_set.is_empty() {
            return Err(Error::InvalidArgument("learning-rate set is empty".into()));
        }
        if self.lr_set.iter().any(|&lr| !(lr > 0.0 && lr.is_finite())) {
            return Err(Error::InvalidArgument("learning rates must be positive".into()));
        }
        if self.lr_set.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument(
                "learning-rate set must be strictly decreasing".into(),
            ));
        }
        if self.patience == 0 {
            return Err(Error::InvalidArgument("patience must be >= 1".into()));
        }
        if !(self.plateau_tol > 0.0) || !(self.neg_eig_cut > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be > 0".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

fn check_range((lo, hi): (f64, f64)) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument(format!("invalid init range [{lo}, {hi})")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub cost: f64,
    pub lr: f64,
    pub restarts: usize,
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converged,
    Restart,
    Stuck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    LrDecrease { iter: usize, from: f64, to: f64 },
    Hessian { iter: usize, verdict: Verdict, n_negative: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    IterationLimit,
    Converged,
    Stuck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub records: Vec<IterRecord>,
    #[serde(default)]
    pub events: Vec<TraceEvent>,
    pub outcome: Outcome,
}

impl TrainingTrace {
    pub fn last(&self) -> Option<&IterRecord> {
        self.records.last()
    }

    pub fn final_params(&self) -> Option<&[f64]> {
        self.last().map(|r| r.params.as_slice())
    }

    pub fn final_cost(&self) -> Option<f64> {
        self.last().map(|r| r.cost)
    }

    pub fn restarts(&self) -> usize {
        self.last().map_or(0, |r| r.restarts)
    }

    pub fn lr_decreases(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, TraceEvent::LrDecrease { .. }))
            .count()
    }

    pub fn restart_events(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, TraceEvent::Hessian { verdict: Verdict::Restart, .. }))
            .count()
    }

    /// `(iter, eigenvalues)` for every record that carries a spectrum.
    pub fn spectra(&self) -> Vec<(usize, Vec<f64>)> {
        self.records
            .iter()
            .filter_map(|r| r.spectrum.clone().map(|s| (r.iter, s)))
            .collect()
    }
}

/// Uniform draws from `[0, 2π)` for every slot of the model.
pub fn init_params(spec: &ModelSpec, seed: u64) -> Vec<f64> {
    init_params_in(spec.n_params, seed, (0.0, 2.0 * PI))
}

pub fn init_params_in(n: usize, seed: u64, (lo, hi): (f64, f64)) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// `θ - η g`, no angle wrapping.
pub fn gd_step(params: &[f64], grad: &GradientVector, lr: f64) -> Result<Vec<f64>> {
    if params.len() != grad.len() {
        return Err(Error::Dimension {
            expected: params.len(),
            got: grad.len(),
        });
    }
    Ok(params.iter().zip(grad.iter()).map(|(t, g)| t - lr * g).collect())
}

fn checked_cost<O: Objective + ?Sized>(objective: &O, params: &[f64], iter: usize) -> Result<f64> {
    let cost = objective.cost(params)?;
    if !cost.is_finite() {
        return Err(Error::Numerical(format!("cost became {cost} at iteration {iter}")));
    }
    Ok(cost)
}

fn checked_gradient<O: Objective + ?Sized>(objective: &O, params: &[f64], iter: usize) -> Result<GradientVector> {
    let g = objective.gradient(params)?;
    if !g.is_finite() {
        return Err(Error::Numerical(format!("gradient became non-finite at iteration {iter}")));
    }
    Ok(g)
}

fn spectrum_at<O: Objective + ?Sized>(objective: &O, params: &[f64]) -> Result<Spectrum> {
    let h = objective.hessian(params)?;
    spectra::eig_symmetric(&h).map_err(|e| match e {
        Error::NoConvergence { .. } | Error::Numerical(_) => e,
        other => Error::Numerical(other.to_string()),
    })
}

fn check_start<O: Objective + ?Sized>(objective: &O, start: &[f64]) -> Result<()> {
    if start.len() != objective.n_params() {
        return Err(Error::Dimension {
            expected: objective.n_params(),
            got: start.len(),
        });
    }
    Ok(())
}

pub fn train_gd<O: Objective + ?Sized>(objective: &O, start: Vec<f64>, config: &GdConfig) -> Result<TrainingTrace> {
    config.validate()?;
    check_start(objective, &start)?;
    let mut theta = start;
    let mut records = Vec::with_capacity(config.max_iters);
    for t in 0..config.max_iters {
        let last = t + 1 == config.max_iters;
        let cost = checked_cost(objective, &theta, t)?;
        let k = config.log_spectrum_every;
        let spectrum = if k > 0 && (t % k == 0 || last) {
            Some(spectrum_at(objective, &theta)?.eigenvalues)
        } else {
            None
        };
        records.push(IterRecord {
            iter: t,
            cost,
            lr: config.learning_rate,
            restarts: 0,
            params: theta.clone(),
            spectrum,
        });
        if !last {
            let g = checked_gradient(objective, &theta, t)?;
            theta = gd_step(&theta, &g, config.learning_rate)?;
        }
    }
    Ok(TrainingTrace {
        records,
        events: Vec::new(),
        outcome: Outcome::IterationLimit,
    })
}

pub fn train_ahlr<O: Objective + ?Sized>(objective: &O, start: Vec<f64>, config: &AhlrConfig) -> Result<TrainingTrace> {
    config.validate()?;
    check_start(objective, &start)?;
    let lrs = &config.lr_set;
    let mut theta = start;
    let mut level = 0usize;
    let mut plateau = 0usize;
    let mut restarts = 0usize;
    let mut prev_cost: Option<f64> = None;
    let mut records = Vec::new();
    let mut events = Vec::new();
    let mut outcome = Outcome::IterationLimit;

    for t in 0..config.max_iters {
        let cost = checked_cost(objective, &theta, t)?;
        if let Some(prev) = prev_cost {
            if (cost - prev).abs() < config.plateau_tol {
                plateau += 1;
            } else {
                plateau = 0;
            }
        }

        let mut spectrum = None;
        let mut stop = None;
        if plateau >= config.patience {
            plateau = 0;
            if level + 1 < lrs.len() {
                events.push(TraceEvent::LrDecrease {
                    iter: t,
                    from: lrs[level],
                    to: lrs[level + 1],
                });
                level += 1;
            } else {
                let s = spectrum_at(objective, &theta)?;
                let n_negative = s.count_below(config.neg_eig_cut);
                let verdict = if n_negative < config.neg_eig_threshold {
                    stop = Some(Outcome::Converged);
                    Verdict::Converged
                } else if restarts < config.max_restarts {
                    restarts += 1;
                    level = 0;
                    Verdict::Restart
                } else {
                    stop = Some(Outcome::Stuck);
                    Verdict::Stuck
                };
                events.push(TraceEvent::Hessian {
                    iter: t,
                    verdict,
                    n_negative,
                });
                spectrum = Some(s.eigenvalues);
            }
        }
        let k = config.log_spectrum_every;
        if spectrum.is_none() && k > 0 && t % k == 0 {
            spectrum = Some(spectrum_at(objective, &theta)?.eigenvalues);
        }

        records.push(IterRecord {
            iter: t,
            cost,
            lr: lrs[level],
            restarts,
            params: theta.clone(),
            spectrum,
        });
        if let Some(o) = stop {
            outcome = o;
            break;
        }
        prev_cost = Some(cost);
        if t + 1 < config.max_iters {
            let g = checked_gradient(objective, &theta, t)?;
            theta = gd_step(&theta, &g, lrs[level])?;
        }
    }

    Ok(TrainingTrace {
        records,
        events,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::HessianMatrix;

    /// `Σ (θ_k - c_k)²`.
    struct Bowl(Vec<f64>);

    impl Objective for Bowl {
        fn n_params(&self) -> usize {
            self.0.len()
        }
        fn cost(&self, p: &[f64]) -> Result<f64> {
            Ok(p.iter().zip(&self.0).map(|(a, c)| (a - c) * (a - c)).sum())
        }
        fn gradient(&self, p: &[f64]) -> Result<GradientVector> {
            Ok(GradientVector(p.iter().zip(&self.0).map(|(a, c)| 2.0 * (a - c)).collect()))
        }
        fn hessian(&self, p: &[f64]) -> Result<HessianMatrix> {
            let mut h = HessianMatrix::zeros(p.len());
            for i in 0..p.len() {
                h.set(i, i, 2.0);
            }
            Ok(h)
        }
    }

    #[test]
    fn init_is_seeded_and_in_range() {
        let spec = ModelSpec::parity4();
        let a = init_params(&spec, 42);
        assert_eq!(a, init_params(&spec, 42));
        assert_ne!(a, init_params(&spec, 43));
        assert_eq!(a.len(), 36);
        assert!(a.iter().all(|&v| (0.0..2.0 * PI).contains(&v)));
    }

    #[test]
    fn gd_step_examples() {
        let g0 = GradientVector(vec![0.0, 0.0]);
        assert_eq!(gd_step(&[1.0, 2.0], &g0, 0.3).unwrap(), vec![1.0, 2.0]);
        assert_eq!(gd_step(&[1.0], &GradientVector(vec![2.0]), 0.1).unwrap(), vec![0.8]);
        assert_eq!(gd_step(&[1.0], &GradientVector(vec![2.0]), 0.0).unwrap(), vec![1.0]);
        assert!(gd_step(&[1.0], &g0, 0.1).is_err());
    }

    #[test]
    fn single_iteration_trace() {
        let cfg = GdConfig {
            max_iters: 1,
            ..GdConfig::default()
        };
        let tr = train_gd(&Bowl(vec![1.0]), vec![0.0], &cfg).unwrap();
        assert_eq!(tr.records.len(), 1);
        assert_eq!(tr.records[0].params, vec![0.0]);
    }

    #[test]
    fn gd_logs_spectrum_on_schedule() {
        let cfg = GdConfig {
            learning_rate: 0.1,
            max_iters: 7,
            log_spectrum_every: 3,
            ..GdConfig::default()
        };
        let tr = train_gd(&Bowl(vec![1.0, -1.0]), vec![0.0, 0.0], &cfg).unwrap();
        let logged: Vec<usize> = tr.spectra().iter().map(|(i, _)| *i).collect();
        assert_eq!(logged, vec![0, 3, 6]);
        assert!(tr.records.windows(2).all(|w| w[1].cost < w[0].cost));
    }

    #[test]
    fn config_validation() {
        let bad = GdConfig {
            learning_rate: 0.0,
            ..GdConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = AhlrConfig {
            lr_set: vec![0.1, 0.5],
            ..AhlrConfig::default()
        };
        assert!(bad.validate().is_err());
        let empty = AhlrConfig {
            lr_set: vec![],
            ..AhlrConfig::default()
        };
        assert!(matches!(
            train_ahlr(&Bowl(vec![0.0]), vec![0.0], &empty),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn ahlr_at_minimum_converges_after_one_cascade() {
        let cfg = AhlrConfig::default();
        let tr = train_ahlr(&Bowl(vec![0.5]), vec![0.5], &cfg).unwrap();
        assert_eq!(tr.outcome, Outcome::Converged);
        assert_eq!(tr.lr_decreases(), 4);
        // Four cascades of `patience` steps, then one more at the smallest rate.
        assert_eq!(tr.records.len(), 5 * cfg.patience + 1);
        assert_eq!(tr.restart_events(), 0);
        assert!(tr.last().unwrap().spectrum.is_some());
    }

    #[test]
    fn non_finite_cost_aborts() {
        struct Blowup;
        impl Objective for Blowup {
            fn n_params(&self) -> usize {
                1
            }
            fn cost(&self, p: &[f64]) -> Result<f64> {
                Ok(if p[0] > 1.0 { f64::NAN } else { p[0] })
            }
            fn gradient(&self, _: &[f64]) -> Result<GradientVector> {
                Ok(GradientVector(vec![-10.0]))
            }
            fn hessian(&self, _: &[f64]) -> Result<HessianMatrix> {
                Ok(HessianMatrix::zeros(1))
            }
        }
        let err = train_gd(&Blowup, vec![0.0], &GdConfig::default()).unwrap_err();
        assert!(err.is_numerical(), "{err}");
    }
}
