//! Parameter-shift derivatives of circuit expectations and of the squared loss.
//!
//! Every trainable gate in this crate is generated by a Pauli operator
//! (`e^{-iθP/2}` with `P² = 1`), so the expectation is a trigonometric
//! polynomial of degree one in each angle and the ±π/2 shift rule is exact.
//! Second derivatives apply the rule twice; the diagonal uses the collapsed
//! ±π form, which reuses the unshifted value.
//!
//! Squared loss is taken on the rescaled prediction `p = (1 + ⟨Z⟩) / 2`:
//!
//! ```text
//! c   = (y - p)²
//! ∂c  = -2 (y - p) ∂p
//! ∂²c = -2 (y - p) ∂²p + 2 ∂p ∂pᵀ
//! ```

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::Deref;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sim::{self, Angle, Circuit, Gate, Occurrence, Shift, StateVector};

pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// `θ ↦ ⟨Z_q⟩` after running `circuit` on a fixed input state.
#[derive(Debug)]
pub struct ExpectationFn {
    circuit: Circuit,
    input: StateVector,
    measure_qubit: usize,
    occurrences: Vec<Vec<Occurrence>>,
    evals: AtomicUsize,
}

impl Clone for ExpectationFn {
    fn clone(&self) -> Self {
        Self {
            circuit: self.circuit.clone(),
            input: self.input.clone(),
            measure_qubit: self.measure_qubit,
            occurrences: self.occurrences.clone(),
            evals: AtomicUsize::new(0),
        }
    }
}

impl ExpectationFn {
    pub fn new(circuit: Circuit, input: StateVector, measure_qubit: usize) -> Result<Self> {
        if input.n_qubits() != circuit.n_qubits() {
            return Err(Error::Dimension {
                expected: circuit.n_qubits(),
                got: input.n_qubits(),
            });
        }
        if measure_qubit >= circuit.n_qubits() {
            return Err(Error::QubitOutOfRange {
                index: measure_qubit,
                n_qubits: circuit.n_qubits(),
            });
        }
        if circuit.n_inputs() != 0 {
            return Err(Error::UnboundInput);
        }
        let occurrences = circuit.slot_occurrences();
        Ok(Self {
            circuit,
            input,
            measure_qubit,
            occurrences,
            evals: AtomicUsize::new(0),
        })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn input(&self) -> &StateVector {
        &self.input
    }

    pub fn measure_qubit(&self) -> usize {
        self.measure_qubit
    }

    pub fn n_params(&self) -> usize {
        self.circuit.n_params()
    }

    pub fn value(&self, params: &[f64]) -> Result<f64> {
        self.value_shifted(params, &[])
    }

    fn value_shifted(&self, params: &[f64], shifts: &[Shift]) -> Result<f64> {
        self.evals.fetch_add(1, Ordering::Relaxed);
        let out = sim::run_with_shifts(&self.circuit, params, &self.input, shifts)?;
        sim::expect_z(&out, self.measure_qubit)
    }

    /// Circuit runs issued since construction or the last reset.
    pub fn evaluations(&self) -> usize {
        self.evals.load(Ordering::Relaxed)
    }

    pub fn reset_evaluations(&self) {
        self.evals.store(0, Ordering::Relaxed);
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::Dimension {
                expected: self.n_params(),
                got: params.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientVector(pub Vec<f64>);

impl Deref for GradientVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl GradientVector {
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|g| g.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// Dense row-major square matrix of second derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl HessianMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "matrix is not square: row of length {} in {dim}x{dim}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim.max(1)).map(<[f64]>::to_vec).take(self.dim).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.dim {
            for j in 0..i {
                m = m.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `(H + Hᵀ) / 2`.
    pub fn symmetrized(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            for j in 0..i {
                let v = 0.5 * (self.get(i, j) + self.get(j, i));
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        out
    }
}

fn shift_at(occ: Occurrence, delta: f64) -> Shift {
    Shift {
        gate: occ.0,
        angle: occ.1,
        delta,
    }
}

/// `∂⟨Z⟩/∂θ_slot`, summing the shift rule over every occurrence of the slot.
pub fn shift_partial(f: &ExpectationFn, params: &[f64], slot: usize) -> Result<f64> {
    f.check_params(params)?;
    let occ = f.occurrences.get(slot).ok_or(Error::SlotOutOfRange {
        slot,
        n_params: f.n_params(),
    })?;
    let mut acc = 0.0;
    for &o in occ {
        let plus = f.value_shifted(params, &[shift_at(o, FRAC_PI_2)])?;
        let minus = f.value_shifted(params, &[shift_at(o, -FRAC_PI_2)])?;
        acc += 0.5 * (plus - minus);
    }
    Ok(acc)
}

/// Exact gradient from `2P` shifted circuit runs (one occurrence per slot).
pub fn shift_gradient(f: &ExpectationFn, params: &[f64]) -> Result<GradientVector> {
    f.check_params(params)?;
    let g = (0..f.n_params())
        .into_par_iter()
        .map(|slot| shift_partial(f, params, slot))
        .collect::<Result<Vec<_>>>()?;
    Ok(GradientVector(g))
}

fn cross_term(f: &ExpectationFn, params: &[f64], a: Occurrence, b: Occurrence) -> Result<f64> {
    let ev = |da: f64, db: f64| f.value_shifted(params, &[shift_at(a, da), shift_at(b, db)]);
    let pp = ev(FRAC_PI_2, FRAC_PI_2)?;
    let pm = ev(FRAC_PI_2, -FRAC_PI_2)?;
    let mp = ev(-FRAC_PI_2, FRAC_PI_2)?;
    let mm = ev(-FRAC_PI_2, -FRAC_PI_2)?;
    Ok(0.25 * (pp - pm - mp + mm))
}

fn diagonal_term(f: &ExpectationFn, params: &[f64], a: Occurrence, center: f64) -> Result<f64> {
    let plus = f.value_shifted(params, &[shift_at(a, PI)])?;
    let minus = f.value_shifted(params, &[shift_at(a, -PI)])?;
    Ok(0.25 * (plus - 2.0 * center + minus))
}

fn hessian_entry(f: &ExpectationFn, params: &[f64], i: usize, j: usize, center: f64) -> Result<f64> {
    let (oi, oj) = (&f.occurrences[i], &f.occurrences[j]);
    let mut acc = 0.0;
    if i == j {
        for (ka, &a) in oi.iter().enumerate() {
            acc += diagonal_term(f, params, a, center)?;
            for &b in &oi[ka + 1..] {
                acc += 2.0 * cross_term(f, params, a, b)?;
            }
        }
    } else {
        for &a in oi {
            for &b in oj {
                acc += cross_term(f, params, a, b)?;
            }
        }
    }
    Ok(acc)
}

/// Value and Hessian of the expectation; the value is the shared centre point
/// of the diagonal terms.
pub fn shift_hessian_with_value(f: &ExpectationFn, params: &[f64]) -> Result<(f64, HessianMatrix)> {
    f.check_params(params)?;
    let p = f.n_params();
    let center = f.value(params)?;
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| (i..p).map(move |j| (i, j))).collect();
    let vals = pairs
        .par_iter()
        .map(|&(i, j)| hessian_entry(f, params, i, j, center))
        .collect::<Result<Vec<_>>>()?;
    let mut h = HessianMatrix::zeros(p);
    for (&(i, j), v) in pairs.iter().zip(vals) {
        h.set(i, j, v);
        h.set(j, i, v);
    }
    Ok((center, h))
}

/// Hessian of the expectation: four runs per off-diagonal pair, two per
/// diagonal entry and one shared unshifted run.
pub fn shift_hessian(f: &ExpectationFn, params: &[f64]) -> Result<HessianMatrix> {
    shift_hessian_with_value(f, params).map(|(_, h)| h)
}

/// Rescales `⟨Z⟩ ∈ [-1, 1]` to a prediction in `[0, 1]`.
pub fn prediction(expectation: f64) -> f64 {
    0.5 * (1.0 + expectation)
}

fn check_label(label: u8) -> Result<f64> {
    match label {
        0 | 1 => Ok(label as f64),
        other => Err(Error::Label(other as f64)),
    }
}

pub fn loss_value(f: &ExpectationFn, params: &[f64], label: u8) -> Result<f64> {
    let y = check_label(label)?;
    f.check_params(params)?;
    let p = prediction(f.value(params)?);
    Ok((y - p) * (y - p))
}

/// One training example: the bound per-sample circuit and its binary label.
#[derive(Clone, Debug)]
pub struct LabeledFn {
    pub f: ExpectationFn,
    pub label: u8,
}

fn check_samples(samples: &[LabeledFn], params: &[f64]) -> Result<()> {
    let first = samples.first().ok_or(Error::EmptyDataset)?;
    for s in samples {
        check_label(s.label)?;
        if s.f.n_params() != first.f.n_params() {
            return Err(Error::Dimension {
                expected: first.f.n_params(),
                got: s.f.n_params(),
            });
        }
    }
    first.f.check_params(params)
}

/// Dataset mean of the squared loss.
pub fn mean_loss(samples: &[LabeledFn], params: &[f64]) -> Result<f64> {
    check_samples(samples, params)?;
    let losses = samples
        .par_iter()
        .map(|s| loss_value(&s.f, params, s.label))
        .collect::<Result<Vec<_>>>()?;
    Ok(losses.iter().sum::<f64>() / samples.len() as f64)
}

/// Gradient of the dataset-mean loss.
pub fn loss_gradient(samples: &[LabeledFn], params: &[f64]) -> Result<GradientVector> {
    check_samples(samples, params)?;
    let per_sample = samples
        .par_iter()
        .map(|s| -> Result<Vec<f64>> {
            let y = s.label as f64;
            let p = prediction(s.f.value(params)?);
            let dc = -2.0 * (y - p);
            let g = shift_gradient(&s.f, params)?;
            Ok(g.iter().map(|gi| dc * (0.5 * gi)).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut acc = vec![0.0; params.len()];
    for g in &per_sample {
        for (a, v) in acc.iter_mut().zip(g) {
            *a += v;
        }
    }
    let n = samples.len() as f64;
    Ok(GradientVector(acc.into_iter().map(|a| a / n).collect()))
}

/// Hessian of the dataset-mean loss, assembled per sample from the
/// expectation's gradient and Hessian.
pub fn loss_hessian(samples: &[LabeledFn], params: &[f64]) -> Result<HessianMatrix> {
    check_samples(samples, params)?;
    let dim = params.len();
    let per_sample = samples
        .par_iter()
        .map(|s| -> Result<HessianMatrix> {
            let y = s.label as f64;
            let (z, hf) = shift_hessian_with_value(&s.f, params)?;
            let g = shift_gradient(&s.f, params)?;
            let dc = -2.0 * (y - prediction(z));
            let mut h = HessianMatrix::zeros(dim);
            for i in 0..dim {
                for j in 0..dim {
                    let d2p = 0.5 * hf.get(i, j);
                    let dpi = 0.5 * g[i];
                    let dpj = 0.5 * g[j];
                    h.set(i, j, d2p * dc + dpi * dpj * 2.0);
                }
            }
            Ok(h)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut acc = HessianMatrix::zeros(dim);
    for h in &per_sample {
        for (a, v) in acc.data.iter_mut().zip(&h.data) {
            *a += v;
        }
    }
    let n = samples.len() as f64;
    acc.data.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be > 0, got {h}")));
    }
    Ok(())
}

/// Central-difference gradient; truncation error is O(h²).
pub fn fd_gradient<F>(f: F, params: &[f64], h: f64) -> Result<GradientVector>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    check_step(h)?;
    let mut x = params.to_vec();
    let mut g = Vec::with_capacity(params.len());
    for k in 0..params.len() {
        x[k] = params[k] + h;
        let plus = f(&x)?;
        x[k] = params[k] - h;
        let minus = f(&x)?;
        x[k] = params[k];
        g.push((plus - minus) / (2.0 * h));
    }
    Ok(GradientVector(g))
}

/// Central-difference Hessian; truncation error is O(h²), round-off O(ε/h²).
pub fn fd_hessian<F>(f: F, params: &[f64], h: f64) -> Result<HessianMatrix>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    check_step(h)?;
    let p = params.len();
    let mut x = params.to_vec();
    let mut out = HessianMatrix::zeros(p);
    let center = f(&x)?;
    for i in 0..p {
        x[i] = params[i] + h;
        let plus = f(&x)?;
        x[i] = params[i] - h;
        let minus = f(&x)?;
        x[i] = params[i];
        out.set(i, i, (plus - 2.0 * center + minus) / (h * h));
        for j in i + 1..p {
            let mut corner = |si: f64, sj: f64| {
                x[i] = params[i] + si * h;
                x[j] = params[j] + sj * h;
                let v = f(&x);
                x[i] = params[i];
                x[j] = params[j];
                v
            };
            let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?)
                / (4.0 * h * h);
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    Ok(out)
}

pub const MAX_SCAN_QUBITS: usize = 10;
pub const MIN_SCAN_SAMPLES: usize = 100;

/// Empirical statistics of `∂f/∂θ_1` for one qubit count.
#[derive(Clone, Debug, PartialEq)]
pub struct VarianceRow {
    pub n_qubits: usize,
    pub mean: f64,
    pub variance: f64,
}

/// Hardware-efficient ansatz: per layer an RY then an RZ on every qubit
/// followed by a CZ ladder. Slot 0 is the first RY on qubit 0.
pub fn random_ansatz(n_qubits: usize, layers: usize) -> Result<Circuit> {
    let n_params = 2 * n_qubits * layers;
    let mut c = Circuit::new(n_qubits, n_params, 0)?;
    let mut slot = 0;
    for _ in 0..layers {
        for q in 0..n_qubits {
            c.push(Gate::ry(q, Angle::Param(slot)))?;
            c.push(Gate::rz(q, Angle::Param(slot + 1)))?;
            slot += 2;
        }
        for q in 0..n_qubits.saturating_sub(1) {
            c.push(Gate::cz(q, q + 1))?;
        }
    }
    Ok(c)
}

/// Variance of the first gradient entry over uniformly random parameters,
/// measured on qubit 0, for each requested qubit count.
pub fn gradient_variance_scan(
    qubit_counts: &[usize],
    layers: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<VarianceRow>> {
    if samples < MIN_SCAN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "variance scan needs at least {MIN_SCAN_SAMPLES} samples, got {samples}"
        )));
    }
    if layers == 0 {
        return Err(Error::InvalidArgument("variance scan needs at least one layer".into()));
    }
    if let Some(&n) = qubit_counts.iter().find(|&&n| n == 0 || n > MAX_SCAN_QUBITS) {
        return Err(Error::InvalidArgument(format!(
            "variance scan supports 1..={MAX_SCAN_QUBITS} qubits, got {n}"
        )));
    }
    qubit_counts
        .iter()
        .map(|&n| {
            let f = ExpectationFn::new(random_ansatz(n, layers)?, StateVector::zero(n)?, 0)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 32));
            let draws: Vec<Vec<f64>> = (0..samples)
                .map(|_| (0..f.n_params()).map(|_| rng.random_range(0.0..2.0 * PI)).collect())
                .collect();
            let grads = draws
                .par_iter()
                .map(|theta| shift_partial(&f, theta, 0))
                .collect::<Result<Vec<_>>>()?;
            let m = grads.len() as f64;
            let mean = grads.iter().sum::<f64>() / m;
            let variance = grads.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (m - 1.0);
            Ok(VarianceRow {
                n_qubits: n,
                mean,
                variance,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ry_model() -> ExpectationFn {
        let mut c = Circuit::new(1, 1, 0).unwrap();
        c.push(Gate::ry(0, Angle::Param(0))).unwrap();
        ExpectationFn::new(c, StateVector::zero(1).unwrap(), 0).unwrap()
    }

    #[test]
    fn ry_gradient_closed_form() {
        let f = ry_model();
        assert_eq!(shift_gradient(&f, &[0.0]).unwrap().0, vec![0.0]);
        let g = shift_gradient(&f, &[0.7]).unwrap();
        assert!((g[0] + 0.7f64.sin()).abs() < 1e-14);
        assert_eq!(f.evaluations(), 4);
    }

    #[test]
    fn ry_hessian_closed_form() {
        let h = shift_hessian(&ry_model(), &[0.0]).unwrap();
        assert!((h.get(0, 0) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn loss_value_endpoints() {
        // RY(0) → ⟨Z⟩ = 1, RY(π) → ⟨Z⟩ = -1, RY(π/2) → 0.
        let f = ry_model();
        assert!(loss_value(&f, &[0.0], 1).unwrap().abs() < 1e-15);
        assert!((loss_value(&f, &[PI], 1).unwrap() - 1.0).abs() < 1e-15);
        assert!((loss_value(&f, &[FRAC_PI_2], 0).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(loss_value(&f, &[0.0], 2), Err(Error::Label(_))));
    }

    #[test]
    fn perfect_fit_has_zero_loss_gradient() {
        let samples = vec![LabeledFn { f: ry_model(), label: 1 }];
        let g = loss_gradient(&samples, &[0.0]).unwrap();
        assert_eq!(g.0, vec![0.0]);
        let h = loss_hessian(&samples, &[0.0]).unwrap();
        assert!(h.get(0, 0).abs() < 1e-15);
    }

    #[test]
    fn empty_dataset_rejected() {
        assert!(matches!(loss_gradient(&[], &[]), Err(Error::EmptyDataset)));
        assert!(matches!(loss_hessian(&[], &[]), Err(Error::EmptyDataset)));
    }

    #[test]
    fn fd_basics() {
        let f = ry_model();
        let g = fd_gradient(|p| f.value(p), &[0.7], DEFAULT_FD_STEP).unwrap();
        assert!((g[0] + 0.7f64.sin()).abs() < 1e-6);
        let quad = fd_gradient(|p: &[f64]| Ok(p[0] * p[0]), &[1.3], 1e-5).unwrap();
        assert!((quad[0] - 2.6).abs() < 1e-8);
        let empty = fd_gradient(|_: &[f64]| Ok(1.0), &[], 1e-5).unwrap();
        assert!(empty.is_empty());
        assert!(fd_gradient(|_: &[f64]| Ok(1.0), &[0.0], 0.0).is_err());
        assert!(fd_hessian(|_: &[f64]| Ok(1.0), &[0.0], -1.0).is_err());
    }

    #[test]
    fn shared_slot_uses_product_rule() {
        // RY(θ) RY(θ) on |0⟩ gives ⟨Z⟩ = cos 2θ.
        let mut c = Circuit::new(1, 1, 0).unwrap();
        c.push(Gate::ry(0, Angle::Param(0))).unwrap();
        c.push(Gate::ry(0, Angle::Param(0))).unwrap();
        let f = ExpectationFn::new(c, StateVector::zero(1).unwrap(), 0).unwrap();
        let t = 0.4;
        let g = shift_gradient(&f, &[t]).unwrap();
        assert!((g[0] + 2.0 * (2.0 * t).sin()).abs() < 1e-13);
        let h = shift_hessian(&f, &[t]).unwrap();
        assert!((h.get(0, 0) + 4.0 * (2.0 * t).cos()).abs() < 1e-13);
    }

    #[test]
    fn variance_scan_input_checks() {
        assert!(gradient_variance_scan(&[2], 1, 0, 1).is_err());
        assert!(gradient_variance_scan(&[11], 1, 100, 1).is_err());
        assert!(gradient_variance_scan(&[2], 0, 100, 1).is_err());
    }

    #[test]
    fn single_qubit_variance_is_one_half() {
        let rows = gradient_variance_scan(&[1], 1, 2000, 11).unwrap();
        assert!((rows[0].variance - 0.5).abs() < 0.1, "{rows:?}");
    }
}
