//! The two classifier circuits, input encoding and decision rule.
//!
//! Parameter slots are numbered layer-major, then qubit, then `(φ, θ, ω)`,
//! so slot `3q + k` of layer `l` is `12l + 3q + k` for the parity model and
//! `24r + 3q + k` of repetition `r` for the tabular model.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::dataio::FeatureStats;
use crate::diff::{ExpectationFn, LabeledFn};
use crate::error::{Error, Result};
use crate::sim::{self, Angle, Circuit, Gate, Segment, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Parity4,
    Tabular8,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Parity4 => "parity4",
            ModelKind::Tabular8 => "tabular8",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parity4" => Ok(ModelKind::Parity4),
            "tabular8" => Ok(ModelKind::Tabular8),
            other => Err(Error::InvalidArgument(format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n_qubits: usize,
    /// Variational layers (parity) or feature-map/variational repetitions (tabular).
    pub n_layers: usize,
    pub n_params: usize,
    pub measure_qubit: usize,
    /// Decision threshold Δ on `⟨Z⟩`.
    pub threshold: f64,
}

impl ModelSpec {
    pub fn parity4() -> Self {
        Self {
            kind: ModelKind::Parity4,
            n_qubits: 4,
            n_layers: 3,
            n_params: 36,
            measure_qubit: 2,
            threshold: 0.0,
        }
    }

    pub fn tabular8() -> Self {
        Self {
            kind: ModelKind::Tabular8,
            n_qubits: 8,
            n_layers: 2,
            n_params: 48,
            measure_qubit: 0,
            threshold: 0.0,
        }
    }

    pub fn for_kind(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Parity4 => Self::parity4(),
            ModelKind::Tabular8 => Self::tabular8(),
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn build_circuit(&self) -> Circuit {
        match self.kind {
            ModelKind::Parity4 => build_parity_circuit(),
            ModelKind::Tabular8 => build_tabular_circuit(),
        }
    }
}

fn rot_slots(base: usize) -> [Angle; 3] {
    [Angle::Param(base), Angle::Param(base + 1), Angle::Param(base + 2)]
}

/// RX feature map followed by three layers of per-qubit `R(φ, θ, ω)` and a
/// four-CNOT ring whose stride grows with the layer: layer `l` (1-based)
/// applies `CNOT(q, (q + l) mod 4)` for `q = 0..4`.
pub fn build_parity_circuit() -> Circuit {
    const N: usize = 4;
    let mut c = Circuit::new(N, 36, N).expect("static circuit");
    for q in 0..N {
        c.push(Gate::rx(q, Angle::Input(q)).in_segment(Segment::FeatureMap))
            .expect("static circuit");
    }
    for layer in 0..3 {
        for q in 0..N {
            c.push(Gate::rot(q, rot_slots(12 * layer + 3 * q)))
                .expect("static circuit");
        }
        let stride = layer + 1;
        for q in 0..N {
            c.push(Gate::cnot(q, (q + stride) % N)).expect("static circuit");
        }
    }
    c
}

/// Two repetitions of [H, RY(x_q), CZ ring] feature map and a per-qubit
/// `R(φ₁, φ₂, φ₃)` layer.
pub fn build_tabular_circuit() -> Circuit {
    const N: usize = 8;
    let mut c = Circuit::new(N, 48, N).expect("static circuit");
    let fm = |g: Gate| g.in_segment(Segment::FeatureMap);
    for rep in 0..2 {
        for q in 0..N {
            c.push(fm(Gate::h(q))).expect("static circuit");
        }
        for q in 0..N {
            c.push(fm(Gate::ry(q, Angle::Input(q)))).expect("static circuit");
        }
        for q in 0..N {
            c.push(fm(Gate::cz(q, (q + 1) % N))).expect("static circuit");
        }
        for q in 0..N {
            c.push(Gate::rot(q, rot_slots(24 * rep + 3 * q)))
                .expect("static circuit");
        }
    }
    c
}

/// XOR of four bits.
pub fn parity_label(bits: &[u8]) -> Result<u8> {
    if bits.len() != 4 {
        return Err(Error::Dimension {
            expected: 4,
            got: bits.len(),
        });
    }
    bits.iter().try_fold(0u8, |acc, &b| match b {
        0 | 1 => Ok(acc ^ b),
        other => Err(Error::InvalidArgument(format!("bit value {other} is not 0 or 1"))),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodedSample {
    pub raw: Vec<f64>,
    pub angles: Vec<f64>,
    pub label: u8,
}

/// Maps raw features to feature-map angles in `[-π, π]`.
///
/// Parity inputs are bits encoded as `bit·π`. Tabular inputs go through a
/// min-max affine map onto `[-π, π]`; constant features map to 0 and values
/// outside the recorded range are clamped.
pub fn encode(model: &ModelSpec, raw: &[f64], stats: &[FeatureStats], label: u8) -> Result<EncodedSample> {
    if raw.len() != model.n_qubits {
        return Err(Error::Dimension {
            expected: model.n_qubits,
            got: raw.len(),
        });
    }
    if label > 1 {
        return Err(Error::Label(label as f64));
    }
    let angles = match model.kind {
        ModelKind::Parity4 => raw
            .iter()
            .map(|&b| {
                if b == 0.0 || b == 1.0 {
                    Ok(b * PI)
                } else {
                    Err(Error::InvalidArgument(format!(
                        "parity inputs must be bits, got {b}"
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?,
        ModelKind::Tabular8 => {
            if stats.len() != raw.len() {
                return Err(Error::Dimension {
                    expected: raw.len(),
                    got: stats.len(),
                });
            }
            raw.iter()
                .zip(stats)
                .map(|(&v, s)| {
                    if s.max == s.min {
                        0.0
                    } else {
                        (-PI + 2.0 * PI * (v - s.min) / (s.max - s.min)).clamp(-PI, PI)
                    }
                })
                .collect()
        }
    };
    Ok(EncodedSample {
        raw: raw.to_vec(),
        angles,
        label,
    })
}

/// Label 0 when `⟨Z⟩ ≤ Δ`, otherwise 1.
pub fn classify_expectation(expectation: f64, threshold: f64) -> u8 {
    if expectation <= threshold {
        0
    } else {
        1
    }
}

/// A model specification paired with its circuit template.
#[derive(Clone, Debug)]
pub struct Classifier {
    spec: ModelSpec,
    circuit: Circuit,
}

impl Classifier {
    pub fn new(spec: ModelSpec) -> Self {
        let circuit = spec.build_circuit();
        Self { spec, circuit }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    /// Binds one sample's angles and pre-simulates the parameter-free prefix.
    pub fn expectation_fn(&self, angles: &[f64]) -> Result<ExpectationFn> {
        let bound = self.circuit.bind_inputs(angles)?;
        let (prefix, rest) = bound.split_param_free_prefix();
        let zeros = vec![0.0; self.spec.n_params];
        let input = sim::run_circuit(&prefix, &zeros, &StateVector::zero(self.spec.n_qubits)?)?;
        ExpectationFn::new(rest, input, self.spec.measure_qubit)
    }

    pub fn labeled(&self, samples: &[EncodedSample]) -> Result<Vec<LabeledFn>> {
        samples
            .iter()
            .map(|s| {
                Ok(LabeledFn {
                    f: self.expectation_fn(&s.angles)?,
                    label: s.label,
                })
            })
            .collect()
    }

    pub fn expectation(&self, params: &[f64], sample: &EncodedSample) -> Result<f64> {
        self.expectation_fn(&sample.angles)?.value(params)
    }

    pub fn classify(&self, params: &[f64], sample: &EncodedSample) -> Result<u8> {
        Ok(classify_expectation(
            self.expectation(params, sample)?,
            self.spec.threshold,
        ))
    }

    /// Fraction of samples whose predicted label matches.
    pub fn accuracy(&self, params: &[f64], samples: &[EncodedSample]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut hits = 0usize;
        for s in samples {
            if self.classify(params, s)? == s.label {
                hits += 1;
            }
        }
        Ok(hits as f64 / samples.len() as f64)
    }
}

/// Population left outside `|0…0⟩` after applying the circuit to `target`:
/// `1 - |⟨0…0|V(θ)|ψ₀⟩|²`.
pub fn state_prep_cost(circuit: &Circuit, params: &[f64], target: &StateVector) -> Result<f64> {
    let out = sim::run_circuit(circuit, params, target)?;
    Ok((1.0 - out.probability(0)).clamp(0.0, 1.0))
}
