//! Dense statevector simulation.
//!
//! Amplitude index `b` encodes a computational basis state with qubit 0 as
//! the most significant bit, so on three qubits index `0b100` is `|100⟩`
//! (qubit 0 set). Gates act in place on the amplitude buffer; the public
//! entry points return new states and leave their inputs untouched.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 12;

const NORM_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::Dimension {
                expected: dim,
                got: index,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps raw amplitudes. The vector must have power-of-two length and unit norm.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude count {dim} is not a power of two >= 2"
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_qubit_count(n_qubits)?;
        let state = Self { n_qubits, amps };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "state is not normalised (norm² = {norm})"
            )));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amps.get(index).map_or(0.0, |a| a.norm_sqr())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                got: other.n_qubits,
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }
}

fn check_qubit_count(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::QubitCount(n));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    H,
    /// Phase gate `diag(1, e^{iλ})`.
    U1,
    /// `R(φ, θ, ω) = RZ(ω) RY(θ) RZ(φ)`.
    Rot,
    Cnot,
    Cz,
}

impl GateKind {
    pub fn n_angles(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::U1 => 1,
            GateKind::Rot => 3,
            GateKind::H | GateKind::Cnot | GateKind::Cz => 0,
        }
    }

    pub fn is_two_qubit(self) -> bool {
        matches!(self, GateKind::Cnot | GateKind::Cz)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rx => "RX",
            GateKind::Ry => "RY",
            GateKind::Rz => "RZ",
            GateKind::H => "H",
            GateKind::U1 => "U1",
            GateKind::Rot => "ROT3",
            GateKind::Cnot => "CNOT",
            GateKind::Cz => "CZ",
        }
    }
}

/// Where a gate angle comes from when the circuit is run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Angle {
    /// Trainable parameter slot.
    Param(usize),
    /// Data-dependent slot, substituted by [`Circuit::bind_inputs`].
    Input(usize),
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Segment {
    FeatureMap,
    Variational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub target: usize,
    pub control: Option<usize>,
    pub angles: Vec<Angle>,
    pub segment: Segment,
}

impl Gate {
    fn single(kind: GateKind, target: usize, angles: Vec<Angle>) -> Self {
        Self {
            kind,
            target,
            control: None,
            angles,
            segment: Segment::Variational,
        }
    }

    pub fn rx(target: usize, angle: Angle) -> Self {
        Self::single(GateKind::Rx, target, vec![angle])
    }

    pub fn ry(target: usize, angle: Angle) -> Self {
        Self::single(GateKind::Ry, target, vec![angle])
    }

    pub fn rz(target: usize, angle: Angle) -> Self {
        Self::single(GateKind::Rz, target, vec![angle])
    }

    pub fn h(target: usize) -> Self {
        Self::single(GateKind::H, target, Vec::new())
    }

    pub fn u1(target: usize, angle: Angle) -> Self {
        Self::single(GateKind::U1, target, vec![angle])
    }

    /// Angles in `(φ, θ, ω)` order.
    pub fn rot(target: usize, angles: [Angle; 3]) -> Self {
        Self::single(GateKind::Rot, target, angles.to_vec())
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            control: Some(control),
            ..Self::single(GateKind::Cnot, target, Vec::new())
        }
    }

    pub fn cz(control: usize, target: usize) -> Self {
        Self {
            control: Some(control),
            ..Self::single(GateKind::Cz, target, Vec::new())
        }
    }

    pub fn in_segment(mut self, segment: Segment) -> Self {
        self.segment = segment;
        self
    }

    pub fn has_params(&self) -> bool {
        self.angles.iter().any(|a| matches!(a, Angle::Param(_)))
    }

    fn validate_shape(&self, n_qubits: usize) -> Result<()> {
        check_index(self.target, n_qubits)?;
        match (self.kind.is_two_qubit(), self.control) {
            (true, Some(c)) => {
                check_index(c, n_qubits)?;
                if c == self.target {
                    return Err(Error::ControlIsTarget(c));
                }
            }
            (true, None) => {
                return Err(Error::InvalidArgument(format!(
                    "{} requires a control qubit",
                    self.kind.name()
                )))
            }
            (false, Some(_)) => {
                return Err(Error::InvalidArgument(format!(
                    "{} does not take a control qubit",
                    self.kind.name()
                )))
            }
            (false, None) => {}
        }
        check_angle_count(self.kind, self.angles.len())
    }
}

fn check_index(q: usize, n_qubits: usize) -> Result<()> {
    if q >= n_qubits {
        return Err(Error::QubitOutOfRange { index: q, n_qubits });
    }
    Ok(())
}

fn check_angle_count(kind: GateKind, got: usize) -> Result<()> {
    if got != kind.n_angles() {
        return Err(Error::AngleCount {
            kind: kind.name(),
            expected: kind.n_angles(),
            got,
        });
    }
    Ok(())
}

/// An angle offset applied to one occurrence of a parameter slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shift {
    pub gate: usize,
    pub angle: usize,
    pub delta: f64,
}

/// Position of a parameter slot inside a circuit: `(gate index, angle index)`.
pub type Occurrence = (usize, usize);

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    n_params: usize,
    n_inputs: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize, n_params: usize, n_inputs: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        Ok(Self {
            n_qubits,
            n_params,
            n_inputs,
            gates: Vec::new(),
        })
    }

    /// Appends a gate after checking qubit indices, angle count and slot bounds.
    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate_shape(self.n_qubits)?;
        for angle in &gate.angles {
            match *angle {
                Angle::Param(slot) if slot >= self.n_params => {
                    return Err(Error::SlotOutOfRange {
                        slot,
                        n_params: self.n_params,
                    })
                }
                Angle::Input(slot) if slot >= self.n_inputs => {
                    return Err(Error::InputOutOfRange {
                        slot,
                        n_inputs: self.n_inputs,
                    })
                }
                Angle::Fixed(v) if !v.is_finite() => {
                    return Err(Error::InvalidArgument(format!("non-finite angle {v}")))
                }
                _ => {}
            }
        }
        // The shift rule with a ±1 generator does not cover U1.
        if gate.kind == GateKind::U1 && gate.has_params() {
            return Err(Error::NonDifferentiable("U1"));
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn feature_map(&self) -> impl Iterator<Item = &Gate> {
        self.gates
            .iter()
            .filter(|g| g.segment == Segment::FeatureMap)
    }

    pub fn variational(&self) -> impl Iterator<Item = &Gate> {
        self.gates
            .iter()
            .filter(|g| g.segment == Segment::Variational)
    }

    /// Every position where each parameter slot is read, indexed by slot.
    pub fn slot_occurrences(&self) -> Vec<Vec<Occurrence>> {
        let mut occ = vec![Vec::new(); self.n_params];
        for (gi, gate) in self.gates.iter().enumerate() {
            for (ai, angle) in gate.angles.iter().enumerate() {
                if let Angle::Param(slot) = *angle {
                    occ[slot].push((gi, ai));
                }
            }
        }
        occ
    }

    /// Replaces every input slot with a fixed angle.
    pub fn bind_inputs(&self, inputs: &[f64]) -> Result<Circuit> {
        if inputs.len() != self.n_inputs {
            return Err(Error::Dimension {
                expected: self.n_inputs,
                got: inputs.len(),
            });
        }
        let gates = self
            .gates
            .iter()
            .map(|g| {
                let mut g = g.clone();
                for a in &mut g.angles {
                    if let Angle::Input(slot) = *a {
                        *a = Angle::Fixed(inputs[slot]);
                    }
                }
                g
            })
            .collect();
        Ok(Circuit {
            n_qubits: self.n_qubits,
            n_params: self.n_params,
            n_inputs: 0,
            gates,
        })
    }

    /// Splits off the leading run of gates that read no parameter slot.
    ///
    /// The prefix can be simulated once and its output reused as the input
    /// state for the remainder.
    pub fn split_param_free_prefix(&self) -> (Circuit, Circuit) {
        let cut = self
            .gates
            .iter()
            .position(Gate::has_params)
            .unwrap_or(self.gates.len());
        let mk = |gates: &[Gate]| Circuit {
            n_qubits: self.n_qubits,
            n_params: self.n_params,
            n_inputs: self.n_inputs,
            gates: gates.to_vec(),
        };
        (mk(&self.gates[..cut]), mk(&self.gates[cut..]))
    }
}

/// Applies one gate with already-resolved angles.
pub fn apply_gate(state: &StateVector, gate: &Gate, angles: &[f64]) -> Result<StateVector> {
    gate.validate_shape(state.n_qubits)?;
    check_angle_count(gate.kind, angles.len())?;
    let mut out = state.clone();
    apply_in_place(&mut out, gate, angles);
    Ok(out)
}

/// Runs every gate left to right, resolving parameter slots from `params`.
pub fn run_circuit(circuit: &Circuit, params: &[f64], input: &StateVector) -> Result<StateVector> {
    run_with_shifts(circuit, params, input, &[])
}

/// Like [`run_circuit`] but adds `delta` to individual slot occurrences.
pub fn run_with_shifts(
    circuit: &Circuit,
    params: &[f64],
    input: &StateVector,
    shifts: &[Shift],
) -> Result<StateVector> {
    if params.len() != circuit.n_params {
        return Err(Error::Dimension {
            expected: circuit.n_params,
            got: params.len(),
        });
    }
    if input.n_qubits != circuit.n_qubits {
        return Err(Error::Dimension {
            expected: circuit.n_qubits,
            got: input.n_qubits,
        });
    }
    let mut state = input.clone();
    let mut buf = [0.0f64; 3];
    for (gi, gate) in circuit.gates.iter().enumerate() {
        let n = gate.angles.len();
        for (ai, angle) in gate.angles.iter().enumerate() {
            buf[ai] = match *angle {
                Angle::Param(slot) => params[slot],
                Angle::Fixed(v) => v,
                Angle::Input(_) => return Err(Error::UnboundInput),
            };
        }
        for s in shifts.iter().filter(|s| s.gate == gi && s.angle < n) {
            buf[s.angle] += s.delta;
        }
        apply_in_place(&mut state, gate, &buf[..n]);
    }
    Ok(state)
}

/// Exact `⟨Z⟩` on one qubit.
pub fn expect_z(state: &StateVector, qubit: usize) -> Result<f64> {
    check_index(qubit, state.n_qubits)?;
    let mask = state.mask(qubit);
    let mut acc = 0.0;
    for (i, a) in state.amps.iter().enumerate() {
        let p = a.norm_sqr();
        if i & mask == 0 {
            acc += p;
        } else {
            acc -= p;
        }
    }
    Ok(acc.clamp(-1.0, 1.0))
}

type Mat2 = [[Complex64; 2]; 2];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn matrix(kind: GateKind, angles: &[f64]) -> Mat2 {
    match kind {
        GateKind::Rx => {
            let (s, co) = (angles[0] / 2.0).sin_cos();
            [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
        }
        GateKind::Ry => {
            let (s, co) = (angles[0] / 2.0).sin_cos();
            [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
        }
        GateKind::Rz => {
            let half = angles[0] / 2.0;
            [
                [Complex64::from_polar(1.0, -half), c(0.0, 0.0)],
                [c(0.0, 0.0), Complex64::from_polar(1.0, half)],
            ]
        }
        GateKind::U1 => [
            [c(1.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), Complex64::from_polar(1.0, angles[0])],
        ],
        GateKind::H => [
            [c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)],
            [c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)],
        ],
        GateKind::Rot => {
            let (phi, theta, omega) = (angles[0], angles[1], angles[2]);
            let (s, co) = (theta / 2.0).sin_cos();
            let sum = (phi + omega) / 2.0;
            let diff = (phi - omega) / 2.0;
            [
                [
                    Complex64::from_polar(co, -sum),
                    -Complex64::from_polar(s, diff),
                ],
                [
                    Complex64::from_polar(s, -diff),
                    Complex64::from_polar(co, sum),
                ],
            ]
        }
        GateKind::Cnot | GateKind::Cz => unreachable!("two-qubit gates have no 2x2 matrix"),
    }
}

fn apply_in_place(state: &mut StateVector, gate: &Gate, angles: &[f64]) {
    let tmask = state.mask(gate.target);
    match gate.kind {
        GateKind::Cnot => {
            let cmask = state.mask(gate.control.expect("validated"));
            for i in 0..state.amps.len() {
                if i & cmask != 0 && i & tmask == 0 {
                    state.amps.swap(i, i | tmask);
                }
            }
        }
        GateKind::Cz => {
            let cmask = state.mask(gate.control.expect("validated"));
            for (i, a) in state.amps.iter_mut().enumerate() {
                if i & cmask != 0 && i & tmask != 0 {
                    *a = -*a;
                }
            }
        }
        kind => {
            let m = matrix(kind, angles);
            for i0 in 0..state.amps.len() {
                if i0 & tmask != 0 {
                    continue;
                }
                let i1 = i0 | tmask;
                let (a0, a1) = (state.amps[i0], state.amps[i1]);
                state.amps[i0] = m[0][0] * a0 + m[0][1] * a1;
                state.amps[i1] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }
}
