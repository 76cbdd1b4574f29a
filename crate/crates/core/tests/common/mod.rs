#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vqc_core::diff::HessianMatrix;
use vqc_core::sim::{Angle, Circuit, Gate, StateVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rotation_angle(rng: &mut ChaCha8Rng, n_params: usize, next: &mut usize, unique: bool) -> Angle {
    // Hand out every slot once before reusing any, then mix in shared and fixed angles.
    if *next < n_params {
        *next += 1;
        return Angle::Param(*next - 1);
    }
    match rng.random_range(0..3) {
        _ if unique => Angle::Fixed(rng.random_range(-PI..PI)),
        0 => Angle::Fixed(rng.random_range(-PI..PI)),
        _ => Angle::Param(rng.random_range(0..n_params)),
    }
}

/// Random circuit over all gate kinds. Every slot in `0..n_params` appears at
/// least once; when `unique` is set no slot appears twice.
pub fn random_circuit(rng: &mut ChaCha8Rng, n_qubits: usize, n_params: usize, unique: bool) -> Circuit {
    let mut c = Circuit::new(n_qubits, n_params, 0).unwrap();
    let mut next = 0;
    let mut gates = 0;
    while next < n_params || gates < 2 * n_qubits {
        gates += 1;
        let q = rng.random_range(0..n_qubits);
        let kind = rng.random_range(0..8);
        let gate = if n_qubits > 1 && kind >= 6 {
            let mut other = rng.random_range(0..n_qubits - 1);
            if other >= q {
                other += 1;
            }
            if kind == 6 {
                Gate::cnot(q, other)
            } else {
                Gate::cz(q, other)
            }
        } else if kind == 4 {
            Gate::h(q)
        } else if kind == 5 {
            Gate::u1(q, Angle::Fixed(rng.random_range(-PI..PI)))
        } else if unique && next >= n_params {
            let a = Angle::Fixed(rng.random_range(-PI..PI));
            match kind {
                0 => Gate::rx(q, a),
                1 => Gate::ry(q, a),
                _ => Gate::rz(q, a),
            }
        } else {
            let mut a = || rotation_angle(rng, n_params, &mut next, unique);
            match kind {
                0 => Gate::rx(q, a()),
                1 => Gate::ry(q, a()),
                2 => Gate::rz(q, a()),
                _ => {
                    let angles = [a(), a(), a()];
                    Gate::rot(q, angles)
                }
            }
        };
        c.push(gate).unwrap();
    }
    c
}

pub fn random_params(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect()
}

pub fn random_state(rng: &mut ChaCha8Rng, n_qubits: usize) -> StateVector {
    let amps: Vec<Complex64> = (0..1usize << n_qubits)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> HessianMatrix {
    let mut h = HessianMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-1.0..1.0);
            h.set(i, j, v);
            h.set(j, i, v);
        }
    }
    h
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
