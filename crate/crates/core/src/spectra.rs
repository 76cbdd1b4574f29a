//! Symmetric eigendecomposition and two-parameter loss-landscape slices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diff::HessianMatrix;
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::trainer::TrainingTrace;

pub const DEFAULT_ZERO_BAND: f64 = 1e-6;
pub const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-8;

/// Sorted eigenvalues with sign counts under a zero band.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub zero_band: f64,
    pub n_negative: usize,
    pub n_zero: usize,
    pub n_positive: usize,
}

impl Spectrum {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, zero_band: f64) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        let n_negative = eigenvalues.iter().filter(|&&l| l < -zero_band).count();
        let n_positive = eigenvalues.iter().filter(|&&l| l > zero_band).count();
        let n_zero = eigenvalues.len() - n_negative - n_positive;
        Self {
            eigenvalues,
            zero_band,
            n_negative,
            n_zero,
            n_positive,
        }
    }

    /// Eigenvalues strictly below `-cut`.
    pub fn count_below(&self, cut: f64) -> usize {
        self.eigenvalues.iter().filter(|&&l| l < -cut).count()
    }

    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

/// Eigenvalues (ascending) and the matching orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// `vectors[k]` is the eigenvector for `values[k]`.
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

impl EigenDecomposition {
    /// `Q Λ Qᵀ`.
    pub fn reconstruct(&self) -> HessianMatrix {
        let n = self.values.len();
        let mut out = HessianMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let v = (0..n)
                    .map(|k| self.vectors[k][i] * self.values[k] * self.vectors[k][j])
                    .sum();
                out.set(i, j, v);
            }
        }
        out
    }
}

fn off_diagonal_norm(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i][j] * a[i][j];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi rotations on `(H + Hᵀ)/2` until the off-diagonal Frobenius
/// norm drops below `1e-12 · max(1, ‖H‖_F)`.
pub fn eig_symmetric_full(h: &HessianMatrix) -> Result<EigenDecomposition> {
    if !h.is_finite() {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let scale = h.frobenius_norm().max(1.0);
    if h.max_asymmetry() > SYMMETRY_TOL * scale {
        return Err(Error::InvalidArgument(format!(
            "matrix is not symmetric (max |H - Hᵀ| = {:e})",
            h.max_asymmetry()
        )));
    }
    let n = h.dim();
    let mut a = h.symmetrized().rows();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let tol = OFF_DIAGONAL_TOL * scale;

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off < tol {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                residual: off,
            });
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[x][x].total_cmp(&a[y][y]));
    Ok(EigenDecomposition {
        values: order.iter().map(|&k| a[k][k]).collect(),
        vectors: order
            .iter()
            .map(|&k| (0..n).map(|i| v[i][k]).collect())
            .collect(),
        sweeps,
    })
}

pub fn eig_symmetric(h: &HessianMatrix) -> Result<Spectrum> {
    eig_symmetric_with_band(h, DEFAULT_ZERO_BAND)
}

pub fn eig_symmetric_with_band(h: &HessianMatrix, zero_band: f64) -> Result<Spectrum> {
    let eig = eig_symmetric_full(h)?;
    Ok(Spectrum::from_eigenvalues(eig.values, zero_band))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationaryKind {
    LocalMin,
    LocalMax,
    Saddle,
    Degenerate,
}

impl StationaryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StationaryKind::LocalMin => "local_min",
            StationaryKind::LocalMax => "local_max",
            StationaryKind::Saddle => "saddle",
            StationaryKind::Degenerate => "degenerate",
        }
    }
}

pub fn classify_stationary(eigenvalues: &[f64], zero_band: f64) -> Result<StationaryKind> {
    if eigenvalues.is_empty() {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    let neg = eigenvalues.iter().any(|&l| l < -zero_band);
    let pos = eigenvalues.iter().any(|&l| l > zero_band);
    let all_pos = eigenvalues.iter().all(|&l| l > zero_band);
    let all_neg = eigenvalues.iter().all(|&l| l < -zero_band);
    Ok(match (neg, pos) {
        (true, true) => StationaryKind::Saddle,
        _ if all_pos => StationaryKind::LocalMin,
        _ if all_neg => StationaryKind::LocalMax,
        _ => StationaryKind::Degenerate,
    })
}

/// Cost over a `G×G` grid of two parameters; row index follows `axis_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeSlice {
    pub axis_i: usize,
    pub axis_j: usize,
    pub range_lo: f64,
    pub range_hi: f64,
    pub resolution: usize,
    pub grid: Vec<Vec<f64>>,
    pub frozen_params: Vec<f64>,
}

impl LandscapeSlice {
    pub fn coordinate(&self, k: usize) -> f64 {
        grid_coordinate(self.range_lo, self.range_hi, self.resolution, k)
    }
}

pub fn grid_coordinate(lo: f64, hi: f64, resolution: usize, k: usize) -> f64 {
    if k + 1 >= resolution {
        hi
    } else {
        lo + (hi - lo) * (k as f64 / (resolution - 1) as f64)
    }
}

fn check_axes(n_params: usize, axis_i: usize, axis_j: usize) -> Result<()> {
    if axis_i == axis_j {
        return Err(Error::InvalidArgument(format!("axes must differ, got {axis_i} twice")));
    }
    for a in [axis_i, axis_j] {
        if a >= n_params {
            return Err(Error::SlotOutOfRange { slot: a, n_params });
        }
    }
    Ok(())
}

/// Cost with two coordinates of `frozen` overwritten.
pub fn slice_point<O: Objective + ?Sized>(
    objective: &O,
    frozen: &[f64],
    axis_i: usize,
    axis_j: usize,
    value_i: f64,
    value_j: f64,
) -> Result<f64> {
    let mut theta = frozen.to_vec();
    theta[axis_i] = value_i;
    theta[axis_j] = value_j;
    objective.cost(&theta)
}

pub fn landscape_slice<O: Objective + ?Sized>(
    objective: &O,
    frozen: &[f64],
    axis_i: usize,
    axis_j: usize,
    resolution: usize,
    range: (f64, f64),
) -> Result<LandscapeSlice> {
    if frozen.len() != objective.n_params() {
        return Err(Error::Dimension {
            expected: objective.n_params(),
            got: frozen.len(),
        });
    }
    check_axes(frozen.len(), axis_i, axis_j)?;
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!("grid resolution must be >= 2, got {resolution}")));
    }
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument(format!("invalid range [{lo}, {hi}]")));
    }
    let coords: Vec<f64> = (0..resolution)
        .map(|k| grid_coordinate(lo, hi, resolution, k))
        .collect();
    let values = (0..resolution * resolution)
        .into_par_iter()
        .map(|idx| {
            let (r, c) = (idx / resolution, idx % resolution);
            slice_point(objective, frozen, axis_i, axis_j, coords[r], coords[c])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LandscapeSlice {
        axis_i,
        axis_j,
        range_lo: lo,
        range_hi: hi,
        resolution,
        grid: values.chunks(resolution).map(<[f64]>::to_vec).collect(),
        frozen_params: frozen.to_vec(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub iter: usize,
    pub theta_i: f64,
    pub theta_j: f64,
    pub cost: f64,
}

/// Projects each recorded iterate onto two parameter axes.
pub fn descent_path_overlay(trace: &TrainingTrace, axis_i: usize, axis_j: usize) -> Result<Vec<PathPoint>> {
    if trace.records.is_empty() {
        return Err(Error::InvalidArgument("trace has no parameter snapshots".into()));
    }
    trace
        .records
        .iter()
        .map(|r| {
            if axis_i >= r.params.len() || axis_j >= r.params.len() {
                return Err(Error::InvalidArgument(format!(
                    "iteration {} has {} parameters; axes ({axis_i}, {axis_j}) out of range",
                    r.iter,
                    r.params.len()
                )));
            }
            Ok(PathPoint {
                iter: r.iter,
                theta_i: r.params[axis_i],
                theta_j: r.params[axis_j],
                cost: r.cost,
            })
        })
        .collect()
}
