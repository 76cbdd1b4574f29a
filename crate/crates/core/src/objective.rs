//! Differentiable cost functions consumed by the trainers and the landscape tools.

use crate::ansatz::{Classifier, EncodedSample};
use crate::diff::{self, GradientVector, HessianMatrix, LabeledFn};
use crate::error::{Error, Result};

pub trait Objective: Sync {
    fn n_params(&self) -> usize;
    fn cost(&self, params: &[f64]) -> Result<f64>;
    fn gradient(&self, params: &[f64]) -> Result<GradientVector>;
    fn hessian(&self, params: &[f64]) -> Result<HessianMatrix>;
}

/// Dataset-mean squared loss of a classifier circuit.
#[derive(Clone, Debug)]
pub struct ClassifierObjective {
    samples: Vec<LabeledFn>,
    n_params: usize,
}

impl ClassifierObjective {
    pub fn new(classifier: &Classifier, samples: &[EncodedSample]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            samples: classifier.labeled(samples)?,
            n_params: classifier.spec().n_params,
        })
    }

    pub fn from_labeled(samples: Vec<LabeledFn>) -> Result<Self> {
        let n_params = samples.first().ok_or(Error::EmptyDataset)?.f.n_params();
        Ok(Self { samples, n_params })
    }

    pub fn samples(&self) -> &[LabeledFn] {
        &self.samples
    }
}

impl Objective for ClassifierObjective {
    fn n_params(&self) -> usize {
        self.n_params
    }

    fn cost(&self, params: &[f64]) -> Result<f64> {
        diff::mean_loss(&self.samples, params)
    }

    fn gradient(&self, params: &[f64]) -> Result<GradientVector> {
        diff::loss_gradient(&self.samples, params)
    }

    fn hessian(&self, params: &[f64]) -> Result<HessianMatrix> {
        diff::loss_hessian(&self.samples, params)
    }
}
