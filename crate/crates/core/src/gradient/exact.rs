//! Exact-expectation mode: every one of the 2^M subsets is enumerated instead
//! of sampled, with base-model outputs supplied as a lookup table. Used to
//! check the gradient assembly against the true derivative of the objective.

use crate::data::{FeatureSubset, SelectionProbs};
use crate::error::{Error, Result};
use crate::sampling::{pmf, pmf_without};

use super::{assemble_partial, LossSpec};

/// Deterministic base-model outputs f_z(x_i) for every subset z and sample i.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactProblem {
    m: usize,
    dim: usize,
    targets: Vec<f64>,
    /// Indexed by `(i << m | z) * dim + c`.
    table: Vec<f64>,
}

impl ExactProblem {
    pub const MAX_FEATURES: usize = 16;

    pub fn new(m: usize, dim: usize, targets: Vec<f64>, table: Vec<f64>) -> Result<Self> {
        if m == 0 || m > Self::MAX_FEATURES {
            return Err(Error::InvalidConfig(format!(
                "exact enumeration supports 1..={} features",
                Self::MAX_FEATURES
            )));
        }
        let expected = targets.len() * (1 << m) * dim;
        if table.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: table.len(),
            });
        }
        Ok(ExactProblem { m, dim, targets, table })
    }

    pub fn n_samples(&self) -> usize {
        self.targets.len()
    }

    pub fn n_features(&self) -> usize {
        self.m
    }

    pub fn output(&self, i: usize, bits: u64) -> &[f64] {
        let at = ((i << self.m) | bits as usize) * self.dim;
        &self.table[at..at + self.dim]
    }

    fn subsets(&self) -> impl Iterator<Item = (u64, FeatureSubset)> + '_ {
        (0..1u64 << self.m).map(move |b| (b, FeatureSubset::from_bits(self.m, b)))
    }

    /// E[f_z(x_i)] under p(z | alpha), before any finalization.
    pub fn expectation(&self, alpha: &SelectionProbs, i: usize) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        for (b, z) in self.subsets() {
            let p = pmf(&z, alpha);
            for (a, v) in acc.iter_mut().zip(self.output(i, b)) {
                *a += p * v;
            }
        }
        acc
    }

    /// Exact (f_{j,0}(x_i), f_{j,1}(x_i)).
    pub fn conditionals(&self, alpha: &SelectionProbs, i: usize, j: usize) -> (Vec<f64>, Vec<f64>) {
        let mut without = vec![0.0; self.dim];
        let mut with = vec![0.0; self.dim];
        for (b, z) in self.subsets() {
            let p = pmf_without(&z, alpha, j);
            let dst = if z.contains(j) { &mut with } else { &mut without };
            for (a, v) in dst.iter_mut().zip(self.output(i, b)) {
                *a += p * v;
            }
        }
        (without, with)
    }

    /// F(alpha): mean loss of the exact ensemble expectation.
    pub fn objective(&self, alpha: &SelectionProbs, loss: &LossSpec) -> f64 {
        (0..self.n_samples())
            .map(|i| {
                let mut e = self.expectation(alpha, i);
                loss.finalize(&mut e);
                loss.value(self.targets[i], &e)
            })
            .sum::<f64>()
            / self.n_samples() as f64
    }

    /// Gradient assembled from exact conditional means.
    pub fn gradient(&self, alpha: &SelectionProbs, loss: &LossSpec) -> Vec<f64> {
        let n = self.n_samples() as f64;
        let mut grad = vec![0.0; self.m];
        let mut dl = vec![0.0; self.dim];
        for i in 0..self.n_samples() {
            let mut e = self.expectation(alpha, i);
            loss.finalize(&mut e);
            loss.loss_and_dloss(self.targets[i], &e, &mut dl);
            for (j, g) in grad.iter_mut().enumerate() {
                let (f0, f1) = self.conditionals(alpha, i, j);
                *g += assemble_partial(&dl, &f1, &f0) / n;
            }
        }
        grad
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_feature_closed_form() {
        // f_{z=0} = 1, f_{z=1} = 3, y = 0, MSE: F(a) = (1 + 2a)^2, F' = 4(1 + 2a).
        let p = ExactProblem::new(1, 1, vec![0.0], vec![1.0, 3.0]).unwrap();
        let a = SelectionProbs::new(vec![0.25]).unwrap();
        assert!((p.objective(&a, &LossSpec::mse()) - 2.25).abs() < 1e-15);
        assert!((p.gradient(&a, &LossSpec::mse())[0] - 6.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(ExactProblem::new(2, 1, vec![0.0], vec![0.0; 3]).is_err());
        assert!(ExactProblem::new(0, 1, vec![], vec![]).is_err());
    }
}
