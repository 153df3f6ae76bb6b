use crate::data::Dataset;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};

use super::LossSpec;

const LOG_SPACE_THRESHOLD: f64 = 1e12;

/// Batched importance-sampling estimator for one ensemble and one mini-batch.
///
/// Base-model outputs on the mini-batch are computed once; every call to
/// `set_beta` only recomputes weights, so an inner optimization loop costs
/// O(T * M + T * N_mb) per step.
///
/// Leave-one-out weights avoid a full product per (model, feature): for a
/// model with no zero ratio factor, w_t^{-j} = w_t / r_j(z_tj), and r_j only
/// depends on whether j is in the subset, so it factors out of the sums.
/// Models with exactly one zero factor contribute only to that feature; two
/// or more zeros contribute nothing.
#[derive(Debug, Clone)]
pub struct GradientEngine {
    alpha: Vec<f64>,
    active: Vec<Vec<usize>>,
    masks: Vec<Vec<bool>>,
    /// T x (N_mb * d) raw base-model outputs.
    outputs: Vec<f64>,
    n_rows: usize,
    dim: usize,
    count_with: Vec<usize>,

    // State for the current beta.
    ratio_with: Vec<f64>,
    ratio_without: Vec<f64>,
    weights: Vec<f64>,
    loo_product: Vec<f64>,
    zero_count: Vec<u32>,
    zero_at: Vec<usize>,
    t_eff: f64,
}

/// Result of evaluating the objective and its data gradient at the current beta.
#[derive(Debug, Clone, PartialEq)]
pub struct StepEval {
    pub loss: f64,
    pub gradient: Vec<f64>,
    pub predictions: Vec<f64>,
    pub retrain_hint: bool,
}

impl GradientEngine {
    pub fn new(ensemble: &Ensemble, data: &Dataset, rows: &[usize], alpha: &[f64]) -> Result<Self> {
        let dim = ensemble.output_dim();
        let width = rows.len() * dim;
        let m = data.n_features();
        if alpha.len() != m {
            return Err(Error::LengthMismatch {
                expected: m,
                actual: alpha.len(),
            });
        }
        let mut outputs = vec![0.0; ensemble.len() * width];
        for (t, model) in ensemble.models().iter().enumerate() {
            let block = &mut outputs[t * width..(t + 1) * width];
            for (r, &i) in rows.iter().enumerate() {
                model.predict_into(data.row(i), &mut block[r * dim..(r + 1) * dim]);
            }
        }
        let subsets = ensemble.models().iter().map(|m| m.subset());
        Self::from_outputs(
            alpha.to_vec(),
            subsets.map(|s| s.mask().to_vec()).collect(),
            outputs,
            rows.len(),
            dim,
        )
    }

    /// Builds the engine from precomputed outputs: `outputs[t]` holds model
    /// t's raw prediction for every row, row-major with width `dim`.
    pub fn from_outputs(
        alpha: Vec<f64>,
        masks: Vec<Vec<bool>>,
        outputs: Vec<f64>,
        n_rows: usize,
        dim: usize,
    ) -> Result<Self> {
        let m = alpha.len();
        let t = masks.len();
        if outputs.len() != t * n_rows * dim {
            return Err(Error::LengthMismatch {
                expected: t * n_rows * dim,
                actual: outputs.len(),
            });
        }
        let mut count_with = vec![0; m];
        let mut active = Vec::with_capacity(t);
        for mask in &masks {
            if mask.len() != m {
                return Err(Error::LengthMismatch {
                    expected: m,
                    actual: mask.len(),
                });
            }
            let a: Vec<usize> = mask.iter().enumerate().filter_map(|(j, &b)| b.then_some(j)).collect();
            for &j in &a {
                count_with[j] += 1;
            }
            active.push(a);
        }
        let mut engine = GradientEngine {
            alpha,
            active,
            masks,
            outputs,
            n_rows,
            dim,
            count_with,
            ratio_with: vec![1.0; m],
            ratio_without: vec![1.0; m],
            weights: vec![1.0; t],
            loo_product: vec![1.0; t],
            zero_count: vec![0; t],
            zero_at: vec![0; t],
            t_eff: t as f64,
        };
        let alpha = engine.alpha.clone();
        engine.set_beta(&alpha)?;
        Ok(engine)
    }

    pub fn n_models(&self) -> usize {
        self.masks.len()
    }

    pub fn counts_with(&self) -> &[usize] {
        &self.count_with
    }

    pub fn counts_without(&self) -> Vec<usize> {
        self.count_with.iter().map(|c| self.n_models() - c).collect()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn t_eff(&self) -> f64 {
        self.t_eff
    }

    /// Re-weights the ensemble toward `beta` and returns the new T_eff.
    pub fn set_beta(&mut self, beta: &[f64]) -> Result<f64> {
        let m = self.alpha.len();
        for j in 0..m {
            let (a, b) = (self.alpha[j], beta[j]);
            self.ratio_with[j] = if a > 0.0 { b / a } else { f64::NAN };
            self.ratio_without[j] = if a < 1.0 { (1.0 - b) / (1.0 - a) } else { f64::NAN };
        }
        for t in 0..self.n_models() {
            let mut prod = 1.0;
            let mut log_acc = 0.0;
            let mut in_log = false;
            let mut zeros = 0u32;
            let mut zero_at = 0;
            for (j, &z) in self.masks[t].iter().enumerate() {
                let r = if z { self.ratio_with[j] } else { self.ratio_without[j] };
                if r.is_nan() {
                    return Err(Error::DegenerateRatio { feature: j });
                }
                if r == 0.0 {
                    zeros += 1;
                    zero_at = j;
                    continue;
                }
                prod *= r;
                if prod > LOG_SPACE_THRESHOLD {
                    in_log = true;
                    log_acc += prod.ln();
                    prod = 1.0;
                }
            }
            let nz = if in_log { (log_acc + prod.ln()).exp() } else { prod };
            self.loo_product[t] = nz;
            self.zero_count[t] = zeros;
            self.zero_at[t] = zero_at;
            self.weights[t] = if zeros == 0 { nz } else { 0.0 };
        }
        let t_eff = crate::sampling::effective_sample_size(&self.weights)?;
        self.t_eff = t_eff;
        Ok(t_eff)
    }

    /// Mean loss, data gradient and ensemble outputs at the current beta.
    ///
    /// The partial derivative is linear in the conditional means, so every
    /// model's outputs are first contracted with dL/dE into one scalar and
    /// the per-feature sums run over those scalars.
    pub fn evaluate(&self, targets: &[f64], loss: &LossSpec) -> StepEval {
        let m = self.alpha.len();
        let t_models = self.n_models();
        let width = self.n_rows * self.dim;
        let dim = self.dim;

        let mut total = vec![0.0; width];
        for t in 0..t_models {
            if self.zero_count[t] == 0 {
                let w = self.weights[t];
                let out = &self.outputs[t * width..(t + 1) * width];
                for (acc, v) in total.iter_mut().zip(out) {
                    *acc += w * v;
                }
            }
        }
        let inv_t = 1.0 / t_models as f64;
        let mut predictions: Vec<f64> = total.iter().map(|v| v * inv_t).collect();
        let mut dloss = vec![0.0; width];
        let mut loss_sum = 0.0;
        for r in 0..self.n_rows {
            let p = &mut predictions[r * dim..(r + 1) * dim];
            loss.finalize(p);
            loss_sum += loss.loss_and_dloss(targets[r], p, &mut dloss[r * dim..(r + 1) * dim]);
        }

        // Weighted contracted sums: over all models with no zero factor, per
        // feature over those containing it, and the single-zero models.
        let mut all = 0.0;
        let mut with = vec![0.0; m];
        let mut single_with = vec![0.0; m];
        let mut single_without = vec![0.0; m];
        for t in 0..t_models {
            let zeros = self.zero_count[t];
            if zeros > 1 {
                continue;
            }
            let out = &self.outputs[t * width..(t + 1) * width];
            let g: f64 = dloss.iter().zip(out).map(|(d, v)| d * v).sum();
            if zeros == 0 {
                let wg = self.weights[t] * g;
                all += wg;
                for &j in &self.active[t] {
                    with[j] += wg;
                }
            } else {
                let k = self.zero_at[t];
                let wg = self.loo_product[t] * g;
                if self.masks[t][k] {
                    single_with[k] += wg;
                } else {
                    single_without[k] += wg;
                }
            }
        }

        let inv_n = 1.0 / self.n_rows as f64;
        let mut gradient = vec![0.0; m];
        let mut retrain_hint = false;
        for j in 0..m {
            let n1 = self.count_with[j];
            let n0 = t_models - n1;
            if n1 == 0 || n0 == 0 {
                retrain_hint = true;
                continue;
            }
            let r1 = self.ratio_with[j];
            let r0 = self.ratio_without[j];
            let s1 = if r1 != 0.0 { with[j] / r1 } else { 0.0 } + single_with[j];
            let s0 = if r0 != 0.0 { (all - with[j]) / r0 } else { 0.0 } + single_without[j];
            gradient[j] = (s1 / n1 as f64 - s0 / n0 as f64) * inv_n;
        }

        StepEval {
            loss: loss_sum * inv_n,
            gradient,
            predictions,
            retrain_hint,
        }
    }
}
