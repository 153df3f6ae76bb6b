//! Score-function gradient of the ensemble objective with respect to the
//! selection probabilities.
//!
//! For a Bernoulli subset distribution the partial derivative of the expected
//! ensemble output with respect to `alpha_j` is the difference between the
//! expected output of models that use feature j and of models that do not.
//! Both conditional means are estimated from a fixed ensemble sampled under a
//! snapshot `alpha`, re-weighted by importance sampling to any nearby `beta`.
//!
//! `ensemble_predict_is` and `conditional_means` evaluate one sample and one
//! feature at a time and are the reference definitions. `GradientEngine`
//! computes the same quantities for a whole mini-batch and every feature at
//! once; it is what the trainer runs.

mod engine;
pub mod exact;
mod loss;

pub use engine::{GradientEngine, StepEval};
pub use loss::{LossKind, LossSpec};

use crate::data::{Dataset, Prediction, SelectionProbs};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::sampling::{importance_weight, importance_weight_without, ImportanceState};

/// Per-feature partials of the data term together with the ensemble outputs
/// and subset counts they were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub partials: Vec<f64>,
    /// Finalized IS ensemble output per mini-batch row, row-major.
    pub predictions: Vec<f64>,
    /// T_{j,0} per feature.
    pub count_without: Vec<usize>,
    /// T_{j,1} per feature.
    pub count_with: Vec<usize>,
    /// Mean loss over the mini-batch.
    pub loss: f64,
    /// Some conditional mean was undefined; those partials were set to zero.
    pub retrain_hint: bool,
}

/// Importance-sampled ensemble output under `beta`:
/// (1/T) sum_t w_t f_t(x), classification vectors then renormalized and
/// clamped.
pub fn ensemble_predict_is(
    ensemble: &Ensemble,
    state: &ImportanceState,
    beta: &SelectionProbs,
    x: &[f64],
    loss: &LossSpec,
) -> Result<Prediction> {
    let d = ensemble.output_dim();
    let mut acc = vec![0.0; d];
    let mut tmp = vec![0.0; d];
    let mut total_weight = 0.0;
    for model in ensemble.models() {
        let w = importance_weight(model.subset(), state.alpha(), beta)?;
        total_weight += w;
        model.predict_into(x, &mut tmp);
        for (a, v) in acc.iter_mut().zip(&tmp) {
            *a += w * v;
        }
    }
    if total_weight == 0.0 {
        return Err(Error::WeightCollapse);
    }
    let t = ensemble.len() as f64;
    acc.iter_mut().for_each(|a| *a /= t);
    loss.finalize(&mut acc);
    Ok(Prediction::from_raw(ensemble.task(), &acc))
}

/// Importance-sampled estimates of the expected output without and with
/// feature `j`. A side is `None` when no model in the ensemble falls on it.
pub fn conditional_means(
    ensemble: &Ensemble,
    state: &ImportanceState,
    beta: &SelectionProbs,
    x: &[f64],
    j: usize,
) -> Result<(Option<Vec<f64>>, Option<Vec<f64>>)> {
    let d = ensemble.output_dim();
    let mut sums = [vec![0.0; d], vec![0.0; d]];
    let mut counts = [0usize; 2];
    let mut tmp = vec![0.0; d];
    for model in ensemble.models() {
        let side = model.subset().contains(j) as usize;
        let w = importance_weight_without(model.subset(), state.alpha(), beta, j)?;
        model.predict_into(x, &mut tmp);
        for (s, v) in sums[side].iter_mut().zip(&tmp) {
            *s += w * v;
        }
        counts[side] += 1;
    }
    let [s0, s1] = sums;
    let finish = |mut s: Vec<f64>, n: usize| {
        (n > 0).then(|| {
            s.iter_mut().for_each(|v| *v /= n as f64);
            s
        })
    };
    Ok((finish(s0, counts[0]), finish(s1, counts[1])))
}

/// dL/dprediction . (f_{j,1} - f_{j,0}), summed over output components.
#[inline]
pub fn assemble_partial(dloss: &[f64], with: &[f64], without: &[f64]) -> f64 {
    dloss
        .iter()
        .zip(with.iter().zip(without))
        .map(|(g, (a, b))| g * (a - b))
        .sum()
}

/// Mini-batch gradient of the data term at `beta` for the ensemble sampled
/// under `state.alpha()`.
pub fn estimate_gradient(
    ensemble: &Ensemble,
    state: &ImportanceState,
    beta: &SelectionProbs,
    data: &Dataset,
    minibatch: &[usize],
    loss: &LossSpec,
) -> Result<GradientEstimate> {
    if minibatch.is_empty() {
        return Err(Error::InvalidConfig("empty mini-batch".into()));
    }
    let mut engine = GradientEngine::new(ensemble, data, minibatch, state.alpha().as_slice())?;
    engine.set_beta(beta.as_slice())?;
    let targets: Vec<f64> = minibatch.iter().map(|&i| data.target_value(i)).collect();
    let eval = engine.evaluate(&targets, loss);
    Ok(GradientEstimate {
        partials: eval.gradient,
        predictions: eval.predictions,
        count_without: engine.counts_without(),
        count_with: engine.counts_with().to_vec(),
        loss: eval.loss,
        retrain_hint: eval.retrain_hint,
    })
}
