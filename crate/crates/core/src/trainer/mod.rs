//! Projected mini-batch gradient descent over the selection probabilities,
//! with importance-sampled gradient updates, effective-sample-size triggered
//! retraining, restarts, and a final ensemble fit on the full data.

mod penalty;
mod run;

pub use penalty::{fused_penalty, l1_penalty};
pub use run::{MinibatchTrace, PrsbRun, StopReason};

use rayon::prelude::*;

use crate::data::{Dataset, Prediction, SelectionProbs, TrainConfig};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::gradient::LossSpec;
use crate::learners::LearnerSpec;
use crate::rng::{self, StreamRng};

/// Stream id of the final-ensemble fit; restart r uses stream r + 1.
const FINAL_FIT_STREAM: u64 = 0;

pub fn restart_stream(seed: u64, restart: usize) -> StreamRng {
    rng::stream(seed, restart as u64 + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartSummary {
    pub restart: usize,
    pub score: f64,
    pub sum_alpha: f64,
    /// Set when the restart was aborted (e.g. a non-finite gradient).
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub seed: u64,
    pub eta: f64,
    pub n_epochs: usize,
    /// Per-epoch mean objective of the selected restart.
    pub epoch_objectives: Vec<f64>,
    /// Global step index of every retrain of the selected restart.
    pub retrain_steps: Vec<usize>,
    /// T_eff at the end of every mini-batch of the selected restart.
    pub t_eff_trace: Vec<f64>,
    /// Per-step objective of every mini-batch of the selected restart.
    pub minibatches: Vec<MinibatchTrace>,
    pub selected_restart: usize,
    /// Objective averaged over the last `selection_window` epochs.
    pub selection_score: f64,
    pub restarts: Vec<RestartSummary>,
    pub final_alpha: SelectionProbs,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub alpha: SelectionProbs,
    pub ensemble: Ensemble,
    pub report: TrainReport,
}

struct RestartResult {
    alpha: Vec<f64>,
    score: f64,
    epoch_objectives: Vec<f64>,
    minibatches: Vec<MinibatchTrace>,
}

/// One restart of the optimization, without the final ensemble fit.
pub fn optimize_once(
    data: &Dataset,
    learner: &LearnerSpec,
    loss: &LossSpec,
    cfg: &TrainConfig,
    rng: StreamRng,
) -> Result<(SelectionProbs, f64, Vec<f64>, Vec<MinibatchTrace>)> {
    let r = run_restart(data, learner, loss, cfg, rng)?;
    Ok((SelectionProbs::projected(r.alpha), r.score, r.epoch_objectives, r.minibatches))
}

fn run_restart(
    data: &Dataset,
    learner: &LearnerSpec,
    loss: &LossSpec,
    cfg: &TrainConfig,
    rng: StreamRng,
) -> Result<RestartResult> {
    let mut run = PrsbRun::new(data, *learner, *loss, cfg, rng)?;
    let reg = cfg.regularizer.clone();
    run.run_all(&mut |beta, grad| penalty::apply(&reg, beta, grad))?;
    let score = run.selection_score();
    let epoch_objectives = run.epoch_objectives.clone();
    let minibatches = std::mem::take(&mut run.minibatches);
    Ok(RestartResult {
        alpha: run.into_alpha(),
        score,
        epoch_objectives,
        minibatches,
    })
}

/// Runs `cfg.restarts` independent optimizations, keeps the selection
/// probabilities with the lowest late-epoch objective, and fits the final
/// T-model ensemble on all of `data` from them.
pub fn train(data: &Dataset, learner: &LearnerSpec, loss: &LossSpec, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate(data.n_features())?;
    let (centered, offset) = if cfg.center_target {
        data.centered()
    } else {
        (data.clone(), 0.0)
    };
    let data = &centered;
    let one = |r: usize| run_restart(data, learner, loss, cfg, restart_stream(cfg.seed, r));
    let results: Vec<Result<RestartResult>> = if cfg.parallel_restarts {
        (0..cfg.restarts).into_par_iter().map(one).collect()
    } else {
        (0..cfg.restarts).map(one).collect()
    };

    let mut summaries = Vec::with_capacity(results.len());
    let mut best: Option<(usize, RestartResult)> = None;
    let mut last_err = None;
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(run) => {
                summaries.push(RestartSummary {
                    restart: r,
                    score: run.score,
                    sum_alpha: run.alpha.iter().sum(),
                    failure: None,
                });
                if best.as_ref().is_none_or(|(_, b)| run.score < b.score) {
                    best = Some((r, run));
                }
            }
            Err(e @ (Error::NonFiniteGradient { .. } | Error::DegenerateRatio { .. })) => {
                summaries.push(RestartSummary {
                    restart: r,
                    score: f64::INFINITY,
                    sum_alpha: f64::NAN,
                    failure: Some(e.to_string()),
                });
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    let Some((selected, best)) = best else {
        return Err(last_err.unwrap_or(Error::InvalidConfig("no restarts ran".into())));
    };

    let alpha = SelectionProbs::projected(best.alpha);
    let all: Vec<usize> = (0..data.n_samples()).collect();
    let mut final_rng = rng::stream(cfg.seed, FINAL_FIT_STREAM);
    let ensemble = Ensemble::fit_sampled(learner, data, &all, &alpha, cfg.n_models, &mut final_rng).with_offset(offset);

    let report = TrainReport {
        seed: cfg.seed,
        eta: cfg.eta,
        n_epochs: cfg.n_epochs,
        epoch_objectives: best.epoch_objectives,
        retrain_steps: best.minibatches.iter().map(|m| m.retrain_step).collect(),
        t_eff_trace: best.minibatches.iter().map(|m| m.t_eff).collect(),
        minibatches: best.minibatches,
        selected_restart: selected,
        selection_score: best.score,
        restarts: summaries,
        final_alpha: alpha.clone(),
    };
    Ok(TrainOutcome {
        alpha,
        ensemble,
        report,
    })
}

/// Unweighted mean of the final ensemble.
pub fn predict(ensemble: &Ensemble, x: &[f64]) -> Prediction {
    ensemble.predict(x)
}
