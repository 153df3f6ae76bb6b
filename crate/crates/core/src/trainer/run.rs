use rand::seq::SliceRandom;

use crate::data::{Dataset, SelectionProbs, TrainConfig};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::gradient::{GradientEngine, LossSpec};
use crate::learners::LearnerSpec;
use crate::rng::StreamRng;

/// Why an inner optimization loop handed back to retraining.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    StepCap,
    LowEffectiveSize,
    Collapse,
}

/// Trace of one mini-batch: models trained once, then up to
/// `max_steps_between_retrain` projected steps on beta.
#[derive(Debug, Clone, PartialEq)]
pub struct MinibatchTrace {
    /// Global step index at which the models were (re)trained.
    pub retrain_step: usize,
    pub steps: usize,
    pub objectives: Vec<f64>,
    pub t_eff: f64,
    pub stop: StopReason,
    pub retrain_hint: bool,
}

/// One optimization run (a single restart) over the selection probabilities.
///
/// The run is driven one mini-batch at a time so that several runs can be
/// interleaved when a penalty couples them.
pub struct PrsbRun<'a> {
    data: &'a Dataset,
    learner: LearnerSpec,
    loss: LossSpec,
    cfg: &'a TrainConfig,
    rng: StreamRng,
    alpha: Vec<f64>,
    batches: Vec<Vec<usize>>,
    global_step: usize,
    epoch: usize,
    epoch_sum: f64,
    epoch_count: usize,
    pub(crate) epoch_objectives: Vec<f64>,
    pub(crate) minibatches: Vec<MinibatchTrace>,
}

impl<'a> PrsbRun<'a> {
    pub fn new(
        data: &'a Dataset,
        learner: LearnerSpec,
        loss: LossSpec,
        cfg: &'a TrainConfig,
        rng: StreamRng,
    ) -> Result<Self> {
        cfg.validate(data.n_features())?;
        if !loss.matches(data.task()) {
            return Err(Error::InvalidConfig(format!(
                "{:?} loss does not fit a {:?} task",
                loss.kind,
                data.task()
            )));
        }
        let n_batches = cfg.n_minibatches();
        if data.n_samples() < n_batches + 1 {
            return Err(Error::InvalidDataset(format!(
                "{} samples cannot form {n_batches} mini-batches with a training remainder",
                data.n_samples()
            )));
        }
        Ok(PrsbRun {
            data,
            learner,
            loss,
            cfg,
            rng,
            alpha: vec![cfg.initial_alpha(); data.n_features()],
            batches: Vec::new(),
            global_step: 0,
            epoch: 0,
            epoch_sum: 0.0,
            epoch_count: 0,
            epoch_objectives: Vec::new(),
            minibatches: Vec::new(),
        })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn epoch_objectives(&self) -> &[f64] {
        &self.epoch_objectives
    }

    pub fn minibatch_traces(&self) -> &[MinibatchTrace] {
        &self.minibatches
    }

    /// Shuffles the data and partitions it into disjoint mini-batches.
    pub fn begin_epoch(&mut self) {
        let n = self.data.n_samples();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut self.rng);
        let k = self.cfg.n_minibatches();
        self.batches = (0..k)
            .map(|b| {
                let mut batch = order[b * n / k..(b + 1) * n / k].to_vec();
                batch.sort_unstable();
                batch
            })
            .collect();
        self.epoch_sum = 0.0;
        self.epoch_count = 0;
    }

    pub fn n_batches(&self) -> usize {
        self.batches.len()
    }

    /// Trains T models on a bootstrap of the complement of mini-batch `b`,
    /// then takes projected gradient steps on beta until the step cap or the
    /// effective sample size drops below the retrain threshold.
    ///
    /// `penalty` adds the regularizer subgradient at beta into its second
    /// argument and returns the regularizer value.
    pub fn run_minibatch(
        &mut self,
        b: usize,
        penalty: &mut dyn FnMut(&[f64], &mut [f64]) -> f64,
    ) -> Result<&MinibatchTrace> {
        let batch = &self.batches[b];
        let mut in_batch = vec![false; self.data.n_samples()];
        batch.iter().for_each(|&i| in_batch[i] = true);
        let pool: Vec<usize> = (0..self.data.n_samples()).filter(|&i| !in_batch[i]).collect();

        let snapshot = SelectionProbs::projected(self.alpha.clone());
        let ensemble = Ensemble::fit_sampled(
            &self.learner,
            self.data,
            &pool,
            &snapshot,
            self.cfg.n_models,
            &mut self.rng,
        );
        let mut engine = GradientEngine::new(&ensemble, self.data, batch, &self.alpha)?;
        let targets: Vec<f64> = batch.iter().map(|&i| self.data.target_value(i)).collect();

        let t_models = self.cfg.n_models as f64;
        let retrain_step = self.global_step;
        let mut beta = self.alpha.clone();
        let mut objectives = Vec::new();
        let mut retrain_hint = false;
        let mut t_eff;
        let stop = loop {
            let eval = engine.evaluate(&targets, &self.loss);
            retrain_hint |= eval.retrain_hint;
            let mut grad = eval.gradient;
            let pen = penalty(&beta, &mut grad);
            objectives.push(eval.loss + pen);
            if let Some(j) = grad.iter().position(|g| !g.is_finite()) {
                return Err(Error::NonFiniteGradient { feature: j });
            }
            for (bj, g) in beta.iter_mut().zip(&grad) {
                *bj = (*bj - self.cfg.eta * g).clamp(0.0, 1.0);
            }
            self.global_step += 1;
            match engine.set_beta(&beta) {
                Ok(t) => t_eff = t,
                Err(Error::WeightCollapse) => {
                    t_eff = 0.0;
                    break StopReason::Collapse;
                }
                Err(e) => return Err(e),
            }
            if t_eff < self.cfg.teff_retrain_fraction * t_models {
                break StopReason::LowEffectiveSize;
            }
            if objectives.len() >= self.cfg.max_steps_between_retrain {
                break StopReason::StepCap;
            }
        };
        self.alpha = beta;
        self.epoch_sum += objectives.iter().sum::<f64>();
        self.epoch_count += objectives.len();
        self.minibatches.push(MinibatchTrace {
            retrain_step,
            steps: objectives.len(),
            objectives,
            t_eff,
            stop,
            retrain_hint,
        });
        Ok(self.minibatches.last().expect("just pushed"))
    }

    pub fn end_epoch(&mut self) {
        self.epoch_objectives
            .push(self.epoch_sum / self.epoch_count.max(1) as f64);
        self.epoch += 1;
    }

    /// Runs every epoch with the given penalty.
    pub fn run_all(&mut self, penalty: &mut dyn FnMut(&[f64], &mut [f64]) -> f64) -> Result<()> {
        while self.epoch < self.cfg.n_epochs {
            self.begin_epoch();
            for b in 0..self.n_batches() {
                self.run_minibatch(b, penalty)?;
            }
            self.end_epoch();
        }
        Ok(())
    }

    /// Mean objective over the last `selection_window` epochs (all epochs if
    /// fewer were run).
    pub fn selection_score(&self) -> f64 {
        let e = &self.epoch_objectives;
        let w = self.cfg.selection_window.clamp(1, e.len().max(1));
        if e.is_empty() {
            return f64::INFINITY;
        }
        e[e.len() - w..].iter().sum::<f64>() / w as f64
    }

    pub fn into_alpha(self) -> Vec<f64> {
        self.alpha
    }
}
