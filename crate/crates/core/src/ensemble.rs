use rayon::prelude::*;

use crate::data::{Dataset, FeatureSubset, Prediction, SelectionProbs, TaskKind};
use crate::learners::{self, LearnerSpec, TrainedModel};
use crate::rng::{self, StreamRng};
use crate::sampling::sample_subset;

/// T base models, the subsets they were trained on, and the selection
/// probabilities the subsets were drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    models: Vec<TrainedModel>,
    alpha: SelectionProbs,
    task: TaskKind,
    output_dim: usize,
    /// Added to regression outputs; the models were fit on a shifted target.
    offset: f64,
}

impl Ensemble {
    pub fn new(models: Vec<TrainedModel>, alpha: SelectionProbs, task: TaskKind, output_dim: usize) -> Self {
        Ensemble {
            models,
            alpha,
            task,
            output_dim,
            offset: 0.0,
        }
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Draws T subsets from `alpha` and fits one model per subset on a
    /// bootstrap sample of `pool`. Subsets and per-model streams are drawn
    /// sequentially; fitting runs in parallel.
    pub fn fit_sampled(
        learner: &LearnerSpec,
        data: &Dataset,
        pool: &[usize],
        alpha: &SelectionProbs,
        n_models: usize,
        rng: &mut StreamRng,
    ) -> Self {
        let subsets: Vec<FeatureSubset> = (0..n_models).map(|_| sample_subset(alpha, rng)).collect();
        Self::fit_subsets(learner, data, pool, alpha.clone(), subsets, rng)
    }

    /// Fits one model per given subset, each on its own bootstrap of `pool`.
    pub fn fit_subsets(
        learner: &LearnerSpec,
        data: &Dataset,
        pool: &[usize],
        alpha: SelectionProbs,
        subsets: Vec<FeatureSubset>,
        rng: &mut StreamRng,
    ) -> Self {
        let streams = rng::split_n(rng, subsets.len());
        let models = subsets
            .into_par_iter()
            .zip(streams)
            .map(|(z, mut r)| {
                let boot = learners::bootstrap_sample(pool, &mut r);
                learners::fit(learner, data, &z, &boot)
            })
            .collect();
        Ensemble::new(models, alpha, data.task(), data.output_dim())
    }

    pub fn models(&self) -> &[TrainedModel] {
        &self.models
    }

    pub fn alpha(&self) -> &SelectionProbs {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn task(&self) -> TaskKind {
        self.task
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn subsets(&self) -> Vec<FeatureSubset> {
        self.models.iter().map(|m| m.subset().clone()).collect()
    }

    /// Unweighted mean of the base-model outputs.
    pub fn predict(&self, x: &[f64]) -> Prediction {
        let mut acc = vec![0.0; self.output_dim];
        let mut tmp = vec![0.0; self.output_dim];
        for m in &self.models {
            m.predict_into(x, &mut tmp);
            for (a, v) in acc.iter_mut().zip(&tmp) {
                *a += v;
            }
        }
        let t = self.models.len() as f64;
        acc.iter_mut().for_each(|a| *a /= t);
        if !self.task.is_classification() {
            acc.iter_mut().for_each(|a| *a += self.offset);
        }
        Prediction::from_raw(self.task, &acc)
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Vec<Prediction> {
        (0..data.n_samples()).map(|i| self.predict(data.row(i))).collect()
    }
}
