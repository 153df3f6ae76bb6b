//! Base learners trained on a feature subset and a bootstrap sample.
//!
//! A trained model only ever reads the columns selected by its subset, so a
//! full-length input row can be passed to `predict_into` directly.

mod cart;
mod knn;

pub use cart::{CartParams, CartTree};
pub use knn::Knn;

use rand::Rng;

use crate::data::{argmax, Dataset, FeatureSubset, Prediction, Target, TaskKind};
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearnerSpec {
    CartTree(CartParams),
    Knn { k: usize },
    Constant,
}

impl LearnerSpec {
    pub fn tree() -> Self {
        LearnerSpec::CartTree(CartParams::default())
    }

    pub fn knn() -> Self {
        LearnerSpec::Knn { k: 5 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LearnerSpec::CartTree(_) => "tree",
            LearnerSpec::Knn { .. } => "knn",
            LearnerSpec::Constant => "constant",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelPayload {
    Constant(Vec<f64>),
    Tree(CartTree),
    Knn(Knn),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    payload: ModelPayload,
    subset: FeatureSubset,
    task: TaskKind,
}

impl TrainedModel {
    pub fn subset(&self) -> &FeatureSubset {
        &self.subset
    }

    pub fn payload(&self) -> &ModelPayload {
        &self.payload
    }

    pub fn output_dim(&self) -> usize {
        match &self.payload {
            ModelPayload::Constant(v) => v.len(),
            ModelPayload::Tree(t) => t.output_dim(),
            ModelPayload::Knn(k) => k.output_dim(),
        }
    }

    /// Writes the prediction for the full-length row `x` into `out`.
    pub fn predict_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.payload {
            ModelPayload::Constant(v) => out.copy_from_slice(v),
            ModelPayload::Tree(t) => t.predict_into(x, out),
            ModelPayload::Knn(k) => k.predict_into(x, out),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Prediction {
        let mut out = vec![0.0; self.output_dim()];
        self.predict_into(x, &mut out);
        Prediction::from_raw(self.task, &out)
    }
}

/// Trains `spec` on the `bootstrap` rows of `data`, restricted to `subset`.
///
/// An empty subset yields the constant model: the bootstrap mean for
/// regression, a one-hot vector on the majority class for classification.
pub fn fit(
    spec: &LearnerSpec,
    data: &Dataset,
    subset: &FeatureSubset,
    bootstrap: &[usize],
) -> TrainedModel {
    debug_assert_eq!(subset.len(), data.n_features());
    let payload = if subset.count() == 0 || bootstrap.is_empty() {
        ModelPayload::Constant(constant_output(data.target(), bootstrap))
    } else {
        match spec {
            LearnerSpec::Constant => ModelPayload::Constant(constant_output(data.target(), bootstrap)),
            LearnerSpec::CartTree(params) => {
                ModelPayload::Tree(CartTree::fit(data, subset.active(), bootstrap, params))
            }
            LearnerSpec::Knn { k } => ModelPayload::Knn(Knn::fit(data, subset.active(), bootstrap, *k)),
        }
    };
    TrainedModel {
        payload,
        subset: subset.clone(),
        task: data.task(),
    }
}

pub(crate) fn constant_output(target: &Target, rows: &[usize]) -> Vec<f64> {
    match target {
        Target::Regression(y) => {
            if rows.is_empty() {
                return vec![0.0];
            }
            vec![rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len() as f64]
        }
        Target::Classification { labels, n_classes } => {
            let mut counts = vec![0.0; *n_classes];
            for &i in rows {
                counts[labels[i]] += 1.0;
            }
            let mut out = vec![0.0; *n_classes];
            out[argmax(&counts)] = 1.0;
            out
        }
    }
}

/// Rows drawn with replacement, as many as `pool` holds.
pub fn bootstrap_sample(pool: &[usize], rng: &mut StreamRng) -> Vec<usize> {
    let n = pool.len();
    (0..n).map(|_| pool[rng.random_range(0..n)]).collect()
}
