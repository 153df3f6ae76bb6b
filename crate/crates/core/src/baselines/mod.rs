//! Comparison methods: single models, random subspace with a tuned subset
//! size, and UMDA feature ranking.

pub mod cv;
pub mod eda;
pub mod rsb;

pub use eda::{eda_rank, EdaConfig, EdaOutcome};
pub use rsb::{default_k_grid, rsb_train, RsbConfig, RsbOutcome};

use crate::data::{Dataset, FeatureSubset, SelectionProbs};
use crate::ensemble::Ensemble;
use crate::learners::{self, LearnerSpec};

/// One model on all features and all samples, wrapped as a one-member ensemble.
pub fn single_model(learner: &LearnerSpec, data: &Dataset) -> Ensemble {
    let m = data.n_features();
    let rows: Vec<usize> = (0..data.n_samples()).collect();
    let model = learners::fit(learner, data, &FeatureSubset::full(m), &rows);
    Ensemble::new(
        vec![model],
        SelectionProbs::projected(vec![1.0; m]),
        data.task(),
        data.output_dim(),
    )
}
