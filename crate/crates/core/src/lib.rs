//! Parametric random-subspace ensembles: base models are trained on feature
//! subsets drawn from independent per-feature Bernoulli distributions, and
//! the selection probabilities are fitted by projected gradient descent with
//! score-function gradients and importance sampling. The fitted
//! probabilities double as feature importances.

pub mod baselines;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod gradient;
pub mod io;
pub mod learners;
pub mod network;
pub mod rng;
pub mod sampling;
pub mod simdata;
pub mod trainer;

pub use data::{
    normalize, Dataset, FeatureSubset, FusedSpec, Prediction, RegularizerSpec, SelectionProbs, Standardizer, Target,
    TaskKind, TrainConfig,
};
pub use ensemble::Ensemble;
pub use error::{Error, Result};
pub use gradient::{LossKind, LossSpec};
pub use learners::LearnerSpec;
pub use trainer::{train, TrainOutcome, TrainReport};
