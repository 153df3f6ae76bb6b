use rand::seq::index;

use crate::data::{Dataset, FeatureSubset, SelectionProbs};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::learners::LearnerSpec;
use crate::rng::{self, StreamRng};

use super::cv::{cross_val_error, fold_assignment, fold_splits};

#[derive(Debug, Clone, PartialEq)]
pub struct RsbConfig {
    pub n_models: usize,
    /// Candidate subset sizes; `None` uses [`default_k_grid`].
    pub k_grid: Option<Vec<usize>>,
    pub cv_folds: usize,
}

impl Default for RsbConfig {
    fn default() -> Self {
        RsbConfig {
            n_models: 100,
            k_grid: None,
            cv_folds: 10,
        }
    }
}

/// {1, M/100, M/50, M/20, M/10, M/5, M/3, M/2, sqrt(M), M}, floored,
/// clamped to [1, M], sorted and deduplicated.
pub fn default_k_grid(m: usize) -> Vec<usize> {
    let mf = m as f64;
    let raw = [
        1.0,
        mf / 100.0,
        mf / 50.0,
        mf / 20.0,
        mf / 10.0,
        mf / 5.0,
        mf / 3.0,
        mf / 2.0,
        mf.sqrt(),
        mf,
    ];
    clean_grid(raw.iter().map(|v| v.floor() as usize), m)
}

fn clean_grid(values: impl IntoIterator<Item = usize>, m: usize) -> Vec<usize> {
    let mut g: Vec<usize> = values.into_iter().map(|k| k.clamp(1, m.max(1))).collect();
    g.sort_unstable();
    g.dedup();
    g
}

/// Exactly `k` distinct features, uniformly at random.
pub fn uniform_subset(m: usize, k: usize, rng: &mut StreamRng) -> FeatureSubset {
    let mut idx = index::sample(rng, m, k).into_vec();
    idx.sort_unstable();
    FeatureSubset::from_indices(m, &idx)
}

/// T models, each on a bootstrap of `pool` and a uniform K-feature subset.
pub fn rsb_fit(
    learner: &LearnerSpec,
    data: &Dataset,
    pool: &[usize],
    k: usize,
    n_models: usize,
    rng: &mut StreamRng,
) -> Ensemble {
    let m = data.n_features();
    let subsets = (0..n_models).map(|_| uniform_subset(m, k, rng)).collect();
    let alpha = SelectionProbs::projected(vec![k as f64 / m as f64; m]);
    Ensemble::fit_subsets(learner, data, pool, alpha, subsets, rng)
}

#[derive(Debug, Clone)]
pub struct RsbOutcome {
    pub ensemble: Ensemble,
    pub k: usize,
    /// Cross-validation error for every grid value, in grid order.
    pub cv_errors: Vec<(usize, f64)>,
}

/// Picks K by cross-validation (ties to the smaller K), then fits the
/// final ensemble on all of `data`.
pub fn rsb_train(data: &Dataset, learner: &LearnerSpec, cfg: &RsbConfig, rng: &mut StreamRng) -> Result<RsbOutcome> {
    let m = data.n_features();
    if cfg.n_models == 0 {
        return Err(Error::InvalidConfig("ensemble size must be at least 1".into()));
    }
    let grid = match &cfg.k_grid {
        Some(g) if !g.is_empty() => clean_grid(g.iter().copied(), m),
        Some(_) => return Err(Error::InvalidConfig("empty K grid".into())),
        None => default_k_grid(m),
    };
    let folds = fold_assignment(data.target(), cfg.cv_folds, rng)?;
    let splits = fold_splits(&folds, cfg.cv_folds);

    let mut cv_errors = Vec::with_capacity(grid.len());
    for &k in &grid {
        let mut krng = rng::split(rng);
        let err = cross_val_error(data, &splits, |train, test| {
            let e = rsb_fit(learner, data, train, k, cfg.n_models, &mut krng);
            test.iter().map(|&i| e.predict(data.row(i))).collect()
        })?;
        cv_errors.push((k, err));
    }
    let &(k, _) = cv_errors
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .expect("grid is non-empty");
    let all: Vec<usize> = (0..data.n_samples()).collect();
    let ensemble = rsb_fit(learner, data, &all, k, cfg.n_models, rng);
    Ok(RsbOutcome { ensemble, k, cv_errors })
}
