use rayon::prelude::*;

use crate::data::{Dataset, FeatureSubset, SelectionProbs};
use crate::error::{Error, Result};
use crate::learners::{self, LearnerSpec};
use crate::rng::{self, StreamRng};
use crate::sampling::sample_subset;

use super::cv::{cross_val_error, fold_assignment, fold_splits};

#[derive(Debug, Clone, PartialEq)]
pub struct EdaConfig {
    pub population: usize,
    pub elite: usize,
    pub init_alpha: f64,
    pub restarts: usize,
    pub cv_folds: usize,
    /// Hard cap on marginal updates when diversity never halves.
    pub max_iterations: usize,
}

impl Default for EdaConfig {
    fn default() -> Self {
        EdaConfig {
            population: 100,
            elite: 50,
            init_alpha: 0.05,
            restarts: 20,
            cv_folds: 10,
            max_iterations: 100,
        }
    }
}

impl EdaConfig {
    fn validate(&self) -> Result<()> {
        if self.population < 2 || self.elite == 0 || self.elite > self.population {
            return Err(Error::InvalidConfig(format!(
                "need 0 < elite ({}) <= population ({}) and population >= 2",
                self.elite, self.population
            )));
        }
        if !(0.0..=1.0).contains(&self.init_alpha) {
            return Err(Error::InvalidConfig("initial probability outside [0, 1]".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("at least one restart is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdaIteration {
    pub hamming: f64,
    pub population_error: f64,
    /// Mean error of the selected elite; `None` for the final, unselected population.
    pub elite_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdaRun {
    pub alpha: SelectionProbs,
    /// Number of marginal updates performed before stopping.
    pub iterations: usize,
    /// Mean error over the final population.
    pub final_error: f64,
    pub trace: Vec<EdaIteration>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdaOutcome {
    pub alpha: SelectionProbs,
    pub selected_restart: usize,
    pub runs: Vec<EdaRun>,
}

impl EdaOutcome {
    pub fn stop_iteration(&self) -> usize {
        self.runs[self.selected_restart].iterations
    }
}

/// Mean Hamming distance over all unordered pairs.
pub fn mean_pairwise_hamming(population: &[FeatureSubset]) -> f64 {
    let t = population.len();
    if t < 2 {
        return 0.0;
    }
    let mut total = 0usize;
    for a in 0..t {
        for b in a + 1..t {
            total += population[a].hamming(&population[b]);
        }
    }
    total as f64 / (t * (t - 1) / 2) as f64
}

/// One UMDA run over `m` features minimizing `score`.
///
/// Each iteration samples a population from the current marginals, stops if
/// its mean pairwise Hamming distance is zero or below half the initial
/// population's, and otherwise refits the marginals to the best `elite`
/// subsets (ties by error, then population index).
pub fn umda(
    m: usize,
    cfg: &EdaConfig,
    rng: &mut StreamRng,
    score: &(dyn Fn(&FeatureSubset) -> f64 + Sync),
) -> Result<EdaRun> {
    cfg.validate()?;
    let mut alpha = SelectionProbs::uniform(m, cfg.init_alpha)?;
    let mut trace = Vec::new();
    let mut d_init = 0.0;
    let mut iterations = 0;
    loop {
        let population: Vec<FeatureSubset> = (0..cfg.population).map(|_| sample_subset(&alpha, rng)).collect();
        let d = mean_pairwise_hamming(&population);
        if iterations == 0 {
            d_init = d;
        }
        let errors: Vec<f64> = population.par_iter().map(score).collect();
        let population_error = errors.iter().sum::<f64>() / errors.len() as f64;
        let stop = d == 0.0 || (iterations > 0 && d < d_init / 2.0) || iterations >= cfg.max_iterations;
        if stop {
            trace.push(EdaIteration {
                hamming: d,
                population_error,
                elite_error: None,
            });
            return Ok(EdaRun {
                alpha,
                iterations,
                final_error: population_error,
                trace,
            });
        }
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| errors[a].total_cmp(&errors[b]).then(a.cmp(&b)));
        let elite = &order[..cfg.elite];
        let mut counts = vec![0usize; m];
        for &t in elite {
            for &j in population[t].active() {
                counts[j] += 1;
            }
        }
        alpha = SelectionProbs::projected(counts.iter().map(|&c| c as f64 / cfg.elite as f64).collect());
        trace.push(EdaIteration {
            hamming: d,
            population_error,
            elite_error: Some(elite.iter().map(|&t| errors[t]).sum::<f64>() / cfg.elite as f64),
        });
        iterations += 1;
    }
}

/// `cfg.restarts` UMDA runs; keeps the marginals whose final population has
/// the lowest mean error.
pub fn umda_restarts(
    m: usize,
    cfg: &EdaConfig,
    rng: &mut StreamRng,
    score: &(dyn Fn(&FeatureSubset) -> f64 + Sync),
) -> Result<EdaOutcome> {
    cfg.validate()?;
    let mut runs = Vec::with_capacity(cfg.restarts);
    for mut r in rng::split_n(rng, cfg.restarts) {
        runs.push(umda(m, cfg, &mut r, score)?);
    }
    finish(runs)
}

fn finish(runs: Vec<EdaRun>) -> Result<EdaOutcome> {
    let (selected_restart, best) = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.final_error.total_cmp(&b.1.final_error).then(a.0.cmp(&b.0)))
        .ok_or_else(|| Error::InvalidConfig("no restarts ran".into()))?;
    Ok(EdaOutcome {
        alpha: best.alpha.clone(),
        selected_restart,
        runs,
    })
}

/// Feature importances from UMDA, scoring each subset by the
/// cross-validation error of a single model trained on it.
pub fn eda_rank(data: &Dataset, learner: &LearnerSpec, cfg: &EdaConfig, rng: &mut StreamRng) -> Result<EdaOutcome> {
    cfg.validate()?;
    let mut runs = Vec::with_capacity(cfg.restarts);
    for mut r in rng::split_n(rng, cfg.restarts) {
        let folds = fold_assignment(data.target(), cfg.cv_folds, &mut r)?;
        let splits = fold_splits(&folds, cfg.cv_folds);
        let score = |z: &FeatureSubset| {
            cross_val_error(data, &splits, |train, test| {
                let model = learners::fit(learner, data, z, train);
                test.iter().map(|&i| model.predict(data.row(i))).collect()
            })
            .unwrap_or(f64::INFINITY)
        };
        runs.push(umda(data.n_features(), cfg, &mut r, &score)?);
    }
    finish(runs)
}
