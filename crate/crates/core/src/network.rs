//! Multi-output training for regulatory-network inference: one selection
//! vector per target gene, coupled by a row-group penalty over regulators.

use ndarray::Array2;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::data::{Dataset, Target, TrainConfig};
use crate::error::{Error, Result};
use crate::eval::average_precision;
use crate::gradient::LossSpec;
use crate::learners::LearnerSpec;
use crate::rng::{self, StreamRng};
use crate::trainer::PrsbRun;

/// Expression matrix (N samples x G genes), candidate regulators (gene
/// indices), and optionally the known edges (regulator gene, target gene).
#[derive(Debug, Clone, PartialEq)]
pub struct GrnProblem {
    expression: Array2<f64>,
    regulators: Vec<usize>,
    gold: Option<Vec<(usize, usize)>>,
}

impl GrnProblem {
    pub fn new(expression: Array2<f64>, regulators: Vec<usize>, gold: Option<Vec<(usize, usize)>>) -> Result<Self> {
        let g = expression.ncols();
        if expression.nrows() == 0 || g == 0 {
            return Err(Error::EmptyDataset);
        }
        if expression.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite expression value".into()));
        }
        let mut seen = vec![false; g];
        for &r in &regulators {
            if r >= g || std::mem::replace(&mut seen[r], true) {
                return Err(Error::InvalidDataset(format!("regulator {r} is out of range or repeated")));
            }
        }
        if regulators.is_empty() {
            return Err(Error::InvalidDataset("no candidate regulators".into()));
        }
        if let Some(edges) = &gold {
            if let Some(e) = edges.iter().find(|(a, b)| *a >= g || *b >= g) {
                return Err(Error::InvalidDataset(format!("gold edge {e:?} names an unknown gene")));
            }
        }
        Ok(GrnProblem {
            expression,
            regulators,
            gold,
        })
    }

    pub fn n_genes(&self) -> usize {
        self.expression.ncols()
    }

    pub fn regulators(&self) -> &[usize] {
        &self.regulators
    }

    pub fn gold(&self) -> Option<&[(usize, usize)]> {
        self.gold.as_deref()
    }

    pub fn expression(&self) -> &Array2<f64> {
        &self.expression
    }

    /// Regulator rows usable for target `g` (every regulator except `g` itself).
    pub fn inputs_for(&self, g: usize) -> Vec<usize> {
        (0..self.regulators.len()).filter(|&j| self.regulators[j] != g).collect()
    }

    /// Regression dataset predicting gene `g` from its candidate regulators.
    pub fn column_dataset(&self, g: usize) -> Result<Dataset> {
        let rows = self.inputs_for(g);
        let x = Array2::from_shape_fn((self.expression.nrows(), rows.len()), |(i, k)| {
            self.expression[[i, self.regulators[rows[k]]]]
        });
        Dataset::new(x, Target::Regression(self.expression.column(g).to_vec()))
    }
}

/// lambda * sum_j ||alpha_{j,.}||_2 for an M x G matrix, with subgradient
/// lambda * alpha / ||row|| (zero for an all-zero row).
pub fn group_penalty(alpha: &Array2<f64>, lambda: f64) -> (f64, Array2<f64>) {
    let mut grad = Array2::zeros(alpha.raw_dim());
    let mut value = 0.0;
    for (j, row) in alpha.outer_iter().enumerate() {
        let norm = row.dot(&row).sqrt();
        value += norm;
        if norm > 0.0 {
            for (g, a) in row.iter().enumerate() {
                grad[[j, g]] = lambda * a / norm;
            }
        }
    }
    (lambda * value, grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub regulator: usize,
    pub target: usize,
    pub weight: f64,
}

/// Every (regulator, target) pair except self-loops, by decreasing weight;
/// ties keep (regulator, target) order.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRanking(pub Vec<Edge>);

impl EdgeRanking {
    pub fn from_alpha(problem: &GrnProblem, alpha: &Array2<f64>) -> Self {
        let mut edges = Vec::new();
        for (j, &reg) in problem.regulators.iter().enumerate() {
            for g in 0..problem.n_genes() {
                if reg != g {
                    edges.push(Edge {
                        regulator: reg,
                        target: g,
                        weight: alpha[[j, g]],
                    });
                }
            }
        }
        edges.sort_by(|a, b| {
            b.weight
                .total_cmp(&a.weight)
                .then(a.regulator.cmp(&b.regulator))
                .then(a.target.cmp(&b.target))
        });
        EdgeRanking(edges)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.0
    }

    /// Average precision against a gold edge set. Gold edges that cannot
    /// appear in the ranking still count as relevant.
    pub fn aupr(&self, gold: &[(usize, usize)]) -> Result<f64> {
        let mut set: Vec<(usize, usize)> = gold.iter().copied().filter(|(a, b)| a != b).collect();
        set.sort_unstable();
        set.dedup();
        average_precision(
            self.0
                .iter()
                .map(|e| set.binary_search(&(e.regulator, e.target)).is_ok()),
            set.len(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrnOutcome {
    /// M x G selection probabilities; entries for self-regulation stay 0.
    pub alpha: Array2<f64>,
    pub ranking: EdgeRanking,
    pub lambda: f64,
    pub selected_restart: usize,
    /// Mean over targets of the late-epoch objective of each restart,
    /// plus the group penalty.
    pub restart_scores: Vec<f64>,
    /// Targets whose training failed in the selected restart, with the reason.
    pub failures: Vec<(usize, String)>,
}

impl GrnOutcome {
    /// Mean over targets of sum_j alpha_{j,g}.
    pub fn mean_column_sum(&self) -> f64 {
        self.alpha.sum() / self.alpha.ncols() as f64
    }

    pub fn active_rows(&self, threshold: f64) -> usize {
        self.alpha
            .outer_iter()
            .filter(|row| row.dot(row).sqrt() > threshold)
            .count()
    }
}

/// Stream for target `g` in restart `restart`. A single-output run with the
/// same stream reproduces the column bit-for-bit when lambda = 0.
pub fn column_stream(seed: u64, restart: usize, g: usize) -> StreamRng {
    rng::stream(seed, ((g as u64) << 32) | (restart as u64 + 1))
}

struct RestartState {
    alpha: Array2<f64>,
    score: f64,
    failures: Vec<(usize, String)>,
}

/// Trains one selection vector per target gene. All targets advance one
/// mini-batch per round; the group subgradient for target g uses row norms
/// frozen at the start of the round plus g's own current values.
pub fn grn_train(
    problem: &GrnProblem,
    learner: &LearnerSpec,
    cfg: &TrainConfig,
    lambda: f64,
) -> Result<GrnOutcome> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig("group coefficient must be finite and non-negative".into()));
    }
    let g_count = problem.n_genes();
    let datasets: Vec<Dataset> = (0..g_count)
        .map(|g| {
            let d = problem.column_dataset(g)?;
            Ok(if cfg.center_target { d.centered().0 } else { d })
        })
        .collect::<Result<_>>()?;
    let inputs: Vec<Vec<usize>> = (0..g_count).map(|g| problem.inputs_for(g)).collect();
    let mut col_cfg = cfg.clone();
    col_cfg.regularizer.lambda_group = 0.0;
    col_cfg.validate(problem.regulators.len().saturating_sub(1).max(1))?;

    let mut states = Vec::with_capacity(cfg.restarts);
    for r in 0..cfg.restarts {
        states.push(grn_restart(problem, learner, &col_cfg, lambda, r, &datasets, &inputs)?);
    }
    let (selected, best) = states
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.score.total_cmp(&b.1.score).then(a.0.cmp(&b.0)))
        .expect("at least one restart");
    let ranking = EdgeRanking::from_alpha(problem, &best.alpha);
    Ok(GrnOutcome {
        alpha: best.alpha.clone(),
        ranking,
        lambda,
        selected_restart: selected,
        restart_scores: states.iter().map(|s| s.score).collect(),
        failures: best.failures.clone(),
    })
}

fn grn_restart(
    problem: &GrnProblem,
    learner: &LearnerSpec,
    cfg: &TrainConfig,
    lambda: f64,
    restart: usize,
    datasets: &[Dataset],
    inputs: &[Vec<usize>],
) -> Result<RestartState> {
    let m = problem.regulators.len();
    let g_count = problem.n_genes();
    let mut runs: Vec<Option<PrsbRun<'_>>> = datasets
        .iter()
        .enumerate()
        .map(|(g, d)| {
            PrsbRun::new(d, *learner, LossSpec::mse(), cfg, column_stream(cfg.seed, restart, g)).map(Some)
        })
        .collect::<Result<_>>()?;
    let mut failures = Vec::new();

    let snapshot = |runs: &[Option<PrsbRun<'_>>], alpha: &mut Array2<f64>| {
        for (g, run) in runs.iter().enumerate() {
            if let Some(run) = run {
                for (k, &j) in inputs[g].iter().enumerate() {
                    alpha[[j, g]] = run.alpha()[k];
                }
            }
        }
    };
    let mut alpha = Array2::zeros((m, g_count));
    snapshot(&runs, &mut alpha);

    for _ in 0..cfg.n_epochs {
        runs.iter_mut().flatten().for_each(|r| r.begin_epoch());
        let n_batches = cfg.n_minibatches();
        for b in 0..n_batches {
            let row_sq: Vec<f64> = alpha.outer_iter().map(|row| row.dot(&row)).collect();
            let frozen = &alpha;
            let results: Vec<Option<String>> = runs
                .par_iter_mut()
                .enumerate()
                .map(|(g, slot)| {
                    let run = slot.as_mut()?;
                    let rows = &inputs[g];
                    let mut penalty = |beta: &[f64], grad: &mut [f64]| -> f64 {
                        if lambda == 0.0 {
                            return 0.0;
                        }
                        let mut value = 0.0;
                        let mut own = vec![false; m];
                        for (k, &j) in rows.iter().enumerate() {
                            own[j] = true;
                            let others = (row_sq[j] - frozen[[j, g]] * frozen[[j, g]]).max(0.0);
                            let norm = (others + beta[k] * beta[k]).sqrt();
                            value += norm;
                            if norm > 0.0 {
                                grad[k] += lambda * beta[k] / norm;
                            }
                        }
                        value += (0..m).filter(|&j| !own[j]).map(|j| row_sq[j].sqrt()).sum::<f64>();
                        lambda * value
                    };
                    match run.run_minibatch(b, &mut penalty) {
                        Ok(_) => None,
                        Err(e) => {
                            *slot = None;
                            Some(e.to_string())
                        }
                    }
                })
                .collect();
            for (g, failure) in results.into_iter().enumerate() {
                if let Some(msg) = failure {
                    failures.push((g, msg));
                }
            }
            snapshot(&runs, &mut alpha);
        }
        runs.iter_mut().flatten().for_each(|r| r.end_epoch());
    }

    let scores: Vec<f64> = runs.iter().flatten().map(|r| r.selection_score()).collect();
    let score = if scores.is_empty() {
        f64::INFINITY
    } else {
        scores.iter().sum::<f64>() / scores.len() as f64
    };
    Ok(RestartState { alpha, score, failures })
}

pub const DEFAULT_LAMBDA_GRID: [f64; 6] = [0.0, 0.002, 0.005, 0.007, 0.01, 0.015];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub chosen: f64,
    /// Outcome for every grid value, in ascending lambda order.
    pub fits: Vec<GrnOutcome>,
}

impl SweepOutcome {
    pub fn chosen_fit(&self) -> &GrnOutcome {
        self.fits
            .iter()
            .find(|f| f.lambda == self.chosen)
            .expect("chosen lambda is on the grid")
    }
}

/// Trains at every grid value and picks the largest lambda whose mean
/// column sum of alpha exceeds 1; if none does, the smallest lambda.
pub fn lambda_sweep(
    problem: &GrnProblem,
    learner: &LearnerSpec,
    cfg: &TrainConfig,
    grid: &[f64],
) -> Result<SweepOutcome> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty lambda grid".into()));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let fits: Vec<GrnOutcome> = grid
        .iter()
        .map(|&l| grn_train(problem, learner, cfg, l))
        .collect::<Result<_>>()?;
    let sums: Vec<f64> = fits.iter().map(GrnOutcome::mean_column_sum).collect();
    let chosen = select_lambda(&grid, &sums);
    Ok(SweepOutcome { chosen, fits })
}

/// Selection rule on an ascending grid with matching mean column sums.
pub fn select_lambda(grid: &[f64], mean_sums: &[f64]) -> f64 {
    grid.iter()
        .zip(mean_sums)
        .rev()
        .find(|(_, &s)| s > 1.0)
        .map_or(grid[0], |(&l, _)| l)
}

/// A modular synthetic network: the first `n_roots` genes are independent
/// N(0, 1) drivers; every other gene responds nonlinearly to
/// `regs_per_gene` distinct drivers plus N(0, 0.1^2) noise. Every gene is a
/// candidate regulator; the gold set holds the planted edges.
pub fn synthetic_network(
    n_genes: usize,
    n_roots: usize,
    regs_per_gene: usize,
    n_samples: usize,
    seed: u64,
) -> Result<GrnProblem> {
    if n_roots >= n_genes || regs_per_gene == 0 || regs_per_gene > n_roots {
        return Err(Error::InvalidConfig(format!(
            "cannot plant {regs_per_gene} regulators per gene from {n_roots} drivers among {n_genes} genes"
        )));
    }
    let mut rng = rng::stream(seed, 0);
    let mut x = Array2::<f64>::zeros((n_samples, n_genes));
    for i in 0..n_samples {
        for r in 0..n_roots {
            x[[i, r]] = StandardNormal.sample(&mut rng);
        }
    }
    let mut gold = Vec::new();
    for g in n_roots..n_genes {
        let regs = index::sample(&mut rng, n_roots, regs_per_gene).into_vec();
        let weights: Vec<f64> = (0..regs_per_gene)
            .map(|_| rng.random_range(1.0..2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        for i in 0..n_samples {
            let mut v = 0.0;
            for (&r, &w) in regs.iter().zip(&weights) {
                v += w * (1.5 * x[[i, r]]).tanh();
            }
            v += x[[i, regs[0]]] * x[[i, regs[1 % regs.len()]]] * 0.5;
            let e: f64 = StandardNormal.sample(&mut rng);
            x[[i, g]] = v + 0.1 * e;
        }
        gold.extend(regs.iter().map(|&r| (r, g)));
    }
    GrnProblem::new(x, (0..n_genes).collect(), Some(gold))
}
