//! Shared data model: datasets, feature subsets, selection probabilities,
//! predictions and training configuration.

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Regression,
    Classification,
}

impl TaskKind {
    pub fn is_classification(self) -> bool {
        self == TaskKind::Classification
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Regression(Vec<f64>),
    Classification { labels: Vec<usize>, n_classes: usize },
}

impl Target {
    pub fn len(&self) -> usize {
        match self {
            Target::Regression(y) => y.len(),
            Target::Classification { labels, .. } => labels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> TaskKind {
        match self {
            Target::Regression(_) => TaskKind::Regression,
            Target::Classification { .. } => TaskKind::Classification,
        }
    }

    /// Width of a prediction vector: 1 for regression, C for classification.
    pub fn output_dim(&self) -> usize {
        match self {
            Target::Regression(_) => 1,
            Target::Classification { n_classes, .. } => *n_classes,
        }
    }

    pub fn select(&self, rows: &[usize]) -> Target {
        match self {
            Target::Regression(y) => Target::Regression(rows.iter().map(|&i| y[i]).collect()),
            Target::Classification { labels, n_classes } => Target::Classification {
                labels: rows.iter().map(|&i| labels[i]).collect(),
                n_classes: *n_classes,
            },
        }
    }
}

/// N samples by M features plus a target.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    target: Target,
}

impl Dataset {
    pub fn new(features: Array2<f64>, target: Target) -> Result<Self> {
        let (n, m) = features.dim();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if m == 0 {
            return Err(Error::InvalidDataset("no feature columns".into()));
        }
        if target.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: target.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite feature value".into()));
        }
        match &target {
            Target::Regression(y) => {
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidDataset("non-finite target value".into()));
                }
            }
            Target::Classification { labels, n_classes } => {
                if *n_classes == 0 {
                    return Err(Error::InvalidDataset("zero classes".into()));
                }
                if let Some(bad) = labels.iter().find(|&&c| c >= *n_classes) {
                    return Err(Error::InvalidDataset(format!(
                        "class index {bad} out of range for {n_classes} classes"
                    )));
                }
            }
        }
        // Row-major storage lets `row` hand out plain slices.
        let features = features.as_standard_layout().into_owned();
        Ok(Dataset { features, target })
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn task(&self) -> TaskKind {
        self.target.kind()
    }

    pub fn output_dim(&self) -> usize {
        self.target.output_dim()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.n_features();
        let all = self.features.as_slice().expect("standard layout");
        &all[i * m..(i + 1) * m]
    }

    /// Target of row `i` as a real number (class index for classification).
    pub fn target_value(&self, i: usize) -> f64 {
        match &self.target {
            Target::Regression(y) => y[i],
            Target::Classification { labels, .. } => labels[i] as f64,
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), rows),
            target: self.target.select(rows),
        }
    }

    /// Copy with a regression target shifted to zero mean, and the removed
    /// mean. Classification data is returned as is with offset 0.
    pub fn centered(&self) -> (Dataset, f64) {
        match &self.target {
            Target::Regression(y) => {
                let mean = y.iter().sum::<f64>() / y.len() as f64;
                let target = Target::Regression(y.iter().map(|v| v - mean).collect());
                (
                    Dataset {
                        features: self.features.clone(),
                        target,
                    },
                    mean,
                )
            }
            Target::Classification { .. } => (self.clone(), 0.0),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(1), cols),
            target: self.target.clone(),
        }
    }
}

/// Per-column z-score statistics fitted on a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    /// Population (1/N) moments of every column.
    pub fn fit(data: &Dataset) -> Result<Self> {
        let n = data.n_samples();
        if n < 2 {
            return Err(Error::InvalidDataset(
                "standardization needs at least two samples".into(),
            ));
        }
        let x = data.features();
        let mut means = Vec::with_capacity(x.ncols());
        let mut stds = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            means.push(mean);
            stds.push(var.sqrt());
        }
        Ok(Standardizer { means, stds })
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        if data.n_features() != self.means.len() {
            return Err(Error::LengthMismatch {
                expected: self.means.len(),
                actual: data.n_features(),
            });
        }
        let mut x = data.features().clone();
        for (j, mut col) in x.columns_mut().into_iter().enumerate() {
            let (mu, sd) = (self.means[j], self.stds[j]);
            // Constant columns map to zero.
            if sd <= 1e-12 * mu.abs().max(1.0) {
                col.fill(0.0);
            } else {
                col.mapv_inplace(|v| (v - mu) / sd);
            }
        }
        Dataset::new(x, data.target().clone())
    }
}

/// Fits a standardizer on `data` and returns it together with the
/// transformed data.
pub fn normalize(data: &Dataset) -> Result<(Dataset, Standardizer)> {
    let stats = Standardizer::fit(data)?;
    let out = stats.transform(data)?;
    Ok((out, stats))
}

/// A binary mask over the M features.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureSubset {
    mask: Vec<bool>,
    active: Vec<usize>,
}

impl FeatureSubset {
    pub fn from_mask(mask: Vec<bool>) -> Self {
        let active = mask
            .iter()
            .enumerate()
            .filter_map(|(j, &b)| b.then_some(j))
            .collect();
        FeatureSubset { mask, active }
    }

    pub fn from_indices(m: usize, indices: &[usize]) -> Self {
        let mut mask = vec![false; m];
        for &j in indices {
            mask[j] = true;
        }
        Self::from_mask(mask)
    }

    pub fn empty(m: usize) -> Self {
        Self::from_mask(vec![false; m])
    }

    pub fn full(m: usize) -> Self {
        Self::from_mask(vec![true; m])
    }

    /// Subset encoded in the low `m` bits of `bits`.
    pub fn from_bits(m: usize, bits: u64) -> Self {
        Self::from_mask((0..m).map(|j| bits >> j & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, j: usize) -> bool {
        self.mask[j]
    }

    /// Selected feature indices in increasing order.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn count(&self) -> usize {
        self.active.len()
    }

    pub fn hamming(&self, other: &FeatureSubset) -> usize {
        self.mask
            .iter()
            .zip(&other.mask)
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// Per-feature Bernoulli selection probabilities, each in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionProbs(Vec<f64>);

impl SelectionProbs {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if let Some(j) = alpha
            .iter()
            .position(|a| !(a.is_finite() && (0.0..=1.0).contains(a)))
        {
            return Err(Error::InvalidConfig(format!(
                "selection probability {} at index {j} outside [0, 1]",
                alpha[j]
            )));
        }
        Ok(SelectionProbs(alpha))
    }

    pub fn uniform(m: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; m])
    }

    /// Clamps every component into [0, 1].
    pub fn projected(mut alpha: Vec<f64>) -> Self {
        for a in alpha.iter_mut() {
            *a = a.clamp(0.0, 1.0);
        }
        SelectionProbs(alpha)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Expected subset size, E[|z|] under p(z | alpha).
    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Output of a model for one sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Regression(f64),
    Classification(Vec<f64>),
}

impl Prediction {
    pub fn from_raw(task: TaskKind, raw: &[f64]) -> Self {
        match task {
            TaskKind::Regression => Prediction::Regression(raw[0]),
            TaskKind::Classification => Prediction::Classification(raw.to_vec()),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        match self {
            Prediction::Regression(v) => std::slice::from_ref(v),
            Prediction::Classification(p) => p,
        }
    }

    /// Most probable class, ties to the lowest index. Regression values are
    /// returned unchanged.
    pub fn point(&self) -> f64 {
        match self {
            Prediction::Regression(v) => *v,
            Prediction::Classification(p) => argmax(p) as f64,
        }
    }
}

pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = c;
        }
    }
    best
}

/// Fused-lasso grid layout: feature `r * width + c` sits at row r, column c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusedSpec {
    pub height: usize,
    pub width: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegularizerSpec {
    pub lambda_l1: f64,
    pub fused: Option<FusedSpec>,
    /// Row-group coefficient, used only by multi-output network training.
    pub lambda_group: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Ensemble size T.
    pub n_models: usize,
    pub eta: f64,
    pub n_epochs: usize,
    pub minibatch_fraction: f64,
    pub restarts: usize,
    pub regularizer: RegularizerSpec,
    pub max_steps_between_retrain: usize,
    pub teff_retrain_fraction: f64,
    pub seed: u64,
    /// Initial selection probability; `None` means 5 / T.
    pub init_alpha: Option<f64>,
    /// Restart-selection score averages the objective over this many final epochs.
    pub selection_window: usize,
    pub parallel_restarts: bool,
    /// Fit regression models on the mean-removed target. The importance
    /// weights are not normalized, so an intercept far from zero leaks into
    /// every partial derivative; centering keeps that term out.
    pub center_target: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_models: 100,
            eta: 0.1,
            n_epochs: 200,
            minibatch_fraction: 0.10,
            restarts: 20,
            regularizer: RegularizerSpec::default(),
            max_steps_between_retrain: 100,
            teff_retrain_fraction: 0.5,
            seed: 0,
            init_alpha: None,
            selection_window: 50,
            parallel_restarts: false,
            center_target: true,
        }
    }
}

impl TrainConfig {
    pub fn initial_alpha(&self) -> f64 {
        self.init_alpha
            .unwrap_or(5.0 / self.n_models as f64)
            .clamp(0.0, 1.0)
    }

    pub fn n_minibatches(&self) -> usize {
        ((1.0 / self.minibatch_fraction) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.n_models == 0 {
            return bad("ensemble size must be at least 1");
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad("learning rate must be finite and non-negative");
        }
        if self.n_epochs == 0 {
            return bad("at least one epoch is required");
        }
        if !(self.minibatch_fraction > 0.0 && self.minibatch_fraction < 1.0) {
            return bad("mini-batch fraction must lie in (0, 1)");
        }
        if self.restarts == 0 {
            return bad("at least one restart is required");
        }
        if self.max_steps_between_retrain == 0 {
            return bad("max steps between retrains must be at least 1");
        }
        if !(self.teff_retrain_fraction > 0.0 && self.teff_retrain_fraction <= 1.0) {
            return bad("T_eff retrain fraction must lie in (0, 1]");
        }
        let reg = &self.regularizer;
        if reg.lambda_l1 < 0.0 || reg.lambda_group < 0.0 {
            return bad("regularization coefficients must be non-negative");
        }
        if let Some(f) = reg.fused {
            if f.lambda < 0.0 {
                return bad("regularization coefficients must be non-negative");
            }
            if f.height * f.width != n_features {
                return Err(Error::InvalidConfig(format!(
                    "fused grid {}x{} does not cover {n_features} features",
                    f.height, f.width
                )));
            }
        }
        Ok(())
    }
}
