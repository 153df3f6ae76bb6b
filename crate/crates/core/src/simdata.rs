//! Seeded generators for four simulated benchmark problems with known
//! relevant features (always the first `n_relevant` columns).

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use ndarray::Array2;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::data::{normalize, Dataset, Standardizer, Target};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

pub const N_TRAIN: usize = 300;
pub const N_TEST: usize = 500;

/// Correlation decay of the Toeplitz covariance used by the correlated problems.
pub const CORRELATION: f64 = 0.9;
/// Feature scale of the Friedman problem.
pub const FRIEDMAN_SCALE: f64 = 0.5 / 3.0;
/// Feature mean of the Friedman problem; centres the mass on [0, 1].
pub const FRIEDMAN_MEAN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimKind {
    Checkerboard,
    Friedman,
    Hypercube,
    Linear,
}

impl SimKind {
    pub const ALL: [SimKind; 4] = [SimKind::Checkerboard, SimKind::Friedman, SimKind::Hypercube, SimKind::Linear];

    /// (total features, relevant features).
    pub fn dims(self) -> (usize, usize) {
        match self {
            SimKind::Checkerboard => (304, 4),
            SimKind::Friedman => (305, 5),
            SimKind::Hypercube => (305, 5),
            SimKind::Linear => (310, 10),
        }
    }

    pub fn is_classification(self) -> bool {
        matches!(self, SimKind::Hypercube | SimKind::Linear)
    }

    pub fn name(self) -> &'static str {
        match self {
            SimKind::Checkerboard => "checkerboard",
            SimKind::Friedman => "friedman",
            SimKind::Hypercube => "hypercube",
            SimKind::Linear => "linear",
        }
    }
}

impl fmt::Display for SimKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SimKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SimKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown problem {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimProblemSpec {
    pub kind: SimKind,
    pub n_features: usize,
    pub n_relevant: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl SimProblemSpec {
    pub fn new(kind: SimKind, seed: u64) -> Self {
        let (m, rel) = kind.dims();
        SimProblemSpec {
            kind,
            n_features: m,
            n_relevant: rel,
            n_train: N_TRAIN,
            n_test: N_TEST,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if (self.n_features, self.n_relevant) != self.kind.dims() {
            return Err(Error::InvalidConfig(format!(
                "{} uses {:?} (features, relevant), got ({}, {})",
                self.kind,
                self.kind.dims(),
                self.n_features,
                self.n_relevant
            )));
        }
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::InvalidConfig("train and test sizes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimData {
    pub train: Dataset,
    pub test: Dataset,
    pub relevant: Vec<usize>,
}

impl SimData {
    /// Standardizes features with statistics fitted on the training split.
    pub fn normalized(&self) -> Result<SimData> {
        let (train, scaler) = normalize(&self.train)?;
        let test = scaler.transform(&self.test)?;
        Ok(SimData {
            train,
            test,
            relevant: self.relevant.clone(),
        })
    }

    pub fn scaler(&self) -> Result<Standardizer> {
        Standardizer::fit(&self.train)
    }
}

/// Noise-free part of a regression response.
pub fn checkerboard_response(x: &[f64]) -> f64 {
    2.0 * x[0] * x[1] + 2.0 * x[2] * x[3]
}

pub fn friedman_response(x: &[f64]) -> f64 {
    10.0 * (std::f64::consts::PI * x[0] * x[1]).sin()
        + 20.0 * (x[2] - 0.5).powi(2)
        + 10.0 * x[3]
        + 5.0 * x[4]
}

/// Lower Cholesky factor of the Toeplitz matrix rho^|i-j|.
pub fn toeplitz_cholesky(m: usize, rho: f64) -> DMatrix<f64> {
    let sigma = DMatrix::from_fn(m, m, |i, j| rho.powi((i as i32 - j as i32).abs()));
    sigma
        .cholesky()
        .expect("Toeplitz correlation with |rho| < 1 is positive definite")
        .l()
}

fn correlated_gaussians(n: usize, m: usize, scale: f64, mean: f64, rng: &mut StreamRng) -> Array2<f64> {
    let l = toeplitz_cholesky(m, CORRELATION);
    let mut x = Array2::zeros((n, m));
    let mut g = vec![0.0; m];
    for i in 0..n {
        g.iter_mut().for_each(|v| *v = StandardNormal.sample(rng));
        for r in 0..m {
            let dot: f64 = (0..=r).map(|c| l[(r, c)] * g[c]).sum();
            x[[i, r]] = mean + scale * dot;
        }
    }
    x
}

fn split(x: Array2<f64>, target: Target, n_train: usize) -> Result<(Dataset, Dataset)> {
    let n = x.nrows();
    let train_rows: Vec<usize> = (0..n_train).collect();
    let test_rows: Vec<usize> = (n_train..n).collect();
    let all = Dataset::new(x, target)?;
    Ok((all.select_rows(&train_rows), all.select_rows(&test_rows)))
}

/// Draws the train and test splits jointly from one seeded stream.
pub fn generate(spec: &SimProblemSpec) -> Result<SimData> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, 0);
    let n = spec.n_train + spec.n_test;
    let m = spec.n_features;
    let (x, target) = match spec.kind {
        SimKind::Checkerboard => {
            let x = correlated_gaussians(n, m, 1.0, 0.0, &mut rng);
            let y = (0..n)
                .map(|i| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    checkerboard_response(x.row(i).as_slice().unwrap()) + e
                })
                .collect();
            (x, Target::Regression(y))
        }
        SimKind::Friedman => {
            let x = correlated_gaussians(n, m, FRIEDMAN_SCALE, FRIEDMAN_MEAN, &mut rng);
            let y = (0..n)
                .map(|i| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    friedman_response(x.row(i).as_slice().unwrap()) + 0.1 * e
                })
                .collect();
            (x, Target::Regression(y))
        }
        SimKind::Hypercube => hypercube(n, m, spec.n_relevant, &mut rng),
        SimKind::Linear => linear(n, m, spec.n_relevant, &mut rng),
    };
    let (train, test) = split(x, target, spec.n_train)?;
    Ok(SimData {
        train,
        test,
        relevant: (0..spec.n_relevant).collect(),
    })
}

/// Two clusters per class, each a unit-variance Gaussian around a distinct
/// vertex of the {-1, +1}^d hypercube; remaining columns are N(0, 1).
fn hypercube(n: usize, m: usize, d: usize, rng: &mut StreamRng) -> (Array2<f64>, Target) {
    const CLUSTERS: usize = 4;
    let vertices: Vec<Vec<f64>> = index::sample(rng, 1 << d, CLUSTERS)
        .into_iter()
        .map(|v| (0..d).map(|b| if v >> b & 1 == 1 { 1.0 } else { -1.0 }).collect())
        .collect();
    // Even split over clusters, remainder to the first ones; rows shuffled
    // so both splits see every cluster.
    let mut cluster_of: Vec<usize> = (0..n).map(|i| i * CLUSTERS / n).collect();
    cluster_of.shuffle(rng);
    let mut x = Array2::zeros((n, m));
    let mut labels = Vec::with_capacity(n);
    for (i, &k) in cluster_of.iter().enumerate() {
        for c in 0..m {
            let e: f64 = StandardNormal.sample(rng);
            x[[i, c]] = if c < d { vertices[k][c] + e } else { e };
        }
        labels.push(k % 2);
    }
    (x, Target::Classification { labels, n_classes: 2 })
}

/// y = sum_k w_k x_k over the relevant columns with w_k ~ U(0, 100),
/// thresholded at the median of the drawn pool.
fn linear(n: usize, m: usize, d: usize, rng: &mut StreamRng) -> (Array2<f64>, Target) {
    let w: Vec<f64> = Uniform::new(0.0, 100.0).unwrap().sample_iter(&mut *rng).take(d).collect();
    let x = Array2::from_shape_fn((n, m), |_| rng.sample::<f64, _>(StandardNormal));
    let y: Vec<f64> = (0..n)
        .map(|i| (0..d).map(|k| w[k] * x[[i, k]]).sum())
        .collect();
    let mut sorted = y.clone();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 0 {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    } else {
        sorted[n / 2]
    };
    let labels = y.iter().map(|&v| usize::from(v > median)).collect();
    (x, Target::Classification { labels, n_classes: 2 })
}
