use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use prsb::baselines::{rsb_train, single_model, RsbConfig};
use prsb::eval::{aupr, rank_features, test_error};
use prsb::io::{read_report, write_report, ReportRow};
use prsb::simdata::{generate, SimKind, SimProblemSpec};
use prsb::{rng, LearnerSpec, LossSpec, TrainConfig};
use rayon::prelude::*;

use crate::config::Config;
use crate::train::{LearnerArg, Rows};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Simulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum BenchMethod {
    Single,
    Rsb,
    Prsb,
}

impl BenchMethod {
    fn name(self) -> &'static str {
        match self {
            BenchMethod::Single => "single",
            BenchMethod::Rsb => "rsb",
            BenchMethod::Prsb => "prsb",
        }
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value = "simulated")]
    pub suite: Suite,
    /// Seeds as an inclusive range `a..b` or a comma list.
    #[arg(long, default_value = "0..9")]
    pub seeds: String,
    /// Per-seed checkpoint files and summary.tsv go here. Existing
    /// checkpoints are reused, so an interrupted run resumes.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Comma list of problems [default: hypercube,checkerboard,linear,friedman].
    #[arg(long)]
    pub problems: Option<String>,
    /// Comma list from single, rsb, prsb [default: all].
    #[arg(long)]
    pub methods: Option<String>,
    /// Comma list from tree, knn [default: both].
    #[arg(long)]
    pub learners: Option<String>,
    /// PRSB epochs [default: 200].
    #[arg(long)]
    pub epochs: Option<usize>,
    /// PRSB restarts [default: 20].
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Ensemble size for rsb and prsb [default: 100].
    #[arg(long)]
    pub models: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let text = text.trim();
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().with_context(|| format!("seed range {text:?}"))?;
        let b: u64 = b.trim().parse().with_context(|| format!("seed range {text:?}"))?;
        if b < a {
            bail!("seed range {text:?} is empty");
        }
        (a..=b).collect()
    } else {
        text.split(',')
            .map(|s| s.trim().parse().with_context(|| format!("seed {s:?}")))
            .collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        bail!("no seeds");
    }
    Ok(seeds)
}

fn parse_list<T>(text: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    text.split(',').map(|s| parse(s.trim())).collect()
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    problem: SimKind,
    method: BenchMethod,
    learner: LearnerArg,
    seed: u64,
}

impl Cell {
    fn learner_spec(&self) -> LearnerSpec {
        match self.learner {
            LearnerArg::Tree => LearnerSpec::tree(),
            LearnerArg::Knn => LearnerSpec::knn(),
        }
    }

    fn checkpoint(&self, dir: &Path) -> PathBuf {
        dir.join("cells").join(format!(
            "{}-{}-{}-s{}.csv",
            self.problem,
            self.method.name(),
            self.learner_spec().name(),
            self.seed
        ))
    }
}

fn run_cell(cell: &Cell, tc: &TrainConfig, n_models: usize) -> Result<Vec<ReportRow>> {
    let sim = generate(&SimProblemSpec::new(cell.problem, cell.seed))?.normalized()?;
    let learner = cell.learner_spec();
    let mut rows = Rows::new(
        None,
        cell.seed,
        cell.method.name(),
        learner.name(),
        cell.problem.name(),
    );
    let ensemble = match cell.method {
        BenchMethod::Single => single_model(&learner, &sim.train),
        BenchMethod::Rsb => {
            let rc = RsbConfig {
                n_models,
                ..RsbConfig::default()
            };
            let out = rsb_train(&sim.train, &learner, &rc, &mut rng::stream(cell.seed, 0))?;
            rows.push("k", out.k as f64);
            out.ensemble
        }
        BenchMethod::Prsb => {
            let tc = TrainConfig {
                seed: cell.seed,
                ..tc.clone()
            };
            let out = prsb::train(&sim.train, &learner, &LossSpec::for_task(sim.train.task()), &tc)?;
            let ranking = rank_features(out.alpha.as_slice());
            rows.push("aupr", aupr(&ranking, &sim.relevant, out.alpha.len())?);
            rows.push("sum_alpha", out.alpha.sum());
            out.ensemble
        }
    };
    let preds = ensemble.predict_dataset(&sim.test);
    rows.push("test_error", test_error(&preds, sim.test.target())?);
    Ok(rows.rows)
}

/// Mean and sample standard deviation (n - 1 denominator; 0 for one value).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One line per (problem, method, learner, metric): n, mean, sd.
pub fn summarize(rows: &[ReportRow]) -> String {
    let mut keys: Vec<(String, String, String, String)> = Vec::new();
    for r in rows {
        let key = (r.dataset.clone(), r.method.clone(), r.learner.clone(), r.metric.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut out = String::from("problem\tmethod\tlearner\tmetric\tn\tmean\tsd\n");
    for (problem, method, learner, metric) in keys {
        let values: Vec<f64> = rows
            .iter()
            .filter(|r| r.dataset == problem && r.method == method && r.learner == learner && r.metric == metric)
            .map(|r| r.value)
            .collect();
        let (mean, sd) = mean_sd(&values);
        writeln!(out, "{problem}\t{method}\t{learner}\t{metric}\t{}\t{mean}\t{sd}", values.len())
            .expect("writing to a String");
    }
    out
}

pub fn run(args: &BenchArgs) -> Result<()> {
    let Suite::Simulated = args.suite;
    let cfg = Config::load(args.config.as_deref())?;
    let seeds = parse_seeds(&args.seeds)?;
    let problems = match cfg.opt(args.problems.clone(), "problems")? {
        Some(t) => parse_list(&t, |s| Ok(s.parse::<SimKind>()?))?,
        None => SimKind::ALL.to_vec(),
    };
    let methods = match cfg.opt(args.methods.clone(), "methods")? {
        Some(t) => parse_list(&t, |s| BenchMethod::from_str(s, true).map_err(anyhow::Error::msg))?,
        None => vec![BenchMethod::Single, BenchMethod::Rsb, BenchMethod::Prsb],
    };
    let learners = match cfg.opt(args.learners.clone(), "learners")? {
        Some(t) => parse_list(&t, |s| LearnerArg::from_str(s, true).map_err(anyhow::Error::msg))?,
        None => vec![LearnerArg::Tree, LearnerArg::Knn],
    };
    let d = TrainConfig::default();
    let n_models = cfg.get(args.models, "models", d.n_models)?;
    let tc = TrainConfig {
        n_epochs: cfg.get(args.epochs, "epochs", d.n_epochs)?,
        restarts: cfg.get(args.restarts, "restarts", d.restarts)?,
        n_models,
        ..d
    };

    let mut cells = Vec::new();
    for &problem in &problems {
        for &method in &methods {
            for &learner in &learners {
                for &seed in &seeds {
                    cells.push(Cell {
                        problem,
                        method,
                        learner,
                        seed,
                    });
                }
            }
        }
    }
    std::fs::create_dir_all(args.out_dir.join("cells"))
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    let results: Vec<Result<Vec<ReportRow>>> = cells
        .par_iter()
        .map(|cell| {
            let path = cell.checkpoint(&args.out_dir);
            if path.exists() {
                if let Ok(rows) = read_report(&path) {
                    eprintln!("{}: reusing checkpoint", path.display());
                    return Ok(rows);
                }
            }
            let rows = run_cell(cell, &tc, n_models)
                .with_context(|| format!("{} {} seed {}", cell.problem, cell.method.name(), cell.seed))?;
            // Write then rename so an interrupted write never looks complete.
            let tmp = path.with_extension("csv.tmp");
            write_report(&tmp, &rows)?;
            std::fs::rename(&tmp, &path).with_context(|| format!("renaming {}", tmp.display()))?;
            eprintln!("{}: done", path.display());
            Ok(rows)
        })
        .collect();

    let mut all = Vec::new();
    let mut failed = 0;
    for r in results {
        match r {
            Ok(rows) => all.extend(rows),
            Err(e) => {
                eprintln!("error: {}", crate::describe(&e));
                failed += 1;
            }
        }
    }
    if failed > 0 {
        bail!("{failed} of {} cells failed; summary not written", cells.len());
    }
    let summary = args.out_dir.join("summary.tsv");
    std::fs::write(&summary, summarize(&all)).with_context(|| format!("writing {}", summary.display()))?;
    Ok(())
}
