use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use prsb::baselines::{eda_rank, rsb_train, single_model, EdaConfig, RsbConfig};
use prsb::eval::{aupr, rank_features, test_error};
use prsb::io::{write_alpha, write_report, write_train_report, ReportRow};
use prsb::{rng, Dataset, Ensemble, FusedSpec, LearnerSpec, LossSpec, SelectionProbs, TrainConfig, TrainReport};

use crate::config::Config;
use crate::inputs::{self, DataArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LearnerArg {
    Tree,
    Knn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    /// Squared error for regression, cross-entropy for classification.
    Auto,
    Mse,
    CrossEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Rsb,
    Eda,
    Single,
}

#[derive(Debug, Args)]
pub struct LearnerArgs {
    /// Base learner [default: tree].
    #[arg(long, value_enum)]
    pub learner: Option<LearnerArg>,
    /// Neighbours for the knn learner [default: 5].
    #[arg(long)]
    pub k: Option<usize>,
}

impl LearnerArgs {
    pub fn resolve(&self, cfg: &Config) -> Result<LearnerSpec> {
        let learner = cfg.choice(self.learner, "learner", LearnerArg::Tree)?;
        let k = cfg.get(self.k, "k", 5usize)?;
        if k == 0 {
            bail!("k must be at least 1");
        }
        Ok(match learner {
            LearnerArg::Tree => LearnerSpec::tree(),
            LearnerArg::Knn => LearnerSpec::Knn { k },
        })
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the selection probabilities here, one per line.
    #[arg(long)]
    pub alpha_out: Option<PathBuf>,
    /// Write metrics as CSV (run_id, seed, method, learner, dataset, metric, value).
    #[arg(long)]
    pub report_out: Option<PathBuf>,
    /// Run identifier for report rows [default: method-learner-dataset-s<seed>].
    #[arg(long)]
    pub run_id: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    /// Loss minimized over the selection probabilities [default: auto].
    #[arg(long, value_enum)]
    pub loss: Option<LossArg>,
    /// Projected-gradient learning rate [default: 0.1].
    #[arg(long)]
    pub eta: Option<f64>,
    /// Passes over the training data [default: 200].
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Independent restarts; the lowest late-epoch objective wins [default: 20].
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Ensemble size T [default: 100].
    #[arg(long)]
    pub models: Option<usize>,
    /// Mini-batch size as a fraction of the training rows [default: 0.1].
    #[arg(long)]
    pub minibatch_fraction: Option<f64>,
    /// L1 penalty on the selection probabilities [default: 0].
    #[arg(long)]
    pub lambda_l1: Option<f64>,
    /// Feature grid HxW (row-major) for the total-variation penalty.
    #[arg(long)]
    pub fused: Option<String>,
    /// Total-variation penalty over 4-neighbours of the --fused grid [default: 0].
    #[arg(long)]
    pub lambda_fused: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the full optimization trace (epochs, mini-batches, restarts) here.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
    /// Run restarts on the worker pool.
    #[arg(long)]
    pub parallel_restarts: bool,
    /// Suppress the per-epoch progress lines on stderr.
    #[arg(long)]
    pub quiet: bool,
    /// Flat key = value file with defaults for any of the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Ensemble size for rsb [default: 100].
    #[arg(long)]
    pub models: Option<usize>,
    /// Cross-validation folds for rsb and eda [default: 10].
    #[arg(long)]
    pub cv_folds: Option<usize>,
    /// Independent eda runs [default: 20].
    #[arg(long)]
    pub restarts: Option<usize>,
    /// eda population size [default: 100].
    #[arg(long)]
    pub population: Option<usize>,
    /// eda iteration cap [default: 100].
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn parse_grid(text: &str) -> Result<(usize, usize)> {
    let (h, w) = text
        .split_once(['x', 'X'])
        .with_context(|| format!("grid {text:?} is not of the form HxW"))?;
    let h: usize = h.trim().parse().with_context(|| format!("grid height in {text:?}"))?;
    let w: usize = w.trim().parse().with_context(|| format!("grid width in {text:?}"))?;
    Ok((h, w))
}

pub fn train_config(args: &TrainArgs, cfg: &Config) -> Result<TrainConfig> {
    let d = TrainConfig::default();
    let mut tc = TrainConfig {
        n_models: cfg.get(args.models, "models", d.n_models)?,
        eta: cfg.get(args.eta, "eta", d.eta)?,
        n_epochs: cfg.get(args.epochs, "epochs", d.n_epochs)?,
        minibatch_fraction: cfg.get(args.minibatch_fraction, "minibatch-fraction", d.minibatch_fraction)?,
        restarts: cfg.get(args.restarts, "restarts", d.restarts)?,
        seed: cfg.get(args.seed, "seed", d.seed)?,
        parallel_restarts: args.parallel_restarts,
        ..d
    };
    tc.regularizer.lambda_l1 = cfg.get(args.lambda_l1, "lambda-l1", 0.0)?;
    let lambda_fused = cfg.get(args.lambda_fused, "lambda-fused", 0.0)?;
    match cfg.opt(args.fused.clone(), "fused")? {
        Some(grid) => {
            let (height, width) = parse_grid(&grid)?;
            tc.regularizer.fused = Some(FusedSpec {
                height,
                width,
                lambda: lambda_fused,
            });
        }
        None if lambda_fused != 0.0 => bail!("--lambda-fused needs a --fused HxW grid"),
        None => {}
    }
    Ok(tc)
}

fn loss_spec(arg: LossArg, data: &Dataset) -> LossSpec {
    match arg {
        LossArg::Auto => LossSpec::for_task(data.task()),
        LossArg::Mse => LossSpec::mse(),
        LossArg::CrossEntropy => LossSpec::cross_entropy(),
    }
}

/// Accumulates report rows that share everything but the metric.
pub struct Rows {
    pub run_id: String,
    pub seed: u64,
    pub method: String,
    pub learner: String,
    pub dataset: String,
    pub rows: Vec<ReportRow>,
}

impl Rows {
    pub fn new(run_id: Option<&str>, seed: u64, method: &str, learner: &str, dataset: &str) -> Self {
        let run_id = run_id.map_or_else(|| format!("{method}-{learner}-{dataset}-s{seed}"), str::to_string);
        Rows {
            run_id,
            seed,
            method: method.into(),
            learner: learner.into(),
            dataset: dataset.into(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, metric: impl Into<String>, value: f64) {
        self.rows.push(ReportRow {
            run_id: self.run_id.clone(),
            seed: self.seed,
            method: self.method.clone(),
            learner: self.learner.clone(),
            dataset: self.dataset.clone(),
            metric: metric.into(),
            value,
        });
    }
}

fn eval_ensemble(rows: &mut Rows, ensemble: &Ensemble, test: Option<&Dataset>) -> Result<()> {
    if let Some(test) = test {
        let preds = ensemble.predict_dataset(test);
        rows.push("test_error", test_error(&preds, test.target())?);
    }
    Ok(())
}

fn push_aupr(rows: &mut Rows, alpha: &SelectionProbs, relevant: Option<&[usize]>) -> Result<()> {
    if let Some(rel) = relevant {
        let ranking = rank_features(alpha.as_slice());
        rows.push("aupr", aupr(&ranking, rel, alpha.len())?);
    }
    Ok(())
}

fn write_outputs(out: &OutputArgs, alpha: &SelectionProbs, rows: &Rows) -> Result<()> {
    if let Some(p) = &out.alpha_out {
        write_alpha(p, alpha)?;
    }
    if let Some(p) = &out.report_out {
        write_report(p, &rows.rows)?;
    }
    Ok(())
}

fn progress(report: &TrainReport) {
    let per_epoch = report.t_eff_trace.len() / report.epoch_objectives.len().max(1);
    for (e, obj) in report.epoch_objectives.iter().enumerate() {
        let teff = &report.t_eff_trace[e * per_epoch..((e + 1) * per_epoch).min(report.t_eff_trace.len())];
        let mean = teff.iter().sum::<f64>() / teff.len().max(1) as f64;
        eprintln!("epoch {:>4}  objective {obj:.6}  mean T_eff {mean:.2}", e + 1);
    }
    for r in &report.restarts {
        match &r.failure {
            None => eprintln!("restart {:>3}  score {:.6}  sum alpha {:.3}", r.restart, r.score, r.sum_alpha),
            Some(f) => eprintln!("restart {:>3}  failed: {f}", r.restart),
        }
    }
    eprintln!("selected restart {}", report.selected_restart);
}

pub fn run_train(args: &TrainArgs) -> Result<()> {
    let cfg = Config::load(args.config.as_deref())?;
    let loss_arg = cfg.choice(args.loss, "loss", LossArg::Auto)?;
    let data = inputs::load(&args.data, &cfg, loss_arg == LossArg::CrossEntropy)?;
    let learner = args.learner.resolve(&cfg)?;
    let tc = train_config(args, &cfg)?;
    let loss = loss_spec(loss_arg, &data.train);

    let out = prsb::train(&data.train, &learner, &loss, &tc)?;
    if !args.quiet {
        progress(&out.report);
    }

    let mut rows = Rows::new(args.out.run_id.as_deref(), tc.seed, "prsb", learner.name(), &data.name);
    eval_ensemble(&mut rows, &out.ensemble, data.test.as_ref())?;
    push_aupr(&mut rows, &out.alpha, data.relevant.as_deref())?;
    rows.push("sum_alpha", out.alpha.sum());
    rows.push("selection_score", out.report.selection_score);
    rows.push("selected_restart", out.report.selected_restart as f64);
    rows.push("eta", tc.eta);
    rows.push("epochs", tc.n_epochs as f64);
    write_outputs(&args.out, &out.alpha, &rows)?;
    if let Some(p) = &args.trace_out {
        write_train_report(p, &out.report)?;
    }
    Ok(())
}

pub fn run_baseline(args: &BaselineArgs) -> Result<()> {
    let cfg = Config::load(args.config.as_deref())?;
    let data = inputs::load(&args.data, &cfg, false)?;
    let learner = args.learner.resolve(&cfg)?;
    let method = cfg.choice(args.method, "method", MethodArg::Single)?;
    let seed = cfg.get(args.seed, "seed", 0u64)?;
    let m = data.train.n_features();
    let mut rng = rng::stream(seed, 0);
    let name = method.to_possible_value().expect("no skipped variants").get_name().to_string();
    let mut rows = Rows::new(args.out.run_id.as_deref(), seed, &name, learner.name(), &data.name);

    let alpha = match method {
        MethodArg::Single => {
            let ensemble = single_model(&learner, &data.train);
            eval_ensemble(&mut rows, &ensemble, data.test.as_ref())?;
            SelectionProbs::uniform(m, 1.0)?
        }
        MethodArg::Rsb => {
            let d = RsbConfig::default();
            let rc = RsbConfig {
                n_models: cfg.get(args.models, "models", d.n_models)?,
                cv_folds: cfg.get(args.cv_folds, "cv-folds", d.cv_folds)?,
                ..d
            };
            let out = rsb_train(&data.train, &learner, &rc, &mut rng)?;
            eprintln!("rsb: chose K = {} of {m}", out.k);
            rows.push("k", out.k as f64);
            for (k, e) in &out.cv_errors {
                rows.push(format!("cv_error_k{k}"), *e);
            }
            eval_ensemble(&mut rows, &out.ensemble, data.test.as_ref())?;
            SelectionProbs::uniform(m, out.k as f64 / m as f64)?
        }
        MethodArg::Eda => {
            let d = EdaConfig::default();
            let population = cfg.get(args.population, "population", d.population)?;
            let ec = EdaConfig {
                restarts: cfg.get(args.restarts, "restarts", d.restarts)?,
                population,
                // The elite stays half the population, as in the default 50 of 100.
                elite: (population / 2).max(1),
                max_iterations: cfg.get(args.max_iterations, "max-iterations", d.max_iterations)?,
                cv_folds: cfg.get(args.cv_folds, "cv-folds", d.cv_folds)?,
                ..d
            };
            let out = eda_rank(&data.train, &learner, &ec, &mut rng)?;
            let run = &out.runs[out.selected_restart];
            eprintln!(
                "eda: restart {} stopped after {} iterations",
                out.selected_restart,
                out.stop_iteration()
            );
            rows.push("stop_iteration", out.stop_iteration() as f64);
            rows.push("cv_error", run.final_error);
            rows.push("selected_restart", out.selected_restart as f64);
            push_aupr(&mut rows, &out.alpha, data.relevant.as_deref())?;
            out.alpha
        }
    };
    rows.push("sum_alpha", alpha.sum());
    write_outputs(&args.out, &alpha, &rows)
}
