use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use prsb::io::{read_edges, read_matrix, read_names, write_edge_ranking, write_report};
use prsb::network::{lambda_sweep, GrnProblem, DEFAULT_LAMBDA_GRID};
use prsb::TrainConfig;

use crate::config::Config;
use crate::train::{LearnerArgs, Rows};

#[derive(Debug, Args)]
pub struct GrnArgs {
    /// Samples x genes expression matrix; the header row names the genes.
    #[arg(long)]
    pub expression: PathBuf,
    /// The expression matrix has no header; genes are named G1, G2, ...
    #[arg(long)]
    pub no_header: bool,
    /// Candidate regulator names, one per line [default: every gene].
    #[arg(long)]
    pub regulators: Option<PathBuf>,
    /// Gold edges as regulator<TAB>target<TAB>{0,1}; enables the aupr metric.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Comma-separated group-penalty values [default: 0,0.002,0.005,0.007,0.01,0.015].
    #[arg(long)]
    pub lambda_grid: Option<String>,
    /// Ranked edge list regulator<TAB>target<TAB>weight for the chosen lambda.
    #[arg(long)]
    pub edges_out: Option<PathBuf>,
    #[arg(long)]
    pub report_out: Option<PathBuf>,
    #[arg(long)]
    pub run_id: Option<String>,
    #[command(flatten)]
    pub learner: LearnerArgs,
    /// [default: 0.1]
    #[arg(long)]
    pub eta: Option<f64>,
    /// [default: 200]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Network-level restarts [default: 20].
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Ensemble size per target gene [default: 100].
    #[arg(long)]
    pub models: Option<usize>,
    /// Keep raw expression values instead of z-scoring every gene.
    #[arg(long)]
    pub no_standardize: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn parse_lambda_grid(text: &str) -> Result<Vec<f64>> {
    let grid: Vec<f64> = text
        .split(',')
        .map(|s| {
            let s = s.trim();
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
                _ => bail!("lambda grid entry {s:?} is not a non-negative number"),
            }
        })
        .collect::<Result<_>>()?;
    if grid.is_empty() {
        bail!("empty lambda grid");
    }
    Ok(grid)
}

fn index_of(names: &[String], name: &str, what: &str) -> Result<usize> {
    names
        .iter()
        .position(|n| n == name)
        .with_context(|| format!("{what} {name:?} is not a gene of the expression matrix"))
}

pub fn run(args: &GrnArgs) -> Result<()> {
    let cfg = Config::load(args.config.as_deref())?;
    let (header, mut x) = read_matrix(&args.expression, !args.no_header)?;
    let genes: Vec<String> = header.unwrap_or_else(|| (1..=x.ncols()).map(|g| format!("G{g}")).collect());
    if !args.no_standardize {
        for mut col in x.columns_mut() {
            let n = col.len() as f64;
            let mean = col.sum() / n;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            if sd > 0.0 {
                col.mapv_inplace(|v| (v - mean) / sd);
            } else {
                col.fill(0.0);
            }
        }
    }

    let regulators = match &args.regulators {
        None => (0..genes.len()).collect(),
        Some(p) => read_names(p)?
            .iter()
            .map(|n| index_of(&genes, n, "regulator"))
            .collect::<Result<Vec<_>>>()
            .with_context(|| p.display().to_string())?,
    };
    let gold = match &args.gold {
        None => None,
        Some(p) => Some(
            read_edges(p)?
                .iter()
                .map(|(a, b)| Ok((index_of(&genes, a, "regulator")?, index_of(&genes, b, "target")?)))
                .collect::<Result<Vec<_>>>()
                .with_context(|| p.display().to_string())?,
        ),
    };
    let problem = GrnProblem::new(x, regulators, gold)?;

    let learner = args.learner.resolve(&cfg)?;
    let d = TrainConfig::default();
    let tc = TrainConfig {
        eta: cfg.get(args.eta, "eta", d.eta)?,
        n_epochs: cfg.get(args.epochs, "epochs", d.n_epochs)?,
        restarts: cfg.get(args.restarts, "restarts", d.restarts)?,
        n_models: cfg.get(args.models, "models", d.n_models)?,
        seed: cfg.get(args.seed, "seed", d.seed)?,
        ..d
    };
    let grid = match cfg.opt(args.lambda_grid.clone(), "lambda-grid")? {
        Some(text) => parse_lambda_grid(&text)?,
        None => DEFAULT_LAMBDA_GRID.to_vec(),
    };

    let sweep = lambda_sweep(&problem, &learner, &tc, &grid)?;
    let dataset = args
        .expression
        .file_stem()
        .map_or_else(|| "expression".into(), |s| s.to_string_lossy().into_owned());
    let mut rows = Rows::new(args.run_id.as_deref(), tc.seed, "prsb-grn", learner.name(), &dataset);
    for fit in &sweep.fits {
        let l = fit.lambda;
        eprintln!(
            "lambda {l}: mean column sum {:.3}, {} active regulators, {} failed targets",
            fit.mean_column_sum(),
            fit.active_rows(1e-3),
            fit.failures.len()
        );
        rows.push(format!("mean_column_sum@{l}"), fit.mean_column_sum());
        rows.push(format!("active_rows@{l}"), fit.active_rows(1e-3) as f64);
        if let Some(g) = problem.gold() {
            rows.push(format!("aupr@{l}"), fit.ranking.aupr(g)?);
        }
    }
    let chosen = sweep.chosen_fit();
    eprintln!("chose lambda {}", sweep.chosen);
    rows.push("lambda", sweep.chosen);
    if let Some(g) = problem.gold() {
        rows.push("aupr", chosen.ranking.aupr(g)?);
    }

    if let Some(p) = &args.edges_out {
        let file = File::create(p).with_context(|| format!("creating {}", p.display()))?;
        let mut w = BufWriter::new(file);
        write_edge_ranking(&mut w, &chosen.ranking, &genes)
            .and_then(|_| w.flush())
            .with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &args.report_out {
        write_report(p, &rows.rows)?;
    }
    Ok(())
}
