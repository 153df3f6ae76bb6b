use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use prsb::io::{read_delimited, DelimitedOptions, TargetColumn, TaskHint};
use prsb::{Dataset, Standardizer, Target, TaskKind};

use crate::config::Config;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Auto,
    Regression,
    Classification,
}

/// Table inputs shared by `train` and `baseline`.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// Training table: CSV, or tab-separated for .tsv/.tab/.txt files.
    #[arg(long)]
    pub train: PathBuf,
    /// Held-out table with the same columns; enables the test_error metric.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Relevant feature indices (0-based, one per line); enables the aupr metric.
    #[arg(long)]
    pub relevant: Option<PathBuf>,
    /// Target column: 0-based index or header name [default: last column].
    #[arg(long)]
    pub target: Option<String>,
    /// Task type; `auto` picks classification when any label is non-numeric.
    #[arg(long, value_enum)]
    pub task: Option<TaskArg>,
    /// The tables have no header row.
    #[arg(long)]
    pub no_header: bool,
    /// Keep raw feature values instead of z-scoring them with training statistics.
    #[arg(long)]
    pub no_standardize: bool,
}

pub struct Inputs {
    pub name: String,
    pub train: Dataset,
    pub test: Option<Dataset>,
    pub relevant: Option<Vec<usize>>,
}

fn hint(task: TaskArg) -> TaskHint {
    match task {
        TaskArg::Auto => TaskHint::Auto,
        TaskArg::Regression => TaskHint::Regression,
        TaskArg::Classification => TaskHint::Classification,
    }
}

/// `classification_loss` forces a classification parse when the task is
/// left on auto, so numeric labels work with `--loss cross-entropy`.
pub fn load(args: &DataArgs, cfg: &Config, classification_loss: bool) -> Result<Inputs> {
    let mut task = cfg.choice(args.task, "task", TaskArg::Auto)?;
    if task == TaskArg::Auto && classification_loss {
        task = TaskArg::Classification;
    }
    let target = match cfg.opt(args.target.clone(), "target")? {
        None => TargetColumn::Last,
        Some(t) => match t.parse::<usize>() {
            Ok(i) => TargetColumn::Index(i),
            Err(_) => TargetColumn::Name(t),
        },
    };
    let mut opts = DelimitedOptions {
        delimiter: None,
        has_header: !args.no_header,
        target,
        task: hint(task),
    };
    let train = read_delimited(&args.train, &opts)?;
    let m = train.dataset.n_features();

    let test = match &args.test {
        None => None,
        Some(path) => {
            opts.task = match train.dataset.task() {
                TaskKind::Regression => TaskHint::Regression,
                TaskKind::Classification => TaskHint::Classification,
            };
            let t = read_delimited(path, &opts)?;
            if t.dataset.n_features() != m {
                bail!(
                    "{}: {} feature columns, training table has {m}",
                    path.display(),
                    t.dataset.n_features()
                );
            }
            let data = match (&train.class_labels, &t.class_labels) {
                (Some(names), Some(test_names)) => align_labels(&t.dataset, names, test_names)
                    .with_context(|| format!("{}: class labels", path.display()))?,
                _ => t.dataset,
            };
            Some(data)
        }
    };

    let (train_data, test) = if args.no_standardize {
        (train.dataset, test)
    } else {
        let stats = Standardizer::fit(&train.dataset)?;
        let test = test.map(|t| stats.transform(&t)).transpose()?;
        (stats.transform(&train.dataset)?, test)
    };

    let relevant = args.relevant.as_deref().map(|p| read_relevant(p, m)).transpose()?;
    let name = args
        .train
        .file_stem()
        .map_or_else(|| "data".to_string(), |s| s.to_string_lossy().into_owned());
    Ok(Inputs {
        name,
        train: train_data,
        test,
        relevant,
    })
}

/// Re-indexes test labels so that equal label strings share a class index
/// with the training table.
fn align_labels(test: &Dataset, train_names: &[String], test_names: &[String]) -> Result<Dataset> {
    let Target::Classification { labels, .. } = test.target() else {
        return Ok(test.clone());
    };
    let map: Vec<usize> = test_names
        .iter()
        .map(|n| {
            train_names
                .iter()
                .position(|t| t == n)
                .with_context(|| format!("label {n:?} does not occur in the training table"))
        })
        .collect::<Result<_>>()?;
    let target = Target::Classification {
        labels: labels.iter().map(|&l| map[l]).collect(),
        n_classes: train_names.len(),
    };
    Ok(Dataset::new(test.features().clone(), target)?)
}

pub fn read_relevant(path: &Path, m: usize) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<usize>() {
            Ok(j) if j < m => out.push(j),
            _ => bail!("{}:{}: expected a feature index below {m}, found {line:?}", path.display(), i + 1),
        }
    }
    if out.is_empty() {
        bail!("{}: no relevant features listed", path.display());
    }
    Ok(out)
}

pub fn write_relevant(path: &Path, relevant: &[usize]) -> Result<()> {
    let text: String = relevant.iter().map(|j| format!("{j}\n")).collect();
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
