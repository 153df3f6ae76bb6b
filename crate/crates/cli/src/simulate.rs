use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use prsb::io::write_delimited;
use prsb::simdata::{generate, SimKind, SimProblemSpec};
use prsb::Dataset;

use crate::inputs::write_relevant;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// hypercube, checkerboard, linear or friedman.
    #[arg(long)]
    pub problem: SimKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Receives train.csv, test.csv and relevant.txt.
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Class labels are written as `class0`, `class1` so that a default
/// (auto-detecting) read of the table comes back as classification.
pub fn class_names(kind: SimKind) -> Option<Vec<String>> {
    kind.is_classification()
        .then(|| (0..2).map(|c| format!("class{c}")).collect())
}

fn write_table(path: &Path, data: &Dataset, labels: Option<&[String]>) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_delimited(&mut BufWriter::new(file), data, None, labels, b',')
        .with_context(|| format!("writing {}", path.display()))
}

pub fn run(args: &SimulateArgs) -> Result<()> {
    let sim = generate(&SimProblemSpec::new(args.problem, args.seed))?;
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let labels = class_names(args.problem);
    write_table(&args.out_dir.join("train.csv"), &sim.train, labels.as_deref())?;
    write_table(&args.out_dir.join("test.csv"), &sim.test, labels.as_deref())?;
    write_relevant(&args.out_dir.join("relevant.txt"), &sim.relevant)?;
    eprintln!(
        "{}: {} train / {} test rows, {} features -> {}",
        args.problem,
        sim.train.n_samples(),
        sim.test.n_samples(),
        sim.train.n_features(),
        args.out_dir.display()
    );
    Ok(())
}
