use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Location, ParseError, Result};
use crate::trainer::TrainReport;

pub const REPORT_HEADER: [&str; 7] = ["run_id", "seed", "method", "learner", "dataset", "metric", "value"];

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub run_id: String,
    pub seed: u64,
    pub method: String,
    pub learner: String,
    pub dataset: String,
    pub metric: String,
    pub value: f64,
}

pub fn write_report(path: impl AsRef<Path>, rows: &[ReportRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::io(path, e.into());
    w.write_record(REPORT_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.run_id.as_str(),
            &r.seed.to_string(),
            &r.method,
            &r.learner,
            &r.dataset,
            &r.metric,
            &r.value.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    super::write_bytes(path, &bytes)
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<ReportRow>> {
    let path = path.as_ref();
    let bytes = super::read_bytes(path)?;
    parse_report(&bytes).map_err(|e| Error::from(e).in_file(path))
}

fn parse_report(bytes: &[u8]) -> Result<Vec<ReportRow>, ParseError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(bytes);
    let mut rows = Vec::new();
    let mut header_seen = false;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(1, |p| p.line() as usize);
            ParseError::at_line(line, None, format!("malformed record: {e}"))
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if !header_seen {
            if rec.iter().ne(REPORT_HEADER) {
                return Err(ParseError::at_line(line, None, "unexpected report header"));
            }
            header_seen = true;
            continue;
        }
        if rec.len() != 7 {
            return Err(ParseError::at_line(line, None, format!("expected 7 fields, found {}", rec.len())));
        }
        let num_err = |c: usize| ParseError::at_line(line, Some(c + 1), format!("malformed number {:?}", &rec[c]));
        rows.push(ReportRow {
            run_id: rec[0].to_string(),
            seed: rec[1].parse().map_err(|_| num_err(1))?,
            method: rec[2].to_string(),
            learner: rec[3].to_string(),
            dataset: rec[4].to_string(),
            metric: rec[5].to_string(),
            value: rec[6].parse().map_err(|_| num_err(6))?,
        });
    }
    if !header_seen {
        return Err(ParseError::new(Location::File, "empty input"));
    }
    Ok(rows)
}

/// Plain-text rendering of a training trace: scalar fields, then one
/// tab-separated section per trace.
pub fn format_train_report(r: &TrainReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "seed\t{}", r.seed);
    let _ = writeln!(s, "eta\t{}", r.eta);
    let _ = writeln!(s, "epochs\t{}", r.n_epochs);
    let _ = writeln!(s, "selected_restart\t{}", r.selected_restart);
    let _ = writeln!(s, "selection_score\t{}", r.selection_score);
    let _ = writeln!(s, "sum_alpha\t{}", r.final_alpha.sum());
    let _ = writeln!(s, "\n[epochs]\nepoch\tobjective");
    for (e, o) in r.epoch_objectives.iter().enumerate() {
        let _ = writeln!(s, "{e}\t{o}");
    }
    let _ = writeln!(s, "\n[minibatches]\nindex\tretrain_step\tsteps\tt_eff\tstop\tfirst_objective\tlast_objective");
    for (i, m) in r.minibatches.iter().enumerate() {
        let _ = writeln!(
            s,
            "{i}\t{}\t{}\t{}\t{:?}\t{}\t{}",
            m.retrain_step,
            m.steps,
            m.t_eff,
            m.stop,
            m.objectives.first().copied().unwrap_or(f64::NAN),
            m.objectives.last().copied().unwrap_or(f64::NAN)
        );
    }
    let _ = writeln!(s, "\n[restarts]\nrestart\tscore\tsum_alpha\tfailure");
    for x in &r.restarts {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}",
            x.restart,
            x.score,
            x.sum_alpha,
            x.failure.as_deref().unwrap_or("")
        );
    }
    s
}

pub fn write_train_report(path: impl AsRef<Path>, r: &TrainReport) -> Result<()> {
    super::write_bytes(path.as_ref(), format_train_report(r).as_bytes())
}
