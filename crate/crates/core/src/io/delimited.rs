use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::data::{Dataset, Target};
use crate::error::{Error, Location, ParseError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum TargetColumn {
    #[default]
    Last,
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TaskHint {
    /// Classification when any target value is non-numeric.
    #[default]
    Auto,
    Regression,
    Classification,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelimitedOptions {
    /// `None` picks tab for `.tsv`/`.tab`/`.txt` files and comma otherwise.
    pub delimiter: Option<u8>,
    pub has_header: bool,
    pub target: TargetColumn,
    pub task: TaskHint,
}

impl Default for DelimitedOptions {
    fn default() -> Self {
        DelimitedOptions {
            delimiter: None,
            has_header: true,
            target: TargetColumn::Last,
            task: TaskHint::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub dataset: Dataset,
    pub feature_names: Vec<String>,
    pub target_name: String,
    /// Original label of every class index, for classification targets.
    pub class_labels: Option<Vec<String>>,
}

pub fn delimiter_for(path: &Path) -> u8 {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("tsv" | "tab" | "txt") => b'\t',
        _ => b',',
    }
}

struct Records {
    header: Option<Vec<String>>,
    rows: Vec<(usize, Vec<String>)>,
    width: usize,
}

fn records(bytes: &[u8], delimiter: u8, has_header: bool) -> Result<Records, ParseError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .from_reader(bytes);
    let mut header = None;
    let mut rows = Vec::new();
    let mut width = None;
    let mut record = csv::ByteRecord::new();
    loop {
        let more = rdr.read_byte_record(&mut record).map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            ParseError::at_line(line.max(1), None, format!("malformed record: {e}"))
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line() as usize);
        let fields: Vec<String> = record
            .iter()
            .enumerate()
            .map(|(c, f)| {
                std::str::from_utf8(f)
                    .map(|s| s.trim().to_string())
                    .map_err(|_| ParseError::at_line(line, Some(c + 1), "field is not valid UTF-8"))
            })
            .collect::<Result<_, _>>()?;
        if fields.len() == 1 && fields[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(ParseError::at_line(
                    line,
                    None,
                    format!("ragged row: expected {w} fields, found {}", fields.len()),
                ))
            }
            _ => {}
        }
        if has_header && header.is_none() {
            header = Some(fields);
        } else {
            rows.push((line, fields));
        }
    }
    let Some(width) = width else {
        return Err(ParseError::new(Location::File, "empty input"));
    };
    if rows.is_empty() {
        return Err(ParseError::new(Location::File, "no data rows"));
    }
    Ok(Records { header, rows, width })
}

fn number(field: &str, line: usize, col: usize) -> Result<f64, ParseError> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(ParseError::at_line(line, Some(col + 1), format!("non-finite value {field:?}"))),
        Err(_) => Err(ParseError::at_line(line, Some(col + 1), format!("malformed number {field:?}"))),
    }
}

/// Parses a delimited table into a dataset. Class labels are mapped to dense
/// indices in sorted order: numerically when every label is a number,
/// lexicographically otherwise.
pub fn parse_delimited(bytes: &[u8], delimiter: u8, opts: &DelimitedOptions) -> Result<Table> {
    let rec = records(bytes, delimiter, opts.has_header)?;
    let w = rec.width;
    if w < 2 {
        return Err(ParseError::at_line(1, None, "need at least one feature and one target column").into());
    }
    let tcol = match &opts.target {
        TargetColumn::Last => w - 1,
        TargetColumn::Index(i) if *i < w => *i,
        TargetColumn::Index(i) => {
            return Err(Error::InvalidConfig(format!("target column {i} but rows have {w} fields")))
        }
        TargetColumn::Name(name) => rec
            .header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| Error::InvalidConfig(format!("no column named {name:?}")))?,
    };
    let names: Vec<String> = match &rec.header {
        Some(h) => h.clone(),
        None => (0..w).map(|c| if c == tcol { "y".into() } else { format!("x{c}") }).collect(),
    };
    let feature_cols: Vec<usize> = (0..w).filter(|&c| c != tcol).collect();

    let n = rec.rows.len();
    let mut x = Array2::zeros((n, w - 1));
    for (i, (line, fields)) in rec.rows.iter().enumerate() {
        for (k, &c) in feature_cols.iter().enumerate() {
            x[[i, k]] = number(&fields[c], *line, c)?;
        }
    }
    let raw: Vec<&str> = rec.rows.iter().map(|(_, f)| f[tcol].as_str()).collect();
    let numeric: Vec<Option<f64>> = raw.iter().map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite())).collect();
    let classify = match opts.task {
        TaskHint::Classification => true,
        TaskHint::Regression => false,
        TaskHint::Auto => numeric.iter().any(Option::is_none),
    };
    let (target, class_labels) = if classify {
        let mut labels: Vec<&str> = raw.clone();
        if numeric.iter().all(Option::is_some) {
            labels.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()).then(a.cmp(b)));
        } else {
            labels.sort_unstable();
        }
        labels.dedup();
        let idx: Vec<usize> = raw.iter().map(|s| labels.iter().position(|l| l == s).unwrap()).collect();
        let names: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        (
            Target::Classification {
                labels: idx,
                n_classes: names.len(),
            },
            Some(names),
        )
    } else {
        let y = rec
            .rows
            .iter()
            .map(|(line, f)| number(&f[tcol], *line, tcol))
            .collect::<Result<Vec<f64>, _>>()?;
        (Target::Regression(y), None)
    };
    Ok(Table {
        dataset: Dataset::new(x, target)?,
        feature_names: feature_cols.iter().map(|&c| names[c].clone()).collect(),
        target_name: names[tcol].clone(),
        class_labels,
    })
}

pub fn read_delimited(path: impl AsRef<Path>, opts: &DelimitedOptions) -> Result<Table> {
    let path = path.as_ref();
    let bytes = super::read_bytes(path)?;
    let d = opts.delimiter.unwrap_or_else(|| delimiter_for(path));
    parse_delimited(&bytes, d, opts).map_err(|e| e.in_file(path))
}

/// A purely numeric table (e.g. an expression matrix) and its header.
pub fn parse_matrix(bytes: &[u8], delimiter: u8, has_header: bool) -> Result<(Option<Vec<String>>, Array2<f64>)> {
    let rec = records(bytes, delimiter, has_header)?;
    let mut x = Array2::zeros((rec.rows.len(), rec.width));
    for (i, (line, fields)) in rec.rows.iter().enumerate() {
        for (c, f) in fields.iter().enumerate() {
            x[[i, c]] = number(f, *line, c)?;
        }
    }
    Ok((rec.header, x))
}

pub fn read_matrix(path: impl AsRef<Path>, has_header: bool) -> Result<(Option<Vec<String>>, Array2<f64>)> {
    let path = path.as_ref();
    let bytes = super::read_bytes(path)?;
    parse_matrix(&bytes, delimiter_for(path), has_header).map_err(|e| e.in_file(path))
}

/// Writes features then target, with a header row. Values use the shortest
/// representation that parses back to the same float.
pub fn write_delimited(
    out: &mut impl Write,
    data: &Dataset,
    feature_names: Option<&[String]>,
    class_labels: Option<&[String]>,
    delimiter: u8,
) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(out);
    let m = data.n_features();
    let mut header: Vec<String> = match feature_names {
        Some(n) => n.to_vec(),
        None => (0..m).map(|j| format!("x{j}")).collect(),
    };
    header.push("y".into());
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(m + 1);
    for i in 0..data.n_samples() {
        row.clear();
        row.extend(data.row(i).iter().map(|v| v.to_string()));
        row.push(match data.target() {
            Target::Regression(y) => y[i].to_string(),
            Target::Classification { labels, .. } => match class_labels {
                Some(names) => names[labels[i]].clone(),
                None => labels[i].to_string(),
            },
        });
        w.write_record(&row)?;
    }
    w.flush()
}
