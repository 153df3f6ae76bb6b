use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use crate::error::{Location, ParseError, Result};
use crate::network::EdgeRanking;

fn lines(bytes: &[u8]) -> Result<Vec<(usize, &str)>, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        ParseError::at_line(line, None, "not valid UTF-8")
    })?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect())
}

/// Gold edges from `regulator<TAB>target<TAB>{0,1}` lines; keeps pairs
/// flagged 1, deduplicated in first-seen order.
pub fn parse_edges(bytes: &[u8]) -> Result<Vec<(String, String)>, ParseError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, l) in lines(bytes)? {
        let f: Vec<&str> = l.split('\t').map(str::trim).collect();
        if f.len() != 3 {
            return Err(ParseError::at_line(line, None, format!("expected 3 tab-separated fields, found {}", f.len())));
        }
        match f[2] {
            "1" => {
                let pair = (f[0].to_string(), f[1].to_string());
                if seen.insert(pair.clone()) {
                    out.push(pair);
                }
            }
            "0" => {}
            other => return Err(ParseError::at_line(line, Some(3), format!("edge flag {other:?} is not 0 or 1"))),
        }
    }
    Ok(out)
}

pub fn read_edges(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let bytes = super::read_bytes(path)?;
    parse_edges(&bytes).map_err(|e| crate::error::Error::from(e).in_file(path))
}

/// One name per line (e.g. candidate regulators).
pub fn parse_names(bytes: &[u8]) -> Result<Vec<String>, ParseError> {
    let names: Vec<String> = lines(bytes)?.into_iter().map(|(_, l)| l.to_string()).collect();
    if names.is_empty() {
        return Err(ParseError::new(Location::File, "empty input"));
    }
    Ok(names)
}

pub fn read_names(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let bytes = super::read_bytes(path)?;
    parse_names(&bytes).map_err(|e| crate::error::Error::from(e).in_file(path))
}

/// `regulator<TAB>target<TAB>weight` in ranking order.
pub fn write_edge_ranking(out: &mut impl Write, ranking: &EdgeRanking, gene_names: &[String]) -> std::io::Result<()> {
    for e in ranking.edges() {
        writeln!(out, "{}\t{}\t{}", gene_names[e.regulator], gene_names[e.target], e.weight)?;
    }
    Ok(())
}
