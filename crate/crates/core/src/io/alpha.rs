use std::path::Path;

use crate::data::SelectionProbs;
use crate::error::{Location, ParseError, Result};

/// One value per line.
pub fn write_alpha(path: impl AsRef<Path>, alpha: &SelectionProbs) -> Result<()> {
    let mut s = String::with_capacity(alpha.len() * 20);
    for a in alpha.as_slice() {
        s.push_str(&a.to_string());
        s.push('\n');
    }
    super::write_bytes(path.as_ref(), s.as_bytes())
}

pub fn parse_alpha(bytes: &[u8]) -> Result<SelectionProbs, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        ParseError::at_line(line, None, "not valid UTF-8")
    })?;
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.trim().is_empty() {
        return Err(ParseError::new(Location::File, "empty input"));
    }
    body.split('\n')
        .enumerate()
        .map(|(k, raw)| {
            let line = k + 1;
            let v: f64 = raw
                .trim()
                .parse()
                .map_err(|_| ParseError::at_line(line, None, format!("malformed number {:?}", raw.trim())))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(ParseError::at_line(line, None, format!("value {v} outside [0, 1]")));
            }
            Ok(v)
        })
        .collect::<Result<Vec<f64>, _>>()
        .map(SelectionProbs::projected)
}

pub fn read_alpha(path: impl AsRef<Path>) -> Result<SelectionProbs> {
    let path = path.as_ref();
    let bytes = super::read_bytes(path)?;
    parse_alpha(&bytes).map_err(|e| crate::error::Error::from(e).in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn round_trip_is_exact() {
        let mut r = crate::rng::stream(1, 0);
        let mut v: Vec<f64> = (0..50).map(|_| r.random::<f64>()).collect();
        v.extend([0.0, 1.0, 1e-300, 0.1 + 0.2]);
        let a = SelectionProbs::new(v).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("alpha.txt");
        write_alpha(&p, &a).unwrap();
        assert_eq!(read_alpha(&p).unwrap(), a);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(parse_alpha(b"").unwrap_err().location, Location::File);
        let e = parse_alpha(b"0.5\n1.5\n").unwrap_err();
        assert_eq!(e.location, Location::Line { line: 2, column: None });
        assert!(parse_alpha(b"0.5\nabc\n").is_err());
        assert!(parse_alpha(b"0.5\n\n0.2\n").is_err());
    }
}
