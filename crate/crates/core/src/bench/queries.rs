//! Query files: one context vector per line, components separated by
//! whitespace or commas. Blank lines and lines starting with `#` are
//! skipped. Row lengths are not checked here; the decoder reports a
//! mismatched query by its position.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Location, Result};

pub fn parse_queries(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut queries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .map(|f| match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(Error::parse(Location::Line(i + 1), format!("non-finite value `{f}`"))),
                Err(_) => Err(Error::parse(Location::Line(i + 1), format!("invalid number `{f}`"))),
            })
            .collect::<Result<Vec<f64>>>()?;
        queries.push(row);
    }
    Ok(queries)
}

pub fn load_queries(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_queries(&text)
}

/// Space separated, shortest round-trip formatting.
pub fn write_queries(queries: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for q in queries {
        for (j, v) in q.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn save_queries(queries: &[Vec<f64>], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_queries(queries)).map_err(|e| Error::io(path, e))
}
