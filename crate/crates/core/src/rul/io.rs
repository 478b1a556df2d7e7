//! Columnar text files for distributions and density grids.
//!
//! ```text
//! # rulkit distribution
//! # censored_count=3
//! sample	weight
//! 41.25	0.05
//! ```
//!
//! Other `#` lines carry provenance and are kept verbatim by the parser.

use std::fmt::Write as _;

use super::kde::Density;
use super::RulDistribution;
use crate::error::{Error, Result};

const DIST_MAGIC: &str = "# rulkit distribution";
const DENSITY_MAGIC: &str = "# rulkit density";

pub fn write_distribution(dist: &RulDistribution, provenance: &str) -> String {
    let mut out = String::from(DIST_MAGIC);
    out.push('\n');
    for line in provenance.lines() {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "# censored_count={}", dist.censored_count);
    out.push_str("sample\tweight\n");
    for (s, w) in dist.samples.iter().zip(&dist.weights) {
        let _ = writeln!(out, "{s}\t{w}");
    }
    out
}

pub fn write_density(density: &Density, provenance: &str) -> String {
    let mut out = String::from(DENSITY_MAGIC);
    out.push('\n');
    for line in provenance.lines() {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "# bandwidth={}", density.bandwidth);
    out.push_str("t\tdensity\n");
    for (t, v) in density.grid.iter().zip(&density.values) {
        let _ = writeln!(out, "{t}\t{v}");
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedDistribution {
    pub samples: Vec<f64>,
    pub weights: Vec<f64>,
    pub censored_count: usize,
    pub comments: Vec<String>,
}

struct Table {
    rows: Vec<(f64, f64)>,
    keyed: Vec<(String, String)>,
    comments: Vec<String>,
}

fn parse_table(text: &str, what: &str, magic: &str, columns: (&str, &str)) -> Result<Table> {
    let err = |line: usize, message: String| Error::Parse {
        path: format!("<{what}>"),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim_end() == magic => {}
        _ => return Err(err(1, format!("missing `{magic}` header"))),
    }
    let mut rows = Vec::new();
    let mut keyed = Vec::new();
    let mut comments = Vec::new();
    let mut seen_columns = false;
    for (i, raw) in lines {
        let lineno = i + 1;
        let line = raw.trim_end_matches('\r');
        if let Some(c) = line.strip_prefix('#') {
            let c = c.trim();
            if let Some((k, v)) = c.split_once('=') {
                keyed.push((k.trim().to_string(), v.trim().to_string()));
            }
            comments.push(c.to_string());
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if !seen_columns {
            if fields.len() == 2 && fields[0] == columns.0 && fields[1] == columns.1 {
                seen_columns = true;
                continue;
            }
            return Err(err(lineno, format!("expected column header `{}\t{}`", columns.0, columns.1)));
        }
        if fields.len() != 2 {
            return Err(err(lineno, format!("expected 2 columns, found {}", fields.len())));
        }
        let parse = |s: &str| -> Result<f64> {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| err(lineno, format!("not a number: {s:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(lineno, format!("non-finite value {s:?}")))
            }
        };
        rows.push((parse(fields[0])?, parse(fields[1])?));
    }
    if !seen_columns {
        return Err(err(text.lines().count().max(1), "missing column header".into()));
    }
    Ok(Table {
        rows,
        keyed,
        comments,
    })
}

pub fn parse_distribution(text: &str) -> Result<ParsedDistribution> {
    let table = parse_table(text, "distribution", DIST_MAGIC, ("sample", "weight"))?;
    let mut censored_count = 0;
    for (k, v) in &table.keyed {
        if k == "censored_count" {
            censored_count = v.parse().map_err(|_| Error::Parse {
                path: "<distribution>".into(),
                line: 0,
                message: format!("bad censored_count {v:?}"),
            })?;
        }
    }
    if table.rows.iter().any(|&(_, w)| w < 0.0) {
        return Err(Error::invalid("negative weight in distribution"));
    }
    let (samples, weights) = table.rows.into_iter().unzip();
    Ok(ParsedDistribution {
        samples,
        weights,
        censored_count,
        comments: table.comments,
    })
}

pub fn parse_density(text: &str) -> Result<Density> {
    let table = parse_table(text, "density", DENSITY_MAGIC, ("t", "density"))?;
    let bandwidth = table
        .keyed
        .iter()
        .find(|(k, _)| k == "bandwidth")
        .and_then(|(_, v)| v.parse::<f64>().ok())
        .ok_or_else(|| Error::invalid("density file lacks a bandwidth"))?;
    let (grid, values): (Vec<f64>, Vec<f64>) = table.rows.into_iter().unzip();
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("density grid not strictly increasing"));
    }
    Ok(Density {
        grid,
        values,
        bandwidth,
    })
}
