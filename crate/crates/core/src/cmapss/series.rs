//! Health-index series files: `unit<TAB>cycle<TAB>hi` rows after `#` comments.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::UnitSeries;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiSeries {
    pub unit_id: u32,
    pub cycles: Vec<u32>,
    pub hi: Vec<f64>,
}

impl HiSeries {
    pub fn from_unit(unit: &UnitSeries) -> Result<Self> {
        let hi = unit
            .hi
            .clone()
            .ok_or_else(|| Error::invalid(format!("unit {} has no health index", unit.unit_id)))?;
        Ok(HiSeries {
            unit_id: unit.unit_id,
            cycles: unit.cycles.clone(),
            hi,
        })
    }

    pub fn times(&self) -> Vec<f64> {
        self.cycles.iter().map(|&c| c as f64).collect()
    }

    pub fn last_cycle(&self) -> u32 {
        self.cycles.last().copied().unwrap_or(0)
    }

    /// `(cycle, hi)` observations up to and including `cycle`.
    pub fn history_until(&self, cycle: u32) -> Vec<(f64, f64)> {
        self.cycles
            .iter()
            .zip(&self.hi)
            .take_while(|(&c, _)| c <= cycle)
            .map(|(&c, &h)| (c as f64, h))
            .collect()
    }

    pub fn hi_at(&self, cycle: u32) -> Option<f64> {
        self.cycles.iter().position(|&c| c == cycle).map(|k| self.hi[k])
    }
}

const COLUMNS: &str = "unit\tcycle\thi";

pub fn write_hi_series(series: &[HiSeries], header: &str) -> String {
    let mut out = String::new();
    for line in header.lines() {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str(COLUMNS);
    out.push('\n');
    for s in series {
        for (c, h) in s.cycles.iter().zip(&s.hi) {
            let _ = writeln!(out, "{}\t{c}\t{h}", s.unit_id);
        }
    }
    out
}

/// Rows of one unit must be consecutive and in increasing cycle order.
pub fn parse_hi_series(text: &str, name: &str) -> Result<Vec<HiSeries>> {
    let err = |line: usize, message: String| Error::Parse {
        path: name.to_owned(),
        line,
        message,
    };
    let mut out: Vec<HiSeries> = Vec::new();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            if line != COLUMNS {
                return Err(err(lineno, format!("expected header {COLUMNS:?}")));
            }
            seen_header = true;
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(err(lineno, format!("expected 3 fields, found {}", f.len())));
        }
        let unit: u32 = f[0].parse().map_err(|_| err(lineno, format!("bad unit {:?}", f[0])))?;
        let cycle: u32 = f[1].parse().map_err(|_| err(lineno, format!("bad cycle {:?}", f[1])))?;
        let hi: f64 = f[2].parse().map_err(|_| err(lineno, format!("bad hi {:?}", f[2])))?;
        if !hi.is_finite() {
            return Err(err(lineno, "hi is not finite".into()));
        }
        match out.last_mut() {
            Some(s) if s.unit_id == unit => {
                if cycle <= s.last_cycle() {
                    return Err(err(lineno, format!("unit {unit}: cycle {cycle} does not increase")));
                }
                s.cycles.push(cycle);
                s.hi.push(hi);
            }
            _ => {
                if out.iter().any(|s| s.unit_id == unit) {
                    return Err(err(lineno, format!("unit {unit} rows are not contiguous")));
                }
                out.push(HiSeries {
                    unit_id: unit,
                    cycles: vec![cycle],
                    hi: vec![hi],
                });
            }
        }
    }
    if !seen_header {
        return Err(err(text.lines().count().max(1), "missing header".into()));
    }
    Ok(out)
}
