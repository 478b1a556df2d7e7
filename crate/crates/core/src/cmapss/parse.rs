use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::UnitSeries;
use crate::error::{Error, Result};

pub const N_COLUMNS: usize = 26;

fn parse_err(name: &str, line: usize, message: String) -> Error {
    Error::Parse {
        path: name.to_owned(),
        line,
        message,
    }
}

/// Parse one C-MAPSS file (`unit cycle setting1..3 s1..s21` per row).
pub fn parse_cmapss(path: &Path) -> Result<Vec<UnitSeries>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cmapss_str(&text, &path.display().to_string())
}

/// As [`parse_cmapss`] on in-memory text; `name` labels error messages.
pub fn parse_cmapss_str(text: &str, name: &str) -> Result<Vec<UnitSeries>> {
    // unit -> rows of (cycle, line number, values)
    let mut rows: BTreeMap<u32, Vec<(u32, usize, [f64; 24])>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != N_COLUMNS {
            return Err(parse_err(
                name,
                lineno,
                format!("expected {N_COLUMNS} columns, found {}", tokens.len()),
            ));
        }
        let int = |tok: &str, what: &str| -> Result<u32> {
            // Some exports write integer columns as floats.
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(name, lineno, format!("{what} {tok:?} is not numeric")))?;
            if v.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&v) {
                return Err(parse_err(name, lineno, format!("{what} {tok:?} is not a positive integer")));
            }
            Ok(v as u32)
        };
        let unit = int(tokens[0], "unit")?;
        let cycle = int(tokens[1], "cycle")?;
        let mut vals = [0.0; 24];
        for (k, tok) in tokens[2..].iter().enumerate() {
            let v: f64 = tok.parse().map_err(|_| {
                parse_err(name, lineno, format!("column {} value {tok:?} is not numeric", k + 3))
            })?;
            if !v.is_finite() {
                return Err(parse_err(name, lineno, format!("column {} is not finite", k + 3)));
            }
            vals[k] = v;
        }
        rows.entry(unit).or_default().push((cycle, lineno, vals));
    }
    let mut units = Vec::with_capacity(rows.len());
    for (unit_id, mut r) in rows {
        r.sort_by_key(|x| x.0);
        let mut unit = UnitSeries {
            unit_id,
            cycles: Vec::with_capacity(r.len()),
            op_settings: Vec::with_capacity(r.len()),
            sensors: Vec::with_capacity(r.len()),
            hi: None,
        };
        for (k, (cycle, lineno, vals)) in r.into_iter().enumerate() {
            if cycle != k as u32 + 1 {
                return Err(parse_err(
                    name,
                    lineno,
                    format!("unit {unit_id}: expected cycle {}, found {cycle}", k + 1),
                ));
            }
            unit.cycles.push(cycle);
            unit.op_settings.push(vals[..3].try_into().expect("3 settings"));
            unit.sensors.push(vals[3..].try_into().expect("21 sensors"));
        }
        units.push(unit);
    }
    Ok(units)
}

/// Serialize units in the C-MAPSS layout. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_cmapss(units: &[UnitSeries]) -> String {
    let mut out = String::new();
    for u in units {
        for k in 0..u.cycles.len() {
            let _ = write!(out, "{} {}", u.unit_id, u.cycles[k]);
            for v in u.op_settings[k].iter().chain(&u.sensors[k]) {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(unit: u32, cycle: u32) -> String {
        let mut s = format!("{unit} {cycle} -0.0007 -0.0004 100.0");
        for k in 1..=21 {
            s.push_str(&format!(" {}.{}", 500 + k, cycle));
        }
        s
    }

    #[test]
    fn groups_and_sorts() {
        let text = [row(2, 1), row(1, 2), row(1, 1), row(2, 2), row(2, 3)].join("\n");
        let units = parse_cmapss_str(&text, "t").unwrap();
        assert_eq!(units.len(), 2);
        assert_eq!(units[0].unit_id, 1);
        assert_eq!(units[0].cycles, vec![1, 2]);
        assert_eq!(units[1].cycles, vec![1, 2, 3]);
        assert_eq!(units[0].sensors[1][0], 501.2);
        assert_eq!(units[0].op_settings[0][2], 100.0);
    }

    #[test]
    fn short_row_names_the_line() {
        let mut bad = row(1, 2);
        bad.truncate(bad.rfind(' ').unwrap());
        let text = [row(1, 1), bad].join("\n");
        match parse_cmapss_str(&text, "train.txt") {
            Err(Error::Parse { line, message, path }) => {
                assert_eq!(line, 2);
                assert_eq!(path, "train.txt");
                assert!(message.contains("25"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_numeric_token() {
        let text = [row(1, 1), row(1, 2).replace("503.2", "abc")].join("\n");
        assert!(matches!(parse_cmapss_str(&text, "t"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn cycle_gap() {
        let text = [row(1, 1), row(1, 3)].join("\n");
        let err = parse_cmapss_str(&text, "t").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let dup = [row(1, 1), row(1, 1)].join("\n");
        assert!(parse_cmapss_str(&dup, "t").is_err());
    }

    #[test]
    fn missing_file_names_path() {
        let err = parse_cmapss(Path::new("/nonexistent/train_FD002.txt")).unwrap_err();
        assert!(err.to_string().contains("train_FD002.txt"));
    }

    proptest! {
        #[test]
        fn round_trip_is_lossless(
            lens in prop::collection::vec(1usize..6, 1..4),
            vals in prop::collection::vec(prop::num::f64::NORMAL, 24),
        ) {
            let units: Vec<UnitSeries> = lens.iter().enumerate().map(|(u, &n)| UnitSeries {
                unit_id: u as u32 + 1,
                cycles: (1..=n as u32).collect(),
                op_settings: (0..n).map(|k| [vals[k % 3], vals[1], vals[2]]).collect(),
                sensors: (0..n).map(|k| {
                    let mut s = [0.0; 21];
                    for (i, v) in s.iter_mut().enumerate() { *v = vals[3 + (i + k) % 21]; }
                    s
                }).collect(),
                hi: None,
            }).collect();
            let back = parse_cmapss_str(&write_cmapss(&units), "rt").unwrap();
            prop_assert_eq!(back, units);
        }

        #[test]
        fn parser_never_panics(text in "[0-9 .e\\-\n]{0,400}") {
            let _ = parse_cmapss_str(&text, "fuzz");
        }
    }
}
