//! RMSE, PICP and MPIW over per-cycle RUL predictions, and the comparison
//! tables built from them.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    AdaptiveDnn,
    Dnn,
    AdaptiveWiener,
    Wiener,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::AdaptiveDnn, Method::Dnn, Method::AdaptiveWiener, Method::Wiener];

    pub fn tag(self) -> &'static str {
        match self {
            Method::AdaptiveDnn => "adaptive-dnn",
            Method::Dnn => "dnn",
            Method::AdaptiveWiener => "adaptive-wiener",
            Method::Wiener => "wiener",
        }
    }

    /// Whether the method produces a predictive interval.
    pub fn probabilistic(self) -> bool {
        self != Method::Dnn
    }

    pub fn adaptive(self) -> bool {
        matches!(self, Method::AdaptiveDnn | Method::AdaptiveWiener)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

/// One RUL prediction for one unit at one evaluation cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub unit_id: u32,
    pub eval_time: u32,
    pub true_rul: f64,
    pub predicted_rul: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub method: Method,
}

impl PredictionRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.true_rul >= 0.0) {
            return Err(Error::invalid(format!("true RUL must be >= 0, got {}", self.true_rul)));
        }
        if !(self.ci_low <= self.ci_high) {
            return Err(Error::invalid(format!(
                "interval [{}, {}] is reversed",
                self.ci_low, self.ci_high
            )));
        }
        if !self.predicted_rul.is_finite() || !self.ci_high.is_finite() {
            return Err(Error::invalid("prediction must be finite"));
        }
        Ok(())
    }

    pub fn covers(&self) -> bool {
        self.ci_low <= self.true_rul && self.true_rul <= self.ci_high
    }

    pub fn width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}

// Sum in sorted order so the result does not depend on record order.
fn sorted_sum(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

fn nonempty(records: &[PredictionRecord]) -> Result<()> {
    if records.is_empty() {
        Err(Error::Empty("prediction records"))
    } else {
        Ok(())
    }
}

pub fn rmse(records: &[PredictionRecord]) -> Result<f64> {
    nonempty(records)?;
    let sq = records.iter().map(|r| (r.predicted_rul - r.true_rul).powi(2)).collect();
    Ok((sorted_sum(sq) / records.len() as f64).sqrt())
}

/// Fraction of records whose closed interval contains the true RUL.
pub fn picp(records: &[PredictionRecord]) -> Result<f64> {
    nonempty(records)?;
    Ok(records.iter().filter(|r| r.covers()).count() as f64 / records.len() as f64)
}

pub fn mpiw(records: &[PredictionRecord]) -> Result<f64> {
    nonempty(records)?;
    Ok(sorted_sum(records.iter().map(|r| r.width()).collect()) / records.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub method: Method,
    pub n: usize,
    pub rmse: f64,
    pub picp: Option<f64>,
    pub mpiw: Option<f64>,
}

pub fn group_by_method(records: &[PredictionRecord]) -> BTreeMap<Method, Vec<PredictionRecord>> {
    let mut groups: BTreeMap<Method, Vec<PredictionRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.method).or_default().push(*r);
    }
    groups
}

/// One row per method present, in the fixed method order. The plain DNN has
/// no interval, so its PICP and MPIW are absent.
pub fn comparison_table(records: &[PredictionRecord]) -> Result<Vec<TableRow>> {
    group_by_method(records)
        .into_iter()
        .map(|(method, recs)| {
            let prob = method.probabilistic();
            Ok(TableRow {
                method,
                n: recs.len(),
                rmse: rmse(&recs)?,
                picp: if prob { Some(picp(&recs)?) } else { None },
                mpiw: if prob { Some(mpiw(&recs)?) } else { None },
            })
        })
        .collect()
}

/// Aligned text table. PICP is shown in percent.
pub fn format_table(rows: &[TableRow], ci_level: f64) -> String {
    let mut out = String::new();
    let picp_head = format!("PICP ({:.0}% CI)", ci_level * 100.0);
    let _ = writeln!(out, "{:<16} {:>8} {:>10} {:>16} {:>10}", "method", "n", "RMSE", picp_head, "MPIW");
    for r in rows {
        let opt = |v: Option<f64>, scale: f64| v.map_or("-".to_string(), |x| format!("{:.2}", x * scale));
        let _ = writeln!(
            out,
            "{:<16} {:>8} {:>10.2} {:>16} {:>10}",
            r.method.tag(),
            r.n,
            r.rmse,
            opt(r.picp, 100.0),
            opt(r.mpiw, 1.0)
        );
    }
    out
}

/// Tab-separated rows; absent metrics are written as `-`.
pub fn format_table_rows(rows: &[TableRow], header: &str) -> String {
    let mut out = String::new();
    for line in header.lines() {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str("method\tn\trmse\tpicp\tmpiw\n");
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| x.to_string());
    for r in rows {
        let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", r.method, r.n, r.rmse, opt(r.picp), opt(r.mpiw));
    }
    out
}

/// Pairwise RMSE orderings of the comparison, each as `(label, holds)`.
/// Only pairs whose methods are both present are reported.
pub fn ordering_flags(rows: &[TableRow]) -> Vec<(String, bool)> {
    let get = |m: Method| rows.iter().find(|r| r.method == m).map(|r| r.rmse);
    let pairs = [
        (Method::AdaptiveDnn, Method::Dnn),
        (Method::AdaptiveDnn, Method::AdaptiveWiener),
        (Method::Dnn, Method::AdaptiveWiener),
        (Method::AdaptiveWiener, Method::Wiener),
    ];
    pairs
        .iter()
        .filter_map(|&(a, b)| {
            let (x, y) = (get(a)?, get(b)?);
            Some((format!("rmse({a}) <= rmse({b})"), x <= y))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleRmse {
    pub cycle: u32,
    pub method: Method,
    pub n_units: usize,
    pub rmse: f64,
}

/// RMSE per absolute evaluation cycle, averaged over the units still alive
/// at that cycle.
pub fn per_cycle_rmse(records: &[PredictionRecord]) -> Vec<CycleRmse> {
    let mut bins: BTreeMap<(Method, u32), Vec<f64>> = BTreeMap::new();
    for r in records {
        bins.entry((r.method, r.eval_time))
            .or_default()
            .push((r.predicted_rul - r.true_rul).powi(2));
    }
    bins.into_iter()
        .map(|((method, cycle), sq)| {
            let n = sq.len();
            CycleRmse {
                cycle,
                method,
                n_units: n,
                rmse: (sorted_sum(sq) / n as f64).sqrt(),
            }
        })
        .collect()
}

pub fn format_cycle_rows(rows: &[CycleRmse], header: &str) -> String {
    let mut out = String::new();
    for line in header.lines() {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str("# binning=absolute cycle, mean over units alive at that cycle\n");
    out.push_str("cycle\tmethod\tn_units\trmse\n");
    for r in rows {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", r.cycle, r.method, r.n_units, r.rmse);
    }
    out
}

const RECORD_COLUMNS: &str = "unit\teval_time\ttrue_rul\tpredicted_rul\tci_low\tci_high\tmethod";

pub fn write_predictions(records: &[PredictionRecord], header: &str) -> String {
    let mut out = String::new();
    for line in header.lines() {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str(RECORD_COLUMNS);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.unit_id, r.eval_time, r.true_rul, r.predicted_rul, r.ci_low, r.ci_high, r.method
        );
    }
    out
}

pub fn parse_predictions(text: &str, name: &str) -> Result<Vec<PredictionRecord>> {
    let err = |line: usize, message: String| Error::Parse {
        path: name.to_owned(),
        line,
        message,
    };
    let mut out = Vec::new();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            if line != RECORD_COLUMNS {
                return Err(err(lineno, "missing prediction header".into()));
            }
            seen_header = true;
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 7 {
            return Err(err(lineno, format!("expected 7 fields, found {}", f.len())));
        }
        let num = |k: usize| -> Result<f64> {
            f[k].parse::<f64>()
                .map_err(|_| err(lineno, format!("bad number {:?}", f[k])))
        };
        let rec = PredictionRecord {
            unit_id: f[0].parse().map_err(|_| err(lineno, format!("bad unit {:?}", f[0])))?,
            eval_time: f[1].parse().map_err(|_| err(lineno, format!("bad cycle {:?}", f[1])))?,
            true_rul: num(2)?,
            predicted_rul: num(3)?,
            ci_low: num(4)?,
            ci_high: num(5)?,
            method: f[6].parse().map_err(|e: Error| err(lineno, e.to_string()))?,
        };
        rec.validate().map_err(|e| err(lineno, e.to_string()))?;
        out.push(rec);
    }
    if !seen_header {
        return Err(err(text.lines().count().max(1), "missing prediction header".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(true_rul: f64, pred: f64, lo: f64, hi: f64) -> PredictionRecord {
        PredictionRecord {
            unit_id: 1,
            eval_time: 20,
            true_rul,
            predicted_rul: pred,
            ci_low: lo,
            ci_high: hi,
            method: Method::AdaptiveDnn,
        }
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[rec(10.0, 10.0, 0.0, 0.0), rec(5.0, 5.0, 0.0, 0.0)]).unwrap(), 0.0);
        let r = rmse(&[rec(10.0, 13.0, 0.0, 0.0), rec(10.0, 6.0, 0.0, 0.0)]).unwrap();
        assert!((r - 12.5f64.sqrt()).abs() < 1e-12);
        assert!(rmse(&[]).is_err());
    }

    #[test]
    fn picp_examples() {
        let inside = rec(10.0, 10.0, 5.0, 15.0);
        let outside = rec(20.0, 10.0, 5.0, 15.0);
        assert_eq!(picp(&[inside, inside]).unwrap(), 1.0);
        assert_eq!(picp(&[outside]).unwrap(), 0.0);
        assert_eq!(picp(&[inside, inside, inside, outside]).unwrap(), 0.75);
        // Closed interval: the endpoints count.
        assert_eq!(picp(&[rec(15.0, 10.0, 5.0, 15.0), rec(5.0, 10.0, 5.0, 15.0)]).unwrap(), 1.0);
        assert!(picp(&[]).is_err());
    }

    #[test]
    fn mpiw_examples() {
        assert_eq!(mpiw(&[rec(1.0, 1.0, 3.0, 3.0)]).unwrap(), 0.0);
        assert_eq!(mpiw(&[rec(1.0, 1.0, 0.0, 10.0), rec(1.0, 1.0, 5.0, 35.0)]).unwrap(), 20.0);
        assert!(mpiw(&[]).is_err());
    }

    #[test]
    fn table_rows() {
        let a = rec(10.0, 12.0, 8.0, 14.0);
        let rows = comparison_table(&[a]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].rmse, 2.0);
        assert_eq!(rows[0].picp, Some(1.0));
        assert_eq!(rows[0].mpiw, Some(6.0));

        let mut recs = Vec::new();
        for m in Method::ALL {
            recs.push(PredictionRecord { method: m, ..a });
        }
        let rows = comparison_table(&recs).unwrap();
        assert_eq!(rows.len(), 4);
        let dnn = rows.iter().find(|r| r.method == Method::Dnn).unwrap();
        assert_eq!((dnn.picp, dnn.mpiw), (None, None));
        let aw = rows.iter().find(|r| r.method == Method::AdaptiveWiener).unwrap();
        let ad = rows.iter().find(|r| r.method == Method::AdaptiveDnn).unwrap();
        assert_eq!((aw.rmse, aw.picp, aw.mpiw), (ad.rmse, ad.picp, ad.mpiw));
        let text = format_table(&rows, 0.9);
        assert!(text.contains("PICP (90% CI)"));
        assert!(text.lines().nth(2).unwrap().contains(" - "));
        assert!(ordering_flags(&rows).iter().all(|f| f.1));
    }

    #[test]
    fn cycle_bins() {
        let mut a = rec(10.0, 13.0, 0.0, 20.0);
        let mut b = rec(30.0, 26.0, 0.0, 40.0);
        b.unit_id = 2;
        let rows = per_cycle_rmse(&[a, b]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n_units, 2);
        assert!((rows[0].rmse - 12.5f64.sqrt()).abs() < 1e-12);
        a.eval_time = 21;
        assert_eq!(per_cycle_rmse(&[a, b]).len(), 2);
    }

    #[test]
    fn records_round_trip() {
        let mut r = rec(10.0, 0.1 + 0.2, 0.0, 1e-300);
        r.method = Method::Wiener;
        let text = write_predictions(&[r, rec(0.0, 1.0, 1.0, 1.0)], "seed=3");
        assert_eq!(parse_predictions(&text, "p").unwrap(), vec![r, rec(0.0, 1.0, 1.0, 1.0)]);
        assert!(parse_predictions("", "p").is_err());
        let bad = text.replace("wiener", "kalman");
        assert!(matches!(parse_predictions(&bad, "p"), Err(Error::Parse { line: 3, .. })));
        let reversed = write_predictions(&[rec(1.0, 1.0, 5.0, 2.0)], "");
        assert!(parse_predictions(&reversed, "p").is_err());
    }

    fn records() -> impl Strategy<Value = Vec<PredictionRecord>> {
        proptest::collection::vec(
            (0.0f64..300.0, 0.0f64..300.0, 0.0f64..100.0, 0.0f64..100.0)
                .prop_map(|(t, p, a, b)| rec(t, p, p - a, p + b)),
            1..60,
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn widening_intervals(recs in records(), a in 1e-3f64..50.0) {
            let wide: Vec<PredictionRecord> = recs
                .iter()
                .map(|r| PredictionRecord { ci_low: r.ci_low - a, ci_high: r.ci_high + a, ..*r })
                .collect();
            prop_assert!(picp(&wide).unwrap() >= picp(&recs).unwrap());
            let (m0, m1) = (mpiw(&recs).unwrap(), mpiw(&wide).unwrap());
            prop_assert!(m1 > m0);
            prop_assert!((m1 - m0 - 2.0 * a).abs() < 1e-9 * m1.max(1.0));
        }

        #[test]
        fn rmse_ignores_order(mut recs in records(), c in -50.0f64..50.0) {
            let r0 = rmse(&recs).unwrap();
            recs.reverse();
            prop_assert_eq!(rmse(&recs).unwrap(), r0);
            let shifted: Vec<PredictionRecord> = recs
                .iter()
                .map(|r| PredictionRecord { predicted_rul: r.true_rul + c, ..*r })
                .collect();
            prop_assert!((rmse(&shifted).unwrap() - c.abs()).abs() < 1e-9 * c.abs().max(1.0));
        }
    }
}
