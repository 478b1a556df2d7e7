//! C-MAPSS turbofan data: parsing, health-index construction, splits.

mod hi;
mod parse;
mod series;
mod synth;
pub mod trees;

pub use hi::{
    compute_hi, fit_stacked_hi, fit_stacked_hi_with, BaseModel, Combiner, HiConfig, RegressorKind,
    StackedHIModel,
};
pub use parse::{parse_cmapss, parse_cmapss_str, write_cmapss, N_COLUMNS};
pub use series::{parse_hi_series, write_hi_series, HiSeries};
pub use synth::{synthetic_fleet, FleetSpec};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// HI level treated as failure.
pub const FAILURE_THRESHOLD: f64 = 0.95;

/// Sensors feeding the health index (1-based).
pub const DEFAULT_SENSORS: [usize; 5] = [2, 3, 4, 11, 17];

/// Units per training file of each subset.
pub const SUBSET_UNITS: [(&str, usize); 4] = [("FD001", 100), ("FD002", 260), ("FD003", 100), ("FD004", 248)];

/// One monitored engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitSeries {
    pub unit_id: u32,
    pub cycles: Vec<u32>,
    pub op_settings: Vec<[f64; 3]>,
    /// `sensors[k][j]` is sensor `j + 1` at cycle `cycles[k]`.
    pub sensors: Vec<[f64; 21]>,
    pub hi: Option<Vec<f64>>,
}

impl UnitSeries {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn failure_threshold(&self) -> f64 {
        FAILURE_THRESHOLD
    }

    pub fn sensor(&self, id: usize) -> Vec<f64> {
        self.sensors.iter().map(|s| s[id - 1]).collect()
    }
}

/// Per-engine normalized cycles `(t - min) / (max - min)`.
pub fn normalize_cycles(unit: &UnitSeries) -> Result<Vec<f64>> {
    let (Some(&lo), Some(&hi)) = (unit.cycles.iter().min(), unit.cycles.iter().max()) else {
        return Err(Error::Empty("unit cycles"));
    };
    if hi == lo {
        return Err(Error::invalid(format!(
            "unit {} has a single cycle; labels are undefined",
            unit.unit_id
        )));
    }
    let span = (hi - lo) as f64;
    Ok(unit.cycles.iter().map(|&c| (c - lo) as f64 / span).collect())
}

/// Unit-level seeded split: `⌈fraction·n⌉` training units, the rest held out.
/// Both sides are returned in unit-id order.
pub fn split_train_test(
    units: &[UnitSeries],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<UnitSeries>, Vec<UnitSeries>)> {
    let n = units.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, have: n });
    }
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(Error::invalid(format!("train fraction must be in (0, 1], got {train_fraction}")));
    }
    let n_train = ((train_fraction * n as f64) - 1e-9).ceil() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::invalid(format!(
            "split of {n} units at {train_fraction} leaves an empty side"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::seeded(seed));
    let (a, b) = idx.split_at(n_train);
    let pick = |ids: &[usize]| {
        let mut v: Vec<UnitSeries> = ids.iter().map(|&i| units[i].clone()).collect();
        v.sort_by_key(|u| u.unit_id);
        v
    };
    Ok((pick(a), pick(b)))
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties. Returns NaN when
/// either side is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "spearman inputs differ in length");
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    cov / (va * vb).sqrt()
}

/// Median, NaNs excluded. Sorts `v` in place.
pub fn median(v: &mut Vec<f64>) -> f64 {
    v.retain(|x| !x.is_nan());
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Spearman correlation of HI against cycle for every unit with an HI.
pub fn per_unit_spearman(units: &[UnitSeries]) -> Vec<(u32, f64)> {
    units
        .iter()
        .filter_map(|u| {
            let hi = u.hi.as_ref()?;
            let c: Vec<f64> = u.cycles.iter().map(|&c| c as f64).collect();
            Some((u.unit_id, spearman(hi, &c)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(id: u32, cycles: Vec<u32>) -> UnitSeries {
        let n = cycles.len();
        UnitSeries {
            unit_id: id,
            cycles,
            op_settings: vec![[0.0; 3]; n],
            sensors: vec![[0.0; 21]; n],
            hi: None,
        }
    }

    #[test]
    fn normalized_endpoints() {
        let u = unit(1, (1..=101).collect());
        let n = normalize_cycles(&u).unwrap();
        assert_eq!(n[0], 0.0);
        assert_eq!(n[100], 1.0);
        assert_eq!(n[50], 0.5);
        assert!(normalize_cycles(&unit(1, vec![1])).is_err());
    }

    #[test]
    fn split_sizes() {
        let units: Vec<UnitSeries> = (1..=260).map(|i| unit(i, vec![1, 2])).collect();
        let (a, b) = split_train_test(&units, 0.8, 7).unwrap();
        assert_eq!((a.len(), b.len()), (208, 52));
        let (a2, b2) = split_train_test(&units, 0.8, 7).unwrap();
        assert_eq!(a, a2);
        assert_eq!(b, b2);
        let mut ids: Vec<u32> = a.iter().chain(&b).map(|u| u.unit_id).collect();
        ids.sort();
        assert_eq!(ids, (1..=260).collect::<Vec<_>>());
        assert!(split_train_test(&units, 1.0, 7).is_err());
        assert!(split_train_test(&units[..1], 0.5, 7).is_err());
    }

    #[test]
    fn spearman_basics() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&a, &[10.0, 20.0, 25.0, 100.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&a, &[4.0, 3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert!(spearman(&a, &[1.0; 4]).is_nan());
        assert_eq!(ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn median_of_values() {
        assert_eq!(median(&mut vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut vec![4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&mut vec![]).is_nan());
    }

    proptest! {
        #[test]
        fn labels_ignore_cycle_offsets(len in 2u32..300, shift in 0u32..1000) {
            let a = normalize_cycles(&unit(1, (1..=len).collect())).unwrap();
            let b = normalize_cycles(&unit(1, (1 + shift..=len + shift).collect())).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
