use serde::{Deserialize, Serialize};

use crate::cmapss::UnitSeries;
use crate::degradation::IncrementStats;
use crate::error::{Error, Result};

/// One sliding-window sample: the observed history up to `t_{i-1}` and the
/// observations that follow it.
///
/// History entries are `(cycle, HI)`; the model normalizes cycles itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub history: Vec<(f64, f64)>,
    pub future_times: Vec<f64>,
    pub future_values: Vec<f64>,
    /// Step-to-step increments, the first measured from the last history point.
    pub increments: Vec<IncrementStats>,
}

impl TrainingPair {
    pub fn new(history: Vec<(f64, f64)>, future_times: Vec<f64>, future_values: Vec<f64>) -> Result<Self> {
        let Some(&(t_last, z_last)) = history.last() else {
            return Err(Error::Empty("training pair history"));
        };
        if future_times.is_empty() {
            return Err(Error::Empty("training pair targets"));
        }
        if future_times.len() != future_values.len() {
            return Err(Error::invalid("future times and values differ in length"));
        }
        let mut increments = Vec::with_capacity(future_times.len());
        let (mut tp, mut zp) = (t_last, z_last);
        for (&t, &z) in future_times.iter().zip(&future_values) {
            if !(t > tp) || !z.is_finite() {
                return Err(Error::InvalidCurve(format!(
                    "target times must increase after {t_last} and values be finite"
                )));
            }
            increments.push(IncrementStats {
                delta_q: z - zp,
                delta_z: z - zp,
                delta_t: t - tp,
            });
            tp = t;
            zp = z;
        }
        Ok(TrainingPair {
            history,
            future_times,
            future_values,
            increments,
        })
    }

    pub fn last_observation(&self) -> (f64, f64) {
        *self.history.last().expect("validated nonempty")
    }

    pub fn len(&self) -> usize {
        self.future_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.future_times.is_empty()
    }
}

/// Sliding windows over one series. Histories grow from `min_history`
/// observations by `stride`; each takes up to `horizon` following targets.
pub fn pairs_from_series(
    times: &[f64],
    values: &[f64],
    min_history: usize,
    horizon: usize,
    stride: usize,
) -> Result<Vec<TrainingPair>> {
    if times.len() != values.len() {
        return Err(Error::invalid("times and values differ in length"));
    }
    if min_history == 0 || horizon == 0 || stride == 0 {
        return Err(Error::invalid("min_history, horizon and stride must be >= 1"));
    }
    let n = times.len();
    let mut out = Vec::new();
    let mut h = min_history;
    while h < n {
        let end = (h + horizon).min(n);
        let history = times[..h].iter().cloned().zip(values[..h].iter().cloned()).collect();
        out.push(TrainingPair::new(
            history,
            times[h..end].to_vec(),
            values[h..end].to_vec(),
        )?);
        h += stride;
    }
    Ok(out)
}

/// Training pairs over a unit's health index.
pub fn make_training_pairs(
    unit: &UnitSeries,
    min_history: usize,
    horizon: usize,
    stride: usize,
) -> Result<Vec<TrainingPair>> {
    let hi = unit
        .hi
        .as_ref()
        .ok_or_else(|| Error::invalid(format!("unit {} has no health index", unit.unit_id)))?;
    let times: Vec<f64> = unit.cycles.iter().map(|&c| c as f64).collect();
    pairs_from_series(&times, hi, min_history, horizon, stride)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(n: usize) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        let z = t.iter().map(|t| 0.01 * t).collect();
        (t, z)
    }

    #[test]
    fn single_window() {
        let (t, z) = series(5);
        let p = pairs_from_series(&t, &z, 4, 1, 1).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].history.len(), 4);
        assert_eq!(p[0].future_times, vec![5.0]);
    }

    #[test]
    fn window_count_and_truncation() {
        let (t, z) = series(10);
        let p = pairs_from_series(&t, &z, 4, 3, 1).unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p[0].len(), 3);
        assert_eq!(p[4].len(), 2);
        assert_eq!(p[5].len(), 1);
        assert!(p.iter().all(|q| !q.is_empty()));
    }

    #[test]
    fn short_series_gives_nothing() {
        let (t, z) = series(3);
        assert!(pairs_from_series(&t, &z, 4, 1, 1).unwrap().is_empty());
    }

    #[test]
    fn stride_skips_windows() {
        let (t, z) = series(20);
        let p = pairs_from_series(&t, &z, 4, 3, 5).unwrap();
        let lens: Vec<usize> = p.iter().map(|q| q.history.len()).collect();
        assert_eq!(lens, vec![4, 9, 14, 19]);
    }

    #[test]
    fn increments_start_at_history_end() {
        let (t, z) = series(6);
        let p = &pairs_from_series(&t, &z, 3, 3, 1).unwrap()[0];
        assert_eq!(p.increments.len(), 3);
        assert!((p.increments[0].delta_z - 0.01).abs() < 1e-15);
        assert_eq!(p.increments[0].delta_t, 1.0);
    }

    #[test]
    fn rejects_bad_pairs() {
        assert!(TrainingPair::new(vec![], vec![1.0], vec![0.0]).is_err());
        assert!(TrainingPair::new(vec![(1.0, 0.0)], vec![1.0], vec![0.0]).is_err());
        assert!(TrainingPair::new(vec![(1.0, 0.0)], vec![2.0, 3.0], vec![0.0]).is_err());
        assert!(TrainingPair::new(vec![(1.0, 0.0)], vec![], vec![]).is_err());
    }
}
