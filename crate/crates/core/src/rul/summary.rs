use serde::{Deserialize, Serialize};

use super::RulDistribution;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RulSummary {
    pub mean: f64,
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

/// Weighted quantile with linear interpolation between order statistics.
///
/// Each sorted sample sits at the midpoint of its weight band,
/// `C_{i-1} + w_i / 2`; probabilities below the first or above the last
/// midpoint clamp to the extreme samples. Returns `None` for empty input.
pub fn weighted_quantile(samples: &[f64], weights: &[f64], p: f64) -> Option<f64> {
    let mut pairs: Vec<(f64, f64)> = samples
        .iter()
        .cloned()
        .zip(weights.iter().cloned())
        .filter(|&(_, w)| w > 0.0)
        .collect();
    if pairs.is_empty() {
        return None;
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let target = p.clamp(0.0, 1.0) * total;
    let mut cum = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for &(x, w) in &pairs {
        let mid = cum + 0.5 * w;
        if target <= mid {
            return Some(match prev {
                None => x,
                Some((px, pmid)) => {
                    let f = (target - pmid) / (mid - pmid);
                    px + f * (x - px)
                }
            });
        }
        prev = Some((x, mid));
        cum += w;
    }
    pairs.last().map(|p| p.0)
}

/// Mean, median and the central `level` interval of a RUL distribution.
pub fn point_and_interval(dist: &RulDistribution, level: f64) -> Result<RulSummary> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("level must be in (0, 1), got {level}")));
    }
    let have = dist.samples.len();
    if have < 2 {
        return Err(Error::InsufficientSamples { needed: 2, have });
    }
    let mean = dist.mean();
    let tail = (1.0 - level) / 2.0;
    let q = |p| weighted_quantile(&dist.samples, &dist.weights, p).expect("nonempty");
    Ok(RulSummary {
        mean,
        median: q(0.5),
        lower: q(tail),
        upper: q(1.0 - tail),
        level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rul::kde;

    fn dist(samples: Vec<f64>) -> RulDistribution {
        let w = vec![1.0 / samples.len() as f64; samples.len()];
        let density = kde(&samples, &w, 1.0).unwrap();
        RulDistribution {
            samples,
            weights: w,
            censored_count: 0,
            density,
        }
    }

    #[test]
    fn point_mass() {
        let s = point_and_interval(&dist(vec![80.0; 20]), 0.9).unwrap();
        assert_eq!((s.mean, s.median, s.lower, s.upper), (80.0, 80.0, 80.0, 80.0));
    }

    #[test]
    fn three_points() {
        let s = point_and_interval(&dist(vec![90.0, 70.0, 80.0]), 0.9).unwrap();
        assert_eq!(s.lower, 70.0);
        assert_eq!(s.upper, 90.0);
        assert_eq!(s.median, 80.0);
        assert!((s.mean - 80.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_samples() {
        let s = point_and_interval(&dist(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), 0.5).unwrap();
        assert!((s.mean - s.median).abs() < 1e-12);
        assert!((s.lower - 2.0).abs() < 1e-12 && (s.upper - 5.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            point_and_interval(&dist(vec![3.0]), 0.9),
            Err(Error::InsufficientSamples { .. })
        ));
        assert!(point_and_interval(&dist(vec![3.0, 4.0]), 1.0).is_err());
        assert_eq!(weighted_quantile(&[], &[], 0.5), None);
    }

    #[test]
    fn interpolates_between_order_statistics() {
        // midpoints at 0.25 and 0.75
        let q = weighted_quantile(&[10.0, 20.0], &[0.5, 0.5], 0.5).unwrap();
        assert!((q - 15.0).abs() < 1e-12);
        let q = weighted_quantile(&[10.0, 20.0], &[0.5, 0.5], 0.3).unwrap();
        assert!((q - 11.0).abs() < 1e-12);
    }
}
