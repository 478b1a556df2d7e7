use serde::{Deserialize, Serialize};

use crate::degradation::PatternCurve;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Crossing {
    At(f64),
    Censored,
}

impl Crossing {
    pub fn time(self) -> Option<f64> {
        match self {
            Crossing::At(t) => Some(t),
            Crossing::Censored => None,
        }
    }
}

/// `χ(t) = mean(t) + k √ξ(t)` on the variance grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingCurve {
    pub k_sample: f64,
    pub curve: PatternCurve,
}

impl CrossingCurve {
    /// `mean` is evaluated (by interpolation) at the nodes of `xi`.
    pub fn new(mean: &PatternCurve, xi: &PatternCurve, k_sample: f64) -> Result<Self> {
        let values = xi
            .times()
            .iter()
            .zip(xi.values())
            .map(|(&t, &v)| Ok(mean.value_at(t)? + k_sample * v.max(0.0).sqrt()))
            .collect::<Result<Vec<f64>>>()?;
        if !k_sample.is_finite() {
            return Err(Error::invalid("k sample must be finite"));
        }
        Ok(CrossingCurve {
            k_sample,
            curve: PatternCurve::new(xi.times().to_vec(), values)?,
        })
    }
}

/// First up-crossing of a closed threshold, refined linearly within the
/// grid interval. Later re-crossings are ignored.
pub fn first_crossing(curve: &CrossingCurve, threshold: f64) -> Crossing {
    crossing_on_grid(curve.curve.times(), curve.curve.values(), threshold)
}

/// First time a piecewise-linear curve reaches `threshold`.
pub fn curve_crossing(curve: &PatternCurve, threshold: f64) -> Crossing {
    crossing_on_grid(curve.times(), curve.values(), threshold)
}

pub(crate) fn crossing_on_grid(times: &[f64], values: &[f64], threshold: f64) -> Crossing {
    if values.is_empty() {
        return Crossing::Censored;
    }
    if values[0] >= threshold {
        return Crossing::At(times[0]);
    }
    for j in 1..values.len() {
        let (a, b) = (values[j - 1], values[j]);
        if b >= threshold {
            let frac = ((threshold - a) / (b - a)).clamp(0.0, 1.0);
            return Crossing::At(times[j - 1] + frac * (times[j] - times[j - 1]));
        }
    }
    Crossing::Censored
}
