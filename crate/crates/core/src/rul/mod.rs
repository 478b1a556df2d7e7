//! First-passage RUL distributions.
//!
//! Two routes produce the same [`RulDistribution`]:
//!
//! - [`interpolation_rul`] draws `N` standard-normal scores `k` and builds
//!   deterministic curves `χ(t) = ψ Q(t) + k √ξ(t)` whose threshold crossings
//!   are the samples;
//! - [`mc_first_passage`] simulates the degradation SDE path by path and
//!   records each path's first crossing.

mod bench;
mod crossing;
mod interpolation;
mod io;
mod kde;
mod montecarlo;
mod summary;

pub use bench::{
    benchmark_runtimes, format_timing_table, format_timing_rows, Algorithm, BenchSetting,
    LinearBenchmark, TimingRow,
};
pub use crossing::{curve_crossing, first_crossing, Crossing, CrossingCurve};
pub use interpolation::interpolation_rul;
pub use io::{parse_density, parse_distribution, write_density, write_distribution, ParsedDistribution};
pub use kde::{kde, silverman_bandwidth, Bandwidth, Density};
pub use montecarlo::mc_first_passage;
pub use summary::{point_and_interval, weighted_quantile, RulSummary};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weighted crossing times (relative to the prediction time) and their KDE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RulDistribution {
    pub samples: Vec<f64>,
    pub weights: Vec<f64>,
    /// Draws that never reached the threshold on the evaluation grid.
    pub censored_count: usize,
    pub density: Density,
}

impl RulDistribution {
    /// Equal weights over the uncensored crossings plus a KDE.
    pub(crate) fn from_crossings(
        crossings: Vec<Crossing>,
        origin: f64,
        bandwidth: Bandwidth,
    ) -> Result<Self> {
        let total = crossings.len();
        let samples: Vec<f64> = crossings
            .into_iter()
            .filter_map(|c| match c {
                Crossing::At(t) => Some((t - origin).max(0.0)),
                Crossing::Censored => None,
            })
            .collect();
        let censored_count = total - samples.len();
        if samples.is_empty() {
            return Err(Error::AllCensored {
                censored: censored_count,
            });
        }
        let w = 1.0 / samples.len() as f64;
        let weights = vec![w; samples.len()];
        let h = bandwidth.resolve(&samples, &weights);
        let density = kde(&samples, &weights, h)?;
        Ok(RulDistribution {
            samples,
            weights,
            censored_count,
            density,
        })
    }

    pub fn mean(&self) -> f64 {
        // Shifted by the first sample so a point mass comes back exactly.
        let Some(&x0) = self.samples.first() else {
            return f64::NAN;
        };
        let total: f64 = self.weights.iter().sum();
        x0 + self
            .samples
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| (s - x0) * w)
            .sum::<f64>()
            / total
    }
}
