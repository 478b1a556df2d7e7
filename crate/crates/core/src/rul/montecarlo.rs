use rayon::prelude::*;

use super::crossing::Crossing;
use super::kde::Bandwidth;
use super::RulDistribution;
use crate::degradation::{NoiseParams, PathSimulator, PatternCurve};
use crate::error::{Error, Result};

/// RUL distribution by direct simulation of the degradation SDE.
///
/// Paths start at `drift_mean · Q(t_0)` with drift `drift_mean` and are
/// simulated independently (no resampling); each contributes its first
/// threshold crossing on the curve's horizon.
#[allow(clippy::too_many_arguments)]
pub fn mc_first_passage(
    curve: &PatternCurve,
    np: &NoiseParams,
    drift_mean: f64,
    threshold: f64,
    n_paths: usize,
    dt: f64,
    seed: u64,
    bandwidth: Bandwidth,
) -> Result<RulDistribution> {
    if n_paths == 0 {
        return Err(Error::invalid("n_paths must be >= 1"));
    }
    let sim = PathSimulator::new(curve, *np, drift_mean, dt)?;
    let crossings: Vec<Crossing> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| match sim.first_passage(seed, i, threshold) {
            Some(t) => Crossing::At(t),
            None => Crossing::Censored,
        })
        .collect();
    RulDistribution::from_crossings(crossings, curve.start(), bandwidth)
}
