//! Synthetic training pairs with known noise coefficients.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::TrainingPair;
use crate::error::{Error, Result};
use crate::rng;

/// Linear pattern `Q(t) = slope · t`. Each sequence observes the noiseless
/// pattern up to a random cycle, then continues as the degradation process
/// with drift starting at one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticLinear {
    pub slope: f64,
    pub gamma_sq: f64,
    pub eta_b_sq: f64,
    pub horizon: usize,
    /// Inclusive range of the last history cycle.
    pub start_range: (u32, u32),
}

impl Default for SyntheticLinear {
    fn default() -> Self {
        SyntheticLinear {
            slope: 0.01,
            gamma_sq: 5e-4,
            eta_b_sq: 1e-5,
            horizon: 50,
            start_range: (20, 100),
        }
    }
}

/// `n` independent sequences drawn from `(seed, sequence index)` streams.
///
/// Over a unit step the drift increment `γ W` and its integral are jointly
/// Gaussian, so the future path is sampled exactly on the integer grid.
pub fn linear_wiener_pairs(spec: &SyntheticLinear, n: usize, seed: u64) -> Result<Vec<TrainingPair>> {
    let (lo, hi) = spec.start_range;
    if lo == 0 || hi < lo || spec.horizon == 0 {
        return Err(Error::invalid("bad synthetic start range or horizon"));
    }
    let g = spec.gamma_sq.sqrt();
    let e = spec.eta_b_sq.sqrt();
    (0..n)
        .map(|i| {
            let mut rng = rng::stream(seed, i as u64);
            let t0 = rng.random_range(lo..=hi);
            let history = (1..=t0).map(|t| (t as f64, spec.slope * t as f64)).collect();
            let mut z = spec.slope * t0 as f64;
            let mut w = 0.0;
            let mut times = Vec::with_capacity(spec.horizon);
            let mut values = Vec::with_capacity(spec.horizon);
            for j in 1..=spec.horizon {
                let n1: f64 = StandardNormal.sample(&mut rng);
                let n2: f64 = StandardNormal.sample(&mut rng);
                let n3: f64 = StandardNormal.sample(&mut rng);
                // W(1) ~ N(0, 1); ∫W | W(1) ~ N(W(1)/2, 1/12).
                let dw = n1;
                let int_w = w + 0.5 * dw + (1.0f64 / 12.0).sqrt() * n2;
                z += spec.slope * (1.0 + g * int_w) + e * n3;
                w += dw;
                times.push((t0 as usize + j) as f64);
                values.push(z);
            }
            TrainingPair::new(history, times, values)
        })
        .collect()
}
