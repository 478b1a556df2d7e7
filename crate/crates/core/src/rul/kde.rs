use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GRID_PER_BANDWIDTH: f64 = 4.0;
const MAX_GRID_POINTS: usize = 200_000;
/// Kernels are truncated at this many bandwidths (mass beyond is ~e^-32).
const KERNEL_REACH: f64 = 8.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub enum Bandwidth {
    Fixed(f64),
    /// `0.9 min(σ, IQR/1.34) n_eff^(-1/5)` with `n_eff = 1 / Σ w²`.
    #[default]
    Silverman,
}

impl Bandwidth {
    pub fn resolve(self, samples: &[f64], weights: &[f64]) -> f64 {
        match self {
            Bandwidth::Fixed(h) => h,
            Bandwidth::Silverman => silverman_bandwidth(samples, weights),
        }
    }
}

pub fn silverman_bandwidth(samples: &[f64], weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if samples.is_empty() || !(total > 0.0) {
        return 1.0;
    }
    let mean = samples.iter().zip(weights).map(|(s, w)| s * w).sum::<f64>() / total;
    let var = samples
        .iter()
        .zip(weights)
        .map(|(s, w)| w * (s - mean).powi(2))
        .sum::<f64>()
        / total;
    let sd = var.sqrt();
    let q1 = super::summary::weighted_quantile(samples, weights, 0.25);
    let q3 = super::summary::weighted_quantile(samples, weights, 0.75);
    let spread = match (q1, q3) {
        (Some(a), Some(b)) if b > a => sd.min((b - a) / 1.34),
        _ => sd,
    };
    let n_eff = total * total / weights.iter().map(|w| w * w).sum::<f64>();
    let h = 0.9 * spread * n_eff.powf(-0.2);
    let scale = mean.abs().max(1.0);
    if h > 1e-9 * scale && h.is_finite() {
        h
    } else {
        // Degenerate spread: a narrow kernel relative to the location.
        1e-3 * scale
    }
}

/// Kernel density estimate evaluated on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
}

impl Density {
    /// Trapezoid-rule integral over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .sum()
    }

    pub fn mode(&self) -> Option<f64> {
        self.values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| self.grid[i])
    }

    /// Number of strict local maxima, ignoring wiggles below `rel_tol` of the peak.
    pub fn count_modes(&self, rel_tol: f64) -> usize {
        let peak = self.values.iter().cloned().fold(0.0, f64::max);
        let tol = rel_tol * peak;
        let mut modes = 0;
        let mut rising = true;
        let mut last_extreme = 0.0;
        for &v in &self.values {
            if rising {
                if v > last_extreme {
                    last_extreme = v;
                } else if last_extreme - v > tol {
                    modes += 1;
                    rising = false;
                    last_extreme = v;
                }
            } else if v < last_extreme {
                last_extreme = v;
            } else if v - last_extreme > tol {
                rising = true;
                last_extreme = v;
            }
        }
        if rising && last_extreme > tol {
            modes += 1;
        }
        modes
    }
}

/// Gaussian-kernel mixture on a grid spanning `[min - 4h, max + 4h]`.
pub fn kde(samples: &[f64], weights: &[f64], bandwidth: f64) -> Result<Density> {
    if samples.is_empty() {
        return Err(Error::Empty("kde samples"));
    }
    if samples.len() != weights.len() {
        return Err(Error::invalid(format!(
            "{} samples but {} weights",
            samples.len(),
            weights.len()
        )));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::invalid(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("non-finite kde sample"));
    }
    if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(Error::invalid("kde weights must be nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("kde weights sum to {total}, expected 1")));
    }

    let h = bandwidth;
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min) - 4.0 * h;
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 4.0 * h;
    let span = hi - lo;
    let n = ((span / (h / GRID_PER_BANDWIDTH)).ceil() as usize + 1).clamp(2, MAX_GRID_POINTS);
    let step = span / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|i| lo + i as f64 * step).collect();
    let mut values = vec![0.0; n];

    let norm = 1.0 / (h * (2.0 * std::f64::consts::PI).sqrt());
    let reach = KERNEL_REACH * h;
    for (&s, &w) in samples.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let first = (((s - reach - lo) / step).floor().max(0.0)) as usize;
        let last = ((((s + reach - lo) / step).ceil()) as usize).min(n - 1);
        for i in first..=last {
            let u = (grid[i] - s) / h;
            values[i] += w * norm * (-0.5 * u * u).exp();
        }
    }
    Ok(Density {
        grid,
        values,
        bandwidth: h,
    })
}
