//! Linear Wiener baseline: `Q(t) = t` with drift, drift diffusion and
//! observation noise fitted by maximum likelihood on degradation increments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::degradation::{NoiseParams, PatternCurve};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WienerFit {
    pub noise: NoiseParams,
    pub n_increments: usize,
    /// Mean negative log-likelihood per target at the optimum.
    pub nll: f64,
}

// Residual sums over all (origin, target) pairs sharing a lag.
struct LagStats {
    lag: f64,
    count: f64,
    sum_sq: f64,
}

fn lag_stats(series: &[(Vec<f64>, Vec<f64>)], drift: f64, horizon: usize) -> Vec<LagStats> {
    let mut by_lag: BTreeMap<u64, LagStats> = BTreeMap::new();
    for (t, z) in series {
        for i in 0..t.len() {
            for j in i + 1..t.len().min(i + 1 + horizon) {
                let lag = t[j] - t[i];
                let r = z[j] - z[i] - drift * lag;
                let e = by_lag.entry(lag.to_bits()).or_insert(LagStats {
                    lag,
                    count: 0.0,
                    sum_sq: 0.0,
                });
                e.count += 1.0;
                e.sum_sq += r * r;
            }
        }
    }
    by_lag.into_values().collect()
}

fn mean_nll(stats: &[LagStats], gamma_sq: f64, eta_b_sq: f64) -> f64 {
    let mut total = 0.0;
    let mut n = 0.0;
    for s in stats {
        let v = gamma_sq * s.lag.powi(3) / 3.0 + eta_b_sq * s.lag;
        total += 0.5 * s.sum_sq / v + 0.5 * s.count * v.ln();
        n += s.count;
    }
    total / n
}

/// Fit on `(times, values)` series.
///
/// The drift is the pooled mean increment per unit time and the observation
/// diffusion the residual variance of one-step increments per unit time.
/// The drift diffusion is then chosen by a one-dimensional search over
/// `log10 γ²` maximizing the likelihood of all targets up to `horizon` steps
/// ahead, whose variance under `Q(t) = t` is `γ² Δ³/3 + η_B² Δ`.
pub fn fit_linear_wiener(series: &[(Vec<f64>, Vec<f64>)], horizon: usize) -> Result<WienerFit> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be >= 1"));
    }
    let mut incs = Vec::new();
    for (t, z) in series {
        if t.len() != z.len() {
            return Err(Error::invalid("series times and values differ in length"));
        }
        for k in 1..t.len() {
            let dt = t[k] - t[k - 1];
            if !(dt > 0.0) {
                return Err(Error::invalid(format!("times must increase, got step {dt}")));
            }
            incs.push((dt, z[k] - z[k - 1]));
        }
    }
    let n = incs.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, have: n });
    }
    let drift = incs.iter().map(|i| i.1).sum::<f64>() / incs.iter().map(|i| i.0).sum::<f64>();
    let eta_b_sq = (incs
        .iter()
        .map(|&(dt, dz)| (dz - drift * dt).powi(2) / dt)
        .sum::<f64>()
        / (n - 1) as f64)
        .max(1e-12);

    let stats = lag_stats(series, drift, horizon);
    let f = |lg: f64| mean_nll(&stats, 10f64.powf(lg), eta_b_sq);
    let (mut a, mut b) = (-14.0, 0.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let lg = 0.5 * (a + b);
    let mut gamma_sq = 10f64.powf(lg);
    let mut nll = f(lg);
    let at_zero = mean_nll(&stats, 0.0, eta_b_sq);
    if at_zero <= nll {
        gamma_sq = 0.0;
        nll = at_zero;
    }
    Ok(WienerFit {
        noise: NoiseParams::new(gamma_sq, eta_b_sq, drift)?,
        n_increments: n,
        nll,
    })
}

/// Identity pattern `Q(t) = t` on `t_now, t_now + step, ...` for `n_steps`.
pub fn linear_pattern(t_now: f64, n_steps: usize, step: f64) -> Result<PatternCurve> {
    let times: Vec<f64> = (0..=n_steps).map(|k| t_now + k as f64 * step).collect();
    PatternCurve::new(times.clone(), times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand_distr::{Distribution, StandardNormal};

    fn simulate(phi: f64, gamma_sq: f64, eta_b_sq: f64, units: usize, len: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
        (0..units)
            .map(|u| {
                let mut r = rng::stream(seed, u as u64);
                let mut drift = phi;
                let mut z = 0.0;
                let mut t = vec![0.0];
                let mut v = vec![0.0];
                // Exact one-step moments: (W(1), ∫W) then the observation noise.
                for k in 1..=len {
                    let n1: f64 = StandardNormal.sample(&mut r);
                    let n2: f64 = StandardNormal.sample(&mut r);
                    let n3: f64 = StandardNormal.sample(&mut r);
                    let w1 = n1;
                    let int_w = 0.5 * w1 + (1.0f64 / 12.0).sqrt() * n2;
                    z += drift + gamma_sq.sqrt() * int_w + eta_b_sq.sqrt() * n3;
                    drift += gamma_sq.sqrt() * w1;
                    t.push(k as f64);
                    v.push(z);
                }
                (t, v)
            })
            .collect()
    }

    #[test]
    fn recovers_noise_only_process() {
        let data = simulate(0.01, 0.0, 1e-4, 40, 200, 1);
        let fit = fit_linear_wiener(&data, 20).unwrap();
        assert!((fit.noise.phi0 - 0.01).abs() < 5e-4, "{fit:?}");
        assert!((fit.noise.eta_b_sq / 1e-4 - 1.0).abs() < 0.05, "{fit:?}");
        assert!(fit.noise.gamma_sq < 1e-8, "{fit:?}");
    }

    #[test]
    fn search_maximizes_the_profile() {
        let data = simulate(0.01, 1e-6, 1e-4, 100, 200, 2);
        let fit = fit_linear_wiener(&data, 50).unwrap();
        // Wandering drift shows up as positive drift diffusion.
        assert!(fit.noise.gamma_sq > 1e-7, "{fit:?}");
        let stats = lag_stats(&data, fit.noise.phi0, 50);
        let best_on_grid = (0..=1400)
            .map(|k| mean_nll(&stats, 10f64.powf(-14.0 + k as f64 * 0.01), fit.noise.eta_b_sq))
            .fold(f64::INFINITY, f64::min);
        assert!(fit.nll <= best_on_grid + 1e-9, "{} vs grid {}", fit.nll, best_on_grid);
    }

    #[test]
    fn errors() {
        assert!(fit_linear_wiener(&[], 5).is_err());
        assert!(fit_linear_wiener(&[(vec![0.0, 1.0], vec![0.0, 1.0])], 0).is_err());
        assert!(fit_linear_wiener(&[(vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 2.0])], 2).is_err());
    }

    #[test]
    fn pattern_is_identity() {
        let q = linear_pattern(20.0, 3, 1.0).unwrap();
        assert_eq!(q.values(), &[20.0, 21.0, 22.0, 23.0]);
        assert_eq!(q.times(), q.values());
    }
}
