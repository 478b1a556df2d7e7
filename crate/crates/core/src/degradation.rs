//! Wiener degradation process with a random-walk drift.
//!
//! An observation follows `Z(t) = Z(t_i) + ∫ φ(τ) dQ(τ) + η_B B(t - t_i)` where the
//! drift itself wanders as `φ(t) = φ_i + γ Λ(t - t_i)`. Conditional on the drift
//! mean `ψ` at `t_i` the observation is Gaussian with mean `ψ Q(t)` (after
//! anchoring `Q(t_i) = Z(t_i) / ψ`) and variance
//!
//! ```text
//! ξ(t) = γ² ∫_{t_i}^{t} (Q(t) - Q(τ))² dτ + η_B² (t - t_i)
//! ```
//!
//! Pattern curves are piecewise linear between grid nodes, and the integrals
//! above are evaluated exactly for that interpolant.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Diffusion coefficients and initial drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Drift diffusion γ².
    pub gamma_sq: f64,
    /// Observation diffusion η_B².
    pub eta_b_sq: f64,
    /// Initial drift φ₀.
    pub phi0: f64,
}

impl NoiseParams {
    pub fn new(gamma_sq: f64, eta_b_sq: f64, phi0: f64) -> Result<Self> {
        let np = NoiseParams {
            gamma_sq,
            eta_b_sq,
            phi0,
        };
        np.validate()?;
        Ok(np)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_sq >= 0.0 && self.gamma_sq.is_finite()) {
            return Err(Error::invalid(format!("gamma_sq must be >= 0, got {}", self.gamma_sq)));
        }
        if !(self.eta_b_sq >= 0.0 && self.eta_b_sq.is_finite()) {
            return Err(Error::invalid(format!("eta_b_sq must be >= 0, got {}", self.eta_b_sq)));
        }
        if !self.phi0.is_finite() {
            return Err(Error::invalid("phi0 must be finite"));
        }
        Ok(())
    }

    /// Same parameters with both diffusion coefficients multiplied by `c`.
    pub fn scaled_diffusion(&self, c: f64) -> Self {
        NoiseParams {
            gamma_sq: self.gamma_sq * c,
            eta_b_sq: self.eta_b_sq * c,
            phi0: self.phi0,
        }
    }
}

/// A curve sampled on a strictly increasing time grid and linearly
/// interpolated in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternCurve {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl PatternCurve {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidCurve(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::InvalidCurve("need at least two grid points".into()));
        }
        if times.iter().any(|t| !t.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCurve("non-finite time or value".into()));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidCurve(format!(
                "times not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(PatternCurve { times, values })
    }

    pub fn from_fn(times: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values)
    }

    /// Uniform grid `start, start + step, ...` up to and including `end`
    /// (the last node is clamped to `end`).
    pub fn uniform_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
        if !(step > 0.0) || !(end > start) || !start.is_finite() || !end.is_finite() {
            return Err(Error::invalid(format!(
                "bad grid: start {start}, end {end}, step {step}"
            )));
        }
        let n = ((end - start) / step - 1e-9).ceil() as usize;
        let mut times: Vec<f64> = (0..n).map(|i| start + i as f64 * step).collect();
        times.push(end);
        Ok(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start() && t <= self.end()
    }

    pub fn min_spacing(&self) -> f64 {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn value_at(&self, t: f64) -> Result<f64> {
        if !self.contains(t) {
            return Err(Error::OutsideDomain {
                t,
                start: self.start(),
                end: self.end(),
            });
        }
        let idx = self.times.partition_point(|&x| x <= t);
        if idx == 0 {
            return Ok(self.values[0]);
        }
        if idx == self.times.len() {
            return Ok(self.values[idx - 1]);
        }
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let (v0, v1) = (self.values[idx - 1], self.values[idx]);
        Ok(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        PatternCurve {
            times: self.times.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// The part of the curve on `[from, to]`, with interpolated end nodes.
    pub fn segment(&self, from: f64, to: f64) -> Result<Self> {
        if !(to > from) {
            return Err(Error::invalid(format!("empty segment [{from}, {to}]")));
        }
        let first = self.value_at(from)?;
        let last = self.value_at(to)?;
        let mut times = vec![from];
        let mut values = vec![first];
        for (&t, &v) in self.times.iter().zip(&self.values) {
            if t > from && t < to {
                times.push(t);
                values.push(v);
            }
        }
        times.push(to);
        values.push(last);
        PatternCurve::new(times, values)
    }

    /// Sub-curve starting exactly at `t_start` and keeping every later node.
    pub fn tail_from(&self, t_start: f64) -> Result<Self> {
        if !self.contains(t_start) {
            return Err(Error::OutsideDomain {
                t: t_start,
                start: self.start(),
                end: self.end(),
            });
        }
        if t_start >= self.end() {
            return Err(Error::invalid(format!(
                "curve does not extend beyond t = {t_start}"
            )));
        }
        self.segment(t_start, self.end())
    }
}

/// One-step increments between consecutive observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementStats {
    pub delta_q: f64,
    pub delta_z: f64,
    pub delta_t: f64,
}

/// Current observation of a monitored unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradationState {
    pub t_now: f64,
    pub z_now: f64,
    pub threshold: f64,
}

impl DegradationState {
    pub fn new(t_now: f64, z_now: f64, threshold: f64) -> Result<Self> {
        if !threshold.is_finite() {
            return Err(Error::invalid("threshold must be finite"));
        }
        if !(t_now >= 0.0) || !z_now.is_finite() {
            return Err(Error::invalid(format!("bad state t={t_now} z={z_now}")));
        }
        Ok(DegradationState {
            t_now,
            z_now,
            threshold,
        })
    }

    /// Closed threshold: a unit at exactly `D` has failed.
    pub fn failed(&self) -> bool {
        self.z_now >= self.threshold
    }
}

pub fn mean_trajectory(curve: &PatternCurve, drift_mean: f64) -> PatternCurve {
    curve.map_values(|q| q * drift_mean)
}

/// `(1/3) γ² ΔZ² Δt + η_B² Δt`.
pub fn variance_onestep(inc: &IncrementStats, np: &NoiseParams) -> Result<f64> {
    if !(inc.delta_t > 0.0) {
        return Err(Error::invalid(format!(
            "delta_t must be positive, got {}",
            inc.delta_t
        )));
    }
    Ok(np.gamma_sq * inc.delta_z * inc.delta_z * inc.delta_t / 3.0 + np.eta_b_sq * inc.delta_t)
}

/// Spread integrals of a piecewise-linear curve measured from its first node.
///
/// For every node `j` returns
/// `(∫_{t_0}^{t_j} (Q_j - Q(τ)) dτ, ∫_{t_0}^{t_j} (Q_j - Q(τ))² dτ)`,
/// evaluated exactly for the linear interpolant in O(n).
pub fn spread_integrals(times: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    debug_assert_eq!(times.len(), values.len());
    let Some(&base) = values.first() else {
        return Vec::new();
    };
    // Over [a, b] with linear Q: ∫ (c - Q) = h (c - (a+b)/2) and
    // ∫ (c - Q)² = h (c² - c (a+b) + (a² + ab + b²)/3).
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut out = Vec::with_capacity(times.len());
    out.push((0.0, 0.0));
    for k in 1..times.len() {
        let h = times[k] - times[k - 1];
        let a = values[k - 1] - base;
        let b = values[k] - base;
        s0 += h;
        s1 += h * (a + b);
        s2 += h * (a * a + a * b + b * b) / 3.0;
        let c = b;
        let lin = c * s0 - 0.5 * s1;
        let sq = (c * c * s0 - c * s1 + s2).max(0.0);
        out.push((lin, sq));
    }
    out
}

/// Spread integrals to the last node only, summed interval by interval.
pub fn spread_integrals_to_end(times: &[f64], values: &[f64]) -> (f64, f64) {
    let Some(&c) = values.last() else {
        return (0.0, 0.0);
    };
    let mut lin = 0.0;
    let mut sq = 0.0;
    for k in 1..times.len() {
        let h = times[k] - times[k - 1];
        let u = c - values[k - 1];
        let v = c - values[k];
        lin += h * (u + v) / 2.0;
        sq += h * (u * u + u * v + v * v) / 3.0;
    }
    (lin, sq)
}

/// Predictive variance ξ(t) on the curve's grid from `t_start` onwards.
pub fn variance_profile(
    curve: &PatternCurve,
    np: &NoiseParams,
    t_start: f64,
) -> Result<PatternCurve> {
    let tail = curve.tail_from(t_start)?;
    let integrals = spread_integrals(tail.times(), tail.values());
    let values = tail
        .times()
        .iter()
        .zip(&integrals)
        .map(|(&t, &(_, sq))| np.gamma_sq * sq + np.eta_b_sq * (t - t_start))
        .collect();
    PatternCurve::new(tail.times().to_vec(), values)
}

/// Monte-Carlo paths sampled at the pattern curve's grid nodes.
#[derive(Debug, Clone)]
pub struct SampledPaths {
    pub times: Vec<f64>,
    pub paths: Vec<Vec<f64>>,
}

impl SampledPaths {
    /// Sample mean and (unbiased) variance across paths at grid node `idx`.
    pub fn moments_at(&self, idx: usize) -> (f64, f64) {
        let n = self.paths.len() as f64;
        let mean = self.paths.iter().map(|p| p[idx]).sum::<f64>() / n;
        let var = self
            .paths
            .iter()
            .map(|p| (p[idx] - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0).max(1.0);
        (mean, var)
    }
}

/// Euler-Maruyama discretisation of the degradation SDE along a pattern curve.
///
/// Each grid interval is split into equal sub-steps no longer than `dt`, so
/// every path lands exactly on the grid nodes. The drift used for an
/// increment is the one at the left end of the sub-step.
#[derive(Debug, Clone)]
pub struct PathSimulator<'a> {
    curve: &'a PatternCurve,
    np: NoiseParams,
    drift_init: f64,
    dt: f64,
}

impl<'a> PathSimulator<'a> {
    pub fn new(curve: &'a PatternCurve, np: NoiseParams, drift_init: f64, dt: f64) -> Result<Self> {
        np.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        let spacing = curve.min_spacing();
        if dt > spacing * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "dt = {dt} exceeds the grid spacing {spacing}"
            )));
        }
        if !drift_init.is_finite() {
            return Err(Error::invalid("drift_init must be finite"));
        }
        Ok(PathSimulator {
            curve,
            np,
            drift_init,
            dt,
        })
    }

    fn substeps(&self, h: f64) -> usize {
        ((h / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    /// Walks one path and calls `visit(node_index, z)` at every grid node.
    /// Stops early when `visit` returns `false`.
    fn walk(&self, path_seed: u64, path_index: u64, mut on_step: impl FnMut(Step) -> bool) {
        let mut rng = rng::stream(path_seed, path_index);
        let times = self.curve.times();
        let q = self.curve.values();
        let mut z = self.drift_init * q[0];
        let mut phi = self.drift_init;
        if !on_step(Step::Node { idx: 0, t: times[0], z }) {
            return;
        }
        let eta = self.np.eta_b_sq.sqrt();
        let gamma = self.np.gamma_sq.sqrt();
        for k in 1..times.len() {
            let h = times[k] - times[k - 1];
            let n = self.substeps(h);
            let hs = h / n as f64;
            let dq = (q[k] - q[k - 1]) / n as f64;
            let obs_sd = eta * hs.sqrt();
            let drift_sd = gamma * hs.sqrt();
            let mut t = times[k - 1];
            for s in 0..n {
                let z_prev = z;
                z += phi * dq;
                if obs_sd > 0.0 {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    z += obs_sd * e;
                }
                if drift_sd > 0.0 {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    phi += drift_sd * e;
                }
                let t_prev = t;
                t = if s + 1 == n { times[k] } else { times[k - 1] + (s + 1) as f64 * hs };
                if !on_step(Step::Sub {
                    t_prev,
                    t,
                    z_prev,
                    z,
                }) {
                    return;
                }
            }
            if !on_step(Step::Node { idx: k, t: times[k], z }) {
                return;
            }
        }
    }

    /// Values of one path at every grid node.
    pub fn sample_path(&self, seed: u64, path_index: u64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.curve.len());
        self.walk(seed, path_index, |step| {
            if let Step::Node { z, .. } = step {
                out.push(z);
            }
            true
        });
        out
    }

    /// First time the path reaches `threshold` (closed), linearly
    /// interpolated within the sub-step, or `None` if it never does on the grid.
    pub fn first_passage(&self, seed: u64, path_index: u64, threshold: f64) -> Option<f64> {
        let mut hit = None;
        self.walk(seed, path_index, |step| match step {
            Step::Node { idx: 0, t, z } => {
                if z >= threshold {
                    hit = Some(t);
                    false
                } else {
                    true
                }
            }
            Step::Node { .. } => true,
            Step::Sub {
                t_prev,
                t,
                z_prev,
                z,
            } => {
                if z >= threshold {
                    let frac = if z > z_prev {
                        ((threshold - z_prev) / (z - z_prev)).clamp(0.0, 1.0)
                    } else {
                        1.0
                    };
                    hit = Some(t_prev + frac * (t - t_prev));
                    false
                } else {
                    true
                }
            }
        });
        hit
    }

    pub fn curve(&self) -> &PatternCurve {
        self.curve
    }
}

enum Step {
    Node { idx: usize, t: f64, z: f64 },
    Sub { t_prev: f64, t: f64, z_prev: f64, z: f64 },
}

/// Simulates `n_paths` independent paths and records them at the grid nodes.
///
/// Path `i` draws from its own stream of `seed`, so the result does not
/// depend on how the work is split across threads.
pub fn simulate_paths(
    curve: &PatternCurve,
    np: &NoiseParams,
    drift_init: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<SampledPaths> {
    if n_paths == 0 {
        return Err(Error::invalid("n_paths must be >= 1"));
    }
    let sim = PathSimulator::new(curve, *np, drift_init, dt)?;
    let paths = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| sim.sample_path(seed, i))
        .collect();
    Ok(SampledPaths {
        times: curve.times().to_vec(),
        paths,
    })
}
