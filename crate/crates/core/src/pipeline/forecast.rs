//! Per-unit forecasting for the four compared methods.

use crate::baseline::linear_pattern;
use crate::cmapss::HiSeries;
use crate::degradation::{spread_integrals, variance_profile, NoiseParams, PatternCurve};
use crate::drift::{joint_moments, posterior_update, update_schedule, DriftPosterior};
use crate::error::{Error, Result};
use crate::eval::{Method, PredictionRecord};
use crate::net::TrajectoryModel;
use crate::rng;
use crate::rul::{curve_crossing, interpolation_rul, point_and_interval, Bandwidth, Crossing, RulDistribution};

use super::config::{ExperimentConfig, PointEstimate};

/// Result of one method at one evaluation time, RUL in cycles.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub method: Method,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub distribution: Option<RulDistribution>,
    /// Drift mean used for the prediction.
    pub psi: f64,
    /// No sampled curve reached the threshold within the horizon cap.
    pub all_censored: bool,
}

/// Drift posteriors after each scheduled update, with the prior first.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTrace {
    pub posteriors: Vec<DriftPosterior>,
    /// Updates where the posterior variance exceeded `Cov(1,1)`.
    pub contraction_violations: usize,
    pub updates: usize,
}

impl PosteriorTrace {
    /// Latest posterior whose update time is at or before `t`.
    pub fn at(&self, t: f64) -> &DriftPosterior {
        self.posteriors
            .iter()
            .rev()
            .find(|p| p.t_last <= t)
            .unwrap_or(&self.posteriors[0])
    }
}

pub struct Forecaster<'a> {
    pub model: Option<&'a TrajectoryModel>,
    /// Noise of the learned trajectory (`φ₀ = 1`).
    pub dnn_noise: NoiseParams,
    /// Linear baseline fit; `phi0` is the fitted drift.
    pub wiener_noise: NoiseParams,
    pub cfg: &'a ExperimentConfig,
    pub seed: u64,
}

fn hi_at(series: &HiSeries, cycle: u32) -> Result<f64> {
    series
        .hi_at(cycle)
        .ok_or_else(|| Error::invalid(format!("unit {} has no cycle {cycle}", series.unit_id)))
}

impl<'a> Forecaster<'a> {
    fn model(&self) -> Result<&'a TrajectoryModel> {
        self.model
            .ok_or_else(|| Error::invalid("the network methods need a trained checkpoint"))
    }

    fn bandwidth(&self) -> Bandwidth {
        self.cfg.rul.bandwidth.map_or(Bandwidth::Silverman, Bandwidth::Fixed)
    }

    /// Unit-drift rollout from the last history point, extended a decoder
    /// horizon at a time until both the mean and the curve `coverage_sd`
    /// deviations below the `psi`-scaled mean have crossed the threshold,
    /// or the horizon cap is reached.
    pub fn dnn_rollout(&self, history: &[(f64, f64)], psi: f64) -> Result<PatternCurve> {
        let model = self.model()?;
        let Some(&(t0, z0)) = history.last() else {
            return Err(Error::Empty("history"));
        };
        let cap = self.cfg.rul.horizon_cap;
        let d = self.cfg.threshold;
        let k = self.cfg.rul.coverage_sd;
        let np = self.dnn_noise;
        let mut hist = history.to_vec();
        let mut times = vec![t0];
        let mut values = vec![z0];
        while times.len() <= cap {
            let m = model.config().horizon.min(cap + 1 - times.len());
            let chunk = model.rollout(&hist, m, 1.0)?;
            for (&t, &v) in chunk.times()[1..].iter().zip(&chunk.values()[1..]) {
                times.push(t);
                values.push(v);
                hist.push((t, v));
            }
            let last = *values.last().expect("nonempty");
            if last >= d {
                let (_, sq) = *spread_integrals(&times, &values).last().expect("nonempty");
                let xi = np.gamma_sq * sq + np.eta_b_sq * (times.len() - 1) as f64;
                if z0 + psi * (last - z0) - k * xi.sqrt() >= d {
                    break;
                }
            }
        }
        PatternCurve::new(times, values)
    }

    fn segment(&self, method: Method, series: &HiSeries, from: u32, to: u32) -> Result<PatternCurve> {
        let steps = (to - from) as usize;
        match method {
            Method::AdaptiveDnn => self.model()?.rollout(&series.history_until(from), steps, 1.0),
            Method::AdaptiveWiener => linear_pattern(from as f64, steps, 1.0),
            _ => Err(Error::invalid(format!("{method} does not update its drift"))),
        }
    }

    /// Drift posteriors through the update schedule of the unit. The prior
    /// sits one update period before the warmup (or at the first cycle).
    pub fn posterior_trace(&self, method: Method, series: &HiSeries) -> Result<PosteriorTrace> {
        let first = *series.cycles.first().ok_or(Error::Empty("unit series"))?;
        let up = self.cfg.update;
        let (psi0, np) = match method {
            Method::AdaptiveDnn | Method::Dnn => (1.0, self.dnn_noise),
            Method::AdaptiveWiener | Method::Wiener => (self.wiener_noise.phi0, self.wiener_noise),
        };
        let t0 = up.warmup.saturating_sub(up.every).max(first);
        let mut post = DriftPosterior::new(psi0, up.omega0_sq, t0 as f64)?;
        let mut trace = PosteriorTrace {
            posteriors: vec![post],
            contraction_violations: 0,
            updates: 0,
        };
        if !method.adaptive() {
            return Ok(trace);
        }
        let mut prev = t0;
        for u in update_schedule(series.last_cycle(), up.every, up.warmup) {
            if u <= prev {
                continue;
            }
            let seg = self.segment(method, series, prev, u)?;
            let jm = joint_moments(&post, &seg, &np, hi_at(series, prev)?)?;
            post = if jm.cov11() <= 0.0 && jm.cov22() <= 0.0 {
                // No noise and a known drift: nothing to learn.
                DriftPosterior { t_last: u as f64, ..post }
            } else {
                posterior_update(&post, hi_at(series, u)?, &jm)?
            };
            trace.updates += 1;
            if post.omega_sq > jm.cov11() {
                trace.contraction_violations += 1;
            }
            trace.posteriors.push(post);
            prev = u;
        }
        Ok(trace)
    }

    fn sampled(
        &self,
        method: Method,
        mean: &PatternCurve,
        xi: &PatternCurve,
        psi: f64,
        seed: u64,
    ) -> Result<Outcome> {
        let cap = self.cfg.rul.horizon_cap as f64;
        let capped = |all_censored| Outcome {
            method,
            point: cap,
            ci_low: cap,
            ci_high: cap,
            distribution: None,
            psi,
            all_censored,
        };
        let dist = match interpolation_rul(
            mean,
            xi,
            1.0,
            self.cfg.threshold,
            self.cfg.rul.n_curves,
            seed,
            self.bandwidth(),
        ) {
            Ok(d) => d,
            Err(Error::AllCensored { .. }) => return Ok(capped(true)),
            Err(e) => return Err(e),
        };
        let (point, lo, hi) = match point_and_interval(&dist, self.cfg.ci_level) {
            Ok(s) => {
                let p = match self.cfg.rul.point {
                    PointEstimate::Mean => s.mean,
                    PointEstimate::Median => s.median,
                };
                (p, s.lower, s.upper)
            }
            Err(Error::InsufficientSamples { .. }) => {
                let s = dist.samples[0];
                (s, s, s)
            }
            Err(e) => return Err(e),
        };
        Ok(Outcome {
            method,
            point,
            ci_low: lo,
            ci_high: hi,
            distribution: Some(dist),
            psi,
            all_censored: false,
        })
    }

    /// Every requested method at cycle `t`. Traces must come from
    /// [`Forecaster::posterior_trace`] for the adaptive methods.
    pub fn predict_at(
        &self,
        series: &HiSeries,
        t: u32,
        methods: &[Method],
        traces: &[(Method, PosteriorTrace)],
    ) -> Result<Vec<Outcome>> {
        let z = hi_at(series, t)?;
        let tf = t as f64;
        let seed = rng::mix(rng::mix(self.seed, series.unit_id as u64), t as u64);
        let psi_of = |m: Method| -> f64 {
            traces
                .iter()
                .find(|(mm, _)| *mm == m)
                .map_or(1.0, |(_, tr)| tr.at(tf).psi)
        };
        let cap = self.cfg.rul.horizon_cap;
        let mut dnn_roll: Option<PatternCurve> = None;
        let mut out = Vec::with_capacity(methods.len());
        for &m in methods {
            let outcome = match m {
                Method::Dnn | Method::AdaptiveDnn => {
                    if dnn_roll.is_none() {
                        let psi = if methods.contains(&Method::AdaptiveDnn) {
                            psi_of(Method::AdaptiveDnn).min(1.0)
                        } else {
                            1.0
                        };
                        dnn_roll = Some(self.dnn_rollout(&series.history_until(t), psi)?);
                    }
                    let roll = dnn_roll.as_ref().expect("set above");
                    if m == Method::Dnn {
                        let point = match curve_crossing(roll, self.cfg.threshold) {
                            Crossing::At(c) => c - tf,
                            Crossing::Censored => cap as f64,
                        };
                        Outcome {
                            method: m,
                            point,
                            ci_low: point,
                            ci_high: point,
                            distribution: None,
                            psi: 1.0,
                            all_censored: false,
                        }
                    } else {
                        let psi = psi_of(m);
                        let mean = roll.map_values(|v| z + psi * (v - z));
                        let xi = variance_profile(roll, &self.dnn_noise, tf)?;
                        self.sampled(m, &mean, &xi, psi, seed)?
                    }
                }
                Method::Wiener | Method::AdaptiveWiener => {
                    let psi = if m == Method::Wiener { self.wiener_noise.phi0 } else { psi_of(m) };
                    let q = linear_pattern(tf, cap, 1.0)?;
                    let mean = q.map_values(|v| z + psi * (v - tf));
                    let xi = variance_profile(&q, &self.wiener_noise, tf)?;
                    self.sampled(m, &mean, &xi, psi, seed)?
                }
            };
            out.push(outcome);
        }
        Ok(out)
    }

    /// Records for every evaluation cycle of a run-to-failure unit, with
    /// the true RUL taken as the distance to its last cycle.
    pub fn evaluate_unit(&self, series: &HiSeries, methods: &[Method]) -> Result<UnitEvaluation> {
        let traces = methods
            .iter()
            .filter(|m| m.adaptive())
            .map(|&m| Ok((m, self.posterior_trace(m, series)?)))
            .collect::<Result<Vec<_>>>()?;
        let last = series.last_cycle();
        let mut records = Vec::new();
        let mut all_censored = 0;
        let mut t = self.cfg.eval.start.max(*series.cycles.first().unwrap_or(&1));
        while t <= last {
            for o in self.predict_at(series, t, methods, &traces)? {
                all_censored += o.all_censored as usize;
                records.push(PredictionRecord {
                    unit_id: series.unit_id,
                    eval_time: t,
                    true_rul: (last - t) as f64,
                    predicted_rul: o.point,
                    ci_low: o.ci_low,
                    ci_high: o.ci_high,
                    method: o.method,
                });
            }
            t += self.cfg.eval.every;
        }
        Ok(UnitEvaluation {
            records,
            traces,
            all_censored,
        })
    }
}

#[derive(Debug, Clone)]
pub struct UnitEvaluation {
    pub records: Vec<PredictionRecord>,
    pub traces: Vec<(Method, PosteriorTrace)>,
    pub all_censored: usize,
}
