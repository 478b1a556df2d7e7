use rand::Rng as _;

use super::loss::pair_objective;
use super::{TrainingPair, TrajectoryModel};
use crate::error::Result;
use crate::rng;

/// Gradients smaller than this in both estimates are compared on absolute
/// error; the two tolerances meet at this scale.
const SMALL_GRADIENT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|a - n| / max(|a|, |n|)` over parameters with a gradient
    /// of at least `1e-4`.
    pub max_rel_error: f64,
    /// Largest `|a - n|` over the remaining parameters.
    pub max_abs_error: f64,
    pub worst_index: usize,
    pub n_params: usize,
}

impl GradCheckReport {
    pub fn passed(&self, rel_tol: f64, abs_tol: f64) -> bool {
        self.max_rel_error <= rel_tol && self.max_abs_error < abs_tol
    }
}

/// Central finite differences against the analytic gradient of the pair's
/// loss, over every parameter including the log-variances.
pub fn grad_check(model: &TrajectoryModel, pair: &TrainingPair, epsilon: f64) -> Result<GradCheckReport> {
    check(model, pair, epsilon, None, |_| {})
}

/// As [`grad_check`] with a fixed dropout mask drawn from `mask_seed`.
pub fn grad_check_masked(
    model: &TrajectoryModel,
    pair: &TrainingPair,
    epsilon: f64,
    mask_seed: u64,
) -> Result<GradCheckReport> {
    let mask = dropout_mask(model.config().hidden_dim, model.config().dropout_p, &mut rng::seeded(mask_seed));
    check(model, pair, epsilon, Some(&mask), |_| {})
}

/// As [`grad_check`], but `tamper` may alter the analytic gradient first.
pub fn grad_check_with(
    model: &TrajectoryModel,
    pair: &TrainingPair,
    epsilon: f64,
    tamper: impl FnOnce(&mut [f64]),
) -> Result<GradCheckReport> {
    check(model, pair, epsilon, None, tamper)
}

pub(crate) fn dropout_mask(d: usize, p: f64, rng: &mut rng::Rng) -> Vec<f64> {
    let keep = 1.0 / (1.0 - p);
    (0..d)
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
        .collect()
}

fn check(
    model: &TrajectoryModel,
    pair: &TrainingPair,
    epsilon: f64,
    mask: Option<&[f64]>,
    tamper: impl FnOnce(&mut [f64]),
) -> Result<GradCheckReport> {
    let n = model.n_params();
    let mut analytic = vec![0.0; n];
    pair_objective(model, model.params(), pair, mask, Some(&mut analytic))?;
    tamper(&mut analytic);

    let mut p = model.params().to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        worst_index: 0,
        n_params: n,
    };
    let mut worst = 0.0;
    for i in 0..n {
        let orig = p[i];
        p[i] = orig + epsilon;
        let up = pair_objective(model, &p, pair, mask, None)?;
        p[i] = orig - epsilon;
        let down = pair_objective(model, &p, pair, mask, None)?;
        p[i] = orig;
        let numeric = (up - down) / (2.0 * epsilon);
        let a = analytic[i];
        let scale = a.abs().max(numeric.abs());
        let diff = (a - numeric).abs();
        let badness = if scale >= SMALL_GRADIENT {
            let rel = diff / scale;
            report.max_rel_error = report.max_rel_error.max(rel);
            rel
        } else {
            report.max_abs_error = report.max_abs_error.max(diff);
            diff / SMALL_GRADIENT
        };
        if badness > worst {
            worst = badness;
            report.worst_index = i;
        }
    }
    Ok(report)
}
