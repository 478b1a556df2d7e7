//! Heteroscedastic Gaussian likelihood of the decoded trajectories.
//!
//! Target `j` of a pair has variance
//! `γ² ∫_{t_{i-1}}^{t_j} (Z_j - Z(τ))² dτ + η_B² (t_j - t_{i-1})`, where the
//! integrand uses the observed increments (the network's own curve is not
//! differentiated through the variance).

use rayon::prelude::*;

use super::pass;
use super::{relative_times, TrainingPair, TrajectoryModel};
use crate::degradation::{spread_integrals, NoiseParams, PatternCurve};
use crate::error::{Error, Result};

/// `(γ² coefficient, η_B² coefficient)` for every target of the pair.
pub(crate) fn variance_terms(pair: &TrainingPair) -> Vec<(f64, f64)> {
    let (t0, z0) = pair.last_observation();
    let mut times = Vec::with_capacity(pair.len() + 1);
    let mut values = Vec::with_capacity(pair.len() + 1);
    times.push(t0);
    values.push(z0);
    times.extend_from_slice(&pair.future_times);
    values.extend_from_slice(&pair.future_values);
    spread_integrals(&times, &values)
        .into_iter()
        .zip(&times)
        .skip(1)
        .map(|((_, sq), &t)| (sq, t - t0))
        .collect()
}

pub fn step_variances(pair: &TrainingPair, np: &NoiseParams) -> Result<Vec<f64>> {
    variance_terms(pair)
        .into_iter()
        .enumerate()
        .map(|(index, (a, b))| {
            let variance = np.gamma_sq * a + np.eta_b_sq * b;
            if variance > 0.0 && variance.is_finite() {
                Ok(variance)
            } else {
                Err(Error::NonPositiveVariance { index, variance })
            }
        })
        .collect()
}

/// Mean over the pair's targets of `½ (Z - Q)² / Var + ½ ln Var`.
pub fn nll_loss(predicted: &PatternCurve, pair: &TrainingPair, np: &NoiseParams) -> Result<f64> {
    let var = step_variances(pair, np)?;
    let mut total = 0.0;
    for ((&t, &z), v) in pair.future_times.iter().zip(&pair.future_values).zip(var) {
        let r = z - predicted.value_at(t)?;
        total += 0.5 * r * r / v + 0.5 * v.ln();
    }
    Ok(total / pair.len() as f64)
}

/// Deterministic (no dropout) loss averaged over pairs.
pub fn mean_loss(model: &TrajectoryModel, pairs: &[TrainingPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("training pairs"));
    }
    let losses: Vec<f64> = pairs
        .par_iter()
        .map(|p| pair_objective(model, model.params(), p, None, None))
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / pairs.len() as f64)
}

/// Loss of one pair at parameters `params`, optionally accumulating its
/// gradient. `mask` multiplies the health vector (inverted dropout).
pub(crate) fn pair_objective(
    model: &TrajectoryModel,
    params: &[f64],
    pair: &TrainingPair,
    mask: Option<&[f64]>,
    grad: Option<&mut [f64]>,
) -> Result<f64> {
    let lay = model.layout();
    let (t_last, z_last) = pair.last_observation();
    let enc = pass::encode(lay, params, &model.encoder_inputs(&pair.history));
    let h = enc.last_hidden();
    let hd: Vec<f64> = match mask {
        Some(m) => h.iter().zip(m).map(|(a, b)| a * b).collect(),
        None => h.to_vec(),
    };
    let tau = relative_times(t_last, &pair.future_times, model.cycle_scale(), model.config().horizon);
    let (raw, dcache) = pass::decode(lay, params, &hd, &tau);

    let gamma_sq = params[lay.log_gamma_sq].exp();
    let eta_b_sq = params[lay.log_eta_b_sq].exp();
    let terms = variance_terms(pair);
    let m = pair.len() as f64;
    let mut loss = 0.0;
    let mut draw = vec![0.0; raw.len()];
    let mut g_lg = 0.0;
    let mut g_le = 0.0;
    for (j, (&(a, b), &z)) in terms.iter().zip(&pair.future_values).enumerate() {
        let v = gamma_sq * a + eta_b_sq * b;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NonPositiveVariance { index: j, variance: v });
        }
        let r = z - (z_last + raw[j + 1] - raw[0]);
        loss += 0.5 * r * r / v + 0.5 * v.ln();
        let dpred = -r / (m * v);
        draw[j + 1] += dpred;
        draw[0] -= dpred;
        let dv = (0.5 / v - 0.5 * r * r / (v * v)) / m;
        g_lg += dv * gamma_sq * a;
        g_le += dv * eta_b_sq * b;
    }
    let loss = loss / m;

    if let Some(grad) = grad {
        grad[lay.log_gamma_sq] += g_lg;
        grad[lay.log_eta_b_sq] += g_le;
        let dhd = pass::decode_backward(lay, params, &dcache, &draw, grad);
        let dh: Vec<f64> = match mask {
            Some(mk) => dhd.iter().zip(mk).map(|(a, b)| a * b).collect(),
            None => dhd,
        };
        pass::encode_backward(lay, params, &enc, &dh, grad);
    }
    Ok(loss)
}
