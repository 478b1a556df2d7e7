use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gradcheck::dropout_mask;
use super::loss::{pair_objective, variance_terms};
use super::{NetConfig, TrainingPair, TrajectoryModel, LOG_VAR_BOUNDS};
use crate::degradation::NoiseParams;
use crate::error::{Error, Result};
use crate::rng;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training loss of each epoch (dropout active).
    pub epoch_losses: Vec<f64>,
    pub noise: NoiseParams,
    pub n_pairs: usize,
    pub n_params: usize,
}

pub fn train(pairs: &[TrainingPair], cfg: &NetConfig, seed: u64) -> Result<TrajectoryModel> {
    train_with_report(pairs, cfg, seed).map(|(m, _)| m)
}

/// Adam on the mean pair loss. Mini-batch gradients are evaluated in
/// parallel and reduced in pair order, so the result depends only on `seed`.
pub fn train_with_report(
    pairs: &[TrainingPair],
    cfg: &NetConfig,
    seed: u64,
) -> Result<(TrajectoryModel, TrainReport)> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::Empty("training pairs"));
    }
    let cycle_scale = pairs
        .iter()
        .flat_map(|p| p.history.iter().map(|h| h.0).chain(p.future_times.iter().cloned()))
        .fold(0.0, f64::max);
    let mut model = TrajectoryModel::new(cfg.clone(), cycle_scale.max(1.0), rng::mix(seed, 1))?;
    let (g0, e0) = initial_noise(pairs);
    model.set_noise(g0, e0)?;

    let lay = model.layout().clone();
    let n = model.n_params();
    let lr: Vec<f64> = (0..n)
        .map(|i| {
            if lay.variance_indices().contains(&i) {
                cfg.variance_learning_rate
            } else {
                cfg.learning_rate
            }
        })
        .collect();
    let decays: Vec<bool> = (0..n).map(|i| lay.decays(i)).collect();
    let mut m1 = vec![0.0; n];
    let mut m2 = vec![0.0; n];
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut shuffle_rng = rng::seeded(rng::mix(seed, 2));
    let mask_seed = rng::mix(seed, 3);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let epoch_seed = rng::mix(mask_seed, epoch as u64);
        let mut epoch_total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let params = model.params();
            let parts: Vec<(f64, Vec<f64>)> = batch
                .par_iter()
                .map(|&idx| {
                    let mut g = vec![0.0; n];
                    let mask = (cfg.dropout_p > 0.0).then(|| {
                        dropout_mask(cfg.hidden_dim, cfg.dropout_p, &mut rng::stream(epoch_seed, idx as u64))
                    });
                    let l = pair_objective(&model, params, &pairs[idx], mask.as_deref(), Some(&mut g))?;
                    Ok((l, g))
                })
                .collect::<Result<_>>()?;
            let scale = 1.0 / batch.len() as f64;
            let mut grad = vec![0.0; n];
            let mut loss = 0.0;
            for (l, g) in &parts {
                loss += l;
                for (acc, v) in grad.iter_mut().zip(g) {
                    *acc += v;
                }
            }
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            epoch_total += loss;
            let params = model.params_mut();
            for i in 0..n {
                grad[i] *= scale;
                if decays[i] {
                    grad[i] += cfg.decay * params[i];
                }
            }
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if !norm.is_finite() {
                return Err(Error::Diverged { epoch, loss: norm });
            }
            if norm > cfg.grad_clip {
                let c = cfg.grad_clip / norm;
                grad.iter_mut().for_each(|g| *g *= c);
            }
            step += 1;
            let bc1 = 1.0 - BETA1.powi(step);
            let bc2 = 1.0 - BETA2.powi(step);
            for i in 0..n {
                m1[i] = BETA1 * m1[i] + (1.0 - BETA1) * grad[i];
                m2[i] = BETA2 * m2[i] + (1.0 - BETA2) * grad[i] * grad[i];
                params[i] -= lr[i] * (m1[i] / bc1) / ((m2[i] / bc2).sqrt() + ADAM_EPS);
            }
            for i in lay.variance_indices() {
                params[i] = params[i].clamp(LOG_VAR_BOUNDS.0, LOG_VAR_BOUNDS.1);
            }
        }
        let mean = epoch_total / pairs.len() as f64;
        let np = model.noise_params();
        log::info!(
            "epoch {:>3}: loss {mean:.5} gamma_sq {:.3e} eta_b_sq {:.3e}",
            epoch + 1,
            np.gamma_sq,
            np.eta_b_sq
        );
        epoch_losses.push(mean);
    }
    let report = TrainReport {
        epoch_losses,
        noise: model.noise_params(),
        n_pairs: pairs.len(),
        n_params: model.n_params(),
    };
    Ok((model, report))
}

/// Starting values for the noise coefficients: `η_B²` from the spread of
/// one-step increments, `γ²` so that both variance terms balance at the
/// far end of the targets.
fn initial_noise(pairs: &[TrainingPair]) -> (f64, f64) {
    let mut rates = Vec::new();
    for p in pairs {
        let inc = p.increments[0];
        rates.push((inc.delta_z / inc.delta_t, inc.delta_t));
    }
    let mean_rate = rates.iter().map(|r| r.0).sum::<f64>() / rates.len() as f64;
    let eta = rates
        .iter()
        .map(|(r, dt)| (r - mean_rate).powi(2) * dt)
        .sum::<f64>()
        / rates.len() as f64;
    let eta = if eta > 1e-12 { eta } else { 1e-12 };
    let (mut a, mut b) = (0.0, 0.0);
    for p in pairs {
        if let Some(&(ta, tb)) = variance_terms(p).last() {
            a += ta;
            b += tb;
        }
    }
    let gamma = if a > 0.0 { eta * b / a } else { eta };
    let lo = LOG_VAR_BOUNDS.0.exp();
    let hi = LOG_VAR_BOUNDS.1.exp();
    (gamma.clamp(lo, hi), eta.clamp(lo, hi))
}
