//! The trajectory network: a gated recurrent encoder compresses the observed
//! history into a health vector, which is stacked with the future times and
//! decoded by 1-D convolutions (along time) into the pattern curve `Q`.
//!
//! The noise coefficients `γ²` and `η_B²` are trained jointly with the
//! weights. They live at the end of the parameter vector in log space.

mod checkpoint;
mod gradcheck;
mod layout;
mod loss;
mod pairs;
mod pass;
mod synthetic;
mod train;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
pub use gradcheck::{grad_check, grad_check_masked, grad_check_with, GradCheckReport};
pub use layout::{Layout, TensorSpec};
pub use loss::{mean_loss, nll_loss, step_variances};
pub use pairs::{make_training_pairs, pairs_from_series, TrainingPair};
pub use synthetic::{linear_wiener_pairs, SyntheticLinear};
pub use train::{train, train_with_report, TrainReport};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::degradation::{NoiseParams, PatternCurve};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    pub hidden_dim: usize,
    /// Future steps decoded per pass.
    pub horizon: usize,
    pub conv_filters: Vec<usize>,
    pub kernel_sizes: Vec<usize>,
    pub dropout_p: f64,
    pub learning_rate: f64,
    /// L2 weight decay on weight tensors.
    pub decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Learning rate of the two log-variance scalars.
    pub variance_learning_rate: f64,
    /// Global gradient-norm clip.
    pub grad_clip: f64,
    /// Encoder sees at most this many trailing observations; 0 means all.
    pub max_history: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            hidden_dim: 20,
            horizon: 50,
            conv_filters: vec![16, 32],
            kernel_sizes: vec![7, 7],
            dropout_p: 0.3,
            learning_rate: 0.0015,
            decay: 2e-5,
            epochs: 40,
            batch_size: 32,
            variance_learning_rate: 0.01,
            grad_clip: 5.0,
            max_history: 60,
        }
    }
}

impl NetConfig {
    /// A model small enough for finite-difference checks.
    pub fn tiny() -> Self {
        NetConfig {
            hidden_dim: 4,
            horizon: 6,
            conv_filters: vec![3, 4],
            kernel_sizes: vec![3, 3],
            ..NetConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be >= 1".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return bad(format!("dropout_p must be in [0, 1), got {}", self.dropout_p));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if !(self.variance_learning_rate >= 0.0 && self.variance_learning_rate.is_finite()) {
            return bad("variance_learning_rate must be >= 0".into());
        }
        if !(self.decay >= 0.0 && self.decay.is_finite()) {
            return bad("decay must be >= 0".into());
        }
        if !(self.grad_clip > 0.0) {
            return bad("grad_clip must be > 0".into());
        }
        if self.conv_filters.is_empty() || self.conv_filters.len() != self.kernel_sizes.len() {
            return bad("conv_filters and kernel_sizes must be nonempty and of equal length".into());
        }
        if self.conv_filters.iter().chain(&self.kernel_sizes).any(|&v| v == 0) {
            return bad("conv filter counts and kernel sizes must be >= 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        Ok(())
    }
}

/// Log-variance values are kept inside this band during training.
pub(crate) const LOG_VAR_BOUNDS: (f64, f64) = (-40.0, 5.0);

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryModel {
    config: NetConfig,
    layout: Layout,
    params: Vec<f64>,
    cycle_scale: f64,
}

impl TrajectoryModel {
    /// Randomly initialized weights; log-variances start at zero.
    pub fn new(config: NetConfig, cycle_scale: f64, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(config, cycle_scale)?;
        let mut rng = rng::seeded(seed);
        let lay = model.layout.clone();
        let d = lay.hidden;
        for t in lay.tensors() {
            if t.shape.is_empty() {
                continue;
            }
            let fan_in = match t.shape.len() {
                3 => t.shape[1] * t.shape[2],
                2 => t.shape[1],
                _ if t.name == "decoder.head.weight" => t.shape[0],
                _ => 0,
            };
            if fan_in == 0 {
                continue;
            }
            let a = if t.name == "encoder.weight" {
                1.0 / (d as f64).sqrt()
            } else {
                (3.0 / fan_in as f64).sqrt()
            };
            for v in &mut model.params[t.range()] {
                *v = rng.random_range(-a..a);
            }
        }
        // Forget gate bias of one keeps early gradients alive.
        for j in d..2 * d {
            model.params[lay.enc_b + j] = 1.0;
        }
        Ok(model)
    }

    pub fn zeros(config: NetConfig, cycle_scale: f64) -> Result<Self> {
        config.validate()?;
        if !(cycle_scale > 0.0 && cycle_scale.is_finite()) {
            return Err(Error::invalid(format!("cycle_scale must be > 0, got {cycle_scale}")));
        }
        let layout = Layout::new(&config);
        Ok(TrajectoryModel {
            params: vec![0.0; layout.total()],
            config,
            layout,
            cycle_scale,
        })
    }

    pub fn from_parts(config: NetConfig, params: Vec<f64>, cycle_scale: f64) -> Result<Self> {
        let mut m = Self::zeros(config, cycle_scale)?;
        if params.len() != m.params.len() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                m.params.len(),
                params.len()
            )));
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite parameter"));
        }
        m.params = params;
        Ok(m)
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn cycle_scale(&self) -> f64 {
        self.cycle_scale
    }

    pub fn log_gamma_sq(&self) -> f64 {
        self.params[self.layout.log_gamma_sq]
    }

    pub fn log_eta_b_sq(&self) -> f64 {
        self.params[self.layout.log_eta_b_sq]
    }

    pub fn set_noise(&mut self, gamma_sq: f64, eta_b_sq: f64) -> Result<()> {
        if !(gamma_sq > 0.0 && eta_b_sq > 0.0) {
            return Err(Error::invalid("noise coefficients must be positive"));
        }
        self.params[self.layout.log_gamma_sq] = gamma_sq.ln();
        self.params[self.layout.log_eta_b_sq] = eta_b_sq.ln();
        Ok(())
    }

    /// Learned coefficients with `φ₀ = 1`.
    pub fn noise_params(&self) -> NoiseParams {
        NoiseParams {
            gamma_sq: self.log_gamma_sq().exp(),
            eta_b_sq: self.log_eta_b_sq().exp(),
            phi0: 1.0,
        }
    }

    pub(crate) fn encoder_inputs(&self, history: &[(f64, f64)]) -> Vec<[f64; 2]> {
        let skip = match self.config.max_history {
            0 => 0,
            m => history.len().saturating_sub(m),
        };
        history[skip..]
            .iter()
            .map(|&(t, z)| [t / self.cycle_scale, z])
            .collect()
    }

    fn check_inputs(&self, history: &[(f64, f64)], future_times: &[f64]) -> Result<f64> {
        let Some(&(t_last, _)) = history.last() else {
            return Err(Error::Empty("history"));
        };
        if future_times.is_empty() {
            return Err(Error::Empty("future times"));
        }
        if future_times.len() > self.config.horizon {
            return Err(Error::invalid(format!(
                "{} future times exceed the horizon {}",
                future_times.len(),
                self.config.horizon
            )));
        }
        let mut prev = t_last;
        for &t in future_times {
            if !(t > prev) || !t.is_finite() {
                return Err(Error::InvalidCurve(format!(
                    "future times must be strictly increasing after {t_last}"
                )));
            }
            prev = t;
        }
        if history.iter().any(|&(t, z)| !t.is_finite() || !z.is_finite()) {
            return Err(Error::invalid("non-finite history value"));
        }
        Ok(t_last)
    }

    /// Raw decoded curve on `[t_last, future_times...]`, dropout disabled.
    /// Use [`TrajectoryModel::predict`] for the anchored pattern.
    pub fn forward(&self, history: &[(f64, f64)], future_times: &[f64]) -> Result<PatternCurve> {
        let t_last = self.check_inputs(history, future_times)?;
        let raw = self.raw_values(history, t_last, future_times);
        let mut times = Vec::with_capacity(future_times.len() + 1);
        times.push(t_last);
        times.extend_from_slice(future_times);
        PatternCurve::new(times, raw)
    }

    fn raw_values(&self, history: &[(f64, f64)], t_last: f64, future_times: &[f64]) -> Vec<f64> {
        let enc = pass::encode(&self.layout, &self.params, &self.encoder_inputs(history));
        let tau = relative_times(t_last, future_times, self.cycle_scale, self.config.horizon);
        let mut raw = pass::decode(&self.layout, &self.params, enc.last_hidden(), &tau).0;
        raw.truncate(future_times.len() + 1);
        raw
    }

    /// Pattern curve anchored so that `Q(t_last) = z_now / ψ`; its mean
    /// trajectory `ψ Q` passes through the last observation.
    pub fn predict(
        &self,
        history: &[(f64, f64)],
        future_times: &[f64],
        psi: f64,
    ) -> Result<PatternCurve> {
        let raw = self.forward(history, future_times)?;
        let z_now = history.last().map(|h| h.1).unwrap_or(0.0);
        Ok(anchor(&raw, z_now, psi))
    }

    /// Expected trajectory under unit drift on `t_last, t_last + step, ...`
    /// for `n_steps` steps. Horizons longer than the decoder's are covered
    /// by feeding predictions back as history.
    pub fn rollout(&self, history: &[(f64, f64)], n_steps: usize, step: f64) -> Result<PatternCurve> {
        if n_steps == 0 || !(step > 0.0) {
            return Err(Error::invalid("rollout needs n_steps >= 1 and step > 0"));
        }
        let Some(&(t0, z0)) = history.last() else {
            return Err(Error::Empty("history"));
        };
        let mut hist = history.to_vec();
        let mut times = vec![t0];
        let mut values = vec![z0];
        let mut done = 0;
        while done < n_steps {
            let m = (n_steps - done).min(self.config.horizon);
            let (t_last, z_last) = *hist.last().expect("nonempty");
            let future: Vec<f64> = (1..=m).map(|j| t0 + (done + j) as f64 * step).collect();
            let raw = self.raw_values(&hist, t_last, &future);
            for (j, &t) in future.iter().enumerate() {
                let z = z_last + raw[j + 1] - raw[0];
                times.push(t);
                values.push(z);
                hist.push((t, z));
            }
            done += m;
        }
        PatternCurve::new(times, values)
    }
}

/// Decoder time inputs: 0 for the anchor, then `(t - t_last) / scale`.
///
/// The decoder always runs over at least `horizon` future positions so each
/// output sees the same padding context whatever the request length; missing
/// positions continue at the last spacing.
pub(crate) fn relative_times(t_last: f64, future_times: &[f64], scale: f64, horizon: usize) -> Vec<f64> {
    let m = future_times.len();
    let mut tau = Vec::with_capacity(m.max(horizon) + 1);
    tau.push(0.0);
    tau.extend(future_times.iter().map(|t| (t - t_last) / scale));
    if m < horizon {
        let last = future_times.last().copied().unwrap_or(t_last + 1.0);
        let prev = if m >= 2 { future_times[m - 2] } else { t_last };
        let dt = last - prev;
        for k in 1..=horizon - m {
            tau.push((last + k as f64 * dt - t_last) / scale);
        }
    }
    tau
}

/// Shift `curve` so that its first value becomes `z_now / ψ`.
pub fn anchor(curve: &PatternCurve, z_now: f64, psi: f64) -> PatternCurve {
    let shift = z_now / psi - curve.values()[0];
    curve.map_values(|v| v + shift)
}
