//! Bayesian online updating of the drift rate.
//!
//! The drift at the previous update is believed to be `N(ψ, ω²)`. Over the
//! next interval the pair `(φ_i, Z_i)` is jointly Gaussian; conditioning on
//! the new observation gives the refreshed belief.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::degradation::{spread_integrals_to_end, NoiseParams, PatternCurve};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftPosterior {
    pub psi: f64,
    pub omega_sq: f64,
    pub t_last: f64,
}

impl DriftPosterior {
    pub fn new(psi: f64, omega_sq: f64, t_last: f64) -> Result<Self> {
        if !psi.is_finite() || !(omega_sq >= 0.0) || !omega_sq.is_finite() {
            return Err(Error::invalid(format!(
                "bad drift posterior psi={psi} omega_sq={omega_sq}"
            )));
        }
        Ok(DriftPosterior {
            psi,
            omega_sq,
            t_last,
        })
    }

    /// ψ₀ = 1 with a configurable initial variance (zero by default).
    pub fn initial(t0: f64, omega0_sq: f64) -> Result<Self> {
        Self::new(1.0, omega0_sq, t0)
    }

    /// Symmetric interval `ψ ± z·ω`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        let sd = self.omega_sq.sqrt();
        (self.psi - z * sd, self.psi + z * sd)
    }
}

/// Mean and covariance of `(φ_i, Z_i)` given the previous posterior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointMoments {
    pub mean2: [f64; 2],
    pub cov2: [[f64; 2]; 2],
    /// Time of the new observation.
    pub t_new: f64,
}

impl JointMoments {
    pub fn cov11(&self) -> f64 {
        self.cov2[0][0]
    }

    pub fn cov12(&self) -> f64 {
        self.cov2[0][1]
    }

    pub fn cov22(&self) -> f64 {
        self.cov2[1][1]
    }

    pub fn determinant(&self) -> f64 {
        self.cov2[0][0] * self.cov2[1][1] - self.cov2[0][1] * self.cov2[1][0]
    }
}

/// Joint moments over the interval spanned by `q_segment`, whose first node
/// is the previous update time and last node the new observation time.
///
/// The predicted observation uses the increment form
/// `Z_{i-1} + ψ_{i-1} ΔQ_i`, which is what the anchored pattern implies.
pub fn joint_moments(
    prior: &DriftPosterior,
    q_segment: &PatternCurve,
    np: &NoiseParams,
    z_prev: f64,
) -> Result<JointMoments> {
    let dt = q_segment.end() - q_segment.start();
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("update interval must be positive, got {dt}")));
    }
    let q = q_segment.values();
    let dq = q[q.len() - 1] - q[0];
    let (lin, sq) = spread_integrals_to_end(q_segment.times(), q);
    let w2 = prior.omega_sq;
    let cov11 = np.gamma_sq * dt + w2;
    let cov12 = np.gamma_sq * lin + w2 * dq;
    let cov22 = np.gamma_sq * sq + np.eta_b_sq * dt + w2 * dq * dq;
    Ok(JointMoments {
        mean2: [prior.psi, z_prev + prior.psi * dq],
        cov2: [[cov11, cov12], [cov12, cov22]],
        t_new: q_segment.end(),
    })
}

/// Gaussian conditioning of the drift on the new observation.
pub fn posterior_update(
    prior: &DriftPosterior,
    z_new: f64,
    jm: &JointMoments,
) -> Result<DriftPosterior> {
    let cov22 = jm.cov22();
    if !(cov22 > 0.0) {
        return Err(Error::invalid(format!(
            "observation variance must be positive, got {cov22}"
        )));
    }
    let gain = jm.cov12() / cov22;
    let psi = prior.psi + gain * (z_new - jm.mean2[1]);
    // Clamp rounding below zero.
    let omega_sq = (jm.cov11() - gain * jm.cov12()).max(0.0);
    Ok(DriftPosterior {
        psi,
        omega_sq,
        t_last: jm.t_new,
    })
}

/// Cycles at which the drift is updated: `warmup, warmup + every, ...`
/// restricted to `1..=n_cycles`.
pub fn update_schedule(n_cycles: u32, every: u32, warmup: u32) -> Vec<u32> {
    let every = every.max(1);
    // Cycle 0 does not exist, so a zero warmup starts one period later.
    let mut c = if warmup == 0 { every } else { warmup };
    let mut out = Vec::new();
    while c <= n_cycles {
        out.push(c);
        c += every;
    }
    out
}

/// One row of a posterior trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub psi: f64,
    pub omega_sq: f64,
}

impl From<&DriftPosterior> for TraceRow {
    fn from(p: &DriftPosterior) -> Self {
        TraceRow {
            t: p.t_last,
            psi: p.psi,
            omega_sq: p.omega_sq,
        }
    }
}

pub fn write_trace(unit_id: u32, rows: &[TraceRow], header: &str) -> String {
    let mut out = String::new();
    for line in header.lines() {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str("unit\tt\tpsi\tomega_sq\n");
    for r in rows {
        let _ = writeln!(out, "{unit_id}\t{}\t{}\t{}", r.t, r.psi, r.omega_sq);
    }
    out
}
