//! Run-to-failure surrogate fleets in the C-MAPSS layout, for tests and
//! demos when the NASA files are not at hand.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::UnitSeries;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FleetSpec {
    pub n_units: usize,
    /// Inclusive lifetime range in cycles.
    pub life_range: (u32, u32),
    /// Number of operating regimes (1 or more).
    pub regimes: usize,
    /// Multiplier on sensor noise.
    pub noise_scale: f64,
    /// Multiplier on the degradation-induced sensor shift.
    pub severity: f64,
}

impl Default for FleetSpec {
    fn default() -> Self {
        FleetSpec {
            n_units: 100,
            life_range: (128, 320),
            regimes: 1,
            noise_scale: 1.0,
            severity: 1.0,
        }
    }
}

// (baseline, noise sd, end-of-life shift) per sensor; zero shift means the
// sensor carries no degradation signal.
const SENSORS: [(f64, f64, f64); 21] = [
    (518.67, 0.0, 0.0),
    (642.5, 0.5, 1.6),
    (1590.0, 6.0, 28.0),
    (1408.0, 9.0, 45.0),
    (14.62, 0.0, 0.0),
    (21.61, 0.001, 0.0),
    (553.4, 0.9, -3.0),
    (2388.1, 0.07, 0.25),
    (9064.0, 22.0, 60.0),
    (1.3, 0.0, 0.0),
    (47.5, 0.27, 1.3),
    (521.4, 0.7, -2.5),
    (2388.1, 0.07, 0.25),
    (8143.0, 19.0, 45.0),
    (8.44, 0.04, 0.12),
    (0.03, 0.0, 0.0),
    (393.0, 1.5, 6.0),
    (2388.0, 0.0, 0.0),
    (100.0, 0.0, 0.0),
    (38.8, 0.18, -0.8),
    (23.3, 0.11, -0.5),
];

/// Fleet whose sensors drift along a convex degradation curve
/// `(e^{a t/T} - 1) / (e^a - 1)` with unit-specific curvature `a`.
pub fn synthetic_fleet(spec: &FleetSpec, seed: u64) -> Vec<UnitSeries> {
    let (lo, hi) = spec.life_range;
    let hi = hi.max(lo.max(2));
    let lo = lo.max(2);
    let regimes = spec.regimes.max(1);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    (0..spec.n_units)
        .map(|u| {
            let mut rng = rng::stream(seed, u as u64);
            let life = rng.random_range(lo..=hi);
            let curv: f64 = rng.random_range(2.0..5.0);
            let gain: f64 = rng.random_range(0.8..1.2);
            let mut unit = UnitSeries {
                unit_id: u as u32 + 1,
                cycles: (1..=life).collect(),
                op_settings: Vec::with_capacity(life as usize),
                sensors: Vec::with_capacity(life as usize),
                hi: None,
            };
            for t in 1..=life {
                let d = ((curv * t as f64 / life as f64).exp() - 1.0) / (curv.exp() - 1.0);
                let regime = rng.random_range(0..regimes);
                let r = regime as f64;
                unit.op_settings.push([
                    10.0 * r + 0.001 * std.sample(&mut rng),
                    0.1 * r + 0.0001 * std.sample(&mut rng),
                    100.0 - 5.0 * r,
                ]);
                let mut s = [0.0; 21];
                for (k, &(base, sd, shift)) in SENSORS.iter().enumerate() {
                    let offset = base * 0.03 * r;
                    s[k] = base + offset
                        + spec.severity * gain * shift * d
                        + spec.noise_scale * sd * std.sample(&mut rng);
                }
                unit.sensors.push(s);
            }
            unit
        })
        .collect()
}
