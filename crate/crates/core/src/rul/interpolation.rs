use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::crossing::Crossing;
use super::kde::Bandwidth;
use super::RulDistribution;
use crate::degradation::PatternCurve;
use crate::error::{Error, Result};
use crate::rng;

/// RUL distribution from `n_curves` interpolation curves
/// `χ_n(t) = ψ Q(t) + k_n √ξ(t)`, `k_n ~ N(0, 1)`.
///
/// `xi` starts at the prediction time and fixes the evaluation grid; `curve`
/// (the anchored pattern) is interpolated onto it. Crossing times are
/// returned relative to the prediction time. Curves that never reach the
/// threshold are censored and the remaining weights renormalised.
pub fn interpolation_rul(
    curve: &PatternCurve,
    xi: &PatternCurve,
    drift_mean: f64,
    threshold: f64,
    n_curves: usize,
    seed: u64,
    bandwidth: Bandwidth,
) -> Result<RulDistribution> {
    if n_curves == 0 {
        return Err(Error::invalid("n_curves must be >= 1"));
    }
    if !drift_mean.is_finite() || !threshold.is_finite() {
        return Err(Error::invalid("drift mean and threshold must be finite"));
    }
    let times = xi.times();
    let mean = times
        .iter()
        .map(|&t| Ok(drift_mean * curve.value_at(t)?))
        .collect::<Result<Vec<f64>>>()?;
    let sd: Vec<f64> = xi.values().iter().map(|v| v.max(0.0).sqrt()).collect();

    let mut rng = rng::seeded(seed);
    let ks: Vec<f64> = (0..n_curves).map(|_| StandardNormal.sample(&mut rng)).collect();
    let crossings: Vec<Crossing> = ks
        .par_iter()
        .map(|&k| crossing_of_affine(times, &mean, &sd, k, threshold))
        .collect();
    RulDistribution::from_crossings(crossings, xi.start(), bandwidth)
}

/// First crossing of `mean + k·sd` without materialising the curve.
fn crossing_of_affine(times: &[f64], mean: &[f64], sd: &[f64], k: f64, threshold: f64) -> Crossing {
    let mut prev = mean[0] + k * sd[0];
    if prev >= threshold {
        return Crossing::At(times[0]);
    }
    for j in 1..times.len() {
        let v = mean[j] + k * sd[j];
        if v >= threshold {
            let frac = ((threshold - prev) / (v - prev)).clamp(0.0, 1.0);
            return Crossing::At(times[j - 1] + frac * (times[j] - times[j - 1]));
        }
        prev = v;
    }
    Crossing::Censored
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degradation::{variance_profile, NoiseParams};
    use crate::rul::crossing::{first_crossing, CrossingCurve};

    fn line(end: f64, step: f64) -> PatternCurve {
        let times = PatternCurve::uniform_grid(0.0, end, step).unwrap();
        PatternCurve::from_fn(times, |t| t).unwrap()
    }

    #[test]
    fn deterministic_limit_is_point_mass() {
        let q = line(240.0, 1.0);
        let np = NoiseParams::new(0.0, 0.0, 0.01).unwrap();
        let xi = variance_profile(&q, &np, 0.0).unwrap();
        let d = interpolation_rul(&q, &xi, 0.01, 0.8, 50, 1, Bandwidth::Fixed(0.2)).unwrap();
        assert_eq!(d.censored_count, 0);
        assert!(d.samples.iter().all(|&s| (s - 80.0).abs() < 1e-9));
    }

    #[test]
    fn twenty_curves_give_a_smooth_distribution() {
        let q = line(240.0, 0.1);
        let np = NoiseParams::new(5e-4, 1e-4, 0.01).unwrap();
        let xi = variance_profile(&q, &np, 0.0).unwrap();
        let d = interpolation_rul(&q, &xi, 0.01, 0.8, 20, 5, Bandwidth::Fixed(0.2)).unwrap();
        assert_eq!(d.samples.len() + d.censored_count, 20);
        assert!((d.density.integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn deterministic_given_seed() {
        let q = line(100.0, 1.0);
        let np = NoiseParams::new(1e-6, 1e-5, 0.01).unwrap();
        let xi = variance_profile(&q, &np, 0.0).unwrap();
        let a = interpolation_rul(&q, &xi, 0.01, 0.5, 100, 9, Bandwidth::Silverman).unwrap();
        let b = interpolation_rul(&q, &xi, 0.01, 0.5, 100, 9, Bandwidth::Silverman).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn all_censored_is_an_error() {
        let q = line(10.0, 1.0);
        let np = NoiseParams::new(0.0, 0.0, 0.01).unwrap();
        let xi = variance_profile(&q, &np, 0.0).unwrap();
        let err = interpolation_rul(&q, &xi, 0.01, 0.8, 7, 1, Bandwidth::Fixed(0.2)).unwrap_err();
        assert!(matches!(err, Error::AllCensored { censored: 7 }));
    }

    #[test]
    fn affine_scan_matches_materialised_curve() {
        let q = line(100.0, 0.5);
        let np = NoiseParams::new(5e-6, 1e-4, 0.01).unwrap();
        let xi = variance_profile(&q, &np, 10.0).unwrap();
        let mean = crate::degradation::mean_trajectory(&q, 0.01);
        let m: Vec<f64> = xi.times().iter().map(|&t| mean.value_at(t).unwrap()).collect();
        let s: Vec<f64> = xi.values().iter().map(|v| v.sqrt()).collect();
        for k in [-1.5, -0.2, 0.0, 0.7, 2.0] {
            let c = CrossingCurve::new(&mean, &xi, k).unwrap();
            assert_eq!(first_crossing(&c, 0.6), crossing_of_affine(xi.times(), &m, &s, k, 0.6));
        }
    }

    #[test]
    fn grid_refinement_moves_crossings_little() {
        let np = NoiseParams::new(5e-4, 1e-4, 0.01).unwrap();
        let coarse = line(240.0, 1.0);
        let fine = line(240.0, 0.5);
        let xc = variance_profile(&coarse, &np, 0.0).unwrap();
        let xf = variance_profile(&fine, &np, 0.0).unwrap();
        let a = interpolation_rul(&coarse, &xc, 0.01, 0.8, 200, 3, Bandwidth::Fixed(0.2)).unwrap();
        let b = interpolation_rul(&fine, &xf, 0.01, 0.8, 200, 3, Bandwidth::Fixed(0.2)).unwrap();
        assert_eq!(a.samples.len(), b.samples.len());
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x - y).abs() < 0.5, "{x} vs {y}");
        }
    }
}
