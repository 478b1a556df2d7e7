//! Wall-clock comparison of the interpolation and simulation routes on the
//! linear benchmark process.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::kde::Bandwidth;
use super::{interpolation_rul, mc_first_passage, RulDistribution};
use crate::degradation::{variance_profile, NoiseParams, PatternCurve};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Interpolation,
    Simulation,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Interpolation => "interpolation",
            Algorithm::Simulation => "simulation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchSetting {
    pub algorithm: Algorithm,
    /// Curves for interpolation, paths for simulation.
    pub size: usize,
}

impl BenchSetting {
    pub fn new(algorithm: Algorithm, size: usize) -> Self {
        BenchSetting { algorithm, size }
    }

    /// Interpolation with 20 curves and simulation with 20/100/500/1000 paths.
    pub fn default_set() -> Vec<BenchSetting> {
        let mut v = vec![BenchSetting::new(Algorithm::Interpolation, 20)];
        v.extend([20, 100, 500, 1000].map(|n| BenchSetting::new(Algorithm::Simulation, n)));
        v
    }
}

/// Linear process `Q(t) = t` with constant drift mean, threshold and horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearBenchmark {
    pub phi: f64,
    pub gamma_sq: f64,
    pub eta_b_sq: f64,
    pub threshold: f64,
    /// Three times the mean-curve crossing time.
    pub horizon: f64,
    pub interpolation_step: f64,
    pub simulation_step: f64,
    pub dt: f64,
    pub bandwidth: f64,
    /// Multiplies `Q`; the drift mean is divided by it so the mean curve is unchanged.
    pub pattern_scale: f64,
}

impl Default for LinearBenchmark {
    fn default() -> Self {
        LinearBenchmark {
            phi: 0.01,
            gamma_sq: 5e-4,
            eta_b_sq: 1e-4,
            threshold: 0.8,
            horizon: 240.0,
            interpolation_step: 0.1,
            simulation_step: 1.0,
            dt: 0.01,
            bandwidth: 0.2,
            pattern_scale: 1.0,
        }
    }
}

impl LinearBenchmark {
    pub fn noise(&self) -> NoiseParams {
        NoiseParams {
            gamma_sq: self.gamma_sq,
            eta_b_sq: self.eta_b_sq,
            phi0: self.drift(),
        }
    }

    pub fn drift(&self) -> f64 {
        self.phi / self.pattern_scale
    }

    pub fn pattern(&self, step: f64) -> Result<PatternCurve> {
        let times = PatternCurve::uniform_grid(0.0, self.horizon, step)?;
        PatternCurve::from_fn(times, |t| self.pattern_scale * t)
    }

    pub fn interpolation(&self, n_curves: usize, seed: u64) -> Result<RulDistribution> {
        let q = self.pattern(self.interpolation_step)?;
        let xi = variance_profile(&q, &self.noise(), 0.0)?;
        interpolation_rul(
            &q,
            &xi,
            self.drift(),
            self.threshold,
            n_curves,
            seed,
            Bandwidth::Fixed(self.bandwidth),
        )
    }

    pub fn simulation(&self, n_paths: usize, seed: u64) -> Result<RulDistribution> {
        let q = self.pattern(self.simulation_step)?;
        mc_first_passage(
            &q,
            &self.noise(),
            self.drift(),
            self.threshold,
            n_paths,
            self.dt,
            seed,
            Bandwidth::Fixed(self.bandwidth),
        )
    }

    pub fn run(&self, setting: BenchSetting, seed: u64) -> Result<RulDistribution> {
        match setting.algorithm {
            Algorithm::Interpolation => self.interpolation(setting.size, seed),
            Algorithm::Simulation => self.simulation(setting.size, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub method: Algorithm,
    pub size: usize,
    pub median_seconds: f64,
    pub repetitions: usize,
    pub parallel: bool,
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Median wall-clock time of each setting over `repetitions` runs (at least
/// 20), after one untimed warm-up run. Single-threaded unless `parallel`.
pub fn benchmark_runtimes(
    bench: &LinearBenchmark,
    settings: &[BenchSetting],
    repetitions: usize,
    parallel: bool,
    seed: u64,
) -> Result<Vec<TimingRow>> {
    let reps = repetitions.max(20);
    let run_all = || -> Result<Vec<TimingRow>> {
        let mut rows = Vec::with_capacity(settings.len());
        for &setting in settings {
            if setting.size == 0 {
                return Err(Error::invalid("benchmark size must be >= 1"));
            }
            let timed = |s: u64| -> Result<f64> {
                let start = Instant::now();
                match bench.run(setting, s) {
                    Ok(d) => {
                        std::hint::black_box(d);
                    }
                    Err(Error::AllCensored { .. }) => {}
                    Err(e) => return Err(e),
                }
                Ok(start.elapsed().as_secs_f64())
            };
            timed(seed)?;
            let mut times = (0..reps)
                .map(|r| timed(seed.wrapping_add(r as u64 + 1)))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(TimingRow {
                method: setting.algorithm,
                size: setting.size,
                median_seconds: median(&mut times),
                repetitions: reps,
                parallel,
            });
        }
        Ok(rows)
    };
    if parallel {
        run_all()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(run_all)
    }
}

/// Two-row table: method names as columns, median seconds underneath.
pub fn format_timing_table(rows: &[TimingRow]) -> String {
    let labels: Vec<String> = rows
        .iter()
        .map(|r| format!("{} ({})", r.method.label(), r.size))
        .collect();
    let values: Vec<String> = rows.iter().map(|r| format!("{:.6}", r.median_seconds)).collect();
    let widths: Vec<usize> = labels
        .iter()
        .zip(&values)
        .map(|(l, v)| l.len().max(v.len()))
        .collect();
    let mut out = String::new();
    let _ = write!(out, "{:<8}", "Method");
    for (l, w) in labels.iter().zip(&widths) {
        let _ = write!(out, "  {:>w$}", l, w = w);
    }
    out.push('\n');
    let _ = write!(out, "{:<8}", "Time/s");
    for (v, w) in values.iter().zip(&widths) {
        let _ = write!(out, "  {:>w$}", v, w = w);
    }
    out.push('\n');
    out
}

/// Machine-readable rows: `method size median_seconds repetitions`.
pub fn format_timing_rows(rows: &[TimingRow]) -> String {
    let mut out = String::from("method\tsize\tmedian_seconds\trepetitions\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            r.method.label(),
            r.size,
            r.median_seconds,
            r.repetitions
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_settings_give_empty_table() {
        let rows = benchmark_runtimes(&LinearBenchmark::default(), &[], 20, false, 1).unwrap();
        assert!(rows.is_empty());
        assert_eq!(format_timing_rows(&rows).lines().count(), 1);
    }

    #[test]
    fn rows_have_requested_shape() {
        let bench = LinearBenchmark {
            horizon: 120.0,
            ..Default::default()
        };
        let settings = [
            BenchSetting::new(Algorithm::Interpolation, 20),
            BenchSetting::new(Algorithm::Simulation, 5),
        ];
        let rows = benchmark_runtimes(&bench, &settings, 3, false, 1).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.repetitions == 20 && r.median_seconds > 0.0));
        let table = format_timing_table(&rows);
        assert!(table.contains("interpolation (20)"));
        assert!(table.contains("simulation (5)"));
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
