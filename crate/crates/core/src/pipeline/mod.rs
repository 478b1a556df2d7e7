//! Experiment stages: ingest, train, predict, evaluate, bench, run-all.
//!
//! Every stage reads its inputs from and writes its outputs to the output
//! directory, so stages can be rerun independently. Text artifacts start
//! with `#` lines carrying the config hash and the seeds.

mod config;
mod forecast;

pub use config::{
    BenchConfig, DataConfig, EvalConfig, ExperimentConfig, HiSection, NoiseOverrides, PairConfig,
    PointEstimate, RulConfig, Seeds, Subset, UpdateConfig,
};
pub use forecast::{Forecaster, Outcome, PosteriorTrace, UnitEvaluation};

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{fit_linear_wiener, WienerFit};
use crate::cmapss::{
    compute_hi, fit_stacked_hi_with, median, parse_cmapss, parse_hi_series, per_unit_spearman,
    split_train_test, synthetic_fleet, write_cmapss, write_hi_series, FleetSpec, HiSeries,
    StackedHIModel,
};
use crate::degradation::NoiseParams;
use crate::drift::{write_trace, TraceRow};
use crate::error::{Error, Result};
use crate::eval::{
    comparison_table, format_cycle_rows, format_table, format_table_rows, ordering_flags,
    parse_predictions, per_cycle_rmse, write_predictions, Method, PredictionRecord, TableRow,
};
use crate::net::{load_checkpoint, pairs_from_series, save_checkpoint, train_with_report, TrajectoryModel};
use crate::rul::{
    benchmark_runtimes, format_timing_rows, format_timing_table, point_and_interval,
    write_density, write_distribution, Algorithm, BenchSetting, TimingRow,
};

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_file(path, text)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_file(path)?)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Artifact locations under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn hi_model(&self) -> PathBuf {
        self.root.join("hi_model.json")
    }

    pub fn split(&self) -> PathBuf {
        self.root.join("split.json")
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.root.join("trajectory.ckpt")
    }

    pub fn wiener(&self) -> PathBuf {
        self.root.join("wiener.json")
    }

    pub fn noise_table(&self) -> PathBuf {
        self.root.join("noise_params.tsv")
    }

    pub fn train_log(&self) -> PathBuf {
        self.root.join("train_loss.tsv")
    }

    pub fn subset_dir(&self, s: Subset) -> PathBuf {
        self.root.join(s.name())
    }

    pub fn hi_series(&self, s: Subset) -> PathBuf {
        self.subset_dir(s).join("hi.tsv")
    }

    pub fn predictions(&self, s: Subset, m: Method) -> PathBuf {
        self.subset_dir(s).join("predictions").join(format!("{m}.tsv"))
    }

    pub fn traces(&self, s: Subset, m: Method) -> PathBuf {
        self.subset_dir(s).join("traces").join(format!("{m}.tsv"))
    }

    pub fn unit_dir(&self, s: Subset, unit: u32) -> PathBuf {
        self.subset_dir(s).join("units").join(format!("unit{unit}"))
    }

    pub fn bench(&self) -> PathBuf {
        self.root.join("bench")
    }
}

/// Header lines stamped on every text artifact.
pub fn provenance(cfg: &ExperimentConfig, stage: &str, extra: &str) -> String {
    let s = cfg.seeds();
    let mut out = format!(
        "rulkit {}\nstage={stage}\nconfig_hash={}\nseeds master={} split={} hi={} train={} predict={} bench={} synth={}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.hash(),
        s.master,
        s.split,
        s.hi,
        s.train,
        s.predict,
        s.bench,
        s.synth
    );
    for line in extra.lines() {
        out.push_str(line);
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub config_hash: String,
    pub seed: u64,
    pub train: Vec<u32>,
    pub test: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HiArtifact {
    config_hash: String,
    seeds: Seeds,
    model: StackedHIModel,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WienerArtifact {
    config_hash: String,
    seeds: Seeds,
    fit: WienerFit,
}

#[derive(Debug, Clone)]
pub struct IngestReport {
    pub subset: Subset,
    pub n_units: usize,
    pub fitted_model: bool,
    /// Median per-unit Spearman correlation of HI with cycle over the units
    /// the HI model was fitted on (or all units for other subsets).
    pub median_spearman: f64,
    pub hi_min: f64,
    pub hi_max: f64,
    pub hi_path: PathBuf,
}

/// Parse a subset, fit the HI model when it is the training subset, and
/// write every unit's HI series.
pub fn ingest(cfg: &ExperimentConfig, subset: Subset) -> Result<IngestReport> {
    let lay = Layout::new(&cfg.out_dir);
    let seeds = cfg.seeds();
    let path = cfg.data.path_for(subset);
    let units = parse_cmapss(&path)?;
    if units.len() != subset.expected_units() {
        log::warn!(
            "{}: {} units, the {subset} training file has {}",
            path.display(),
            units.len(),
            subset.expected_units()
        );
    }
    let fitted = subset == cfg.train_subset;
    let (model, fit_ids) = if fitted {
        let (train, test) = split_train_test(&units, cfg.hi.train_fraction, seeds.split)?;
        let split = Split {
            config_hash: cfg.hash(),
            seed: seeds.split,
            train: train.iter().map(|u| u.unit_id).collect(),
            test: test.iter().map(|u| u.unit_id).collect(),
        };
        let model = fit_stacked_hi_with(&train, &cfg.hi.sensors, seeds.hi, &cfg.hi.model)?;
        write_json(
            &lay.hi_model(),
            &HiArtifact {
                config_hash: cfg.hash(),
                seeds,
                model: model.clone(),
            },
        )?;
        write_json(&lay.split(), &split)?;
        (model, split.train)
    } else {
        let art: HiArtifact = read_json(&lay.hi_model()).map_err(|e| {
            Error::Config(format!("{e} (run ingest on {} first)", cfg.train_subset))
        })?;
        (art.model, units.iter().map(|u| u.unit_id).collect())
    };
    let with_hi = units
        .par_iter()
        .map(|u| compute_hi(u, &model))
        .collect::<Result<Vec<_>>>()?;
    let series = with_hi.iter().map(HiSeries::from_unit).collect::<Result<Vec<_>>>()?;
    let hi_path = lay.hi_series(subset);
    let header = provenance(cfg, "ingest", &format!("subset={subset}\nsource={}", path.display()));
    write_file(&hi_path, write_hi_series(&series, &header))?;

    let fit_units: Vec<_> = with_hi.iter().filter(|u| fit_ids.contains(&u.unit_id)).cloned().collect();
    let mut rhos: Vec<f64> = per_unit_spearman(&fit_units).into_iter().map(|r| r.1).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &series {
        for &h in &s.hi {
            lo = lo.min(h);
            hi = hi.max(h);
        }
    }
    Ok(IngestReport {
        subset,
        n_units: units.len(),
        fitted_model: fitted,
        median_spearman: median(&mut rhos),
        hi_min: lo,
        hi_max: hi,
        hi_path,
    })
}

fn load_series(cfg: &ExperimentConfig, subset: Subset) -> Result<Vec<HiSeries>> {
    let path = Layout::new(&cfg.out_dir).hi_series(subset);
    parse_hi_series(&read_file(&path)?, &path.display().to_string())
}

fn load_split(cfg: &ExperimentConfig) -> Result<Split> {
    read_json(&Layout::new(&cfg.out_dir).split())
}

fn select(series: Vec<HiSeries>, ids: &[u32]) -> Vec<HiSeries> {
    series.into_iter().filter(|s| ids.contains(&s.unit_id)).collect()
}

/// Units evaluated on `subset`: the held-out split of the training subset,
/// every unit of the others.
pub fn evaluation_units(cfg: &ExperimentConfig, subset: Subset) -> Result<Vec<HiSeries>> {
    let series = load_series(cfg, subset)?;
    if subset == cfg.train_subset {
        Ok(select(series, &load_split(cfg)?.test))
    } else {
        Ok(series)
    }
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub n_pairs: usize,
    pub n_params: usize,
    pub noise: NoiseParams,
    pub wiener: WienerFit,
    pub final_loss: f64,
    pub checkpoint: PathBuf,
}

/// Train the trajectory network and fit the linear baseline on the HI of
/// the training units.
pub fn train(cfg: &ExperimentConfig) -> Result<TrainSummary> {
    let lay = Layout::new(&cfg.out_dir);
    let seeds = cfg.seeds();
    let units = select(load_series(cfg, cfg.train_subset)?, &load_split(cfg)?.train);
    let mut pairs = Vec::new();
    for s in &units {
        pairs.extend(pairs_from_series(
            &s.times(),
            &s.hi,
            cfg.pairs.min_history,
            cfg.net.horizon,
            cfg.pairs.stride,
        )?);
    }
    if pairs.is_empty() {
        return Err(Error::Empty("training pairs"));
    }
    log::info!("training on {} pairs from {} units", pairs.len(), units.len());
    let (model, report) = train_with_report(&pairs, &cfg.net, seeds.train)?;
    save_checkpoint(&model, &lay.checkpoint())?;

    let series: Vec<(Vec<f64>, Vec<f64>)> = units.iter().map(|s| (s.times(), s.hi.clone())).collect();
    let wiener = fit_linear_wiener(&series, cfg.net.horizon)?;
    write_json(
        &lay.wiener(),
        &WienerArtifact {
            config_hash: cfg.hash(),
            seeds,
            fit: wiener,
        },
    )?;

    let header = provenance(cfg, "train", "");
    let mut log_text = String::new();
    for line in header.lines() {
        let _ = writeln!(log_text, "# {line}");
    }
    log_text.push_str("epoch\tloss\n");
    for (e, l) in report.epoch_losses.iter().enumerate() {
        let _ = writeln!(log_text, "{}\t{l}", e + 1);
    }
    write_file(&lay.train_log(), log_text)?;

    let noise = model.noise_params();
    write_file(&lay.noise_table(), noise_table(&header, &noise, &wiener.noise))?;
    Ok(TrainSummary {
        n_pairs: pairs.len(),
        n_params: model.n_params(),
        noise,
        wiener,
        final_loss: report.epoch_losses.last().copied().unwrap_or(f64::NAN),
        checkpoint: lay.checkpoint(),
    })
}

fn noise_table(header: &str, dnn: &NoiseParams, wiener: &NoiseParams) -> String {
    let mut out = String::new();
    for line in header.lines() {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str("method\tphi0\tgamma_sq\teta_b_sq\n");
    let _ = writeln!(out, "adaptive-dnn\t{}\t{}\t{}", dnn.phi0, dnn.gamma_sq, dnn.eta_b_sq);
    let _ = writeln!(out, "adaptive-wiener\t{}\t{}\t{}", wiener.phi0, wiener.gamma_sq, wiener.eta_b_sq);
    out
}

/// Trained state needed for prediction, with config overrides applied.
pub struct Trained {
    pub model: Option<TrajectoryModel>,
    pub dnn_noise: NoiseParams,
    pub wiener_noise: NoiseParams,
}

pub fn load_trained(cfg: &ExperimentConfig, methods: &[Method]) -> Result<Trained> {
    let lay = Layout::new(&cfg.out_dir);
    let needs_net = methods.iter().any(|m| matches!(m, Method::Dnn | Method::AdaptiveDnn));
    let model = if needs_net {
        Some(load_checkpoint(&lay.checkpoint())?)
    } else {
        None
    };
    let mut dnn_noise = model
        .as_ref()
        .map_or(NoiseParams { gamma_sq: 0.0, eta_b_sq: 0.0, phi0: 1.0 }, |m| m.noise_params());
    if let Some(g) = cfg.noise.gamma_sq {
        dnn_noise.gamma_sq = g;
    }
    if let Some(e) = cfg.noise.eta_b_sq {
        dnn_noise.eta_b_sq = e;
    }
    let needs_wiener = methods.iter().any(|m| matches!(m, Method::Wiener | Method::AdaptiveWiener));
    let wiener_noise = if needs_wiener {
        read_json::<WienerArtifact>(&lay.wiener())?.fit.noise
    } else {
        NoiseParams { gamma_sq: 0.0, eta_b_sq: 0.0, phi0: 1.0 }
    };
    Ok(Trained {
        model,
        dnn_noise,
        wiener_noise,
    })
}

#[derive(Debug, Clone)]
pub struct PredictSummary {
    pub subset: Subset,
    pub n_units: usize,
    pub n_records: usize,
    pub updates: usize,
    pub contraction_violations: usize,
    pub all_censored: usize,
}

/// Per-cycle predictions of every configured method on the evaluation
/// units of `subset`.
pub fn predict(cfg: &ExperimentConfig, subset: Subset) -> Result<PredictSummary> {
    let lay = Layout::new(&cfg.out_dir);
    let units = evaluation_units(cfg, subset)?;
    if units.is_empty() {
        return Err(Error::Empty("evaluation units"));
    }
    let trained = load_trained(cfg, &cfg.methods)?;
    let fc = Forecaster {
        model: trained.model.as_ref(),
        dnn_noise: trained.dnn_noise,
        wiener_noise: trained.wiener_noise,
        cfg,
        seed: cfg.seeds().predict,
    };
    let evals = units
        .par_iter()
        .map(|s| fc.evaluate_unit(s, &cfg.methods))
        .collect::<Result<Vec<_>>>()?;

    let header = provenance(cfg, "predict", &format!("subset={subset}\nci_level={}", cfg.ci_level));
    let mut n_records = 0;
    for &m in &cfg.methods {
        let recs: Vec<PredictionRecord> = evals
            .iter()
            .flat_map(|e| e.records.iter().filter(|r| r.method == m).copied())
            .collect();
        n_records += recs.len();
        write_file(&lay.predictions(subset, m), write_predictions(&recs, &header))?;
        if m.adaptive() {
            let mut text = String::new();
            for (s, e) in units.iter().zip(&evals) {
                if let Some((_, tr)) = e.traces.iter().find(|(mm, _)| *mm == m) {
                    let rows: Vec<TraceRow> = tr.posteriors.iter().map(TraceRow::from).collect();
                    let block = write_trace(s.unit_id, &rows, if text.is_empty() { &header } else { "" });
                    // Only the first block keeps its column line.
                    text.push_str(if text.is_empty() { &block } else { block.split_once('\n').map_or("", |b| b.1) });
                }
            }
            write_file(&lay.traces(subset, m), text)?;
        }
    }
    let traces = evals.iter().flat_map(|e| e.traces.iter().map(|t| &t.1));
    let (updates, violations) = traces.fold((0, 0), |(u, v), t| (u + t.updates, v + t.contraction_violations));
    let all_censored = evals.iter().map(|e| e.all_censored).sum();
    if all_censored > 0 {
        log::warn!("{all_censored} predictions never reached the threshold within the horizon cap");
    }
    Ok(PredictSummary {
        subset,
        n_units: units.len(),
        n_records,
        updates,
        contraction_violations: violations,
        all_censored,
    })
}

#[derive(Debug, Clone)]
pub struct UnitPrediction {
    pub cycle: u32,
    pub method: Method,
    pub outcome_point: f64,
    pub ci: (f64, f64),
    pub psi: f64,
    pub all_censored: bool,
    pub density_integral: Option<f64>,
    pub files: Vec<PathBuf>,
}

/// Distribution, density, interval and drift trace of one unit at the given
/// cycles, for every configured method.
pub fn predict_unit(cfg: &ExperimentConfig, subset: Subset, unit: u32, cycles: &[u32]) -> Result<Vec<UnitPrediction>> {
    let lay = Layout::new(&cfg.out_dir);
    let series = load_series(cfg, subset)?
        .into_iter()
        .find(|s| s.unit_id == unit)
        .ok_or_else(|| Error::invalid(format!("{subset} has no unit {unit}")))?;
    for &c in cycles {
        if c < cfg.update.warmup {
            return Err(Error::invalid(format!(
                "cycle {c} precedes the drift warmup: no update in the first {} cycles, then every {}",
                cfg.update.warmup, cfg.update.every
            )));
        }
        if series.hi_at(c).is_none() {
            return Err(Error::invalid(format!("unit {unit} has no cycle {c}")));
        }
    }
    let trained = load_trained(cfg, &cfg.methods)?;
    let fc = Forecaster {
        model: trained.model.as_ref(),
        dnn_noise: trained.dnn_noise,
        wiener_noise: trained.wiener_noise,
        cfg,
        seed: cfg.seeds().predict,
    };
    let traces = cfg
        .methods
        .iter()
        .filter(|m| m.adaptive())
        .map(|&m| Ok((m, fc.posterior_trace(m, &series)?)))
        .collect::<Result<Vec<_>>>()?;
    let dir = lay.unit_dir(subset, unit);
    let base = provenance(cfg, "predict", &format!("subset={subset}\nunit={unit}"));
    for (m, tr) in &traces {
        let rows: Vec<TraceRow> = tr.posteriors.iter().map(TraceRow::from).collect();
        write_file(&dir.join(format!("{m}.trace.tsv")), write_trace(unit, &rows, &base))?;
    }
    let mut out = Vec::new();
    for &c in cycles {
        for o in fc.predict_at(&series, c, &cfg.methods, &traces)? {
            let header = format!("{base}cycle={c}\nmethod={}\npsi={}\n", o.method, o.psi);
            let stem = dir.join(format!("t{c}_{}", o.method));
            let mut files = Vec::new();
            let mut integral = None;
            if let Some(d) = &o.distribution {
                let p = stem.with_extension("dist.tsv");
                write_file(&p, write_distribution(d, &header))?;
                files.push(p);
                let p = stem.with_extension("density.tsv");
                write_file(&p, write_density(&d.density, &header))?;
                files.push(p);
                integral = Some(d.density.integral());
            }
            let mut summary = String::new();
            for line in header.lines() {
                let _ = writeln!(summary, "# {line}");
            }
            if o.all_censored {
                let _ = writeln!(
                    summary,
                    "# failure not reached within {} cycles by any sampled curve; reported at the cap",
                    cfg.rul.horizon_cap
                );
            }
            summary.push_str("point\tci_low\tci_high\tlevel\n");
            let _ = writeln!(summary, "{}\t{}\t{}\t{}", o.point, o.ci_low, o.ci_high, cfg.ci_level);
            let p = stem.with_extension("summary.tsv");
            write_file(&p, summary)?;
            files.push(p);
            if let Some(d) = &o.distribution {
                // Sanity check on the emitted interval.
                if let Ok(s) = point_and_interval(d, cfg.ci_level) {
                    debug_assert!(s.lower <= s.upper);
                }
            }
            out.push(UnitPrediction {
                cycle: c,
                method: o.method,
                outcome_point: o.point,
                ci: (o.ci_low, o.ci_high),
                psi: o.psi,
                all_censored: o.all_censored,
                density_integral: integral,
                files,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct EvalSummary {
    pub subset: Subset,
    pub rows: Vec<TableRow>,
    pub flags: Vec<(String, bool)>,
    pub table: String,
}

impl EvalSummary {
    pub fn rmse(&self, m: Method) -> Option<f64> {
        self.rows.iter().find(|r| r.method == m).map(|r| r.rmse)
    }

    pub fn picp(&self, m: Method) -> Option<f64> {
        self.rows.iter().find(|r| r.method == m).and_then(|r| r.picp)
    }

    /// RMSE improvement of the adaptive network over the plain one.
    pub fn adaptive_gap(&self) -> Option<f64> {
        Some(self.rmse(Method::Dnn)? - self.rmse(Method::AdaptiveDnn)?)
    }
}

/// Comparison table, ordering flags and per-cycle RMSE rows from the stored
/// predictions of every configured method.
pub fn evaluate(cfg: &ExperimentConfig, subset: Subset) -> Result<EvalSummary> {
    let lay = Layout::new(&cfg.out_dir);
    let mut records = Vec::new();
    for &m in &cfg.methods {
        let path = lay.predictions(subset, m);
        if !path.exists() {
            return Err(Error::invalid(format!(
                "no predictions for method {m} at {} (run predict first)",
                path.display()
            )));
        }
        let recs = parse_predictions(&read_file(&path)?, &path.display().to_string())?;
        if recs.is_empty() {
            return Err(Error::invalid(format!("{}: no prediction records", path.display())));
        }
        if let Some(r) = recs.iter().find(|r| r.method != m) {
            return Err(Error::invalid(format!("{}: record tagged {}", path.display(), r.method)));
        }
        records.extend(recs);
    }
    let rows = comparison_table(&records)?;
    let flags = ordering_flags(&rows);
    let header = provenance(cfg, "evaluate", &format!("subset={subset}\nci_level={}", cfg.ci_level));
    let table = format_table(&rows, cfg.ci_level);
    let dir = lay.subset_dir(subset);
    let mut text = String::new();
    for line in header.lines() {
        let _ = writeln!(text, "# {line}");
    }
    text.push_str(&table);
    write_file(&dir.join("table.txt"), text)?;
    write_file(&dir.join("table.tsv"), format_table_rows(&rows, &header))?;
    write_file(&dir.join("per_cycle_rmse.tsv"), format_cycle_rows(&per_cycle_rmse(&records), &header))?;
    let mut ft = String::new();
    for line in header.lines() {
        let _ = writeln!(ft, "# {line}");
    }
    ft.push_str("check\tholds\n");
    for (label, ok) in &flags {
        let _ = writeln!(ft, "{label}\t{}", if *ok { "pass" } else { "fail" });
    }
    write_file(&dir.join("orderings.tsv"), ft)?;
    Ok(EvalSummary {
        subset,
        rows,
        flags,
        table,
    })
}

#[derive(Debug, Clone)]
pub struct BenchSummary {
    pub rows: Vec<TimingRow>,
    /// Simulation(1000) time over interpolation(20) time.
    pub speedup: Option<f64>,
    /// Simulation times increase with the number of paths.
    pub monotone: bool,
    pub table: String,
}

/// Runtime table of the interpolation and simulation routes. Timing files
/// are the one artifact that does not reproduce byte for byte.
pub fn bench(cfg: &ExperimentConfig) -> Result<BenchSummary> {
    let settings = BenchSetting::default_set();
    let rows = benchmark_runtimes(
        &cfg.bench.process,
        &settings,
        cfg.bench.repetitions,
        cfg.bench.parallel,
        cfg.seeds().bench,
    )?;
    let find = |a: Algorithm, n: usize| {
        rows.iter()
            .find(|r| r.method == a && r.size == n)
            .map(|r| r.median_seconds)
    };
    let speedup = match (find(Algorithm::Simulation, 1000), find(Algorithm::Interpolation, 20)) {
        (Some(s), Some(i)) if i > 0.0 => Some(s / i),
        _ => None,
    };
    let sims: Vec<f64> = [20, 100, 500, 1000]
        .iter()
        .filter_map(|&n| find(Algorithm::Simulation, n))
        .collect();
    let monotone = sims.windows(2).all(|w| w[0] < w[1]);
    let table = format_timing_table(&rows);
    let dir = Layout::new(&cfg.out_dir).bench();
    let header = provenance(cfg, "bench", "");
    let mut text = String::new();
    for line in header.lines() {
        let _ = writeln!(text, "# {line}");
    }
    text.push_str(&table);
    if let Some(s) = speedup {
        let _ = writeln!(text, "simulation(1000) / interpolation(20) = {s:.1}");
    }
    let _ = writeln!(text, "simulation times increase with paths: {monotone}");
    write_file(&dir.join("runtime.txt"), text)?;
    write_file(&dir.join("runtime.tsv"), format_timing_rows(&rows))?;
    Ok(BenchSummary {
        rows,
        speedup,
        monotone,
        table,
    })
}

/// Surrogate run-to-failure files for all four subsets, sized like the
/// originals, so the pipeline can run without the NASA data.
pub fn synth(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let seeds = cfg.seeds();
    Subset::ALL
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let spec = FleetSpec {
                n_units: s.expected_units(),
                regimes: s.regimes(),
                // The two-fault subsets degrade with a different signature.
                severity: if matches!(s, Subset::FD003 | Subset::FD004) {
                    cfg.synth.severity * 1.25
                } else {
                    cfg.synth.severity
                },
                ..cfg.synth
            };
            let units = synthetic_fleet(&spec, crate::rng::mix(seeds.synth, k as u64));
            let path = dir.join(s.train_file());
            write_file(&path, write_cmapss(&units))?;
            Ok(path)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct RunAllSummary {
    pub ingest: Vec<IngestReport>,
    pub train: TrainSummary,
    pub predictions: Vec<PredictSummary>,
    pub evaluations: Vec<EvalSummary>,
    pub bench: Option<BenchSummary>,
    pub seconds: Vec<(String, f64)>,
    pub report: String,
}

/// Every stage in order: ingest, train, predict and evaluate on the
/// training subset and each transfer subset, then the runtime benchmark.
pub fn run_all(cfg: &ExperimentConfig, with_bench: bool) -> Result<RunAllSummary> {
    let mut seconds = Vec::new();
    let mut timed = |label: String, start: Instant| seconds.push((label, start.elapsed().as_secs_f64()));
    let mut subsets = vec![cfg.train_subset];
    subsets.extend(cfg.transfer_subsets.iter().filter(|&&s| s != cfg.train_subset));

    let mut ingest_reports = Vec::new();
    for &s in &subsets {
        let t = Instant::now();
        ingest_reports.push(ingest(cfg, s)?);
        timed(format!("ingest {s}"), t);
    }
    let t = Instant::now();
    let train_summary = train(cfg)?;
    timed("train".into(), t);
    let mut predictions = Vec::new();
    let mut evaluations = Vec::new();
    for &s in &subsets {
        let t = Instant::now();
        predictions.push(predict(cfg, s)?);
        timed(format!("predict {s}"), t);
        evaluations.push(evaluate(cfg, s)?);
    }
    let bench_summary = if with_bench {
        let t = Instant::now();
        let b = bench(cfg)?;
        timed("bench".into(), t);
        Some(b)
    } else {
        None
    };

    let mut report = String::new();
    for line in provenance(cfg, "run-all", "").lines() {
        let _ = writeln!(report, "# {line}");
    }
    let n = &train_summary.noise;
    let w = &train_summary.wiener.noise;
    let _ = writeln!(report, "noise parameters\nmethod\tphi0\tgamma_sq\teta_b_sq");
    let _ = writeln!(report, "adaptive-dnn\t{}\t{:.3e}\t{:.3e}", n.phi0, n.gamma_sq, n.eta_b_sq);
    let _ = writeln!(report, "adaptive-wiener\t{:.3e}\t{:.3e}\t{:.3e}\n", w.phi0, w.gamma_sq, w.eta_b_sq);
    for (ing, ev) in ingest_reports.iter().zip(&evaluations) {
        let _ = writeln!(
            report,
            "{} ({} units, median Spearman {:.3})\n{}",
            ev.subset, ing.n_units, ing.median_spearman, ev.table
        );
        for (label, ok) in &ev.flags {
            let _ = writeln!(report, "  {label}: {}", if *ok { "pass" } else { "fail" });
        }
        if let Some(g) = ev.adaptive_gap() {
            let _ = writeln!(report, "  adaptive gap (dnn - adaptive-dnn): {g:.3}");
        }
        report.push('\n');
    }
    let lay = Layout::new(&cfg.out_dir);
    write_file(&lay.root.join("summary.txt"), &report)?;
    let mut tt = String::from("stage\tseconds\n");
    for (label, s) in &seconds {
        let _ = writeln!(tt, "{label}\t{s:.3}");
    }
    write_file(&lay.root.join("timings.tsv"), tt)?;
    Ok(RunAllSummary {
        ingest: ingest_reports,
        train: train_summary,
        predictions,
        evaluations,
        bench: bench_summary,
        seconds,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::NetConfig;

    fn small_cfg(dir: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.out_dir = dir.join("out");
        cfg.data.dir = dir.join("data");
        cfg.net = NetConfig {
            epochs: 2,
            ..NetConfig::tiny()
        };
        cfg.pairs.stride = 25;
        cfg.rul.n_curves = 20;
        cfg.rul.horizon_cap = 250;
        cfg.eval.every = 25;
        cfg.hi.model.forest.n_trees = 3;
        cfg.hi.model.boost.rounds = 20;
        cfg.synth.life_range = (60, 90);
        cfg.transfer_subsets = vec![Subset::FD001];
        cfg
    }

    #[test]
    fn stages_chain_and_reproduce() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = small_cfg(tmp.path());
        synth(&cfg, &cfg.data.dir).unwrap();
        let ing = ingest(&cfg, Subset::FD002).unwrap();
        assert_eq!(ing.n_units, 260);
        assert!(ing.hi_min >= 0.0 && ing.hi_max <= 1.0);
        let first = fs::read(&ing.hi_path).unwrap();
        ingest(&cfg, Subset::FD002).unwrap();
        assert_eq!(fs::read(&ing.hi_path).unwrap(), first);
        let split = load_split(&cfg).unwrap();
        assert_eq!((split.train.len(), split.test.len()), (208, 52));

        let tr = train(&cfg).unwrap();
        assert_eq!(tr.noise.phi0, 1.0);
        let ckpt = fs::read(&tr.checkpoint).unwrap();
        train(&cfg).unwrap();
        assert_eq!(fs::read(&tr.checkpoint).unwrap(), ckpt);

        let p = predict(&cfg, Subset::FD002).unwrap();
        assert_eq!(p.n_units, 52);
        assert_eq!(p.contraction_violations, 0);
        let ev = evaluate(&cfg, Subset::FD002).unwrap();
        assert_eq!(ev.rows.len(), 4);
        let dnn = ev.rows.iter().find(|r| r.method == Method::Dnn).unwrap();
        assert!(dnn.picp.is_none());
        let text = read_file(&cfg.out_dir.join("FD002/table.txt")).unwrap();
        assert!(text.contains(&format!("config_hash={}", cfg.hash())));

        let preds = predict_unit(&cfg, Subset::FD002, split.test[0], &[20, 40]).unwrap();
        assert_eq!(preds.len(), 8);
        for p in preds.iter().filter_map(|p| p.density_integral) {
            assert!((p - 1.0).abs() < 1e-3);
        }
        assert!(predict_unit(&cfg, Subset::FD002, split.test[0], &[19]).is_err());
    }

    #[test]
    fn missing_inputs_are_reported() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = small_cfg(tmp.path());
        match ingest(&cfg, Subset::FD002) {
            Err(Error::Io { path, .. }) => assert!(path.ends_with("train_FD002.txt")),
            other => panic!("{other:?}"),
        }
        assert!(evaluate(&cfg, Subset::FD002).is_err());
        assert!(train(&cfg).is_err());
    }
}
