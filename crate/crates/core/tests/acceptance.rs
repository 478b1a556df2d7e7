//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). Failures are reported, and
//! the process exits nonzero on any failure only when `ACCEPTANCE_STRICT`
//! is set, so `cargo test` stays usable on machines without the C-MAPSS
//! files. `CMAPSS_DIR` points at the directory holding `train_FD00x.txt`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use rulkit::degradation::{simulate_paths, variance_profile, NoiseParams, PatternCurve};
use rulkit::drift::{joint_moments, posterior_update, update_schedule, DriftPosterior};
use rulkit::eval::{mpiw, picp, Method, PredictionRecord};
use rulkit::net::{grad_check, linear_wiener_pairs, train_with_report, NetConfig, SyntheticLinear, TrajectoryModel};
use rulkit::pipeline::{self, ExperimentConfig, RunAllSummary, Subset};
use rulkit::rul::{
    benchmark_runtimes, interpolation_rul, Algorithm, Bandwidth, BenchSetting, LinearBenchmark, RulDistribution,
};
use rulkit::rng;

struct Line {
    id: &'static str,
    name: &'static str,
    pass: bool,
}

struct Report {
    lines: Vec<Line>,
    densities: Vec<(String, f64)>,
    contraction_checks: usize,
    contraction_violations: usize,
}

impl Report {
    fn record(&mut self, id: &'static str, name: &'static str, pass: bool, detail: String) {
        println!("{} {id:>3} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.lines.push(Line { id, name, pass });
    }

    fn note(&mut self, text: String) {
        println!("INFO     {text}");
    }

    fn density(&mut self, label: impl Into<String>, d: &RulDistribution) {
        self.densities.push((label.into(), d.density.integral()));
    }
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// W1 between two weighted empirical distributions: ∫ |F(x) - G(x)| dx.
fn wasserstein1(a: &RulDistribution, b: &RulDistribution) -> f64 {
    let norm = |d: &RulDistribution| {
        let total: f64 = d.weights.iter().sum();
        let mut v: Vec<(f64, f64)> = d.samples.iter().zip(&d.weights).map(|(&s, &w)| (s, w / total)).collect();
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        v
    };
    let (xa, xb) = (norm(a), norm(b));
    let mut events: Vec<(f64, f64)> = xa.iter().copied().chain(xb.iter().map(|&(s, w)| (s, -w))).collect();
    events.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut diff = 0.0;
    let mut total = 0.0;
    for k in 0..events.len() {
        diff += events[k].1;
        if k + 1 < events.len() {
            total += diff.abs() * (events[k + 1].0 - events[k].0);
        }
    }
    total
}

fn criterion_1(r: &mut Report) {
    let bench = LinearBenchmark {
        gamma_sq: 0.0,
        eta_b_sq: 0.0,
        ..LinearBenchmark::default()
    };
    let interp = bench.interpolation(2000, 1).unwrap();
    let sim = bench.simulation(1000, 1).unwrap();
    let err = |d: &RulDistribution| d.samples.iter().map(|s| (s - 80.0).abs()).fold(0.0, f64::max);
    let (ei, es) = (err(&interp), err(&sim));
    r.density("deterministic interpolation", &interp);
    r.density("deterministic simulation", &sim);
    let pass = ei < 1e-9 && es < 1e-9 && interp.censored_count == 0 && sim.censored_count == 0;
    r.record(
        "1",
        "deterministic limit",
        pass,
        format!("max |t - 80| interpolation {ei:.2e}, simulation {es:.2e} (tol 1e-9)"),
    );
}

fn criterion_2(r: &mut Report) -> RulDistribution {
    let bench = LinearBenchmark::default();
    let t = Instant::now();
    let interp = bench.interpolation(2000, 21).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let oracle = bench.simulation(100_000, 22).unwrap();
    let w1 = wasserstein1(&interp, &oracle);
    let rel = w1 / oracle.mean();
    r.density("benchmark interpolation", &interp);
    r.density("benchmark oracle", &oracle);
    r.record(
        "2",
        "oracle equivalence",
        rel <= 0.02 && secs < 1.0,
        format!(
            "W1 {w1:.3} = {:.2}% of oracle mean {:.2} (tol 2%); interpolation {secs:.3}s (tol 1s); censored {:.1}% vs {:.1}%",
            100.0 * rel,
            oracle.mean(),
            100.0 * interp.censored_count as f64 / 2000.0,
            100.0 * oracle.censored_count as f64 / 100_000.0
        ),
    );

    // Same mean trajectory with a unit drift on Q(t) = 0.01 t.
    let unit = LinearBenchmark {
        pattern_scale: 0.01,
        ..LinearBenchmark::default()
    };
    let ui = unit.interpolation(2000, 23).unwrap();
    let uo = unit.simulation(100_000, 24).unwrap();
    let uw = wasserstein1(&ui, &uo);
    r.density("unit-drift interpolation", &ui);
    r.note(format!(
        "2s  unit-drift parametrisation (phi = 1, Q = 0.01 t): W1 {uw:.3} = {:.2}% of oracle mean {:.2}",
        100.0 * uw / uo.mean(),
        uo.mean()
    ));
    oracle
}

fn criterion_3(r: &mut Report, oracle: &RulDistribution) {
    let bench = LinearBenchmark::default();
    let rows = benchmark_runtimes(&bench, &BenchSetting::default_set(), 20, false, 31).unwrap();
    let time = |a: Algorithm, n: usize| rows.iter().find(|x| x.method == a && x.size == n).unwrap().median_seconds;
    let ratio = time(Algorithm::Simulation, 1000) / time(Algorithm::Interpolation, 20);
    let sims: Vec<f64> = [20, 100, 500, 1000].iter().map(|&n| time(Algorithm::Simulation, n)).collect();
    let monotone = time(Algorithm::Interpolation, 20) < sims[0] && sims.windows(2).all(|w| w[0] < w[1]);
    let qi = wasserstein1(&bench.interpolation(20, 32).unwrap(), oracle) / oracle.mean();
    let qs = wasserstein1(&bench.simulation(1000, 33).unwrap(), oracle) / oracle.mean();
    r.record(
        "3",
        "runtime ordering",
        ratio >= 5.0 && monotone,
        format!(
            "simulation(1000)/interpolation(20) = {ratio:.1} (tol >= 5); medians {:.4}s < {} : {monotone}; W1/oracle mean {:.1}% vs {:.1}%",
            time(Algorithm::Interpolation, 20),
            sims.iter().map(|s| format!("{s:.4}s")).collect::<Vec<_>>().join(" < "),
            100.0 * qi,
            100.0 * qs
        ),
    );
}

fn criterion_4(r: &mut Report) {
    let (phi, g2, e2) = (0.01, 5e-4, 1e-4);
    let np = NoiseParams::new(g2, e2, phi).unwrap();
    let q = PatternCurve::from_fn(PatternCurve::uniform_grid(0.0, 50.0, 1.0).unwrap(), |t| t).unwrap();
    let n = 100_000;
    let paths = simulate_paths(&q, &np, phi, 0.01, n, 41).unwrap();
    let xi = variance_profile(&q, &np, 0.0).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for t in [10usize, 50] {
        let (m, v) = paths.moments_at(t);
        let tf = t as f64;
        let var = g2 * tf.powi(3) / 3.0 + e2 * tf;
        let profile = xi.value_at(tf).unwrap();
        let se_v = var * (2.0 / (n as f64 - 1.0)).sqrt();
        let se_m = (var / n as f64).sqrt();
        let zv = (v - var) / se_v;
        let zm = (m - phi * tf) / se_m;
        ok &= zv.abs() <= 3.0 && zm.abs() <= 3.0 && (profile - var).abs() <= 1e-12 * var.max(1.0);
        parts.push(format!("t={t}: var {v:.5e} vs {var:.5e} ({zv:+.2} se), mean {zm:+.2} se"));
    }
    r.record("4", "law of total variance", ok, format!("{} (tol 3 se, 1e5 paths)", parts.join("; ")));
}

fn criterion_5(r: &mut Report) {
    let cfg = NetConfig {
        hidden_dim: 8,
        horizon: 8,
        conv_filters: vec![6, 8],
        kernel_sizes: vec![5, 5],
        ..NetConfig::default()
    };
    let mut model = TrajectoryModel::new(cfg, 60.0, 51).unwrap();
    model.set_noise(2e-3, 1e-4).unwrap();
    let spec = SyntheticLinear {
        horizon: 8,
        start_range: (12, 30),
        ..SyntheticLinear::default()
    };
    let pair = linear_wiener_pairs(&spec, 1, 52).unwrap().remove(0);
    let t = Instant::now();
    let rep = grad_check(&model, &pair, 1e-5).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let n = model.n_params();
    r.record(
        "5",
        "gradient correctness",
        n <= 2000 && rep.max_rel_error <= 1e-4 && rep.max_abs_error < 1e-8 && secs < 30.0,
        format!(
            "{n} parameters incl. 2 log-variances; max rel error {:.2e} (tol 1e-4), max abs error on |g| < 1e-4 {:.2e}; {secs:.1}s (tol 30s)",
            rep.max_rel_error, rep.max_abs_error
        ),
    );
}

fn criterion_6(r: &mut Report) {
    let spec = SyntheticLinear::default();
    let pairs = linear_wiener_pairs(&spec, 200, 42).unwrap();
    let cfg = NetConfig {
        epochs: 100,
        batch_size: 8,
        ..NetConfig::default()
    };
    let t = Instant::now();
    let (model, rep) = train_with_report(&pairs, &cfg, 1).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let eg = rep.noise.gamma_sq / spec.gamma_sq - 1.0;
    let ee = rep.noise.eta_b_sq / spec.eta_b_sq - 1.0;
    let mut worst: f64 = 0.0;
    for p in linear_wiener_pairs(&spec, 50, 99).unwrap() {
        let future = &p.future_times[..10];
        let curve = model.predict(&p.history, future, 1.0).unwrap();
        for (&tt, v) in future.iter().zip(&curve.values()[1..]) {
            let truth = spec.slope * tt;
            worst = worst.max((v - truth).abs() / truth);
        }
    }
    r.record(
        "6",
        "joint estimation recovery",
        eg.abs() <= 0.3 && ee.abs() <= 0.3 && worst <= 0.05,
        format!(
            "gamma_sq {:.3e} ({:+.1}%), eta_b_sq {:.3e} ({:+.1}%) (tol 30%); worst expectation error over 10 steps {:.2}% (tol 5%); {secs:.0}s",
            rep.noise.gamma_sq,
            100.0 * eg,
            rep.noise.eta_b_sq,
            100.0 * ee,
            100.0 * worst
        ),
    );
}

/// Scalar Kalman filter for `ΔZ = φ ΔQ + noise` with a random-walk drift on
/// a linear pattern, where the observation noise correlates with the
/// process noise through the drift wander inside the interval.
fn kalman(psi0: f64, p0: f64, a: f64, h: f64, g2: f64, e2: f64, incs: &[f64]) -> Vec<(f64, f64)> {
    let (mut x, mut p) = (psi0, p0);
    let qn = g2 * h;
    let rn = a * a * g2 * h.powi(3) / 3.0 + e2 * h;
    let cn = a * g2 * h * h / 2.0;
    incs.iter()
        .map(|&dz| {
            let dq = a * h;
            let k = (p * dq + cn) / (p * dq * dq + rn);
            x += k * (dz - x * dq);
            p = p + qn - k * (p * dq + cn);
            (x, p)
        })
        .collect()
}

fn criterion_7(r: &mut Report) {
    // (a) constant-increment sequences against the scalar recursion.
    let mut worst: f64 = 0.0;
    let mut rngx = rng::seeded(71);
    for case in 0..200 {
        let a = rngx.random_range(0.005..0.05);
        let h = [1.0, 2.0, 5.0, 10.0][case % 4];
        let g2 = if case % 3 == 0 { 0.0 } else { rngx.random_range(1e-6..1e-3) };
        let e2 = rngx.random_range(1e-6..1e-3);
        let p0 = rngx.random_range(0.0..0.05);
        let psi0 = rngx.random_range(0.5..2.0);
        let np = NoiseParams::new(g2, e2, 1.0).unwrap();
        let incs: Vec<f64> = (0..10).map(|_| a * h * rngx.random_range(0.5..2.5)).collect();
        let oracle = kalman(psi0, p0, a, h, g2, e2, &incs);
        let mut post = DriftPosterior::new(psi0, p0, 0.0).unwrap();
        let mut z = 0.0;
        for (k, &dz) in incs.iter().enumerate() {
            let t0 = k as f64 * h;
            let seg = PatternCurve::new(vec![t0, t0 + h], vec![a * t0, a * (t0 + h)]).unwrap();
            let jm = joint_moments(&post, &seg, &np, z).unwrap();
            z += dz;
            post = posterior_update(&post, z, &jm).unwrap();
            r.contraction_checks += 1;
            if post.omega_sq > jm.cov11() {
                r.contraction_violations += 1;
            }
            worst = worst.max((post.psi - oracle[k].0).abs()).max((post.omega_sq - oracle[k].1).abs());
        }
    }
    r.record("7a", "scalar Kalman equivalence", worst <= 1e-12, format!("200 ten-step sequences, max abs difference {worst:.2e} (tol 1e-12)"));

    // (c) fixed true drift, model with a small drift diffusion.
    let (truth, slope, e2_true) = (1.5, 0.01, 1e-5_f64);
    let np = NoiseParams::new(1e-4, 1e-5, 1.0).unwrap();
    let (every, warmup) = (10, 20);
    let mut covered = 0;
    let mut err_sum = 0.0;
    for unit in 0..100u64 {
        let mut rr = rng::stream(72, unit);
        let mut z = vec![0.0];
        for t in 1..=100 {
            let e: f64 = StandardNormal.sample(&mut rr);
            let prev = z[t - 1];
            z.push(prev + truth * slope + e2_true.sqrt() * e);
        }
        let t0 = warmup - every;
        let mut post = DriftPosterior::initial(t0 as f64, 0.0).unwrap();
        let mut prev = t0;
        for tu in update_schedule(100, every, warmup) {
            let times: Vec<f64> = (prev..=tu).map(f64::from).collect();
            let seg = PatternCurve::from_fn(times, |t| slope * t).unwrap();
            let jm = joint_moments(&post, &seg, &np, z[prev as usize]).unwrap();
            post = posterior_update(&post, z[tu as usize], &jm).unwrap();
            r.contraction_checks += 1;
            if post.omega_sq > jm.cov11() {
                r.contraction_violations += 1;
            }
            prev = tu;
        }
        let (lo, hi) = post.interval(1.959_963_984_540_054);
        covered += usize::from(lo <= truth && truth <= hi);
        err_sum += post.psi - truth;
    }
    r.record(
        "7c",
        "posterior covers true drift",
        covered >= 90,
        format!("95% interval at cycle 100 covers 1.5 in {covered}/100 units (tol >= 90); mean error {:+.4}", err_sum / 100.0),
    );
}

fn criterion_7b(r: &mut Report) {
    r.record(
        "7b",
        "variance contraction",
        r.contraction_violations == 0 && r.contraction_checks > 0,
        format!(
            "{} violations of omega_sq <= Cov(1,1) over {} updates",
            r.contraction_violations, r.contraction_checks
        ),
    );
}

fn cmapss_dir() -> PathBuf {
    std::env::var_os("CMAPSS_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| workspace_root().join("data/CMAPSSData"))
}

fn desk_config(data: &Path, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::load(&workspace_root().join("configs/desk.toml")).unwrap();
    cfg.data.dir = data.to_path_buf();
    cfg.out_dir = out.to_path_buf();
    cfg
}

/// Full pipeline on one rayon thread.
fn run_single_threaded(cfg: &ExperimentConfig) -> rulkit::Result<(RunAllSummary, f64)> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let t = Instant::now();
    let s = pool.install(|| pipeline::run_all(cfg, false))?;
    Ok((s, t.elapsed().as_secs_f64()))
}

fn unit_densities(r: &mut Report, cfg: &ExperimentConfig) {
    let Ok(units) = pipeline::evaluation_units(cfg, cfg.train_subset) else {
        return;
    };
    for s in units.iter().take(5) {
        let last = *s.cycles.last().unwrap();
        let cycles: Vec<u32> = [cfg.update.warmup, (cfg.update.warmup + last) / 2].into_iter().filter(|&c| c <= last).collect();
        if let Ok(preds) = pipeline::predict_unit(cfg, cfg.train_subset, s.unit_id, &cycles) {
            for p in preds {
                if let Some(i) = p.density_integral {
                    r.densities.push((format!("unit {} cycle {} {}", s.unit_id, p.cycle, p.method), i));
                }
            }
        }
    }
}

struct PipelineChecks {
    c8: (bool, String),
    c9: (bool, String),
    c10: (bool, String),
}

fn pipeline_checks(s: &RunAllSummary, secs: f64, train: Subset) -> PipelineChecks {
    let mut counts = Vec::new();
    let mut counts_ok = true;
    let mut range_ok = true;
    let mut rho = f64::NAN;
    for ing in &s.ingest {
        counts_ok &= ing.n_units == ing.subset.expected_units();
        range_ok &= ing.hi_min >= 0.0 && ing.hi_max <= 1.0;
        counts.push(format!("{}={}", ing.subset, ing.n_units));
        if ing.subset == train {
            rho = ing.median_spearman;
        }
    }
    counts_ok &= s.ingest.len() == 4;
    let c8 = (
        counts_ok && range_ok && rho >= 0.9,
        format!("units {} (tol 100/260/100/248); HI within [0,1]: {range_ok}; median Spearman on {train} training units {rho:.3} (tol >= 0.9)", counts.join(" ")),
    );

    let ev = |sub: Subset| s.evaluations.iter().find(|e| e.subset == sub);
    let c9 = match ev(train) {
        Some(e) => {
            let (ad, dnn, aw) = (e.rmse(Method::AdaptiveDnn), e.rmse(Method::Dnn), e.rmse(Method::AdaptiveWiener));
            let p = e.picp(Method::AdaptiveDnn).unwrap_or(f64::NAN);
            let ok = match (ad, dnn, aw) {
                (Some(ad), Some(dnn), Some(aw)) => ad <= dnn && ad <= aw && dnn <= aw && p >= 0.85 && secs <= 1800.0,
                _ => false,
            };
            (
                ok,
                format!(
                    "RMSE adaptive-dnn {:.2}, dnn {:.2}, adaptive-wiener {:.2}, wiener {:.2} (need ad <= dnn <= aw); PICP adaptive-dnn {:.1}% (tol >= 85%); run {:.0}s (tol 1800s)",
                    ad.unwrap_or(f64::NAN),
                    dnn.unwrap_or(f64::NAN),
                    aw.unwrap_or(f64::NAN),
                    e.rmse(Method::Wiener).unwrap_or(f64::NAN),
                    100.0 * p,
                    secs
                ),
            )
        }
        None => (false, format!("no evaluation on {train}")),
    };

    let gap = |sub| ev(sub).and_then(|e| e.adaptive_gap());
    let c10 = match (gap(Subset::FD001), gap(Subset::FD003), gap(Subset::FD004)) {
        (Some(g1), Some(g3), Some(g4)) => (
            g1 >= 0.0 && g3 >= 0.0 && g4 >= 0.0 && g3 + g4 > g1,
            format!("gap = RMSE(dnn) - RMSE(adaptive-dnn): FD001 {g1:.2}, FD003 {g3:.2}, FD004 {g4:.2} (need all >= 0 and FD003 + FD004 > FD001)"),
        ),
        _ => (false, "transfer evaluations missing".into()),
    };
    PipelineChecks { c8, c9, c10 }
}

fn criteria_8_to_10(r: &mut Report) {
    let dir = cmapss_dir();
    let missing: Vec<String> = Subset::ALL
        .iter()
        .map(|s| dir.join(s.train_file()))
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        let why = format!("C-MAPSS files missing ({}); set CMAPSS_DIR", missing.join(", "));
        r.record("8", "data pipeline", false, why.clone());
        r.record("9", "FD002 directional replication", false, why.clone());
        r.record("10", "cross-subset transfer", false, why);
        return;
    }
    let out = tempfile::tempdir().unwrap();
    let cfg = desk_config(&dir, out.path());
    match run_single_threaded(&cfg) {
        Ok((s, secs)) => {
            let c = pipeline_checks(&s, secs, cfg.train_subset);
            r.record("8", "data pipeline", c.c8.0, c.c8.1);
            r.record("9", "FD002 directional replication", c.c9.0, c.c9.1);
            r.record("10", "cross-subset transfer", c.c10.0, c.c10.1);
            let violations: usize = s.predictions.iter().map(|p| p.contraction_violations).sum();
            let updates: usize = s.predictions.iter().map(|p| p.updates).sum();
            r.contraction_checks += updates;
            r.contraction_violations += violations;
            unit_densities(r, &cfg);
        }
        Err(e) => {
            r.record("8", "data pipeline", false, format!("pipeline error: {e}"));
            r.record("9", "FD002 directional replication", false, "pipeline did not run".into());
            r.record("10", "cross-subset transfer", false, "pipeline did not run".into());
        }
    }
}

/// The same checks on generated stand-in files, reduced in scale. Reported
/// as information only: the stand-in is not the C-MAPSS data.
fn surrogate(r: &mut Report) {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = desk_config(&tmp.path().join("data"), &tmp.path().join("out"));
    cfg.pairs.stride = 10;
    cfg.net.epochs = 10;
    cfg.eval.every = 5;
    pipeline::synth(&cfg, &cfg.data.dir).unwrap();
    match run_single_threaded(&cfg) {
        Ok((s, secs)) => {
            let c = pipeline_checks(&s, secs, cfg.train_subset);
            for (id, (ok, d)) in [("8s", c.c8), ("9s", c.c9), ("10s", c.c10)] {
                r.note(format!("{id} surrogate fleet, reduced scale [{}]: {d}", if ok { "holds" } else { "does not hold" }));
            }
            let violations: usize = s.predictions.iter().map(|p| p.contraction_violations).sum();
            let updates: usize = s.predictions.iter().map(|p| p.updates).sum();
            r.contraction_checks += updates;
            r.contraction_violations += violations;
            unit_densities(r, &cfg);
        }
        Err(e) => r.note(format!("surrogate pipeline error: {e}")),
    }
}

fn criterion_11(r: &mut Report) {
    // Densities from a sweep of random processes on top of everything above.
    let mut rr = rng::seeded(111);
    for k in 0..200u64 {
        let bench = LinearBenchmark {
            phi: rr.random_range(0.005..0.05),
            gamma_sq: 10f64.powf(rr.random_range(-7.0..-3.0)),
            eta_b_sq: 10f64.powf(rr.random_range(-6.0..-3.0)),
            threshold: rr.random_range(0.3..1.0),
            ..LinearBenchmark::default()
        };
        let q = bench.pattern(1.0).unwrap();
        let xi = variance_profile(&q, &bench.noise(), 0.0).unwrap();
        if let Ok(d) = interpolation_rul(&q, &xi, bench.drift(), bench.threshold, 200, k, Bandwidth::Silverman) {
            r.density(format!("sweep {k}"), &d);
        }
    }
    let worst = r.densities.iter().map(|(_, i)| (i - 1.0).abs()).fold(0.0, f64::max);
    let bad: Vec<&str> = r.densities.iter().filter(|(_, i)| (i - 1.0).abs() > 1e-3).map(|(l, _)| l.as_str()).collect();

    let mut monotone = 0;
    for _ in 0..1000 {
        let n = rr.random_range(1..60);
        let recs: Vec<PredictionRecord> = (0..n)
            .map(|i| {
                let truth = rr.random_range(0.0..200.0);
                let point = truth + rr.random_range(-50.0..50.0);
                let lo = point - rr.random_range(0.0..40.0);
                PredictionRecord {
                    unit_id: 1,
                    eval_time: i,
                    true_rul: truth,
                    predicted_rul: point,
                    ci_low: lo,
                    ci_high: point + rr.random_range(0.0..40.0),
                    method: Method::AdaptiveDnn,
                }
            })
            .collect();
        let wider: Vec<PredictionRecord> = recs
            .iter()
            .map(|x| PredictionRecord {
                ci_low: x.ci_low - rr.random_range(0.0..20.0),
                ci_high: x.ci_high + rr.random_range(0.0..20.0),
                ..*x
            })
            .collect();
        if picp(&wider).unwrap() >= picp(&recs).unwrap() && mpiw(&wider).unwrap() >= mpiw(&recs).unwrap() {
            monotone += 1;
        }
    }
    r.record(
        "11",
        "density normalisation and interval monotonicity",
        bad.is_empty() && monotone == 1000,
        format!(
            "{} densities, max |integral - 1| {worst:.1e} (tol 1e-3){}; PICP/MPIW non-decreasing in {monotone}/1000 widened record sets",
            r.densities.len(),
            if bad.is_empty() { String::new() } else { format!(", off: {}", bad.join(", ")) }
        ),
    );
}

fn main() {
    let mut r = Report {
        lines: Vec::new(),
        densities: Vec::new(),
        contraction_checks: 0,
        contraction_violations: 0,
    };
    let start = Instant::now();
    criterion_1(&mut r);
    let oracle = criterion_2(&mut r);
    criterion_3(&mut r, &oracle);
    criterion_4(&mut r);
    criterion_5(&mut r);
    criterion_6(&mut r);
    criterion_7(&mut r);
    criteria_8_to_10(&mut r);
    if std::env::var_os("ACCEPTANCE_SKIP_SURROGATE").is_none() {
        surrogate(&mut r);
    }
    criterion_7b(&mut r);
    criterion_11(&mut r);

    let failed: Vec<String> = r.lines.iter().filter(|l| !l.pass).map(|l| format!("{} ({})", l.id, l.name)).collect();
    println!(
        "acceptance: {}/{} criteria pass in {:.0}s{}",
        r.lines.len() - failed.len(),
        r.lines.len(),
        start.elapsed().as_secs_f64(),
        if failed.is_empty() { String::new() } else { format!("; failing: {}", failed.join(", ")) }
    );
    if !failed.is_empty() && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
