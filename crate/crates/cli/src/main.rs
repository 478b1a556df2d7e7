use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rulkit::eval::Method;
use rulkit::pipeline::{self, ExperimentConfig, Subset};

/// Adaptive Wiener RUL prediction on C-MAPSS health indices.
#[derive(Parser)]
#[command(name = "rulkit", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Subset to operate on (FD001..FD004).
    #[arg(long, global = true)]
    subset: Option<Subset>,
    /// Restrict to these methods (repeatable).
    #[arg(long, global = true)]
    method: Vec<Method>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory holding the train_FD00x.txt files.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a subset and write its health-index series.
    Ingest,
    /// Train the trajectory network and fit the linear Wiener baseline.
    Train,
    /// Predict RUL on every evaluation unit, or one unit with --unit/--at.
    Predict {
        /// Unit to predict (requires --at).
        #[arg(long, requires = "at")]
        unit: Option<u32>,
        /// Cycles to predict at (repeatable, requires --unit).
        #[arg(long, requires = "unit")]
        at: Vec<u32>,
    },
    /// Comparison table from stored predictions.
    Evaluate,
    /// Runtime of the interpolation and simulation routes.
    Bench,
    /// Every stage on the training and transfer subsets.
    RunAll {
        /// Skip the runtime benchmark.
        #[arg(long)]
        no_bench: bool,
    },
    /// Write surrogate train_FD00x.txt files into the data directory.
    Synth,
}

fn config(common: &Common) -> rulkit::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out_dir = o.clone();
    }
    if let Some(d) = &common.data {
        cfg.data.dir = d.clone();
    }
    if !common.method.is_empty() {
        cfg.methods = common.method.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> rulkit::Result<()> {
    let cfg = config(&cli.common)?;
    let subset = cli.common.subset.unwrap_or(cfg.train_subset);
    match cli.command {
        Command::Ingest => {
            let r = pipeline::ingest(&cfg, subset)?;
            println!(
                "{subset}: {} units, HI in [{:.3}, {:.3}], median Spearman {:.3}{}",
                r.n_units,
                r.hi_min,
                r.hi_max,
                r.median_spearman,
                if r.fitted_model { " (HI model fitted)" } else { "" }
            );
            println!("wrote {}", r.hi_path.display());
        }
        Command::Train => {
            let t = pipeline::train(&cfg)?;
            println!("{} pairs, {} parameters, final loss {:.4}", t.n_pairs, t.n_params, t.final_loss);
            println!(
                "adaptive-dnn     gamma_sq={:.3e} eta_b_sq={:.3e}",
                t.noise.gamma_sq, t.noise.eta_b_sq
            );
            println!(
                "adaptive-wiener  phi0={:.3e} gamma_sq={:.3e} eta_b_sq={:.3e}",
                t.wiener.noise.phi0, t.wiener.noise.gamma_sq, t.wiener.noise.eta_b_sq
            );
        }
        Command::Predict { unit: Some(u), at } => {
            for p in pipeline::predict_unit(&cfg, subset, u, &at)? {
                println!(
                    "unit {u} cycle {} {:<16} rul {:8.2}  ci [{:.2}, {:.2}]  psi {:.4}{}",
                    p.cycle,
                    p.method.to_string(),
                    p.outcome_point,
                    p.ci.0,
                    p.ci.1,
                    p.psi,
                    if p.all_censored { "  (censored at cap)" } else { "" }
                );
            }
        }
        Command::Predict { unit: None, .. } => {
            let p = pipeline::predict(&cfg, subset)?;
            println!(
                "{subset}: {} units, {} records, {} drift updates, {} contraction violations",
                p.n_units, p.n_records, p.updates, p.contraction_violations
            );
        }
        Command::Evaluate => {
            let e = pipeline::evaluate(&cfg, subset)?;
            print!("{}", e.table);
            for (label, ok) in &e.flags {
                println!("{label}: {}", if *ok { "pass" } else { "fail" });
            }
        }
        Command::Bench => {
            let b = pipeline::bench(&cfg)?;
            print!("{}", b.table);
            if let Some(s) = b.speedup {
                println!("simulation(1000) / interpolation(20) = {s:.1}");
            }
        }
        Command::RunAll { no_bench } => {
            let r = pipeline::run_all(&cfg, !no_bench)?;
            print!("{}", r.report);
            if let Some(b) = &r.bench {
                print!("{}", b.table);
            }
        }
        Command::Synth => {
            for p in pipeline::synth(&cfg, &cfg.data.dir)? {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
