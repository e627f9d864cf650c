use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qtzopt::harness::{render_table, run_experiment, write_outputs, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "qtzopt", version, about = "Quantization-based optimization experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set sa.alpha=0.999`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Number of seeds, 0..n−1.
    #[arg(long)]
    trials: Option<u64>,
    /// Explicit comma-separated seeds.
    #[arg(long)]
    seeds: Option<String>,
    /// Evaluation budget per trial.
    #[arg(long)]
    budget: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Write per-trial trace files.
    #[arg(long)]
    trace: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Random Euclidean TSP from the nearest-neighbor tour.
    Tsp {
        #[arg(long)]
        cities: Option<usize>,
        #[arg(long)]
        algos: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Benchmark function minimization.
    Bench {
        #[arg(long)]
        function: Option<String>,
        #[arg(long)]
        algos: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// One-dimensional washboard potential.
    Washboard {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        algos: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// GD, CG and BFGS with optional quantized steps.
    Gradopt {
        #[arg(long)]
        function: Option<String>,
        /// Comma-separated methods (gd, cg, bfgs).
        #[arg(long)]
        method: Option<String>,
        /// Also run the quantized twin of each method.
        #[arg(long)]
        quantized: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Synthetic least squares with SGD, QSGLD, Adam and QSLD-Adam.
    Mltoy {
        #[arg(long)]
        optimizers: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Numeric checks of the theory identities.
    Theory {
        #[command(flatten)]
        common: Common,
    },
}

fn build(kind: ExperimentKind, common: &Common, flags: &[(&str, Option<String>)]) -> qtzopt::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p, Some(kind))?,
        None => ExperimentConfig::new(kind),
    };
    if cfg.kind != kind {
        return Err(qtzopt::Error::Config {
            key: "kind".into(),
            msg: format!("config file is for `{}`, subcommand is `{kind}`", cfg.kind),
        });
    }
    let mut pairs: Vec<(&str, String)> = flags.iter().filter_map(|(k, v)| v.clone().map(|v| (*k, v))).collect();
    if let Some(n) = common.trials {
        pairs.push(("trials", n.to_string()));
    }
    if let Some(s) = &common.seeds {
        pairs.push(("seeds", s.clone()));
    }
    if let Some(b) = common.budget {
        pairs.push(("budget", b.to_string()));
    }
    if common.trace {
        pairs.push(("trace", "true".into()));
    }
    for (k, v) in pairs {
        cfg.set(k, &v)?;
    }
    for kv in &common.set {
        let Some((k, v)) = kv.split_once('=') else {
            return Err(qtzopt::Error::Config { key: kv.clone(), msg: "expected KEY=VALUE".into() });
        };
        cfg.set(k.trim(), v)?;
    }
    cfg.out = Some(common.out.clone());
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, common) = match &cli.cmd {
        Cmd::Tsp { cities, algos, common } => (
            build(
                ExperimentKind::Tsp,
                common,
                &[("tsp.cities", cities.map(|c| c.to_string())), ("algos", algos.clone())],
            ),
            common,
        ),
        Cmd::Bench { function, algos, common } => (
            build(
                ExperimentKind::Bench,
                common,
                &[("bench.function", function.clone()), ("algos", algos.clone())],
            ),
            common,
        ),
        Cmd::Washboard { alpha, algos, common } => (
            build(
                ExperimentKind::Washboard,
                common,
                &[("washboard.alpha", alpha.map(|a| a.to_string())), ("algos", algos.clone())],
            ),
            common,
        ),
        Cmd::Gradopt { function, method, quantized, common } => (
            build(
                ExperimentKind::Gradopt,
                common,
                &[
                    ("gradopt.function", function.clone()),
                    ("gradopt.methods", method.clone()),
                    ("gradopt.quantized", Some(quantized.to_string())),
                ],
            ),
            common,
        ),
        Cmd::Mltoy { optimizers, common } => (
            build(ExperimentKind::Mltoy, common, &[("mltoy.optimizers", optimizers.clone())]),
            common,
        ),
        Cmd::Theory { common } => (build(ExperimentKind::Theory, common, &[]), common),
    };
    let result = cfg.and_then(|cfg| {
        let out = run_experiment(&cfg)?;
        print!("{}", render_table(&out));
        let paths = write_outputs(&out, &common.out)?;
        eprintln!("wrote {} files to {}", paths.len(), common.out.display());
        Ok(out.diagnostics.iter().all(|d| d.pass))
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
