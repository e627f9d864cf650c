//! Improve a nearest-neighbor tour with QTZ, SA and QIA.
//!
//! `cargo run --release --example tsp_solve -- [cities] [seed]`
use qtzopt::harness::runner::algo_params;
use qtzopt::harness::{ExperimentConfig, ExperimentKind};
use qtzopt::metaheur::{run, Algorithm, SearchConfig, TspProblem};
use qtzopt::tsp::{generate_instance, Neighborhood};

fn main() -> qtzopt::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let inst = generate_instance(n, 300.0, seed)?;
    let p = TspProblem::new(inst, Neighborhood::TwoOpt, 0)?;
    println!("{n} cities, nearest-neighbor tour: {:.2}", p.start.cost);

    // Same parameters as `qtzopt tsp`.
    let defaults = ExperimentConfig::new(ExperimentKind::Tsp);
    let params = algo_params(&defaults)?;
    let cfg = SearchConfig { max_iter: defaults.budget, record_trace: false, ..Default::default() };
    for algo in Algorithm::ALL {
        let r = run(algo, &p, &params, &cfg, 0)?;
        let gain = (r.initial_f - r.final_f) / r.initial_f * 100.0;
        println!("{:>4}: final {:.2} ({gain:+.2}%), best seen {:.2}", algo.name(), r.final_f, r.best_f);
    }
    Ok(())
}
