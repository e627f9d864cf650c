//! Build a config in code, run it on the thread pool and write the CSV/JSON outputs.
use qtzopt::harness::{render_table, run_experiment, write_outputs, ExperimentConfig, ExperimentKind};

fn main() -> qtzopt::Result<()> {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Bench);
    cfg.apply_text("bench.function = ackley\nbudget = 20000\ntrials = 5\ntrace = true\n")?;
    cfg.validate()?;
    println!("{}", cfg.to_text());

    let out = run_experiment(&cfg)?;
    print!("{}", render_table(&out));

    let dir = std::env::temp_dir().join("qtzopt-harness-example");
    for p in write_outputs(&out, &dir)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
