//! Mini-batch least squares: SGD and Adam against their quantized Langevin twins.
use qtzopt::gradopt::{run_ml, LeastSquares, MlOptimizer, MlRunConfig};

fn main() -> qtzopt::Result<()> {
    let p = LeastSquares::synthetic(20, 1000, 100.0, 7)?;
    println!("20 unknowns, 1000 rows, condition 100; target loss 1e-3");
    for opt in [MlOptimizer::Sgd, MlOptimizer::Qsgld, MlOptimizer::Adam, MlOptimizer::QsldAdam] {
        let cfg = MlRunConfig::new(opt);
        for seed in 0..3 {
            let r = run_ml(&p, &cfg, seed);
            println!(
                "{:<10} seed {seed}: final loss {:.3e}, hit at {:>6}, max rounding {:.2e}",
                opt.name(),
                r.final_loss,
                r.hit_step.map_or("-".into(), |s| s.to_string()),
                r.max_rounding
            );
        }
    }
    Ok(())
}
