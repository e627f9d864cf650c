//! GD, CG and BFGS on Rosenbrock, with and without quantized steps.
use qtzopt::benchfns::by_name;
use qtzopt::gradopt::{minimize, Method, MinimizeConfig, Resolution};

fn main() -> qtzopt::Result<()> {
    let f = by_name("rosenbrock2d", None)?;
    for method in [Method::Gd, Method::Cg, Method::Bfgs] {
        for quantized in [false, true] {
            let mut cfg = MinimizeConfig::new(method);
            cfg.max_iter = 5_000;
            if quantized {
                cfg.quantized = Some(Resolution::default());
            }
            let r = minimize(&f, vec![-1.2, 1.0], &cfg)?;
            println!(
                "{:<7} iters {:>5}  f = {:<12.4e} x = ({:.6}, {:.6})  {:?}",
                format!("{method:?}{}", if quantized { "+q" } else { "" }),
                r.iterations,
                r.f,
                r.x[0],
                r.x[1],
                r.termination
            );
        }
    }
    Ok(())
}
