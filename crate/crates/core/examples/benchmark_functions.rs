//! Evaluate every benchmark function at its centre and known optimum.
use qtzopt::benchfns::{by_name, NAMES};

fn main() -> qtzopt::Result<()> {
    println!("{:<16} {:>4} {:>16} {:>16} {:>16}", "function", "dim", "f(centre)", "f(x*)", "target");
    for name in NAMES {
        let f = by_name(name, None)?;
        let at_opt = f.optimum_point.as_ref().map_or(f64::NAN, |x| f.eval(x));
        println!(
            "{:<16} {:>4} {:>16.6} {:>16.6} {:>16.6}",
            f.name,
            f.dim,
            f.eval(&f.center()),
            at_opt,
            f.target()?
        );
    }
    Ok(())
}
