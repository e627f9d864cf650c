//! Temperature, transverse-field and ML resolution schedules side by side.
use qtzopt::schedule::{AdiabaticSchedule, CoolingSchedule, LogLogPowerSchedule};

fn main() -> qtzopt::Result<()> {
    let cool = CoolingSchedule::new(100.0, 0.999)?;
    let field = AdiabaticSchedule::new(10_000)?;
    let ml = LogLogPowerSchedule::default();
    println!("{:>8} {:>12} {:>8} {:>6} {:>14}", "tau", "T", "beta", "power", "Qp(ML)");
    for tau in [0u64, 10, 100, 1_000, 5_000, 10_000, 100_000, 1_000_000] {
        println!(
            "{tau:>8} {:>12.6} {:>8.4} {:>6} {:>14}",
            cool.temperature(tau),
            field.beta(tau.min(10_000))?,
            ml.power(tau),
            ml.qp(tau)
        );
    }
    Ok(())
}
