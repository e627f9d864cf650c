//! Escape the washboard's local minima with each metaheuristic.
use qtzopt::benchfns::{washboard_fn, washboard_min};
use qtzopt::metaheur::{run, AdiabaticForm, AlgoParams, Algorithm, ContinuousProblem, Proposal, SearchConfig};

fn main() -> qtzopt::Result<()> {
    let budget = 100_000;
    let mut params = AlgoParams::new(budget);
    params.qia.form = AdiabaticForm::Linear;
    params.qia.t_final = 1_000;
    let cfg = SearchConfig { max_iter: budget, record_trace: false, ..Default::default() };

    for alpha in [10.0, 3.0] {
        let (x_star, f_star) = washboard_min(alpha);
        println!("alpha = {alpha}: global minimum {f_star:.6} at x = {x_star:.6}");
        let p = ContinuousProblem::new(washboard_fn(alpha), Proposal::Global).with_target(Some(f_star));
        for algo in Algorithm::ALL {
            let runs: Vec<_> = (0..20).map(|s| run(algo, &p, &params, &cfg, s)).collect::<Result<_, _>>()?;
            let hits = runs.iter().filter(|r| r.first_hit.is_some()).count();
            let mean = runs.iter().map(|r| r.best_f).sum::<f64>() / runs.len() as f64;
            println!("  {:>4}: mean best {mean:.6}, reached target {hits}/20", algo.name());
        }
    }
    Ok(())
}
