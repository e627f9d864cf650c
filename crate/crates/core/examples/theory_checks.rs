//! Numerical checks of the residual, supremum, tunneling and two-level identities.
use qtzopt::harness::theory_diagnostics;
use qtzopt::theory::{adiabatic_split, sup_recursion, tunneling_factor, two_level_eigs, TunnelingParams};

fn main() -> qtzopt::Result<()> {
    let s = adiabatic_split(123.456, 2, 10)?;
    println!("split of 123.456 at t = 10: {s:?}");

    let seq = sup_recursion(1.0, 0.5, 2, 8)?;
    println!("sup recursion: {seq:?}");

    let p = TunnelingParams { hbar: 1.0, mass: 1.0, v0: 2.0, e: 1.0, width: 1.0 };
    println!("tunneling factor: {:.6}", tunneling_factor(&p)?);
    println!("two-level eigenvalues of (0, 1, 0.5): {:?}", two_level_eigs(0.0, 1.0, 0.5));

    println!();
    for d in theory_diagnostics(0)? {
        println!("{:<48} {:>14.8e} {}", d.name, d.abs_error, if d.pass { "ok" } else { "FAIL" });
    }
    Ok(())
}
