//! Rounding a value onto the grid `1/Qp` and refining the grid.
use qtzopt::quantize::{quantization_error, quantize, QuantizerState};

fn main() -> qtzopt::Result<()> {
    let f = std::f64::consts::PI * 100.0;
    for qp in [0.01, 1.0, 8.0, 1024.0] {
        let e = quantization_error(f, qp)?;
        println!("Qp = {qp:>7}: fq = {:<20} error = {e:?}", quantize(f, qp)?);
    }

    let mut s = QuantizerState::for_initial(f, 2, 0)?;
    println!("\nrefining from f(x0) = {f:.6}");
    for _ in 0..8 {
        println!("  Qp = {:<10} step = {:<10} fq = {}", s.qp(), s.step(), s.quantize(f));
        s = s.advance()?;
    }
    Ok(())
}
