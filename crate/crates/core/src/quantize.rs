//! Objective quantization `f^Q = floor(Qp·f + ½) / Qp` and the resolution
//! state `Qp = γ·b^h̄` that QTZ refines one power of `b` at a time.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Beyond this magnitude every f64 is already an integer, so rounding is a no-op.
const EXACT_INT: f64 = 9_007_199_254_740_992.0;

/// Round `f` to the nearest multiple of `1/qp`, halves rounding up.
///
/// Floor is taken toward −∞, so negative inputs round half-up as well:
/// `quantize(-0.3, 4.0) == -0.25`.
pub fn quantize(f: f64, qp: f64) -> Result<f64> {
    check(f, qp)?;
    Ok(quantize_unchecked(f, qp))
}

/// [`quantize`] without argument validation. `qp` must be positive and `f` finite.
#[inline]
pub fn quantize_unchecked(f: f64, qp: f64) -> f64 {
    let y = qp * f;
    if !y.is_finite() || y.abs() >= EXACT_INT {
        return f;
    }
    let mut n = (y + 0.5).floor();
    // y + 0.5 can round across an integer; the fused residual sees the true product.
    let r = qp.mul_add(f, -n);
    if r < -0.5 {
        n -= 1.0;
    } else if r >= 0.5 {
        n += 1.0;
    }
    let r = qp.mul_add(f, -n);
    let mut q = n / qp;
    // The division rounds; near a tie that can land a hair outside the band.
    for _ in 0..4 {
        let e = qp.mul_add(q, -n) - r;
        if e > 0.5 {
            q = q.next_down();
        } else if e < -0.5 {
            q = q.next_up();
        } else {
            break;
        }
    }
    q
}

fn check(f: f64, qp: f64) -> Result<()> {
    if !f.is_finite() {
        return domain(format!("quantize: non-finite input {f}"));
    }
    if !(qp > 0.0) || !qp.is_finite() {
        return domain(format!("quantize: qp must be positive and finite, got {qp}"));
    }
    Ok(())
}

/// The rounding term `ε^q·Qp⁻¹`, always in `[−½/qp, ½/qp)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizationError {
    pub value: f64,
}

pub fn quantization_error(f: f64, qp: f64) -> Result<QuantizationError> {
    Ok(QuantizationError {
        value: quantize(f, qp)? - f,
    })
}

/// `floor(log_b(x))` for `x ≥ 1`, corrected against exact powers.
pub fn floor_log(x: f64, base: u32) -> i32 {
    let b = base as f64;
    let mut k = (x.ln() / b.ln()).floor() as i32;
    while b.powi(k) > x {
        k -= 1;
    }
    while b.powi(k + 1) <= x {
        k += 1;
    }
    k
}

/// Starting scale `γ = b^(−floor(log_b(f0 + 1)))`.
pub fn initial_gamma(f0: f64, base: u32) -> Result<f64> {
    Ok((base as f64).powi(initial_gamma_exponent(f0, base)?))
}

/// Exponent `e` with `γ = b^e`.
pub fn initial_gamma_exponent(f0: f64, base: u32) -> Result<i32> {
    if base < 2 {
        return domain(format!("base must be at least 2, got {base}"));
    }
    if !(f0 >= 0.0) || !f0.is_finite() {
        return domain(format!("initial objective must be finite and nonnegative, got {f0}"));
    }
    Ok(-floor_log(f0 + 1.0, base))
}

/// Resolution triple `(γ, b, h̄)`. `qp` is recomputed from the triple on every
/// call rather than accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerState {
    pub gamma: f64,
    pub base: u32,
    pub power: u32,
}

impl QuantizerState {
    pub fn new(gamma: f64, base: u32) -> Result<Self> {
        if base < 2 {
            return domain(format!("base must be at least 2, got {base}"));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return domain(format!("gamma must be positive, got {gamma}"));
        }
        Ok(Self { gamma, base, power: 0 })
    }

    /// State whose scale is `initial_gamma(f0, base)` shifted `extra_bits` digits finer.
    pub fn for_initial(f0: f64, base: u32, extra_bits: i32) -> Result<Self> {
        let e = initial_gamma_exponent(f0, base)? + extra_bits;
        Self::new((base as f64).powi(e), base)
    }

    pub fn qp(&self) -> f64 {
        self.gamma * (self.base as f64).powi(self.power as i32)
    }

    pub fn step(&self) -> f64 {
        1.0 / self.qp()
    }

    pub fn quantize(&self, f: f64) -> f64 {
        quantize_unchecked(f, self.qp())
    }

    /// One power of `b` finer. Fails once `qp` leaves the finite range.
    pub fn advance(&self) -> Result<Self> {
        let next = Self {
            power: self.power.checked_add(1).ok_or(Error::Saturated {
                base: self.base,
                power: self.power,
            })?,
            ..*self
        };
        let qp = next.qp();
        if !qp.is_finite() || !(1.0 / qp > 0.0) || qp > f64::MAX / self.base as f64 {
            return Err(Error::Saturated {
                base: self.base,
                power: self.power,
            });
        }
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        assert_eq!(quantize(1.3, 1.0).unwrap(), 1.0);
        assert_eq!(quantize(0.75, 2.0).unwrap(), 1.0);
        assert_eq!(quantize(-0.3, 4.0).unwrap(), -0.25);
        assert!((quantization_error(1.3, 1.0).unwrap().value + 0.3).abs() < 1e-15);
        assert_eq!(quantization_error(2.0, 8.0).unwrap().value, 0.0);
        assert!((quantization_error(0.6, 2.0).unwrap().value + 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(quantize(f64::NAN, 1.0).is_err());
        assert!(quantize(1.0, 0.0).is_err());
        assert!(quantize(1.0, -2.0).is_err());
        assert!(initial_gamma(-1.0, 2).is_err());
        assert!(initial_gamma(1.0, 1).is_err());
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(initial_gamma(2159.27, 2).unwrap(), 2f64.powi(-11));
        assert_eq!(initial_gamma(0.0, 2).unwrap(), 1.0);
        assert_eq!(initial_gamma(7.0, 2).unwrap(), 2f64.powi(-3));
        assert_eq!(initial_gamma(99.0, 10).unwrap(), 0.01);
        assert_eq!(initial_gamma(98.0, 10).unwrap(), 0.1);
    }

    #[test]
    fn advance_multiplies_by_base() {
        let s = QuantizerState::new(1.0, 2).unwrap();
        let s1 = s.advance().unwrap();
        assert_eq!((s1.power, s1.qp()), (1, 2.0));
        let mut s = QuantizerState::new(2f64.powi(-11), 2).unwrap();
        for _ in 0..3 {
            s = s.advance().unwrap();
        }
        assert_eq!(s.qp(), 2f64.powi(-8));
    }

    #[test]
    fn advance_saturates() {
        let mut s = QuantizerState::new(1.0, 2).unwrap();
        let mut n = 0;
        while let Ok(next) = s.advance() {
            s = next;
            n += 1;
            assert!(n < 2000);
        }
        assert!(s.qp().is_finite());
        assert!(matches!(s.advance(), Err(Error::Saturated { .. })));
    }

    #[test]
    fn huge_products_pass_through() {
        assert_eq!(quantize(3000.0, 1e300).unwrap(), 3000.0);
        assert_eq!(quantize(1e20, 1.0).unwrap(), 1e20);
    }
}
