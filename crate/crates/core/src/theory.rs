//! Small numeric checks of the identities behind the quantized search.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// `f` truncated to `t` fractional digits in base `b`, the adiabatic blend
/// `(1 − b^−t)·f + b^−t·⌊f⌋`, and their difference.
///
/// The blend is not an identity: it differs from the truncation by less than
/// `b^−t` (see [`adiabatic_residual`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticSplit {
    pub truncated: f64,
    pub blend: f64,
    pub residual: f64,
}

/// Exact `(⌊f·b^t⌋ as f64 / b^t, frac(f·b^t))` when the product fits in u128.
fn truncate_exact(f: f64, base: u32, t: u32) -> Option<(f64, f64)> {
    let bt = (base as u128).checked_pow(t)?;
    if f == 0.0 {
        return Some((0.0, 0.0));
    }
    let bits = f.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let (mant, e) = if exp == 0 {
        (bits & ((1 << 52) - 1), -1074)
    } else {
        ((bits & ((1 << 52) - 1)) | (1 << 52), exp - 1075)
    };
    if e >= 0 {
        return Some((f, 0.0));
    }
    let shift = (-e) as u32;
    if shift >= 128 {
        return None;
    }
    let prod = (mant as u128).checked_mul(bt)?;
    let q = prod >> shift;
    let r = prod & ((1u128 << shift) - 1);
    let frac = r as f64 / 2f64.powi(shift as i32);
    Some((q as f64 / bt as f64, frac))
}

pub fn adiabatic_split(f: f64, base: u32, t: u32) -> Result<AdiabaticSplit> {
    if !(f >= 0.0) || !f.is_finite() {
        return domain(format!("adiabatic split needs finite f ≥ 0, got {f}"));
    }
    if base < 2 || t == 0 {
        return domain("adiabatic split needs base ≥ 2 and t ≥ 1");
    }
    let w = (base as f64).powi(-(t as i32));
    let fb = f.floor();
    let (truncated, frac) = match truncate_exact(f, base, t) {
        Some(v) => v,
        None => {
            let s = f / w;
            ((s.floor()) * w, s - s.floor())
        }
    };
    let blend = (1.0 - w) * f + w * fb;
    // f_t − blend = w·((f − ⌊f⌋) − frac(f·b^t)), both terms in [0, 1).
    let residual = w * ((f - fb) - frac);
    Ok(AdiabaticSplit { truncated, blend, residual })
}

/// Signed difference between the base-`b` truncation of `f` and the adiabatic
/// blend. `|residual| < b^−t`; zero for integer `f`.
pub fn adiabatic_residual(f: f64, base: u32, t: u32) -> Result<f64> {
    adiabatic_split(f, base, t).map(|s| s.residual)
}

/// Limit of the equality-case supremum, `fq + ½·q·(1/b)·(b−2)/(b−1)` with
/// `q = Qp⁻¹(t)`.
pub fn sup_limit(fq: f64, qp_inv: f64, base: u32) -> Result<f64> {
    if base < 2 {
        return domain(format!("sup_limit needs base ≥ 2, got {base}"));
    }
    let b = base as f64;
    Ok(fq + 0.5 * qp_inv / b * ((b - 2.0) / (b - 1.0)))
}

/// Partial suprema: `s₁ = fq + ½q/b`, `s_k = s_{k−1} − ½q·b^−k`.
pub fn sup_recursion(fq: f64, qp_inv: f64, base: u32, steps: usize) -> Result<Vec<f64>> {
    if base < 2 {
        return domain(format!("sup_recursion needs base ≥ 2, got {base}"));
    }
    let b = base as f64;
    let mut out = Vec::with_capacity(steps);
    let mut q = qp_inv / b;
    let mut s = fq + 0.5 * q;
    out.push(s);
    for _ in 1..steps {
        q /= b;
        s -= 0.5 * q;
        out.push(s);
    }
    Ok(out)
}

/// Closed form together with the 60-step recursion; errors if they disagree by
/// more than 1e−12 relative to `max(1, |fq|)`.
pub fn sup_limit_checked(fq: f64, qp_inv: f64, base: u32) -> Result<(f64, f64)> {
    let closed = sup_limit(fq, qp_inv, base)?;
    let rec = *sup_recursion(fq, qp_inv, base, 60)?.last().unwrap();
    if (closed - rec).abs() > 1e-12 * fq.abs().max(1.0) {
        return domain(format!("sup recursion {rec} does not reach closed form {closed}"));
    }
    Ok((closed, rec))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TunnelingForm {
    /// `exp(−(2/ħ)·√(2m(V₀−E))·D)`.
    #[default]
    Wkb,
    /// `D·exp(−(2/ħ)·√(2m(V₀−E)))`, not bounded by 1.
    WidthOutside,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunnelingParams {
    pub hbar: f64,
    pub mass: f64,
    pub v0: f64,
    pub e: f64,
    pub width: f64,
}

pub fn tunneling_factor(p: &TunnelingParams) -> Result<f64> {
    tunneling_factor_with(p, TunnelingForm::Wkb)
}

pub fn tunneling_factor_with(p: &TunnelingParams, form: TunnelingForm) -> Result<f64> {
    if p.v0 < p.e {
        return domain(format!("no barrier: v0 = {} < e = {}", p.v0, p.e));
    }
    if !(p.hbar > 0.0 && p.mass > 0.0 && p.width > 0.0) {
        return domain("tunneling needs ħ, m and D positive");
    }
    let k = 2.0 / p.hbar * (2.0 * p.mass * (p.v0 - p.e)).sqrt();
    Ok(match form {
        TunnelingForm::Wkb => (-k * p.width).exp(),
        TunnelingForm::WidthOutside => p.width * (-k).exp(),
    })
}

/// Eigenvalues `½[(E₁+E₂) ∓ √((E₁−E₂)² + Δ²)]` of `[[E₁, Δ/2], [Δ/2, E₂]]`,
/// lower first.
pub fn two_level_eigs(e1: f64, e2: f64, delta: f64) -> (f64, f64) {
    let m = 0.5 * (e1 + e2);
    let r = 0.5 * (e1 - e2).hypot(delta);
    (m - r, m + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_hand_case() {
        let s = adiabatic_split(5.8125, 2, 2).unwrap();
        assert_eq!(s.truncated, 5.75);
        assert_eq!(s.blend, 5.609375);
        assert_eq!(s.residual, 0.140625);
        assert_eq!(adiabatic_residual(7.0, 10, 5).unwrap(), 0.0);
        assert!(adiabatic_residual(-1.0, 2, 1).is_err());
    }

    #[test]
    fn sup_cases() {
        assert_eq!(sup_limit(3.25, 0.125, 2).unwrap(), 3.25);
        assert!((sup_limit(1.0, 0.3, 3).unwrap() - 1.025).abs() < 1e-15);
        let (c, r) = sup_limit_checked(1.0, 0.3, 3).unwrap();
        assert!((c - r).abs() < 1e-12);
        let seq = sup_recursion(1.0, 0.3, 3, 60).unwrap();
        assert!(seq.windows(2).all(|w| w[1] <= w[0]));
        assert!(sup_limit(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn tunneling_cases() {
        let mut p = TunnelingParams { hbar: 1.0, mass: 0.5, v0: 1.0, e: 1.0, width: 1.0 };
        assert_eq!(tunneling_factor(&p).unwrap(), 1.0);
        p.v0 = 2.0;
        assert!((tunneling_factor(&p).unwrap() - (-2f64).exp()).abs() < 1e-15);
        p.e = 3.0;
        assert!(tunneling_factor(&p).is_err());
    }

    #[test]
    fn two_level_cases() {
        assert_eq!(two_level_eigs(0.0, 0.0, 2.0), (-1.0, 1.0));
        assert_eq!(two_level_eigs(1.0, 3.0, 0.0), (1.0, 3.0));
    }
}
