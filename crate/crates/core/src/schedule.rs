//! Control laws indexed by iteration: exponential cooling, the adiabatic
//! mixing weight and the log-log power schedule used by the ML optimizers.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::quantize::floor_log;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoolingSchedule {
    pub t0: f64,
    pub alpha: f64,
}

impl Default for CoolingSchedule {
    fn default() -> Self {
        Self { t0: 1000.0, alpha: 0.9995 }
    }
}

impl CoolingSchedule {
    pub fn new(t0: f64, alpha: f64) -> Result<Self> {
        if !(t0 > 0.0) || !(alpha > 0.0 && alpha < 1.0) {
            return domain(format!("cooling needs t0 > 0 and alpha in (0,1), got {t0}, {alpha}"));
        }
        Ok(Self { t0, alpha })
    }

    pub fn temperature(&self, tau: u64) -> f64 {
        temperature(self, tau)
    }
}

/// `T0·α^τ`, evaluated in closed form so replays never drift.
pub fn temperature(s: &CoolingSchedule, tau: u64) -> f64 {
    s.t0 * (tau as f64 * s.alpha.ln()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticSchedule {
    pub t_final: u64,
}

impl AdiabaticSchedule {
    pub fn new(t_final: u64) -> Result<Self> {
        if t_final == 0 {
            return domain("t_final must be positive");
        }
        Ok(Self { t_final })
    }

    pub fn beta(&self, tau: u64) -> Result<f64> {
        beta(self, tau)
    }
}

/// `1 − sqrt(τ/T_f)`.
pub fn beta(s: &AdiabaticSchedule, tau: u64) -> Result<f64> {
    if tau > s.t_final {
        return domain(format!("tau {tau} beyond t_final {}", s.t_final));
    }
    Ok(1.0 - (tau as f64 / s.t_final as f64).sqrt())
}

/// Which logarithm sits inside `floor(log_b(log(τ+2)))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum InnerLog {
    #[default]
    Natural,
    Base,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogPowerSchedule {
    pub eta: f64,
    pub base: u32,
    pub batches_per_epoch: u64,
    pub inner_log: InnerLog,
}

impl Default for LogLogPowerSchedule {
    fn default() -> Self {
        Self {
            eta: 2f64.powi(19),
            base: 2,
            batches_per_epoch: 1,
            inner_log: InnerLog::Natural,
        }
    }
}

impl LogLogPowerSchedule {
    /// Exponent `p̄(τ)`.
    pub fn power(&self, tau: u64) -> i32 {
        let x = (tau + 2) as f64;
        let inner = match self.inner_log {
            InnerLog::Natural => x.ln(),
            InnerLog::Base => x.ln() / (self.base as f64).ln(),
        };
        // floor(log_b(y)) for y possibly below 1: shift into [1, ∞) first.
        let b = self.base as f64;
        let mut shift = 0;
        let mut y = inner;
        while y < 1.0 {
            y *= b;
            shift += 1;
        }
        floor_log(y, self.base) - shift
    }

    pub fn qp(&self, tau: u64) -> f64 {
        ml_qp(self, tau)
    }
}

/// `η·b^p̄(τ)`.
pub fn ml_qp(s: &LogLogPowerSchedule, tau: u64) -> f64 {
    s.eta * (s.base as f64).powi(s.power(tau))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cooling_examples() {
        let s = CoolingSchedule::default();
        assert_eq!(s.temperature(0), 1000.0);
        assert!((s.temperature(1) - 999.5).abs() < 1e-10);
    }

    #[test]
    fn cooling_strictly_decreasing() {
        let s = CoolingSchedule::default();
        let mut prev = s.temperature(0);
        for tau in 1..1_000_000u64 {
            let t = s.temperature(tau);
            assert!(t > 0.0);
            assert!(t < prev, "tau {tau}");
            prev = t;
        }
    }

    #[test]
    fn beta_endpoints() {
        let s = AdiabaticSchedule::new(10_000).unwrap();
        assert_eq!(s.beta(0).unwrap(), 1.0);
        assert_eq!(s.beta(10_000).unwrap(), 0.0);
        assert_eq!(s.beta(2500).unwrap(), 0.5);
        assert!(s.beta(10_001).is_err());
        let mut prev = 1.0;
        for tau in 0..=10_000 {
            let b = s.beta(tau).unwrap();
            assert!(b <= prev);
            prev = b;
        }
    }

    #[test]
    fn ml_examples() {
        let s = LogLogPowerSchedule { eta: 1.0, ..Default::default() };
        assert_eq!(s.qp(0), 0.5);
        assert_eq!(s.qp(6), 2.0);
        assert_eq!(s.qp(5), 1.0);
    }

    #[test]
    fn ml_changes_by_base_factors() {
        let s = LogLogPowerSchedule { eta: 3.0, base: 3, ..Default::default() };
        let mut prev = s.qp(0);
        for tau in 1..1_000_000 {
            let q = s.qp(tau);
            assert!(q == prev || q == prev * 3.0, "tau {tau}");
            prev = q;
        }
    }
}
