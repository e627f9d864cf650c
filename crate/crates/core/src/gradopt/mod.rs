//! Gradient descent, Polak–Ribière+ conjugate gradient and BFGS under a weak
//! Wolfe line search, each with a quantized-step twin, plus the stochastic
//! Langevin-type update rules.

mod stochastic;

use serde::{Deserialize, Serialize};

use crate::benchfns::BenchmarkFn;
use crate::error::{domain, Error, Result};
use crate::quantize::quantize_unchecked;

pub use stochastic::{
    enforcement, enforcement_decay, langevin_step, qsgld_step, qsld_adam_step, AdamState,
    EnforcementConfig, LeastSquares, MlOptimizer, MlRun, MlRunConfig, run_ml,
};

pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

impl Objective for BenchmarkFn {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        BenchmarkFn::gradient(self, x)
    }
}

/// `½ xᵀ diag(d) x`, handy for exact checks.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagQuadratic(pub Vec<f64>);

impl Objective for DiagQuadratic {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().zip(&self.0).map(|(v, d)| d * v * v).sum::<f64>()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.0).map(|(v, d)| d * v).collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(x: &[f64], t: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + t * b).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchParams {
    pub c1: f64,
    pub c2: f64,
    pub max_bracket: usize,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self { c1: 1e-4, c2: 0.9, max_bracket: 60 }
    }
}

impl LineSearchParams {
    /// Tighter curvature constant suited to conjugate gradient.
    pub fn for_cg() -> Self {
        Self { c2: 0.1, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return domain(format!("need 0 < c1 < c2 < 1, got c1={} c2={}", self.c1, self.c2));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearch {
    pub step: f64,
    pub f: f64,
    pub g: Vec<f64>,
    pub evals: usize,
    /// Bracketing gave up; `step` is the best Armijo point seen (or the last trial).
    pub fallback: bool,
}

/// Bracketing search for a step meeting
/// `f(x+td) ≤ f(x) + c1·t·g·d` and `∇f(x+td)·d ≥ c2·g·d`.
///
/// Trial steps come from safeguarded quadratic interpolation inside a bracket
/// and secant extrapolation on slopes outside it, so on a quadratic the exact
/// minimizer is found in at most two trials.
pub fn armijo_wolfe<O: Objective + ?Sized>(
    obj: &O,
    x: &[f64],
    fx: f64,
    gx: &[f64],
    dir: &[f64],
    p: &LineSearchParams,
) -> Result<LineSearch> {
    p.validate()?;
    let slope = dot(gx, dir);
    if !(slope < 0.0) {
        return Err(Error::NotDescent { slope });
    }
    let (mut lo, mut f_lo, mut d_lo) = (0.0f64, fx, slope);
    let (mut lo_prev, mut d_prev) = (0.0f64, slope);
    let (mut hi, mut f_hi) = (f64::INFINITY, f64::NAN);
    let mut lo_g: Option<Vec<f64>> = None;
    let mut t = 1.0;
    for k in 1..=p.max_bracket {
        let xt = axpy(x, t, dir);
        let ft = obj.value(&xt);
        if !ft.is_finite() || ft > fx + p.c1 * t * slope {
            hi = t;
            f_hi = ft;
        } else {
            let gt = obj.gradient(&xt);
            let dt = dot(&gt, dir);
            if dt >= p.c2 * slope {
                return Ok(LineSearch { step: t, f: ft, g: gt, evals: k, fallback: false });
            }
            (lo_prev, d_prev) = (lo, d_lo);
            (lo, f_lo, d_lo) = (t, ft, dt);
            lo_g = Some(gt);
        }
        t = if hi.is_finite() {
            let w = hi - lo;
            let curv = f_hi - f_lo - d_lo * w;
            let cand = lo - d_lo * w * w / (2.0 * curv);
            if f_hi.is_finite() && curv > 0.0 && cand.is_finite() {
                cand.clamp(lo + 1e-3 * w, hi - 1e-3 * w)
            } else {
                lo + 0.5 * w
            }
        } else {
            let cand = lo - d_lo * (lo - lo_prev) / (d_lo - d_prev);
            if cand.is_finite() && d_lo > d_prev {
                cand.clamp(1.01 * lo, 10.0 * lo)
            } else {
                2.0 * lo
            }
        };
    }
    let (step, f, g) = match lo_g {
        Some(g) => (lo, f_lo, g),
        None => {
            let xt = axpy(x, t, dir);
            (t, obj.value(&xt), obj.gradient(&xt))
        }
    };
    Ok(LineSearch { step, f, g, evals: p.max_bracket, fallback: true })
}

/// `Q̄p` and learning rate for the quantized update `x + Q̄p⁻¹·floor(Q̄p·η·h + ½)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizedStepConfig {
    pub qp: f64,
    pub qbar: f64,
    pub eta: f64,
}

impl QuantizedStepConfig {
    /// `Q̄p = Qp^½`.
    pub fn new(qp: f64, eta: f64) -> Self {
        Self { qp, qbar: qp.sqrt(), eta }
    }
}

/// The step `η·h` rounded per component to the `1/Q̄p` grid.
pub fn quantized_increment(h: &[f64], cfg: &QuantizedStepConfig) -> Vec<f64> {
    h.iter().map(|v| quantize_unchecked(cfg.eta * v, cfg.qbar)).collect()
}

pub fn quantized_step(x: &[f64], h: &[f64], cfg: &QuantizedStepConfig) -> Vec<f64> {
    x.iter()
        .zip(quantized_increment(h, cfg))
        .map(|(a, b)| a + b)
        .collect()
}

/// `Qp(k) = b^min(start + k, end)`; the step grid is `Qp^−½`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub base: u32,
    pub start_bits: u32,
    pub end_bits: u32,
}

impl Default for Resolution {
    fn default() -> Self {
        Self { base: 2, start_bits: 5, end_bits: 17 }
    }
}

impl Resolution {
    pub fn qp(&self, k: u64) -> f64 {
        let bits = (self.start_bits as u64 + k).min(self.end_bits as u64);
        (self.base as f64).powi(bits as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gd,
    Cg,
    Bfgs,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Gd, Method::Cg, Method::Bfgs];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Gd => "gd",
            Method::Cg => "cg",
            Method::Bfgs => "bfgs",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gd" => Ok(Method::Gd),
            "cg" => Ok(Method::Cg),
            "bfgs" => Ok(Method::Bfgs),
            _ => domain(format!("unknown method `{s}` (gd | cg | bfgs)")),
        }
    }
}

/// Iterate plus the method's memory.
#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    pub x: Vec<f64>,
    pub f: f64,
    pub g: Vec<f64>,
    pub k: u64,
    /// Previous search direction (CG).
    pub dir: Option<Vec<f64>>,
    /// Row-major inverse-Hessian approximation (BFGS).
    pub h_inv: Option<Vec<f64>>,
    pub evals: usize,
}

impl OptState {
    pub fn new<O: Objective + ?Sized>(obj: &O, x0: Vec<f64>) -> Result<Self> {
        let f = obj.value(&x0);
        let g = obj.gradient(&x0);
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { tau: 0 });
        }
        Ok(Self { x: x0, f, g, k: 0, dir: None, h_inv: None, evals: 1 })
    }
}

/// What happened in one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: u64,
    pub step: f64,
    pub dir: Vec<f64>,
    /// `α·d`, the increment the plain method would take.
    pub proposed: Vec<f64>,
    /// The increment actually applied.
    pub taken: Vec<f64>,
    /// Grid used for `taken`, if quantized.
    pub qbar: Option<f64>,
    pub fallback: bool,
    pub f_before: f64,
    pub slope: f64,
    /// Line-search trial values at the accepted step.
    pub f_trial: f64,
    pub slope_trial: f64,
    /// `s·y` seen by the BFGS update and whether the update was applied.
    pub sy: Option<f64>,
    pub h_updated: bool,
    pub restarted: bool,
}

fn direction(method: Method, s: &OptState) -> Vec<f64> {
    match method {
        Method::Gd | Method::Cg => match (&s.dir, method) {
            (Some(d), Method::Cg) => d.clone(),
            _ => s.g.iter().map(|v| -v).collect(),
        },
        Method::Bfgs => {
            let n = s.x.len();
            match &s.h_inv {
                Some(h) => (0..n)
                    .map(|i| -(0..n).map(|j| h[i * n + j] * s.g[j]).sum::<f64>())
                    .collect(),
                None => s.g.iter().map(|v| -v).collect(),
            }
        }
    }
}

const CURVATURE_GUARD: f64 = 1e-10;

/// One iteration of `method`. With `quant`, the line-search step is rounded to
/// the `1/Q̄p` grid before it is applied.
pub fn step<O: Objective + ?Sized>(
    method: Method,
    obj: &O,
    state: &OptState,
    ls: &LineSearchParams,
    quant: Option<f64>,
) -> Result<(OptState, StepRecord)> {
    let n = state.x.len();
    let mut restarted = false;
    let mut dir = direction(method, state);
    if dot(&dir, &state.g) >= 0.0 {
        dir = state.g.iter().map(|v| -v).collect();
        restarted = true;
    }
    let slope = dot(&state.g, &dir);
    let lsr = armijo_wolfe(obj, &state.x, state.f, &state.g, &dir, ls)?;
    let proposed: Vec<f64> = dir.iter().map(|d| lsr.step * d).collect();
    let (taken, x, f, g, extra) = match quant {
        None => {
            let x = axpy(&state.x, 1.0, &proposed);
            (proposed.clone(), x, lsr.f, lsr.g.clone(), 0)
        }
        Some(qbar) => {
            let cfg = QuantizedStepConfig { qp: qbar * qbar, qbar, eta: lsr.step };
            let taken = quantized_increment(&dir, &cfg);
            let x = axpy(&state.x, 1.0, &taken);
            (taken, x.clone(), obj.value(&x), obj.gradient(&x), 1)
        }
    };
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { tau: state.k + 1 });
    }
    let mut next = OptState {
        x,
        f,
        g,
        k: state.k + 1,
        dir: None,
        h_inv: state.h_inv.clone(),
        evals: state.evals + lsr.evals + extra,
    };
    let mut sy_seen = None;
    let mut h_updated = false;
    match method {
        Method::Gd => {}
        Method::Cg => {
            let gg = dot(&state.g, &state.g);
            let beta = if gg > 0.0 {
                (dot(&next.g, &next.g) - dot(&next.g, &state.g)) / gg
            } else {
                0.0
            };
            let beta = beta.max(0.0);
            next.dir = Some(next.g.iter().zip(&dir).map(|(g, d)| -g + beta * d).collect());
        }
        Method::Bfgs => {
            let s = &taken;
            let y: Vec<f64> = next.g.iter().zip(&state.g).map(|(a, b)| a - b).collect();
            let sy = dot(s, &y);
            sy_seen = Some(sy);
            let mut h = state.h_inv.clone().unwrap_or_else(|| {
                let mut h = vec![0.0; n * n];
                // Scale the first approximation by s·y / y·y.
                let yy = dot(&y, &y);
                let scale = if sy > CURVATURE_GUARD && yy > 0.0 { sy / yy } else { 1.0 };
                for i in 0..n {
                    h[i * n + i] = scale;
                }
                h
            });
            if sy > CURVATURE_GUARD {
                let rho = 1.0 / sy;
                let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
                let yhy = dot(&y, &hy);
                // H ← H − ρ(H y sᵀ + s yᵀ H) + (ρ² yᵀHy + ρ) s sᵀ
                for i in 0..n {
                    for j in 0..n {
                        h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                            + (rho * rho * yhy + rho) * s[i] * s[j];
                    }
                }
                h_updated = true;
            }
            next.h_inv = Some(h);
        }
    }
    let xt = axpy(&state.x, lsr.step, &dir);
    let rec = StepRecord {
        k: next.k,
        step: lsr.step,
        slope_trial: dot(&lsr.g, &dir),
        f_trial: if quant.is_none() { lsr.f } else { obj.value(&xt) },
        dir,
        proposed,
        taken,
        qbar: quant,
        fallback: lsr.fallback,
        f_before: state.f,
        slope,
        sy: sy_seen,
        h_updated,
        restarted,
    };
    Ok((next, rec))
}

pub fn step_gd<O: Objective + ?Sized>(obj: &O, s: &OptState, ls: &LineSearchParams) -> Result<OptState> {
    step(Method::Gd, obj, s, ls, None).map(|r| r.0)
}

pub fn step_cg<O: Objective + ?Sized>(obj: &O, s: &OptState, ls: &LineSearchParams) -> Result<OptState> {
    step(Method::Cg, obj, s, ls, None).map(|r| r.0)
}

pub fn step_bfgs<O: Objective + ?Sized>(obj: &O, s: &OptState, ls: &LineSearchParams) -> Result<OptState> {
    step(Method::Bfgs, obj, s, ls, None).map(|r| r.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizeConfig {
    pub method: Method,
    pub max_iter: u64,
    pub gtol: f64,
    pub line_search: LineSearchParams,
    /// Quantize each step on the grid `Qp(k)^−½`.
    pub quantized: Option<Resolution>,
    pub keep_steps: bool,
}

impl MinimizeConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            max_iter: 10_000,
            gtol: 1e-8,
            line_search: match method {
                Method::Cg => LineSearchParams::for_cg(),
                _ => LineSearchParams::default(),
            },
            quantized: None,
            keep_steps: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Gradient,
    MaxIter,
    /// The quantized step rounded to zero at the finest resolution.
    Stalled,
    /// Line search could not find a descent step.
    LineSearch,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: u64,
    pub evals: usize,
    pub termination: Termination,
    pub steps: Vec<StepRecord>,
}

pub fn minimize<O: Objective + ?Sized>(obj: &O, x0: Vec<f64>, cfg: &MinimizeConfig) -> Result<MinimizeResult> {
    if x0.len() != obj.dim() {
        return domain(format!("start point has {} coordinates, objective has {}", x0.len(), obj.dim()));
    }
    let mut s = OptState::new(obj, x0)?;
    let mut steps = Vec::new();
    let mut termination = Termination::MaxIter;
    let mut frozen_run = 0;
    while s.k < cfg.max_iter {
        if norm(&s.g) <= cfg.gtol {
            termination = Termination::Gradient;
            break;
        }
        let quant = cfg.quantized.map(|r| r.qp(s.k).sqrt());
        let (next, rec) = match step(cfg.method, obj, &s, &cfg.line_search, quant) {
            Ok(r) => r,
            Err(Error::NotDescent { .. }) => {
                termination = Termination::LineSearch;
                break;
            }
            Err(e) => return Err(e),
        };
        let frozen = rec.taken.iter().all(|v| *v == 0.0);
        let at_finest = cfg.quantized.is_some_and(|r| r.qp(s.k) >= r.qp(u64::from(r.end_bits)));
        frozen_run = if frozen && at_finest { frozen_run + 1 } else { 0 };
        if cfg.keep_steps {
            steps.push(rec);
        }
        s = next;
        // A second zero step in a row repeats the same direction from then on.
        if frozen_run >= 2 {
            termination = Termination::Stalled;
            break;
        }
    }
    Ok(MinimizeResult {
        iterations: s.k,
        evals: s.evals,
        x: s.x,
        f: s.f,
        termination,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchfns::by_name;

    #[test]
    fn unit_step_on_quadratic() {
        let q = DiagQuadratic(vec![1.0, 1.0]);
        let x = [1.0, 0.0];
        let r = armijo_wolfe(&q, &x, q.value(&x), &q.gradient(&x), &[-1.0, 0.0], &Default::default()).unwrap();
        assert_eq!(r.step, 1.0);
        assert!(!r.fallback);
        assert!(armijo_wolfe(&q, &x, 0.5, &[1.0, 0.0], &[1.0, 0.0], &Default::default()).is_err());
    }

    #[test]
    fn gd_exact_on_isotropic_quadratic() {
        let q = DiagQuadratic(vec![1.0; 3]);
        let s = OptState::new(&q, vec![1.0, -2.0, 0.5]).unwrap();
        let s = step_gd(&q, &s, &LineSearchParams::default()).unwrap();
        assert!(s.f.abs() < 1e-30);
    }

    #[test]
    fn bfgs_rosenbrock() {
        let f = by_name("rosenbrock2d", None).unwrap();
        let mut cfg = MinimizeConfig::new(Method::Bfgs);
        cfg.max_iter = 100;
        let r = minimize(&f, vec![-1.2, 1.0], &cfg).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?} after {}", r.x, r.iterations);
    }

    #[test]
    fn quantized_step_band() {
        let cfg = QuantizedStepConfig::new(2f64.powi(10), 0.3);
        let x = [0.1, -4.0, 7.25];
        let h = [1.3, -0.01, 0.0];
        let y = quantized_step(&x, &h, &cfg);
        for i in 0..3 {
            assert!((y[i] - (x[i] + cfg.eta * h[i])).abs() <= 0.5 / cfg.qbar + 1e-15);
        }
        assert_eq!(quantized_step(&x, &[0.0; 3], &cfg), x.to_vec());
    }

    #[test]
    fn resolution_schedule() {
        let r = Resolution::default();
        assert_eq!(r.qp(0), 32.0);
        assert_eq!(r.qp(12), 2f64.powi(17));
        assert_eq!(r.qp(100), 2f64.powi(17));
    }
}
