//! Continuous test functions with their domains, gradients and stated optima.
//!
//! Formulas follow the benchmark table literally. Two of them differ from the
//! usual textbook forms:
//! - EggHolder reads `977 − (y+47)·sin√|y + 0.5y + 47| − x·sin√|x − (y+47)|`
//!   (the common form has `x/2 + y + 47` and no offset).
//! - "Whitley" is `1 + Σx²/4000 − Π cos(x_i/√i)`, which is Griewank's function.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Ackley,
    Whitley,
    Rosenbrock,
    EggHolder,
    XinSheYang4,
    RosenbrockMod,
    Salomon,
    DropWave,
    Powell,
    SchafferN2,
    Washboard { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkFn {
    pub name: String,
    pub kind: Kind,
    pub dim: usize,
    pub domain: Vec<(f64, f64)>,
    /// Point listed alongside the domain, if any.
    pub optimum_point: Option<Vec<f64>>,
    pub optimum_value: Option<f64>,
}

pub const NAMES: &[&str] = &[
    "ackley",
    "whitley",
    "rosenbrock2d",
    "rosenbrock100d",
    "eggholder",
    "xin_she_yang4",
    "rosenbrock_mod",
    "salomon",
    "drop_wave",
    "powell4",
    "schaffer2",
    "washboard",
];

impl fmt::Display for BenchmarkFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (d={})", self.name, self.dim)
    }
}

impl FromStr for BenchmarkFn {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        by_name(s, None)
    }
}

fn cube(d: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    vec![(lo, hi); d]
}

/// Registry lookup. `dim` overrides the default dimension for functions that
/// are defined for any `d`.
pub fn by_name(name: &str, dim: Option<usize>) -> Result<BenchmarkFn> {
    let n = name.to_ascii_lowercase().replace('-', "_");
    let any = |default: usize| dim.unwrap_or(default);
    let fixed = |d: usize| -> Result<usize> {
        match dim {
            Some(x) if x != d => domain(format!("{name} is only defined for d={d}")),
            _ => Ok(d),
        }
    };
    let (kind, d, dom, point, value) = match n.as_str() {
        "ackley" => {
            let d = any(2);
            (Kind::Ackley, d, cube(d, -32.0, 32.0), Some(vec![0.0; d]), Some(0.0))
        }
        "whitley" | "griewank" => {
            let d = any(2);
            (Kind::Whitley, d, cube(d, -512.0, 512.0), Some(vec![0.0; d]), Some(0.0))
        }
        "rosenbrock" | "rosenbrock2d" => {
            let d = any(2);
            (Kind::Rosenbrock, d, cube(d, -5.0, 10.0), Some(vec![1.0; d]), Some(0.0))
        }
        "rosenbrock100d" => {
            let d = fixed(100)?;
            (Kind::Rosenbrock, d, cube(d, -5.0, 10.0), Some(vec![1.0; d]), Some(0.0))
        }
        "eggholder" => (
            Kind::EggHolder,
            fixed(2)?,
            vec![(400.0, 600.0), (300.0, 500.0)],
            Some(vec![522.16, 413.31]),
            None,
        ),
        "xin_she_yang4" | "xinsheyang4" => {
            let d = any(4);
            (Kind::XinSheYang4, d, cube(d, -5.0, 5.0), Some(vec![0.0; d]), Some(1.0))
        }
        "rosenbrock_mod" | "rosenbrock_modification" => (
            Kind::RosenbrockMod,
            fixed(2)?,
            cube(2, -1.3, 0.6),
            Some(vec![-0.91, -0.95]),
            None,
        ),
        "salomon" => {
            let d = any(2);
            (Kind::Salomon, d, cube(d, -1.0, 1.0), Some(vec![0.0; d]), Some(0.0))
        }
        "drop_wave" | "dropwave" => (
            Kind::DropWave,
            fixed(2)?,
            cube(2, -1.0, 1.0),
            Some(vec![0.0, 0.0]),
            Some(0.0),
        ),
        "powell" | "powell4" | "powell_d4" => {
            let d = any(4);
            (Kind::Powell, d, cube(d, -1.0, 1.0), Some(vec![0.0; d]), Some(0.0))
        }
        "schaffer2" | "schaffer_n2" => (
            Kind::SchafferN2,
            fixed(2)?,
            cube(2, -4.0, 4.0),
            Some(vec![0.0, 1.25]),
            None,
        ),
        "washboard" => return Ok(washboard_fn(10.0)),
        _ => {
            return domain(format!(
                "unknown function `{name}`; known: {}",
                NAMES.join(", ")
            ))
        }
    };
    if d == 0 {
        return domain("dimension must be positive");
    }
    Ok(BenchmarkFn {
        name: n,
        kind,
        dim: d,
        domain: dom,
        optimum_point: point,
        optimum_value: value,
    })
}

/// One-dimensional washboard on `[−10, 10]`.
pub fn washboard_fn(alpha: f64) -> BenchmarkFn {
    BenchmarkFn {
        name: "washboard".into(),
        kind: Kind::Washboard { alpha },
        dim: 1,
        domain: vec![(-10.0, 10.0)],
        optimum_point: None,
        optimum_value: None,
    }
}

/// `0.125x² + 2 sin(αx) + 2`.
pub fn washboard(alpha: f64, x: f64) -> f64 {
    0.125 * x * x + 2.0 * (alpha * x).sin() + 2.0
}

fn washboard_d(alpha: f64, x: f64) -> f64 {
    0.25 * x + 2.0 * alpha * (alpha * x).cos()
}

/// Global minimizer over `[−20, 20]`: grid at step 1e−4, then bisection on `f′`
/// around the best grid point.
pub fn washboard_min(alpha: f64) -> (f64, f64) {
    let (lo, hi, h) = (-20.0f64, 20.0f64, 1e-4f64);
    let n = ((hi - lo) / h).round() as usize;
    let mut best = (lo, washboard(alpha, lo));
    for k in 1..=n {
        let x = lo + k as f64 * h;
        let f = washboard(alpha, x);
        if f < best.1 {
            best = (x, f);
        }
    }
    let (mut a, mut b) = ((best.0 - h).max(lo), (best.0 + h).min(hi));
    let (da, db) = (washboard_d(alpha, a), washboard_d(alpha, b));
    if da < 0.0 && db > 0.0 {
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if washboard_d(alpha, m) < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let x = 0.5 * (a + b);
        let f = washboard(alpha, x);
        if f <= best.1 {
            return (x, f);
        }
    }
    best
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl BenchmarkFn {
    pub fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == self.dim
            && x.iter().zip(&self.domain).all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn center(&self) -> Vec<f64> {
        self.domain.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return domain(format!("{}: expected {} coordinates, got {}", self.name, self.dim, x.len()));
        }
        Ok(self.eval(x))
    }

    /// Evaluation without the dimension check.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let d = x.len() as f64;
        match self.kind {
            Kind::Ackley => {
                let (a, b, c) = (20.0, 0.2, 2.0 * PI);
                let s2: f64 = x.iter().map(|v| v * v).sum();
                let sc: f64 = x.iter().map(|v| (c * v).cos()).sum();
                -a * (-b * (s2 / d).sqrt()).exp() - (sc / d).exp() + a + E
            }
            Kind::Whitley => {
                let s: f64 = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
                let p: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                    .product();
                1.0 + s - p
            }
            Kind::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum(),
            Kind::EggHolder => {
                let (px, py) = (x[0], x[1]);
                977.0
                    - (py + 47.0) * (py + 0.5 * py + 47.0).abs().sqrt().sin()
                    - px * (px - (py + 47.0)).abs().sqrt().sin()
            }
            Kind::XinSheYang4 => {
                let s: f64 = x.iter().map(|v| v.sin().powi(2)).sum();
                let e = (-x.iter().map(|v| v * v).sum::<f64>()).exp();
                let g = (-x.iter().map(|v| v.abs().sqrt().sin().powi(2)).sum::<f64>()).exp();
                2.0 + (s - e) * g
            }
            Kind::RosenbrockMod => {
                let (a, b) = (x[0], x[1]);
                74.0 + 100.0 * (b - a * a).powi(2) + (1.0 - a).powi(2)
                    - 400.0 * (-((a + 1.0).powi(2) + (b + 1.0).powi(2)) / 0.1).exp()
            }
            Kind::Salomon => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                1.0 - (2.0 * PI * r).cos() + 0.1 * r
            }
            Kind::DropWave => {
                let s = x[0] * x[0] + x[1] * x[1];
                1.0 - (1.0 + (12.0 * s.sqrt()).cos()) / (0.5 * s + 2.0)
            }
            Kind::Powell => x
                .iter()
                .enumerate()
                .map(|(i, v)| v.abs().powi(i as i32 + 2))
                .sum(),
            Kind::SchafferN2 => {
                let (a, b) = (x[0] * x[0], x[1] * x[1]);
                0.5 + ((a - b).sin().powi(2) - 0.5) / (1.0 + 0.001 * (a + b)).powi(2)
            }
            Kind::Washboard { alpha } => washboard(alpha, x[0]),
        }
    }

    /// Analytic gradient. Kinks (|·| and √ at zero) take the symmetric value 0.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len() as f64;
        match self.kind {
            Kind::Ackley => {
                let (a, b, c) = (20.0, 0.2, 2.0 * PI);
                let s2: f64 = x.iter().map(|v| v * v).sum();
                let r = (s2 / d).sqrt();
                let sc: f64 = x.iter().map(|v| (c * v).cos()).sum();
                let e1 = (-b * r).exp();
                let e2 = (sc / d).exp();
                x.iter()
                    .map(|v| {
                        let t1 = if r > 0.0 { a * b * e1 * v / (d * r) } else { 0.0 };
                        t1 + e2 * c * (c * v).sin() / d
                    })
                    .collect()
            }
            Kind::Whitley => {
                let cs: Vec<f64> = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                    .collect();
                (0..x.len())
                    .map(|i| {
                        let si = ((i + 1) as f64).sqrt();
                        let others: f64 = cs
                            .iter()
                            .enumerate()
                            .filter(|(j, _)| *j != i)
                            .map(|(_, c)| c)
                            .product();
                        x[i] / 2000.0 + (x[i] / si).sin() / si * others
                    })
                    .collect()
            }
            Kind::Rosenbrock => {
                let n = x.len();
                let mut g = vec![0.0; n];
                for i in 0..n.saturating_sub(1) {
                    let t = x[i + 1] - x[i] * x[i];
                    g[i] += -400.0 * x[i] * t - 2.0 * (1.0 - x[i]);
                    g[i + 1] += 200.0 * t;
                }
                g
            }
            Kind::EggHolder => {
                let (px, py) = (x[0], x[1]);
                let u = 1.5 * py + 47.0;
                let v = px - py - 47.0;
                let (su, sv) = (u.abs().sqrt(), v.abs().sqrt());
                let du = if su > 0.0 { su.cos() * sgn(u) / (2.0 * su) } else { 0.0 };
                let dv = if sv > 0.0 { sv.cos() * sgn(v) / (2.0 * sv) } else { 0.0 };
                let gx = -sv.sin() - px * dv;
                let gy = -su.sin() - (py + 47.0) * du * 1.5 + px * dv;
                vec![gx, gy]
            }
            Kind::XinSheYang4 => {
                let s: f64 = x.iter().map(|v| v.sin().powi(2)).sum();
                let e = (-x.iter().map(|v| v * v).sum::<f64>()).exp();
                let g = (-x.iter().map(|v| v.abs().sqrt().sin().powi(2)).sum::<f64>()).exp();
                x.iter()
                    .map(|&v| {
                        let r = v.abs().sqrt();
                        let dsq = if r > 0.0 { (2.0 * r).sin() * sgn(v) / (2.0 * r) } else { 0.0 };
                        ((2.0 * v).sin() + 2.0 * v * e) * g - (s - e) * g * dsq
                    })
                    .collect()
            }
            Kind::RosenbrockMod => {
                let (a, b) = (x[0], x[1]);
                let e = (-((a + 1.0).powi(2) + (b + 1.0).powi(2)) / 0.1).exp();
                vec![
                    -400.0 * a * (b - a * a) - 2.0 * (1.0 - a) + 8000.0 * (a + 1.0) * e,
                    200.0 * (b - a * a) + 8000.0 * (b + 1.0) * e,
                ]
            }
            Kind::Salomon => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r == 0.0 {
                    return vec![0.0; x.len()];
                }
                let k = (2.0 * PI * (2.0 * PI * r).sin() + 0.1) / r;
                x.iter().map(|v| k * v).collect()
            }
            Kind::DropWave => {
                let s = x[0] * x[0] + x[1] * x[1];
                let r = s.sqrt();
                let num = 1.0 + (12.0 * r).cos();
                let den = 0.5 * s + 2.0;
                x.iter()
                    .map(|&v| {
                        let dnum = if r > 0.0 { -12.0 * (12.0 * r).sin() * v / r } else { 0.0 };
                        -(dnum * den - num * v) / (den * den)
                    })
                    .collect()
            }
            Kind::Powell => x
                .iter()
                .enumerate()
                .map(|(i, &v)| (i as f64 + 2.0) * v.abs().powi(i as i32 + 1) * sgn(v))
                .collect(),
            Kind::SchafferN2 => {
                let (a, b) = (x[0] * x[0], x[1] * x[1]);
                let s = a - b;
                let num = s.sin().powi(2) - 0.5;
                let q = 1.0 + 0.001 * (a + b);
                let den = q * q;
                let ds = (2.0 * s).sin();
                let grad = |dnum: f64, dden: f64| (dnum * den - num * dden) / (den * den);
                vec![
                    grad(ds * 2.0 * x[0], 2.0 * q * 0.002 * x[0]),
                    grad(-ds * 2.0 * x[1], 2.0 * q * 0.002 * x[1]),
                ]
            }
            Kind::Washboard { alpha } => vec![washboard_d(alpha, x[0])],
        }
    }

    /// Central differences with step `h·max(1, |x_i|)`.
    pub fn fd_gradient(&self, x: &[f64], h: f64) -> Vec<f64> {
        let mut p = x.to_vec();
        (0..x.len())
            .map(|i| {
                let step = h * x[i].abs().max(1.0);
                p[i] = x[i] + step;
                let fp = self.eval(&p);
                p[i] = x[i] - step;
                let fm = self.eval(&p);
                p[i] = x[i];
                (fp - fm) / (2.0 * step)
            })
            .collect()
    }

    /// Best point found by a uniform grid with `per_axis` points per axis
    /// (low dimensions only) followed by compass search.
    pub fn grid_optimum(&self, per_axis: usize) -> (Vec<f64>, f64) {
        assert!(self.dim <= 4, "grid search is for low-dimensional functions");
        let steps: Vec<f64> = self
            .domain
            .iter()
            .map(|(lo, hi)| (hi - lo) / (per_axis - 1) as f64)
            .collect();
        let total = per_axis.pow(self.dim as u32);
        let mut x = vec![0.0; self.dim];
        let mut best = (x.clone(), f64::INFINITY);
        for k in 0..total {
            let mut r = k;
            for i in 0..self.dim {
                x[i] = self.domain[i].0 + (r % per_axis) as f64 * steps[i];
                r /= per_axis;
            }
            let f = self.eval(&x);
            if f < best.1 {
                best = (x.clone(), f);
            }
        }
        self.compass(best.0, steps)
    }

    fn compass(&self, mut x: Vec<f64>, mut step: Vec<f64>) -> (Vec<f64>, f64) {
        let mut f = self.eval(&x);
        while step.iter().any(|s| *s > 1e-13) {
            let mut moved = false;
            for i in 0..self.dim {
                for dir in [1.0, -1.0] {
                    let old = x[i];
                    let (lo, hi) = self.domain[i];
                    x[i] = (old + dir * step[i]).clamp(lo, hi);
                    let g = self.eval(&x);
                    if g < f {
                        f = g;
                        moved = true;
                    } else {
                        x[i] = old;
                    }
                }
            }
            if !moved {
                step.iter_mut().for_each(|s| *s *= 0.5);
            }
        }
        (x, f)
    }

    /// Target value for gap-based stopping: the stated value when one exists,
    /// otherwise the grid optimum.
    pub fn target(&self) -> Result<f64> {
        if let Some(v) = self.optimum_value {
            return Ok(v);
        }
        match self.kind {
            Kind::Washboard { alpha } => Ok(washboard_min(alpha).1),
            _ if self.dim <= 4 => {
                let per_axis = [40_001, 1001, 101, 41][self.dim - 1];
                Ok(self.grid_optimum(per_axis).1)
            }
            _ => domain(format!("{}: no known optimum", self.name)),
        }
    }
}
