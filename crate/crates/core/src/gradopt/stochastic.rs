use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{dot, norm};
use crate::error::{domain, Error, Result};
use crate::quantize::quantize_unchecked;
use crate::schedule::LogLogPowerSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnforcementConfig {
    pub lambda: f64,
    pub kappa: f64,
    pub tau0: i64,
}

impl Default for EnforcementConfig {
    fn default() -> Self {
        Self { lambda: 0.01, kappa: 0.01, tau0: 0 }
    }
}

/// `e^{−ϰ(τ−τ0)} / (1 + e^{−ϰ(τ−τ0)})`.
pub fn enforcement_decay(tau: u64, cfg: &EnforcementConfig) -> f64 {
    let z = cfg.kappa * (tau as f64 - cfg.tau0 as f64);
    1.0 / (1.0 + z.exp())
}

/// `λ·decay(τ)·h/‖h‖` rounded to the `1/qp` grid. Zero when `h` is zero.
pub fn enforcement(tau: u64, h: &[f64], cfg: &EnforcementConfig, qp: f64) -> Vec<f64> {
    let n = norm(h);
    if n == 0.0 || !n.is_finite() {
        return vec![0.0; h.len()];
    }
    let k = cfg.lambda * enforcement_decay(tau, cfg) / n;
    h.iter().map(|v| quantize_unchecked(k * v, qp)).collect()
}

fn apply(x: &[f64], h: &[f64], lambda: f64, r: Option<&[f64]>, qp: f64) -> (Vec<f64>, Vec<f64>) {
    let proposed: Vec<f64> = match r {
        Some(r) => h.iter().zip(r).map(|(h, r)| lambda * h + r).collect(),
        None => h.iter().map(|h| lambda * h).collect(),
    };
    let x_new = x
        .iter()
        .zip(&proposed)
        .map(|(x, u)| x + quantize_unchecked(*u, qp))
        .collect();
    (x_new, proposed)
}

/// `X + Qp⁻¹·floor(Qp·(λh + r) + ½)` with `h = −∇f`. Returns the new point and
/// the unrounded increment `λh + r`.
pub fn qsgld_step(
    x: &[f64],
    grad: &[f64],
    tau: u64,
    lambda: f64,
    enf: Option<&EnforcementConfig>,
    qp: f64,
) -> (Vec<f64>, Vec<f64>) {
    let h: Vec<f64> = grad.iter().map(|g| -g).collect();
    let r = enf.map(|c| enforcement(tau, &h, c, qp));
    apply(x, &h, lambda, r.as_deref(), qp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        Self {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// Updates the moments and returns `h = −m̂/(√v̂ + ε)`.
    pub fn direction(&mut self, grad: &[f64]) -> Vec<f64> {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        grad.iter()
            .enumerate()
            .map(|(i, g)| {
                self.m[i] = b1 * self.m[i] + (1.0 - b1) * g;
                self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g;
                -(self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps)
            })
            .collect()
    }
}

/// QSGLD with the Adam direction in place of `−∇f`.
pub fn qsld_adam_step(
    x: &[f64],
    grad: &[f64],
    adam: &mut AdamState,
    tau: u64,
    lambda: f64,
    enf: Option<&EnforcementConfig>,
    qp: f64,
) -> (Vec<f64>, Vec<f64>) {
    let h = adam.direction(grad);
    let r = enf.map(|c| enforcement(tau, &h, c, qp));
    apply(x, &h, lambda, r.as_deref(), qp)
}

/// `x − η∇f + sqrt(2η/qp)·ξ`, `ξ ~ N(0, I)`.
pub fn langevin_step<R: Rng + ?Sized>(x: &[f64], grad: &[f64], eta: f64, qp: f64, rng: &mut R) -> Vec<f64> {
    let s = (2.0 * eta / qp).sqrt();
    x.iter()
        .zip(grad)
        .map(|(x, g)| {
            let xi: f64 = rng.sample(StandardNormal);
            x - eta * g + s * xi
        })
        .collect()
}

/// Consistent least squares `½·mean((aᵢ·x − bᵢ)²)` with row covariance
/// `diag(σ)`, `σ` geometric from `top` down to `top/cond`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub rows: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub x_true: Vec<f64>,
}

impl LeastSquares {
    pub fn synthetic(dim: usize, n: usize, cond: f64, seed: u64) -> Result<Self> {
        if dim < 2 || n < dim || !(cond >= 1.0) {
            return domain("least squares needs dim ≥ 2, n ≥ dim and cond ≥ 1");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let top = 10.0;
        let sd: Vec<f64> = (0..dim)
            .map(|j| (top * cond.powf(-(j as f64) / (dim - 1) as f64)).sqrt())
            .collect();
        let x_true: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| sd.iter().map(|s| s * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let b = rows.iter().map(|r| dot(r, &x_true)).collect();
        Ok(Self { rows, b, x_true })
    }

    pub fn dim(&self) -> usize {
        self.x_true.len()
    }

    pub fn loss(&self, x: &[f64]) -> f64 {
        let s: f64 = self
            .rows
            .iter()
            .zip(&self.b)
            .map(|(r, b)| (dot(r, x) - b).powi(2))
            .sum();
        0.5 * s / self.rows.len() as f64
    }

    pub fn batch_gradient(&self, x: &[f64], idx: &[usize]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for &i in idx {
            let e = dot(&self.rows[i], x) - self.b[i];
            for (gj, aj) in g.iter_mut().zip(&self.rows[i]) {
                *gj += e * aj;
            }
        }
        let k = idx.len() as f64;
        g.iter_mut().for_each(|v| *v /= k);
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MlOptimizer {
    Sgd,
    Qsgld,
    Adam,
    QsldAdam,
}

impl MlOptimizer {
    pub fn name(&self) -> &'static str {
        match self {
            MlOptimizer::Sgd => "sgd",
            MlOptimizer::Qsgld => "qsgld",
            MlOptimizer::Adam => "adam",
            MlOptimizer::QsldAdam => "qsld_adam",
        }
    }

    fn quantized(&self) -> bool {
        matches!(self, MlOptimizer::Qsgld | MlOptimizer::QsldAdam)
    }
}

impl std::str::FromStr for MlOptimizer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Self::Sgd),
            "qsgld" => Ok(Self::Qsgld),
            "adam" => Ok(Self::Adam),
            "qsld_adam" | "qsld" => Ok(Self::QsldAdam),
            _ => domain(format!("unknown optimizer `{s}` (sgd | qsgld | adam | qsld_adam)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlRunConfig {
    pub optimizer: MlOptimizer,
    pub lambda: f64,
    pub steps: u64,
    pub batch: usize,
    pub target_loss: f64,
    pub enforcement: Option<EnforcementConfig>,
    pub schedule: LogLogPowerSchedule,
}

impl MlRunConfig {
    pub fn new(optimizer: MlOptimizer) -> Self {
        Self {
            optimizer,
            lambda: 0.01,
            steps: 5000,
            batch: 10,
            target_loss: 1e-3,
            enforcement: Some(EnforcementConfig::default()),
            schedule: LogLogPowerSchedule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlRun {
    pub optimizer: MlOptimizer,
    pub seed: u64,
    pub final_loss: f64,
    /// First step after which the full loss was below the target.
    pub hit_step: Option<u64>,
    /// Largest `|taken − proposed|·qp` over all steps and components; at most ½
    /// for the quantized optimizers.
    pub max_rounding: f64,
    pub x: Vec<f64>,
}

/// Minibatch run from the origin. Batches depend only on `seed`, so different
/// optimizers with the same seed see the same data order.
pub fn run_ml(p: &LeastSquares, cfg: &MlRunConfig, seed: u64) -> MlRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = p.dim();
    let mut x = vec![0.0; d];
    let mut adam = AdamState::new(d);
    let mut hit = None;
    let mut max_rounding = 0.0f64;
    let mut idx = vec![0usize; cfg.batch];
    for tau in 0..cfg.steps {
        idx.iter_mut().for_each(|i| *i = rng.gen_range(0..p.rows.len()));
        let g = p.batch_gradient(&x, &idx);
        let qp = cfg.schedule.qp(tau);
        let enf = cfg.enforcement.as_ref();
        let (next, proposed) = match cfg.optimizer {
            MlOptimizer::Sgd => {
                let u: Vec<f64> = g.iter().map(|g| -cfg.lambda * g).collect();
                (x.iter().zip(&u).map(|(a, b)| a + b).collect(), u)
            }
            MlOptimizer::Adam => {
                let h = adam.direction(&g);
                let u: Vec<f64> = h.iter().map(|h| cfg.lambda * h).collect();
                (x.iter().zip(&u).map(|(a, b)| a + b).collect(), u)
            }
            MlOptimizer::Qsgld => qsgld_step(&x, &g, tau, cfg.lambda, enf, qp),
            MlOptimizer::QsldAdam => qsld_adam_step(&x, &g, &mut adam, tau, cfg.lambda, enf, qp),
        };
        if cfg.optimizer.quantized() {
            for &v in &proposed {
                max_rounding = max_rounding.max((quantize_unchecked(v, qp) - v).abs() * qp);
            }
        }
        x = next;
        if hit.is_none() && p.loss(&x) < cfg.target_loss {
            hit = Some(tau + 1);
        }
    }
    MlRun {
        optimizer: cfg.optimizer,
        seed,
        final_loss: p.loss(&x),
        hit_step: hit,
        max_rounding,
        x,
    }
}
