//! Derivative-free search loops: quantization-based search (QTZ), simulated
//! annealing (SA) and quantum-inspired annealing (QIA).

mod problem;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quantize::QuantizerState;
use crate::schedule::CoolingSchedule;

pub use problem::{ContinuousProblem, Proposal, SearchProblem, TspProblem};

/// Default stopping gap `f − f* ≤ 2^−12`.
pub const DEFAULT_GAP: f64 = 1.0 / 4096.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Qtz,
    Sa,
    Qia,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Qtz, Algorithm::Sa, Algorithm::Qia];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Qtz => "qtz",
            Algorithm::Sa => "sa",
            Algorithm::Qia => "qia",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "qtz" => Ok(Algorithm::Qtz),
            "sa" => Ok(Algorithm::Sa),
            "qia" | "qa" => Ok(Algorithm::Qia),
            other => domain(format!("unknown algorithm `{other}` (qtz | sa | qia)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Iteration budget (one candidate evaluation per iteration).
    pub max_iter: u64,
    /// Stop once the incumbent is within `gap` of the problem's target.
    pub gap: f64,
    pub record_trace: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            gap: DEFAULT_GAP,
            record_trace: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QtzConfig {
    pub base: u32,
    /// Integer multiplier on the starting scale: `Qp(0) = η0·b^(−floor(log_b(f(x0) + 1)))`.
    /// `1` starts at the coarsest resolution; larger values start finer.
    pub eta0: u64,
}

impl Default for QtzConfig {
    fn default() -> Self {
        Self { base: 2, eta0: 1 }
    }
}

impl QtzConfig {
    pub fn start_state(&self, f0: f64) -> Result<QuantizerState> {
        if self.eta0 == 0 {
            return domain("eta0 must be a positive integer");
        }
        let gamma = crate::quantize::initial_gamma(f0, self.base)?;
        QuantizerState::new(gamma * self.eta0 as f64, self.base)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AdiabaticForm {
    /// `β = 1 − sqrt(τ/T_f)`.
    #[default]
    Sqrt,
    /// `β = 1 − τ/T_f`.
    Linear,
}

impl FromStr for AdiabaticForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt" => Ok(Self::Sqrt),
            "linear" => Ok(Self::Linear),
            _ => domain(format!("unknown adiabatic form `{s}` (sqrt | linear)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QiaConfig {
    pub cooling: CoolingSchedule,
    pub t_final: u64,
    pub form: AdiabaticForm,
}

impl QiaConfig {
    /// Mixing weight at `τ`; held at 0 once `τ` passes `T_f`.
    pub fn beta(&self, tau: u64) -> f64 {
        let s = (tau as f64 / self.t_final as f64).min(1.0);
        match self.form {
            AdiabaticForm::Sqrt => 1.0 - s.sqrt(),
            AdiabaticForm::Linear => 1.0 - s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub tau: u64,
    /// Objective of the candidate drawn at `tau`.
    pub f: f64,
    /// `f^Q_opt` for QTZ, `f_opt` for SA, `H_opt` for QIA, after the update.
    pub f_opt: f64,
    /// `Qp` used at `tau` for QTZ, temperature for the annealers.
    pub level: f64,
    pub accepted: bool,
    /// Lowest objective accepted so far.
    pub best: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Budget,
    Gap,
    NonFinite,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord<S> {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub trace: Vec<TraceRow>,
    /// Algorithm output `x_opt`.
    pub final_state: S,
    /// `f(x_opt)` at termination.
    pub final_f: f64,
    pub best_state: S,
    pub best_f: f64,
    pub initial_f: f64,
    pub evals: u64,
    pub iterations: u64,
    /// First iteration at which the incumbent met the stopping gap.
    pub first_hit: Option<u64>,
    pub stop: StopReason,
    /// Iteration at which `Qp` could no longer be refined.
    pub saturated_at: Option<u64>,
    /// Whether the monotone quantity (f^Q_opt for QTZ, best-so-far otherwise)
    /// never increased.
    pub monotone: bool,
    pub wall_time: f64,
}

impl<S: PartialEq> RunRecord<S> {
    /// Equality ignoring wall time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.algorithm == other.algorithm
            && self.seed == other.seed
            && self.trace == other.trace
            && self.final_state == other.final_state
            && self.final_f.to_bits() == other.final_f.to_bits()
            && self.best_state == other.best_state
            && self.best_f.to_bits() == other.best_f.to_bits()
            && self.evals == other.evals
            && self.first_hit == other.first_hit
            && self.stop == other.stop
    }
}

struct Tracker<S> {
    cfg: SearchConfig,
    target: Option<f64>,
    trace: Vec<TraceRow>,
    best_state: S,
    best_f: f64,
    first_hit: Option<u64>,
    monotone: bool,
    last_monotone: f64,
}

impl<S: Clone> Tracker<S> {
    fn new(cfg: SearchConfig, target: Option<f64>, x0: &S, f0: f64) -> Self {
        Self {
            cfg,
            target,
            trace: Vec::new(),
            best_state: x0.clone(),
            best_f: f0,
            first_hit: target.filter(|t| f0 - t <= cfg.gap).map(|_| 0),
            monotone: true,
            last_monotone: f64::INFINITY,
        }
    }

    fn accept(&mut self, x: &S, f: f64) {
        if f < self.best_f {
            self.best_f = f;
            self.best_state = x.clone();
        }
    }

    fn monotone(&mut self, v: f64) {
        if v > self.last_monotone {
            self.monotone = false;
        }
        self.last_monotone = v;
    }

    /// Records the row and reports whether the incumbent `f_inc` meets the gap.
    fn row(&mut self, row: TraceRow, f_inc: f64) -> bool {
        if self.cfg.record_trace {
            self.trace.push(row);
        }
        match self.target {
            Some(t) if f_inc - t <= self.cfg.gap => {
                self.first_hit.get_or_insert(row.tau);
                true
            }
            _ => false,
        }
    }
}

fn check_budget(cfg: &SearchConfig) -> Result<()> {
    if cfg.max_iter == 0 {
        return domain("max_iter must be at least 1");
    }
    Ok(())
}

fn finish<S: Clone>(
    algorithm: Algorithm,
    seed: u64,
    t: Tracker<S>,
    x_opt: S,
    f_opt: f64,
    f0: f64,
    iterations: u64,
    stop: StopReason,
    saturated_at: Option<u64>,
    start: Instant,
) -> RunRecord<S> {
    RunRecord {
        algorithm,
        seed,
        trace: t.trace,
        final_state: x_opt,
        final_f: f_opt,
        best_state: t.best_state,
        best_f: t.best_f,
        initial_f: f0,
        evals: iterations + 1,
        iterations,
        first_hit: t.first_hit,
        stop,
        saturated_at,
        monotone: t.monotone,
        wall_time: start.elapsed().as_secs_f64(),
    }
}

/// Blind random search on the quantized objective: accept whenever
/// `f^Q ≤ f^Q_opt`, then refine `Qp` by one power of the base.
pub fn run_qtz<P: SearchProblem>(
    p: &P,
    qtz: &QtzConfig,
    cfg: &SearchConfig,
    seed: u64,
) -> Result<RunRecord<P::State>> {
    check_budget(cfg)?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = p.initial(&mut rng);
    let f0 = p.evaluate(&x0);
    if !f0.is_finite() {
        return Err(Error::NonFinite { tau: 0 });
    }
    let mut q = qtz.start_state(f0)?;
    let qp0 = q.qp();
    let mut fq_opt = q.quantize(f0);
    let (mut x_opt, mut f_opt) = (x0.clone(), f0);
    let mut t = Tracker::new(*cfg, p.target(), &x0, f0);
    t.monotone(fq_opt);
    let mut saturated_at = None;
    let mut stop = StopReason::Budget;
    let mut tau = 0;
    if t.first_hit.is_some() {
        stop = StopReason::Gap;
    }
    while stop == StopReason::Budget && tau < cfg.max_iter {
        tau += 1;
        let x = p.neighbor(&x_opt, qp0 / q.qp(), &mut rng);
        let f = p.evaluate(&x);
        if !f.is_finite() {
            stop = StopReason::NonFinite;
            break;
        }
        let qp = q.qp();
        let fq = q.quantize(f);
        let accepted = fq <= fq_opt;
        if accepted {
            t.accept(&x, f);
            x_opt = x;
            f_opt = f;
            fq_opt = fq;
            match q.advance() {
                Ok(next) => q = next,
                Err(_) => {
                    saturated_at.get_or_insert(tau);
                }
            }
        }
        t.monotone(fq_opt);
        let row = TraceRow { tau, f, f_opt: fq_opt, level: qp, accepted, best: t.best_f };
        if t.row(row, f_opt) {
            stop = StopReason::Gap;
        }
    }
    Ok(finish(Algorithm::Qtz, seed, t, x_opt, f_opt, f0, tau, stop, saturated_at, start))
}

/// Metropolis rule shared by SA and QIA.
#[inline]
pub fn metropolis_accept(candidate: f64, incumbent: f64, temperature: f64, r: f64) -> bool {
    candidate < incumbent || r < (-(candidate - incumbent).abs() / temperature).exp()
}

/// Simulated annealing with `T ← T·α` every iteration.
pub fn run_sa<P: SearchProblem>(
    p: &P,
    cooling: &CoolingSchedule,
    cfg: &SearchConfig,
    seed: u64,
) -> Result<RunRecord<P::State>> {
    check_budget(cfg)?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = p.initial(&mut rng);
    let f0 = p.evaluate(&x0);
    if !f0.is_finite() {
        return Err(Error::NonFinite { tau: 0 });
    }
    let (mut x_opt, mut f_opt) = (x0.clone(), f0);
    let mut t = Tracker::new(*cfg, p.target(), &x0, f0);
    t.monotone(f0);
    let mut stop = if t.first_hit.is_some() { StopReason::Gap } else { StopReason::Budget };
    let mut tau = 0;
    while stop == StopReason::Budget && tau < cfg.max_iter {
        tau += 1;
        let temp = cooling.temperature(tau - 1);
        let x = p.neighbor(&x_opt, temp / cooling.t0, &mut rng);
        let f = p.evaluate(&x);
        if !f.is_finite() {
            stop = StopReason::NonFinite;
            break;
        }
        let r: f64 = rng.gen();
        let accepted = metropolis_accept(f, f_opt, temp, r);
        if accepted {
            t.accept(&x, f);
            x_opt = x;
            f_opt = f;
        }
        t.monotone(t.best_f);
        let row = TraceRow { tau, f, f_opt, level: temp, accepted, best: t.best_f };
        if t.row(row, f_opt) {
            stop = StopReason::Gap;
        }
    }
    Ok(finish(Algorithm::Sa, seed, t, x_opt, f_opt, f0, tau, stop, None, start))
}

/// Annealing on the blended energy `H = (1−β)·f + β·H_B`.
pub fn run_qia<P: SearchProblem>(
    p: &P,
    qia: &QiaConfig,
    cfg: &SearchConfig,
    seed: u64,
) -> Result<RunRecord<P::State>> {
    check_budget(cfg)?;
    if qia.t_final == 0 {
        return domain("t_final must be positive");
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = p.initial(&mut rng);
    let f0 = p.evaluate(&x0);
    if !f0.is_finite() {
        return Err(Error::NonFinite { tau: 0 });
    }
    let mut h_opt = p.mixing_energy(&x0, &mut rng);
    let (mut x_opt, mut f_opt) = (x0.clone(), f0);
    let mut t = Tracker::new(*cfg, p.target(), &x0, f0);
    t.monotone(f0);
    let mut stop = if t.first_hit.is_some() { StopReason::Gap } else { StopReason::Budget };
    let mut tau = 0;
    let cooling = qia.cooling;
    while stop == StopReason::Budget && tau < cfg.max_iter {
        tau += 1;
        let temp = cooling.temperature(tau - 1);
        let x = p.neighbor(&x_opt, temp / cooling.t0, &mut rng);
        let hp = p.evaluate(&x);
        let hb = p.mixing_energy(&x, &mut rng);
        if !hp.is_finite() || !hb.is_finite() {
            stop = StopReason::NonFinite;
            break;
        }
        let beta = qia.beta(tau);
        let h = (1.0 - beta) * hp + beta * hb;
        let r: f64 = rng.gen();
        let accepted = metropolis_accept(h, h_opt, temp, r);
        if accepted {
            t.accept(&x, hp);
            x_opt = x;
            f_opt = hp;
            h_opt = h;
        }
        t.monotone(t.best_f);
        let row = TraceRow { tau, f: hp, f_opt: h_opt, level: temp, accepted, best: t.best_f };
        if t.row(row, f_opt) {
            stop = StopReason::Gap;
        }
    }
    Ok(finish(Algorithm::Qia, seed, t, x_opt, f_opt, f0, tau, stop, None, start))
}

/// Parameters for all three loops, so callers can dispatch on [`Algorithm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgoParams {
    pub qtz: QtzConfig,
    pub sa: CoolingSchedule,
    pub qia: QiaConfig,
}

impl AlgoParams {
    pub fn new(budget: u64) -> Self {
        Self {
            qtz: QtzConfig::default(),
            sa: CoolingSchedule::default(),
            qia: QiaConfig {
                cooling: CoolingSchedule::default(),
                t_final: budget.max(1),
                form: AdiabaticForm::Sqrt,
            },
        }
    }
}

pub fn run<P: SearchProblem>(
    algo: Algorithm,
    p: &P,
    params: &AlgoParams,
    cfg: &SearchConfig,
    seed: u64,
) -> Result<RunRecord<P::State>> {
    match algo {
        Algorithm::Qtz => run_qtz(p, &params.qtz, cfg, seed),
        Algorithm::Sa => run_sa(p, &params.sa, cfg, seed),
        Algorithm::Qia => run_qia(p, &params.qia, cfg, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchfns::washboard_fn;

    struct Constant;

    impl SearchProblem for Constant {
        type State = u32;
        fn initial(&self, _: &mut ChaCha8Rng) -> u32 {
            0
        }
        fn neighbor(&self, s: &u32, _: f64, _: &mut ChaCha8Rng) -> u32 {
            s + 1
        }
        fn evaluate(&self, _: &u32) -> f64 {
            3.0
        }
        fn mixing_energy(&self, _: &u32, _: &mut ChaCha8Rng) -> f64 {
            1.0
        }
    }

    #[test]
    fn constant_objective_accepts_everything() {
        let cfg = SearchConfig { max_iter: 50, ..Default::default() };
        let r = run_qtz(&Constant, &QtzConfig::default(), &cfg, 0).unwrap();
        assert!(r.trace.iter().all(|row| row.accepted));
        let gamma = crate::quantize::initial_gamma(3.0, 2).unwrap();
        for row in &r.trace {
            assert_eq!(row.level, gamma * 2f64.powi(row.tau as i32 - 1));
        }
        assert_eq!(r.final_state, 50);
    }

    #[test]
    fn qtz_saturation_is_flagged() {
        let cfg = SearchConfig { max_iter: 3000, record_trace: false, ..Default::default() };
        let r = run_qtz(&Constant, &QtzConfig::default(), &cfg, 0).unwrap();
        assert!(r.saturated_at.is_some());
        assert!(r.monotone);
    }

    #[test]
    fn cold_sa_is_descent() {
        let p = ContinuousProblem::new(washboard_fn(10.0), Proposal::Global);
        let cool = CoolingSchedule::new(1e-12, 0.9995).unwrap();
        let r = run_sa(&p, &cool, &SearchConfig::default(), 3).unwrap();
        let acc: Vec<f64> = r.trace.iter().filter(|t| t.accepted).map(|t| t.f).collect();
        assert!(acc.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn qia_beta_endpoints() {
        let q = QiaConfig { cooling: CoolingSchedule::default(), t_final: 100, form: AdiabaticForm::Sqrt };
        assert_eq!(q.beta(0), 1.0);
        assert_eq!(q.beta(100), 0.0);
        assert_eq!(q.beta(400), 0.0);
        let l = QiaConfig { form: AdiabaticForm::Linear, ..q };
        assert_eq!(l.beta(50), 0.5);
    }

    #[test]
    fn gap_stops_early() {
        let p = ContinuousProblem::new(washboard_fn(10.0), Proposal::Global)
            .with_target(Some(crate::benchfns::washboard_min(10.0).1));
        let cfg = SearchConfig { max_iter: 100_000, ..Default::default() };
        let r = run_qtz(&p, &QtzConfig::default(), &cfg, 1).unwrap();
        assert_eq!(r.stop, StopReason::Gap);
        assert_eq!(r.first_hit, Some(r.iterations));
    }
}
