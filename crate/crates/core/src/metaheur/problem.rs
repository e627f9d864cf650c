use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::benchfns::BenchmarkFn;
use crate::error::{domain, Error, Result};
use crate::tsp::{nearest_neighbor, random_swap, Neighborhood, Tour, TspInstance};

/// What the three search loops need from a problem.
///
/// `scale` passed to [`neighbor`](SearchProblem::neighbor) is in `(0, 1]`:
/// `Qp(0)/Qp` for QTZ and `T/T0` for the annealers. Problems are free to ignore it.
pub trait SearchProblem: Sync {
    type State: Clone + Send;

    fn initial(&self, rng: &mut ChaCha8Rng) -> Self::State;
    fn neighbor(&self, s: &Self::State, scale: f64, rng: &mut ChaCha8Rng) -> Self::State;
    fn evaluate(&self, s: &Self::State) -> f64;
    /// `H_B` for quantum-inspired annealing.
    fn mixing_energy(&self, s: &Self::State, rng: &mut ChaCha8Rng) -> f64;
    /// Known global minimum, used for gap-based stopping.
    fn target(&self) -> Option<f64> {
        None
    }
}

pub struct TspProblem {
    pub instance: TspInstance,
    pub neighborhood: Neighborhood,
    pub start: Tour,
}

impl TspProblem {
    pub fn new(instance: TspInstance, neighborhood: Neighborhood, start_city: usize) -> Result<Self> {
        let start = nearest_neighbor(&instance, start_city)?;
        Ok(Self { instance, neighborhood, start })
    }
}

impl SearchProblem for TspProblem {
    type State = Tour;

    fn initial(&self, _rng: &mut ChaCha8Rng) -> Tour {
        self.start.clone()
    }

    fn neighbor(&self, s: &Tour, _scale: f64, rng: &mut ChaCha8Rng) -> Tour {
        s.neighbor(&self.instance, self.neighborhood, rng)
    }

    fn evaluate(&self, s: &Tour) -> f64 {
        s.cost
    }

    /// Cost of a fresh random swap of the nearest-neighbor tour.
    fn mixing_energy(&self, _s: &Tour, rng: &mut ChaCha8Rng) -> f64 {
        random_swap(&self.start, &self.instance, rng).cost
    }
}

/// How continuous candidates are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Proposal {
    /// Uniform over the whole domain box, independent of the incumbent.
    #[default]
    Global,
    /// Uniform in a box around the incumbent with half-width
    /// `frac·(hi − lo)·scale`, clipped to the domain.
    Window { frac: f64 },
}

impl std::str::FromStr for Proposal {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(Self::Global),
            "window" => Ok(Self::Window { frac: 0.5 }),
            _ => match s.strip_prefix("window:") {
                Some(f) => f
                    .parse()
                    .map(|frac| Self::Window { frac })
                    .map_err(|_| Error::Domain(format!("bad window fraction `{f}`"))),
                None => domain(format!("unknown proposal `{s}` (global | window[:frac])")),
            },
        }
    }
}

pub struct ContinuousProblem {
    pub f: BenchmarkFn,
    pub proposal: Proposal,
    /// `H_B(x) = mixing_weight·‖x − c‖²` with `c` the domain center.
    pub mixing_weight: f64,
    pub target: Option<f64>,
    center: Vec<f64>,
}

impl ContinuousProblem {
    pub fn new(f: BenchmarkFn, proposal: Proposal) -> Self {
        let center = f.center();
        Self {
            f,
            proposal,
            mixing_weight: 0.125,
            target: None,
            center,
        }
    }

    pub fn with_target(mut self, target: Option<f64>) -> Self {
        self.target = target;
        self
    }

    fn uniform(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.f
            .domain
            .iter()
            .map(|&(lo, hi)| lo + (hi - lo) * rng.gen::<f64>())
            .collect()
    }
}

impl SearchProblem for ContinuousProblem {
    type State = Vec<f64>;

    fn initial(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.uniform(rng)
    }

    fn neighbor(&self, s: &Vec<f64>, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self.proposal {
            Proposal::Global => self.uniform(rng),
            Proposal::Window { frac } => s
                .iter()
                .zip(&self.f.domain)
                .map(|(&x, &(lo, hi))| {
                    let w = frac * (hi - lo) * scale;
                    let (a, b) = ((x - w).max(lo), (x + w).min(hi));
                    a + (b - a) * rng.gen::<f64>()
                })
                .collect(),
        }
    }

    fn evaluate(&self, s: &Vec<f64>) -> f64 {
        self.f.eval(s)
    }

    fn mixing_energy(&self, s: &Vec<f64>, _rng: &mut ChaCha8Rng) -> f64 {
        self.mixing_weight
            * s.iter()
                .zip(&self.center)
                .map(|(x, c)| (x - c) * (x - c))
                .sum::<f64>()
    }

    fn target(&self) -> Option<f64> {
        self.target
    }
}
