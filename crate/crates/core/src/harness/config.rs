use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradopt::{Method, MlOptimizer};
use crate::metaheur::{AdiabaticForm, Algorithm, Proposal, DEFAULT_GAP};
use crate::tsp::Neighborhood;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Tsp,
    Bench,
    Washboard,
    Gradopt,
    Mltoy,
    Theory,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Tsp => "tsp",
            ExperimentKind::Bench => "bench",
            ExperimentKind::Washboard => "washboard",
            ExperimentKind::Gradopt => "gradopt",
            ExperimentKind::Mltoy => "mltoy",
            ExperimentKind::Theory => "theory",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "tsp" => Self::Tsp,
            "bench" => Self::Bench,
            "washboard" => Self::Washboard,
            "gradopt" => Self::Gradopt,
            "mltoy" => Self::Mltoy,
            "theory" => Self::Theory,
            _ => return bad("kind", format!("unknown experiment `{s}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspSettings {
    pub cities: usize,
    pub side: f64,
    pub instance_seed: u64,
    /// CSV with an `x,y` header; overrides the generated instance.
    pub instance: Option<PathBuf>,
    pub neighborhood: Neighborhood,
    pub start_city: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSettings {
    pub function: String,
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradSettings {
    pub function: String,
    pub dim: Option<usize>,
    pub methods: Vec<Method>,
    /// Run the quantized twin alongside each method.
    pub quantized: bool,
    pub max_iter: u64,
    pub gtol: f64,
    /// Fixed start; otherwise drawn uniformly from the domain per seed.
    pub start: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlSettings {
    pub optimizers: Vec<MlOptimizer>,
    pub lambda: f64,
    pub steps: u64,
    pub batch: usize,
    pub dim: usize,
    pub rows: usize,
    pub cond: f64,
    pub data_seed: u64,
    pub target_loss: f64,
    pub enforce: bool,
    pub kappa: f64,
    pub enforce_lambda: f64,
    pub eta: f64,
}

/// One experiment. Every field is reachable through a flat dotted key, see
/// [`ExperimentConfig::set`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub algos: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    pub budget: u64,
    pub gap: f64,
    pub trace: bool,
    pub out: Option<PathBuf>,
    pub proposal: Proposal,
    pub tsp: TspSettings,
    pub bench: BenchSettings,
    pub washboard_alpha: f64,
    pub qtz_base: u32,
    pub qtz_eta0: u64,
    pub sa_t0: f64,
    pub sa_alpha: f64,
    pub qia_t0: f64,
    pub qia_alpha: f64,
    /// `None` means "same as the budget".
    pub qia_t_final: Option<u64>,
    pub qia_form: AdiabaticForm,
    pub gradopt: GradSettings,
    pub mltoy: MlSettings,
}

pub const KEYS: &[&str] = &[
    "kind",
    "algos",
    "trials",
    "seeds",
    "budget",
    "gap",
    "trace",
    "out",
    "proposal",
    "tsp.cities",
    "tsp.side",
    "tsp.instance_seed",
    "tsp.instance",
    "tsp.neighborhood",
    "tsp.start_city",
    "bench.function",
    "bench.dim",
    "washboard.alpha",
    "qtz.base",
    "qtz.eta0",
    "sa.t0",
    "sa.alpha",
    "qia.t0",
    "qia.alpha",
    "qia.t_final",
    "qia.form",
    "gradopt.function",
    "gradopt.dim",
    "gradopt.methods",
    "gradopt.quantized",
    "gradopt.max_iter",
    "gradopt.gtol",
    "gradopt.start",
    "mltoy.optimizers",
    "mltoy.lambda",
    "mltoy.steps",
    "mltoy.batch",
    "mltoy.dim",
    "mltoy.rows",
    "mltoy.cond",
    "mltoy.data_seed",
    "mltoy.target_loss",
    "mltoy.enforce",
    "mltoy.kappa",
    "mltoy.enforce_lambda",
    "mltoy.eta",
];

fn bad<T>(key: &str, msg: impl Into<String>) -> Result<T> {
    Err(Error::Config { key: key.into(), msg: msg.into() })
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().or_else(|_| bad(key, format!("cannot parse `{v}`")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => bad(key, format!("expected a boolean, got `{v}`")),
    }
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Defaults for each experiment, matching the published protocols.
    pub fn new(kind: ExperimentKind) -> Self {
        let mut c = Self {
            kind,
            algos: Algorithm::ALL.to_vec(),
            seeds: (0..10).collect(),
            budget: 30_000,
            gap: DEFAULT_GAP,
            trace: false,
            out: None,
            proposal: Proposal::Global,
            tsp: TspSettings {
                cities: 100,
                side: 300.0,
                instance_seed: 1,
                instance: None,
                neighborhood: Neighborhood::TwoOpt,
                start_city: 0,
            },
            bench: BenchSettings { function: "drop_wave".into(), dim: None },
            washboard_alpha: 10.0,
            qtz_base: 2,
            qtz_eta0: 1,
            sa_t0: 1000.0,
            sa_alpha: 0.9995,
            qia_t0: 1000.0,
            qia_alpha: 0.9995,
            qia_t_final: None,
            qia_form: AdiabaticForm::Sqrt,
            gradopt: GradSettings {
                function: "rosenbrock2d".into(),
                dim: None,
                methods: vec![Method::Gd, Method::Cg, Method::Bfgs],
                quantized: true,
                max_iter: 1000,
                gtol: 1e-8,
                start: None,
            },
            mltoy: MlSettings {
                optimizers: vec![MlOptimizer::Sgd, MlOptimizer::Qsgld, MlOptimizer::Adam, MlOptimizer::QsldAdam],
                lambda: 0.01,
                steps: 5000,
                batch: 10,
                dim: 20,
                rows: 1000,
                cond: 100.0,
                data_seed: 7,
                target_loss: 1e-3,
                enforce: true,
                kappa: 0.01,
                enforce_lambda: 0.01,
                eta: 524_288.0,
            },
        };
        match kind {
            ExperimentKind::Tsp => c.qtz_eta0 = 32,
            ExperimentKind::Bench => c.budget = 100_000,
            ExperimentKind::Washboard => {
                c.budget = 100_000;
                c.seeds = (0..100).collect();
                c.qia_form = AdiabaticForm::Linear;
                c.qia_t_final = Some(1000);
            }
            ExperimentKind::Gradopt | ExperimentKind::Mltoy => c.seeds = (0..3).collect(),
            ExperimentKind::Theory => c.seeds = vec![0],
        }
        c
    }

    /// Sets one dotted key. Unknown keys and unparsable values are errors
    /// naming the key.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let v = v.trim();
        match key {
            "kind" => {
                let k: ExperimentKind = v.parse()?;
                if k != self.kind {
                    return bad(key, format!("config is for `{}`, not `{k}`", self.kind));
                }
            }
            "algos" => self.algos = parse_list(key, v)?,
            "trials" => self.seeds = (0..parse::<u64>(key, v)?).collect(),
            "seeds" => self.seeds = parse_list(key, v)?,
            "budget" => self.budget = parse(key, v)?,
            "gap" => self.gap = parse(key, v)?,
            "trace" => self.trace = parse_bool(key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "proposal" => self.proposal = parse(key, v)?,
            "tsp.cities" => self.tsp.cities = parse(key, v)?,
            "tsp.side" => self.tsp.side = parse(key, v)?,
            "tsp.instance_seed" => self.tsp.instance_seed = parse(key, v)?,
            "tsp.instance" => self.tsp.instance = Some(PathBuf::from(v)),
            "tsp.neighborhood" => self.tsp.neighborhood = parse(key, v)?,
            "tsp.start_city" => self.tsp.start_city = parse(key, v)?,
            "bench.function" => self.bench.function = v.to_string(),
            "bench.dim" => self.bench.dim = Some(parse(key, v)?),
            "washboard.alpha" => self.washboard_alpha = parse(key, v)?,
            "qtz.base" => self.qtz_base = parse(key, v)?,
            "qtz.eta0" => self.qtz_eta0 = parse(key, v)?,
            "sa.t0" => self.sa_t0 = parse(key, v)?,
            "sa.alpha" => self.sa_alpha = parse(key, v)?,
            "qia.t0" => self.qia_t0 = parse(key, v)?,
            "qia.alpha" => self.qia_alpha = parse(key, v)?,
            "qia.t_final" => {
                self.qia_t_final = if v == "budget" { None } else { Some(parse(key, v)?) }
            }
            "qia.form" => self.qia_form = parse(key, v)?,
            "gradopt.function" => self.gradopt.function = v.to_string(),
            "gradopt.dim" => self.gradopt.dim = Some(parse(key, v)?),
            "gradopt.methods" => self.gradopt.methods = parse_list(key, v)?,
            "gradopt.quantized" => self.gradopt.quantized = parse_bool(key, v)?,
            "gradopt.max_iter" => self.gradopt.max_iter = parse(key, v)?,
            "gradopt.gtol" => self.gradopt.gtol = parse(key, v)?,
            "gradopt.start" => {
                self.gradopt.start = if v == "random" { None } else { Some(parse_list(key, v)?) }
            }
            "mltoy.optimizers" => self.mltoy.optimizers = parse_list(key, v)?,
            "mltoy.lambda" => self.mltoy.lambda = parse(key, v)?,
            "mltoy.steps" => self.mltoy.steps = parse(key, v)?,
            "mltoy.batch" => self.mltoy.batch = parse(key, v)?,
            "mltoy.dim" => self.mltoy.dim = parse(key, v)?,
            "mltoy.rows" => self.mltoy.rows = parse(key, v)?,
            "mltoy.cond" => self.mltoy.cond = parse(key, v)?,
            "mltoy.data_seed" => self.mltoy.data_seed = parse(key, v)?,
            "mltoy.target_loss" => self.mltoy.target_loss = parse(key, v)?,
            "mltoy.enforce" => self.mltoy.enforce = parse_bool(key, v)?,
            "mltoy.kappa" => self.mltoy.kappa = parse(key, v)?,
            "mltoy.enforce_lambda" => self.mltoy.enforce_lambda = parse(key, v)?,
            "mltoy.eta" => self.mltoy.eta = parse(key, v)?,
            _ => return bad(key, "unknown key"),
        }
        Ok(())
    }

    /// Applies `key = value` lines. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => self.set(k.trim(), v)?,
                None => return bad(&format!("line {}", n + 1), format!("expected `key = value`, got `{line}`")),
            }
        }
        Ok(())
    }

    /// Reads a config file. The `kind` key, if present, must be the first
    /// setting or agree with `default_kind`.
    pub fn from_text(text: &str, default_kind: Option<ExperimentKind>) -> Result<Self> {
        let kind = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter_map(|l| l.split_once('='))
            .find(|(k, _)| k.trim() == "kind")
            .map(|(_, v)| v.trim().parse())
            .transpose()?
            .or(default_kind);
        let Some(kind) = kind else {
            return bad("kind", "missing experiment kind");
        };
        let mut c = Self::new(kind);
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>, default_kind: Option<ExperimentKind>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?, default_kind)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return bad("seeds", "at least one seed is required");
        }
        if self.budget == 0 {
            return bad("budget", "must be at least 1");
        }
        if self.algos.is_empty() && matches!(self.kind, ExperimentKind::Tsp | ExperimentKind::Bench | ExperimentKind::Washboard) {
            return bad("algos", "at least one algorithm is required");
        }
        if !(self.gap >= 0.0) {
            return bad("gap", "must be non-negative");
        }
        if self.qtz_base < 2 {
            return bad("qtz.base", "must be at least 2");
        }
        if self.qtz_eta0 == 0 {
            return bad("qtz.eta0", "must be positive");
        }
        if self.tsp.cities < 4 {
            return bad("tsp.cities", "need at least 4 cities");
        }
        if self.gradopt.methods.is_empty() && self.kind == ExperimentKind::Gradopt {
            return bad("gradopt.methods", "at least one method is required");
        }
        if self.mltoy.optimizers.is_empty() && self.kind == ExperimentKind::Mltoy {
            return bad("mltoy.optimizers", "at least one optimizer is required");
        }
        Ok(())
    }

    /// Every key with its current value, in [`KEYS`] order.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("kind", self.kind.to_string());
        put("algos", join(&self.algos));
        put("seeds", join(&self.seeds));
        put("budget", self.budget.to_string());
        put("gap", self.gap.to_string());
        put("trace", self.trace.to_string());
        put("out", opt(self.out.as_ref().map(|p| p.display().to_string())));
        put("proposal", proposal_text(self.proposal));
        put("tsp.cities", self.tsp.cities.to_string());
        put("tsp.side", self.tsp.side.to_string());
        put("tsp.instance_seed", self.tsp.instance_seed.to_string());
        put("tsp.instance", opt(self.tsp.instance.as_ref().map(|p| p.display().to_string())));
        put("tsp.neighborhood", neighborhood_text(self.tsp.neighborhood).into());
        put("tsp.start_city", self.tsp.start_city.to_string());
        put("bench.function", self.bench.function.clone());
        put("bench.dim", opt(self.bench.dim.map(|d| d.to_string())));
        put("washboard.alpha", self.washboard_alpha.to_string());
        put("qtz.base", self.qtz_base.to_string());
        put("qtz.eta0", self.qtz_eta0.to_string());
        put("sa.t0", self.sa_t0.to_string());
        put("sa.alpha", self.sa_alpha.to_string());
        put("qia.t0", self.qia_t0.to_string());
        put("qia.alpha", self.qia_alpha.to_string());
        put("qia.t_final", self.qia_t_final.map_or("budget".into(), |t| t.to_string()));
        put("qia.form", form_text(self.qia_form).into());
        put("gradopt.function", self.gradopt.function.clone());
        put("gradopt.dim", opt(self.gradopt.dim.map(|d| d.to_string())));
        put("gradopt.methods", self.gradopt.methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(","));
        put("gradopt.quantized", self.gradopt.quantized.to_string());
        put("gradopt.max_iter", self.gradopt.max_iter.to_string());
        put("gradopt.gtol", self.gradopt.gtol.to_string());
        put("gradopt.start", self.gradopt.start.as_ref().map_or("random".into(), |s| join(s)));
        put("mltoy.optimizers", self.mltoy.optimizers.iter().map(|o| o.name()).collect::<Vec<_>>().join(","));
        put("mltoy.lambda", self.mltoy.lambda.to_string());
        put("mltoy.steps", self.mltoy.steps.to_string());
        put("mltoy.batch", self.mltoy.batch.to_string());
        put("mltoy.dim", self.mltoy.dim.to_string());
        put("mltoy.rows", self.mltoy.rows.to_string());
        put("mltoy.cond", self.mltoy.cond.to_string());
        put("mltoy.data_seed", self.mltoy.data_seed.to_string());
        put("mltoy.target_loss", self.mltoy.target_loss.to_string());
        put("mltoy.enforce", self.mltoy.enforce.to_string());
        put("mltoy.kappa", self.mltoy.kappa.to_string());
        put("mltoy.enforce_lambda", self.mltoy.enforce_lambda.to_string());
        put("mltoy.eta", self.mltoy.eta.to_string());
        m
    }

    /// Config file text that [`from_text`](Self::from_text) reads back to an
    /// equal config.
    pub fn to_text(&self) -> String {
        let m = self.to_map();
        let mut s = String::new();
        for k in KEYS.iter().filter(|k| **k != "trials") {
            let v = &m[*k];
            if v.is_empty() {
                continue;
            }
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }
}

fn proposal_text(p: Proposal) -> String {
    match p {
        Proposal::Global => "global".into(),
        Proposal::Window { frac } => format!("window:{frac}"),
    }
}

fn neighborhood_text(n: Neighborhood) -> &'static str {
    match n {
        Neighborhood::Swap => "swap",
        Neighborhood::TwoOpt => "two_opt",
    }
}

fn form_text(f: AdiabaticForm) -> &'static str {
    match f {
        AdiabaticForm::Sqrt => "sqrt",
        AdiabaticForm::Linear => "linear",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_named() {
        let mut c = ExperimentConfig::new(ExperimentKind::Tsp);
        match c.set("sa.alpah", "0.9") {
            Err(Error::Config { key, .. }) => assert_eq!(key, "sa.alpah"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(c.set("budget", "lots"), Err(Error::Config { .. })));
    }

    #[test]
    fn text_round_trip() {
        let text = "kind = tsp\n# comment\ntrials = 4\nsa.alpha = 0.999  # inline\nalgos = qtz,sa\nqia.t_final = 500\n";
        let c = ExperimentConfig::from_text(text, None).unwrap();
        assert_eq!(c.seeds, vec![0, 1, 2, 3]);
        assert_eq!(c.sa_alpha, 0.999);
        assert_eq!(c.algos, vec![Algorithm::Qtz, Algorithm::Sa]);
        assert_eq!(c.qia_t_final, Some(500));
        let back = ExperimentConfig::from_text(&c.to_text(), None).unwrap();
        assert_eq!(back, c);
        let w = ExperimentConfig::new(ExperimentKind::Mltoy);
        assert_eq!(ExperimentConfig::from_text(&w.to_text(), None).unwrap(), w);
    }

    #[test]
    fn every_key_settable() {
        let c = ExperimentConfig::new(ExperimentKind::Gradopt);
        let m = c.to_map();
        for k in KEYS {
            if *k == "trials" {
                continue;
            }
            let mut d = c.clone();
            let v = &m[*k];
            if v.is_empty() {
                continue;
            }
            d.set(k, v).unwrap_or_else(|e| panic!("{k} = {v}: {e}"));
            assert_eq!(d, c, "{k}");
        }
    }
}
