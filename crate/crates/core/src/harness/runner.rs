use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::stats::{summarize, TrialStats};
use crate::benchfns::{by_name, washboard_fn, washboard_min, BenchmarkFn};
use crate::error::{Error, Result};
use crate::gradopt::{
    langevin_step, minimize, run_ml, EnforcementConfig, LeastSquares, Method, MinimizeConfig, MlRunConfig,
    Resolution,
};
use crate::metaheur::{
    run, AlgoParams, Algorithm, ContinuousProblem, QiaConfig, QtzConfig, RunRecord, SearchConfig, SearchProblem,
    TraceRow, TspProblem,
};
use crate::schedule::{CoolingSchedule, LogLogPowerSchedule};
use crate::theory;
use crate::tsp::{generate_instance, TspInstance};

/// Outcome of one (label, seed) trial, shared by every experiment kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub label: String,
    pub seed: u64,
    pub initial_f: f64,
    pub final_f: f64,
    pub best_f: f64,
    pub iterations: u64,
    pub evals: u64,
    pub first_hit: Option<u64>,
    pub stop: String,
    pub monotone: Option<bool>,
    pub saturated_at: Option<u64>,
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub tau: u64,
    pub f: f64,
    pub f_opt: f64,
    /// `Qp` for quantized runs, temperature for the annealers.
    pub qp_or_t: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub label: String,
    pub seed: u64,
    pub rows: Vec<TraceLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub abs_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    /// Labels in output order.
    pub labels: Vec<String>,
    /// Common starting cost (nearest-neighbor tour for TSP).
    pub reference: Option<(String, f64)>,
    /// Value used for gap-based stopping.
    pub target: Option<f64>,
    pub records: Vec<TrialRecord>,
    pub traces: Vec<Trace>,
    pub stats: Vec<TrialStats>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ExperimentOutput {
    pub fn records_for<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a TrialRecord> + 'a {
        self.records.iter().filter(move |r| r.label == label)
    }

    pub fn stats_for(&self, label: &str) -> Option<&TrialStats> {
        self.stats.iter().find(|s| s.label == label)
    }
}

/// Worker count from `QTZOPT_THREADS`; 0 lets rayon decide.
pub fn thread_count() -> Result<usize> {
    match std::env::var("QTZOPT_THREADS") {
        Ok(v) if !v.trim().is_empty() => v.trim().parse().map_err(|_| Error::Config {
            key: "QTZOPT_THREADS".into(),
            msg: format!("expected a worker count, got `{v}`"),
        }),
        _ => Ok(0),
    }
}

fn pool() -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| Error::Config { key: "QTZOPT_THREADS".into(), msg: e.to_string() })
}

fn search_config(cfg: &ExperimentConfig) -> SearchConfig {
    SearchConfig { max_iter: cfg.budget, gap: cfg.gap, record_trace: cfg.trace }
}

pub fn algo_params(cfg: &ExperimentConfig) -> Result<AlgoParams> {
    Ok(AlgoParams {
        qtz: QtzConfig { base: cfg.qtz_base, eta0: cfg.qtz_eta0 },
        sa: CoolingSchedule::new(cfg.sa_t0, cfg.sa_alpha)?,
        qia: QiaConfig {
            cooling: CoolingSchedule::new(cfg.qia_t0, cfg.qia_alpha)?,
            t_final: cfg.qia_t_final.unwrap_or(cfg.budget).max(1),
            form: cfg.qia_form,
        },
    })
}

pub fn tsp_instance(cfg: &ExperimentConfig) -> Result<TspInstance> {
    match &cfg.tsp.instance {
        Some(p) => TspInstance::load(p),
        None => generate_instance(cfg.tsp.cities, cfg.tsp.side, cfg.tsp.instance_seed),
    }
}

fn trial_from_run<S>(r: RunRecord<S>) -> (TrialRecord, Vec<TraceLine>) {
    let rows = r
        .trace
        .iter()
        .map(|t: &TraceRow| TraceLine {
            tau: t.tau,
            f: t.f,
            f_opt: t.f_opt,
            qp_or_t: Some(t.level),
            accepted: t.accepted,
        })
        .collect();
    let stop = serde_json::to_value(r.stop)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default();
    (
        TrialRecord {
            label: r.algorithm.name().to_string(),
            seed: r.seed,
            initial_f: r.initial_f,
            final_f: r.final_f,
            best_f: r.best_f,
            iterations: r.iterations,
            evals: r.evals,
            first_hit: r.first_hit,
            stop,
            monotone: Some(r.monotone),
            saturated_at: r.saturated_at,
            wall_time: r.wall_time,
        },
        rows,
    )
}

fn run_search<P: SearchProblem>(
    cfg: &ExperimentConfig,
    p: &P,
) -> Result<Vec<(TrialRecord, Vec<TraceLine>)>> {
    let params = algo_params(cfg)?;
    let sc = search_config(cfg);
    let tasks: Vec<(Algorithm, u64)> = cfg
        .algos
        .iter()
        .flat_map(|a| cfg.seeds.iter().map(move |s| (*a, *s)))
        .collect();
    pool()?.install(|| {
        tasks
            .par_iter()
            .map(|(a, s)| run(*a, p, &params, &sc, *s).map(trial_from_run))
            .collect()
    })
}

/// Target for benchmark runs: the stated optimum when one is given, else the
/// grid oracle.
pub fn bench_function(cfg: &ExperimentConfig) -> Result<(BenchmarkFn, f64)> {
    let f = by_name(&cfg.bench.function, cfg.bench.dim)?;
    let t = f.target()?;
    Ok((f, t))
}

/// Success radius for gradient runs: within 1e−2 of the stated optimum point
/// in the max norm, or within `gap` of the stated optimum value.
pub const SUCCESS_RADIUS: f64 = 1e-2;

pub fn gradopt_success(f: &BenchmarkFn, x: &[f64], fx: f64, gap: f64) -> bool {
    let near = f
        .optimum_point
        .as_ref()
        .is_some_and(|p| p.iter().zip(x).all(|(a, b)| (a - b).abs() <= SUCCESS_RADIUS));
    near || f.optimum_value.is_some_and(|t| fx - t <= gap)
}

fn grad_trial(
    f: &BenchmarkFn,
    method: Method,
    quantized: bool,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(TrialRecord, Vec<TraceLine>)> {
    let start = Instant::now();
    let x0 = match &cfg.gradopt.start {
        Some(x) => x.clone(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            f.domain.iter().map(|&(lo, hi)| lo + (hi - lo) * rng.gen::<f64>()).collect()
        }
    };
    let f0 = f.eval(&x0);
    let mut mc = MinimizeConfig::new(method);
    mc.max_iter = cfg.gradopt.max_iter;
    mc.gtol = cfg.gradopt.gtol;
    mc.keep_steps = true;
    if quantized {
        mc.quantized = Some(Resolution::default());
    }
    let x0_copy = x0.clone();
    let res = minimize(f, x0, &mc)?;
    let mut best = f0;
    let mut monotone = true;
    let mut x = x0_copy;
    let mut first_hit = gradopt_success(f, &x, f0, cfg.gap).then_some(0);
    let mut rows = Vec::with_capacity(res.steps.len());
    let mut values: Vec<f64> = res.steps.iter().skip(1).map(|s| s.f_before).collect();
    values.push(res.f);
    for (rec, fv) in res.steps.iter().zip(&values) {
        if *fv > best {
            monotone = false;
        }
        best = best.min(*fv);
        x.iter_mut().zip(&rec.taken).for_each(|(xi, d)| *xi += d);
        if first_hit.is_none() && gradopt_success(f, &x, *fv, cfg.gap) {
            first_hit = Some(rec.k + 1);
        }
        rows.push(TraceLine {
            tau: rec.k + 1,
            f: *fv,
            f_opt: best,
            qp_or_t: rec.qbar.map(|q| q * q),
            accepted: rec.taken.iter().any(|v| *v != 0.0),
        });
    }
    let label = if quantized { format!("{}_q", method.name()) } else { method.name().to_string() };
    let stop = serde_json::to_value(res.termination)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default();
    Ok((
        TrialRecord {
            label,
            seed,
            initial_f: f0,
            final_f: res.f,
            best_f: best,
            iterations: res.iterations,
            evals: res.evals as u64,
            first_hit,
            stop,
            monotone: Some(monotone),
            saturated_at: None,
            wall_time: start.elapsed().as_secs_f64(),
        },
        if cfg.trace { rows } else { Vec::new() },
    ))
}

fn ml_config(cfg: &ExperimentConfig, opt: crate::gradopt::MlOptimizer) -> MlRunConfig {
    let m = &cfg.mltoy;
    MlRunConfig {
        optimizer: opt,
        lambda: m.lambda,
        steps: m.steps,
        batch: m.batch,
        target_loss: m.target_loss,
        enforcement: m.enforce.then_some(EnforcementConfig {
            lambda: m.enforce_lambda,
            kappa: m.kappa,
            tau0: 0,
        }),
        schedule: LogLogPowerSchedule { eta: m.eta, ..Default::default() },
    }
}

fn diag(name: &str, value: f64, expected: f64, tol: f64) -> Diagnostic {
    let abs_error = (value - expected).abs();
    Diagnostic { name: name.into(), value, expected, abs_error, pass: abs_error <= tol }
}

/// Theory checks at the reference points, plus fuzzed bounds driven by the
/// first seed.
pub fn theory_diagnostics(seed: u64) -> Result<Vec<Diagnostic>> {
    let mut out = Vec::new();
    out.push(diag(
        "adiabatic_residual(5.8125,b=2,t=2)",
        theory::adiabatic_residual(5.8125, 2, 2)?,
        0.140625,
        0.0,
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let f = 100.0 * rng.gen::<f64>();
        let b = [2u32, 3, 10][rng.gen_range(0..3)];
        let t = rng.gen_range(1..=20u32);
        let r = theory::adiabatic_residual(f, b, t)?;
        worst = worst.max(r.abs() * (b as f64).powi(t as i32));
    }
    out.push(Diagnostic {
        name: "adiabatic_residual max |res|·b^t (1e5 cases)".into(),
        value: worst,
        expected: 1.0,
        abs_error: 0.0,
        pass: worst < 1.0,
    });
    let (c, r) = theory::sup_limit_checked(1.0, 0.3, 3)?;
    out.push(diag("sup_limit(1,0.3,b=3)", c, 1.025, 1e-12));
    out.push(diag("sup_recursion(1,0.3,b=3) after 60 steps", r, c, 1e-12));
    out.push(diag("sup_limit(1.5,0.25,b=2)", theory::sup_limit(1.5, 0.25, 2)?, 1.5, 0.0));
    let p = theory::TunnelingParams { hbar: 1.0, mass: 0.5, v0: 1.0, e: 1.0, width: 1.0 };
    out.push(diag("tunneling_factor(v0=e)", theory::tunneling_factor(&p)?, 1.0, 0.0));
    let p = theory::TunnelingParams { v0: 2.0, ..p };
    out.push(diag("tunneling_factor(hbar=1,m=0.5,dV=1,D=1)", theory::tunneling_factor(&p)?, (-2f64).exp(), 1e-12));
    let (lo, hi) = theory::two_level_eigs(0.0, 0.0, 2.0);
    out.push(diag("two_level_eigs(0,0,2) lower", lo, -1.0, 1e-12));
    out.push(diag("two_level_eigs(0,0,2) upper", hi, 1.0, 1e-12));
    let (eta, qp, n) = (0.01, 64.0, 1_000_000usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ss = 0.0;
    for _ in 0..n {
        let y = langevin_step(&[0.0], &[0.0], eta, qp, &mut rng)[0];
        ss += y * y;
    }
    let expected = 2.0 * eta / qp;
    out.push(diag("langevin noise variance (1e6 steps)", ss / n as f64, expected, 0.01 * expected));
    Ok(out)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut reference = None;
    let mut target = None;
    let mut diagnostics = Vec::new();
    let mut labels: Vec<String> = cfg.algos.iter().map(|a| a.name().to_string()).collect();
    let results = match cfg.kind {
        ExperimentKind::Tsp => {
            let p = TspProblem::new(tsp_instance(cfg)?, cfg.tsp.neighborhood, cfg.tsp.start_city)?;
            reference = Some(("nn".to_string(), p.start.cost));
            run_search(cfg, &p)?
        }
        ExperimentKind::Bench => {
            let (f, t) = bench_function(cfg)?;
            target = Some(t);
            let p = ContinuousProblem::new(f, cfg.proposal).with_target(Some(t));
            run_search(cfg, &p)?
        }
        ExperimentKind::Washboard => {
            let f = washboard_fn(cfg.washboard_alpha);
            let t = washboard_min(cfg.washboard_alpha).1;
            target = Some(t);
            let p = ContinuousProblem::new(f, cfg.proposal).with_target(Some(t));
            run_search(cfg, &p)?
        }
        ExperimentKind::Gradopt => {
            let f = by_name(&cfg.gradopt.function, cfg.gradopt.dim)?;
            target = f.optimum_value;
            let mut variants = Vec::new();
            labels.clear();
            for m in &cfg.gradopt.methods {
                variants.push((*m, false));
                labels.push(m.name().to_string());
                if cfg.gradopt.quantized {
                    variants.push((*m, true));
                    labels.push(format!("{}_q", m.name()));
                }
            }
            let tasks: Vec<((Method, bool), u64)> = variants
                .iter()
                .flat_map(|v| cfg.seeds.iter().map(move |s| (*v, *s)))
                .collect();
            pool()?.install(|| {
                tasks
                    .par_iter()
                    .map(|((m, q), s)| grad_trial(&f, *m, *q, cfg, *s))
                    .collect::<Result<Vec<_>>>()
            })?
        }
        ExperimentKind::Mltoy => {
            let m = &cfg.mltoy;
            let p = LeastSquares::synthetic(m.dim, m.rows, m.cond, m.data_seed)?;
            target = Some(m.target_loss);
            labels = m.optimizers.iter().map(|o| o.name().to_string()).collect();
            let f0 = p.loss(&vec![0.0; p.dim()]);
            let tasks: Vec<_> = m
                .optimizers
                .iter()
                .flat_map(|o| cfg.seeds.iter().map(move |s| (*o, *s)))
                .collect();
            pool()?.install(|| {
                tasks
                    .par_iter()
                    .map(|(o, s)| {
                        let start = Instant::now();
                        let r = run_ml(&p, &ml_config(cfg, *o), *s);
                        (
                            TrialRecord {
                                label: o.name().to_string(),
                                seed: *s,
                                initial_f: f0,
                                final_f: r.final_loss,
                                best_f: r.final_loss,
                                iterations: m.steps,
                                evals: m.steps * m.batch as u64,
                                first_hit: r.hit_step,
                                stop: "budget".into(),
                                monotone: None,
                                saturated_at: None,
                                wall_time: start.elapsed().as_secs_f64(),
                            },
                            Vec::new(),
                        )
                    })
                    .collect()
            })
        }
        ExperimentKind::Theory => {
            labels.clear();
            diagnostics = theory_diagnostics(cfg.seeds[0])?;
            Vec::new()
        }
    };
    let mut records = Vec::with_capacity(results.len());
    let mut traces = Vec::new();
    for (rec, rows) in results {
        if cfg.trace && !rows.is_empty() {
            traces.push(Trace { label: rec.label.clone(), seed: rec.seed, rows });
        }
        records.push(rec);
    }
    let means: Vec<(String, f64)> = labels
        .iter()
        .map(|l| {
            let v: Vec<f64> = records.iter().filter(|r| &r.label == l).map(|r| r.final_f).collect();
            super::stats::mean(&v).map(|m| (l.clone(), m))
        })
        .collect::<Result<_>>()?;
    let mut stats = Vec::with_capacity(labels.len());
    for l in &labels {
        let v: Vec<f64> = records.iter().filter(|r| &r.label == l).map(|r| r.final_f).collect();
        let init: Vec<f64> = records.iter().filter(|r| &r.label == l).map(|r| r.initial_f).collect();
        let mut baselines = vec![("initial".to_string(), super::stats::mean(&init)?)];
        baselines.extend(means.iter().filter(|(n, _)| n != l).cloned());
        stats.push(summarize(l, &v, &baselines)?);
    }
    Ok(ExperimentOutput {
        config: cfg.clone(),
        labels,
        reference,
        target,
        records,
        traces,
        stats,
        diagnostics,
    })
}
