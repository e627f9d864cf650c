//! `summary.csv`, `trace_<label>_<seed>.csv` and `summary.json`.
//!
//! `summary.csv` columns for search, gradient and ML experiments:
//! `algorithm, n_trials, mean, stddev, min, max, mean_initial,
//! ratio_vs_initial, ratio_vs_<label>…, hits, mean_first_hit, mean_iterations`,
//! with one `ratio_vs_<label>` per label in the experiment, in config order
//! (empty on the label's own row). The theory experiment writes
//! `diagnostic, value, expected, abs_error, pass`. Wall time only appears in
//! the JSON.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentKind;
use super::runner::{Diagnostic, ExperimentOutput, Trace, TrialRecord};
use crate::error::Result;

pub const SUMMARY_SCHEMA: &str = include_str!("../../schema/summary.schema.json");

fn num(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        String::new()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LabelSummary {
    pub algorithm: String,
    pub n_trials: usize,
    pub mean: f64,
    pub stddev: f64,
    pub single_trial: bool,
    pub min: f64,
    pub max: f64,
    pub mean_initial: f64,
    pub ratio_vs_initial: f64,
    pub ratios: BTreeMap<String, f64>,
    pub hits: usize,
    pub mean_first_hit: Option<f64>,
    pub mean_iterations: f64,
}

pub fn label_summaries(out: &ExperimentOutput) -> Vec<LabelSummary> {
    out.stats
        .iter()
        .map(|s| {
            let recs: Vec<&TrialRecord> = out.records_for(&s.label).collect();
            let hits: Vec<f64> = recs.iter().filter_map(|r| r.first_hit).map(|h| h as f64).collect();
            let init = s.ratios.iter().find(|r| r.baseline == "initial");
            LabelSummary {
                algorithm: s.label.clone(),
                n_trials: s.n_trials,
                mean: s.mean,
                stddev: s.stddev,
                single_trial: s.single,
                min: s.min,
                max: s.max,
                mean_initial: init.map_or(f64::NAN, |r| r.baseline_mean),
                ratio_vs_initial: init.map_or(f64::NAN, |r| r.ratio),
                ratios: s
                    .ratios
                    .iter()
                    .filter(|r| r.baseline != "initial")
                    .map(|r| (r.baseline.clone(), r.ratio))
                    .collect(),
                hits: hits.len(),
                mean_first_hit: (!hits.is_empty()).then(|| hits.iter().sum::<f64>() / hits.len() as f64),
                mean_iterations: recs.iter().map(|r| r.iterations as f64).sum::<f64>() / recs.len().max(1) as f64,
            }
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(out: &ExperimentOutput, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    if out.config.kind == ExperimentKind::Theory {
        wr.write_record(["diagnostic", "value", "expected", "abs_error", "pass"])?;
        for d in &out.diagnostics {
            wr.write_record([d.name.clone(), num(d.value), num(d.expected), num(d.abs_error), d.pass.to_string()])?;
        }
        wr.flush()?;
        return Ok(());
    }
    let mut header: Vec<String> = [
        "algorithm",
        "n_trials",
        "mean",
        "stddev",
        "min",
        "max",
        "mean_initial",
        "ratio_vs_initial",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(out.labels.iter().map(|l| format!("ratio_vs_{l}")));
    header.extend(["hits", "mean_first_hit", "mean_iterations"].iter().map(|s| s.to_string()));
    wr.write_record(&header)?;
    for s in label_summaries(out) {
        let mut row = vec![
            s.algorithm.clone(),
            s.n_trials.to_string(),
            num(s.mean),
            num(s.stddev),
            num(s.min),
            num(s.max),
            num(s.mean_initial),
            num(s.ratio_vs_initial),
        ];
        row.extend(out.labels.iter().map(|l| s.ratios.get(l).map_or(String::new(), |r| num(*r))));
        row.push(s.hits.to_string());
        row.push(s.mean_first_hit.map_or(String::new(), num));
        row.push(num(s.mean_iterations));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_trace_csv<W: Write>(t: &Trace, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["tau", "f", "f_opt", "qp_or_T", "accepted"])?;
    for r in &t.rows {
        wr.write_record([
            r.tau.to_string(),
            num(r.f),
            num(r.f_opt),
            r.qp_or_t.map_or(String::new(), num),
            u8::from(r.accepted).to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Reference<'a> {
    name: &'a str,
    value: f64,
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    kind: ExperimentKind,
    config: BTreeMap<String, String>,
    labels: &'a [String],
    reference: Option<Reference<'a>>,
    target: Option<f64>,
    algorithms: Vec<LabelSummary>,
    trials: &'a [TrialRecord],
    diagnostics: &'a [Diagnostic],
}

pub fn summary_json(out: &ExperimentOutput) -> Result<String> {
    let s = SummaryJson {
        kind: out.config.kind,
        config: out.config.to_map(),
        labels: &out.labels,
        reference: out.reference.as_ref().map(|(n, v)| Reference { name: n, value: *v }),
        target: out.target,
        algorithms: label_summaries(out),
        trials: &out.records,
        diagnostics: &out.diagnostics,
    };
    Ok(serde_json::to_string_pretty(&s)?)
}

/// Writes every output file into `dir` and returns their paths.
pub fn write_outputs(out: &ExperimentOutput, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    let p = dir.join("summary.csv");
    write_summary_csv(out, fs::File::create(&p)?)?;
    paths.push(p);
    let p = dir.join("summary.json");
    fs::write(&p, summary_json(out)? + "\n")?;
    paths.push(p);
    let p = dir.join("config.txt");
    fs::write(&p, out.config.to_text())?;
    paths.push(p);
    for t in &out.traces {
        let p = dir.join(format!("trace_{}_{}.csv", t.label, t.seed));
        write_trace_csv(t, fs::File::create(&p)?)?;
        paths.push(p);
    }
    Ok(paths)
}

/// Plain-text table for the terminal.
pub fn render_table(out: &ExperimentOutput) -> String {
    let mut s = String::new();
    if out.config.kind == ExperimentKind::Theory {
        s.push_str(&format!("{:<48} {:>14} {:>14} {:>10}  pass\n", "diagnostic", "value", "expected", "abs_err"));
        for d in &out.diagnostics {
            s.push_str(&format!(
                "{:<48} {:>14.8} {:>14.8} {:>10.2e}  {}\n",
                d.name, d.value, d.expected, d.abs_error, d.pass
            ));
        }
        return s;
    }
    if let Some((n, v)) = &out.reference {
        s.push_str(&format!("{n}: {v:.4}\n"));
    }
    if let Some(t) = out.target {
        s.push_str(&format!("target: {t:.6}\n"));
    }
    s.push_str(&format!(
        "{:<10} {:>4} {:>14} {:>12} {:>10} {:>6} {:>12}\n",
        "algorithm", "n", "mean", "stddev", "ratio%", "hits", "first_hit"
    ));
    for l in label_summaries(out) {
        s.push_str(&format!(
            "{:<10} {:>4} {:>14.6} {:>12.6} {:>10.3} {:>6} {:>12}\n",
            l.algorithm,
            l.n_trials,
            l.mean,
            l.stddev,
            l.ratio_vs_initial,
            l.hits,
            l.mean_first_hit.map_or("-".to_string(), |h| format!("{h:.0}"))
        ));
    }
    s
}
