use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// `(baseline − value)/baseline·100`.
pub fn improvement_ratio(baseline: f64, value: f64) -> f64 {
    (baseline - value) / baseline * 100.0
}

/// Neumaier-compensated sum.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

pub fn mean(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return domain("mean of an empty sample");
    }
    Ok(compensated_sum(xs.iter().copied()) / xs.len() as f64)
}

/// Two-pass sample standard deviation (`n − 1` denominator); 0 for `n = 1`.
pub fn sample_stddev(xs: &[f64]) -> Result<f64> {
    let m = mean(xs)?;
    if xs.len() == 1 {
        return Ok(0.0);
    }
    let ss = compensated_sum(xs.iter().map(|x| (x - m) * (x - m)));
    Ok((ss / (xs.len() - 1) as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub baseline: String,
    pub baseline_mean: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub label: String,
    pub n_trials: usize,
    pub mean: f64,
    pub stddev: f64,
    /// True when `n_trials == 1` and the stddev is a placeholder 0.
    pub single: bool,
    pub min: f64,
    pub max: f64,
    pub ratios: Vec<Ratio>,
}

/// Mean, spread and improvement ratios of `values` against each named
/// baseline mean.
pub fn summarize(label: &str, values: &[f64], baselines: &[(String, f64)]) -> Result<TrialStats> {
    let m = mean(values)?;
    Ok(TrialStats {
        label: label.to_string(),
        n_trials: values.len(),
        mean: m,
        stddev: sample_stddev(values)?,
        single: values.len() == 1,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ratios: baselines
            .iter()
            .map(|(name, b)| Ratio {
                baseline: name.clone(),
                baseline_mean: *b,
                ratio: improvement_ratio(*b, m),
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook() {
        let s = summarize("x", &[1.0, 2.0, 3.0], &[]).unwrap();
        assert_eq!((s.mean, s.stddev), (2.0, 1.0));
        let s = summarize("x", &[4.5; 7], &[]).unwrap();
        assert_eq!(s.stddev, 0.0);
        let s = summarize("x", &[4.5], &[]).unwrap();
        assert!(s.single && s.stddev == 0.0);
        assert!(summarize("x", &[], &[]).is_err());
    }

    #[test]
    fn table_ratios() {
        assert!((improvement_ratio(1732.16, 1691.76) - 2.33).abs() < 5e-3);
        assert!((improvement_ratio(2159.27, 1691.76) - 21.65).abs() < 5e-3);
    }
}
