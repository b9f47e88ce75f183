//! Linear step-up (Benjamini-Hochberg) and step-down procedures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A realized vector of p-values with true/false-null labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueSample {
    pvalues: Vec<f64>,
    is_true_null: Vec<bool>,
    n0: usize,
}

impl PValueSample {
    pub fn new(pvalues: Vec<f64>, is_true_null: Vec<bool>) -> Result<Self> {
        if pvalues.len() != is_true_null.len() {
            return Err(Error::domain(format!(
                "{} p-values but {} labels",
                pvalues.len(),
                is_true_null.len()
            )));
        }
        if let Some(bad) = pvalues.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::domain(format!("p-value {bad} outside [0, 1]")));
        }
        let n0 = is_true_null.iter().filter(|&&b| b).count();
        Ok(PValueSample { pvalues, is_true_null, n0 })
    }

    /// All hypotheses true.
    pub fn all_null(pvalues: Vec<f64>) -> Result<Self> {
        let labels = vec![true; pvalues.len()];
        PValueSample::new(pvalues, labels)
    }

    pub fn pvalues(&self) -> &[f64] {
        &self.pvalues
    }

    pub fn is_true_null(&self) -> &[bool] {
        &self.is_true_null
    }

    pub fn n(&self) -> usize {
        self.pvalues.len()
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn n1(&self) -> usize {
        self.n() - self.n0
    }
}

/// Outcome of a step-up or step-down run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectionResult {
    /// Number of rejections, R_n.
    pub m: usize,
    /// Number of rejected true nulls, V_n.
    pub v: usize,
    /// Every p-value `<= threshold` is rejected; 0 when nothing is.
    pub threshold: f64,
    pub fdp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Procedure {
    Lsu,
    Lsd,
}

/// The i-th Simes critical value `i alpha / n`. Every comparison in this
/// module goes through here so thresholds and tests round identically.
#[inline]
pub(crate) fn critical(i: usize, alpha: f64, n: usize) -> f64 {
    i as f64 * alpha / n as f64
}

/// Step-up count for a sample made of `zeros` exact zeros followed by the
/// ascending values `sorted`. Only values `<= alpha` can matter, so callers
/// may pass just those.
pub(crate) fn step_up_count(zeros: usize, sorted: &[f64], n: usize, alpha: f64) -> usize {
    for j in (0..sorted.len()).rev() {
        let i = zeros + j + 1;
        if sorted[j] <= critical(i, alpha, n) {
            return i;
        }
    }
    zeros
}

/// Step-down count with the same input convention as [`step_up_count`].
pub(crate) fn step_down_count(zeros: usize, sorted: &[f64], n: usize, alpha: f64) -> usize {
    for (j, &p) in sorted.iter().enumerate() {
        if p > critical(zeros + j + 1, alpha, n) {
            return zeros + j;
        }
    }
    zeros + sorted.len()
}

fn check(sample: &PValueSample, alpha: f64) -> Result<()> {
    if sample.n() == 0 {
        return Err(Error::domain("empty p-value sample"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Candidates `p <= alpha`, sorted ascending (stable, so ties keep input order).
fn sorted_candidates(sample: &PValueSample, alpha: f64) -> Vec<(f64, bool)> {
    let mut c: Vec<(f64, bool)> = sample
        .pvalues
        .iter()
        .zip(&sample.is_true_null)
        .filter(|(p, _)| **p <= alpha)
        .map(|(&p, &t)| (p, t))
        .collect();
    c.sort_by(|a, b| a.0.total_cmp(&b.0));
    c
}

fn finish(cands: &[(f64, bool)], m: usize, alpha: f64, n: usize) -> RejectionResult {
    let v = cands[..m].iter().filter(|c| c.1).count();
    RejectionResult {
        m,
        v,
        threshold: if m == 0 { 0.0 } else { critical(m, alpha, n) },
        fdp: if m == 0 { 0.0 } else { v as f64 / m as f64 },
    }
}

/// Linear step-up: rejects the `m = max{i : p_(i) <= i alpha / n}` smallest
/// p-values.
pub fn lsu(sample: &PValueSample, alpha: f64) -> Result<RejectionResult> {
    check(sample, alpha)?;
    let cands = sorted_candidates(sample, alpha);
    let ps: Vec<f64> = cands.iter().map(|c| c.0).collect();
    let m = step_up_count(0, &ps, sample.n(), alpha);
    Ok(finish(&cands, m, alpha, sample.n()))
}

/// Linear step-down: rejects while every smaller ordered p-value passes.
pub fn lsd(sample: &PValueSample, alpha: f64) -> Result<RejectionResult> {
    check(sample, alpha)?;
    let cands = sorted_candidates(sample, alpha);
    let ps: Vec<f64> = cands.iter().map(|c| c.0).collect();
    let m = step_down_count(0, &ps, sample.n(), alpha);
    let mut r = finish(&cands, m, alpha, sample.n());
    // the step-down rejection region is {p <= p_(r)}, not {p <= r alpha / n}
    if m > 0 {
        r.threshold = cands[m - 1].0;
    }
    Ok(r)
}

pub fn run_procedure(proc_: Procedure, sample: &PValueSample, alpha: f64) -> Result<RejectionResult> {
    match proc_ {
        Procedure::Lsu => lsu(sample, alpha),
        Procedure::Lsd => lsd(sample, alpha),
    }
}

/// Fraction of `pvalues` that are `<= t`; 0 for an empty slice.
pub fn ecdf(pvalues: &[f64], t: f64) -> f64 {
    if pvalues.is_empty() {
        return 0.0;
    }
    pvalues.iter().filter(|&&p| p <= t).count() as f64 / pvalues.len() as f64
}

/// Largest crossing point of the ecdf with the Simes line, computed without
/// reference to order statistics: the largest grid point `k alpha / n` with
/// `n F_n(k alpha / n) >= k`, or 0.
pub fn largest_crossing_point(pvalues: &[f64], alpha: f64) -> f64 {
    let n = pvalues.len();
    let mut sorted = pvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    for k in (1..=n).rev() {
        let t = critical(k, alpha, n);
        let count = sorted.partition_point(|&p| p <= t);
        if count >= k {
            return t;
        }
    }
    0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(p: &[f64]) -> PValueSample {
        PValueSample::all_null(p.to_vec()).unwrap()
    }

    #[test]
    fn hand_enumerated_example() {
        let s = sample(&[0.01, 0.5, 0.9]);
        let r = lsu(&s, 0.15).unwrap();
        assert_eq!((r.m, r.v), (1, 1));
        assert!((r.threshold - 0.05).abs() < 1e-15);
        assert_eq!(lsd(&s, 0.15).unwrap().m, 1);
    }

    #[test]
    fn step_up_jumps_over_a_failure() {
        // p_(1) fails its critical value but p_(2) passes: LSU rejects 2, LSD 0.
        let s = sample(&[0.06, 0.09, 0.8]);
        assert_eq!(lsu(&s, 0.15).unwrap().m, 2);
        assert_eq!(lsd(&s, 0.15).unwrap().m, 0);
    }

    #[test]
    fn degenerate_samples() {
        let zeros = PValueSample::new(vec![0.0; 4], vec![false; 4]).unwrap();
        let r = lsu(&zeros, 0.05).unwrap();
        assert_eq!((r.m, r.v, r.fdp), (4, 0, 0.0));
        let ones = sample(&[1.0; 5]);
        let r = lsu(&ones, 0.05).unwrap();
        assert_eq!((r.m, r.threshold, r.fdp), (0, 0.0, 0.0));
    }

    #[test]
    fn ties_at_critical_value_are_rejected() {
        let s = sample(&[0.1, 0.1]);
        assert_eq!(lsu(&s, 0.1).unwrap().m, 2);
    }

    #[test]
    fn errors() {
        assert!(lsu(&sample(&[]), 0.05).is_err());
        assert!(lsu(&sample(&[0.2]), 1.0).is_err());
        assert!(PValueSample::new(vec![0.1], vec![]).is_err());
        assert!(PValueSample::new(vec![1.1], vec![true]).is_err());
    }

    #[test]
    fn ecdf_basics() {
        assert_eq!(ecdf(&[0.2, 0.4], 0.3), 0.5);
        assert_eq!(ecdf(&[0.2, 0.4], 1.0), 1.0);
        assert_eq!(ecdf(&[0.0, 0.4, 0.0, 0.7], 0.0), 0.5);
    }
}
