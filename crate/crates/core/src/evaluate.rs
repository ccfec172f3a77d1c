//! Decoding, error rates, margins, dual correlation traces and the rank-sum test.

use std::fmt::Write as _;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::corrective::MarginMatrix;
use crate::data::Dataset;
use crate::ensemble::{argmax_class, Ensemble, EnsembleKind};
use crate::error::{Error, Result};

/// Class index with the largest aggregate score; ties go to the smallest index.
pub fn decode(ensemble: &Ensemble, x: &[f64]) -> Result<usize> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    Ok(argmax_class(&ensemble.class_scores(x)))
}

/// Decoded class index of every example.
pub fn predict(ensemble: &Ensemble, d: &Dataset) -> Result<Vec<usize>> {
    ensemble.check_compatible(d)?;
    (0..d.len()).map(|i| decode(ensemble, d.features().row(i))).collect()
}

pub fn multiclass_error(ensemble: &Ensemble, d: &Dataset) -> Result<f64> {
    let predicted = predict(ensemble, d)?;
    if d.is_empty() {
        return Ok(0.0);
    }
    let wrong = predicted.iter().zip(d.labels()).filter(|(p, y)| p != y).count();
    Ok(wrong as f64 / d.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginReport {
    /// Normalized margin of every example.
    pub margins: Vec<f64>,
    pub min: f64,
    /// Normalization constant `sum_j w_j`.
    pub weight_sum: f64,
}

/// Per-example margins divided by `sum w`.
///
/// Fixed-code ensembles use the smallest code-position agreement
/// `M(y_i, l) f_l(x_i)`; growing-code ensembles use the smallest score lead
/// of the true class over each wrong class.
pub fn min_margin(ensemble: &Ensemble, d: &Dataset) -> Result<MarginReport> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    ensemble.check_compatible(d)?;
    let weight_sum = ensemble.weight_sum();
    if !(weight_sum > 0.0) {
        return Err(Error::InvalidArgument("ensemble coefficients sum to zero".into()));
    }
    let coding = ensemble.coding();
    let margins: Vec<f64> = (0..d.len())
        .map(|i| {
            let x = d.features().row(i);
            let y = d.labels()[i];
            let raw = match ensemble.kind() {
                EnsembleKind::Mo => ensemble
                    .position_outputs(x)
                    .iter()
                    .enumerate()
                    .map(|(l, f)| f64::from(coding.get(y, l)) * f)
                    .fold(f64::INFINITY, f64::min),
                EnsembleKind::Ecc => {
                    let s = ensemble.class_scores(x);
                    (0..s.len())
                        .filter(|&c| c != y)
                        .map(|c| s[y] - s[c])
                        .fold(f64::INFINITY, f64::min)
                }
            };
            raw / weight_sum
        })
        .collect();
    let min = margins.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(MarginReport {
        margins,
        min,
        weight_sum,
    })
}

/// Entry `(t, j)`, `j <= t`, is `u^(t) . rho_j` where `history[t]` holds the
/// example weights right after round `t + 1`.
pub fn correlation_trace(history: &[Vec<f64>], margins: &MarginMatrix) -> Vec<Vec<f64>> {
    history
        .iter()
        .enumerate()
        .map(|(t, u)| (0..=t.min(margins.cols().saturating_sub(1))).map(|j| margins.correlation(u, j)).collect())
        .collect()
}

/// `round,column,value` rows of a correlation trace, both indices from 1.
pub fn correlation_csv(trace: &[Vec<f64>]) -> String {
    let mut out = String::from("round,column,value\n");
    for (t, row) in trace.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let _ = writeln!(out, "{},{},{v}", t + 1, j + 1);
        }
    }
    out
}

/// Samples at or below this pooled size use exact enumeration.
pub const EXACT_RANKSUM_LIMIT: usize = 12;

/// Midranks (1-based) of the pooled sample.
fn midranks(pooled: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut k = 0;
    while k < order.len() {
        let mut end = k;
        while end + 1 < order.len() && pooled[order[end + 1]] == pooled[order[k]] {
            end += 1;
        }
        let rank = (k + end) as f64 / 2.0 + 1.0;
        for &i in &order[k..=end] {
            ranks[i] = rank;
        }
        k = end + 1;
    }
    ranks
}

/// Two-sided Wilcoxon rank-sum p-value with midranks for ties.
pub fn ranksum_test(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("rank-sum test needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("rank-sum samples must be finite".into()));
    }
    let (n1, n2) = (a.len(), b.len());
    let n = n1 + n2;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let w: f64 = ranks[..n1].iter().sum();
    let expected = n1 as f64 * (n as f64 + 1.0) / 2.0;
    let observed = (w - expected).abs();

    if n <= EXACT_RANKSUM_LIMIT {
        let (mut extreme, mut total) = (0u64, 0u64);
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != n1 {
                continue;
            }
            let s: f64 = (0..n).filter(|k| mask & (1 << k) != 0).map(|k| ranks[k]).sum();
            total += 1;
            if (s - expected).abs() >= observed - 1e-9 {
                extreme += 1;
            }
        }
        return Ok(extreme as f64 / total as f64);
    }

    let mut sorted = pooled;
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut k = 0;
    while k < n {
        let mut end = k;
        while end + 1 < n && sorted[end + 1] == sorted[k] {
            end += 1;
        }
        let t = (end - k + 1) as f64;
        ties += t * t * t - t;
        k = end + 1;
    }
    let (f1, f2, nf) = (n1 as f64, n2 as f64, n as f64);
    let variance = f1 * f2 / 12.0 * ((nf + 1.0) - ties / (nf * (nf - 1.0)));
    if !(variance > 0.0) {
        return Ok(1.0);
    }
    let z = ((observed - 0.5).max(0.0)) / variance.sqrt();
    Ok((2.0 * (1.0 - Normal::standard().cdf(z))).clamp(0.0, 1.0))
}
