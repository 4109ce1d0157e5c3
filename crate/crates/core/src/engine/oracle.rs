use serde::Serialize;

use super::median_mid;
use crate::error::{RdbError, Result};

/// |x| at or below this counts as zero in the noiseless recursion.
const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleOutcome {
    /// Estimated reference set, ascending component indices.
    pub reference: Vec<usize>,
    /// Estimated differential set, ascending component indices.
    pub differential: Vec<usize>,
    /// Iterations executed, including the final one that rejects nothing.
    pub iterations: usize,
    /// Median of the renormalized differences at each iteration.
    pub medians: Vec<f64>,
}

fn check_simplex(q: &[f64], name: &str) -> Result<()> {
    if q.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(RdbError::contract(format!("{name} has negative or non-finite entries")));
    }
    let total: f64 = q.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(RdbError::contract(format!("{name} sums to {total}, not 1")));
    }
    Ok(())
}

/// The recursion on known expected proportions: differences of renormalized
/// proportions, sign of their median, rejection of every component whose
/// difference disagrees with that sign.
pub fn oracle_noiseless(q1: &[f64], q2: &[f64]) -> Result<OracleOutcome> {
    if q1.len() != q2.len() || q1.is_empty() {
        return Err(RdbError::contract("proportion vectors must be non-empty and equally long"));
    }
    check_simplex(q1, "Q1")?;
    check_simplex(q2, "Q2")?;
    if let Some(i) = q1.iter().zip(q2).position(|(a, b)| a + b <= 0.0) {
        return Err(RdbError::contract(format!(
            "component {i} is zero in both populations"
        )));
    }

    let d = q1.len();
    let mut active: Vec<usize> = (0..d).collect();
    let mut differential = Vec::new();
    let mut iterations = 0;
    let mut medians = Vec::new();
    loop {
        iterations += 1;
        let s1: f64 = active.iter().map(|&i| q1[i]).sum();
        let s2: f64 = active.iter().map(|&i| q2[i]).sum();
        if s1 <= 0.0 || s2 <= 0.0 {
            break;
        }
        let diffs: Vec<f64> = active
            .iter()
            .map(|&i| {
                let r = q1[i] / s1 - q2[i] / s2;
                if r.abs() <= ZERO_TOL {
                    0.0
                } else {
                    r
                }
            })
            .collect();
        let mut median = median_mid(&diffs)?;
        if median.abs() <= ZERO_TOL {
            median = 0.0;
        }
        medians.push(median);
        let reject = |r: f64| {
            if median == 0.0 {
                r != 0.0
            } else if median > 0.0 {
                r <= 0.0
            } else {
                r >= 0.0
            }
        };
        let (gone, kept): (Vec<(usize, f64)>, Vec<(usize, f64)>) = active
            .iter()
            .copied()
            .zip(diffs)
            .partition(|&(_, r)| reject(r));
        if gone.is_empty() {
            break;
        }
        differential.extend(gone.into_iter().map(|(i, _)| i));
        active = kept.into_iter().map(|(i, _)| i).collect();
        if active.is_empty() {
            break;
        }
    }
    differential.sort_unstable();
    active.sort_unstable();
    Ok(OracleOutcome {
        reference: active,
        differential,
        iterations,
        medians,
    })
}
