//! Critical values: tail laws, the FDR threshold search, and the classical
//! Bonferroni / Benjamini–Hochberg adjustments used by baseline methods.

use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::data::TwoSampleDesign;
use crate::engine::{iterate, GroupMeanStatistic, RdbConfig, StatisticSource, Thresholds};
use crate::error::{RdbError, Result};

/// Reference law for a null statistic's magnitude in the FDR plug-in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailLaw {
    /// `sqrt(z1^2 + z2^2)` for independent standard normals.
    Rayleigh,
    /// `|z|` for a standard normal.
    HalfNormal,
}

impl TailLaw {
    /// `P(Z > t)`.
    pub fn survival(self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(RdbError::contract(format!(
                "survival needs a threshold >= 0, got {t}"
            )));
        }
        Ok(match self {
            TailLaw::Rayleigh => (-0.5 * t * t).exp(),
            TailLaw::HalfNormal => erfc(t / std::f64::consts::SQRT_2),
        })
    }
}

pub fn survival(law: TailLaw, t: f64) -> Result<f64> {
    law.survival(t)
}

/// Smallest critical value whose plug-in false discovery estimate
/// `d * P(Z > T) / max(#rejections(T), 1)` is at most alpha.
///
/// Candidates are the first-iteration magnitudes not above `q_tilde`, plus
/// `q_tilde` itself; each candidate runs the full loop. Falls back to
/// `q_tilde` when nothing qualifies.
pub fn fdr_threshold_for<S: StatisticSource + ?Sized>(
    source: &S,
    base: &Thresholds,
    cfg: &RdbConfig,
) -> Result<f64> {
    let d = source.n_components();
    let all: Vec<usize> = (0..d).collect();
    let q = base.q_tilde;
    let mut candidates: Vec<f64> = source
        .statistics(&all)?
        .into_iter()
        .map(f64::abs)
        .filter(|t| *t <= q)
        .collect();
    candidates.push(q);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    for t in candidates {
        let tail = cfg.fdr_tail.survival(t)?;
        // At most d rejections, so the estimate cannot reach alpha here.
        if tail > cfg.alpha {
            continue;
        }
        let run = iterate(source, &base.with_critical(t, cfg.r_q))?;
        let estimate = d as f64 * tail / run.n_rejected().max(1) as f64;
        if estimate <= cfg.alpha {
            return Ok(t);
        }
    }
    Ok(q)
}

/// FDR critical value for an unweighted two-group design.
pub fn fdr_threshold(design: &TwoSampleDesign, cfg: &RdbConfig) -> Result<f64> {
    let source = GroupMeanStatistic::unweighted(design);
    let base = crate::engine::default_thresholds(source.n_components(), cfg)?;
    fdr_threshold_for(&source, &base, cfg)
}

fn check_pvalues(p: &[f64]) -> Result<()> {
    match p.iter().position(|x| !(0.0..=1.0).contains(x)) {
        Some(i) => Err(RdbError::contract(format!(
            "p-value {} at position {i} is outside [0, 1]",
            p[i]
        ))),
        None => Ok(()),
    }
}

pub fn bonferroni(p: &[f64]) -> Result<Vec<f64>> {
    check_pvalues(p)?;
    let n = p.len() as f64;
    Ok(p.iter().map(|x| (x * n).min(1.0)).collect())
}

/// Benjamini–Hochberg step-up adjusted p-values, in input order.
pub fn bh_adjust(p: &[f64]) -> Result<Vec<f64>> {
    check_pvalues(p)?;
    let n = p.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut adjusted = vec![0.0; n];
    let mut running = 1.0f64;
    for (rank, &idx) in order.iter().enumerate().rev() {
        running = running.min(p[idx] * n as f64 / (rank + 1) as f64);
        adjusted[idx] = running.min(1.0);
    }
    Ok(adjusted)
}
