use super::StatisticSource;
use crate::data::TwoSampleDesign;
use crate::error::{RdbError, Result};

/// Per-component group moments that fully determine the renormalized
/// two-group statistic for any active set.
///
/// For an active set `I` with `S_k = sum_{i in I} mean_k[i]`, the statistic is
/// `(mean_1[i]/S_1 - mean_2[i]/S_2) / sqrt(spread_1[i]/S_1^2 + spread_2[i]/S_2^2)`.
/// `spread_k` is the variance of the un-renormalized group mean: `s^2/m` for
/// the plain t statistic, `sum_j w_j^2 (p_j - mean)^2` for the weighted one.
#[derive(Debug, Clone)]
pub struct GroupMeanStatistic {
    means: [Vec<f64>; 2],
    spreads: [Vec<f64>; 2],
}

/// Mean and sum of squared deviations; exact for constant columns so that
/// zero variance is detected without rounding noise.
fn column_moments(samples: &[Vec<f64>], i: usize, weights: Option<&[f64]>) -> (f64, f64) {
    let first = samples[0][i];
    if samples.iter().all(|p| p[i] == first) {
        return (first, 0.0);
    }
    match weights {
        None => {
            let m = samples.len() as f64;
            let mean = samples.iter().map(|p| p[i]).sum::<f64>() / m;
            let ss = samples.iter().map(|p| (p[i] - mean).powi(2)).sum::<f64>();
            (mean, ss / ((m - 1.0) * m))
        }
        Some(w) => {
            let mean = samples.iter().zip(w).map(|(p, w)| w * p[i]).sum::<f64>();
            let ss = samples
                .iter()
                .zip(w)
                .map(|(p, w)| (w * (p[i] - mean)).powi(2))
                .sum::<f64>();
            (mean, ss)
        }
    }
}

impl GroupMeanStatistic {
    /// Plain two-sample t statistic after renormalization.
    pub fn unweighted(design: &TwoSampleDesign) -> Self {
        Self::build(design, [None, None])
    }

    /// Weighted statistic; each weight vector must sum to one.
    pub fn weighted(design: &TwoSampleDesign, w1: &[f64], w2: &[f64]) -> Self {
        Self::build(design, [Some(w1), Some(w2)])
    }

    fn build(design: &TwoSampleDesign, weights: [Option<&[f64]>; 2]) -> Self {
        let d = design.n_components();
        let mut means = [Vec::with_capacity(d), Vec::with_capacity(d)];
        let mut spreads = [Vec::with_capacity(d), Vec::with_capacity(d)];
        for k in 0..2 {
            for i in 0..d {
                let (mean, spread) = column_moments(design.group(k), i, weights[k]);
                means[k].push(mean);
                spreads[k].push(spread);
            }
        }
        GroupMeanStatistic { means, spreads }
    }

    /// Renormalized mean differences over `active` (the statistic numerators).
    pub fn differences(&self, active: &[usize]) -> Result<Vec<f64>> {
        let [s1, s2] = self.active_sums(active)?;
        Ok(active
            .iter()
            .map(|&i| self.means[0][i] / s1 - self.means[1][i] / s2)
            .collect())
    }

    fn active_sums(&self, active: &[usize]) -> Result<[f64; 2]> {
        let mut sums = [0.0; 2];
        for (k, sum) in sums.iter_mut().enumerate() {
            *sum = active.iter().map(|&i| self.means[k][i]).sum();
            if !(*sum > 0.0) {
                return Err(RdbError::VanishingActiveSet { group: k + 1 });
            }
        }
        Ok(sums)
    }
}

impl StatisticSource for GroupMeanStatistic {
    fn n_components(&self) -> usize {
        self.means[0].len()
    }

    fn statistics(&self, active: &[usize]) -> Result<Vec<f64>> {
        let [s1, s2] = self.active_sums(active)?;
        Ok(active
            .iter()
            .map(|&i| {
                let diff = self.means[0][i] / s1 - self.means[1][i] / s2;
                let var = self.spreads[0][i] / (s1 * s1) + self.spreads[1][i] / (s2 * s2);
                ratio_with_sentinel(diff, var)
            })
            .collect())
    }
}

/// `diff / sqrt(var)`, with 0 for 0/0 and a signed infinity for x/0.
pub(crate) fn ratio_with_sentinel(diff: f64, var: f64) -> f64 {
    if var > 0.0 {
        diff / var.sqrt()
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Renormalized two-sample statistics of `design` over `active`.
pub fn renormalized_stats(design: &TwoSampleDesign, active: &[usize]) -> Result<Vec<f64>> {
    if active.is_empty() {
        return Err(RdbError::contract("active set is empty"));
    }
    GroupMeanStatistic::unweighted(design).statistics(active)
}
