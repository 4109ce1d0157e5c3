//! Association with a continuous outcome.
//!
//! Each sample is renormalized over the active set on its own, and the
//! per-component statistic is the Pearson correlation with the outcome mapped
//! through `r * sqrt((m - 2) / (1 - r^2))`. The loop, thresholds and error
//! modes are shared with the two-group test.

use serde::Serialize;

use crate::data::{CompositionMatrix, Exclusion};
use crate::engine::{run_procedure, ComponentLayout, RdbConfig, StatisticSource, TestOutcome};
use crate::error::{RdbError, Result};

/// |r| above this maps to the infinite sentinel.
const UNIT_CORRELATION: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct ContinuousDesign {
    component_ids: Vec<String>,
    retained: Vec<usize>,
    sample_ids: Vec<String>,
    /// `props[j][i]`: component `i` of sample `j`.
    props: Vec<Vec<f64>>,
    outcome: Vec<f64>,
    excluded: Vec<Exclusion>,
}

impl ContinuousDesign {
    /// Builds a design from per-sample proportion vectors and the outcome.
    pub fn new(component_ids: Vec<String>, props: Vec<Vec<f64>>, outcome: Vec<f64>) -> Result<Self> {
        let sample_ids = (1..=props.len()).map(|j| format!("s{j}")).collect();
        Self::build(component_ids, sample_ids, props, outcome)
    }

    pub fn from_composition(comp: &CompositionMatrix, outcome: Vec<f64>) -> Result<Self> {
        let props = (0..comp.n_samples()).map(|j| comp.sample(j)).collect();
        Self::build(
            comp.component_ids().to_vec(),
            comp.sample_ids().to_vec(),
            props,
            outcome,
        )
    }

    fn build(
        component_ids: Vec<String>,
        sample_ids: Vec<String>,
        props: Vec<Vec<f64>>,
        outcome: Vec<f64>,
    ) -> Result<Self> {
        let m = props.len();
        if m < 3 {
            return Err(RdbError::contract(format!(
                "continuous outcome needs at least 3 samples, got {m}"
            )));
        }
        if outcome.len() != m {
            return Err(RdbError::contract(format!(
                "{} outcome values for {m} samples",
                outcome.len()
            )));
        }
        if outcome.iter().any(|y| !y.is_finite()) {
            return Err(RdbError::contract("outcome has non-finite values"));
        }
        let y0 = outcome[0];
        if outcome.iter().all(|&y| y == y0) {
            return Err(RdbError::contract("outcome has zero variance"));
        }
        let d = component_ids.len();
        if let Some(j) = props.iter().position(|p| p.len() != d) {
            return Err(RdbError::contract(format!(
                "sample {} has {} proportions, expected {d}",
                sample_ids[j],
                props[j].len()
            )));
        }
        let keep: Vec<bool> = (0..d).map(|i| props.iter().any(|p| p[i] > 0.0)).collect();
        let retained: Vec<usize> = (0..d).filter(|&i| keep[i]).collect();
        let excluded = (0..d)
            .filter(|&i| !keep[i])
            .map(|i| Exclusion {
                component_id: component_ids[i].clone(),
                reason: "all-zero".to_string(),
            })
            .collect();
        Ok(ContinuousDesign {
            component_ids: retained.iter().map(|&i| component_ids[i].clone()).collect(),
            props: props
                .into_iter()
                .map(|p| retained.iter().map(|&i| p[i]).collect())
                .collect(),
            retained,
            sample_ids,
            outcome,
            excluded,
        })
    }

    pub fn component_ids(&self) -> &[String] {
        &self.component_ids
    }

    pub fn retained_indices(&self) -> &[usize] {
        &self.retained
    }

    pub fn excluded(&self) -> &[Exclusion] {
        &self.excluded
    }

    pub fn n_samples(&self) -> usize {
        self.props.len()
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    /// Same design with a transformed outcome.
    pub fn with_outcome(&self, outcome: Vec<f64>) -> Result<Self> {
        let mut out = self.clone();
        if outcome.len() != self.n_samples() {
            return Err(RdbError::contract("outcome length changed"));
        }
        let y0 = outcome[0];
        if outcome.iter().all(|&y| y == y0) {
            return Err(RdbError::contract("outcome has zero variance"));
        }
        out.outcome = outcome;
        Ok(out)
    }

    fn layout(&self) -> ComponentLayout<'_> {
        ComponentLayout {
            tested_ids: &self.component_ids,
            tested_indices: &self.retained,
            excluded: &self.excluded,
        }
    }
}

impl StatisticSource for ContinuousDesign {
    fn n_components(&self) -> usize {
        self.component_ids.len()
    }

    fn statistics(&self, active: &[usize]) -> Result<Vec<f64>> {
        correlation_stats(self, active)
    }
}

/// Correlation statistics over `active` with per-sample renormalization.
pub fn correlation_stats(data: &ContinuousDesign, active: &[usize]) -> Result<Vec<f64>> {
    if active.is_empty() {
        return Err(RdbError::contract("active set is empty"));
    }
    let m = data.n_samples();
    let mut sums = Vec::with_capacity(m);
    for (j, p) in data.props.iter().enumerate() {
        let s: f64 = active.iter().map(|&i| p[i]).sum();
        if !(s > 0.0) {
            return Err(RdbError::VanishingSampleSum {
                sample: data.sample_ids[j].clone(),
            });
        }
        sums.push(s);
    }
    let y_mean = data.outcome.iter().sum::<f64>() / m as f64;
    let y_dev: Vec<f64> = data.outcome.iter().map(|y| y - y_mean).collect();
    let y_ss: f64 = y_dev.iter().map(|v| v * v).sum();
    let dof = (m - 2) as f64;

    Ok(active
        .iter()
        .map(|&i| {
            let first = data.props[0][i] / sums[0];
            let values: Vec<f64> = data.props.iter().zip(&sums).map(|(p, s)| p[i] / s).collect();
            if values.iter().all(|&v| v == first) {
                return 0.0;
            }
            let mean = values.iter().sum::<f64>() / m as f64;
            let mut sxy = 0.0;
            let mut sxx = 0.0;
            for (v, yd) in values.iter().zip(&y_dev) {
                let xd = v - mean;
                sxy += xd * yd;
                sxx += xd * xd;
            }
            if sxx <= 0.0 {
                return 0.0;
            }
            let r = (sxy / (sxx * y_ss).sqrt()).clamp(-1.0, 1.0);
            if r.abs() > UNIT_CORRELATION {
                return r.signum() * f64::INFINITY;
            }
            r * (dof / (1.0 - r * r)).sqrt()
        })
        .collect())
}

pub fn rdb_continuous(data: &ContinuousDesign, cfg: &RdbConfig) -> Result<TestOutcome> {
    run_procedure(data, data.layout(), cfg)
}
