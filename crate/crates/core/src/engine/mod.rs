//! The iterative renormalize-and-test procedure.
//!
//! Each iteration renormalizes the still-active components, computes one
//! statistic per component, uses the median statistic to decide whether the
//! reference components moved up, down or not at all, and rejects the
//! components that disagree with that direction. Rejected components leave the
//! active set; the loop stops at the first iteration that rejects nothing.

mod oracle;
mod stats;

use serde::{Deserialize, Serialize};

pub use oracle::{oracle_noiseless, OracleOutcome};
pub use stats::{renormalized_stats, GroupMeanStatistic};

use crate::data::{Exclusion, TwoSampleDesign};
use crate::error::{RdbError, Result};
use crate::error_control::{fdr_threshold_for, TailLaw};
use crate::serde_float;

/// Anything that can produce one statistic per active component.
pub trait StatisticSource {
    /// Number of components under test.
    fn n_components(&self) -> usize;

    /// Statistics for `active` (indices into the tested components), in the
    /// same order. `±inf` marks a zero-variance, non-zero difference.
    fn statistics(&self, active: &[usize]) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMode {
    Fwer,
    Fdr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MedianThreshold {
    Auto,
    Fixed(f64),
}

/// Which critical value family is used. Only the analytic upper bound
/// `sqrt(2 ln d - 2 ln alpha)` is available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticalValue {
    AnalyticUpperBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdbConfig {
    pub alpha: f64,
    pub median_threshold: MedianThreshold,
    pub r_q: f64,
    pub critical_value: CriticalValue,
    pub mode: ErrorMode,
    pub fdr_tail: TailLaw,
    pub group1_override: Option<String>,
}

impl Default for RdbConfig {
    fn default() -> Self {
        RdbConfig {
            alpha: 0.1,
            median_threshold: MedianThreshold::Auto,
            r_q: 0.2,
            critical_value: CriticalValue::AnalyticUpperBound,
            mode: ErrorMode::Fwer,
            fdr_tail: TailLaw::Rayleigh,
            group1_override: None,
        }
    }
}

impl RdbConfig {
    pub fn fdr() -> Self {
        RdbConfig {
            mode: ErrorMode::Fdr,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(RdbError::config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.r_q >= 0.0 && self.r_q.is_finite()) {
            return Err(RdbError::config(format!(
                "r_Q must be a finite value >= 0, got {}",
                self.r_q
            )));
        }
        if let MedianThreshold::Fixed(m) = self.median_threshold {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(RdbError::config(format!(
                    "median threshold must be a finite value >= 0, got {m}"
                )));
            }
        }
        Ok(())
    }
}

/// Median band and critical values for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Median band half-width M.
    pub median: f64,
    /// Analytic critical value `sqrt(2 ln d - 2 ln alpha)`.
    pub q_tilde: f64,
    /// One-sided critical value for positive statistics.
    pub d_plus: f64,
    /// One-sided critical value for negative statistics.
    pub d_minus: f64,
    /// Two-sided critical value, the one-sided value plus `r_Q * M`.
    pub d_pm: f64,
}

impl Thresholds {
    /// Same band, with `critical` as the one-sided value.
    pub fn with_critical(&self, critical: f64, r_q: f64) -> Thresholds {
        Thresholds {
            d_plus: critical,
            d_minus: critical,
            d_pm: critical + r_q * self.median,
            ..*self
        }
    }
}

pub fn default_thresholds(d: usize, cfg: &RdbConfig) -> Result<Thresholds> {
    cfg.validate()?;
    if d < 2 {
        return Err(RdbError::contract(format!(
            "at least 2 components are needed for testing, got {d}"
        )));
    }
    let ln_d = (d as f64).ln();
    let median = match cfg.median_threshold {
        MedianThreshold::Auto => (2.0 * ln_d / d as f64).sqrt(),
        MedianThreshold::Fixed(m) => m,
    };
    let q_tilde = (2.0 * ln_d - 2.0 * cfg.alpha.ln()).sqrt();
    Ok(Thresholds {
        median,
        q_tilde,
        d_plus: q_tilde,
        d_minus: q_tilde,
        d_pm: q_tilde + cfg.r_q * median,
    })
}

/// Median; even lengths take the midpoint of the two central values.
pub fn median_mid(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(RdbError::contract("median of an empty vector"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        return Ok(sorted[n / 2]);
    }
    let (a, b) = (sorted[n / 2 - 1], sorted[n / 2]);
    if a == b {
        return Ok(a);
    }
    let mid = a / 2.0 + b / 2.0;
    Ok(if mid.is_nan() { 0.0 } else { mid })
}

/// Which statistics are eligible for rejection in one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestMode {
    /// Median inside the band: reject large `|R|`.
    TwoSided,
    /// Median at or above `M`: reject only `R < -D-`.
    NegOnly,
    /// Median at or below `-M`: reject only `R > D+`.
    PosOnly,
}

impl TestMode {
    pub fn flipped(self) -> TestMode {
        match self {
            TestMode::TwoSided => TestMode::TwoSided,
            TestMode::NegOnly => TestMode::PosOnly,
            TestMode::PosOnly => TestMode::NegOnly,
        }
    }
}

pub fn decide_direction(median: f64, band: f64) -> TestMode {
    if median >= band {
        TestMode::NegOnly
    } else if median <= -band {
        TestMode::PosOnly
    } else {
        TestMode::TwoSided
    }
}

/// Positions in `stats` rejected under `mode`.
pub fn select_rejections(stats: &[f64], mode: TestMode, th: &Thresholds) -> Vec<usize> {
    let keep = |r: f64| match mode {
        TestMode::TwoSided => r.abs() > th.d_pm,
        TestMode::NegOnly => r < -th.d_minus,
        TestMode::PosOnly => r > th.d_plus,
    };
    stats
        .iter()
        .enumerate()
        .filter(|(_, &r)| keep(r))
        .map(|(pos, _)| pos)
        .collect()
}

/// One pass of the loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Active set V(t), as indices into the tested components.
    pub active: Vec<usize>,
    #[serde(serialize_with = "serde_float::vec::serialize")]
    pub statistics: Vec<f64>,
    #[serde(serialize_with = "serde_float::serialize")]
    pub median: f64,
    pub mode: TestMode,
    pub thresholds: Thresholds,
    /// W(t), as indices into the tested components.
    pub rejected: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rejection {
    pub iteration: usize,
    pub mode: TestMode,
    pub statistic: f64,
}

/// Result of the bare loop, before ids are attached.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRun {
    pub trace: Vec<IterationRecord>,
    /// Per tested component: when and how it was rejected.
    pub rejections: Vec<Option<Rejection>>,
}

impl IterationRun {
    /// Number of iterations executed, including the final empty one.
    pub fn total_iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn n_rejected(&self) -> usize {
        self.rejections.iter().filter(|r| r.is_some()).count()
    }

    pub fn rejected(&self) -> Vec<usize> {
        self.rejections
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.map(|_| i))
            .collect()
    }
}

/// Runs the loop from `V(0)` = all components until nothing is rejected.
pub fn iterate<S: StatisticSource + ?Sized>(source: &S, th: &Thresholds) -> Result<IterationRun> {
    let d = source.n_components();
    let mut active: Vec<usize> = (0..d).collect();
    let mut rejections = vec![None; d];
    let mut trace = Vec::new();
    loop {
        let iteration = trace.len();
        let statistics = source.statistics(&active)?;
        let median = median_mid(&statistics)?;
        let mode = decide_direction(median, th.median);
        let picked = select_rejections(&statistics, mode, th);
        let rejected: Vec<usize> = picked.iter().map(|&p| active[p]).collect();
        for &p in &picked {
            rejections[active[p]] = Some(Rejection {
                iteration,
                mode,
                statistic: statistics[p],
            });
        }
        let done = rejected.is_empty() || rejected.len() == active.len();
        let next: Vec<usize> = active
            .iter()
            .copied()
            .filter(|i| rejections[*i].is_none())
            .collect();
        trace.push(IterationRecord {
            iteration,
            active,
            statistics,
            median,
            mode,
            thresholds: *th,
            rejected,
        });
        if done {
            break;
        }
        active = next;
    }
    Ok(IterationRun { trace, rejections })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Rejected,
    Retained,
    Excluded,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Rejected => "rejected",
            Decision::Retained => "retained",
            Decision::Excluded => "excluded",
        }
    }
}

/// Sign of a rejected component's statistic: `+` means larger in group 1
/// (or increasing with the outcome) relative to the reference components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentRecord {
    pub component_id: String,
    pub decision: Decision,
    pub rejection_iteration: Option<usize>,
    pub direction: Option<Sign>,
    /// Test mode in force when the component was rejected.
    pub test_mode: Option<TestMode>,
    #[serde(serialize_with = "serde_float::option::serialize")]
    pub first_iteration_statistic: Option<f64>,
    pub note: String,
}

/// Solver diagnostics for one group's calibration weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub iterations: usize,
    pub final_gradient_norm: f64,
    pub balance_residual: f64,
}

/// Per-group weights attached to a weighted run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceWeights {
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    /// Present when the weights came from the calibration solver.
    pub solver_report: Option<[SolverReport; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestOutcome {
    /// One record per input component, in input order.
    pub components: Vec<ComponentRecord>,
    pub trace: Vec<IterationRecord>,
    pub total_iterations: usize,
    pub n_tested: usize,
    pub config: RdbConfig,
    pub thresholds: Thresholds,
    /// Critical value chosen by the FDR search, when in FDR mode.
    pub fdr_threshold: Option<f64>,
    pub balance: Option<BalanceWeights>,
}

impl TestOutcome {
    pub fn rejected_ids(&self) -> Vec<&str> {
        self.components
            .iter()
            .filter(|c| c.decision == Decision::Rejected)
            .map(|c| c.component_id.as_str())
            .collect()
    }

    /// Input-order indices of rejected components.
    pub fn rejected_indices(&self) -> Vec<usize> {
        self.components
            .iter()
            .enumerate()
            .filter(|(_, c)| c.decision == Decision::Rejected)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Which input components were tested and which were dropped.
#[derive(Debug, Clone, Copy)]
pub struct ComponentLayout<'a> {
    pub tested_ids: &'a [String],
    pub tested_indices: &'a [usize],
    pub excluded: &'a [Exclusion],
}

impl<'a> ComponentLayout<'a> {
    pub fn of_design(design: &'a TwoSampleDesign) -> Self {
        ComponentLayout {
            tested_ids: design.component_ids(),
            tested_indices: design.retained_indices(),
            excluded: design.excluded(),
        }
    }
}

/// Thresholds, optional FDR search, loop and bookkeeping for any statistic.
pub fn run_procedure<S: StatisticSource + Sync + ?Sized>(
    source: &S,
    layout: ComponentLayout<'_>,
    cfg: &RdbConfig,
) -> Result<TestOutcome> {
    let base = default_thresholds(source.n_components(), cfg)?;
    let (thresholds, fdr_threshold) = match cfg.mode {
        ErrorMode::Fwer => (base, None),
        ErrorMode::Fdr => {
            let t_hat = fdr_threshold_for(source, &base, cfg)?;
            (base.with_critical(t_hat, cfg.r_q), Some(t_hat))
        }
    };
    let run = iterate(source, &thresholds)?;
    Ok(assemble(layout, run, cfg, thresholds, fdr_threshold))
}

fn assemble(
    layout: ComponentLayout<'_>,
    run: IterationRun,
    cfg: &RdbConfig,
    thresholds: Thresholds,
    fdr_threshold: Option<f64>,
) -> TestOutcome {
    let first = &run.trace[0];
    let total = layout.tested_ids.len() + layout.excluded.len();
    let mut components = Vec::with_capacity(total);
    let mut tested = layout.tested_indices.iter().enumerate().peekable();
    let mut excluded = layout.excluded.iter();
    for original in 0..total {
        match tested.peek() {
            Some(&(pos, &idx)) if idx == original => {
                tested.next();
                let rejection = run.rejections[pos];
                let (decision, note) = match rejection {
                    Some(r) => (
                        Decision::Rejected,
                        match r.mode {
                            TestMode::TwoSided => "two-sided test",
                            _ => "one-sided test",
                        },
                    ),
                    None => (Decision::Retained, ""),
                };
                components.push(ComponentRecord {
                    component_id: layout.tested_ids[pos].clone(),
                    decision,
                    rejection_iteration: rejection.map(|r| r.iteration),
                    direction: rejection.map(|r| Sign::of(r.statistic)),
                    test_mode: rejection.map(|r| r.mode),
                    first_iteration_statistic: Some(first.statistics[pos]),
                    note: note.to_string(),
                });
            }
            _ => {
                let ex = excluded
                    .next()
                    .expect("tested and excluded components cover the input");
                components.push(ComponentRecord {
                    component_id: ex.component_id.clone(),
                    decision: Decision::Excluded,
                    rejection_iteration: None,
                    direction: None,
                    test_mode: None,
                    first_iteration_statistic: None,
                    note: ex.reason.clone(),
                });
            }
        }
    }
    TestOutcome {
        components,
        total_iterations: run.total_iterations(),
        trace: run.trace,
        n_tested: layout.tested_ids.len(),
        config: cfg.clone(),
        thresholds,
        fdr_threshold,
        balance: None,
    }
}

/// Unweighted two-group test.
pub fn rdb_iterate(design: &TwoSampleDesign, cfg: &RdbConfig) -> Result<TestOutcome> {
    let source = GroupMeanStatistic::unweighted(design);
    run_procedure(&source, ComponentLayout::of_design(design), cfg)
}
