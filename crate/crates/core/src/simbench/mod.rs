//! Simulation benchmark: synthetic data with planted differential
//! components, several testing methods, and truth-aware scoring.

mod baselines;
mod generators;

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Serialize, Serializer};

pub use baselines::{welch_pvalue, wilcoxon_pvalue};
pub use generators::{
    ar1_normal, category_vector, gen_effect_sizes, gen_lognormal, gen_lognormal_cov,
    gen_poisson_gamma, gen_poisson_gamma_continuous, gen_shuffle, generate, multinomial, stream,
    GroundTruth, Role, SimulatedData, N_COVARIATES,
};

use crate::balance::rdb_weighted;
use crate::continuous::{rdb_continuous, ContinuousDesign};
use crate::data::{split_groups, to_proportions, CountMatrix};
use crate::engine::{rdb_iterate, ErrorMode, RdbConfig, TestOutcome};
use crate::error::{RdbError, Result};
use crate::error_control::{bh_adjust, bonferroni};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    PoissonGamma,
    /// Poisson-Gamma abundances driven by a uniform continuous outcome.
    PoissonGammaContinuous,
    LogNormal,
    LogNormalCov,
    Shuffle,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::PoissonGamma => "pg",
            ScenarioKind::PoissonGammaContinuous => "pg-continuous",
            ScenarioKind::LogNormal => "lognormal",
            ScenarioKind::LogNormalCov => "lognormal-cov",
            ScenarioKind::Shuffle => "shuffle",
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = RdbError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "pg" | "poisson-gamma" => ScenarioKind::PoissonGamma,
            "pg-continuous" | "poisson-gamma-continuous" => ScenarioKind::PoissonGammaContinuous,
            "lognormal" | "log-normal" => ScenarioKind::LogNormal,
            "lognormal-cov" | "log-normal-cov" => ScenarioKind::LogNormalCov,
            "shuffle" => ScenarioKind::Shuffle,
            other => return Err(RdbError::config(format!("unknown scenario \"{other}\""))),
        })
    }
}

/// How planted fold changes are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectSetting {
    /// All from U(1, 5).
    Increase,
    /// Half from U(1, 5), the rest from U(0.2, 1).
    Mixed,
}

impl EffectSetting {
    pub fn number(self) -> u8 {
        match self {
            EffectSetting::Increase => 1,
            EffectSetting::Mixed => 2,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(EffectSetting::Increase),
            2 => Ok(EffectSetting::Mixed),
            _ => Err(RdbError::config(format!("effect setting must be 1 or 2, got {n}"))),
        }
    }
}

impl Serialize for EffectSetting {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.number())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub d: usize,
    pub s: usize,
    pub m1: usize,
    /// Unused by the continuous scenario, which draws `m1` samples.
    pub m2: usize,
    pub effect_setting: EffectSetting,
    pub beta: f64,
    pub rho: f64,
    pub depth_range: (u64, u64),
    /// Covariate mean shift in the confounded scenario.
    pub eta: f64,
    pub seed: u64,
    #[serde(skip)]
    pub source_counts: Option<Arc<CountMatrix>>,
}

impl Scenario {
    pub fn new(
        kind: ScenarioKind,
        d: usize,
        s: usize,
        m1: usize,
        m2: usize,
        effect_setting: EffectSetting,
        seed: u64,
    ) -> Self {
        Scenario {
            kind,
            d,
            s,
            m1,
            m2,
            effect_setting,
            beta: 1.0,
            rho: 0.0,
            depth_range: (5000, 50000),
            eta: 0.25,
            seed,
            source_counts: None,
        }
    }

    /// Null resampling of an observed count matrix.
    pub fn shuffle(source: CountMatrix, m1: usize, m2: usize, seed: u64) -> Self {
        let mut sc = Scenario::new(
            ScenarioKind::Shuffle,
            source.n_components(),
            0,
            m1,
            m2,
            EffectSetting::Increase,
            seed,
        );
        sc.source_counts = Some(Arc::new(source));
        sc
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(RdbError::config(msg));
        if self.d < 2 {
            return bad(format!("d must be at least 2, got {}", self.d));
        }
        if 2 * self.s + 2 > self.d {
            return bad(format!(
                "s = {} exceeds d/2 - 1 = {}: the reference set must hold more than half \
                 of the components for the hypotheses to be identifiable",
                self.s,
                self.d as f64 / 2.0 - 1.0
            ));
        }
        let min_m = if self.kind == ScenarioKind::PoissonGammaContinuous { 3 } else { 2 };
        if self.m1 < min_m {
            return bad(format!("m1 must be at least {min_m}, got {}", self.m1));
        }
        if self.kind != ScenarioKind::PoissonGammaContinuous && self.m2 < 2 {
            return bad(format!("m2 must be at least 2, got {}", self.m2));
        }
        if !(self.beta >= 1.0 && self.beta.is_finite()) {
            return bad(format!("beta must be at least 1, got {}", self.beta));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        let (lo, hi) = self.depth_range;
        if lo == 0 || lo > hi {
            return bad(format!("invalid depth range [{lo}, {hi}]"));
        }
        if !self.eta.is_finite() {
            return bad("eta must be finite".to_string());
        }
        if self.kind == ScenarioKind::Shuffle {
            let Some(src) = &self.source_counts else {
                return bad("shuffle scenario needs source counts".to_string());
            };
            if self.s != 0 {
                return bad("shuffle scenario has no planted components; s must be 0".to_string());
            }
            if src.n_components() != self.d {
                return bad(format!(
                    "d = {} does not match the {} source components",
                    self.d,
                    src.n_components()
                ));
            }
            if self.m1 + self.m2 > src.n_samples() {
                return bad(format!(
                    "m1 + m2 = {} exceeds the {} source samples",
                    self.m1 + self.m2,
                    src.n_samples()
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Rdb,
    RdbCal,
    WelchTssBonf,
    WelchTssBh,
    WilcoxonRaw,
    WilcoxonTss,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Rdb,
        Method::RdbCal,
        Method::WelchTssBonf,
        Method::WelchTssBh,
        Method::WilcoxonRaw,
        Method::WilcoxonTss,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rdb => "RDB",
            Method::RdbCal => "RDB-CAL",
            Method::WelchTssBonf => "WELCH_TSS_BONF",
            Method::WelchTssBh => "WELCH_TSS_BH",
            Method::WilcoxonRaw => "WILCOXON_RAW",
            Method::WilcoxonTss => "WILCOXON_TSS",
        }
    }

    /// Parses a comma-separated method list.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let m: Method = part.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(RdbError::config("empty method list"));
        }
        Ok(out)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = RdbError;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_uppercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.name().replace('_', "-") == key)
            .ok_or_else(|| RdbError::config(format!("unknown method \"{s}\"")))
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

fn check_methods(sc: &Scenario, methods: &[Method]) -> Result<()> {
    if methods.is_empty() {
        return Err(RdbError::config("no methods selected"));
    }
    for &m in methods {
        if sc.kind == ScenarioKind::PoissonGammaContinuous && m != Method::Rdb {
            return Err(RdbError::config(format!(
                "{m} is not available for a continuous outcome"
            )));
        }
        if m == Method::RdbCal && sc.kind != ScenarioKind::LogNormalCov {
            return Err(RdbError::config(format!(
                "{m} needs covariates, which only the lognormal-cov scenario provides"
            )));
        }
    }
    Ok(())
}

/// One method applied to one replicate.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: Method,
    /// Rejected component indices, ascending.
    pub rejected: Vec<usize>,
    /// Largest calibration residual over both groups (RDB-CAL only).
    pub balance_residual: Option<f64>,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub truth: GroundTruth,
    pub runs: Vec<MethodRun>,
}

fn adjusted_rejections(p: &[f64], mode: ErrorMode, alpha: f64) -> Result<Vec<usize>> {
    let adj = match mode {
        ErrorMode::Fwer => bonferroni(p)?,
        ErrorMode::Fdr => bh_adjust(p)?,
    };
    Ok((0..p.len()).filter(|&i| adj[i] <= alpha).collect())
}

fn per_component_pvalues(
    values: &[Vec<f64>],
    labels: &[String],
    test: fn(&[f64], &[f64]) -> f64,
) -> Vec<f64> {
    values
        .iter()
        .map(|row| {
            let (mut x, mut y) = (Vec::new(), Vec::new());
            for (v, l) in row.iter().zip(labels) {
                if l == "1" {
                    x.push(*v)
                } else {
                    y.push(*v)
                }
            }
            test(&x, &y)
        })
        .collect()
}

fn apply_method(method: Method, sim: &SimulatedData, cfg: &RdbConfig) -> Result<MethodRun> {
    let start = Instant::now();
    let comp = to_proportions(&sim.counts)?;
    let mut balance_residual = None;
    let rejected = match method {
        Method::Rdb | Method::RdbCal => {
            let outcome: TestOutcome = if let Some(y) = &sim.outcome {
                let design = ContinuousDesign::from_composition(&comp, y.clone())?;
                rdb_continuous(&design, cfg)?
            } else {
                let design = split_groups(&comp, &sim.labels, Some("1"))?;
                if method == Method::RdbCal {
                    let cov = sim
                        .covariates
                        .as_ref()
                        .ok_or_else(|| RdbError::config("RDB-CAL needs covariates"))?;
                    let mut groups: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
                    for (row, l) in cov.iter().zip(&sim.labels) {
                        groups[usize::from(l != "1")].push(row.clone());
                    }
                    let out = rdb_weighted(&design, [&groups[0], &groups[1]], None, cfg)?;
                    balance_residual = out
                        .balance
                        .as_ref()
                        .and_then(|b| b.solver_report.as_ref())
                        .map(|r| r[0].balance_residual.max(r[1].balance_residual));
                    out
                } else {
                    rdb_iterate(&design, cfg)?
                }
            };
            outcome.rejected_indices()
        }
        Method::WelchTssBonf | Method::WelchTssBh => {
            let p = per_component_pvalues(comp.props(), &sim.labels, welch_pvalue);
            let mode = if method == Method::WelchTssBonf { ErrorMode::Fwer } else { ErrorMode::Fdr };
            adjusted_rejections(&p, mode, cfg.alpha)?
        }
        Method::WilcoxonTss => {
            let p = per_component_pvalues(comp.props(), &sim.labels, wilcoxon_pvalue);
            adjusted_rejections(&p, cfg.mode, cfg.alpha)?
        }
        Method::WilcoxonRaw => {
            let raw: Vec<Vec<f64>> = sim
                .counts
                .counts()
                .iter()
                .map(|r| r.iter().map(|&c| c as f64).collect())
                .collect();
            let p = per_component_pvalues(&raw, &sim.labels, wilcoxon_pvalue);
            adjusted_rejections(&p, cfg.mode, cfg.alpha)?
        }
    };
    Ok(MethodRun {
        method,
        rejected,
        balance_residual,
        elapsed: start.elapsed(),
    })
}

/// Generates replicate `r` and runs every method on it.
pub fn run_replicate(
    sc: &Scenario,
    replicate: usize,
    methods: &[Method],
    cfg: &RdbConfig,
) -> Result<ReplicateResult> {
    let wrap = |e: RdbError| RdbError::Replicate {
        replicate,
        source: Box::new(e),
    };
    let sim = generate(sc, replicate as u64).map_err(wrap)?;
    let runs = methods
        .iter()
        .map(|&m| apply_method(m, &sim, cfg))
        .collect::<Result<Vec<_>>>()
        .map_err(wrap)?;
    Ok(ReplicateResult {
        replicate,
        truth: sim.truth,
        runs,
    })
}

/// Error counts of one rejection set against the truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub false_discoveries: usize,
    pub true_discoveries: usize,
    pub fdp: f64,
    /// `None` under the global null.
    pub tpp: Option<f64>,
}

pub fn score(rejected: &[usize], truth: &GroundTruth) -> Score {
    let true_discoveries = rejected
        .iter()
        .filter(|i| truth.differential.binary_search(i).is_ok())
        .count();
    let false_discoveries = rejected.len() - true_discoveries;
    let s = truth.differential.len();
    Score {
        false_discoveries,
        true_discoveries,
        fdp: false_discoveries as f64 / rejected.len().max(1) as f64,
        tpp: (s > 0).then(|| true_discoveries as f64 / s as f64),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub se: f64,
}

impl Estimate {
    /// Proportion with the binomial standard error.
    pub fn proportion(hits: usize, n: usize) -> Self {
        let p = hits as f64 / n as f64;
        Estimate {
            estimate: p,
            se: (p * (1.0 - p) / n as f64).sqrt(),
        }
    }

    /// Mean with the standard error `sd / sqrt(n)`.
    pub fn mean(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Estimate {
            estimate: mean,
            se: sd / n.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodPerformance {
    pub method: Method,
    pub fwer: Estimate,
    pub fdr: Estimate,
    pub power: Option<Estimate>,
    pub mean_rejections: f64,
    pub reps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_balance_residual: Option<f64>,
    /// Wall-clock seconds per replicate. Not written to report files.
    #[serde(skip)]
    pub mean_runtime_secs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerformanceReport {
    pub scenario: Scenario,
    pub reps: usize,
    pub config: RdbConfig,
    pub methods: Vec<MethodPerformance>,
}

fn aggregate(method_pos: usize, method: Method, results: &[ReplicateResult]) -> MethodPerformance {
    let reps = results.len();
    let mut any_false = 0;
    let mut fdp = Vec::with_capacity(reps);
    let mut tpp = Vec::with_capacity(reps);
    let mut rejections = 0usize;
    let mut residual: Option<f64> = None;
    let mut runtime = 0.0;
    for r in results {
        let run = &r.runs[method_pos];
        let sc = score(&run.rejected, &r.truth);
        any_false += usize::from(sc.false_discoveries > 0);
        fdp.push(sc.fdp);
        tpp.extend(sc.tpp);
        rejections += run.rejected.len();
        if let Some(b) = run.balance_residual {
            residual = Some(residual.map_or(b, |x: f64| x.max(b)));
        }
        runtime += run.elapsed.as_secs_f64();
    }
    MethodPerformance {
        method,
        fwer: Estimate::proportion(any_false, reps),
        fdr: Estimate::mean(&fdp),
        power: (tpp.len() == reps).then(|| Estimate::mean(&tpp)),
        mean_rejections: rejections as f64 / reps as f64,
        reps,
        max_balance_residual: residual,
        mean_runtime_secs: runtime / reps as f64,
    }
}

/// Runs `reps` replicates on `threads` workers (0 picks the default) and
/// aggregates per-method performance. The result does not depend on the
/// number of threads.
pub fn run_scenario(
    sc: &Scenario,
    methods: &[Method],
    reps: usize,
    cfg: &RdbConfig,
    threads: usize,
) -> Result<PerformanceReport> {
    sc.validate()?;
    cfg.validate()?;
    check_methods(sc, methods)?;
    if reps == 0 {
        return Err(RdbError::config("reps must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| RdbError::config(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<ReplicateResult>> = pool.install(|| {
        (0..reps)
            .into_par_iter()
            .map(|r| run_replicate(sc, r, methods, cfg))
            .collect()
    });
    let results = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(PerformanceReport {
        scenario: sc.clone(),
        reps,
        config: cfg.clone(),
        methods: methods
            .iter()
            .enumerate()
            .map(|(pos, &m)| aggregate(pos, m, &results))
            .collect(),
    })
}

impl PerformanceReport {
    /// `# key: value` lines describing the run.
    pub fn provenance(&self, tool: &str) -> Vec<String> {
        let scenario = serde_json::to_string(&self.scenario).expect("scenario serializes");
        let config = serde_json::to_string(&self.config).expect("config serializes");
        vec![
            format!("# {tool}"),
            format!("# scenario: {scenario}"),
            format!("# config: {config}"),
            format!("# reps: {}", self.reps),
        ]
    }

    pub fn write_tsv<W: Write>(&self, tool: &str, mut out: W) -> std::io::Result<()> {
        for line in self.provenance(tool) {
            writeln!(out, "{line}")?;
        }
        writeln!(out, "method\tmetric\testimate\tse\treps")?;
        for m in &self.methods {
            let mut row = |metric: &str, e: Option<Estimate>| match e {
                Some(e) => writeln!(
                    out,
                    "{}\t{metric}\t{:.6}\t{:.6}\t{}",
                    m.method, e.estimate, e.se, m.reps
                ),
                None => writeln!(out, "{}\t{metric}\tNA\tNA\t{}", m.method, m.reps),
            };
            row("fwer", Some(m.fwer))?;
            row("fdr", Some(m.fdr))?;
            row("power", m.power)?;
        }
        Ok(())
    }

    pub fn to_json(&self, tool: &str) -> String {
        let value = serde_json::json!({
            "tool": tool,
            "report": self,
        });
        serde_json::to_string_pretty(&value).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_definition() {
        let truth = GroundTruth {
            differential: vec![1],
            effect_sizes: vec![1.0, 2.0, 1.0, 1.0],
        };
        let s = score(&[1, 2], &truth);
        assert_eq!(s.fdp, 0.5);
        assert_eq!(s.tpp, Some(1.0));
        let s = score(&[], &truth);
        assert_eq!((s.fdp, s.tpp), (0.0, Some(0.0)));
        assert_eq!(score(&[0], &GroundTruth::null(4)).tpp, None);
    }

    #[test]
    fn estimates() {
        let e = Estimate::proportion(1, 4);
        assert_eq!(e.estimate, 0.25);
        assert!((e.se - (0.25f64 * 0.75 / 4.0).sqrt()).abs() < 1e-15);
        let e = Estimate::mean(&[0.0, 1.0]);
        assert_eq!(e.estimate, 0.5);
        assert!((e.se - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identifiability_constraint() {
        let sc = Scenario::new(ScenarioKind::PoissonGamma, 20, 10, 5, 5, EffectSetting::Increase, 1);
        let err = sc.validate().unwrap_err().to_string();
        assert!(err.contains("identifiable"), "{err}");
        let sc = Scenario { s: 9, ..sc };
        assert!(sc.validate().is_ok());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!(Method::parse_list("rdb, welch-tss-bh,RDB").unwrap(), vec![Method::Rdb, Method::WelchTssBh]);
        assert!("ancom".parse::<Method>().is_err());
    }

    #[test]
    fn cal_requires_covariates() {
        let sc = Scenario::new(ScenarioKind::PoissonGamma, 20, 2, 5, 5, EffectSetting::Increase, 1);
        let err = run_scenario(&sc, &[Method::RdbCal], 1, &RdbConfig::default(), 1).unwrap_err();
        assert!(matches!(err, RdbError::Config(_)));
    }

    #[test]
    fn null_scenario_reports_na_power() {
        let sc = Scenario::new(ScenarioKind::PoissonGamma, 30, 0, 6, 6, EffectSetting::Increase, 3);
        let rep = run_scenario(&sc, &[Method::Rdb, Method::WilcoxonTss], 4, &RdbConfig::default(), 2).unwrap();
        for m in &rep.methods {
            assert!(m.power.is_none());
            assert_eq!(m.reps, 4);
            assert!((0.0..=1.0).contains(&m.fwer.estimate));
        }
        let mut tsv = Vec::new();
        rep.write_tsv("rdb test", &mut tsv).unwrap();
        let tsv = String::from_utf8(tsv).unwrap();
        assert!(tsv.starts_with("# rdb test\n"));
        assert!(tsv.contains("RDB\tpower\tNA\tNA\t4"));
    }
}
