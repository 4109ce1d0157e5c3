//! Covariate balancing by calibration weights, and the weighted test.
//!
//! Weights within a group take the exponential-tilting form
//! `w_j ∝ exp(λᵀ(x_j − target))`, where λ minimizes the convex dual
//! `G(λ) = log Σ_j exp(λᵀ(x_j − target))`. At the minimum the gradient of `G`
//! is exactly the weighted covariate mean minus the target, so convergence
//! means balance.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::data::TwoSampleDesign;
use crate::engine::{
    rdb_iterate, run_procedure, BalanceWeights, ComponentLayout, GroupMeanStatistic, RdbConfig,
    SolverReport, TestOutcome,
};
use crate::error::{RdbError, Result};

const GRADIENT_TOL: f64 = 1e-8;
const MAX_NEWTON: usize = 100;
const MAX_HALVINGS: usize = 60;
const ARMIJO: f64 = 1e-4;
const PURE_NEWTON_DECREMENT: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationFit {
    pub weights: Vec<f64>,
    pub report: SolverReport,
    /// Dual objective after each accepted Newton step, starting at λ = 0.
    pub dual_trace: Vec<f64>,
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

struct Dual<'a> {
    centered: &'a DMatrix<f64>,
}

impl Dual<'_> {
    fn scores(&self, lambda: &DVector<f64>) -> Vec<f64> {
        (self.centered * lambda).iter().copied().collect()
    }

    fn value(&self, lambda: &DVector<f64>) -> f64 {
        log_sum_exp(&self.scores(lambda))
    }

    fn weights(&self, lambda: &DVector<f64>) -> DVector<f64> {
        let scores = self.scores(lambda);
        let lse = log_sum_exp(&scores);
        DVector::from_iterator(scores.len(), scores.iter().map(|s| (s - lse).exp()))
    }

    fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        self.centered.transpose() * w
    }

    fn hessian(&self, w: &DVector<f64>, g: &DVector<f64>) -> DMatrix<f64> {
        let p = self.centered.ncols();
        let mut h = DMatrix::zeros(p, p);
        for (row, &wj) in self.centered.row_iter().zip(w.iter()) {
            h += wj * row.transpose() * row;
        }
        h - g * g.transpose()
    }
}

fn covariate_name(names: Option<&[String]>, c: usize) -> String {
    names
        .and_then(|n| n.get(c).cloned())
        .unwrap_or_else(|| format!("covariate {}", c + 1))
}

/// Exponential-tilting weights for one group whose weighted covariate mean
/// matches `target`. Covariates are standardized internally.
///
/// `x` holds one row per sample; `names` (optional) label columns in errors.
pub fn calibration_weights(
    x: &[Vec<f64>],
    target: &[f64],
    names: Option<&[String]>,
) -> Result<CalibrationFit> {
    let m = x.len();
    let p = target.len();
    if m == 0 {
        return Err(RdbError::contract("calibration needs at least one sample"));
    }
    if let Some(j) = x.iter().position(|r| r.len() != p) {
        return Err(RdbError::contract(format!(
            "covariate row {} has {} values, expected {p}",
            j + 1,
            x[j].len()
        )));
    }
    let uniform = |iterations| CalibrationFit {
        weights: vec![1.0 / m as f64; m],
        report: SolverReport {
            iterations,
            final_gradient_norm: 0.0,
            balance_residual: 0.0,
        },
        dual_trace: vec![(m as f64).ln()],
    };
    if p == 0 {
        return Ok(uniform(0));
    }

    // Standardize each column; constant columns must already sit on target.
    let mut kept = Vec::new();
    let mut centers = Vec::new();
    let mut scales = Vec::new();
    for c in 0..p {
        let mean = x.iter().map(|r| r[c]).sum::<f64>() / m as f64;
        let var = x.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / m as f64;
        let scale = var.sqrt();
        if scale <= 1e-12 * mean.abs().max(1.0) {
            let gap = (target[c] - mean).abs();
            if gap > 1e-12 * mean.abs().max(1.0) {
                return Err(RdbError::CalibrationDiverged {
                    iterations: 0,
                    covariate: covariate_name(names, c),
                    residual: gap,
                });
            }
            continue;
        }
        kept.push(c);
        centers.push(mean);
        scales.push(scale);
    }
    if kept.is_empty() {
        return Ok(uniform(0));
    }
    let q = kept.len();
    let z = DMatrix::from_fn(m, q, |j, c| (x[j][kept[c]] - centers[c]) / scales[c]);

    let corr = z.transpose() * &z / m as f64;
    let eig = SymmetricEigen::new(corr);
    let (min_pos, min_val) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one column");
    if min_val < 1e-10 {
        let v = eig.eigenvectors.column(min_pos);
        let involved: Vec<String> = (0..q)
            .filter(|&c| v[c].abs() > 1e-6)
            .map(|c| covariate_name(names, kept[c]))
            .collect();
        return Err(RdbError::CollinearCovariates(involved.join(", ")));
    }

    let t = DVector::from_iterator(q, (0..q).map(|c| (target[kept[c]] - centers[c]) / scales[c]));
    let centered = DMatrix::from_fn(m, q, |j, c| z[(j, c)] - t[c]);
    let dual = Dual {
        centered: &centered,
    };

    let mut lambda = DVector::zeros(q);
    let mut value = dual.value(&lambda);
    let mut dual_trace = vec![value];
    let mut w = dual.weights(&lambda);
    let mut g = dual.gradient(&w);
    let mut iterations = 0;
    let mut stalled = false;
    while g.amax() > GRADIENT_TOL && iterations < MAX_NEWTON {
        let h = dual.hessian(&w, &g);
        let step = newton_direction(h, &g);
        let slope = g.dot(&step);
        // Inside the quadratic region the predicted decrease is below
        // rounding, so the sufficient-decrease test is meaningless there.
        let mut accepted = (-slope < PURE_NEWTON_DECREMENT).then(|| {
            let trial = &lambda + &step;
            let trial_value = dual.value(&trial);
            (trial, trial_value)
        });
        let mut size = 1.0;
        for _ in 0..MAX_HALVINGS {
            if accepted.is_some() {
                break;
            }
            let trial = &lambda + size * &step;
            let trial_value = dual.value(&trial);
            if trial_value <= value + ARMIJO * size * slope {
                accepted = Some((trial, trial_value));
            }
            size *= 0.5;
        }
        let Some((next, next_value)) = accepted else {
            stalled = true;
            break;
        };
        lambda = next;
        value = next_value;
        dual_trace.push(value);
        w = dual.weights(&lambda);
        g = dual.gradient(&w);
        iterations += 1;
    }

    let weights: Vec<f64> = w.iter().copied().collect();
    let residuals: Vec<f64> = (0..p)
        .map(|c| {
            let mean: f64 = weights.iter().zip(x).map(|(w, r)| w * r[c]).sum();
            mean - target[c]
        })
        .collect();
    let (worst, worst_residual) = residuals
        .iter()
        .map(|r| r.abs())
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("p > 0");
    let gradient_norm = g.amax();
    if stalled || gradient_norm > GRADIENT_TOL || weights.iter().any(|&w| !(w > 0.0)) {
        return Err(RdbError::CalibrationDiverged {
            iterations,
            covariate: covariate_name(names, worst),
            residual: worst_residual,
        });
    }
    Ok(CalibrationFit {
        weights,
        report: SolverReport {
            iterations,
            final_gradient_norm: gradient_norm,
            balance_residual: worst_residual,
        },
        dual_trace,
    })
}

/// Solves `H step = -g`, adding a ridge when `H` is numerically singular.
fn newton_direction(h: DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let scale = h.diagonal().amax().max(1e-300);
    let mut ridge = 0.0;
    for _ in 0..40 {
        let mut shifted = h.clone();
        for c in 0..shifted.nrows() {
            shifted[(c, c)] += ridge;
        }
        if let Some(chol) = shifted.cholesky() {
            let step = chol.solve(&(-g));
            if step.iter().all(|v| v.is_finite()) {
                return step;
            }
        }
        ridge = if ridge == 0.0 { scale * 1e-12 } else { ridge * 10.0 };
    }
    -g.clone()
}

/// Calibration weights for both groups against the pooled covariate mean.
///
/// `covariates[k][j]` is the covariate row of sample `j` in group `k`.
pub fn balance_weights(
    covariates: [&[Vec<f64>]; 2],
    names: Option<&[String]>,
) -> Result<BalanceWeights> {
    let p = covariates[0].first().or(covariates[1].first()).map_or(0, Vec::len);
    let n = (covariates[0].len() + covariates[1].len()) as f64;
    let target: Vec<f64> = (0..p)
        .map(|c| covariates.iter().flat_map(|g| g.iter()).map(|r| r[c]).sum::<f64>() / n)
        .collect();
    let fit1 = calibration_weights(covariates[0], &target, names)?;
    let fit2 = calibration_weights(covariates[1], &target, names)?;
    Ok(BalanceWeights {
        w1: fit1.weights,
        w2: fit2.weights,
        solver_report: Some([fit1.report, fit2.report]),
    })
}

fn normalized(w: &[f64], expected: usize, group: &str) -> Result<Vec<f64>> {
    if w.len() != expected {
        return Err(RdbError::contract(format!(
            "group {group} has {} weights for {expected} samples",
            w.len()
        )));
    }
    if w.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(RdbError::contract(format!(
            "group {group} has non-positive weights"
        )));
    }
    let total: f64 = w.iter().sum();
    Ok(w.iter().map(|x| x / total).collect())
}

/// Weighted statistics of `design` over `active`.
pub fn weighted_stats(
    design: &TwoSampleDesign,
    weights: &BalanceWeights,
    active: &[usize],
) -> Result<Vec<f64>> {
    use crate::engine::StatisticSource;
    if active.is_empty() {
        return Err(RdbError::contract("active set is empty"));
    }
    let w1 = normalized(&weights.w1, design.group_size(0), design.level(0))?;
    let w2 = normalized(&weights.w2, design.group_size(1), design.level(1))?;
    GroupMeanStatistic::weighted(design, &w1, &w2).statistics(active)
}

/// The test with weighted statistics; weights are renormalized per group.
pub fn rdb_with_weights(
    design: &TwoSampleDesign,
    weights: &BalanceWeights,
    cfg: &RdbConfig,
) -> Result<TestOutcome> {
    let w1 = normalized(&weights.w1, design.group_size(0), design.level(0))?;
    let w2 = normalized(&weights.w2, design.group_size(1), design.level(1))?;
    let source = GroupMeanStatistic::weighted(design, &w1, &w2);
    let mut outcome = run_procedure(&source, ComponentLayout::of_design(design), cfg)?;
    outcome.balance = Some(BalanceWeights {
        w1,
        w2,
        solver_report: weights.solver_report.clone(),
    });
    Ok(outcome)
}

/// Calibrates weights on the covariates, then runs the weighted test. With
/// no covariate columns this is the unweighted test.
pub fn rdb_weighted(
    design: &TwoSampleDesign,
    covariates: [&[Vec<f64>]; 2],
    names: Option<&[String]>,
    cfg: &RdbConfig,
) -> Result<TestOutcome> {
    for k in 0..2 {
        if covariates[k].len() != design.group_size(k) {
            return Err(RdbError::contract(format!(
                "group {} has {} covariate rows for {} samples",
                design.level(k),
                covariates[k].len(),
                design.group_size(k)
            )));
        }
    }
    let p = covariates[0].first().map_or(0, Vec::len);
    if p == 0 {
        let mut outcome = rdb_iterate(design, cfg)?;
        outcome.balance = Some(BalanceWeights {
            w1: vec![1.0 / design.group_size(0) as f64; design.group_size(0)],
            w2: vec![1.0 / design.group_size(1) as f64; design.group_size(1)],
            solver_report: None,
        });
        return Ok(outcome);
    }
    let weights = balance_weights(covariates, names)?;
    rdb_with_weights(design, &weights, cfg)
}

/// Reads a `sample_id<TAB>weight` table.
pub fn parse_weights<R: Read>(reader: R) -> Result<HashMap<String, f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| RdbError::parse(format!("malformed weights header: {e}")))?
        .clone();
    if header.len() != 2 || header[0].trim() != "sample_id" || header[1].trim() != "weight" {
        return Err(RdbError::parse(
            "malformed weights header: expected `sample_id\tweight`",
        ));
    }
    let mut out = HashMap::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| RdbError::parse(format!("weights row {}: {e}", line + 2)))?;
        let id = rec[0].trim().to_string();
        let w: f64 = rec[1].trim().parse().map_err(|_| {
            RdbError::parse(format!("non-numeric weight \"{}\" for sample {id}", &rec[1]))
        })?;
        if !(w > 0.0 && w.is_finite()) {
            return Err(RdbError::parse(format!("weight for sample {id} must be positive")));
        }
        if out.insert(id.clone(), w).is_some() {
            return Err(RdbError::parse(format!("duplicate sample id \"{id}\" in weights")));
        }
    }
    Ok(out)
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<HashMap<String, f64>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| RdbError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_weights(std::io::BufReader::new(file))
}

/// Arranges per-sample weights into per-group vectors, normalized to sum one.
pub fn weights_for_design(
    design: &TwoSampleDesign,
    by_sample: &HashMap<String, f64>,
) -> Result<BalanceWeights> {
    let pick = |k: usize| -> Result<Vec<f64>> {
        let raw = design
            .samples(k)
            .iter()
            .map(|s| {
                by_sample
                    .get(s)
                    .copied()
                    .ok_or_else(|| RdbError::contract(format!("missing weight for sample {s}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        normalized(&raw, design.group_size(k), design.level(k))
    };
    Ok(BalanceWeights {
        w1: pick(0)?,
        w2: pick(1)?,
        solver_report: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_input_needs_no_iterations() {
        let x = vec![vec![1.0, 2.0]; 4];
        let fit = calibration_weights(&x, &[1.0, 2.0], None).unwrap();
        assert_eq!(fit.report.iterations, 0);
        assert!(fit.weights.iter().all(|&w| (w - 0.25).abs() < 1e-15));
    }

    #[test]
    fn centered_target_is_uniform() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let fit = calibration_weights(&x, &[1.0], None).unwrap();
        assert_eq!(fit.report.iterations, 0);
        assert!(fit.weights.iter().all(|&w| (w - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn two_point_closed_form() {
        // w2 / w1 = e^λ and w2 = 0.25 forces weights (0.75, 0.25).
        let x = vec![vec![0.0], vec![1.0]];
        let fit = calibration_weights(&x, &[0.25], None).unwrap();
        assert!((fit.weights[0] - 0.75).abs() < 1e-9, "{:?}", fit.weights);
        assert!((fit.weights[1] - 0.25).abs() < 1e-9);
        assert!(fit.report.balance_residual <= 1e-6);
    }

    #[test]
    fn target_outside_hull_fails() {
        let x = vec![vec![0.0], vec![1.0]];
        let names = vec!["age".to_string()];
        let err = calibration_weights(&x, &[2.0], Some(&names)).unwrap_err();
        match err {
            RdbError::CalibrationDiverged { covariate, .. } => assert_eq!(covariate, "age"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn collinear_columns_are_named() {
        let x: Vec<Vec<f64>> = (0..6)
            .map(|j| {
                let a = j as f64;
                vec![a, 2.0 * a + 1.0, (j * j) as f64]
            })
            .collect();
        let names: Vec<String> = ["age", "age2", "bmi"].iter().map(|s| s.to_string()).collect();
        let err = calibration_weights(&x, &[2.0, 5.0, 7.0], Some(&names))
            .unwrap_err()
            .to_string();
        assert!(err.contains("age") && err.contains("age2") && !err.contains("bmi"), "{err}");
    }

    #[test]
    fn dual_descends_and_balances() {
        let x: Vec<Vec<f64>> = (0..30)
            .map(|j| {
                let a = (j as f64 * 0.37).sin();
                let b = (j as f64 * 0.11).cos() + 0.1 * j as f64;
                vec![a, b]
            })
            .collect();
        // Strictly inside the hull: halfway between the full mean and the
        // mean of the first ten rows.
        let avg = |rows: &[Vec<f64>], c: usize| rows.iter().map(|r| r[c]).sum::<f64>() / rows.len() as f64;
        let target = [0, 1].map(|c| 0.5 * avg(&x, c) + 0.5 * avg(&x[..10], c));
        let fit = calibration_weights(&x, &target, None).unwrap();
        assert!(fit.dual_trace.windows(2).all(|w| w[1] <= w[0] + 1e-14));
        for c in 0..2 {
            let mean: f64 = fit.weights.iter().zip(&x).map(|(w, r)| w * r[c]).sum();
            assert!((mean - target[c]).abs() <= 1e-6);
        }
        assert!((fit.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(fit.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn affine_covariate_change_keeps_weights() {
        let x: Vec<Vec<f64>> = (0..20)
            .map(|j| vec![(j as f64 * 0.7).sin(), (j as f64).sqrt()])
            .collect();
        let target = [0.1, 2.5];
        let fit = calibration_weights(&x, &target, None).unwrap();
        let x2: Vec<Vec<f64>> = x.iter().map(|r| vec![-3.0 * r[0] + 7.0, r[1]]).collect();
        let fit2 = calibration_weights(&x2, &[-3.0 * target[0] + 7.0, target[1]], None).unwrap();
        for (a, b) in fit.weights.iter().zip(&fit2.weights) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn weights_table_roundtrip() {
        let tsv = "sample_id\tweight\ns1\t1\ns2\t3\ns3\t2\ns4\t2\n";
        let map = parse_weights(tsv.as_bytes()).unwrap();
        let design = TwoSampleDesign::from_groups(
            vec!["a".into(), "b".into()],
            vec![vec![0.5, 0.5], vec![0.4, 0.6]],
            vec![vec![0.5, 0.5], vec![0.3, 0.7]],
        )
        .unwrap();
        let renamed: HashMap<String, f64> = [("g1_1", 1.0), ("g1_2", 3.0), ("g2_1", 2.0), ("g2_2", 2.0)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let w = weights_for_design(&design, &renamed).unwrap();
        assert_eq!(w.w1, vec![0.25, 0.75]);
        assert_eq!(w.w2, vec![0.5, 0.5]);
        assert_eq!(map.len(), 4);
        assert!(parse_weights("sample_id\tweight\ns1\t-1\n".as_bytes()).is_err());
    }
}
