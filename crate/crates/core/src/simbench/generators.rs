//! Data generators for the benchmark scenarios.
//!
//! Every generator reads randomness from keyed streams (see [`stream`]) so a
//! replicate can be replayed on its own, in any order, on any thread.

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp1, Poisson, StandardNormal};
use serde::Serialize;

use super::{EffectSetting, Scenario, ScenarioKind};
use crate::data::CountMatrix;
use crate::error::{RdbError, Result};

/// Purpose of a random stream within one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Effects = 0,
    Abundance = 1,
    Depth = 2,
    Multinomial = 3,
    Covariates = 4,
    Labels = 5,
    Layout = 6,
    Outcome = 7,
}

const ROLES_PER_REPLICATE: u64 = 16;

/// Independent generator for `(seed, replicate, role)`.
pub fn stream(seed: u64, replicate: u64, role: Role) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate * ROLES_PER_REPLICATE + role as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    /// Planted differential components, ascending.
    pub differential: Vec<usize>,
    /// Fold change per component; exactly 1 off the differential set.
    pub effect_sizes: Vec<f64>,
}

impl GroundTruth {
    pub fn null(d: usize) -> Self {
        GroundTruth {
            differential: Vec::new(),
            effect_sizes: vec![1.0; d],
        }
    }
}

/// One simulated data set with everything a method might need.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub counts: CountMatrix,
    /// Group label per sample ("1" or "2"); empty for continuous outcomes.
    pub labels: Vec<String>,
    /// Observed covariate row per sample.
    pub covariates: Option<Vec<Vec<f64>>>,
    pub outcome: Option<Vec<f64>>,
    pub truth: GroundTruth,
}

pub fn gen_effect_sizes<R: Rng + ?Sized>(
    d: usize,
    s: usize,
    setting: EffectSetting,
    rng: &mut R,
) -> Result<GroundTruth> {
    if s > d {
        return Err(RdbError::config(format!("s = {s} exceeds d = {d}")));
    }
    let chosen = index::sample(rng, d, s).into_vec();
    let mut effect_sizes = vec![1.0; d];
    let high = s.div_ceil(2);
    for (rank, &i) in chosen.iter().enumerate() {
        effect_sizes[i] = match setting {
            EffectSetting::Increase => rng.random_range(1.0..5.0),
            EffectSetting::Mixed if rank < high => rng.random_range(1.0..5.0),
            EffectSetting::Mixed => rng.random_range(0.2..1.0),
        };
    }
    let mut differential = chosen;
    differential.sort_unstable();
    Ok(GroundTruth {
        differential,
        effect_sizes,
    })
}

/// `d` values split 60/30/10 over three levels (floors for the first two,
/// remainder to the last), in shuffled positions.
pub fn category_vector<R: Rng + ?Sized>(d: usize, levels: [f64; 3], rng: &mut R) -> Vec<f64> {
    let n0 = (0.6 * d as f64).floor() as usize;
    let n1 = (0.3 * d as f64).floor() as usize;
    let mut v: Vec<f64> = std::iter::repeat_n(levels[0], n0)
        .chain(std::iter::repeat_n(levels[1], n1))
        .chain(std::iter::repeat_n(levels[2], d - n0 - n1))
        .collect();
    v.shuffle(rng);
    v
}

/// Multinomial draw by sequential conditional binomials.
pub fn multinomial<R: Rng + ?Sized>(total: u64, weights: &[f64], rng: &mut R) -> Result<Vec<u64>> {
    let mut mass: f64 = weights.iter().sum();
    if !(mass > 0.0) || weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(RdbError::contract("multinomial weights must be non-negative with positive sum"));
    }
    let mut left = total;
    let mut out = vec![0u64; weights.len()];
    let last = weights.iter().rposition(|&w| w > 0.0).expect("positive mass");
    for (i, &w) in weights.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i == last {
            out[i] = left;
            break;
        }
        if w <= 0.0 {
            continue;
        }
        let p = (w / mass).clamp(0.0, 1.0);
        let x = Binomial::new(left, p)
            .map_err(|e| RdbError::contract(format!("binomial draw: {e}")))?
            .sample(rng);
        out[i] = x;
        left -= x;
        mass -= w;
    }
    Ok(out)
}

fn depth_bounds(sc: &Scenario, group: usize) -> (u64, u64) {
    let (lo, hi) = sc.depth_range;
    if group == 0 {
        (lo, hi)
    } else {
        let lo2 = ((lo as f64 / sc.beta).ceil() as u64).max(1);
        let hi2 = ((hi as f64 / sc.beta).floor() as u64).max(lo2);
        (lo2, hi2)
    }
}

fn sample_ids(n: usize) -> Vec<String> {
    (1..=n).map(|j| format!("s{j}")).collect()
}

fn component_ids(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("c{i}")).collect()
}

fn group_labels(m1: usize, m2: usize) -> Vec<String> {
    std::iter::repeat_n("1".to_string(), m1)
        .chain(std::iter::repeat_n("2".to_string(), m2))
        .collect()
}

/// Multinomial readout of per-sample abundances; `groups[j]` picks the
/// depth range of sample `j`.
fn read_out(
    sc: &Scenario,
    replicate: u64,
    abundances: &[Vec<f64>],
    groups: &[usize],
) -> Result<CountMatrix> {
    let d = abundances.first().map_or(0, Vec::len);
    let mut depth_rng = stream(sc.seed, replicate, Role::Depth);
    let mut multi_rng = stream(sc.seed, replicate, Role::Multinomial);
    let mut rows = vec![Vec::with_capacity(abundances.len()); d];
    for (a, &k) in abundances.iter().zip(groups) {
        let (lo, hi) = depth_bounds(sc, k);
        let depth = depth_rng.random_range(lo..=hi);
        let counts = multinomial(depth, a, &mut multi_rng)?;
        for (row, c) in rows.iter_mut().zip(counts) {
            row.push(c);
        }
    }
    CountMatrix::new(component_ids(d), sample_ids(abundances.len()), rows)
}

/// Poisson abundances with mean `rates`; one redraw if all are zero.
fn poisson_vector<R: Rng + ?Sized>(rates: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    for _ in 0..2 {
        let v: Vec<f64> = rates
            .iter()
            .map(|&r| {
                if r > 0.0 {
                    Poisson::new(r).expect("positive rate").sample(rng)
                } else {
                    0.0
                }
            })
            .collect();
        if v.iter().any(|&x| x > 0.0) {
            return Ok(v);
        }
    }
    Err(RdbError::contract("simulated sample has zero total abundance twice"))
}

pub fn gen_poisson_gamma(sc: &Scenario, replicate: u64) -> Result<SimulatedData> {
    let mut effects_rng = stream(sc.seed, replicate, Role::Effects);
    let truth = gen_effect_sizes(sc.d, sc.s, sc.effect_setting, &mut effects_rng)?;
    let gamma = category_vector(
        sc.d,
        [50.0, 200.0, 10000.0],
        &mut stream(sc.seed, replicate, Role::Layout),
    );
    let mut rng = stream(sc.seed, replicate, Role::Abundance);
    let shifted: Vec<f64> = gamma
        .iter()
        .zip(&truth.effect_sizes)
        .map(|(g, a)| g * a)
        .collect();
    let mut abundances = Vec::with_capacity(sc.m1 + sc.m2);
    let mut groups = Vec::with_capacity(sc.m1 + sc.m2);
    for (k, m, rates) in [(0, sc.m1, &gamma), (1, sc.m2, &shifted)] {
        for _ in 0..m {
            abundances.push(poisson_vector(rates, &mut rng)?);
            groups.push(k);
        }
    }
    Ok(SimulatedData {
        counts: read_out(sc, replicate, &abundances, &groups)?,
        labels: group_labels(sc.m1, sc.m2),
        covariates: None,
        outcome: None,
        truth,
    })
}

/// Poisson abundances whose rate moves linearly with a uniform outcome:
/// `rate_i = (1 + (a_i - 1) y) * gamma_i`. Uses `m1` samples.
pub fn gen_poisson_gamma_continuous(sc: &Scenario, replicate: u64) -> Result<SimulatedData> {
    let mut effects_rng = stream(sc.seed, replicate, Role::Effects);
    let truth = gen_effect_sizes(sc.d, sc.s, sc.effect_setting, &mut effects_rng)?;
    let gamma = category_vector(
        sc.d,
        [50.0, 200.0, 10000.0],
        &mut stream(sc.seed, replicate, Role::Layout),
    );
    let mut y_rng = stream(sc.seed, replicate, Role::Outcome);
    let outcome: Vec<f64> = (0..sc.m1).map(|_| y_rng.random::<f64>()).collect();
    let mut rng = stream(sc.seed, replicate, Role::Abundance);
    let abundances = outcome
        .iter()
        .map(|y| {
            let rates: Vec<f64> = gamma
                .iter()
                .zip(&truth.effect_sizes)
                .map(|(g, a)| (1.0 + (a - 1.0) * y) * g)
                .collect();
            poisson_vector(&rates, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulatedData {
        counts: read_out(sc, replicate, &abundances, &vec![0; sc.m1])?,
        labels: Vec::new(),
        covariates: None,
        outcome: Some(outcome),
        truth,
    })
}

/// Stationary AR(1) standard-normal vector with lag-one correlation `rho`.
pub fn ar1_normal<R: Rng + ?Sized>(d: usize, rho: f64, rng: &mut R) -> Vec<f64> {
    let innovation = (1.0 - rho * rho).sqrt();
    let mut z = Vec::with_capacity(d);
    let mut prev = 0.0;
    for l in 0..d {
        let e: f64 = rng.sample(StandardNormal);
        prev = if l == 0 { e } else { rho * prev + innovation * e };
        z.push(prev);
    }
    z
}

pub fn gen_lognormal(sc: &Scenario, replicate: u64) -> Result<SimulatedData> {
    let mut effects_rng = stream(sc.seed, replicate, Role::Effects);
    let truth = gen_effect_sizes(sc.d, sc.s, sc.effect_setting, &mut effects_rng)?;
    let mu = category_vector(sc.d, [3.0, 5.0, 10.0], &mut stream(sc.seed, replicate, Role::Layout));
    let log_a: Vec<f64> = truth.effect_sizes.iter().map(|a| a.ln()).collect();
    let mut rng = stream(sc.seed, replicate, Role::Abundance);
    let mut abundances = Vec::with_capacity(sc.m1 + sc.m2);
    let mut groups = Vec::with_capacity(sc.m1 + sc.m2);
    for (k, m) in [(0usize, sc.m1), (1, sc.m2)] {
        for _ in 0..m {
            let z = ar1_normal(sc.d, sc.rho, &mut rng);
            let a = (0..sc.d)
                .map(|i| {
                    let shift = if k == 1 { log_a[i] } else { 0.0 };
                    (mu[i] + shift + z[i]).exp()
                })
                .collect();
            abundances.push(a);
            groups.push(k);
        }
    }
    Ok(SimulatedData {
        counts: read_out(sc, replicate, &abundances, &groups)?,
        labels: group_labels(sc.m1, sc.m2),
        covariates: None,
        outcome: None,
        truth,
    })
}

/// Number of latent (and observed) covariates in the confounded scenario.
pub const N_COVARIATES: usize = 5;

pub fn gen_lognormal_cov(sc: &Scenario, replicate: u64) -> Result<SimulatedData> {
    let mut effects_rng = stream(sc.seed, replicate, Role::Effects);
    let truth = gen_effect_sizes(sc.d, sc.s, sc.effect_setting, &mut effects_rng)?;
    let mut layout = stream(sc.seed, replicate, Role::Layout);
    let amplitude = category_vector(sc.d, [1.0, 2.0, 3.0], &mut layout);
    let coefficients: Vec<[f64; N_COVARIATES]> = amplitude
        .iter()
        .map(|&lam| {
            let sign = if layout.random::<bool>() { 1.0 } else { -1.0 };
            std::array::from_fn(|_| sign * lam * layout.random::<f64>())
        })
        .collect();

    let mut cov_rng = stream(sc.seed, replicate, Role::Covariates);
    let mut noise_rng = stream(sc.seed, replicate, Role::Abundance);
    let n = sc.m1 + sc.m2;
    let mut abundances = Vec::with_capacity(n);
    let mut covariates = Vec::with_capacity(n);
    let mut groups = Vec::with_capacity(n);
    for (k, m) in [(0usize, sc.m1), (1, sc.m2)] {
        let centre = if k == 0 { sc.eta } else { -sc.eta };
        for _ in 0..m {
            let w: [f64; N_COVARIATES] =
                std::array::from_fn(|_| centre + cov_rng.sample::<f64, _>(StandardNormal));
            covariates.push(w.iter().map(|v| v.exp() + v).collect::<Vec<f64>>());
            let a = coefficients
                .iter()
                .zip(&truth.effect_sizes)
                .map(|(b, eff)| {
                    let lin: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                    let noise: f64 = noise_rng.sample(Exp1);
                    let base = lin.exp() + noise;
                    if k == 1 {
                        2.0 * eff * base
                    } else {
                        base
                    }
                })
                .collect();
            abundances.push(a);
            groups.push(k);
        }
    }
    Ok(SimulatedData {
        counts: read_out(sc, replicate, &abundances, &groups)?,
        labels: group_labels(sc.m1, sc.m2),
        covariates: Some(covariates),
        outcome: None,
        truth,
    })
}

/// Draws `m1 + m2` source samples without replacement and splits them at
/// random into two groups. The truth is the global null.
pub fn gen_shuffle<R: Rng + ?Sized>(
    source: &CountMatrix,
    m1: usize,
    m2: usize,
    rng: &mut R,
) -> Result<SimulatedData> {
    let n = source.n_samples();
    if m1 + m2 > n {
        return Err(RdbError::contract(format!(
            "cannot draw {} samples from a source with {n}",
            m1 + m2
        )));
    }
    let picked = index::sample(rng, n, m1 + m2).into_vec();
    let counts = source.select_samples(&picked)?;
    Ok(SimulatedData {
        counts,
        labels: group_labels(m1, m2),
        covariates: None,
        outcome: None,
        truth: GroundTruth::null(source.n_components()),
    })
}

pub fn generate(sc: &Scenario, replicate: u64) -> Result<SimulatedData> {
    match sc.kind {
        ScenarioKind::PoissonGamma => gen_poisson_gamma(sc, replicate),
        ScenarioKind::PoissonGammaContinuous => gen_poisson_gamma_continuous(sc, replicate),
        ScenarioKind::LogNormal => gen_lognormal(sc, replicate),
        ScenarioKind::LogNormalCov => gen_lognormal_cov(sc, replicate),
        ScenarioKind::Shuffle => {
            let source = sc
                .source_counts
                .as_deref()
                .ok_or_else(|| RdbError::config("shuffle scenario needs source counts"))?;
            gen_shuffle(source, sc.m1, sc.m2, &mut stream(sc.seed, replicate, Role::Labels))
        }
    }
}
