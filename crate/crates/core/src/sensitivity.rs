//! Global sensitivity analysis of a black-box evaluator on the unit
//! hypercube: Sobol'–Jansen first-order and total indices, and Morris
//! elementary-effects screening.
//!
//! Evaluations may run in parallel, but every reduction walks the rows in a
//! fixed order, so results do not depend on the worker count.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

/// Output variance below which indices are undefined.
pub const MIN_VARIANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SensitivityError {
    #[error("size error: {0}")]
    Size(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("evaluator output is constant (variance {0:e}); sensitivity indices are undefined")]
    ConstantOutput(f64),
    #[error("evaluator returned a non-finite value at design row {0}")]
    NonFinite(usize),
    #[error(
        "σ is undefined with a single trajectory (set allow_single_trajectory to accept σ = 0)"
    )]
    SingleTrajectory,
    #[error("integrity error: {0}")]
    Integrity(String),
}

impl SensitivityError {
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            SensitivityError::ConstantOutput(_) | SensitivityError::NonFinite(_)
        )
    }
}

/// A pure scalar function of a point in `[0, 1]^n`.
pub trait Evaluator: Sync {
    fn evaluate(&self, x: &[f64]) -> f64;
}

impl<F> Evaluator for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Evaluates consecutive `n`-wide rows of `flat`, preserving row order.
fn evaluate_rows<F: Evaluator + ?Sized>(
    f: &F,
    flat: &[f64],
    n: usize,
) -> Result<Vec<f64>, SensitivityError> {
    let ys: Vec<f64> = flat.par_chunks(n).map(|row| f.evaluate(row)).collect();
    match ys.iter().position(|y| !y.is_finite()) {
        Some(row) => Err(SensitivityError::NonFinite(row)),
        None => Ok(ys),
    }
}

fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// Floor of the Monte Carlo slack on the indices: 0.05 at `s = 1000`,
/// shrinking as `1/√s`.
pub fn mc_tolerance(sample_size: usize) -> f64 {
    0.05 * (1000.0 / sample_size as f64).sqrt()
}

/// Standard deviations at which the reported slack is placed.
pub const MC_TOLERANCE_Z: f64 = 4.0;

/// Delta-method standard error of `Σu / Σv` from per-row terms.
fn ratio_standard_error(u: &[f64], v: &[f64]) -> f64 {
    let s = u.len() as f64;
    let (mu, mv) = (u.iter().sum::<f64>() / s, v.iter().sum::<f64>() / s);
    let r = mu / mv;
    let phi: Vec<f64> = u.iter().zip(v).map(|(a, b)| (a - r * b) / mv).collect();
    let mp = phi.iter().sum::<f64>() / s;
    (phi.iter().map(|p| (p - mp).powi(2)).sum::<f64>() / (s - 1.0) / s).sqrt()
}

/// Two independent uniform matrices `A`, `B` (`s × n`, row-major). The
/// matrices `A_B^(j)` are `A` with column `j` taken from `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct SobolDesign {
    n_factors: usize,
    sample_size: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    seed: u64,
}

impl SobolDesign {
    pub fn n_factors(&self) -> usize {
        self.n_factors
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of evaluator calls the design needs, `s·(n + 2)`.
    pub fn total_rows(&self) -> usize {
        self.sample_size * (self.n_factors + 2)
    }

    pub fn a_row(&self, i: usize) -> &[f64] {
        &self.a[i * self.n_factors..(i + 1) * self.n_factors]
    }

    pub fn b_row(&self, i: usize) -> &[f64] {
        &self.b[i * self.n_factors..(i + 1) * self.n_factors]
    }

    /// `A_B^(j)` (zero-based `j`) as row-major `s × n`.
    pub fn ab_matrix(&self, j: usize) -> Vec<f64> {
        let n = self.n_factors;
        let mut m = self.a.clone();
        for i in 0..self.sample_size {
            m[i * n + j] = self.b[i * n + j];
        }
        m
    }

    /// Every row to evaluate: the A block, the B block, then `A_B^(j)` for
    /// `j = 0..n`.
    pub fn evaluation_rows(&self) -> Vec<f64> {
        let mut rows = Vec::with_capacity(self.total_rows() * self.n_factors);
        rows.extend_from_slice(&self.a);
        rows.extend_from_slice(&self.b);
        for j in 0..self.n_factors {
            rows.extend(self.ab_matrix(j));
        }
        rows
    }
}

pub fn sobol_sample(n: usize, s: usize, seed: u64) -> Result<SobolDesign, SensitivityError> {
    if n < 1 {
        return Err(SensitivityError::Size("need at least one factor".into()));
    }
    if s < 2 {
        return Err(SensitivityError::Size(format!(
            "sample size must be at least 2, got {s}"
        )));
    }
    let mut ra = rng::seeded(seed, 0);
    let mut rb = rng::seeded(seed, 1);
    let a = (0..n * s).map(|_| ra.random::<f64>()).collect();
    let b = (0..n * s).map(|_| rb.random::<f64>()).collect();
    Ok(SobolDesign {
        n_factors: n,
        sample_size: s,
        a,
        b,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolRound {
    pub sample_size: usize,
    pub seed: u64,
    pub first_order: Vec<f64>,
    pub total: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolResult {
    pub factor_names: Vec<String>,
    pub first_order: Vec<f64>,
    pub total: Vec<f64>,
    pub variance: f64,
    pub sample_size: usize,
    pub seed: u64,
    /// Slack on each index: the larger of [`mc_tolerance`] and
    /// [`MC_TOLERANCE_Z`] estimated standard errors.
    pub mc_tolerance: f64,
    pub converged: bool,
    pub history: Vec<SobolRound>,
}

impl SobolResult {
    pub fn with_names(mut self, names: &[impl AsRef<str>]) -> Self {
        assert_eq!(names.len(), self.first_order.len(), "one name per factor");
        self.factor_names = names.iter().map(|s| s.as_ref().to_string()).collect();
        self
    }
}

/// Jansen estimators. With `yA`, `yB`, `yAB_j` the outputs on `A`, `B` and
/// `A_B^(j)`, and `V` the sample variance of `yA ∪ yB`:
///
/// ```text
/// S_j   = (V − Σ (yB − yAB_j)² / 2s) / V
/// S_T_j =      Σ (yA − yAB_j)² / 2s  / V
/// ```
///
/// Negative first-order estimates from sampling noise are reported as-is.
pub fn sobol_jansen<F: Evaluator + ?Sized>(
    f: &F,
    d: &SobolDesign,
) -> Result<SobolResult, SensitivityError> {
    let (n, s) = (d.n_factors, d.sample_size);
    let y = evaluate_rows(f, &d.evaluation_rows(), n)?;
    let (ya, rest) = y.split_at(s);
    let (yb, yab) = rest.split_at(s);

    let both = s as f64 * 2.0;
    let mean = ya.iter().chain(yb).sum::<f64>() / both;
    let variance = ya.iter().chain(yb).map(|v| (v - mean).powi(2)).sum::<f64>() / (both - 1.0);
    if !(variance >= MIN_VARIANCE) {
        return Err(SensitivityError::ConstantOutput(variance));
    }

    let spread: Vec<f64> = ya
        .iter()
        .zip(yb)
        .map(|(a, b)| ((a - mean).powi(2) + (b - mean).powi(2)) / 2.0)
        .collect();
    let mut tolerance = mc_tolerance(s);
    let mut first_order = Vec::with_capacity(n);
    let mut total = Vec::with_capacity(n);
    for j in 0..n {
        let yj = &yab[j * s..(j + 1) * s];
        let mut d_first = 0.0;
        let mut d_total = 0.0;
        for i in 0..s {
            d_first += (yb[i] - yj[i]).powi(2);
            d_total += (ya[i] - yj[i]).powi(2);
        }
        first_order.push((variance - d_first / both) / variance);
        total.push(d_total / both / variance);

        let u: Vec<f64> = (0..s).map(|i| (yb[i] - yj[i]).powi(2) / 2.0).collect();
        let w: Vec<f64> = (0..s).map(|i| (ya[i] - yj[i]).powi(2) / 2.0).collect();
        let uw: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a + b).collect();
        let se = ratio_standard_error(&u, &spread)
            .max(ratio_standard_error(&w, &spread))
            .max(ratio_standard_error(&uw, &spread));
        if se.is_finite() {
            tolerance = tolerance.max(MC_TOLERANCE_Z * se);
        }
    }
    Ok(SobolResult {
        factor_names: default_names(n),
        history: vec![SobolRound {
            sample_size: s,
            seed: d.seed,
            first_order: first_order.clone(),
            total: total.clone(),
        }],
        first_order,
        total,
        variance,
        sample_size: s,
        seed: d.seed,
        mc_tolerance: tolerance,
        converged: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SobolConvergence {
    pub initial_sample_size: usize,
    pub growth_factor: f64,
    pub tolerance: f64,
    pub max_sample_size: usize,
}

impl Default for SobolConvergence {
    fn default() -> Self {
        Self {
            initial_sample_size: 1000,
            growth_factor: 2.0,
            tolerance: 0.02,
            max_sample_size: 64_000,
        }
    }
}

/// Re-runs [`sobol_jansen`] on fresh designs of growing size until no index
/// moves by more than `tolerance` between consecutive rounds, or the next
/// size would exceed `max_sample_size`. Non-convergence is reported through
/// the `converged` flag, not as an error.
pub fn sobol_converge<F: Evaluator + ?Sized>(
    f: &F,
    n: usize,
    cfg: &SobolConvergence,
    seed: u64,
) -> Result<SobolResult, SensitivityError> {
    if cfg.initial_sample_size < 2 {
        return Err(SensitivityError::Parameter(
            "initial sample size must be at least 2".into(),
        ));
    }
    if !(cfg.growth_factor > 1.0) {
        return Err(SensitivityError::Parameter(
            "growth factor must exceed 1".into(),
        ));
    }
    if !(cfg.tolerance > 0.0) {
        return Err(SensitivityError::Parameter(
            "tolerance must be positive".into(),
        ));
    }
    let mut s = cfg.initial_sample_size;
    let mut history: Vec<SobolRound> = Vec::new();
    let mut round = 0u64;
    loop {
        let result = sobol_jansen(f, &sobol_sample(n, s, rng::derive_seed(seed, round))?)?;
        let converged = history.last().is_some_and(|prev| {
            prev.first_order
                .iter()
                .zip(&result.first_order)
                .chain(prev.total.iter().zip(&result.total))
                .all(|(a, b)| (a - b).abs() <= cfg.tolerance)
        });
        history.extend(result.history.iter().cloned());
        let next = ((s as f64 * cfg.growth_factor).ceil() as usize).max(s + 1);
        if converged || next > cfg.max_sample_size {
            return Ok(SobolResult {
                converged,
                history,
                seed,
                ..result
            });
        }
        s = next;
        round += 1;
    }
}

/// Morris one-at-a-time trajectories on a `p`-level grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorrisDesign {
    pub n_factors: usize,
    pub levels: usize,
    pub delta: f64,
    pub trajectories: usize,
    /// `trajectories · (n + 1)` points; each trajectory is contiguous.
    pub points: Vec<Vec<f64>>,
    /// Factor moved at each step of each trajectory.
    pub factor_order: Vec<Vec<usize>>,
    pub seed: u64,
}

impl MorrisDesign {
    pub fn trajectory(&self, t: usize) -> &[Vec<f64>] {
        let len = self.n_factors + 1;
        &self.points[t * len..(t + 1) * len]
    }
}

/// Grid jump `Δ = p / (2(p − 1))`.
pub fn morris_delta(levels: usize) -> f64 {
    levels as f64 / (2.0 * (levels as f64 - 1.0))
}

/// Random trajectories: each starts at a random grid point and moves every
/// factor once, in random order, by `±Δ` (the sign that stays in `[0, 1]`).
pub fn morris_trajectories(
    n: usize,
    p: usize,
    r: usize,
    seed: u64,
) -> Result<MorrisDesign, SensitivityError> {
    if n < 1 {
        return Err(SensitivityError::Size("need at least one factor".into()));
    }
    if p < 2 || !p.is_multiple_of(2) {
        return Err(SensitivityError::Parameter(format!(
            "number of levels must be even and at least 2, got {p}"
        )));
    }
    if r < 1 {
        return Err(SensitivityError::Parameter(
            "need at least one trajectory".into(),
        ));
    }
    let jump = p / 2;
    let top = (p - 1) as f64;
    let mut rng = rng::seeded(seed, 0);
    let mut points = Vec::with_capacity(r * (n + 1));
    let mut factor_order = Vec::with_capacity(r);
    for _ in 0..r {
        let mut level: Vec<usize> = (0..n).map(|_| rng.random_range(0..p)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        points.push(level.iter().map(|k| *k as f64 / top).collect());
        for &i in &order {
            level[i] = if level[i] < jump {
                level[i] + jump
            } else {
                level[i] - jump
            };
            points.push(level.iter().map(|k| *k as f64 / top).collect());
        }
        factor_order.push(order);
    }
    Ok(MorrisDesign {
        n_factors: n,
        levels: p,
        delta: morris_delta(p),
        trajectories: r,
        points,
        factor_order,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorrisResult {
    pub factor_names: Vec<String>,
    pub mu: Vec<f64>,
    pub mu_star: Vec<f64>,
    pub sigma: Vec<f64>,
    pub trajectories: usize,
    pub levels: usize,
    pub seed: u64,
}

impl MorrisResult {
    pub fn with_names(mut self, names: &[impl AsRef<str>]) -> Self {
        assert_eq!(names.len(), self.mu.len(), "one name per factor");
        self.factor_names = names.iter().map(|s| s.as_ref().to_string()).collect();
        self
    }
}

/// Elementary effects `(f(x') − f(x)) / (x'_i − x_i)` along every trajectory
/// step, summarized per factor as mean `μ`, mean absolute value `μ*` and
/// sample standard deviation `σ`. A single trajectory is rejected unless
/// `allow_single_trajectory`, in which case `σ = 0`.
pub fn elementary_effects<F: Evaluator + ?Sized>(
    f: &F,
    d: &MorrisDesign,
    allow_single_trajectory: bool,
) -> Result<MorrisResult, SensitivityError> {
    if d.trajectories == 1 && !allow_single_trajectory {
        return Err(SensitivityError::SingleTrajectory);
    }
    let n = d.n_factors;
    let flat: Vec<f64> = d.points.iter().flatten().copied().collect();
    let y = evaluate_rows(f, &flat, n)?;
    let mut effects = vec![Vec::with_capacity(d.trajectories); n];
    for t in 0..d.trajectories {
        let base = t * (n + 1);
        for (step, &i) in d.factor_order[t].iter().enumerate() {
            let (k0, k1) = (base + step, base + step + 1);
            let dx = d.points[k1][i] - d.points[k0][i];
            effects[i].push((y[k1] - y[k0]) / dx);
        }
    }
    let r = d.trajectories as f64;
    let mut mu = Vec::with_capacity(n);
    let mut mu_star = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    for e in &effects {
        let m = e.iter().sum::<f64>() / r;
        mu.push(m);
        mu_star.push(e.iter().map(|v| v.abs()).sum::<f64>() / r);
        sigma.push(if d.trajectories > 1 {
            (e.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (r - 1.0)).sqrt()
        } else {
            0.0
        });
    }
    Ok(MorrisResult {
        factor_names: default_names(n),
        mu,
        mu_star,
        sigma,
        trajectories: d.trajectories,
        levels: d.levels,
        seed: d.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactorClass {
    /// Influential with mostly linear, additive effect.
    I,
    /// Influential with nonlinear or interaction effects.
    II,
    /// Negligible.
    III,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaRule {
    /// `σ ≥ threshold` marks a nonlinear factor.
    Absolute(f64),
    /// `σ ≥ ratio · μ*` marks a nonlinear factor.
    RelativeToMuStar(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassThresholds {
    pub mu_star: f64,
    pub sigma: SigmaRule,
}

impl ClassThresholds {
    /// `μ*` cut at a tenth of the largest `μ*`; nonlinear when `σ ≥ μ*/2`.
    pub fn defaults(mr: &MorrisResult) -> Self {
        let max = mr.mu_star.iter().copied().fold(0.0, f64::max);
        Self {
            mu_star: 0.1 * max,
            sigma: SigmaRule::RelativeToMuStar(0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorClassification {
    pub factor_names: Vec<String>,
    pub classes: Vec<FactorClass>,
    pub thresholds: ClassThresholds,
}

pub fn classify_factors(
    mr: &MorrisResult,
    thresholds: ClassThresholds,
) -> Result<FactorClassification, SensitivityError> {
    let sigma_ok = match thresholds.sigma {
        SigmaRule::Absolute(t) | SigmaRule::RelativeToMuStar(t) => t > 0.0,
    };
    // A zero μ* cut only arises from defaults on an all-zero result.
    if thresholds.mu_star < 0.0 || !sigma_ok {
        return Err(SensitivityError::Parameter(
            "classification thresholds must be positive".into(),
        ));
    }
    let classes = mr
        .mu_star
        .iter()
        .zip(&mr.sigma)
        .map(|(&ms, &sd)| {
            if ms < thresholds.mu_star || ms == 0.0 {
                return FactorClass::III;
            }
            let nonlinear = match thresholds.sigma {
                SigmaRule::Absolute(t) => sd >= t,
                SigmaRule::RelativeToMuStar(k) => sd >= k * ms,
            };
            if nonlinear {
                FactorClass::II
            } else {
                FactorClass::I
            }
        })
        .collect();
    Ok(FactorClassification {
        factor_names: mr.factor_names.clone(),
        classes,
        thresholds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    /// Factor names by decreasing total index.
    pub order: Vec<String>,
    /// Factor names by decreasing `μ*`.
    pub morris_order: Vec<String>,
    /// Kendall τ between the two orders.
    pub agreement: f64,
}

impl Ranking {
    pub fn top(&self, k: usize) -> &[String] {
        &self.order[..k.min(self.order.len())]
    }
}

/// Indices of `values` sorted descending; ties keep index order.
fn descending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

/// Kendall τ-a between two permutations of the same items.
pub fn kendall_tau(order_a: &[usize], order_b: &[usize]) -> f64 {
    let n = order_a.len();
    if n < 2 {
        return 1.0;
    }
    let pos = |order: &[usize]| {
        let mut p = vec![0usize; n];
        for (rank, &item) in order.iter().enumerate() {
            p[item] = rank;
        }
        p
    };
    let (pa, pb) = (pos(order_a), pos(order_b));
    let mut score = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let sa = (pa[i] as i64 - pa[j] as i64).signum();
            let sb = (pb[i] as i64 - pb[j] as i64).signum();
            score += sa * sb;
        }
    }
    score as f64 / (n * (n - 1) / 2) as f64
}

pub fn rank_factors(
    sobol: &SobolResult,
    morris: &MorrisResult,
) -> Result<Ranking, SensitivityError> {
    if sobol.factor_names != morris.factor_names {
        return Err(SensitivityError::Integrity(format!(
            "factor sets differ: {:?} vs {:?}",
            sobol.factor_names, morris.factor_names
        )));
    }
    let by_total = descending(&sobol.total);
    let by_mu_star = descending(&morris.mu_star);
    let names = |idx: &[usize]| idx.iter().map(|i| sobol.factor_names[*i].clone()).collect();
    Ok(Ranking {
        order: names(&by_total),
        morris_order: names(&by_mu_star),
        agreement: kendall_tau(&by_total, &by_mu_star),
    })
}

/// JSON document for a Sobol' analysis.
pub fn sobol_json(r: &SobolResult) -> serde_json::Value {
    let factors: Vec<_> = r
        .factor_names
        .iter()
        .zip(r.first_order.iter().zip(&r.total))
        .map(|(name, (s, st))| serde_json::json!({ "name": name, "S": s, "S_T": st }))
        .collect();
    serde_json::json!({
        "method": "sobol_jansen",
        "seed": r.seed,
        "sample_size": r.sample_size,
        "variance": r.variance,
        "mc_tolerance": r.mc_tolerance,
        "converged": r.converged,
        "factors": factors,
        "history": r.history,
    })
}

/// JSON document for a Morris analysis with its classification.
pub fn morris_json(r: &MorrisResult, classes: &FactorClassification) -> serde_json::Value {
    let factors: Vec<_> = (0..r.mu.len())
        .map(|i| {
            serde_json::json!({
                "name": r.factor_names[i],
                "mu": r.mu[i],
                "mu_star": r.mu_star[i],
                "sigma": r.sigma[i],
                "class": classes.classes[i],
            })
        })
        .collect();
    serde_json::json!({
        "method": "morris",
        "seed": r.seed,
        "sample_size": r.trajectories,
        "levels": r.levels,
        "thresholds": classes.thresholds,
        "factors": factors,
        "history": [],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn linear2(x: &[f64]) -> f64 {
        x[0] + 2.0 * x[1]
    }

    #[test]
    fn design_shape_and_construction() {
        let d = sobol_sample(6, 1000, 7).unwrap();
        assert_eq!(d.total_rows(), 8000);
        assert_eq!(d.evaluation_rows().len(), 8000 * 6);
        let ab = d.ab_matrix(0);
        for i in 0..1000 {
            let row = &ab[i * 6..(i + 1) * 6];
            assert_eq!(row[0], d.b_row(i)[0]);
            assert_eq!(&row[1..], &d.a_row(i)[1..]);
        }
        assert!(d.evaluation_rows().iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(d, sobol_sample(6, 1000, 7).unwrap());
        assert_ne!(d, sobol_sample(6, 1000, 8).unwrap());
        assert!(matches!(
            sobol_sample(3, 1, 0),
            Err(SensitivityError::Size(_))
        ));
    }

    #[test]
    fn jansen_linear_analytic() {
        let r = sobol_jansen(&linear2, &sobol_sample(2, 10_000, 1).unwrap()).unwrap();
        assert!((r.first_order[0] - 0.2).abs() <= 0.02, "{r:?}");
        assert!((r.first_order[1] - 0.8).abs() <= 0.02, "{r:?}");
        for j in 0..2 {
            assert!((r.total[j] - r.first_order[j]).abs() <= 0.02);
        }
    }

    #[test]
    fn jansen_constant_output() {
        let r = sobol_jansen(&|_: &[f64]| 3.0, &sobol_sample(2, 100, 1).unwrap());
        assert!(matches!(r, Err(SensitivityError::ConstantOutput(_))));
    }

    #[test]
    fn jansen_non_finite_output() {
        let r = sobol_jansen(
            &|x: &[f64]| 1.0 / (x[0] - x[0]),
            &sobol_sample(2, 10, 1).unwrap(),
        );
        assert!(matches!(r, Err(SensitivityError::NonFinite(0))));
    }

    #[test]
    fn converge_linear() {
        let cfg = SobolConvergence {
            initial_sample_size: 1000,
            ..SobolConvergence::default()
        };
        let r = sobol_converge(
            &linear2,
            2,
            &SobolConvergence {
                max_sample_size: 100_000,
                ..cfg
            },
            3,
        )
        .unwrap();
        assert!(r.converged);
        let last = r.history.last().unwrap();
        assert_eq!(last.first_order, r.first_order);
        assert_eq!(last.total, r.total);
        assert_eq!(last.sample_size, r.sample_size);
    }

    #[test]
    fn converge_unreachable_tolerance() {
        let cfg = SobolConvergence {
            initial_sample_size: 10,
            growth_factor: 2.0,
            tolerance: 1e-9,
            max_sample_size: 100,
        };
        let r = sobol_converge(&linear2, 2, &cfg, 3).unwrap();
        assert!(!r.converged);
        assert!(r.history.len() >= 2);
        assert_eq!(
            r.history.iter().map(|h| h.sample_size).collect::<Vec<_>>(),
            vec![10, 20, 40, 80]
        );
        let bad = SobolConvergence {
            growth_factor: 1.0,
            ..cfg
        };
        assert!(matches!(
            sobol_converge(&linear2, 2, &bad, 3),
            Err(SensitivityError::Parameter(_))
        ));
    }

    #[test]
    fn morris_design_properties() {
        let d = morris_trajectories(6, 4, 20, 5).unwrap();
        assert!((d.delta - 4.0 / 6.0).abs() < 1e-15);
        assert_eq!(d.points.len(), 20 * 7);
        let grid = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for t in 0..20 {
            let traj = d.trajectory(t);
            for w in traj.windows(2) {
                let changed: Vec<usize> = (0..6).filter(|&i| w[0][i] != w[1][i]).collect();
                assert_eq!(changed.len(), 1);
                let i = changed[0];
                assert!(((w[1][i] - w[0][i]).abs() - d.delta).abs() < 1e-12);
            }
            let mut moved: Vec<usize> = d.factor_order[t].clone();
            moved.sort();
            assert_eq!(moved, (0..6).collect::<Vec<_>>());
        }
        assert!(d.points.iter().flatten().all(|v| grid.contains(v)));
        assert!(matches!(
            morris_trajectories(3, 5, 10, 1),
            Err(SensitivityError::Parameter(_))
        ));
    }

    #[test]
    fn morris_linear_is_exact() {
        let f = |x: &[f64]| 3.0 * x[0] + x[1] + 0.0 * x[2];
        let d = morris_trajectories(3, 4, 100, 11).unwrap();
        let r = elementary_effects(&f, &d, false).unwrap();
        for (got, want) in r.mu.iter().zip([3.0, 1.0, 0.0]) {
            assert!((got - want).abs() <= 1e-12, "{:?}", r.mu);
        }
        assert!(r.sigma.iter().all(|s| *s <= 1e-12), "{:?}", r.sigma);
        let c = classify_factors(&r, ClassThresholds::defaults(&r)).unwrap();
        assert_eq!(
            c.classes,
            vec![FactorClass::I, FactorClass::I, FactorClass::III]
        );
    }

    #[test]
    fn morris_interaction_has_spread() {
        let d = morris_trajectories(2, 4, 8, 2).unwrap();
        let r = elementary_effects(&|x: &[f64]| x[0] * x[1], &d, false).unwrap();
        assert!(r.sigma[0] > 0.0);
    }

    #[test]
    fn morris_single_trajectory() {
        let d = morris_trajectories(2, 4, 1, 2).unwrap();
        assert!(matches!(
            elementary_effects(&linear2, &d, false),
            Err(SensitivityError::SingleTrajectory)
        ));
        let r = elementary_effects(&linear2, &d, true).unwrap();
        assert_eq!(r.sigma, vec![0.0, 0.0]);
    }

    #[test]
    fn classification_by_definition() {
        let mr = MorrisResult {
            factor_names: default_names(3),
            mu: vec![3.0, 2.0, 0.0],
            mu_star: vec![3.0, 2.5, 0.0],
            sigma: vec![0.0, 2.4, 0.0],
            trajectories: 10,
            levels: 4,
            seed: 0,
        };
        let c = classify_factors(&mr, ClassThresholds::defaults(&mr)).unwrap();
        assert_eq!(
            c.classes,
            vec![FactorClass::I, FactorClass::II, FactorClass::III]
        );
        let abs = ClassThresholds {
            mu_star: 1.0,
            sigma: SigmaRule::Absolute(3.0),
        };
        assert_eq!(
            classify_factors(&mr, abs).unwrap().classes[1],
            FactorClass::I
        );
        let bad = ClassThresholds {
            mu_star: 1.0,
            sigma: SigmaRule::Absolute(0.0),
        };
        assert!(classify_factors(&mr, bad).is_err());
    }

    #[test]
    fn kendall_extremes() {
        assert_eq!(kendall_tau(&[0, 1, 2, 3], &[0, 1, 2, 3]), 1.0);
        assert_eq!(kendall_tau(&[0, 1, 2, 3], &[3, 2, 1, 0]), -1.0);
        assert_eq!(kendall_tau(&[0, 1, 2], &[1, 0, 2]), 1.0 / 3.0);
    }

    #[test]
    fn ranking_mismatch_and_order() {
        let sobol = SobolResult {
            factor_names: default_names(3),
            first_order: vec![0.1, 0.5, 0.3],
            total: vec![0.1, 0.6, 0.3],
            variance: 1.0,
            sample_size: 10,
            seed: 0,
            mc_tolerance: 0.1,
            converged: true,
            history: vec![],
        };
        let morris = MorrisResult {
            factor_names: default_names(3),
            mu: vec![0.0; 3],
            mu_star: vec![1.0, 3.0, 2.0],
            sigma: vec![0.0; 3],
            trajectories: 10,
            levels: 4,
            seed: 0,
        };
        let r = rank_factors(&sobol, &morris).unwrap();
        assert_eq!(r.order, vec!["x2", "x3", "x1"]);
        assert_eq!(r.agreement, 1.0);
        let other = morris.clone().with_names(&["a", "b", "c"]);
        assert!(matches!(
            rank_factors(&sobol, &other),
            Err(SensitivityError::Integrity(_))
        ));
    }

    fn interacting(x: &[f64]) -> f64 {
        (3.0 * x[0]).sin() + x[1] * x[1] * 2.0 + x[0] * x[2]
    }

    // For additive f the two indices coincide; at s = 10000 an estimated gap
    // above 0.03 is a tail event (about 5 in 1000 designs for this f), so the
    // bound is checked as a 99% statement over 1000 designs.
    #[test]
    fn additive_total_equals_first() {
        let f = |x: &[f64]| x[0] + (2.0 * x[1]).exp() + x[2] * x[2];
        let mut gaps: Vec<f64> = (0..1000)
            .map(|seed| {
                let r = sobol_jansen(&f, &sobol_sample(3, 10_000, seed).unwrap()).unwrap();
                (0..3)
                    .map(|j| (r.total[j] - r.first_order[j]).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        gaps.sort_by(f64::total_cmp);
        assert!(gaps[989] <= 0.03, "99th percentile gap {}", gaps[989]);
        assert!(gaps[500] <= 0.015, "median gap {}", gaps[500]);
    }

    // Single draws of the summed first-order indices scatter with sd ~0.06 at
    // s = 1000 for this function, so the bound is checked on the seed average.
    #[test]
    fn first_order_sum_bounded_on_average() {
        let sums: Vec<f64> = (0..40)
            .map(|seed| {
                let r = sobol_jansen(&interacting, &sobol_sample(3, 1000, seed).unwrap()).unwrap();
                r.first_order.iter().sum::<f64>()
            })
            .collect();
        let mean = sums.iter().sum::<f64>() / sums.len() as f64;
        assert!(mean <= 1.05, "mean sum {mean}");
    }

    proptest! {
        // The bounds below are Monte Carlo statements that hold with high but
        // not unit probability, so the seed draw is pinned for reproducibility.
        #![proptest_config(ProptestConfig {
            cases: 8,
            rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed),
            ..ProptestConfig::default()
        })]

        #[test]
        fn scaling_invariance(seed in 0u64..1000, c in 0.5f64..50.0) {
            let d = sobol_sample(3, 500, seed).unwrap();
            let a = sobol_jansen(&interacting, &d).unwrap();
            let b = sobol_jansen(&|x: &[f64]| c * interacting(x), &d).unwrap();
            for j in 0..3 {
                prop_assert!((a.first_order[j] - b.first_order[j]).abs() <= 1e-12);
                prop_assert!((a.total[j] - b.total[j]).abs() <= 1e-12);
            }
            let md = morris_trajectories(3, 4, 10, seed).unwrap();
            let ma = elementary_effects(&interacting, &md, false).unwrap();
            let mb = elementary_effects(&|x: &[f64]| c * interacting(x), &md, false).unwrap();
            for j in 0..3 {
                prop_assert!((mb.mu_star[j] - c * ma.mu_star[j]).abs() <= 1e-12 * c * ma.mu_star[j].max(1.0));
            }
        }

        #[test]
        fn per_index_bounds(seed in 0u64..1000) {
            let r = sobol_jansen(&interacting, &sobol_sample(3, 1000, seed).unwrap()).unwrap();
            for j in 0..3 {
                prop_assert!(r.first_order[j] <= r.total[j] + r.mc_tolerance);
                prop_assert!(-r.mc_tolerance <= r.first_order[j] && r.first_order[j] <= 1.0 + r.mc_tolerance);
            }
        }

        #[test]
        fn mu_star_dominates_mu(seed in 0u64..1000) {
            let r = elementary_effects(&interacting, &morris_trajectories(3, 4, 20, seed).unwrap(), false).unwrap();
            for j in 0..3 {
                prop_assert!(r.mu_star[j] >= r.mu[j].abs());
                prop_assert!(r.sigma[j] >= 0.0);
            }
        }

    }

    #[test]
    fn results_independent_of_thread_count() {
        let d = sobol_sample(3, 2000, 4).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sobol_jansen(&interacting, &d).unwrap())
        };
        let (a, b) = (run(1), run(8));
        assert_eq!(a, b);
    }
}
