//! Bound-constrained maximization of black-box objectives: a binary-coded
//! genetic algorithm, a coordinate pattern search and projected-gradient
//! ascent. All three share [`BoxedProblem`] and return [`OptResult`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, SeededRng};

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("invalid problem: {0}")]
    Problem(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("method {0} needs a gradient but the problem has none")]
    MissingGradient(Method),
    #[error("unknown optimization method {0:?} (expected ga, pattern_search or nlp)")]
    Dispatch(String),
}

impl OptimizeError {
    pub fn is_numerical(&self) -> bool {
        false
    }
}

pub type Objective<'a> = Box<dyn Fn(&[f64]) -> f64 + Sync + 'a>;
pub type Gradient<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + Sync + 'a>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Maximize,
    Minimize,
}

impl Sense {
    fn sign(self) -> f64 {
        match self {
            Sense::Maximize => 1.0,
            Sense::Minimize => -1.0,
        }
    }
}

/// Objective over a box with optionally fixed coordinates. Solvers search
/// only the free coordinates; fixed ones are reinstated in every point
/// handed to the objective.
pub struct BoxedProblem<'a> {
    objective: Objective<'a>,
    gradient: Option<Gradient<'a>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    fixed: BTreeMap<usize, f64>,
    names: Vec<String>,
    sense: Sense,
}

impl fmt::Debug for BoxedProblem<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoxedProblem")
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("fixed", &self.fixed)
            .field("names", &self.names)
            .field("sense", &self.sense)
            .field("has_gradient", &self.gradient.is_some())
            .finish()
    }
}

impl<'a> BoxedProblem<'a> {
    pub fn new(
        objective: impl Fn(&[f64]) -> f64 + Sync + 'a,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self, OptimizeError> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(OptimizeError::Problem(format!(
                "bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(OptimizeError::Problem(format!(
                    "coordinate {i} has invalid bounds [{lo}, {hi}]"
                )));
            }
        }
        let names = (1..=lower.len()).map(|i| format!("x{i}")).collect();
        Ok(Self {
            objective: Box::new(objective),
            gradient: None,
            lower,
            upper,
            fixed: BTreeMap::new(),
            names,
            sense: Sense::Maximize,
        })
    }

    pub fn with_gradient(mut self, gradient: impl Fn(&[f64]) -> Vec<f64> + Sync + 'a) -> Self {
        self.gradient = Some(Box::new(gradient));
        self
    }

    pub fn with_fixed(mut self, index: usize, value: f64) -> Result<Self, OptimizeError> {
        let (Some(lo), Some(hi)) = (self.lower.get(index), self.upper.get(index)) else {
            return Err(OptimizeError::Problem(format!("no coordinate {index}")));
        };
        if !(*lo..=*hi).contains(&value) {
            return Err(OptimizeError::Problem(format!(
                "fixed value {value} of coordinate {index} is outside [{lo}, {hi}]"
            )));
        }
        self.fixed.insert(index, value);
        Ok(self)
    }

    pub fn with_names(mut self, names: &[impl AsRef<str>]) -> Result<Self, OptimizeError> {
        if names.len() != self.lower.len() {
            return Err(OptimizeError::Problem(
                "one name per coordinate required".into(),
            ));
        }
        self.names = names.iter().map(|n| n.as_ref().to_string()).collect();
        Ok(self)
    }

    /// Turns the problem into a minimization; solvers negate the objective.
    pub fn minimize(mut self) -> Self {
        self.sense = Sense::Minimize;
        self
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn fixed(&self) -> &BTreeMap<usize, f64> {
        &self.fixed
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.dimension())
            .filter(|i| !self.fixed.contains_key(i))
            .collect()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        (self.objective)(x)
    }

    fn validate(&self) -> Result<Vec<usize>, OptimizeError> {
        let free = self.free_indices();
        if free.is_empty() {
            return Err(OptimizeError::Problem(
                "no free coordinates left to optimize".into(),
            ));
        }
        Ok(free)
    }

    /// Full-dimension point from values of the free coordinates.
    fn embed(&self, free: &[usize], values: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = (0..self.dimension())
            .map(|i| self.fixed.get(&i).copied().unwrap_or(self.lower[i]))
            .collect();
        for (&i, &v) in free.iter().zip(values) {
            x[i] = v;
        }
        x
    }

    fn clamp(&self, i: usize, v: f64) -> f64 {
        v.max(self.lower[i]).min(self.upper[i])
    }

    /// Objective in maximization sense.
    fn score(&self, x: &[f64]) -> f64 {
        let v = self.sense.sign() * (self.objective)(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    fn finish(
        &self,
        method: Method,
        seed: Option<u64>,
        x: Vec<f64>,
        mut run: RunStats,
    ) -> OptResult {
        let f_star = (self.objective)(&x);
        run.evaluations += 1;
        let sign = self.sense.sign();
        OptResult {
            method,
            seed,
            names: self.names.clone(),
            x_star: x,
            f_star,
            evaluations: run.evaluations,
            iterations: run.iterations,
            converged: run.converged,
            trace: run.trace.into_iter().map(|v| sign * v).collect(),
        }
    }
}

struct RunStats {
    evaluations: usize,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub method: Method,
    pub seed: Option<u64>,
    pub names: Vec<String>,
    /// Full point, fixed coordinates included.
    pub x_star: Vec<f64>,
    /// Objective at `x_star`, re-evaluated on return.
    pub f_star: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Best objective value found so far, one entry per iteration.
    pub trace: Vec<f64>,
}

impl OptResult {
    pub fn to_json(&self) -> serde_json::Value {
        let x_star: serde_json::Map<String, serde_json::Value> = self
            .names
            .iter()
            .zip(&self.x_star)
            .map(|(n, v)| (n.clone(), serde_json::json!(v)))
            .collect();
        serde_json::json!({
            "method": self.method,
            "seed": self.seed,
            "x_star": x_star,
            "f_star": self.f_star,
            "evaluations": self.evaluations,
            "iterations": self.iterations,
            "converged": self.converged,
            "trace": self.trace,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ga,
    PatternSearch,
    Nlp,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ga, Method::PatternSearch, Method::Nlp];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Ga => "ga",
            Method::PatternSearch => "pattern_search",
            Method::Nlp => "nlp",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = OptimizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ga" | "genetic" | "genetic_algorithm" => Ok(Method::Ga),
            "ps" | "pattern" | "pattern_search" => Ok(Method::PatternSearch),
            "nlp" | "projected_gradient" => Ok(Method::Nlp),
            _ => Err(OptimizeError::Dispatch(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub bits_per_variable: u32,
    pub crossover_rate: f64,
    /// Per-bit flip probability for non-elite chromosomes.
    pub mutation_rate: f64,
    pub elite_fraction: f64,
    /// Share of the population (the least fit) replaced by offspring each generation.
    pub replacement_fraction: f64,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            generations: 200,
            bits_per_variable: 16,
            crossover_rate: 0.9,
            mutation_rate: 0.01,
            elite_fraction: 0.05,
            replacement_fraction: 0.8,
            seed: 1,
        }
    }
}

fn check_rate(name: &str, v: f64) -> Result<(), OptimizeError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(OptimizeError::Parameter(format!(
            "{name} must lie in [0, 1], got {v}"
        )))
    }
}

/// Decodes `bits` (most significant first) linearly onto `[lo, hi]`.
fn decode(bits: &[bool], lo: f64, hi: f64) -> f64 {
    let k = bits.iter().fold(0u64, |acc, b| (acc << 1) | u64::from(*b));
    let max = (1u64 << bits.len()) - 1;
    (lo + (hi - lo) * (k as f64 / max as f64)).clamp(lo, hi)
}

fn tournament(rng: &mut SeededRng, fitness: &[f64]) -> usize {
    let a = rng.random_range(0..fitness.len());
    let b = rng.random_range(0..fitness.len());
    if fitness[b] > fitness[a] {
        b
    } else {
        a
    }
}

/// Binary-coded genetic algorithm. Each generation the population is
/// evaluated and sorted by ascending fitness; the least fit
/// `replacement_fraction` is replaced by offspring of tournament-selected
/// parents (single-point crossover), then non-elite chromosomes undergo
/// bit-flip mutation. Runs exactly `generations` generations.
pub fn genetic_algorithm(p: &BoxedProblem, cfg: &GaConfig) -> Result<OptResult, OptimizeError> {
    let free = p.validate()?;
    if cfg.population_size < 4 {
        return Err(OptimizeError::Parameter(format!(
            "population size must be at least 4, got {}",
            cfg.population_size
        )));
    }
    if cfg.generations < 1 {
        return Err(OptimizeError::Parameter(
            "need at least one generation".into(),
        ));
    }
    if !(1..=52).contains(&cfg.bits_per_variable) {
        return Err(OptimizeError::Parameter(
            "bits_per_variable must lie in 1..=52".into(),
        ));
    }
    check_rate("crossover_rate", cfg.crossover_rate)?;
    check_rate("mutation_rate", cfg.mutation_rate)?;
    check_rate("elite_fraction", cfg.elite_fraction)?;
    check_rate("replacement_fraction", cfg.replacement_fraction)?;

    let n = cfg.population_size;
    let bits = cfg.bits_per_variable as usize;
    let len = bits * free.len();
    let n_elite = ((cfg.elite_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let n_replace = ((cfg.replacement_fraction * n as f64).round() as usize).min(n - n_elite);
    let mut rng = rng::seeded(cfg.seed, 0);

    let to_point = |chrom: &[bool]| -> Vec<f64> {
        let values: Vec<f64> = free
            .iter()
            .enumerate()
            .map(|(k, &i)| decode(&chrom[k * bits..(k + 1) * bits], p.lower[i], p.upper[i]))
            .collect();
        p.embed(&free, &values)
    };

    let mut population: Vec<Vec<bool>> = (0..n)
        .map(|_| (0..len).map(|_| rng.random_bool(0.5)).collect())
        .collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut trace = Vec::with_capacity(cfg.generations);
    let mut evaluations = 0;

    for generation in 0..cfg.generations {
        let points: Vec<Vec<f64>> = population.iter().map(|c| to_point(c)).collect();
        let fitness: Vec<f64> = points.par_iter().map(|x| p.score(x)).collect();
        evaluations += n;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));
        let top = order[n - 1];
        if best.as_ref().is_none_or(|(f, _)| fitness[top] > *f) {
            best = Some((fitness[top], points[top].clone()));
        }
        trace.push(best.as_ref().expect("set above").0);
        if generation + 1 == cfg.generations {
            break;
        }

        let sorted: Vec<Vec<bool>> = order.iter().map(|&i| population[i].clone()).collect();
        let sorted_fitness: Vec<f64> = order.iter().map(|&i| fitness[i]).collect();
        let mut offspring = Vec::with_capacity(n_replace + 1);
        while offspring.len() < n_replace {
            let a = &sorted[tournament(&mut rng, &sorted_fitness)];
            let b = &sorted[tournament(&mut rng, &sorted_fitness)];
            let (mut c1, mut c2) = (a.clone(), b.clone());
            if len > 1 && rng.random_bool(cfg.crossover_rate) {
                let cut = rng.random_range(1..len);
                c1[cut..].copy_from_slice(&b[cut..]);
                c2[cut..].copy_from_slice(&a[cut..]);
            }
            offspring.push(c1);
            if offspring.len() < n_replace {
                offspring.push(c2);
            }
        }
        population = offspring;
        population.extend(sorted[n_replace..].iter().cloned());
        for chrom in &mut population[..n - n_elite] {
            for gene in chrom.iter_mut() {
                if rng.random_bool(cfg.mutation_rate) {
                    *gene = !*gene;
                }
            }
        }
    }

    let window = (cfg.generations / 4).max(1);
    let last = *trace.last().expect("at least one generation");
    let earlier = trace[trace.len().saturating_sub(window + 1)];
    let converged = last - earlier <= 1e-9 * (1.0 + last.abs());
    let (_, x) = best.expect("at least one generation");
    Ok(p.finish(
        Method::Ga,
        Some(cfg.seed),
        x,
        RunStats {
            evaluations,
            iterations: cfg.generations,
            converged,
            trace,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsConfig {
    /// Initial poll step as a fraction of each coordinate's range.
    pub initial_mesh: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub min_mesh: f64,
    pub max_iterations: usize,
    /// Start point (full dimension); box center when absent.
    pub start: Option<Vec<f64>>,
}

impl Default for PsConfig {
    fn default() -> Self {
        Self {
            initial_mesh: 0.25,
            expansion: 2.0,
            contraction: 0.5,
            min_mesh: 1e-6,
            max_iterations: 2000,
            start: None,
        }
    }
}

/// Coordinate pattern search. Each iteration polls `x ± mesh·(hi − lo)·e_i`
/// (clamped to the box) for every free coordinate, moves to the best strict
/// improvement and expands the mesh, or contracts it when nothing improves.
/// Deterministic.
pub fn pattern_search(p: &BoxedProblem, cfg: &PsConfig) -> Result<OptResult, OptimizeError> {
    let free = p.validate()?;
    if !(cfg.initial_mesh > 0.0 && cfg.min_mesh > 0.0) {
        return Err(OptimizeError::Parameter(
            "mesh sizes must be positive".into(),
        ));
    }
    if !(cfg.expansion >= 1.0 && cfg.contraction > 0.0 && cfg.contraction < 1.0) {
        return Err(OptimizeError::Parameter(
            "expansion must be ≥ 1 and contraction in (0, 1)".into(),
        ));
    }
    let mut values: Vec<f64> = match &cfg.start {
        Some(s) if s.len() == p.dimension() => free.iter().map(|&i| p.clamp(i, s[i])).collect(),
        Some(_) => {
            return Err(OptimizeError::Parameter(
                "start point has the wrong dimension".into(),
            ))
        }
        None => free
            .iter()
            .map(|&i| 0.5 * (p.lower[i] + p.upper[i]))
            .collect(),
    };
    let mut x = p.embed(&free, &values);
    let mut fx = p.score(&x);
    let mut evaluations = 1;
    let mut mesh = cfg.initial_mesh;
    let mut iterations = 0;
    let mut trace = Vec::new();

    while mesh >= cfg.min_mesh && iterations < cfg.max_iterations {
        iterations += 1;
        let mut best: Option<(f64, usize, f64)> = None;
        for (k, &i) in free.iter().enumerate() {
            let step = mesh * (p.upper[i] - p.lower[i]);
            for dir in [1.0, -1.0] {
                let v = p.clamp(i, values[k] + dir * step);
                if v == values[k] {
                    continue;
                }
                let mut cand = x.clone();
                cand[i] = v;
                let fc = p.score(&cand);
                evaluations += 1;
                if fc > fx && best.is_none_or(|(fb, _, _)| fc > fb) {
                    best = Some((fc, k, v));
                }
            }
        }
        match best {
            Some((fc, k, v)) => {
                values[k] = v;
                x[free[k]] = v;
                fx = fc;
                mesh = (mesh * cfg.expansion).min(1.0);
            }
            None => mesh *= cfg.contraction,
        }
        trace.push(fx);
    }
    Ok(p.finish(
        Method::PatternSearch,
        None,
        x,
        RunStats {
            evaluations,
            iterations,
            converged: mesh < cfg.min_mesh,
            trace,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NlpConfig {
    /// Iteration cap per start.
    pub max_iterations: usize,
    pub initial_step: f64,
    /// Step shrink factor of the backtracking line search.
    pub backtracking: f64,
    pub gradient_tolerance: f64,
    /// Random interior starts in addition to the box center.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for NlpConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            initial_step: 1.0,
            backtracking: 0.5,
            gradient_tolerance: 1e-6,
            restarts: 4,
            seed: 1,
        }
    }
}

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-14;

/// Projected gradient ascent `x ← clip(x + η∇f)` with backtracking on `η`,
/// started from the box center and `restarts` seeded interior points.
/// Converged when the projected gradient `‖clip(x + ∇f) − x‖` falls below
/// `gradient_tolerance`.
pub fn nlp_solve(p: &BoxedProblem, cfg: &NlpConfig) -> Result<OptResult, OptimizeError> {
    let free = p.validate()?;
    let Some(gradient) = p.gradient.as_ref() else {
        return Err(OptimizeError::MissingGradient(Method::Nlp));
    };
    if !(cfg.initial_step > 0.0 && cfg.gradient_tolerance > 0.0) {
        return Err(OptimizeError::Parameter(
            "step and tolerance must be positive".into(),
        ));
    }
    if !(cfg.backtracking > 0.0 && cfg.backtracking < 1.0) {
        return Err(OptimizeError::Parameter(
            "backtracking factor must lie in (0, 1)".into(),
        ));
    }
    let sign = p.sense.sign();
    let free_grad = |x: &[f64]| -> Vec<f64> {
        let g = gradient(x);
        free.iter()
            .map(|&i| sign * g.get(i).copied().unwrap_or(0.0))
            .collect()
    };
    let project = |values: &[f64], dir: &[f64], step: f64| -> Vec<f64> {
        free.iter()
            .enumerate()
            .map(|(k, &i)| p.clamp(i, values[k] + step * dir[k]))
            .collect()
    };

    let mut rng = rng::seeded(cfg.seed, 0);
    let mut starts = vec![free
        .iter()
        .map(|&i| 0.5 * (p.lower[i] + p.upper[i]))
        .collect::<Vec<f64>>()];
    for _ in 0..cfg.restarts {
        starts.push(
            free.iter()
                .map(|&i| rng.random_range(p.lower[i]..=p.upper[i]))
                .collect(),
        );
    }

    let mut evaluations = 0;
    let mut iterations = 0;
    let mut trace = Vec::new();
    let mut best: Option<(f64, Vec<f64>, bool)> = None;
    for start in starts {
        let mut values = start;
        let mut x = p.embed(&free, &values);
        let mut fx = p.score(&x);
        evaluations += 1;
        let mut converged = false;
        for _ in 0..cfg.max_iterations {
            iterations += 1;
            let g = free_grad(&x);
            let pg = project(&values, &g, 1.0);
            let pg_norm = pg
                .iter()
                .zip(&values)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            if pg_norm < cfg.gradient_tolerance {
                converged = true;
            }
            let mut step = cfg.initial_step;
            let mut moved = false;
            if !converged {
                while step >= MIN_STEP {
                    let cand_values = project(&values, &g, step);
                    let cand = p.embed(&free, &cand_values);
                    let fc = p.score(&cand);
                    evaluations += 1;
                    let ascent: f64 = g
                        .iter()
                        .zip(cand_values.iter().zip(&values))
                        .map(|(gi, (c, v))| gi * (c - v))
                        .sum();
                    if fc > fx && fc >= fx + ARMIJO * ascent {
                        values = cand_values;
                        x = cand;
                        fx = fc;
                        moved = true;
                        break;
                    }
                    step *= cfg.backtracking;
                }
            }
            let best_so_far = best.as_ref().map_or(fx, |(b, _, _)| b.max(fx));
            trace.push(best_so_far);
            if converged || !moved {
                break;
            }
        }
        if best.as_ref().is_none_or(|(b, _, _)| fx > *b) {
            best = Some((fx, x, converged));
        }
    }
    let (_, x, converged) = best.expect("at least one start");
    Ok(p.finish(
        Method::Nlp,
        Some(cfg.seed),
        x,
        RunStats {
            evaluations,
            iterations,
            converged,
            trace,
        },
    ))
}

/// Configurations for every method, as consumed by [`solve`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfigs {
    pub ga: GaConfig,
    pub pattern_search: PsConfig,
    pub nlp: NlpConfig,
}

pub fn solve(
    method: Method,
    p: &BoxedProblem,
    cfg: &SolverConfigs,
) -> Result<OptResult, OptimizeError> {
    match method {
        Method::Ga => genetic_algorithm(p, &cfg.ga),
        Method::PatternSearch => pattern_search(p, &cfg.pattern_search),
        Method::Nlp => nlp_solve(p, &cfg.nlp),
    }
}

/// [`solve`] keyed by a method tag such as `"ga"`.
pub fn solve_tag(
    tag: &str,
    p: &BoxedProblem,
    cfg: &SolverConfigs,
) -> Result<OptResult, OptimizeError> {
    solve(tag.parse()?, p, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_1d<'a>() -> BoxedProblem<'a> {
        BoxedProblem::new(|x: &[f64]| -(x[0] - 0.3).powi(2), vec![0.0], vec![1.0])
            .unwrap()
            .with_gradient(|x: &[f64]| vec![-2.0 * (x[0] - 0.3)])
    }

    fn concave(center: Vec<f64>) -> BoxedProblem<'static> {
        let c2 = center.clone();
        let n = center.len();
        BoxedProblem::new(
            move |x: &[f64]| {
                -x.iter()
                    .zip(&center)
                    .map(|(a, c)| (a - c).powi(2))
                    .sum::<f64>()
            },
            vec![0.0; n],
            vec![1.0; n],
        )
        .unwrap()
        .with_gradient(move |x: &[f64]| x.iter().zip(&c2).map(|(a, c)| -2.0 * (a - c)).collect())
    }

    fn center5() -> Vec<f64> {
        vec![0.21, 0.67, 0.45, 0.83, 0.12]
    }

    fn assert_result_contract(p: &BoxedProblem, r: &OptResult) {
        for i in 0..p.dimension() {
            assert!(p.lower()[i] <= r.x_star[i] && r.x_star[i] <= p.upper()[i]);
        }
        for (i, v) in p.fixed() {
            assert_eq!(r.x_star[*i].to_bits(), v.to_bits());
        }
        assert_eq!(p.evaluate(&r.x_star), r.f_star);
    }

    #[test]
    fn problem_validation() {
        assert!(BoxedProblem::new(|_: &[f64]| 0.0, vec![1.0], vec![0.0]).is_err());
        assert!(BoxedProblem::new(|_: &[f64]| 0.0, vec![0.0, 0.0], vec![1.0]).is_err());
        let p = BoxedProblem::new(|_: &[f64]| 0.0, vec![0.0], vec![1.0]).unwrap();
        assert!(p.with_fixed(0, 2.0).is_err());
        let p = BoxedProblem::new(|_: &[f64]| 0.0, vec![0.0], vec![1.0])
            .unwrap()
            .with_fixed(0, 0.5)
            .unwrap();
        assert!(matches!(
            pattern_search(&p, &PsConfig::default()),
            Err(OptimizeError::Problem(_))
        ));
    }

    #[test]
    fn ga_quadratic_1d() {
        let p = quadratic_1d();
        let cfg = GaConfig {
            population_size: 50,
            generations: 100,
            bits_per_variable: 16,
            ..GaConfig::default()
        };
        let r = genetic_algorithm(&p, &cfg).unwrap();
        assert!((r.x_star[0] - 0.3).abs() < 1e-2, "{r:?}");
        assert_result_contract(&p, &r);
        assert_eq!(r, genetic_algorithm(&p, &cfg).unwrap());
        assert_eq!(r.trace.len(), 100);
        assert!(r.trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn ga_concave_5d() {
        let p = concave(center5());
        let r = genetic_algorithm(&p, &GaConfig::default()).unwrap();
        assert!(r.f_star >= -1e-3, "{r:?}");
        assert_result_contract(&p, &r);
    }

    #[test]
    fn ga_rejects_small_population() {
        let cfg = GaConfig {
            population_size: 3,
            ..GaConfig::default()
        };
        assert!(matches!(
            genetic_algorithm(&quadratic_1d(), &cfg),
            Err(OptimizeError::Parameter(_))
        ));
    }

    #[test]
    fn decode_hits_bounds_exactly() {
        assert_eq!(decode(&[false; 16], 0.1, 0.7), 0.1);
        assert_eq!(decode(&[true; 16], 0.1, 0.7), 0.7);
        assert!((decode(&[true, false], 0.0, 3.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn ps_quadratic_1d() {
        let cfg = PsConfig {
            min_mesh: 1e-6,
            ..PsConfig::default()
        };
        let p = quadratic_1d();
        let r = pattern_search(&p, &cfg).unwrap();
        assert!((r.x_star[0] - 0.3).abs() < cfg.min_mesh);
        assert!(r.converged);
        assert_result_contract(&p, &r);
    }

    #[test]
    fn ps_constant_objective_stays_put() {
        let p = BoxedProblem::new(|_: &[f64]| 1.0, vec![0.0, 2.0], vec![1.0, 4.0]).unwrap();
        let r = pattern_search(&p, &PsConfig::default()).unwrap();
        assert_eq!(r.x_star, vec![0.5, 3.0]);
        assert!(r.converged);
    }

    #[test]
    fn ps_boundary_maximum() {
        let p = BoxedProblem::new(|x: &[f64]| x[0], vec![0.0], vec![1.0]).unwrap();
        let r = pattern_search(&p, &PsConfig::default()).unwrap();
        assert_eq!(r.x_star[0], 1.0);
    }

    #[test]
    fn ps_trace_monotone() {
        let p = concave(center5());
        let r = pattern_search(&p, &PsConfig::default()).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1] >= w[0]));
        assert!(r.f_star >= -1e-9);
    }

    #[test]
    fn nlp_concave_interior() {
        let p = concave(center5());
        let cfg = NlpConfig {
            restarts: 0,
            ..NlpConfig::default()
        };
        let r = nlp_solve(&p, &cfg).unwrap();
        assert!(r.converged);
        assert!(r.iterations < 500);
        let g: Vec<f64> = r
            .x_star
            .iter()
            .zip(center5())
            .map(|(a, c)| -2.0 * (a - c))
            .collect();
        let pg: f64 = r
            .x_star
            .iter()
            .zip(&g)
            .map(|(x, gi)| ((x + gi).clamp(0.0, 1.0) - x).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(pg < 1e-6);
        assert_result_contract(&p, &r);
    }

    #[test]
    fn nlp_boundary_and_missing_gradient() {
        let p = BoxedProblem::new(|x: &[f64]| x[0], vec![0.0, 0.0], vec![2.0, 1.0])
            .unwrap()
            .with_gradient(|_: &[f64]| vec![1.0, 0.0]);
        let r = nlp_solve(&p, &NlpConfig::default()).unwrap();
        assert_eq!(r.x_star[0], 2.0);
        assert!(r.converged);
        let p = BoxedProblem::new(|x: &[f64]| x[0], vec![0.0], vec![1.0]).unwrap();
        assert!(matches!(
            nlp_solve(&p, &NlpConfig::default()),
            Err(OptimizeError::MissingGradient(_))
        ));
    }

    #[test]
    fn dispatch_and_agreement() {
        let p = concave(center5());
        let cfg = SolverConfigs::default();
        let values: Vec<f64> = Method::ALL
            .iter()
            .map(|m| solve(*m, &p, &cfg).unwrap().f_star)
            .collect();
        for a in &values {
            for b in &values {
                assert!((a - b).abs() <= 1e-2);
            }
        }
        assert!(matches!(
            solve_tag("simplex", &p, &cfg),
            Err(OptimizeError::Dispatch(_))
        ));
        assert_eq!(solve_tag("ga", &p, &cfg).unwrap().method, Method::Ga);
    }

    #[test]
    fn degenerate_free_coordinate() {
        let p = BoxedProblem::new(|x: &[f64]| x[0] + x[1], vec![0.0, 0.4], vec![1.0, 0.4])
            .unwrap()
            .with_gradient(|_: &[f64]| vec![1.0, 1.0])
            .with_fixed(0, 0.25)
            .unwrap();
        for m in Method::ALL {
            let r = solve(m, &p, &SolverConfigs::default()).unwrap();
            assert_eq!(r.x_star, vec![0.25, 0.4], "{m}");
        }
    }

    #[test]
    fn fixed_coordinates_preserved() {
        let fixed = 1.0 / 3.0;
        let p = concave(center5()).with_fixed(2, fixed).unwrap();
        for m in Method::ALL {
            let r = solve(m, &p, &SolverConfigs::default()).unwrap();
            assert_result_contract(&p, &r);
            assert_eq!(r.x_star[2].to_bits(), fixed.to_bits());
        }
    }

    #[test]
    fn minimization_by_negation() {
        let p = BoxedProblem::new(|x: &[f64]| (x[0] - 0.6).powi(2), vec![0.0], vec![1.0])
            .unwrap()
            .with_gradient(|x: &[f64]| vec![2.0 * (x[0] - 0.6)])
            .minimize();
        for m in Method::ALL {
            let r = solve(m, &p, &SolverConfigs::default()).unwrap();
            assert!((r.x_star[0] - 0.6).abs() < 1e-2, "{m}: {r:?}");
            assert!(r.f_star >= 0.0);
        }
    }

    #[test]
    fn json_names_coordinates() {
        let p = quadratic_1d().with_names(&["P"]).unwrap();
        let r = pattern_search(&p, &PsConfig::default()).unwrap();
        let v = r.to_json();
        assert_eq!(v["method"], "pattern_search");
        assert!(v["x_star"]["P"].is_number());
    }
}
