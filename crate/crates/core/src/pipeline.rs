//! The two-stage workflow.
//!
//! Stage 1 fits Model I (lake level from the six drivers) and ranks the
//! drivers with both sensitivity methods. Stage 2 fits Model II (runoff from
//! the lake level and the remaining drivers) and, for every calendar month,
//! maximizes predicted runoff with the lake level pinned to the reference
//! year's level for that month.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{
    self, monthly_constraint_pattern, Scaler, TimeSeriesDataset, Variable, MIN_TRAINING_RECORDS,
    MONTH_NAMES,
};
use crate::error::Error;
use crate::optimizers::{self, BoxedProblem, Method, OptResult, SolverConfigs};
use crate::rng::derive_seed;
use crate::sensitivity::{
    self, classify_factors, elementary_effects, morris_trajectories, rank_factors, sobol_converge,
    ClassThresholds, FactorClassification, MorrisResult, Ranking, SobolConvergence, SobolResult,
};
use crate::surrogate::{self, init_model_scaled, MlpModel, Samples, TrainConfig, TrainReport};

/// Drivers of the lake level (Model I inputs).
pub const LEVEL_INPUTS: [Variable; 6] = [
    Variable::P,
    Variable::R,
    Variable::G,
    Variable::E,
    Variable::Ur,
    Variable::Ug,
];

/// Model II inputs: the lake level replaces runoff, which becomes the output.
pub const RUNOFF_INPUTS: [Variable; 6] = [
    Variable::H,
    Variable::P,
    Variable::G,
    Variable::E,
    Variable::Ur,
    Variable::Ug,
];

/// Months in which the lake historically rises.
pub const FILLING_MONTHS: [u32; 8] = [11, 12, 1, 2, 3, 4, 5, 6];
/// Months in which the lake historically falls.
pub const DRAINING_MONTHS: [u32; 4] = [7, 8, 9, 10];

/// Relative disagreement above which an optimizer comparison flags a month.
pub const AGREEMENT_THRESHOLD: f64 = 0.05;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("size error: {0}")]
    Size(String),
    #[error("month {0} has no historical observations")]
    Coverage(String),
    #[error("division error: historical mean runoff over the {0} season is zero")]
    Division(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl PipelineError {
    pub fn is_numerical(&self) -> bool {
        false
    }
}

/// Which stage-2 inputs the optimizers may move. The lake level is always
/// pinned to the constraint pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundPolicy {
    /// P, G and E free within the month's observed range; Ur and Ug at their
    /// monthly means.
    PeriodicFixed,
    /// P, G, E, Ur and Ug all free within the month's observed range.
    AllFree,
    /// Every input at its monthly mean; the plan is a single model evaluation.
    AllFixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MorrisConfig {
    pub levels: usize,
    pub trajectories: usize,
    pub seed: u64,
}

impl Default for MorrisConfig {
    fn default() -> Self {
        Self {
            levels: 4,
            trajectories: 100,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub hidden_sizes: Vec<usize>,
    pub model_i: TrainConfig,
    pub model_ii: TrainConfig,
    pub sobol: SobolConvergence,
    pub sobol_seed: u64,
    pub morris: MorrisConfig,
    pub optimizers: Vec<Method>,
    pub solvers: SolverConfigs,
    pub reference_year: i32,
    pub bound_policy: BoundPolicy,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            hidden_sizes: surrogate::DEFAULT_HIDDEN.to_vec(),
            model_i: TrainConfig::default(),
            model_ii: TrainConfig::default(),
            sobol: SobolConvergence::default(),
            sobol_seed: 0,
            morris: MorrisConfig::default(),
            optimizers: Method::ALL.to_vec(),
            solvers: SolverConfigs::default(),
            reference_year: 2018,
            bound_policy: BoundPolicy::PeriodicFixed,
        }
        .with_seed(42)
    }
}

impl PipelineConfig {
    /// Sets the master seed and derives every component seed from it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.model_i.seed = derive_seed(seed, 1);
        self.model_ii.seed = derive_seed(seed, 2);
        self.sobol_seed = derive_seed(seed, 3);
        self.morris.seed = derive_seed(seed, 4);
        self.solvers.ga.seed = derive_seed(seed, 5);
        self.solvers.nlp.seed = derive_seed(seed, 6);
        self
    }
}

fn names(vars: &[Variable]) -> Vec<&'static str> {
    vars.iter().map(|v| v.name()).collect()
}

fn check_size(ds: &TimeSeriesDataset) -> Result<(), PipelineError> {
    if ds.len() < MIN_TRAINING_RECORDS {
        return Err(PipelineError::Size(format!(
            "need at least {MIN_TRAINING_RECORDS} monthly records, got {}",
            ds.len()
        )));
    }
    Ok(())
}

/// One scaler over every observed variable, shared by both stages.
pub fn fit_pipeline_scaler(ds: &TimeSeriesDataset) -> Result<Scaler, Error> {
    Ok(dataset::fit_scaler(ds, &Variable::OBSERVED)?)
}

/// Standardized samples `inputs → output` in chronological order.
pub fn training_pairs(
    ds: &TimeSeriesDataset,
    scaler: &Scaler,
    inputs: &[Variable],
    output: Variable,
) -> Result<Samples, Error> {
    let x = scaler.apply_dataset(ds, inputs)?;
    let y = scaler
        .apply_dataset(ds, &[output])?
        .into_iter()
        .map(|row| row[0])
        .collect();
    Ok(Samples::new(x, y)?)
}

/// Model II samples: inputs `(H, P, G, E, Ur, Ug)`, target `R`.
pub fn rearrange(ds: &TimeSeriesDataset, scaler: &Scaler) -> Result<Samples, Error> {
    training_pairs(ds, scaler, &RUNOFF_INPUTS, Variable::R)
}

pub fn train_surrogate(
    ds: &TimeSeriesDataset,
    scaler: &Scaler,
    inputs: &[Variable],
    output: Variable,
    hidden: &[usize],
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainReport), Error> {
    check_size(ds)?;
    let data = training_pairs(ds, scaler, inputs, output)?;
    let init = init_model_scaled(
        &names(inputs),
        output.name(),
        hidden,
        cfg.seed,
        cfg.weight_init_scale,
    )?;
    Ok(surrogate::train(&init, &data, cfg)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityOutput {
    pub sobol: SobolResult,
    pub morris: MorrisResult,
    pub classification: FactorClassification,
    pub ranking: Ranking,
}

/// Both sensitivity analyses of a model over its standardized input box.
pub fn analyze_model(model: &MlpModel, cfg: &PipelineConfig) -> Result<SensitivityOutput, Error> {
    let n = model.n_inputs();
    let f = |x: &[f64]| model.forward_unchecked(x);
    let sobol = sobol_converge(&f, n, &cfg.sobol, cfg.sobol_seed)?.with_names(model.input_names());
    let design = morris_trajectories(
        n,
        cfg.morris.levels,
        cfg.morris.trajectories,
        cfg.morris.seed,
    )?;
    let morris = elementary_effects(&f, &design, false)?.with_names(model.input_names());
    let classification = classify_factors(&morris, ClassThresholds::defaults(&morris))?;
    let ranking = rank_factors(&sobol, &morris)?;
    Ok(SensitivityOutput {
        sobol,
        morris,
        classification,
        ranking,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Output {
    pub scaler: Scaler,
    pub model: MlpModel,
    pub train_report: TrainReport,
    pub sensitivity: SensitivityOutput,
}

/// Trains Model I and ranks its inputs.
pub fn run_stage1(ds: &TimeSeriesDataset, cfg: &PipelineConfig) -> Result<Stage1Output, Error> {
    check_size(ds)?;
    let scaler = fit_pipeline_scaler(ds)?;
    let (model, train_report) = train_surrogate(
        ds,
        &scaler,
        &LEVEL_INPUTS,
        Variable::H,
        &cfg.hidden_sizes,
        &cfg.model_i,
    )?;
    let sensitivity = analyze_model(&model, cfg)?;
    Ok(Stage1Output {
        scaler,
        model,
        train_report,
        sensitivity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthSolution {
    pub method: Method,
    /// Optimal runoff, m³/s.
    pub r_star: f64,
    /// Optimal runoff, standardized.
    pub r_star_std: f64,
    /// Standardized optimal inputs by name.
    pub x_star: BTreeMap<String, f64>,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthPlan {
    pub month: u32,
    /// Lake-level constraint, m a.m.s.l.
    pub hcon: f64,
    pub hcon_std: f64,
    /// Best optimal runoff across optimizers, m³/s.
    pub r_star: f64,
    pub r_star_std: f64,
    /// Historical mean runoff of this calendar month, m³/s.
    pub r_hist_mean: f64,
    /// `r_star / r_hist_mean`; absent when the historical mean is zero.
    pub multiplier: Option<f64>,
    /// The optimum lies outside the runoff range seen in training.
    pub extrapolation: bool,
    pub converged: bool,
    pub solutions: Vec<MonthSolution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyPlan {
    pub reference_year: i32,
    pub bound_policy: BoundPolicy,
    pub months: Vec<MonthPlan>,
}

/// Stage-2 problem of one month in Model II's standardized input space.
pub fn monthly_problem<'a>(
    model: &'a MlpModel,
    ds: &TimeSeriesDataset,
    scaler: &Scaler,
    month: u32,
    hcon: f64,
    policy: BoundPolicy,
) -> Result<BoxedProblem<'a>, Error> {
    let records: Vec<_> = ds.month(month).collect();
    if records.is_empty() {
        return Err(PipelineError::Coverage(MONTH_NAMES[month as usize - 1].to_string()).into());
    }
    let hcon_std = scaler.apply(Variable::H, hcon)?;
    let mut lower = Vec::with_capacity(RUNOFF_INPUTS.len());
    let mut upper = Vec::with_capacity(RUNOFF_INPUTS.len());
    let mut fixed = Vec::new();
    for (k, var) in RUNOFF_INPUTS.iter().enumerate() {
        if *var == Variable::H {
            lower.push(hcon_std);
            upper.push(hcon_std);
            fixed.push((k, hcon_std));
            continue;
        }
        let values: Vec<f64> = records
            .iter()
            .map(|r| r.get(*var).expect("observed variable"))
            .collect();
        let stats = dataset::VarStats::from_values(&values).expect("non-empty month");
        let is_periodic = matches!(var, Variable::Ur | Variable::Ug);
        let fix_to_mean = match policy {
            BoundPolicy::PeriodicFixed => is_periodic,
            BoundPolicy::AllFree => false,
            BoundPolicy::AllFixed => true,
        };
        let (lo, hi) = (
            scaler.apply(*var, stats.min)?,
            scaler.apply(*var, stats.max)?,
        );
        if fix_to_mean {
            let mean = scaler.apply(*var, stats.mean)?.clamp(lo, hi);
            lower.push(mean);
            upper.push(mean);
            fixed.push((k, mean));
        } else {
            lower.push(lo);
            upper.push(hi);
        }
    }
    let mut problem = BoxedProblem::new(move |x: &[f64]| model.forward_unchecked(x), lower, upper)?
        .with_gradient(move |x: &[f64]| model.input_gradient_unchecked(x))
        .with_names(&names(&RUNOFF_INPUTS))?;
    for (k, v) in fixed {
        problem = problem.with_fixed(k, v)?;
    }
    Ok(problem)
}

fn solve_month(
    model: &MlpModel,
    ds: &TimeSeriesDataset,
    scaler: &Scaler,
    month: u32,
    hcon: f64,
    cfg: &PipelineConfig,
) -> Result<MonthPlan, Error> {
    let problem = monthly_problem(model, ds, scaler, month, hcon, cfg.bound_policy)?;
    let results: Vec<OptResult> = if problem.free_indices().is_empty() {
        let x: Vec<f64> = problem.lower().to_vec();
        let f = problem.evaluate(&x);
        cfg.optimizers
            .iter()
            .map(|m| OptResult {
                method: *m,
                seed: None,
                names: problem.names().to_vec(),
                x_star: x.clone(),
                f_star: f,
                evaluations: 1,
                iterations: 0,
                converged: true,
                trace: vec![f],
            })
            .collect()
    } else {
        cfg.optimizers
            .iter()
            .map(|m| optimizers::solve(*m, &problem, &cfg.solvers))
            .collect::<Result<_, _>>()?
    };

    let mut solutions = Vec::with_capacity(results.len());
    for r in &results {
        solutions.push(MonthSolution {
            method: r.method,
            r_star: scaler.inverse(Variable::R, r.f_star)?,
            r_star_std: r.f_star,
            x_star: r
                .names
                .iter()
                .cloned()
                .zip(r.x_star.iter().copied())
                .collect(),
            evaluations: r.evaluations,
            iterations: r.iterations,
            converged: r.converged,
        });
    }
    let best = solutions.iter().enumerate().fold(0, |b, (i, s)| {
        if s.r_star_std > solutions[b].r_star_std {
            i
        } else {
            b
        }
    });
    let hist: Vec<f64> = ds.month(month).map(|r| r.r).collect();
    let r_hist_mean = hist.iter().sum::<f64>() / hist.len() as f64;
    let best = &solutions[best];
    Ok(MonthPlan {
        month,
        hcon,
        hcon_std: scaler.apply(Variable::H, hcon)?,
        r_star: best.r_star,
        r_star_std: best.r_star_std,
        r_hist_mean,
        multiplier: (r_hist_mean > 0.0).then(|| best.r_star / r_hist_mean),
        extrapolation: !(0.0..=1.0).contains(&best.r_star_std),
        converged: best.converged,
        solutions,
    })
}

/// Solves the twelve monthly problems with every configured optimizer.
pub fn run_stage2(
    model: &MlpModel,
    ds: &TimeSeriesDataset,
    scaler: &Scaler,
    cfg: &PipelineConfig,
) -> Result<MonthlyPlan, Error> {
    if cfg.optimizers.is_empty() {
        return Err(PipelineError::Config("no optimizer configured".into()).into());
    }
    let expected: Vec<String> = names(&RUNOFF_INPUTS)
        .iter()
        .map(|s| s.to_string())
        .collect();
    if model.input_names() != expected.as_slice() {
        return Err(PipelineError::Config(format!(
            "Model II must take inputs {expected:?}, got {:?}",
            model.input_names()
        ))
        .into());
    }
    let pattern = monthly_constraint_pattern(ds, cfg.reference_year)?;
    let months = (1..=12u32)
        .into_par_iter()
        .map(|m| solve_month(model, ds, scaler, m, pattern[m as usize - 1], cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MonthlyPlan {
        reference_year: cfg.reference_year,
        bound_policy: cfg.bound_policy,
        months,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalSummary {
    pub filling_months: Vec<u32>,
    pub draining_months: Vec<u32>,
    /// Seasonal mean optimal runoff over seasonal mean historical runoff.
    pub filling: f64,
    pub draining: f64,
}

/// Ratio-of-means multipliers for the filling and draining seasons.
pub fn seasonal_multipliers(plan: &MonthlyPlan) -> Result<SeasonalSummary, Error> {
    let by_month: BTreeMap<u32, &MonthPlan> = plan.months.iter().map(|m| (m.month, m)).collect();
    if (1..=12).any(|m| !by_month.contains_key(&m)) {
        return Err(PipelineError::Size("plan must cover all 12 months".into()).into());
    }
    let ratio = |months: &[u32], season: &str| -> Result<f64, PipelineError> {
        let optimal: f64 = months.iter().map(|m| by_month[m].r_star).sum();
        let historical: f64 = months.iter().map(|m| by_month[m].r_hist_mean).sum();
        if historical == 0.0 {
            return Err(PipelineError::Division(season.to_string()));
        }
        Ok(optimal / historical)
    };
    Ok(SeasonalSummary {
        filling_months: FILLING_MONTHS.to_vec(),
        draining_months: DRAINING_MONTHS.to_vec(),
        filling: ratio(&FILLING_MONTHS, "filling")?,
        draining: ratio(&DRAINING_MONTHS, "draining")?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthAgreement {
    pub month: u32,
    /// Largest pairwise `|a − b| / max(|a|, |b|)` of the optimizers' runoff.
    pub max_relative_difference: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub threshold: f64,
    pub months: Vec<MonthAgreement>,
    pub max: f64,
    pub mean: f64,
    pub flagged_months: Vec<u32>,
}

fn relative_difference(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Pairwise agreement of the optimizers recorded in `plan`.
pub fn agreement(plan: &MonthlyPlan) -> Result<AgreementReport, Error> {
    let mut months = Vec::with_capacity(plan.months.len());
    for m in &plan.months {
        if m.solutions.len() < 2 {
            return Err(
                PipelineError::Config("comparison needs at least two optimizers".into()).into(),
            );
        }
        let mut worst: f64 = 0.0;
        for (i, a) in m.solutions.iter().enumerate() {
            for b in &m.solutions[i + 1..] {
                worst = worst.max(relative_difference(a.r_star, b.r_star));
            }
        }
        months.push(MonthAgreement {
            month: m.month,
            max_relative_difference: worst,
            flagged: worst > AGREEMENT_THRESHOLD,
        });
    }
    let max = months
        .iter()
        .map(|m| m.max_relative_difference)
        .fold(0.0, f64::max);
    let mean = months
        .iter()
        .map(|m| m.max_relative_difference)
        .sum::<f64>()
        / months.len().max(1) as f64;
    Ok(AgreementReport {
        threshold: AGREEMENT_THRESHOLD,
        flagged_months: months
            .iter()
            .filter(|m| m.flagged)
            .map(|m| m.month)
            .collect(),
        months,
        max,
        mean,
    })
}

/// Runs stage 2 and compares the configured optimizers month by month.
pub fn compare_optimizers(
    model: &MlpModel,
    ds: &TimeSeriesDataset,
    scaler: &Scaler,
    cfg: &PipelineConfig,
) -> Result<(MonthlyPlan, AgreementReport), Error> {
    if cfg.optimizers.len() < 2 {
        return Err(
            PipelineError::Config("comparison needs at least two optimizers".into()).into(),
        );
    }
    let plan = run_stage2(model, ds, scaler, cfg)?;
    let report = agreement(&plan)?;
    Ok((plan, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub config: PipelineConfig,
    pub stage1: Stage1Output,
    pub model_ii: MlpModel,
    pub model_ii_report: TrainReport,
    pub plan: MonthlyPlan,
    pub seasonal: SeasonalSummary,
    pub agreement: Option<AgreementReport>,
}

/// Both stages end to end.
pub fn run_pipeline(ds: &TimeSeriesDataset, cfg: &PipelineConfig) -> Result<PipelineReport, Error> {
    let stage1 = run_stage1(ds, cfg)?;
    let (model_ii, model_ii_report) = train_surrogate(
        ds,
        &stage1.scaler,
        &RUNOFF_INPUTS,
        Variable::R,
        &cfg.hidden_sizes,
        &cfg.model_ii,
    )?;
    let plan = run_stage2(&model_ii, ds, &stage1.scaler, cfg)?;
    let seasonal = seasonal_multipliers(&plan)?;
    let agreement = if cfg.optimizers.len() >= 2 {
        Some(agreement(&plan)?)
    } else {
        None
    };
    Ok(PipelineReport {
        config: cfg.clone(),
        stage1,
        model_ii,
        model_ii_report,
        plan,
        seasonal,
        agreement,
    })
}

impl PipelineReport {
    /// Plan bundle: config echo, ranking, both sensitivity results, monthly
    /// entries and the seasonal summary.
    pub fn to_json(&self) -> serde_json::Value {
        let s = &self.stage1.sensitivity;
        serde_json::json!({
            "config": self.config,
            "training": {
                "model_i": self.stage1.train_report_summary(),
                "model_ii": report_summary(&self.model_ii_report),
            },
            "ranking": s.ranking,
            "sobol": sensitivity::sobol_json(&s.sobol),
            "morris": sensitivity::morris_json(&s.morris, &s.classification),
            "monthly": plan_json(&self.plan),
            "seasonal": {
                "filling": self.seasonal.filling,
                "draining": self.seasonal.draining,
                "filling_months": self.seasonal.filling_months,
                "draining_months": self.seasonal.draining_months,
            },
            "agreement": self.agreement,
        })
    }
}

impl Stage1Output {
    fn train_report_summary(&self) -> serde_json::Value {
        report_summary(&self.train_report)
    }
}

fn report_summary(r: &TrainReport) -> serde_json::Value {
    serde_json::json!({
        "train_mse": r.train_mse,
        "validation_mse": r.validation_mse,
        "validation_r2": r.validation_r2,
        "epochs_run": r.epochs_run,
        "best_epoch": r.best_epoch,
    })
}

/// Monthly entries as exported in plan documents.
pub fn plan_json(plan: &MonthlyPlan) -> serde_json::Value {
    let months: Vec<_> = plan
        .months
        .iter()
        .map(|m| {
            serde_json::json!({
                "month": m.month,
                "Hcon": m.hcon,
                "R_star": m.r_star,
                "R_hist_mean": m.r_hist_mean,
                "multiplier": m.multiplier,
                "extrapolation_flag": m.extrapolation,
                "converged": m.converged,
                "optimizer_details": m.solutions,
            })
        })
        .collect();
    serde_json::Value::Array(months)
}

/// Flat per-month table: `month,Hcon,R_star,R_hist_mean,multiplier`.
pub fn plan_csv(plan: &MonthlyPlan) -> String {
    let mut out = String::from("month,Hcon,R_star,R_hist_mean,multiplier\n");
    for m in &plan.months {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            m.month,
            dataset::format_value(m.hcon),
            dataset::format_value(m.r_star),
            dataset::format_value(m.r_hist_mean),
            m.multiplier.map(dataset::format_value).unwrap_or_default(),
        ));
    }
    out
}
