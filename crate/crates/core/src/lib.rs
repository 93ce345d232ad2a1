//! Two-stage surrogate workflow for lake-level management.
//!
//! Stage one trains a feedforward meta-model of lake water level from the
//! basin's monthly hydrologic drivers and ranks those drivers with
//! Sobol'–Jansen and Morris global sensitivity analysis. Stage two inverts the
//! modeling direction (runoff as the output), fixes the lake level to a
//! monthly reference pattern and maximizes runoff month by month with a
//! binary genetic algorithm, a pattern search and a projected-gradient
//! solver.
//!
//! All models, sensitivity designs and optimizers work in standardized
//! `[0, 1]` coordinates produced by [`dataset::Scaler`].

// `!(a > b)` is used on purpose so NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod optimizers;
pub mod pipeline;
pub mod rng;
pub mod sensitivity;
pub mod surrogate;

pub use dataset::{
    compute_stats, fit_scaler, load_csv, monthly_constraint_pattern, save_csv, synthesize_dataset,
    FeatureStats, MonthlyRecord, Provenance, Scaler, TimeSeriesDataset, VarStats, Variable,
};
pub use error::Error;
pub use optimizers::{
    genetic_algorithm, nlp_solve, pattern_search, solve, BoxedProblem, GaConfig, Method, NlpConfig,
    OptResult, PsConfig, SolverConfigs,
};
pub use pipeline::{
    compare_optimizers, rearrange, run_pipeline, run_stage1, run_stage2, seasonal_multipliers,
    BoundPolicy, MonthlyPlan, PipelineConfig, PipelineReport, SeasonalSummary,
};
pub use sensitivity::{
    classify_factors, elementary_effects, morris_trajectories, rank_factors, sobol_converge,
    sobol_jansen, sobol_sample, FactorClass, FactorClassification, MorrisDesign, MorrisResult,
    Ranking, SobolDesign, SobolResult,
};
pub use surrogate::{
    evaluate_r2, init_model, load_model, save_model, train, Activation, MlpModel, Samples,
    TrainConfig, TrainReport,
};
