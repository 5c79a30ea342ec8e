//! Evolutionary design of Takagi-Sugeno neuro-fuzzy systems.
//!
//! A layered chromosome encodes membership functions, the rule base,
//! parameterized Schweizer-Sklar operators and a learning rate; an
//! evolutionary algorithm searches over it, optionally fine-tuning each
//! candidate's membership functions by gradient descent.

pub mod datasets;
pub mod error;
pub mod evolution;
pub mod experiment;
pub mod fuzzy;
pub mod genome;
pub mod gradient;
pub mod rulegen;

pub use error::{Error, Result};
pub use evolution::{evolve, EaConfig, Gene, GeneKind, GeneSpace, Individual, Problem, RunHistory};
pub use experiment::{
    emit_report, fitness_pipeline, run_experiment, Benchmark, ExperimentConfig, LearningMode,
    RunReport,
};
pub use fuzzy::{
    FisKind, FuzzyInferenceSystem, FuzzyRule, FuzzyVariable, MembershipFunction, MfShape,
    OperatorParams, TsConsequent, Universe,
};
pub use genome::{EncodingSpec, Genome, OperatorMode};
pub use gradient::{gd_finetune, mf_gradients, TrainSpec};
