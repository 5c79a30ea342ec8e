//! Parameterized membership functions, Schweizer-Sklar operators and
//! Takagi-Sugeno inference.

mod membership;
mod operators;
mod system;

pub use membership::{MembershipFunction, MfShape, Universe, PARAM_FLOOR};
pub(crate) use operators::schweizer_sklar_grad;
pub use operators::{schweizer_sklar, tconorm, tnorm, OperatorParams, P_MAX, P_MIN};
pub use system::{
    FisKind, FuzzyInferenceSystem, FuzzyRule, FuzzyVariable, TsConsequent, FIRE_EPSILON,
};

/// Smallest partition size of an input variable.
pub const MIN_LABELS: usize = 2;
/// Largest partition size of an input variable.
pub const MAX_LABELS: usize = 4;
