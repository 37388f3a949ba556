//! Post-processing of radial solutions into qualitative statements: decay at
//! infinity, compact support, integrability and comparison.

use thiserror::Error;

use crate::warping::EvalError;

mod comparison;
mod decay;
mod integrals;
mod support;

pub use comparison::{compare_ordering, lambda_power_comparison, power_ordering, Ordering, PowerComparison};
pub use decay::{decay_limit, DecayClass, DecayReport, Trend, FLAT_TOLERANCE, LIMIT_POSITIVE, LIMIT_ZERO};
pub use integrals::{
    default_margin, gradient_lp_check, lq_norm, weighted_sobolev_norm, GradientCheck, IntegralReport,
    TailFlag, WeightedNormReport, UNRESOLVED,
};
pub use support::{detect_compact_support, SupportReport, SUSTAINED_FRACTION, TAU_G, TAU_U};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("solutions do not share a radial interval: [{a0}, {a1}] vs [{b0}, {b1}]")]
    GridMismatch { a0: f64, a1: f64, b0: f64, b1: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
