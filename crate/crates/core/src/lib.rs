// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod warping;
pub mod classify;
pub mod radial_solver;
pub mod analysis;
