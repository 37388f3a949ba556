//! Radial boundary value problems `(σ^{m−1}|u'|^{p−2}u')' = σ^{m−1}Λ(u)` on
//! annuli `[R, R+L]`, and minimal exterior solutions built by exhaustion.

mod energy;
mod exhaustion;
mod grid;
mod lambda;
mod newton;
mod output;
mod residual;
pub mod scheme;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::warping::{EvalError, ModelManifold, WarpingError};

pub use energy::{discrete_energy, minimize_energy};
pub use exhaustion::{minimal_exterior_solution, ExhaustionOptions, ExhaustionRecord, Schedule};
pub use grid::{Grid, Spacing, MAX_GRADING};
pub use lambda::LambdaSpec;
pub use newton::{solve_annulus_bvp, epsilon_schedule};
pub use output::svg_chart;
pub use residual::{weak_residual, weak_residual_rows};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub epsilon: f64,
    pub iteration: usize,
    pub residual: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("solver did not converge: {reason}")]
    NonConvergence {
        reason: String,
        trace: Vec<IterationRecord>,
    },
    #[error("boundary values must be nonnegative, got a = {a}, b = {b}")]
    InvalidBoundary { a: f64, b: f64 },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Warping(#[from] WarpingError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExteriorProblem {
    pub manifold: ModelManifold,
    pub r_inner: f64,
    pub p: f64,
    pub lambda: LambdaSpec,
    pub inner_value: f64,
}

impl ExteriorProblem {
    pub fn new(
        manifold: ModelManifold,
        r_inner: f64,
        p: f64,
        lambda: LambdaSpec,
    ) -> Result<ExteriorProblem, SolverError> {
        let prob = ExteriorProblem {
            manifold,
            r_inner,
            p,
            lambda,
            inner_value: 1.0,
        };
        prob.validate()?;
        Ok(prob)
    }

    pub fn with_inner_value(mut self, a: f64) -> Result<ExteriorProblem, SolverError> {
        self.inner_value = a;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.r_inner > 0.0 && self.r_inner.is_finite()) {
            return Err(SolverError::InvalidProblem(format!(
                "inner radius must be positive, got {}",
                self.r_inner
            )));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(SolverError::InvalidProblem(format!(
                "p must be in (1, inf), got {}",
                self.p
            )));
        }
        if !(self.inner_value >= 0.0) {
            return Err(SolverError::InvalidBoundary {
                a: self.inner_value,
                b: 0.0,
            });
        }
        if let LambdaSpec::PowerLaw { xi, .. } = self.lambda {
            if xi > self.p - 1.0 + 1e-12 {
                return Err(SolverError::InvalidProblem(format!(
                    "xi must lie in [0, p-1] = [0, {}], got {xi}",
                    self.p - 1.0
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Newton,
    Energy,
    ExhaustionLimit,
    /// Nodal values supplied by the caller, e.g. a closed-form profile.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Newton,
    Energy,
}

/// Convergence controls shared by both annulus solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Target for the residual in equation units.
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest regularization level of the ε-continuation.
    pub eps_min: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_iter: 200,
            eps_min: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSolution {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub p: f64,
    pub m: u32,
    pub lambda: LambdaSpec,
    pub manifold: ModelManifold,
    pub inner_value: f64,
    pub outer_value: f64,
    pub residual_norm: f64,
    pub epsilon_final: f64,
    pub provenance: Provenance,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exhaustion: Option<ExhaustionRecord>,
}

impl RadialSolution {
    /// Wraps caller-supplied nodal values (for instance a closed-form
    /// profile) so the analysis operations can be applied to them. The
    /// residual fields are zero and the values are taken as given.
    pub fn sampled(prob: &ExteriorProblem, grid: Grid, values: Vec<f64>) -> Result<RadialSolution, SolverError> {
        if values.len() != grid.len() {
            return Err(SolverError::InvalidGrid(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(SolverError::InvalidProblem(format!(
                "sampled values must be finite and nonnegative, got {v}"
            )));
        }
        let n = values.len() - 1;
        Ok(RadialSolution {
            inner_value: values[0],
            outer_value: values[n],
            grid,
            values,
            p: prob.p,
            m: prob.manifold.m,
            lambda: prob.lambda.clone(),
            manifold: prob.manifold.clone(),
            residual_norm: 0.0,
            epsilon_final: 0.0,
            provenance: Provenance::Sampled,
            iterations: 0,
            exhaustion: None,
        })
    }

    pub fn r_inner(&self) -> f64 {
        self.grid.first()
    }

    pub fn upper_bound(&self) -> f64 {
        self.inner_value.max(self.outer_value)
    }

    /// Divided differences on each cell.
    pub fn slopes(&self) -> Vec<f64> {
        self.values
            .windows(2)
            .zip(self.grid.nodes.windows(2))
            .map(|(u, r)| (u[1] - u[0]) / (r[1] - r[0]))
            .collect()
    }

    /// Second-order derivative estimate at every node.
    pub fn nodal_derivative(&self) -> Vec<f64> {
        let s = self.slopes();
        let r = &self.grid.nodes;
        let n = s.len();
        let mut out = Vec::with_capacity(n + 1);
        out.push(s[0]);
        for i in 1..n {
            let hl = r[i] - r[i - 1];
            let hr = r[i + 1] - r[i];
            out.push((hr * s[i - 1] + hl * s[i]) / (hl + hr));
        }
        out.push(s[n - 1]);
        out
    }

    /// Physical radial flux `σ^{m−1}|u'|^{p−2}u'` at the nodes.
    pub fn nodal_flux(&self) -> Vec<f64> {
        let du = self.nodal_derivative();
        self.grid
            .nodes
            .iter()
            .zip(du)
            .map(|(&r, d)| {
                if d == 0.0 {
                    return 0.0;
                }
                match self.manifold.log_sigma_pow(r) {
                    Ok(lw) => d.signum() * (lw + (self.p - 1.0) * d.abs().ln()).exp(),
                    Err(_) => f64::NAN,
                }
            })
            .collect()
    }

    /// Restriction to nodes with `r ≤ r_max` (at least 17 nodes kept).
    pub fn restrict(&self, r_max: f64) -> RadialSolution {
        let keep = self
            .grid
            .nodes
            .partition_point(|&r| r <= r_max * (1.0 + 1e-14))
            .max(17)
            .min(self.grid.len());
        let mut out = self.clone();
        out.grid.nodes.truncate(keep);
        out.values.truncate(keep);
        if keep < self.grid.len() {
            out.outer_value = out.values[keep - 1];
        }
        out
    }

    pub fn sup_distance(&self, other: &RadialSolution) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
