//! Run configuration: a versioned JSON file whose fields can be overridden
//! by command-line flags. Everything is validated through the library
//! constructors before any computation starts.

use std::path::{Path, PathBuf};

use pfeller::radial_solver::{ExhaustionOptions, ExteriorProblem, LambdaSpec, SolverKind};
use pfeller::warping::{parse_sigma, Family, ModelManifold, WarpingFunction};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

/// Exhaustion and Newton controls.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Width of the observation window `[R, R + window]`.
    pub window: Option<f64>,
    /// Cells on the window.
    pub n: Option<usize>,
    pub k_max: Option<usize>,
    /// Newton residual tolerance.
    pub tol: Option<f64>,
    /// Newton (or descent) iteration budget per continuation level.
    pub max_iter: Option<usize>,
    /// Last level of the regularization continuation.
    pub eps_min: Option<f64>,
    pub kind: Option<SolverKind>,
}

/// One entry of a fixture list for `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureSpec {
    #[serde(default)]
    pub family: Option<String>,
    #[serde(default)]
    pub sigma: Option<String>,
    pub m: u32,
    pub p: f64,
    #[serde(default = "one")]
    pub lambda: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Fixtures {
    /// A named built-in set.
    Named(String),
    List(Vec<FixtureSpec>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: Option<u32>,
    pub family: Option<String>,
    pub sigma: Option<String>,
    pub m: Option<u32>,
    pub p: Option<f64>,
    pub lambda: Option<f64>,
    /// Exponent of `Λ(u) = λ u^ξ`; defaults to `p − 1`.
    pub xi: Option<f64>,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    /// `u(R)`; defaults to 1.
    pub inner_value: Option<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub fixtures: Option<Fixtures>,
    /// Deliberate corruption for negative controls in `verify`.
    pub corrupt: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|source| CliError::ConfigJson {
            path: path.to_path_buf(),
            source,
        })?;
        match cfg.schema {
            Some(SCHEMA) => Ok(cfg),
            Some(other) => Err(CliError::Config(format!(
                "unsupported schema {other} (this build reads schema {SCHEMA})"
            ))),
            None => Err(CliError::Config(format!("missing \"schema\": {SCHEMA}"))),
        }
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overridden_by(mut self, over: RunConfig) -> RunConfig {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        if over.family.is_some() || over.sigma.is_some() {
            self.family = None;
            self.sigma = None;
        }
        take!(family, sigma, m, p, lambda, xi, r, inner_value, out, format, fixtures, corrupt);
        macro_rules! take_solver {
            ($($f:ident),*) => { $( if over.solver.$f.is_some() { self.solver.$f = over.solver.$f; } )* };
        }
        take_solver!(window, n, k_max, tol, max_iter, eps_min, kind);
        self
    }

    pub fn manifold(&self) -> Result<ModelManifold, CliError> {
        let m = self.m.ok_or_else(|| CliError::Config("missing dimension (--m)".into()))?;
        build_manifold(self.family.as_deref(), self.sigma.as_deref(), m)
    }

    pub fn p(&self) -> Result<f64, CliError> {
        let p = self.p.ok_or_else(|| CliError::Config("missing exponent (--p)".into()))?;
        if !(p > 1.0 && p.is_finite()) {
            return Err(CliError::Config(format!("p must be in (1, inf), got {p}")));
        }
        Ok(p)
    }

    pub fn problem(&self) -> Result<ExteriorProblem, CliError> {
        let manifold = self.manifold()?;
        let p = self.p()?;
        let lambda = self.lambda.unwrap_or(1.0);
        let spec = if lambda == 0.0 {
            LambdaSpec::Zero
        } else {
            LambdaSpec::power_law(lambda, self.xi.unwrap_or(p - 1.0))?
        };
        let prob = ExteriorProblem::new(manifold, self.r.unwrap_or(1.0), p, spec)?;
        Ok(prob.with_inner_value(self.inner_value.unwrap_or(1.0))?)
    }

    pub fn exhaustion(&self) -> Result<ExhaustionOptions, CliError> {
        let s = &self.solver;
        let window = s.window.unwrap_or(10.0);
        let n = s.n.unwrap_or(2048);
        if !(window > 0.0 && window.is_finite()) {
            return Err(CliError::Config(format!("solver.window must be positive, got {window}")));
        }
        if n < 16 {
            return Err(CliError::Config(format!("solver.n must be at least 16, got {n}")));
        }
        let mut opts = ExhaustionOptions::new(window, n);
        if let Some(k) = s.k_max {
            opts.k_max = k;
        }
        if let Some(tol) = s.tol {
            if !(tol > 0.0) {
                return Err(CliError::Config(format!("solver.tol must be positive, got {tol}")));
            }
            opts.solve.tol = tol;
        }
        if let Some(it) = s.max_iter {
            if it == 0 {
                return Err(CliError::Config("solver.max_iter must be at least 1".into()));
            }
            opts.solve.max_iter = it;
        }
        if let Some(eps) = s.eps_min {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(CliError::Config(format!("solver.eps_min must be in (0, 1), got {eps}")));
            }
            opts.solve.eps_min = eps;
        }
        if let Some(kind) = s.kind {
            opts.solver = kind;
        }
        Ok(opts)
    }
}

pub fn build_manifold(family: Option<&str>, sigma: Option<&str>, m: u32) -> Result<ModelManifold, CliError> {
    let w = match (family, sigma) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config("give either a family or a sigma expression, not both".into()))
        }
        (Some(f), None) => WarpingFunction::family(Family::parse(f)?),
        (None, Some(s)) => parse_sigma(s)?,
        (None, None) => return Err(CliError::Config("missing manifold (--family or --sigma)".into())),
    };
    Ok(ModelManifold::new(m, w)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_is_required() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"family": "euclidean"}"#).unwrap();
        assert!(matches!(RunConfig::load(&path), Err(CliError::Config(_))));
        std::fs::write(&path, r#"{"schema": 2}"#).unwrap();
        assert!(matches!(RunConfig::load(&path), Err(CliError::Config(_))));
        std::fs::write(&path, r#"{"schema": 1, "family": "euclidean", "m": 3, "solver": {"n": 64}}"#).unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.solver.n, Some(64));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"schema": 1, "lamda": 2}"#).unwrap();
        assert!(matches!(RunConfig::load(&path), Err(CliError::ConfigJson { .. })));
    }

    #[test]
    fn flags_override_config() {
        let base = RunConfig {
            family: Some("euclidean".into()),
            m: Some(3),
            p: Some(2.0),
            solver: SolverConfig {
                n: Some(64),
                ..Default::default()
            },
            ..Default::default()
        };
        let over = RunConfig {
            sigma: Some("sinh(t)".into()),
            p: Some(3.0),
            ..Default::default()
        };
        let merged = base.overridden_by(over);
        assert_eq!(merged.family, None);
        assert_eq!(merged.sigma.as_deref(), Some("sinh(t)"));
        assert_eq!(merged.p, Some(3.0));
        assert_eq!(merged.m, Some(3));
        assert_eq!(merged.solver.n, Some(64));
    }

    #[test]
    fn problem_defaults() {
        let cfg = RunConfig {
            family: Some("euclidean".into()),
            m: Some(3),
            p: Some(3.0),
            ..Default::default()
        };
        let prob = cfg.problem().unwrap();
        assert_eq!(prob.lambda, LambdaSpec::PowerLaw { lambda: 1.0, xi: 2.0 });
        assert_eq!(prob.r_inner, 1.0);
        assert_eq!(prob.inner_value, 1.0);
        let bad = RunConfig { p: Some(1.0), ..cfg };
        assert!(bad.problem().is_err());
    }
}
