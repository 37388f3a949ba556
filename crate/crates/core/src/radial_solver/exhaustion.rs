//! Minimal exterior solutions as limits of annulus solutions with zero outer
//! data on growing annuli `[R, R+L_k]`.

use serde::{Deserialize, Serialize};

use super::energy::minimize_energy;
use super::newton::solve_annulus_bvp;
use super::{ExteriorProblem, Grid, Provenance, RadialSolution, SolveOptions, SolverError, SolverKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "step", rename_all = "snake_case")]
pub enum Schedule {
    /// `L_k = W·2^k`
    Doubling,
    /// `L_k = W + k·step`
    Increment(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionOptions {
    /// Width `W` of the observation window `[R, R+W]`.
    pub window: f64,
    /// The window cells are at most `window / n_window` wide.
    pub n_window: usize,
    /// Largest change of `log σ^{m−1}` across one window cell; refines the
    /// window where the weight varies quickly.
    pub max_log_weight_step: f64,
    pub k_max: usize,
    /// Sup-norm change on the window below which the sequence is settled.
    pub tol: f64,
    pub solver: SolverKind,
    pub schedule: Schedule,
    pub solve: SolveOptions,
}

impl ExhaustionOptions {
    pub fn new(window: f64, n_window: usize) -> ExhaustionOptions {
        ExhaustionOptions {
            window,
            n_window,
            max_log_weight_step: 0.25,
            k_max: 12,
            tol: 1e-10,
            solver: SolverKind::Newton,
            schedule: Schedule::Doubling,
            solve: SolveOptions::default(),
        }
    }

    pub fn width(&self, k: usize) -> f64 {
        match self.schedule {
            Schedule::Doubling => self.window * 2f64.powi(k as i32),
            Schedule::Increment(step) => self.window + step * k as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionRecord {
    pub widths: Vec<f64>,
    /// Sup-norm change on the window between consecutive widths.
    pub sup_changes: Vec<f64>,
    /// Whether the last change fell below the tolerance.
    pub settled: bool,
    /// Largest decrease `max(u_{k−1} − u_k)` seen on the window; the exact
    /// approximants increase with the width, so this should be at rounding
    /// level.
    pub monotone_violation: f64,
}

/// Builds the minimal solution with `u(R) = inner_value` by solving with zero
/// outer data on `[R, R+L_k]` for growing `L_k` until the window restriction
/// settles, and returns the last iterate restricted to the window. A sequence
/// that never settles is reported in the record, not as an error.
pub fn minimal_exterior_solution(
    prob: &ExteriorProblem,
    opts: &ExhaustionOptions,
) -> Result<RadialSolution, SolverError> {
    prob.validate()?;
    if !(opts.window > 0.0 && opts.window.is_finite()) {
        return Err(SolverError::InvalidProblem(format!(
            "window must be positive, got {}",
            opts.window
        )));
    }
    if let Schedule::Increment(step) = opts.schedule {
        if !(step > 0.0) {
            return Err(SolverError::InvalidProblem(format!(
                "increment must be positive, got {step}"
            )));
        }
    }
    let r0 = prob.r_inner;
    let window_grid = Grid::adapted(
        &prob.manifold,
        r0,
        opts.window,
        opts.n_window,
        opts.max_log_weight_step,
    )?;
    let n_w = window_grid.len() - 1;
    let mut record = ExhaustionRecord {
        widths: Vec::new(),
        sup_changes: Vec::new(),
        settled: false,
        monotone_violation: 0.0,
    };
    let mut prev: Option<RadialSolution> = None;
    let mut iterations = 0;
    for k in 0..=opts.k_max {
        let width = opts.width(k);
        let grid = window_grid.clone().with_tail(r0 + width)?;
        let guess: Option<Vec<f64>> = prev.as_ref().map(|s| {
            grid.nodes
                .iter()
                .map(|&r| s.grid.interpolate(&s.values, r))
                .collect()
        });
        let sol = match opts.solver {
            SolverKind::Newton => {
                solve_annulus_bvp(prob, width, 0.0, &grid, &opts.solve, guess.as_deref())?
            }
            SolverKind::Energy => {
                minimize_energy(prob, width, 0.0, &grid, &opts.solve, guess.as_deref())?
            }
        };
        iterations += sol.iterations;
        record.widths.push(width);
        if let Some(p) = &prev {
            let (mut change, mut drop) = (0.0f64, 0.0f64);
            for i in 0..=n_w {
                let diff = sol.values[i] - p.values[i];
                change = change.max(diff.abs());
                if -diff > drop {
                    drop = -diff;
                }
            }
            record.sup_changes.push(change);
            record.monotone_violation = record.monotone_violation.max(drop);
            if change < opts.tol {
                record.settled = true;
                prev = Some(sol);
                break;
            }
        }
        prev = Some(sol);
    }
    let last = prev.expect("at least one width is solved");
    let mut out = last.restrict(r0 + opts.window);
    out.provenance = Provenance::ExhaustionLimit;
    out.iterations = iterations;
    out.exhaustion = Some(record);
    Ok(out)
}
