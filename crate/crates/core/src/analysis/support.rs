use serde::{Deserialize, Serialize};

use crate::radial_solver::RadialSolution;

pub const TAU_U: f64 = 1e-8;
pub const TAU_G: f64 = 1e-8;
/// The vanishing region must cover at least this fraction of the radial
/// extent of the grid.
pub const SUSTAINED_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    /// Smallest node radius beyond which `u` and its divided differences
    /// stay below the thresholds up to the end of the grid.
    pub support_radius: Option<f64>,
    pub tau_u: f64,
    pub tau_g: f64,
    /// Fraction of the radial extent covered by the vanishing region (zero
    /// when there is none).
    pub vanishing_fraction: f64,
}

/// Looks for a free boundary: the smallest grid radius `ρ` with `u_i < τ_u`
/// at every node `r_i ≥ ρ` and `|δu| < τ_g` on every cell starting there,
/// provided that region covers at least [`SUSTAINED_FRACTION`] of the grid.
pub fn detect_compact_support(sol: &RadialSolution, tau_u: f64, tau_g: f64) -> SupportReport {
    let r = &sol.grid.nodes;
    let u = &sol.values;
    let s = sol.slopes();
    let n = r.len() - 1;
    // Walk backwards while the node (and the cell to its right) vanish.
    let mut k = n + 1;
    while k > 0 {
        let i = k - 1;
        let node_ok = u[i].abs() < tau_u;
        let cell_ok = i == n || s[i].abs() < tau_g;
        if !(node_ok && cell_ok) {
            break;
        }
        k = i;
    }
    let extent = r[n] - r[0];
    let (support_radius, vanishing_fraction) = if k <= n {
        let frac = (r[n] - r[k]) / extent;
        if frac >= SUSTAINED_FRACTION {
            (Some(r[k]), frac)
        } else {
            (None, frac)
        }
    } else {
        (None, 0.0)
    };
    SupportReport {
        support_radius,
        tau_u,
        tau_g,
        vanishing_fraction,
    }
}
