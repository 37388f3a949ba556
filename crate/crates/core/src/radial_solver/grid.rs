use serde::{Deserialize, Serialize};

use crate::warping::ModelManifold;

use super::SolverError;

/// Largest ratio between consecutive cells in a graded tail.
pub const MAX_GRADING: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Uniform,
    Graded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nodes: Vec<f64>,
    pub spacing: Spacing,
}

impl Grid {
    pub fn new(nodes: Vec<f64>, spacing: Spacing) -> Result<Grid, SolverError> {
        if nodes.len() < 17 {
            return Err(SolverError::InvalidGrid(format!(
                "need at least 16 intervals, got {}",
                nodes.len().saturating_sub(1)
            )));
        }
        if let Some(w) = nodes.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(SolverError::InvalidGrid(format!(
                "nodes must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Grid { nodes, spacing })
    }

    /// `n` equal intervals on `[a, b]`.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Grid, SolverError> {
        let h = (b - a) / n as f64;
        let mut nodes: Vec<f64> = (0..=n).map(|i| a + h * i as f64).collect();
        if let Some(last) = nodes.last_mut() {
            *last = b;
        }
        Grid::new(nodes, Spacing::Uniform)
    }

    /// `n` equal intervals on `[r0, r0 + window]`, followed by a geometric tail
    /// up to `r0 + total` (see [`with_tail`](Self::with_tail)).
    pub fn window_with_tail(r0: f64, window: f64, n: usize, total: f64) -> Result<Grid, SolverError> {
        Grid::uniform(r0, r0 + window, n)?.with_tail(r0 + total)
    }

    /// Nodes on `[r0, r0 + width]` with cells at most `width/n` wide and,
    /// where the weight `σ^{m−1}` varies quickly, small enough that
    /// `log σ^{m−1}` changes by at most `kappa` across a cell. On slowly
    /// varying weights this is the uniform grid.
    pub fn adapted(
        manifold: &ModelManifold,
        r0: f64,
        width: f64,
        n: usize,
        kappa: f64,
    ) -> Result<Grid, SolverError> {
        if !(kappa > 0.0) {
            return Err(SolverError::InvalidGrid(format!(
                "log-weight step must be positive, got {kappa}"
            )));
        }
        let h_max = width / n as f64;
        let end = r0 + width;
        let slope = |r: f64| -> Result<f64, SolverError> {
            Ok(manifold.log_sigma_pow_derivative(r)?.abs())
        };
        let step = |r: f64| -> Result<f64, SolverError> {
            let mut h = h_max;
            // Two passes so the bound also holds at the cell's far end.
            for _ in 0..2 {
                let g = slope(r)?.max(slope((r + h).min(end))?);
                h = h_max.min(kappa / g.max(1e-300));
            }
            Ok(h)
        };
        let mut nodes = vec![r0];
        let mut r = r0;
        let mut graded = false;
        while r < end {
            let h = step(r)?;
            graded |= h < h_max * (1.0 - 1e-12);
            let next = r + h;
            if next >= end - 0.5 * h {
                break;
            }
            nodes.push(next);
            r = next;
        }
        nodes.push(end);
        if !graded {
            return Grid::uniform(r0, end, n);
        }
        Grid::new(nodes, Spacing::Graded)
    }

    /// Appends a geometric tail up to `end` whose first cell continues the
    /// last cell of `self` and whose cells grow by [`MAX_GRADING`]; only the
    /// last cell is cut short to land on `end`.
    pub fn with_tail(mut self, end: f64) -> Result<Grid, SolverError> {
        let last = self.last();
        if !(end >= last) {
            return Err(SolverError::InvalidGrid(format!(
                "tail end {end} lies before the last node {last}"
            )));
        }
        let rest = end - last;
        if rest <= 1e-12 * end.abs().max(1.0) {
            return Ok(self);
        }
        let n = self.nodes.len();
        let h0 = self.nodes[n - 1] - self.nodes[n - 2];
        let cells = tail_cells(h0, rest);
        let mut r = last;
        for (j, c) in cells.iter().enumerate() {
            r += c;
            if j + 1 == cells.len() {
                r = end;
            }
            self.nodes.push(r);
        }
        self.spacing = Spacing::Graded;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn first(&self) -> f64 {
        self.nodes[0]
    }

    pub fn last(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Index of the last node `≤ r` (clamped to the grid).
    pub fn locate(&self, r: f64) -> usize {
        let i = self.nodes.partition_point(|&x| x <= r);
        i.saturating_sub(1).min(self.nodes.len() - 2)
    }

    /// Piecewise-linear interpolation of nodal `values` at `r`; zero beyond the
    /// last node.
    pub fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        if r > self.last() {
            return 0.0;
        }
        if r <= self.first() {
            return values[0];
        }
        let i = self.locate(r);
        let (a, b) = (self.nodes[i], self.nodes[i + 1]);
        let t = (r - a) / (b - a);
        values[i] * (1.0 - t) + values[i + 1] * t
    }
}

/// Cells summing to `rest`: `h0·q^j` with `q = MAX_GRADING` for as long as
/// they fit, then whatever remains as a shorter last cell. The cells do not
/// depend on `rest` except at the very end, so the grids built for growing
/// widths are nested up to their last node and the exhaustion iterates are
/// compared on identical nodes. A remainder below `1e−10` of a cell is merged
/// into the previous cell instead of creating a sliver.
fn tail_cells(h0: f64, rest: f64) -> Vec<f64> {
    let mut cells = Vec::new();
    let mut total = 0.0;
    let mut c = h0;
    loop {
        c *= MAX_GRADING;
        if total + c >= rest {
            break;
        }
        cells.push(c);
        total += c;
    }
    let remainder = rest - total;
    match cells.last_mut() {
        Some(last) if remainder < 1e-10 * c => *last += remainder,
        _ => cells.push(remainder),
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid() {
        let g = Grid::uniform(1.0, 2.0, 16).unwrap();
        assert_eq!(g.len(), 17);
        assert_eq!(g.last(), 2.0);
        assert!(Grid::uniform(1.0, 2.0, 8).is_err());
    }

    #[test]
    fn graded_tail_hits_end_exactly() {
        let g = Grid::window_with_tail(1.0, 10.0, 64, 160.0).unwrap();
        assert_eq!(g.last(), 161.0);
        assert_eq!(g.spacing, Spacing::Graded);
        let h: Vec<f64> = g.nodes.windows(2).map(|w| w[1] - w[0]).collect();
        for w in h.windows(2) {
            assert!(w[1] / w[0] <= MAX_GRADING + 1e-9, "{}", w[1] / w[0]);
        }
        // window part untouched
        assert!((g.nodes[64] - 11.0).abs() < 1e-12);
    }

    #[test]
    fn short_tail_may_shrink_cells() {
        let g = Grid::window_with_tail(1.0, 10.0, 16, 10.3).unwrap();
        assert!((g.last() - 11.3).abs() < 1e-12);
    }

    #[test]
    fn adapted_grid_resolves_fast_weights() {
        use crate::warping::Family;
        let flat = ModelManifold::family(Family::Euclidean, 3).unwrap();
        let g = Grid::adapted(&flat, 1.0, 10.0, 1000, 0.25).unwrap();
        assert_eq!(g, Grid::uniform(1.0, 11.0, 1000).unwrap());
        let cusp = ModelManifold::family(Family::CuspCubic, 3).unwrap();
        let g = Grid::adapted(&cusp, 1.0, 4.0, 100, 0.25).unwrap();
        assert_eq!(g.spacing, Spacing::Graded);
        assert_eq!(g.last(), 5.0);
        for w in g.nodes.windows(2) {
            let dl = (cusp.log_sigma_pow(w[1]).unwrap() - cusp.log_sigma_pow(w[0]).unwrap()).abs();
            assert!(dl <= 0.25 * 1.5, "{dl} on [{}, {}]", w[0], w[1]);
            assert!(w[1] - w[0] <= 0.04 * 1.5 + 1e-12);
        }
    }

    #[test]
    fn interpolation() {
        let g = Grid::uniform(0.0, 16.0, 16).unwrap();
        let v: Vec<f64> = g.nodes.iter().map(|r| 2.0 * r).collect();
        assert!((g.interpolate(&v, 3.5) - 7.0).abs() < 1e-14);
        assert_eq!(g.interpolate(&v, 17.0), 0.0);
    }
}
