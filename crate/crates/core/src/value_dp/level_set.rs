//! Sub-level sets W(t, ℓ) = {x : φ(t, x) ≤ ℓ} of a value grid, with
//! membership tests and Euclidean projection onto the nearest sub-level
//! node. The aiming strategy tracks these sets, so membership carries a
//! tolerance of 1e-9 plus an interpolation-error allowance (half a cell
//! times the grid's Lipschitz estimate): a point whose interpolated value
//! barely exceeds ℓ may still belong to the underlying set.

use super::{ValueGrid};
use crate::error::{Error, Result};
use crate::math;

/// A sub-level set of a value grid at a fixed level ℓ.
pub struct LevelSet<'a> {
    grid: &'a ValueGrid,
    level: f64,
    tol: f64,
}

/// Result of projecting a point onto the sub-level nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedPoint {
    /// Coordinates of the chosen node.
    pub state: Vec<f64>,
    /// Linear node index in the spatial grid.
    pub node: usize,
    /// Euclidean distance from the query point.
    pub distance: f64,
}

impl<'a> LevelSet<'a> {
    pub fn new(grid: &'a ValueGrid, level: f64) -> Self {
        let tol = 1e-9 + 0.5 * grid.grid().max_spacing() * grid.lipschitz_estimate();
        Self { grid, level, tol }
    }

    /// Same set with an explicit membership tolerance.
    pub fn with_tolerance(grid: &'a ValueGrid, level: f64, tol: f64) -> Self {
        Self { grid, level, tol }
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// Membership via the interpolated value: φ(t, x) ≤ ℓ + tol.
    pub fn contains(&self, t: f64, x: &[f64]) -> Result<bool> {
        Ok(self.grid.value_at(t, x)? <= self.level + self.tol)
    }

    /// Zero for members; otherwise the distance to the nearest sub-level
    /// node at time t (node values linearly interpolated between slices).
    pub fn distance_to_set(&self, t: f64, x: &[f64]) -> Result<f64> {
        if self.contains(t, x)? {
            return Ok(0.0);
        }
        self.nearest_sublevel_node(t, x).map(|p| p.distance)
    }

    /// Nearest sub-level node, ties broken by the lowest node index. Errors
    /// with [`Error::EmptyLevelSet`] when no node qualifies at this time.
    pub fn project_to_levelset(&self, t: f64, x: &[f64]) -> Result<ProjectedPoint> {
        self.nearest_sublevel_node(t, x)
    }

    fn nearest_sublevel_node(&self, t: f64, x: &[f64]) -> Result<ProjectedPoint> {
        let grid = self.grid.grid();
        let d = grid.dim();
        if x.len() != d {
            return Err(Error::Argument(format!(
                "state has dimension {}, grid has {d}",
                x.len()
            )));
        }
        if !math::all_finite(x) {
            return Err(Error::Argument(format!("non-finite query point {x:?}")));
        }
        let (m0, m1, frac) = self.grid.slice_pair_at(t)?;
        let s0 = self.grid.slice(m0);
        let s1 = self.grid.slice(m1);
        let node_value = |lin: usize| -> f64 {
            if m0 == m1 {
                s0[lin]
            } else {
                math::lerp(s0[lin], s1[lin], frac)
            }
        };
        let cutoff = self.level + self.tol;

        // Anchor: per-axis nearest node to x.
        let mut anchor = vec![0usize; d];
        let mut max_ring = 0usize;
        for i in 0..d {
            let ax = grid.axis(i);
            let pos = (x[i] - ax.lo) / ax.spacing();
            let a = (pos.round().max(0.0) as usize).min(ax.count - 1);
            anchor[i] = a;
            max_ring = max_ring.max(a.max(ax.count - 1 - a));
        }
        let h_min = (0..d).map(|i| grid.spacing(i)).fold(f64::INFINITY, f64::min);

        // Expanding Chebyshev rings around the anchor. A node in ring r is at
        // least (r − ½)·h_min away, so once that lower bound exceeds the best
        // distance found, no farther ring can win or tie.
        let mut best: Option<(f64, usize)> = None;
        let mut node = vec![0.0f64; d];
        for r in 0..=max_ring {
            if let Some((best_d2, _)) = best {
                let bound = (r as f64 - 0.5) * h_min;
                if bound > 0.0 && bound * bound > best_d2 {
                    break;
                }
            }
            let mut lo = vec![0usize; d];
            let mut hi = vec![0usize; d];
            for i in 0..d {
                let count = grid.axis(i).count;
                lo[i] = anchor[i].saturating_sub(r);
                hi[i] = (anchor[i] + r).min(count - 1);
            }
            let mut multi = lo.clone();
            'ring: loop {
                // Only the surface of the cube: some axis at offset exactly r.
                let on_surface = r == 0
                    || multi
                        .iter()
                        .zip(&anchor)
                        .any(|(&m, &a)| m.abs_diff(a) == r);
                if on_surface {
                    let lin = grid.linear_of(&multi);
                    if node_value(lin) <= cutoff {
                        grid.node_state_into(lin, &mut node);
                        let d2 = math::dist_sq(&node, x);
                        let better = match best {
                            None => true,
                            Some((bd2, blin)) => d2 < bd2 || (d2 == bd2 && lin < blin),
                        };
                        if better {
                            best = Some((d2, lin));
                        }
                    }
                }
                for i in (0..d).rev() {
                    if multi[i] < hi[i] {
                        multi[i] += 1;
                        continue 'ring;
                    }
                    multi[i] = lo[i];
                }
                break;
            }
        }

        match best {
            Some((d2, lin)) => Ok(ProjectedPoint {
                state: grid.node_state(lin),
                node: lin,
                distance: d2.sqrt(),
            }),
            None => Err(Error::EmptyLevelSet {
                t,
                level: self.level,
            }),
        }
    }
}
