//! Rectangular node grids and multilinear interpolation.
//!
//! A grid is defined by a box and a per-axis node count. Besides the box it
//! remembers the *seed box* — the region initial states are drawn from — so
//! the value recursion can restrict work to the tube reachable from it. Use
//! [`SpatialGrid::covering`] to build a grid whose box is guaranteed to
//! contain everything reachable from the seed box over the horizon.

use crate::error::{Error, Result};
use crate::math;
use serde::{Deserialize, Serialize};

/// Hard cap on state dimension; keeps interpolation buffers on the stack.
pub const MAX_DIM: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.count - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    axes: Vec<Axis>,
    seed_box: Vec<[f64; 2]>,
    /// Row-major strides, last axis fastest.
    strides: Vec<usize>,
}

impl SpatialGrid {
    /// Grid over `box_` with `counts[i]` nodes per axis. The seed box
    /// defaults to the whole box.
    pub fn new(box_: Vec<[f64; 2]>, counts: Vec<usize>) -> Result<Self> {
        let seed = box_.clone();
        Self::with_seed_box(box_, counts, seed)
    }

    /// Grid whose box is `seed_box` inflated per axis by `f_bound · horizon`
    /// plus a two-cell pad: every state reachable from the seed box stays
    /// strictly inside, so value transitions never leave the box.
    pub fn covering(
        seed_box: Vec<[f64; 2]>,
        f_bound: f64,
        horizon: f64,
        counts: Vec<usize>,
    ) -> Result<Self> {
        if !(f_bound.is_finite() && f_bound >= 0.0) || !(horizon.is_finite() && horizon >= 0.0) {
            return Err(Error::Argument(format!(
                "covering grid needs non-negative f_bound and horizon (got {f_bound}, {horizon})"
            )));
        }
        if seed_box.len() != counts.len() {
            return Err(Error::Argument(
                "seed box and counts must have the same number of axes".into(),
            ));
        }
        let reach = f_bound * horizon;
        let box_: Vec<[f64; 2]> = seed_box
            .iter()
            .zip(&counts)
            .map(|([lo, hi], &count)| {
                let raw_lo = lo - reach;
                let raw_hi = hi + reach;
                let h = if count > 1 {
                    (raw_hi - raw_lo) / (count - 1) as f64
                } else {
                    0.0
                };
                [raw_lo - 2.0 * h, raw_hi + 2.0 * h]
            })
            .collect();
        Self::with_seed_box(box_, counts, seed_box)
    }

    pub(crate) fn with_seed_box(
        box_: Vec<[f64; 2]>,
        counts: Vec<usize>,
        seed_box: Vec<[f64; 2]>,
    ) -> Result<Self> {
        if box_.is_empty() {
            return Err(Error::Argument("grid needs at least one axis".into()));
        }
        if box_.len() > MAX_DIM {
            return Err(Error::Argument(format!(
                "grid dimension {} exceeds the supported maximum {MAX_DIM}",
                box_.len()
            )));
        }
        if box_.len() != counts.len() || box_.len() != seed_box.len() {
            return Err(Error::Argument(
                "box, counts, and seed box must have the same number of axes".into(),
            ));
        }
        let mut axes = Vec::with_capacity(box_.len());
        for (i, ([lo, hi], &count)) in box_.iter().zip(&counts).enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
                return Err(Error::Argument(format!(
                    "axis {i}: bad extent [{lo}, {hi}]"
                )));
            }
            if count < 2 {
                return Err(Error::Argument(format!(
                    "axis {i}: need at least two nodes, got {count}"
                )));
            }
            axes.push(Axis {
                lo: *lo,
                hi: *hi,
                count,
            });
        }
        for (i, ([slo, shi], ax)) in seed_box.iter().zip(&axes).enumerate() {
            if !(slo.is_finite() && shi.is_finite()) || slo > shi {
                return Err(Error::Argument(format!(
                    "axis {i}: bad seed extent [{slo}, {shi}]"
                )));
            }
            if *slo < ax.lo - 1e-12 || *shi > ax.hi + 1e-12 {
                return Err(Error::Argument(format!(
                    "axis {i}: seed box [{slo}, {shi}] leaves the grid box [{}, {}]",
                    ax.lo, ax.hi
                )));
            }
        }
        let mut strides = vec![1usize; axes.len()];
        for i in (0..axes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * axes[i + 1].count;
        }
        Ok(Self {
            axes,
            seed_box,
            strides,
        })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> Axis {
        self.axes[i]
    }

    pub fn seed_box(&self) -> &[[f64; 2]] {
        &self.seed_box
    }

    pub fn spacing(&self, i: usize) -> f64 {
        self.axes[i].spacing()
    }

    pub fn max_spacing(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).fold(0.0, f64::max)
    }

    pub fn node_count(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Multi-index of a linear node index.
    pub fn multi_of(&self, mut linear: usize) -> Vec<usize> {
        let mut multi = vec![0usize; self.dim()];
        for i in 0..self.dim() {
            multi[i] = linear / self.strides[i];
            linear %= self.strides[i];
        }
        multi
    }

    pub fn linear_of(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.strides)
            .map(|(m, s)| m * s)
            .sum()
    }

    /// Coordinates of a node, written into `out`.
    pub fn node_state_into(&self, linear: usize, out: &mut [f64]) {
        let mut rem = linear;
        for i in 0..self.dim() {
            let idx = rem / self.strides[i];
            rem %= self.strides[i];
            out[i] = self.axes[i].lo + self.axes[i].spacing() * idx as f64;
        }
    }

    pub fn node_state(&self, linear: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.node_state_into(linear, &mut out);
        out
    }

    /// Whether x lies in the grid box (with a hair of slop at the faces).
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(&self.axes).all(|(xi, ax)| {
                let slop = 1e-9 * ax.spacing();
                *xi >= ax.lo - slop && *xi <= ax.hi + slop
            })
    }

    /// Multilinear interpolation of `values` (one value per node) at `x`.
    /// Out-of-box coordinates are clamped to the box; the flag reports
    /// whether clamping happened. Inside a cell the value is a nested
    /// convex combination of the 2^dim corner values, so it always lies
    /// within their range, reproduces constants bit-exactly, and is exact
    /// for affine data.
    pub fn interp(&self, values: &[f64], x: &[f64]) -> (f64, bool) {
        debug_assert_eq!(values.len(), self.node_count());
        debug_assert_eq!(x.len(), self.dim());
        let d = self.dim();
        let mut cell = [0usize; MAX_DIM];
        let mut frac = [0.0f64; MAX_DIM];
        let mut clamped = false;
        for i in 0..d {
            let ax = self.axes[i];
            let h = ax.spacing();
            let pos = (x[i] - ax.lo) / h;
            let slop = 1e-9;
            if pos < -slop || pos > (ax.count - 1) as f64 + slop {
                clamped = true;
            }
            let c = pos.floor();
            let c = (c.max(0.0) as usize).min(ax.count - 2);
            cell[i] = c;
            frac[i] = (pos - c as f64).clamp(0.0, 1.0);
        }
        let corners = 1usize << d;
        let mut buf = [0.0f64; 1 << MAX_DIM];
        for c in 0..corners {
            let mut lin = 0usize;
            for i in 0..d {
                let off = (c >> i) & 1;
                lin += (cell[i] + off) * self.strides[i];
            }
            buf[c] = values[lin];
        }
        // Fold one axis at a time; axis i occupies bit i of the corner index.
        let mut m = corners;
        for i in (0..d).rev() {
            m >>= 1;
            for j in 0..m {
                // Entries j and j+m differ exactly in bit i.
                buf[j] = math::lerp(buf[j], buf[j + m], frac[i]);
            }
        }
        (buf[0], clamped)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid_2d() -> SpatialGrid {
        SpatialGrid::new(vec![[0.0, 1.0], [0.0, 2.0]], vec![3, 5]).unwrap()
    }

    #[test]
    fn linearization_round_trips() {
        let g = grid_2d();
        assert_eq!(g.node_count(), 15);
        assert_eq!(g.strides(), &[5, 1]);
        for lin in 0..g.node_count() {
            assert_eq!(g.linear_of(&g.multi_of(lin)), lin);
        }
        assert_eq!(g.node_state(0), vec![0.0, 0.0]);
        assert_eq!(g.node_state(14), vec![1.0, 2.0]);
        assert_eq!(g.node_state(5), vec![0.5, 0.0]);
    }

    #[test]
    fn interp_reproduces_affine_data() {
        let g = grid_2d();
        let values: Vec<f64> = (0..g.node_count())
            .map(|lin| {
                let x = g.node_state(lin);
                3.0 * x[0] - 2.0 * x[1] + 0.25
            })
            .collect();
        let (v, clamped) = g.interp(&values, &[0.3, 1.7]);
        assert!(!clamped);
        assert!((v - (3.0 * 0.3 - 2.0 * 1.7 + 0.25)).abs() < 1e-14);
    }

    #[test]
    fn interp_clamps_and_reports() {
        let g = grid_2d();
        let values: Vec<f64> = (0..g.node_count())
            .map(|lin| g.node_state(lin)[0])
            .collect();
        let (v, clamped) = g.interp(&values, &[1.5, 1.0]);
        assert!(clamped);
        assert_eq!(v, 1.0); // clamped to the hi face
    }

    #[test]
    fn covering_grid_contains_reachable_tube() {
        let g = SpatialGrid::covering(vec![[-1.0, 1.0]], 1.5, 1.0, vec![101]).unwrap();
        let ax = g.axis(0);
        assert!(ax.lo < -2.5 && ax.hi > 2.5);
        assert_eq!(g.seed_box(), &[[-1.0, 1.0]]);
        assert!(g.contains(&[-2.5]) && g.contains(&[2.5]));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(SpatialGrid::new(vec![[1.0, 0.0]], vec![5]).is_err());
        assert!(SpatialGrid::new(vec![[0.0, 1.0]], vec![1]).is_err());
        assert!(SpatialGrid::new(vec![[0.0, 1.0]; 7], vec![2; 7]).is_err());
        assert!(SpatialGrid::new(vec![[0.0, 1.0]], vec![2, 2]).is_err());
    }

    proptest! {
        /// Interpolation stays within the range of the corner values and is
        /// exact at the nodes.
        #[test]
        fn interp_is_a_convex_combination(
            vals in proptest::collection::vec(-10.0f64..10.0, 15),
            x in 0.0f64..1.0,
            y in 0.0f64..2.0,
        ) {
            let g = grid_2d();
            let (v, clamped) = g.interp(&vals, &[x, y]);
            prop_assert!(!clamped);
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            for lin in 0..g.node_count() {
                let node = g.node_state(lin);
                let (nv, _) = g.interp(&vals, &node);
                prop_assert!((nv - vals[lin]).abs() < 1e-12);
            }
        }
    }
}
