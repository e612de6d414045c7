//! Grid values of the game: V⁻ (maxmin) and V⁺ (minmax) by backward recursion.
//!
//! On a time partition t₀ < t₁ < … < t_N = 1 and a spatial node grid, the
//! lower value solves
//!
//! ```text
//! V(t_N, x) = g(x),
//! V(t_m, x) = max over u of min over v of  V(t_{m+1}, x + Δ_m · f(t_m, x, u, v)),
//! ```
//!
//! with multilinear interpolation between nodes; the upper value swaps the
//! max and min. Work at each slice is restricted to the tube reachable from
//! the seed box (|x − seed| ≤ f_bound · (t_m − t₀), padded by two cells);
//! nodes outside the tube get the value of the nearest tube node, a flat
//! extension that never affects interpolation inside the tube. Any Euler
//! target that leaves the grid *box* is clamped and counted; a nonzero
//! counter means the box was too small and [`ValueGrid::validate_box`]
//! rejects the result.

mod cache;
mod grid;
mod level_set;

pub use cache::{load_value_grid, read_value_grid, save_value_grid, write_value_grid};
pub use grid::{Axis, SpatialGrid, MAX_DIM};
pub use level_set::{LevelSet, ProjectedPoint};

use crate::dynamics::{GameDynamics, Partition, PayoffSpec, HORIZON_END};
use crate::error::{Error, Result};
use crate::math;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

/// Which recursion produced a grid of values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueKind {
    /// Maxmin recursion (the guaranteed outcome for the maximizer).
    Lower,
    /// Minmax recursion.
    Upper,
    /// Hand-supplied function, e.g. a conjectured value to be checked.
    Candidate,
}

impl ValueKind {
    pub fn label(self) -> &'static str {
        match self {
            ValueKind::Lower => "lower",
            ValueKind::Upper => "upper",
            ValueKind::Candidate => "candidate",
        }
    }
}

/// Values on a time × space grid, slice-major (`values[m · nodes + node]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ValueGrid {
    kind: ValueKind,
    partition: Partition,
    grid: SpatialGrid,
    values: Vec<f64>,
    out_of_box: u64,
}

impl ValueGrid {
    /// Tabulates `f(t, x)` at every node — for candidate value functions.
    pub fn from_fn(
        kind: ValueKind,
        partition: &Partition,
        grid: &SpatialGrid,
        f: impl Fn(f64, &[f64]) -> f64,
    ) -> Result<Self> {
        let nc = grid.node_count();
        let n = partition.intervals();
        let mut values = vec![0.0f64; (n + 1) * nc];
        let mut x = vec![0.0f64; grid.dim()];
        for m in 0..=n {
            let t = partition.t(m);
            for lin in 0..nc {
                grid.node_state_into(lin, &mut x);
                let v = f(t, &x);
                if !v.is_finite() {
                    return Err(Error::Numeric {
                        t,
                        what: format!("candidate value is not finite at node {lin}"),
                    });
                }
                values[m * nc + lin] = v;
            }
        }
        Ok(Self {
            kind,
            partition: partition.clone(),
            grid: grid.clone(),
            values,
            out_of_box: 0,
        })
    }

    pub(crate) fn from_parts(
        kind: ValueKind,
        partition: Partition,
        grid: SpatialGrid,
        values: Vec<f64>,
        out_of_box: u64,
    ) -> Result<Self> {
        let expect = (partition.intervals() + 1) * grid.node_count();
        if values.len() != expect {
            return Err(Error::Config(format!(
                "value grid holds {} values but the partition and grid imply {expect}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "value grid entry {bad} is not finite"
            )));
        }
        Ok(Self {
            kind,
            partition,
            grid,
            values,
            out_of_box,
        })
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Euler targets that left the grid box during the recursion.
    pub fn out_of_box(&self) -> u64 {
        self.out_of_box
    }

    /// A computed grid is trustworthy only if no transition was clamped.
    pub fn validate_box(&self) -> Result<()> {
        if self.out_of_box > 0 {
            Err(Error::OutOfBox {
                count: self.out_of_box,
            })
        } else {
            Ok(())
        }
    }

    pub fn slice(&self, m: usize) -> &[f64] {
        let nc = self.grid.node_count();
        &self.values[m * nc..(m + 1) * nc]
    }

    pub fn node_value(&self, m: usize, node: usize) -> f64 {
        self.values[m * self.grid.node_count() + node]
    }

    /// Bracketing slices for a query time, with the interpolation fraction.
    /// Returns `(m, m, 0)` when `t` sits on slice `m`, so slice values are
    /// reproduced bit-for-bit.
    pub(crate) fn slice_pair_at(&self, t: f64) -> Result<(usize, usize, f64)> {
        let times = self.partition.times();
        let start = times[0];
        let end = *times.last().expect("partition has at least two times");
        if !t.is_finite() || t < start - 1e-9 || t > end + 1e-9 {
            return Err(Error::Argument(format!(
                "time {t} lies outside the partition span [{start}, {end}]"
            )));
        }
        let t = t.clamp(start, end);
        let hi = times.partition_point(|&s| s <= t);
        if hi >= times.len() {
            return Ok((times.len() - 1, times.len() - 1, 0.0));
        }
        let i0 = hi - 1;
        let frac = (t - times[i0]) / (times[hi] - times[i0]);
        if frac <= 0.0 {
            Ok((i0, i0, 0.0))
        } else if frac >= 1.0 {
            Ok((hi, hi, 0.0))
        } else {
            Ok((i0, hi, frac))
        }
    }

    /// Interpolated value at `(t, x)`: multilinear in space, linear in time.
    /// Querying outside the grid box is an error rather than a silent clamp.
    pub fn value_at(&self, t: f64, x: &[f64]) -> Result<f64> {
        if x.len() != self.grid.dim() {
            return Err(Error::Argument(format!(
                "state has dimension {}, grid has {}",
                x.len(),
                self.grid.dim()
            )));
        }
        if !math::all_finite(x) || !self.grid.contains(x) {
            return Err(Error::OutsideGrid {
                point: x.to_vec(),
            });
        }
        let (m0, m1, frac) = self.slice_pair_at(t)?;
        let (v0, _) = self.grid.interp(self.slice(m0), x);
        if m0 == m1 {
            return Ok(v0);
        }
        let (v1, _) = self.grid.interp(self.slice(m1), x);
        Ok(math::lerp(v0, v1, frac))
    }

    /// Interpolated value at slice `m`.
    pub fn value_at_slice(&self, m: usize, x: &[f64]) -> Result<f64> {
        if m > self.partition.intervals() {
            return Err(Error::Argument(format!(
                "slice {m} out of range (partition has {} intervals)",
                self.partition.intervals()
            )));
        }
        if !math::all_finite(x) || !self.grid.contains(x) {
            return Err(Error::OutsideGrid {
                point: x.to_vec(),
            });
        }
        Ok(self.grid.interp(self.slice(m), x).0)
    }

    /// Largest adjacent-node difference quotient over all slices and axes —
    /// a discrete estimate of the spatial Lipschitz constant. Exactly zero
    /// for constant grids (interpolation reproduces constants bit-for-bit).
    pub fn lipschitz_estimate(&self) -> f64 {
        let g = &self.grid;
        let nc = g.node_count();
        let mut best = 0.0f64;
        for m in 0..=self.partition.intervals() {
            let slice = &self.values[m * nc..(m + 1) * nc];
            for axis in 0..g.dim() {
                let stride = g.strides()[axis];
                let count = g.axis(axis).count;
                let h = g.spacing(axis);
                for lin in 0..nc {
                    let idx = (lin / stride) % count;
                    if idx + 1 < count {
                        let q = (slice[lin + stride] - slice[lin]).abs() / h;
                        best = best.max(q);
                    }
                }
            }
        }
        best
    }
}

/// Lower (maxmin) value by backward recursion.
pub fn compute_lower_value(
    dynamics: &GameDynamics,
    payoff: &PayoffSpec,
    partition: &Partition,
    grid: &SpatialGrid,
) -> Result<ValueGrid> {
    compute_value(ValueKind::Lower, dynamics, payoff, partition, grid)
}

/// Upper (minmax) value by backward recursion.
pub fn compute_upper_value(
    dynamics: &GameDynamics,
    payoff: &PayoffSpec,
    partition: &Partition,
    grid: &SpatialGrid,
) -> Result<ValueGrid> {
    compute_value(ValueKind::Upper, dynamics, payoff, partition, grid)
}

fn compute_value(
    kind: ValueKind,
    dynamics: &GameDynamics,
    payoff: &PayoffSpec,
    partition: &Partition,
    grid: &SpatialGrid,
) -> Result<ValueGrid> {
    let d = dynamics.state_dim();
    if grid.dim() != d {
        return Err(Error::Config(format!(
            "grid dimension {} does not match the state dimension {d}",
            grid.dim()
        )));
    }
    if payoff.gamma.is_some() {
        return Err(Error::Config(
            "payoff carries a running term; reduce it to terminal form (bolza_to_mayer) before \
             computing grid values"
                .into(),
        ));
    }
    if let Some(hint) = payoff.g.state_dim_hint() {
        if hint != d {
            return Err(Error::Config(format!(
                "terminal payoff expects dimension {hint}, state has dimension {d}"
            )));
        }
    }
    if (partition.end() - HORIZON_END).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "terminal payoff applies at t = {HORIZON_END} but the partition ends at {}",
            partition.end()
        )));
    }

    let n = partition.intervals();
    let nc = grid.node_count();
    let mut values = vec![0.0f64; (n + 1) * nc];

    // Terminal slice: g at every node.
    {
        let term = &mut values[n * nc..];
        term.par_iter_mut().enumerate().for_each(|(lin, slot)| {
            let mut x = [0.0f64; MAX_DIM];
            grid.node_state_into(lin, &mut x[..d]);
            *slot = payoff.eval_terminal(&x[..d]);
        });
        if let Some(bad) = term.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                t: partition.end(),
                what: format!("terminal payoff is not finite at node {bad}"),
            });
        }
    }

    let t0 = partition.start();
    let f_bound = dynamics.f_bound();
    let mut out_of_box = 0u64;

    for m in (0..n).rev() {
        let t = partition.t(m);
        let dt = partition.t(m + 1) - t;
        let reach = f_bound * (t - t0);
        // Values are computed on the tube plus a two-cell pad (the pad backs
        // the interpolation stencil at the tube edge). Only clamped targets
        // launched from tube nodes indict the box: on a covering grid those
        // provably stay inside, while pad nodes may brush the faces.
        let tube = active_node_ranges(grid, reach, 0);
        let ranges = active_node_ranges(grid, reach, 2);
        let f_table = if dynamics.is_state_free() {
            Some(control_table(dynamics, t, d)?)
        } else {
            None
        };
        let (head, tail) = values.split_at_mut((m + 1) * nc);
        let cur = &mut head[m * nc..];
        let next = &tail[..nc];
        let clamps = AtomicU64::new(0);
        cur.par_iter_mut()
            .enumerate()
            .try_for_each(|(lin, slot)| -> Result<()> {
                if !node_in_ranges(grid, lin, &ranges) {
                    // Placeholder; overwritten by the flat extension below.
                    *slot = f64::NAN;
                    return Ok(());
                }
                let mut x = [0.0f64; MAX_DIM];
                grid.node_state_into(lin, &mut x[..d]);
                let (val, c) =
                    one_step_value(kind, dynamics, t, dt, &x[..d], f_table.as_deref(), next, grid)?;
                if c > 0 && node_in_ranges(grid, lin, &tube) {
                    clamps.fetch_add(c, Ordering::Relaxed);
                }
                *slot = val;
                Ok(())
            })?;
        out_of_box += clamps.into_inner();
        for lin in 0..nc {
            if cur[lin].is_nan() {
                let src = clamp_into_ranges(grid, lin, &ranges);
                cur[lin] = cur[src];
            }
        }
    }

    Ok(ValueGrid {
        kind,
        partition: partition.clone(),
        grid: grid.clone(),
        values,
        out_of_box,
    })
}

/// Per-axis inclusive node range of the tube reachable from the seed box
/// after travelling `reach`, widened by `pad` cells and clipped to the grid.
fn active_node_ranges(grid: &SpatialGrid, reach: f64, pad: i64) -> Vec<(usize, usize)> {
    grid.seed_box()
        .iter()
        .enumerate()
        .map(|(i, [slo, shi])| {
            let ax = grid.axis(i);
            let h = ax.spacing();
            let max_idx = (ax.count - 1) as i64;
            let lo = (((slo - reach - ax.lo) / h).floor() as i64 - pad).clamp(0, max_idx);
            let hi = (((shi + reach - ax.lo) / h).ceil() as i64 + pad).clamp(0, max_idx);
            (lo as usize, hi as usize)
        })
        .collect()
}

fn node_in_ranges(grid: &SpatialGrid, lin: usize, ranges: &[(usize, usize)]) -> bool {
    let mut rem = lin;
    for (i, &stride) in grid.strides().iter().enumerate() {
        let idx = rem / stride;
        rem %= stride;
        if idx < ranges[i].0 || idx > ranges[i].1 {
            return false;
        }
    }
    true
}

fn clamp_into_ranges(grid: &SpatialGrid, lin: usize, ranges: &[(usize, usize)]) -> usize {
    let mut rem = lin;
    let mut out = 0usize;
    for (i, &stride) in grid.strides().iter().enumerate() {
        let idx = rem / stride;
        rem %= stride;
        out += idx.clamp(ranges[i].0, ranges[i].1) * stride;
    }
    out
}

/// Evaluates f for every control pair once; valid when the dynamics do not
/// depend on the state.
fn control_table(dynamics: &GameDynamics, t: f64, d: usize) -> Result<Vec<f64>> {
    let nu = dynamics.u_set().len();
    let nv = dynamics.v_set().len();
    let x = vec![0.0f64; d];
    let mut table = vec![0.0f64; nu * nv * d];
    for ui in 0..nu {
        for vi in 0..nv {
            let at = (ui * nv + vi) * d;
            dynamics.eval_into(t, &x, ui, vi, &mut table[at..at + d])?;
        }
    }
    Ok(table)
}

/// One backward step at a single state: the inner max/min over control pairs
/// of the interpolated next-slice value at the Euler target. Shared between
/// the recursion and the candidate checker so both produce identical bits.
#[allow(clippy::too_many_arguments)]
pub(crate) fn one_step_value(
    kind: ValueKind,
    dynamics: &GameDynamics,
    t: f64,
    dt: f64,
    x: &[f64],
    f_table: Option<&[f64]>,
    next: &[f64],
    grid: &SpatialGrid,
) -> Result<(f64, u64)> {
    let d = x.len();
    let nu = dynamics.u_set().len();
    let nv = dynamics.v_set().len();
    let mut fbuf = [0.0f64; MAX_DIM];
    let mut target = [0.0f64; MAX_DIM];
    let mut clamps = 0u64;
    let mut eval_pair = |ui: usize, vi: usize| -> Result<f64> {
        let f: &[f64] = match f_table {
            Some(table) => &table[(ui * nv + vi) * d..][..d],
            None => {
                dynamics.eval_into(t, x, ui, vi, &mut fbuf[..d])?;
                &fbuf[..d]
            }
        };
        for k in 0..d {
            target[k] = x[k] + dt * f[k];
        }
        let (val, clamped) = grid.interp(next, &target[..d]);
        if clamped {
            clamps += 1;
        }
        if !val.is_finite() {
            return Err(Error::Numeric {
                t,
                what: "value recursion produced a non-finite interpolant".into(),
            });
        }
        Ok(val)
    };
    let value = match kind {
        ValueKind::Lower | ValueKind::Candidate => {
            let mut best = f64::NEG_INFINITY;
            for ui in 0..nu {
                let mut worst = f64::INFINITY;
                for vi in 0..nv {
                    worst = worst.min(eval_pair(ui, vi)?);
                }
                best = best.max(worst);
            }
            best
        }
        ValueKind::Upper => {
            let mut best = f64::INFINITY;
            for vi in 0..nv {
                let mut worst = f64::NEG_INFINITY;
                for ui in 0..nu {
                    worst = worst.max(eval_pair(ui, vi)?);
                }
                best = best.min(worst);
            }
            best
        }
    };
    drop(eval_pair);
    Ok((value, clamps))
}

/// A node where one of the candidate-value properties fails.
#[derive(Debug, Clone, Serialize)]
pub struct CandidateViolation {
    pub slice: usize,
    pub node: usize,
    pub state: Vec<f64>,
    /// How far the required inequality is missed.
    pub deficit: f64,
}

/// Outcome of [`check_candidate_properties`].
#[derive(Debug, Clone, Serialize)]
pub struct CandidateReport {
    /// Nodes at the final slice where φ(1, x) < g(x) − tol.
    pub terminal_violations: Vec<CandidateViolation>,
    /// Slice/node pairs where φ(t, x) < max_u min_v φ(t′, x′) − tol.
    pub step_violations: Vec<CandidateViolation>,
    /// How many one-step inequalities were actually checked.
    pub checked_steps: usize,
    pub continuity_note: String,
}

impl CandidateReport {
    pub fn is_ok(&self) -> bool {
        self.terminal_violations.is_empty() && self.step_violations.is_empty()
    }
}

/// Tolerance for the candidate-value inequalities.
pub const CANDIDATE_TOL: f64 = 1e-9;

/// Checks a candidate value function for the properties the aiming strategy
/// needs: (i) regularity — grid interpolants are continuous by construction,
/// nothing to test numerically; (ii) the one-step max-min inequality
/// φ(t_m, x) ≥ max_u min_v φ(t_{m+1}, x + Δ f), spot-checked at `samples`
/// tube nodes (or exhaustively when `samples` covers them all); (iii)
/// terminal domination φ(1, x) ≥ g(x) at every node.
pub fn check_candidate_properties(
    dynamics: &GameDynamics,
    payoff: &PayoffSpec,
    phi: &ValueGrid,
    samples: usize,
    seed: u64,
) -> Result<CandidateReport> {
    let d = dynamics.state_dim();
    let grid = phi.grid();
    if grid.dim() != d {
        return Err(Error::Config(format!(
            "candidate grid dimension {} does not match the state dimension {d}",
            grid.dim()
        )));
    }
    if payoff.gamma.is_some() {
        return Err(Error::Config(
            "candidate checks require a terminal-form payoff (bolza_to_mayer first)".into(),
        ));
    }
    let partition = phi.partition();
    let n = partition.intervals();
    let nc = grid.node_count();

    let mut terminal_violations = Vec::new();
    for lin in 0..nc {
        let x = grid.node_state(lin);
        let g = payoff.eval_terminal(&x);
        let v = phi.node_value(n, lin);
        if v < g - CANDIDATE_TOL {
            terminal_violations.push(CandidateViolation {
                slice: n,
                node: lin,
                state: x,
                deficit: g - v,
            });
        }
    }

    // Eligible one-step checks: every tube node at every non-final slice.
    let t0 = partition.start();
    let f_bound = dynamics.f_bound();
    let mut eligible: Vec<(usize, usize)> = Vec::new();
    for m in 0..n {
        let ranges = active_node_ranges(grid, f_bound * (partition.t(m) - t0), 0);
        let mut multi: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        'nodes: loop {
            eligible.push((m, grid.linear_of(&multi)));
            for i in (0..multi.len()).rev() {
                if multi[i] < ranges[i].1 {
                    multi[i] += 1;
                    continue 'nodes;
                }
                multi[i] = ranges[i].0;
            }
            break;
        }
    }

    let exhaustive = samples >= eligible.len();
    let checked_steps = if exhaustive { eligible.len() } else { samples };
    let mut flagged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..checked_steps {
        let (m, lin) = if exhaustive {
            eligible[k]
        } else {
            eligible[rng.gen_range(0..eligible.len())]
        };
        let t = partition.t(m);
        let dt = partition.t(m + 1) - t;
        let x = grid.node_state(lin);
        let lhs = phi.node_value(m, lin);
        let (rhs, _) = one_step_value(
            ValueKind::Lower,
            dynamics,
            t,
            dt,
            &x,
            None,
            phi.slice(m + 1),
            grid,
        )?;
        if lhs < rhs - CANDIDATE_TOL {
            flagged.entry((m, lin)).or_insert(rhs - lhs);
        }
    }
    let step_violations = flagged
        .into_iter()
        .map(|((m, lin), deficit)| CandidateViolation {
            slice: m,
            node: lin,
            state: grid.node_state(lin),
            deficit,
        })
        .collect();

    Ok(CandidateReport {
        terminal_violations,
        step_violations,
        checked_steps,
        continuity_note: "piecewise-multilinear interpolants are continuous in x, hence lower \
                          semicontinuous; nothing to check numerically"
            .into(),
    })
}
