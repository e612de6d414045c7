//! Extremal aiming: tracking a target tube by repeated projection.
//!
//! The minimizer keeps the state near a set W ⊂ [t₀, 1] × ℝⁿ (in practice a
//! sub-level set of a value grid) by, at each partition time t_m, projecting
//! the state onto W(t_m), solving the local game in the direction
//! ξ = x_m − w_m, and holding the resulting action until t_{m+1}. Under
//! Isaacs' condition the squared distance obeys, with A = 3c + 2‖f‖ and
//! B = 4‖f‖² + 2c(1 + ‖f‖),
//!
//! ```text
//! one interval:   d(t)² ≤ (1 + (t − t_m)·A)·d_m² + B·(t − t_m)²
//! chained:        d_N²  ≤ e^A · (d₀² + B·‖Π‖)
//! from the set:   D²(x_N, W(t_N)) ≤ e^A · B · ‖Π‖
//! ```
//!
//! and consequently the terminal payoff exceeds φ(t₀, x₀) by at most
//! κ·e^{A/2}·√B·√‖Π‖ when W is the φ(t₀, x₀)-level set of a κ-Lipschitz
//! candidate value φ.

use crate::dynamics::{
    integrate_with_breaks, GameDynamics, Partition, PayoffSpec, PiecewiseControl, Trajectory,
    HORIZON_END,
};
use crate::error::{Error, Result};
use crate::local_game::solve_local_game;
use crate::math;
use crate::value_dp::{LevelSet, ValueGrid};
use serde::Serialize;

fn require_bound_args(args: &[(&str, f64)]) -> Result<()> {
    for (name, v) in args {
        if !(v.is_finite() && *v >= 0.0) {
            return Err(Error::Argument(format!(
                "{name} must be finite and non-negative, got {v}"
            )));
        }
    }
    Ok(())
}

/// One-interval tracking bound: (1 + Δ·a)·d₀² + b·Δ².
pub fn lemma1_bound(d0: f64, dt: f64, a: f64, b: f64) -> Result<f64> {
    require_bound_args(&[("d0", d0), ("dt", dt), ("a", a), ("b", b)])?;
    Ok((1.0 + dt * a) * d0 * d0 + b * dt * dt)
}

/// Chained bound at the final time: e^a · (d₀² + b·mesh).
pub fn corollary1_bound(d0: f64, mesh: f64, a: f64, b: f64) -> Result<f64> {
    require_bound_args(&[("d0", d0), ("mesh", mesh), ("a", a), ("b", b)])?;
    Ok(a.exp() * (d0 * d0 + b * mesh))
}

/// Distance-to-set bound when starting on the set: e^a · b · mesh.
pub fn corollary3_bound(mesh: f64, a: f64, b: f64) -> Result<f64> {
    require_bound_args(&[("mesh", mesh), ("a", a), ("b", b)])?;
    Ok(a.exp() * b * mesh)
}

/// Payoff-overshoot constant κ·e^{a/2}·√b: the aiming strategy concedes at
/// most this times √mesh beyond the candidate value.
pub fn aiming_constant(kappa: f64, a: f64, b: f64) -> Result<f64> {
    require_bound_args(&[("kappa", kappa), ("a", a), ("b", b)])?;
    Ok(kappa * (0.5 * a).exp() * b.sqrt())
}

/// Squared separation of the paired trajectories at one shared sample time.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PairedSample {
    pub t: f64,
    pub dist_sq: f64,
}

/// Two trajectories advanced together under the local-game saddle actions.
#[derive(Debug, Clone)]
pub struct PairedRun {
    pub x: Trajectory,
    pub w: Trajectory,
    /// ‖x(t) − w(t)‖² at every shared sample time.
    pub samples: Vec<PairedSample>,
    /// ‖x(t_m) − w(t_m)‖² at the partition times, m = 0…N.
    pub node_dist_sq: Vec<f64>,
}

/// Advances the pair x, w over the partition: on [t_m, t_{m+1}] the local
/// game at (t_m, x_m, x_m − w_m) supplies saddle actions (u*_m, v*_m); x
/// follows (u, v*_m) and w follows (u*_m, v). Both trajectories sample at
/// identical times, so their separation can be compared pointwise.
pub fn paired_trajectories(
    dynamics: &GameDynamics,
    partition: &Partition,
    x0: &[f64],
    w0: &[f64],
    u: &PiecewiseControl,
    v: &PiecewiseControl,
    step: f64,
) -> Result<PairedRun> {
    let (t0, t_end) = (partition.start(), partition.end());
    for (ctrl, name) in [(u, "u"), (v, "v")] {
        if !ctrl.covers(t0, t_end) {
            let (a, b) = ctrl.span();
            return Err(Error::Config(format!(
                "{name}-control covers [{a}, {b}] but the partition spans [{t0}, {t_end}]"
            )));
        }
    }
    let mut xs = x0.to_vec();
    let mut ws = w0.to_vec();
    let mut x_traj: Option<Trajectory> = None;
    let mut w_traj: Option<Trajectory> = None;
    let mut node_dist_sq = vec![math::dist_sq(&xs, &ws)];

    for m in 0..partition.intervals() {
        let (ta, tb) = (partition.t(m), partition.t(m + 1));
        let xi: Vec<f64> = xs.iter().zip(&ws).map(|(a, b)| a - b).collect();
        let local = solve_local_game(dynamics, ta, &xs, &xi)?;
        let u_star = PiecewiseControl::constant(local.u_star, ta, tb)?;
        let v_star = PiecewiseControl::constant(local.v_star, ta, tb)?;

        let x_seg =
            integrate_with_breaks(dynamics, ta, &xs, u, &v_star, tb, step, v.breakpoints())?;
        let w_seg =
            integrate_with_breaks(dynamics, ta, &ws, &u_star, v, tb, step, u.breakpoints())?;
        xs = x_seg.final_state().to_vec();
        ws = w_seg.final_state().to_vec();
        node_dist_sq.push(math::dist_sq(&xs, &ws));
        match (&mut x_traj, &mut w_traj) {
            (Some(xt), Some(wt)) => {
                xt.append(x_seg)?;
                wt.append(w_seg)?;
            }
            _ => {
                x_traj = Some(x_seg);
                w_traj = Some(w_seg);
            }
        }
    }

    let x = x_traj.expect("partition has at least one interval");
    let w = w_traj.expect("partition has at least one interval");
    debug_assert_eq!(x.times(), w.times());
    let samples = x
        .times()
        .iter()
        .zip(x.states().iter().zip(w.states()))
        .map(|(&t, (a, b))| PairedSample {
            t,
            dist_sq: math::dist_sq(a, b),
        })
        .collect();
    Ok(PairedRun {
        x,
        w,
        samples,
        node_dist_sq,
    })
}

/// One aiming decision of the extremal strategy.
#[derive(Debug, Clone, Serialize)]
pub struct AimRecord {
    pub slice: usize,
    pub t: f64,
    pub x: Vec<f64>,
    /// Distance to the level set before aiming (zero for members).
    pub distance: f64,
    /// Projection target; `None` when the state is already in the set and
    /// aims at itself (degenerate direction ξ = 0).
    pub target: Option<Vec<f64>>,
    pub v_index: usize,
    pub v_action: Vec<f64>,
}

/// A finished run of the extremal strategy against one opposing control.
#[derive(Debug, Clone)]
pub struct ExtremalPlay {
    pub trajectory: Trajectory,
    pub records: Vec<AimRecord>,
    /// The tracked level ℓ = φ(t₀, x₀).
    pub level: f64,
    /// Terminal payoff g(x(1)).
    pub payoff: f64,
    /// D²(x(1), W(1)) — squared distance to the level set at the end.
    pub final_dist_sq: f64,
    /// The reply control the strategy produced (constant per interval).
    pub v_control: PiecewiseControl,
}

/// The extremal strategy for the minimizer, built from a candidate value
/// grid φ: it tracks the φ(t₀, x₀)-level set along the grid's partition.
pub struct ExtremalStrategy<'a> {
    dynamics: &'a GameDynamics,
    payoff: &'a PayoffSpec,
    phi: &'a ValueGrid,
    set: LevelSet<'a>,
    level: f64,
    x0: Vec<f64>,
    step: f64,
}

impl<'a> ExtremalStrategy<'a> {
    pub fn new(
        dynamics: &'a GameDynamics,
        payoff: &'a PayoffSpec,
        phi: &'a ValueGrid,
        x0: &[f64],
        step: f64,
    ) -> Result<Self> {
        if payoff.gamma.is_some() {
            return Err(Error::Config(
                "extremal play needs a terminal-form payoff (bolza_to_mayer first)".into(),
            ));
        }
        if x0.len() != dynamics.state_dim() {
            return Err(Error::Argument(format!(
                "initial state has dimension {}, expected {}",
                x0.len(),
                dynamics.state_dim()
            )));
        }
        if (phi.partition().end() - HORIZON_END).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "the tracked grid must reach t = {HORIZON_END}, got {}",
                phi.partition().end()
            )));
        }
        let level = phi.value_at(phi.partition().start(), x0)?;
        Ok(Self {
            dynamics,
            payoff,
            phi,
            set: LevelSet::new(phi, level),
            level,
            x0: x0.to_vec(),
            step,
        })
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn level_set(&self) -> &LevelSet<'a> {
        &self.set
    }

    /// Plays the whole game against `u`: project, aim, hold, repeat.
    pub fn play(&self, u: &PiecewiseControl) -> Result<ExtremalPlay> {
        let partition = self.phi.partition();
        let (t0, t_end) = (partition.start(), partition.end());
        if !u.covers(t0, t_end) {
            let (a, b) = u.span();
            return Err(Error::Config(format!(
                "u-control covers [{a}, {b}] but the game spans [{t0}, {t_end}]"
            )));
        }
        let d = self.dynamics.state_dim();
        let mut x = self.x0.clone();
        let mut traj: Option<Trajectory> = None;
        let mut records = Vec::with_capacity(partition.intervals());
        let mut v_indices = Vec::with_capacity(partition.intervals());

        for m in 0..partition.intervals() {
            let (ta, tb) = (partition.t(m), partition.t(m + 1));
            let dist = self.set.distance_to_set(ta, &x)?;
            let (xi, target) = if dist == 0.0 {
                // Already on the set: aim at the state itself.
                (vec![0.0; d], None)
            } else {
                let p = self.set.project_to_levelset(ta, &x)?;
                let mut xi: Vec<f64> = x.iter().zip(&p.state).map(|(a, b)| a - b).collect();
                if math::norm(&xi) < 1e-12 {
                    xi.iter_mut().for_each(|c| *c = 0.0);
                }
                (xi, Some(p.state))
            };
            let local = solve_local_game(self.dynamics, ta, &x, &xi)?;
            let vi = local.v_star;
            let v_seg = PiecewiseControl::constant(vi, ta, tb)?;
            let seg = integrate_with_breaks(self.dynamics, ta, &x, u, &v_seg, tb, self.step, &[])?;
            records.push(AimRecord {
                slice: m,
                t: ta,
                x: x.clone(),
                distance: dist,
                target,
                v_index: vi,
                v_action: self.dynamics.v_set().point(vi)?.to_vec(),
            });
            v_indices.push(vi);
            x = seg.final_state().to_vec();
            match &mut traj {
                Some(t) => t.append(seg)?,
                None => traj = Some(seg),
            }
        }

        let trajectory = traj.expect("partition has at least one interval");
        let final_dist = self.set.distance_to_set(t_end, trajectory.final_state())?;
        Ok(ExtremalPlay {
            payoff: self.payoff.eval_terminal(trajectory.final_state()),
            final_dist_sq: final_dist * final_dist,
            v_control: PiecewiseControl::new(partition.times().to_vec(), v_indices)?,
            trajectory,
            records,
            level: self.level,
        })
    }
}

/// Convenience wrapper: build the strategy for `(φ, x₀)` and play one game.
pub fn play_vs_control(
    dynamics: &GameDynamics,
    payoff: &PayoffSpec,
    phi: &ValueGrid,
    x0: &[f64],
    u: &PiecewiseControl,
    step: f64,
) -> Result<ExtremalPlay> {
    ExtremalStrategy::new(dynamics, payoff, phi, x0, step)?.play(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{default_step, ControlSet, PayoffFn};
    use crate::value_dp::{compute_lower_value, SpatialGrid};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pursuit_line() -> GameDynamics {
        GameDynamics::pursuit_line(
            ControlSet::interval("u", -1.0, 1.0, 3).unwrap(),
            ControlSet::interval("v", -0.5, 0.5, 3).unwrap(),
        )
        .unwrap()
    }

    fn linear_payoff() -> PayoffSpec {
        PayoffSpec::terminal(PayoffFn::Linear {
            coeffs: vec![1.0],
            offset: 0.0,
        })
        .unwrap()
    }

    #[test]
    fn bound_formulas_match_frozen_values() {
        // (1 + 0.05·3)·0.01 + 9·0.0025 = 0.034
        assert!((lemma1_bound(0.1, 0.05, 3.0, 9.0).unwrap() - 0.034).abs() < 1e-15);
        // e³·(0 + 9·0.01) ≈ 1.8077
        assert!((corollary1_bound(0.0, 0.01, 3.0, 9.0).unwrap() - 1.8077).abs() < 1e-4);
        // e³·9·10⁻⁴ ≈ 0.018077
        assert!((corollary3_bound(1e-4, 3.0, 9.0).unwrap() - 0.018077).abs() < 1e-6);
        // κ·e^{A/2}·√B = 1·e^{1.5}·3 ≈ 13.445
        assert!((aiming_constant(1.0, 3.0, 9.0).unwrap() - 13.445).abs() < 1e-3);
    }

    #[test]
    fn bound_formulas_reject_bad_arguments() {
        assert!(lemma1_bound(-0.1, 0.05, 3.0, 9.0).is_err());
        assert!(lemma1_bound(0.1, -0.05, 3.0, 9.0).is_err());
        assert!(corollary1_bound(0.0, f64::NAN, 3.0, 9.0).is_err());
        assert!(corollary3_bound(1e-4, 3.0, -9.0).is_err());
        assert!(aiming_constant(-1.0, 3.0, 9.0).is_err());
    }

    #[test]
    fn paired_trajectories_share_sample_times_and_obey_the_bounds() {
        let dyn_ = pursuit_line();
        let consts = dyn_.derived_constants();
        let partition = Partition::game(0.0, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = PiecewiseControl::random(&mut rng, 3, 0.0, 1.0, 6).unwrap();
        let v = PiecewiseControl::random(&mut rng, 3, 0.0, 1.0, 4).unwrap();
        let run = paired_trajectories(
            &dyn_,
            &partition,
            &[0.3],
            &[0.1],
            &u,
            &v,
            default_step(partition.mesh()),
        )
        .unwrap();

        assert_eq!(run.x.times(), run.w.times());
        assert_eq!(run.node_dist_sq.len(), 11);
        assert!((run.node_dist_sq[0] - 0.04).abs() < 1e-15);

        // Interval-by-interval tracking bound at every shared sample.
        for s in &run.samples {
            let m = (0..partition.intervals())
                .rev()
                .find(|&m| partition.t(m) <= s.t + 1e-12)
                .unwrap();
            let d0 = run.node_dist_sq[m].sqrt();
            let bound =
                lemma1_bound(d0, s.t - partition.t(m), consts.a, consts.b).unwrap();
            assert!(
                s.dist_sq <= bound + 1e-9,
                "t = {}: {} > {}",
                s.t,
                s.dist_sq,
                bound
            );
        }

        // Chained end-time bound.
        let d0 = run.node_dist_sq[0].sqrt();
        let end_bound = corollary1_bound(d0, partition.mesh(), consts.a, consts.b).unwrap();
        assert!(run.node_dist_sq[10] <= end_bound + 1e-9);
    }

    #[test]
    fn aiming_keeps_payoff_near_the_tracked_level() {
        let dyn_ = pursuit_line();
        let payoff = linear_payoff();
        let partition = Partition::game(0.0, 50).unwrap();
        let grid = SpatialGrid::covering(vec![[-1.0, 1.0]], 1.5, 1.0, vec![201]).unwrap();
        let phi = compute_lower_value(&dyn_, &payoff, &partition, &grid).unwrap();
        phi.validate_box().unwrap();

        let strategy =
            ExtremalStrategy::new(&dyn_, &payoff, &phi, &[0.0], default_step(0.02)).unwrap();
        assert!((strategy.level() - 0.5).abs() < 1e-9);

        // The maximizer's best control: full speed up. Against it the value
        // is exactly 0.5, so the aiming reply must concede at most a little
        // above the level and the maximizer collects at least the level.
        let u_up = PiecewiseControl::constant(2, 0.0, 1.0).unwrap();
        let play = strategy.play(&u_up).unwrap();
        assert!(play.payoff >= 0.5 - 1e-9, "payoff {}", play.payoff);
        assert!(play.payoff <= 0.6, "payoff {} drifted too far", play.payoff);
        assert_eq!(play.records.len(), 50);
        let c = aiming_constant(1.0, 3.0, 9.0).unwrap();
        assert!(play.payoff <= play.level + c * partition.mesh().sqrt());

        // A wild control cannot do better than the guarantee either.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u_rand = PiecewiseControl::random(&mut rng, 3, 0.0, 1.0, 12).unwrap();
        let play2 = strategy.play(&u_rand).unwrap();
        assert!(play2.payoff <= play2.level + c * partition.mesh().sqrt());
        assert!(play2.final_dist_sq <= corollary3_bound(0.02, 3.0, 9.0).unwrap() + 1e-6);
    }

    #[test]
    fn member_states_aim_at_themselves() {
        let dyn_ = pursuit_line();
        let payoff = linear_payoff();
        let partition = Partition::game(0.0, 10).unwrap();
        let grid = SpatialGrid::covering(vec![[-1.0, 1.0]], 1.5, 1.0, vec![101]).unwrap();
        let phi = compute_lower_value(&dyn_, &payoff, &partition, &grid).unwrap();
        // Start deep inside the level set: the first aim is degenerate.
        let strategy =
            ExtremalStrategy::new(&dyn_, &payoff, &phi, &[-0.5], default_step(0.1)).unwrap();
        let u = PiecewiseControl::constant(1, 0.0, 1.0).unwrap();
        let play = strategy.play(&u).unwrap();
        let first = &play.records[0];
        assert_eq!(first.distance, 0.0);
        assert!(first.target.is_none());
        assert_eq!(first.v_index, 0, "degenerate aim takes the first action");
    }

    #[test]
    fn strategy_is_nonanticipative() {
        let dyn_ = pursuit_line();
        let payoff = linear_payoff();
        let partition = Partition::game(0.0, 8).unwrap();
        let grid = SpatialGrid::covering(vec![[-1.0, 1.0]], 1.5, 1.0, vec![101]).unwrap();
        let phi = compute_lower_value(&dyn_, &payoff, &partition, &grid).unwrap();
        let strategy =
            ExtremalStrategy::new(&dyn_, &payoff, &phi, &[0.2], default_step(0.125)).unwrap();

        // Two controls that agree on [0, t_5] and then diverge.
        let cut = partition.t(5);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u1 = PiecewiseControl::random(&mut rng, 3, 0.0, 1.0, 7).unwrap();
        let prefix = u1.truncated(cut).unwrap();
        let mut times = prefix.breakpoints().to_vec();
        let mut indices: Vec<usize> =
            (0..prefix.segments()).map(|s| prefix.segment_index(s)).collect();
        times.push(1.0);
        indices.push((u1.index_at(cut) + 1) % 3); // definitely different after the cut
        let u2 = PiecewiseControl::new(times, indices).unwrap();
        assert_eq!(u1.index_at(0.3), u2.index_at(0.3));

        let p1 = strategy.play(&u1).unwrap();
        let p2 = strategy.play(&u2).unwrap();
        for m in 0..=5 {
            assert_eq!(
                p1.records[m].v_index, p2.records[m].v_index,
                "replies must agree through slice {m} (one step of delay)"
            );
            assert_eq!(p1.records[m].x, p2.records[m].x);
        }
    }

    #[test]
    fn play_requires_full_coverage_and_terminal_grid() {
        let dyn_ = pursuit_line();
        let payoff = linear_payoff();
        let partition = Partition::game(0.0, 10).unwrap();
        let grid = SpatialGrid::covering(vec![[-1.0, 1.0]], 1.5, 1.0, vec![101]).unwrap();
        let phi = compute_lower_value(&dyn_, &payoff, &partition, &grid).unwrap();
        let strategy =
            ExtremalStrategy::new(&dyn_, &payoff, &phi, &[0.0], default_step(0.1)).unwrap();
        let short_u = PiecewiseControl::constant(0, 0.0, 0.5).unwrap();
        assert!(strategy.play(&short_u).is_err());

        let with_gamma = linear_payoff()
            .with_gamma(crate::dynamics::RunningPayoff::Constant { value: 1.0 });
        assert!(ExtremalStrategy::new(&dyn_, &with_gamma, &phi, &[0.0], 0.01).is_err());
    }
}
