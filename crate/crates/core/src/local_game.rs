//! One-shot games in a direction ξ: both players pick one action and the
//! payoff is ⟨ξ, f(t, x, u, v)⟩, which player 1 (u) maximizes and player 2
//! (v) minimizes.
//!
//! With finite action sets the guaranteed levels are
//!   h⁻ = max over u of min over v   (player 1 moves first),
//!   h⁺ = min over v of max over u   (player 2 moves first),
//! and h⁻ ≤ h⁺ always. The whole payoff matrix is materialized once and both
//! levels are read off it with pure comparisons, so the ordering h⁻ ≤ h⁺ is
//! exact in floating point, not just up to rounding. Sets are expected to be
//! at most a few hundred points; enumeration is the algorithm of choice at
//! that size.
//!
//! For dynamics that split as f = a(t, x, u) + b(t, x, v) the two levels
//! coincide up to rounding; the gap h⁺ − h⁻ is the standard witness for
//! whether results that assume a saddle apply. [`isaacs_gap_report`] samples
//! the gap over a box for exactly that purpose.

use crate::dynamics::GameDynamics;
use crate::error::{Error, Result};
use crate::math;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Solved one-shot game. `u_star` attains the max-min, `v_star` the min-max;
/// ties go to the lowest action index (u scanned before v).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalGameValue {
    pub h_minus: f64,
    pub h_plus: f64,
    pub u_star: usize,
    pub v_star: usize,
}

impl LocalGameValue {
    pub fn gap(&self) -> f64 {
        self.h_plus - self.h_minus
    }
}

/// Solve the one-shot game at (t, x) in direction ξ by full enumeration.
pub fn solve_local_game(
    dynamics: &GameDynamics,
    t: f64,
    x: &[f64],
    xi: &[f64],
) -> Result<LocalGameValue> {
    let n = dynamics.state_dim();
    if x.len() != n || xi.len() != n {
        return Err(Error::Argument(format!(
            "state and direction must have dimension {n} (got {} and {})",
            x.len(),
            xi.len()
        )));
    }
    if !math::all_finite(x) || !math::all_finite(xi) || !t.is_finite() {
        return Err(Error::Numeric {
            t,
            what: "non-finite input to local game".into(),
        });
    }
    let nu = dynamics.u_set().len();
    let nv = dynamics.v_set().len();
    let mut payoff = vec![0.0f64; nu * nv];
    let mut f = vec![0.0f64; n];
    for ui in 0..nu {
        for vi in 0..nv {
            dynamics.eval_into(t, x, ui, vi, &mut f)?;
            payoff[ui * nv + vi] = math::dot(xi, &f);
        }
    }
    if !math::all_finite(&payoff) {
        return Err(Error::Numeric {
            t,
            what: "local game payoff became non-finite".into(),
        });
    }

    // max over u of (min over v); strict comparisons keep the first
    // (lowest-index) optimizer on ties.
    let mut h_minus = f64::NEG_INFINITY;
    let mut u_star = 0;
    for ui in 0..nu {
        let row = &payoff[ui * nv..(ui + 1) * nv];
        let mut row_min = row[0];
        for &p in &row[1..] {
            if p < row_min {
                row_min = p;
            }
        }
        if row_min > h_minus {
            h_minus = row_min;
            u_star = ui;
        }
    }

    // min over v of (max over u).
    let mut h_plus = f64::INFINITY;
    let mut v_star = 0;
    for vi in 0..nv {
        let mut col_max = payoff[vi];
        for ui in 1..nu {
            let p = payoff[ui * nv + vi];
            if p > col_max {
                col_max = p;
            }
        }
        if col_max < h_plus {
            h_plus = col_max;
            v_star = vi;
        }
    }

    debug_assert!(h_minus <= h_plus);
    Ok(LocalGameValue {
        h_minus,
        h_plus,
        u_star,
        v_star,
    })
}

/// Player 2's guaranteeing action in direction ξ: the min-max optimizer of
/// the one-shot game (lowest index on ties).
pub fn optimal_action_v(dynamics: &GameDynamics, t: f64, x: &[f64], xi: &[f64]) -> Result<usize> {
    Ok(solve_local_game(dynamics, t, x, xi)?.v_star)
}

/// Worst observed one-shot gap h⁺ − h⁻ over sampled (t, x, ξ), with the
/// sample attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub samples: usize,
    pub seed: u64,
    pub max_gap: f64,
    pub argmax_t: f64,
    pub argmax_x: Vec<f64>,
    pub argmax_xi: Vec<f64>,
    pub h_minus_at_argmax: f64,
    pub h_plus_at_argmax: f64,
}

/// Sample (t, x, ξ) with t uniform on the horizon, x uniform in `state_box`,
/// ξ uniform on the unit sphere, and report the largest gap found.
pub fn isaacs_gap_report(
    dynamics: &GameDynamics,
    state_box: &[[f64; 2]],
    samples: usize,
    seed: u64,
) -> Result<GapReport> {
    if state_box.len() != dynamics.state_dim() {
        return Err(Error::Argument(format!(
            "state box has {} axes, state dimension is {}",
            state_box.len(),
            dynamics.state_dim()
        )));
    }
    if samples == 0 {
        return Err(Error::Argument("need at least one gap sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GapReport {
        samples,
        seed,
        max_gap: f64::NEG_INFINITY,
        argmax_t: 0.0,
        argmax_x: vec![],
        argmax_xi: vec![],
        h_minus_at_argmax: 0.0,
        h_plus_at_argmax: 0.0,
    };
    for _ in 0..samples {
        let t = rng.gen_range(0.0..=crate::dynamics::HORIZON_END);
        let x: Vec<f64> = state_box
            .iter()
            .map(|[lo, hi]| rng.gen_range(*lo..=*hi))
            .collect();
        let xi = unit_direction(&mut rng, dynamics.state_dim());
        let solved = solve_local_game(dynamics, t, &x, &xi)?;
        let gap = solved.gap();
        if gap > report.max_gap {
            report.max_gap = gap;
            report.argmax_t = t;
            report.argmax_x = x;
            report.argmax_xi = xi;
            report.h_minus_at_argmax = solved.h_minus;
            report.h_plus_at_argmax = solved.h_plus;
        }
    }
    Ok(report)
}

/// Uniform direction on the unit sphere by rejection from the cube; avoids
/// the degenerate near-zero draws.
pub(crate) fn unit_direction<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let xi: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let norm = math::norm(&xi);
        if norm > 1e-3 && norm <= 1.0 {
            return xi.iter().map(|a| a / norm).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ControlSet;
    use proptest::prelude::*;

    fn scalar_set(label: &str, values: &[f64]) -> ControlSet {
        ControlSet::new(label, values.iter().map(|v| vec![*v]).collect()).unwrap()
    }

    fn pursuit() -> GameDynamics {
        GameDynamics::pursuit_line(
            scalar_set("u", &[-1.0, 0.0, 1.0]),
            scalar_set("v", &[-0.5, 0.0, 0.5]),
        )
        .unwrap()
    }

    #[test]
    fn pursuit_line_saddle() {
        let g = solve_local_game(&pursuit(), 0.0, &[0.0], &[2.0]).unwrap();
        assert_eq!(g.h_minus, 1.0);
        assert_eq!(g.h_plus, 1.0);
        assert_eq!(g.u_star, 2); // u = +1
        assert_eq!(g.v_star, 2); // v = +0.5
        assert_eq!(g.gap(), 0.0);

        // Direction flips with ξ < 0.
        let g = solve_local_game(&pursuit(), 0.0, &[0.0], &[-0.1]).unwrap();
        assert_eq!(g.u_star, 0); // u = −1
        assert_eq!(g.v_star, 0); // v = −0.5
    }

    #[test]
    fn zero_direction_is_degenerate() {
        let g = solve_local_game(&pursuit(), 0.3, &[0.1], &[0.0]).unwrap();
        assert_eq!(g.h_minus, 0.0);
        assert_eq!(g.h_plus, 0.0);
        assert_eq!(g.u_star, 0);
        assert_eq!(g.v_star, 0);
    }

    #[test]
    fn sum_game_cancels() {
        let sum = GameDynamics::sum(
            scalar_set("u", &[-1.0, 1.0]),
            scalar_set("v", &[-1.0, 1.0]),
        )
        .unwrap();
        let g = solve_local_game(&sum, 0.0, &[0.0], &[1.0]).unwrap();
        assert_eq!(g.h_minus, 0.0);
        assert_eq!(g.h_plus, 0.0);
        assert_eq!(g.u_star, 1); // u = +1 attains the max-min
        assert_eq!(g.v_star, 0); // v = −1 attains the min-max
    }

    #[test]
    fn coupled_product_has_gap_two() {
        let g = GameDynamics::coupled_product(
            scalar_set("u", &[-1.0, 1.0]),
            scalar_set("v", &[-1.0, 1.0]),
        )
        .unwrap();
        let solved = solve_local_game(&g, 0.0, &[0.0], &[1.0]).unwrap();
        assert_eq!(solved.h_minus, -1.0);
        assert_eq!(solved.h_plus, 1.0);
        assert_eq!(solved.gap(), 2.0);
    }

    #[test]
    fn optimal_action_v_matches_minmax() {
        let v = optimal_action_v(&pursuit(), 0.2, &[0.2], &[0.1]).unwrap();
        assert_eq!(v, 2); // ξ > 0 pushes v to its max point +0.5
    }

    #[test]
    fn gap_report_is_deterministic_and_zero_for_separated() {
        let a = isaacs_gap_report(&pursuit(), &[[-1.0, 1.0]], 500, 9).unwrap();
        let b = isaacs_gap_report(&pursuit(), &[[-1.0, 1.0]], 500, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.max_gap.abs() <= 1e-12, "gap {}", a.max_gap);
    }

    proptest! {
        /// Scaling ξ by a positive power of two is exact in floating point,
        /// so the chosen indices must not move and the values must scale
        /// exactly.
        #[test]
        fn positive_homogeneity_exact_for_pow2(
            xi in -4.0f64..4.0,
            k in -6i32..7,
        ) {
            let lam = (2.0f64).powi(k);
            let g1 = solve_local_game(&pursuit(), 0.1, &[0.3], &[xi]).unwrap();
            let g2 = solve_local_game(&pursuit(), 0.1, &[0.3], &[lam * xi]).unwrap();
            prop_assert_eq!(g2.u_star, g1.u_star);
            prop_assert_eq!(g2.v_star, g1.v_star);
            prop_assert_eq!(g2.h_minus, lam * g1.h_minus);
            prop_assert_eq!(g2.h_plus, lam * g1.h_plus);
        }

        /// Reordering the action lists cannot change the values (they are
        /// extrema of the same finite payoff multiset).
        #[test]
        fn values_invariant_under_permutation(xi in -3.0f64..3.0, swap_u in any::<bool>(), swap_v in any::<bool>()) {
            let base = pursuit();
            let u_pts: Vec<Vec<f64>> = if swap_u {
                vec![vec![1.0], vec![-1.0], vec![0.0]]
            } else {
                vec![vec![-1.0], vec![0.0], vec![1.0]]
            };
            let v_pts: Vec<Vec<f64>> = if swap_v {
                vec![vec![0.5], vec![-0.5], vec![0.0]]
            } else {
                vec![vec![-0.5], vec![0.0], vec![0.5]]
            };
            let permuted = GameDynamics::pursuit_line(
                ControlSet::new("u", u_pts).unwrap(),
                ControlSet::new("v", v_pts).unwrap(),
            ).unwrap();
            let a = solve_local_game(&base, 0.0, &[0.0], &[xi]).unwrap();
            let b = solve_local_game(&permuted, 0.0, &[0.0], &[xi]).unwrap();
            prop_assert_eq!(a.h_minus, b.h_minus);
            prop_assert_eq!(a.h_plus, b.h_plus);
        }

        /// Order guarantee on arbitrary directions: h⁻ ≤ h⁺ exactly.
        #[test]
        fn lower_never_exceeds_upper(
            xi0 in -10.0f64..10.0,
            t in 0.0f64..1.0,
            x0 in -1.0f64..1.0,
        ) {
            let coupled = GameDynamics::coupled_product(
                scalar_set("u", &[-1.0, -0.3, 0.4, 1.0]),
                scalar_set("v", &[-1.0, 0.2, 1.0]),
            ).unwrap();
            let g = solve_local_game(&coupled, t, &[x0], &[xi0]).unwrap();
            prop_assert!(g.h_minus <= g.h_plus);
        }
    }
}
