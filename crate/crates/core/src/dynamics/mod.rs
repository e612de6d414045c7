//! Game dynamics: the right-hand side ẋ = f(t, x, u, v), the finite control
//! sets the two players draw from, declared regularity constants, terminal
//! payoffs, and time partitions.
//!
//! Conventions used everywhere:
//! * play happens on [t₀, 1]; the horizon end is fixed at 1,
//! * the first player (u) maximizes the terminal payoff, the second (v)
//!   minimizes it,
//! * control sets are finite point lists; a piecewise-constant control picks
//!   one point per interval,
//! * `f_bound` bounds ‖f‖ and `lip_c` bounds the Lipschitz constant of f in
//!   (t, x) jointly, both along everything reachable from the configured
//!   state box. All guarantee constants are derived from these two numbers.

mod control;
mod integrate;

pub use control::PiecewiseControl;
pub use integrate::{default_step, integrate, integrate_with_breaks, Trajectory};

use crate::error::{Error, Result};
use crate::math;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Horizon end; play always stops at t = 1.
pub const HORIZON_END: f64 = 1.0;

/// A finite set of actions for one player. Points are row vectors of a fixed
/// dimension; ordering matters because ties in the one-shot games are broken
/// by lowest index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSet {
    label: String,
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl ControlSet {
    pub fn new(label: impl Into<String>, points: Vec<Vec<f64>>) -> Result<Self> {
        let label = label.into();
        if points.is_empty() {
            return Err(Error::Config(format!("control set `{label}` is empty")));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::Config(format!(
                "control set `{label}` has zero-dimensional points"
            )));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Config(format!(
                    "control set `{label}` point {i} has dimension {} (expected {dim})",
                    p.len()
                )));
            }
            if !math::all_finite(p) {
                return Err(Error::Config(format!(
                    "control set `{label}` point {i} is not finite"
                )));
            }
        }
        Ok(Self { label, dim, points })
    }

    /// `count` equally spaced scalar actions on [lo, hi].
    pub fn interval(label: impl Into<String>, lo: f64, hi: f64, count: usize) -> Result<Self> {
        let label = label.into();
        if count < 1 {
            return Err(Error::Config(format!(
                "control set `{label}`: interval needs at least one point"
            )));
        }
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::Config(format!(
                "control set `{label}`: bad interval [{lo}, {hi}]"
            )));
        }
        if count == 1 {
            return Self::new(label, vec![vec![0.5 * (lo + hi)]]);
        }
        let h = (hi - lo) / (count - 1) as f64;
        let points = (0..count).map(|i| vec![lo + h * i as f64]).collect();
        Self::new(label, points)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> Result<&[f64]> {
        self.points
            .get(index)
            .map(|p| p.as_slice())
            .ok_or_else(|| Error::ActionIndex {
                set: self.label.clone(),
                index,
                len: self.points.len(),
            })
    }

    /// Exact-match lookup of an action given by value.
    pub fn index_of(&self, action: &[f64]) -> Option<usize> {
        self.points.iter().position(|p| p.as_slice() == action)
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.iter().map(|p| p.as_slice())
    }

    /// Largest Euclidean norm over the set.
    pub fn max_norm(&self) -> f64 {
        self.iter().map(math::norm).fold(0.0, f64::max)
    }
}

/// Constant-coefficient affine right-hand side
/// f(t, x, u, v) = m·x + bu·u + bv·v + b.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineDynamics {
    pub m: Vec<Vec<f64>>,
    pub bu: Vec<Vec<f64>>,
    pub bv: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl AffineDynamics {
    fn state_dim(&self) -> usize {
        self.b.len()
    }

    fn check_shapes(&self, du: usize, dv: usize) -> Result<()> {
        let n = self.state_dim();
        let want = |rows: &Vec<Vec<f64>>, cols: usize, name: &str| -> Result<()> {
            if rows.len() != n || rows.iter().any(|r| r.len() != cols) {
                return Err(Error::Config(format!(
                    "affine dynamics: matrix `{name}` must be {n}x{cols}"
                )));
            }
            if rows.iter().any(|r| !math::all_finite(r)) {
                return Err(Error::Config(format!(
                    "affine dynamics: matrix `{name}` has non-finite entries"
                )));
            }
            Ok(())
        };
        want(&self.m, n, "m")?;
        want(&self.bu, du, "bu")?;
        want(&self.bv, dv, "bv")?;
        if !math::all_finite(&self.b) {
            return Err(Error::Config("affine dynamics: `b` is not finite".into()));
        }
        Ok(())
    }

    fn frobenius(mat: &[Vec<f64>]) -> f64 {
        mat.iter()
            .flat_map(|r| r.iter())
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt()
    }

    fn apply_into(mat: &[Vec<f64>], x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(mat) {
            *o += math::dot(row, x);
        }
    }
}

/// Running payoff γ used by the terminal-payoff reduction. Only state-free
/// forms are supported, which keeps the augmented dynamics' Lipschitz
/// constant equal to the base one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RunningPayoff {
    Constant { value: f64 },
    /// γ(t, x, u, v) = u·v (dot product of the two actions; dimensions must
    /// agree).
    ControlDot,
}

impl RunningPayoff {
    pub fn eval(&self, _t: f64, _x: &[f64], u: &[f64], v: &[f64]) -> f64 {
        match self {
            RunningPayoff::Constant { value } => *value,
            RunningPayoff::ControlDot => math::dot(u, v),
        }
    }

    pub(crate) fn bound(&self, u_set: &ControlSet, v_set: &ControlSet) -> f64 {
        match self {
            RunningPayoff::Constant { value } => value.abs(),
            RunningPayoff::ControlDot => {
                let mut worst = 0.0f64;
                for u in u_set.iter() {
                    for v in v_set.iter() {
                        worst = worst.max(math::dot(u, v).abs());
                    }
                }
                worst
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum DynamicsKind {
    /// f = u + v (state dimension = action dimension).
    Sum,
    /// f = u − v (pursuit along a line for 1-D sets).
    PursuitLine,
    /// f = R(rate·t)(u − v) in the plane: the control frame rotates at a
    /// constant angular rate, giving genuinely time-dependent dynamics with
    /// an exactly known Lipschitz constant.
    Rot2d { rate: f64 },
    /// f = u·v, scalar. Max-min and min-max differ: the standard witness that
    /// the one-shot games need not have a value without a saddle assumption.
    CoupledProduct,
    Affine(AffineDynamics),
    /// Base dynamics with one appended coordinate integrating a running
    /// payoff.
    Augmented {
        base: Box<DynamicsKind>,
        gamma: RunningPayoff,
        base_dim: usize,
    },
}

impl DynamicsKind {
    /// True when f does not depend on x; the value recursion can then reuse
    /// one f table per time slice.
    fn is_state_free(&self) -> bool {
        match self {
            DynamicsKind::Sum
            | DynamicsKind::PursuitLine
            | DynamicsKind::Rot2d { .. }
            | DynamicsKind::CoupledProduct => true,
            DynamicsKind::Affine(_) => false,
            DynamicsKind::Augmented { base, .. } => base.is_state_free(),
        }
    }

    fn eval_into(&self, t: f64, x: &[f64], u: &[f64], v: &[f64], out: &mut [f64]) {
        match self {
            DynamicsKind::Sum => {
                for i in 0..out.len() {
                    out[i] = u[i] + v[i];
                }
            }
            DynamicsKind::PursuitLine => {
                for i in 0..out.len() {
                    out[i] = u[i] - v[i];
                }
            }
            DynamicsKind::Rot2d { rate } => {
                let (s, c) = (rate * t).sin_cos();
                let w0 = u[0] - v[0];
                let w1 = u[1] - v[1];
                out[0] = c * w0 - s * w1;
                out[1] = s * w0 + c * w1;
            }
            DynamicsKind::CoupledProduct => {
                out[0] = u[0] * v[0];
            }
            DynamicsKind::Affine(aff) => {
                out.copy_from_slice(&aff.b);
                AffineDynamics::apply_into(&aff.m, x, out);
                AffineDynamics::apply_into(&aff.bu, u, out);
                AffineDynamics::apply_into(&aff.bv, v, out);
            }
            DynamicsKind::Augmented {
                base,
                gamma,
                base_dim,
            } => {
                let (head, tail) = out.split_at_mut(*base_dim);
                base.eval_into(t, &x[..*base_dim], u, v, head);
                tail[0] = gamma.eval(t, &x[..*base_dim], u, v);
            }
        }
    }
}

/// Growth constants derived from the declared bounds:
/// A = 3c + 2‖f‖ and B = 4‖f‖² + 2c(1 + ‖f‖).
///
/// `a` controls the exponential distance growth between paired trajectories
/// and `b` the per-interval additive drift; see the guarantees in
/// [`crate::extremal`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub a: f64,
    pub b: f64,
}

/// Compute the derived constants from a Lipschitz bound `lip_c` and a speed
/// bound `f_bound`.
pub fn derived_constants(lip_c: f64, f_bound: f64) -> Result<DerivedConstants> {
    if !(lip_c.is_finite() && f_bound.is_finite()) || lip_c < 0.0 || f_bound < 0.0 {
        return Err(Error::Config(format!(
            "declared constants must be finite and non-negative (lip_c = {lip_c}, f_bound = {f_bound})"
        )));
    }
    Ok(DerivedConstants {
        a: 3.0 * lip_c + 2.0 * f_bound,
        b: 4.0 * f_bound * f_bound + 2.0 * lip_c * (1.0 + f_bound),
    })
}

/// A complete two-player dynamic: right-hand side, the two finite action
/// sets, and the declared regularity constants everything downstream trusts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameDynamics {
    kind: DynamicsKind,
    state_dim: usize,
    u_set: ControlSet,
    v_set: ControlSet,
    f_bound: f64,
    lip_c: f64,
}

impl GameDynamics {
    fn build(
        kind: DynamicsKind,
        state_dim: usize,
        u_set: ControlSet,
        v_set: ControlSet,
        f_bound: f64,
        lip_c: f64,
    ) -> Result<Self> {
        if !(f_bound.is_finite() && lip_c.is_finite()) || f_bound < 0.0 || lip_c < 0.0 {
            return Err(Error::Config(format!(
                "declared constants must be finite and non-negative (f_bound = {f_bound}, lip_c = {lip_c})"
            )));
        }
        Ok(Self {
            kind,
            state_dim,
            u_set,
            v_set,
            f_bound,
            lip_c,
        })
    }

    fn expect_dims(
        u_set: &ControlSet,
        v_set: &ControlSet,
        du: usize,
        dv: usize,
        what: &str,
    ) -> Result<()> {
        if u_set.dim() != du || v_set.dim() != dv {
            return Err(Error::Config(format!(
                "{what} needs {du}-dimensional u actions and {dv}-dimensional v actions \
                 (got {} and {})",
                u_set.dim(),
                v_set.dim()
            )));
        }
        Ok(())
    }

    /// f = u + v. Exact constants: ‖f‖ = max‖u + v‖, c = 0.
    pub fn sum(u_set: ControlSet, v_set: ControlSet) -> Result<Self> {
        if u_set.dim() != v_set.dim() {
            return Err(Error::Config(
                "sum dynamics: u and v actions must share a dimension".into(),
            ));
        }
        let n = u_set.dim();
        let mut f_bound = 0.0f64;
        for u in u_set.iter() {
            for v in v_set.iter() {
                let s: f64 = u.iter().zip(v).map(|(a, b)| (a + b) * (a + b)).sum();
                f_bound = f_bound.max(s.sqrt());
            }
        }
        Self::build(DynamicsKind::Sum, n, u_set, v_set, f_bound, 0.0)
    }

    /// f = u − v. Exact constants: ‖f‖ = max‖u − v‖, c = 0.
    pub fn pursuit_line(u_set: ControlSet, v_set: ControlSet) -> Result<Self> {
        if u_set.dim() != v_set.dim() {
            return Err(Error::Config(
                "pursuit-line dynamics: u and v actions must share a dimension".into(),
            ));
        }
        let n = u_set.dim();
        let f_bound = max_diff_norm(&u_set, &v_set);
        Self::build(DynamicsKind::PursuitLine, n, u_set, v_set, f_bound, 0.0)
    }

    /// f = R(rate·t)(u − v) in ℝ². Exact constants: ‖f‖ = max‖u − v‖ (the
    /// rotation is an isometry) and c = |rate|·max‖u − v‖ from
    /// ‖(R(rate·t) − R(rate·s))w‖ = 2|sin(rate(t−s)/2)|·‖w‖ ≤ |rate||t−s|‖w‖.
    pub fn rot2d(rate: f64, u_set: ControlSet, v_set: ControlSet) -> Result<Self> {
        Self::expect_dims(&u_set, &v_set, 2, 2, "rot2d dynamics")?;
        if !rate.is_finite() {
            return Err(Error::Config("rot2d dynamics: rate must be finite".into()));
        }
        let m = max_diff_norm(&u_set, &v_set);
        Self::build(
            DynamicsKind::Rot2d { rate },
            2,
            u_set,
            v_set,
            m,
            rate.abs() * m,
        )
    }

    /// f = u·v (scalar product of scalar actions). Exact constants:
    /// ‖f‖ = max|u·v|, c = 0.
    pub fn coupled_product(u_set: ControlSet, v_set: ControlSet) -> Result<Self> {
        Self::expect_dims(&u_set, &v_set, 1, 1, "coupled product dynamics")?;
        let mut f_bound = 0.0f64;
        for u in u_set.iter() {
            for v in v_set.iter() {
                f_bound = f_bound.max((u[0] * v[0]).abs());
            }
        }
        Self::build(DynamicsKind::CoupledProduct, 1, u_set, v_set, f_bound, 0.0)
    }

    /// Constant-coefficient affine dynamics. The speed bound must hold along
    /// every trajectory started in `state_box`, so it is computed from a
    /// Gronwall envelope of ‖x(t)‖ over the horizon rather than from the box
    /// alone: with c = ‖m‖_F, E = max‖bu·u‖ + max‖bv·v‖ + ‖b‖ and
    /// r₀ = max‖x₀‖ over the box,
    /// r_reach = r₀·e^c + (e^c − 1)·E/c and ‖f‖ = c·r_reach + E.
    pub fn affine(
        aff: AffineDynamics,
        u_set: ControlSet,
        v_set: ControlSet,
        state_box: &[[f64; 2]],
    ) -> Result<Self> {
        let n = aff.state_dim();
        aff.check_shapes(u_set.dim(), v_set.dim())?;
        if state_box.len() != n {
            return Err(Error::Config(format!(
                "affine dynamics: state box has {} axes, state dimension is {n}",
                state_box.len()
            )));
        }
        let c = AffineDynamics::frobenius(&aff.m);
        let mut e_term = math::norm(&aff.b);
        e_term += u_set
            .iter()
            .map(|u| {
                let mut out = vec![0.0; n];
                AffineDynamics::apply_into(&aff.bu, u, &mut out);
                math::norm(&out)
            })
            .fold(0.0, f64::max);
        e_term += v_set
            .iter()
            .map(|v| {
                let mut out = vec![0.0; n];
                AffineDynamics::apply_into(&aff.bv, v, &mut out);
                math::norm(&out)
            })
            .fold(0.0, f64::max);
        let r0 = state_box
            .iter()
            .map(|[lo, hi]| lo.abs().max(hi.abs()).powi(2))
            .sum::<f64>()
            .sqrt();
        let growth = (c * HORIZON_END).exp();
        let r_reach = if c > 0.0 {
            r0 * growth + (growth - 1.0) * e_term / c
        } else {
            r0 + e_term * HORIZON_END
        };
        let f_bound = c * r_reach + e_term;
        Self::build(DynamicsKind::Affine(aff), n, u_set, v_set, f_bound, c)
    }

    /// Replace the declared constants. The constructors compute sound bounds;
    /// override only when sharper constants are known from structure. The
    /// sampling validator and the integrator both police overrides that are
    /// too optimistic.
    pub fn override_constants(mut self, f_bound: f64, lip_c: f64) -> Result<Self> {
        if !(f_bound.is_finite() && lip_c.is_finite()) || f_bound < 0.0 || lip_c < 0.0 {
            return Err(Error::Config(format!(
                "declared constants must be finite and non-negative (f_bound = {f_bound}, lip_c = {lip_c})"
            )));
        }
        self.f_bound = f_bound;
        self.lip_c = lip_c;
        Ok(self)
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn u_set(&self) -> &ControlSet {
        &self.u_set
    }

    pub fn v_set(&self) -> &ControlSet {
        &self.v_set
    }

    pub fn f_bound(&self) -> f64 {
        self.f_bound
    }

    pub fn lip_c(&self) -> f64 {
        self.lip_c
    }

    /// A = 3c + 2‖f‖, B = 4‖f‖² + 2c(1 + ‖f‖) from the declared bounds.
    pub fn derived_constants(&self) -> DerivedConstants {
        // Declared constants were validated at construction.
        derived_constants(self.lip_c, self.f_bound).expect("validated at construction")
    }

    pub(crate) fn is_state_free(&self) -> bool {
        self.kind.is_state_free()
    }

    /// Evaluate f by action indices into a caller-provided buffer. This is
    /// the hot path; it performs no checks beyond index validity.
    pub fn eval_into(&self, t: f64, x: &[f64], ui: usize, vi: usize, out: &mut [f64]) -> Result<()> {
        let u = self.u_set.point(ui)?;
        let v = self.v_set.point(vi)?;
        debug_assert_eq!(x.len(), self.state_dim);
        debug_assert_eq!(out.len(), self.state_dim);
        self.kind.eval_into(t, x, u, v, out);
        Ok(())
    }

    /// Evaluate f with actions given by value. Validates membership in the
    /// declared sets, finiteness, and that the declared speed bound holds at
    /// this point.
    pub fn eval_dynamics(&self, t: f64, x: &[f64], u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.state_dim {
            return Err(Error::Argument(format!(
                "state has dimension {}, expected {}",
                x.len(),
                self.state_dim
            )));
        }
        if !math::all_finite(x) || !t.is_finite() {
            return Err(Error::Numeric {
                t,
                what: format!("non-finite evaluation point {x:?}"),
            });
        }
        let ui = self.u_set.index_of(u).ok_or_else(|| Error::InvalidAction {
            set: self.u_set.label.clone(),
            action: u.to_vec(),
        })?;
        let vi = self.v_set.index_of(v).ok_or_else(|| Error::InvalidAction {
            set: self.v_set.label.clone(),
            action: v.to_vec(),
        })?;
        let mut out = vec![0.0; self.state_dim];
        self.eval_into(t, x, ui, vi, &mut out)?;
        if !math::all_finite(&out) {
            return Err(Error::Numeric {
                t,
                what: format!("dynamics produced non-finite value at x = {x:?}"),
            });
        }
        let speed = math::norm(&out);
        if speed > self.f_bound * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::Config(format!(
                "declared f_bound = {} violated: ‖f‖ = {speed} at t = {t}, x = {x:?}",
                self.f_bound
            )));
        }
        Ok(out)
    }

    /// Sample the state box and check the declared constants: every sampled
    /// speed must stay within `f_bound + 1e-12` and every sampled difference
    /// quotient of f in (t, x) within `lip_c + 1e-9`.
    pub fn validate_constants(
        &self,
        state_box: &[[f64; 2]],
        samples: usize,
        seed: u64,
    ) -> Result<ConstantsReport> {
        use rand::SeedableRng;
        if state_box.len() != self.state_dim {
            return Err(Error::Argument(format!(
                "state box has {} axes, state dimension is {}",
                state_box.len(),
                self.state_dim
            )));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let draw_point = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
            state_box
                .iter()
                .map(|[lo, hi]| rng.gen_range(*lo..=*hi))
                .collect()
        };
        let mut max_speed = 0.0f64;
        let mut max_quotient = 0.0f64;
        let mut worst: Option<String> = None;
        let mut buf_a = vec![0.0; self.state_dim];
        let mut buf_b = vec![0.0; self.state_dim];
        for _ in 0..samples {
            let t = rng.gen_range(0.0..=HORIZON_END);
            let s = rng.gen_range(0.0..=HORIZON_END);
            let x = draw_point(&mut rng);
            let y = draw_point(&mut rng);
            let ui = rng.gen_range(0..self.u_set.len());
            let vi = rng.gen_range(0..self.v_set.len());
            self.eval_into(t, &x, ui, vi, &mut buf_a)?;
            if !math::all_finite(&buf_a) {
                return Err(Error::Numeric {
                    t,
                    what: format!("dynamics non-finite at sampled x = {x:?}"),
                });
            }
            let speed = math::norm(&buf_a);
            if speed > max_speed {
                max_speed = speed;
                worst = Some(format!(
                    "t = {t}, x = {x:?}, u = {:?}, v = {:?}",
                    self.u_set.point(ui)?,
                    self.v_set.point(vi)?
                ));
            }
            self.eval_into(s, &y, ui, vi, &mut buf_b)?;
            let denom = (t - s).abs() + math::dist(&x, &y);
            if denom > 1e-12 {
                let quot = math::dist(&buf_a, &buf_b) / denom;
                max_quotient = max_quotient.max(quot);
            }
        }
        let report = ConstantsReport {
            samples,
            max_speed,
            f_bound: self.f_bound,
            max_quotient,
            lip_c: self.lip_c,
        };
        if max_speed > self.f_bound + 1e-12 {
            return Err(Error::Config(format!(
                "declared f_bound = {} but sampled ‖f‖ reached {max_speed} at {}",
                self.f_bound,
                worst.unwrap_or_default()
            )));
        }
        if max_quotient > self.lip_c + 1e-9 {
            return Err(Error::Config(format!(
                "declared lip_c = {} but sampled difference quotient reached {max_quotient}",
                self.lip_c
            )));
        }
        Ok(report)
    }
}

fn max_diff_norm(u_set: &ControlSet, v_set: &ControlSet) -> f64 {
    let mut worst = 0.0f64;
    for u in u_set.iter() {
        for v in v_set.iter() {
            worst = worst.max(math::dist(u, v));
        }
    }
    worst
}

/// Outcome of sampling-based validation of the declared constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub samples: usize,
    pub max_speed: f64,
    pub f_bound: f64,
    pub max_quotient: f64,
    pub lip_c: f64,
}

/// Terminal payoff g as a small descriptor so configurations stay
/// declarative and κ (the Lipschitz constant of g) can be computed exactly
/// for the common shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PayoffFn {
    /// g(x) = coeffs·x + offset.
    Linear { coeffs: Vec<f64>, offset: f64 },
    /// g(x) = |coeffs·x + offset|.
    Abs { coeffs: Vec<f64>, offset: f64 },
    /// g(x) = ‖x − center‖.
    Norm { center: Vec<f64> },
    /// g(x) = Σ coeffs[k]·x₀ᵏ, a univariate polynomial in the first state
    /// coordinate. No exact κ; declare one and validate it by sampling.
    Polynomial { coeffs: Vec<f64> },
    /// g(x, y) = base(x) + y with y the last coordinate. Produced by the
    /// running-payoff reduction; rarely written by hand.
    PlusLast { base: Box<PayoffFn> },
}

impl PayoffFn {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            PayoffFn::Linear { coeffs, offset } => math::dot(coeffs, x) + offset,
            PayoffFn::Abs { coeffs, offset } => (math::dot(coeffs, x) + offset).abs(),
            PayoffFn::Norm { center } => math::dist(x, center),
            PayoffFn::Polynomial { coeffs } => {
                let s = x[0];
                coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
            }
            PayoffFn::PlusLast { base } => {
                let (head, tail) = x.split_at(x.len() - 1);
                base.eval(head) + tail[0]
            }
        }
    }

    /// Exact Lipschitz constant where one exists.
    pub fn exact_kappa(&self) -> Option<f64> {
        match self {
            PayoffFn::Linear { coeffs, .. } | PayoffFn::Abs { coeffs, .. } => {
                Some(math::norm(coeffs))
            }
            PayoffFn::Norm { .. } => Some(1.0),
            PayoffFn::Polynomial { .. } => None,
            PayoffFn::PlusLast { base } => base.exact_kappa().map(|k| k.hypot(1.0)),
        }
    }

    pub(crate) fn state_dim_hint(&self) -> Option<usize> {
        match self {
            PayoffFn::Linear { coeffs, .. } | PayoffFn::Abs { coeffs, .. } => Some(coeffs.len()),
            PayoffFn::Norm { center } => Some(center.len()),
            PayoffFn::Polynomial { .. } => None,
            PayoffFn::PlusLast { base } => base.state_dim_hint().map(|n| n + 1),
        }
    }
}

/// Terminal payoff with its declared Lipschitz constant κ, plus an optional
/// running payoff γ. A game with γ present must be reduced with
/// [`bolza_to_mayer`] before value computation or play.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffSpec {
    pub g: PayoffFn,
    pub kappa: f64,
    pub gamma: Option<RunningPayoff>,
}

impl PayoffSpec {
    /// Terminal-only payoff with κ computed exactly from the descriptor.
    pub fn terminal(g: PayoffFn) -> Result<Self> {
        let kappa = g.exact_kappa().ok_or_else(|| {
            Error::Config("this payoff shape has no exact kappa; declare one explicitly".into())
        })?;
        Ok(Self {
            g,
            kappa,
            gamma: None,
        })
    }

    pub fn with_kappa(g: PayoffFn, kappa: f64) -> Result<Self> {
        if !kappa.is_finite() || kappa < 0.0 {
            return Err(Error::Config(format!(
                "kappa must be finite and non-negative, got {kappa}"
            )));
        }
        Ok(Self {
            g,
            kappa,
            gamma: None,
        })
    }

    pub fn with_gamma(mut self, gamma: RunningPayoff) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn eval_terminal(&self, x: &[f64]) -> f64 {
        self.g.eval(x)
    }

    /// Sample difference quotients of g over the box and check κ.
    pub fn validate_kappa(&self, state_box: &[[f64; 2]], samples: usize, seed: u64) -> Result<f64> {
        use rand::SeedableRng;
        if let Some(n) = self.g.state_dim_hint() {
            if n != state_box.len() {
                return Err(Error::Argument(format!(
                    "payoff expects {n}-dimensional states, box has {} axes",
                    state_box.len()
                )));
            }
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let x: Vec<f64> = state_box
                .iter()
                .map(|[lo, hi]| rng.gen_range(*lo..=*hi))
                .collect();
            let y: Vec<f64> = state_box
                .iter()
                .map(|[lo, hi]| rng.gen_range(*lo..=*hi))
                .collect();
            let d = math::dist(&x, &y);
            if d > 1e-12 {
                worst = worst.max((self.g.eval(&x) - self.g.eval(&y)).abs() / d);
            }
        }
        if worst > self.kappa + 1e-9 {
            return Err(Error::Config(format!(
                "declared kappa = {} but sampled quotient reached {worst}",
                self.kappa
            )));
        }
        Ok(worst)
    }
}

/// Result of [`bolza_to_mayer`]: possibly-augmented dynamics and payoff, and
/// whether a reduction actually happened.
#[derive(Debug, Clone)]
pub struct BolzaReduction {
    pub dynamics: GameDynamics,
    pub payoff: PayoffSpec,
    /// False when the input had no running payoff and came back untouched;
    /// callers may want to tell the user the call was a no-op.
    pub reduced: bool,
}

/// Fold a running payoff into the terminal one by appending a state
/// coordinate y with ẏ = γ and payoff g̃(x, y) = g(x) + y. Start augmented
/// trajectories at y₀ = 0.
///
/// Without a γ this is a no-op (flagged in the result). The augmented
/// constants stay sound: speeds combine as a Euclidean sum and the supported
/// γ forms are state-free, so the Lipschitz constant carries over; κ becomes
/// √(κ² + 1).
pub fn bolza_to_mayer(dynamics: &GameDynamics, payoff: &PayoffSpec) -> Result<BolzaReduction> {
    let Some(gamma) = payoff.gamma.clone() else {
        return Ok(BolzaReduction {
            dynamics: dynamics.clone(),
            payoff: payoff.clone(),
            reduced: false,
        });
    };
    if let RunningPayoff::ControlDot = gamma {
        if dynamics.u_set.dim() != dynamics.v_set.dim() {
            return Err(Error::Config(
                "control-dot running payoff needs u and v actions of equal dimension".into(),
            ));
        }
    }
    let gamma_bound = gamma.bound(&dynamics.u_set, &dynamics.v_set);
    let f_bound = dynamics.f_bound.hypot(gamma_bound);
    let kind = DynamicsKind::Augmented {
        base: Box::new(dynamics.kind.clone()),
        gamma,
        base_dim: dynamics.state_dim,
    };
    let augmented = GameDynamics::build(
        kind,
        dynamics.state_dim + 1,
        dynamics.u_set.clone(),
        dynamics.v_set.clone(),
        f_bound,
        dynamics.lip_c,
    )?;
    let g = augment_payoff_fn(payoff.g.clone(), dynamics.state_dim);
    let payoff = PayoffSpec {
        g,
        kappa: payoff.kappa.hypot(1.0),
        gamma: None,
    };
    Ok(BolzaReduction {
        dynamics: augmented,
        payoff,
        reduced: true,
    })
}

/// g̃(x, y) = g(x) + y, folded into the linear descriptor when possible.
fn augment_payoff_fn(g: PayoffFn, base_dim: usize) -> PayoffFn {
    match g {
        PayoffFn::Linear { mut coeffs, offset } => {
            coeffs.resize(base_dim, 0.0);
            coeffs.push(1.0);
            PayoffFn::Linear { coeffs, offset }
        }
        other => PayoffFn::PlusLast {
            base: Box::new(other),
        },
    }
}

/// Strictly increasing time grid t₀ < t₁ < … < t_N inside [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    times: Vec<f64>,
}

impl Partition {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::Argument(
                "a partition needs at least two time points".into(),
            ));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Argument("partition times must be finite".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument(
                "partition times must be strictly increasing".into(),
            ));
        }
        let (first, last) = (times[0], *times.last().unwrap());
        if first < 0.0 || last > HORIZON_END + 1e-12 {
            return Err(Error::Argument(format!(
                "partition [{first}, {last}] leaves the horizon [0, {HORIZON_END}]"
            )));
        }
        Ok(Self { times })
    }

    /// Uniform partition of [t0, t1] into `intervals` pieces.
    pub fn uniform(t0: f64, t1: f64, intervals: usize) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::Argument(
                "a partition needs at least one interval".into(),
            ));
        }
        if t1 <= t0 {
            return Err(Error::Argument(format!(
                "partition span [{t0}, {t1}] is empty"
            )));
        }
        let h = (t1 - t0) / intervals as f64;
        let mut times: Vec<f64> = (0..intervals).map(|i| t0 + h * i as f64).collect();
        times.push(t1); // exact right endpoint, no accumulated rounding
        Self::new(times)
    }

    /// Uniform partition of [t0, 1].
    pub fn game(t0: f64, intervals: usize) -> Result<Self> {
        Self::uniform(t0, HORIZON_END, intervals)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn t(&self, i: usize) -> f64 {
        self.times[i]
    }

    /// Number of intervals (one less than the number of points).
    pub fn intervals(&self) -> usize {
        self.times.len() - 1
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Mesh ‖Π‖ = max interval length.
    pub fn mesh(&self) -> f64 {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}
