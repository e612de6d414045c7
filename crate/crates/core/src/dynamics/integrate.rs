//! Classical fourth-order Runge–Kutta integration of the game dynamics under
//! a pair of piecewise-constant controls.
//!
//! Substeps never straddle a control breakpoint, so within every substep the
//! right-hand side is smooth in (t, x) and the integrator keeps its full
//! order. Callers that need two trajectories sampled on identical time grids
//! (for pointwise distance comparisons) pass the other trajectory's
//! breakpoints through [`integrate_with_breaks`].

use crate::error::{Error, Result};
use crate::math;
use serde::{Deserialize, Serialize};

use super::{GameDynamics, PiecewiseControl};

/// Default integrator substep for a partition of mesh `mesh`: fine enough
/// that time-discretization error is negligible next to the tolerances the
/// experiments assert (≤ 1e-8).
pub fn default_step(mesh: f64) -> f64 {
    (mesh / 20.0).min(1e-3)
}

/// A sampled trajectory: states at substep boundaries plus the action
/// indices applied on each substep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    u_indices: Vec<usize>,
    v_indices: Vec<usize>,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i]
    }

    /// Action indices per substep (player 1 / player 2).
    pub fn u_indices(&self) -> &[usize] {
        &self.u_indices
    }

    pub fn v_indices(&self) -> &[usize] {
        &self.v_indices
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().unwrap()
    }

    /// State at a recorded sample time (within 1e-12), if any.
    pub fn state_at_time(&self, t: f64) -> Option<&[f64]> {
        let i = self
            .times
            .partition_point(|probe| *probe < t - 1e-12);
        self.times
            .get(i)
            .filter(|probe| (*probe - t).abs() <= 1e-12)
            .map(|_| self.states[i].as_slice())
    }

    /// Append a continuation that starts where this trajectory ends.
    pub fn append(&mut self, next: Trajectory) -> Result<()> {
        if (next.start_time() - self.final_time()).abs() > 1e-12 {
            return Err(Error::Argument(format!(
                "cannot stitch: trajectory ends at {} but continuation starts at {}",
                self.final_time(),
                next.start_time()
            )));
        }
        if math::dist(next.states[0].as_slice(), self.final_state()) > 1e-9 {
            return Err(Error::Argument(
                "cannot stitch: continuation starts from a different state".into(),
            ));
        }
        self.times.extend_from_slice(&next.times[1..]);
        self.states.extend_from_slice(&next.states[1..]);
        self.u_indices.extend_from_slice(&next.u_indices);
        self.v_indices.extend_from_slice(&next.v_indices);
        Ok(())
    }

    /// Re-check the speed invariant ‖x_{k+1} − x_k‖ ≤ f_bound·Δt·(1 + tol).
    pub fn validate_speed(&self, f_bound: f64) -> Result<()> {
        for k in 0..self.times.len() - 1 {
            let dt = self.times[k + 1] - self.times[k];
            let moved = math::dist(&self.states[k + 1], &self.states[k]);
            if moved > f_bound * dt * (1.0 + 1e-9) + 1e-13 {
                return Err(Error::Config(format!(
                    "speed bound violated on [{}, {}]: moved {moved}, bound {}",
                    self.times[k],
                    self.times[k + 1],
                    f_bound * dt
                )));
            }
        }
        Ok(())
    }
}

/// Integrate ẋ = f(t, x, u(t), v(t)) from (t0, x0) to t1.
pub fn integrate(
    dynamics: &GameDynamics,
    t0: f64,
    x0: &[f64],
    u: &PiecewiseControl,
    v: &PiecewiseControl,
    t1: f64,
    step: f64,
) -> Result<Trajectory> {
    integrate_with_breaks(dynamics, t0, x0, u, v, t1, step, &[])
}

/// [`integrate`] with extra forced substep boundaries, so that two related
/// trajectories can share a sampling grid exactly.
#[allow(clippy::too_many_arguments)]
pub fn integrate_with_breaks(
    dynamics: &GameDynamics,
    t0: f64,
    x0: &[f64],
    u: &PiecewiseControl,
    v: &PiecewiseControl,
    t1: f64,
    step: f64,
    extra_breaks: &[f64],
) -> Result<Trajectory> {
    let n = dynamics.state_dim();
    if x0.len() != n {
        return Err(Error::Argument(format!(
            "initial state has dimension {}, expected {n}",
            x0.len()
        )));
    }
    if !math::all_finite(x0) {
        return Err(Error::Numeric {
            t: t0,
            what: "initial state is not finite".into(),
        });
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Argument(format!("step must be positive, got {step}")));
    }
    if t1 <= t0 {
        return Err(Error::Argument(format!(
            "integration span [{t0}, {t1}] is empty"
        )));
    }
    for (ctrl, name) in [(u, "u"), (v, "v")] {
        if !ctrl.covers(t0, t1) {
            let (a, b) = ctrl.span();
            return Err(Error::Config(format!(
                "{name}-control covers [{a}, {b}] but integration needs [{t0}, {t1}]"
            )));
        }
    }
    u.validate_for(dynamics.u_set())?;
    v.validate_for(dynamics.v_set())?;

    // Segment boundaries: endpoints, both controls' breakpoints, forced ones.
    let mut bounds: Vec<f64> = vec![t0, t1];
    for src in [u.breakpoints(), v.breakpoints(), extra_breaks] {
        bounds.extend(src.iter().copied().filter(|b| *b > t0 && *b < t1));
    }
    bounds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bounds.dedup_by(|a, b| (*a - *b).abs() <= 1e-13);

    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut u_indices = Vec::new();
    let mut v_indices = Vec::new();
    times.push(t0);
    states.push(x0.to_vec());

    let f_bound = dynamics.f_bound();
    let mut x = x0.to_vec();
    let mut stage = Stage::new(n);
    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        let ui = u.index_at(a);
        let vi = v.index_at(a);
        let nsub = ((b - a) / step).ceil().max(1.0) as usize;
        let h = (b - a) / nsub as f64;
        for k in 0..nsub {
            let tk = a + h * k as f64;
            let t_next = if k + 1 == nsub { b } else { a + h * (k + 1) as f64 };
            let hk = t_next - tk;
            stage.rk4(dynamics, tk, hk, &mut x, ui, vi)?;
            if !math::all_finite(&x) {
                return Err(Error::Numeric {
                    t: t_next,
                    what: "state became non-finite during integration".into(),
                });
            }
            let moved = math::dist(&x, states.last().unwrap());
            if moved > f_bound * hk * (1.0 + 1e-9) + 1e-13 {
                return Err(Error::Config(format!(
                    "declared f_bound = {f_bound} violated during integration near t = {t_next} \
                     (moved {moved} over {hk}); the state may have left the region the \
                     constants were derived for"
                )));
            }
            times.push(t_next);
            states.push(x.clone());
            u_indices.push(ui);
            v_indices.push(vi);
        }
    }

    Ok(Trajectory {
        times,
        states,
        u_indices,
        v_indices,
    })
}

/// Scratch buffers for one RK4 stage evaluation.
struct Stage {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Stage {
    fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    fn rk4(
        &mut self,
        dynamics: &GameDynamics,
        t: f64,
        h: f64,
        x: &mut [f64],
        ui: usize,
        vi: usize,
    ) -> Result<()> {
        dynamics.eval_into(t, x, ui, vi, &mut self.k1)?;
        math::axpy_into(&mut self.tmp, x, 0.5 * h, &self.k1);
        dynamics.eval_into(t + 0.5 * h, &self.tmp, ui, vi, &mut self.k2)?;
        math::axpy_into(&mut self.tmp, x, 0.5 * h, &self.k2);
        dynamics.eval_into(t + 0.5 * h, &self.tmp, ui, vi, &mut self.k3)?;
        math::axpy_into(&mut self.tmp, x, h, &self.k3);
        dynamics.eval_into(t + h, &self.tmp, ui, vi, &mut self.k4)?;
        for i in 0..x.len() {
            x[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}
