//! Built-in benchmark games.
//!
//! Each setup bundles dynamics, terminal payoff, a start time/state, and the
//! box that randomized experiments draw initial states from (which also
//! seeds covering grids). The five builtins cover the interesting regimes:
//!
//! * `sum` — ẋ = u + v with cancelling action sets; the value is the
//!   identity in x.
//! * `pursuit-line` — ẋ = u − v on a line, |u| ≤ 1 versus |v| ≤ ½; the
//!   value is x + (1 − t)/2 in closed form.
//! * `rot2d` — planar ẋ = R(ω t)(u − v), a time-rotating control frame
//!   with exact speed and Lipschitz constants.
//! * `coupled-uv` — ẋ = u·v with u, v ∈ {−1, 1}: dynamics that cannot be
//!   separated, so the local maxmin/minmax gap is 2 in direction ξ = 1.
//! * `still` — ẋ = 0; every bound collapses to its floor.

use crate::dynamics::{
    bolza_to_mayer, ControlSet, GameDynamics, Partition, PayoffFn, PayoffSpec, HORIZON_END,
};
use crate::error::{Error, Result};
use crate::value_dp::SpatialGrid;

/// A fully specified game ready for value computation and experiments.
#[derive(Debug, Clone)]
pub struct GameSetup {
    pub name: String,
    pub dynamics: GameDynamics,
    pub payoff: PayoffSpec,
    pub t0: f64,
    pub x0: Vec<f64>,
    /// Box initial states are drawn from; covering grids grow out of it.
    pub start_box: Vec<[f64; 2]>,
    /// Default number of partition intervals.
    pub default_slices: usize,
    /// Default nodes per grid axis.
    pub default_nodes: usize,
}

/// Names accepted by [`GameSetup::builtin`].
pub const BUILTIN_GAMES: [&str; 5] = ["sum", "pursuit-line", "rot2d", "coupled-uv", "still"];

fn linear_payoff(coeffs: Vec<f64>) -> PayoffSpec {
    PayoffSpec::terminal(PayoffFn::Linear {
        coeffs,
        offset: 0.0,
    })
    .expect("linear payoffs have an exact Lipschitz constant")
}

impl GameSetup {
    /// Looks up a benchmark game by name.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "sum" => {
                let u = ControlSet::interval("u", -1.0, 1.0, 3)?;
                let v = ControlSet::interval("v", -1.0, 1.0, 3)?;
                Ok(Self {
                    name: "sum".into(),
                    dynamics: GameDynamics::sum(u, v)?,
                    payoff: linear_payoff(vec![1.0]),
                    t0: 0.0,
                    x0: vec![0.2],
                    start_box: vec![[-0.5, 0.5]],
                    default_slices: 100,
                    default_nodes: 201,
                })
            }
            "pursuit-line" => {
                let u = ControlSet::interval("u", -1.0, 1.0, 3)?;
                let v = ControlSet::interval("v", -0.5, 0.5, 3)?;
                Ok(Self {
                    name: "pursuit-line".into(),
                    dynamics: GameDynamics::pursuit_line(u, v)?,
                    payoff: linear_payoff(vec![1.0]),
                    t0: 0.0,
                    x0: vec![0.0],
                    start_box: vec![[-0.5, 0.5]],
                    default_slices: 100,
                    default_nodes: 201,
                })
            }
            "rot2d" => {
                let u = ControlSet::new(
                    "u",
                    vec![
                        vec![0.0, 0.0],
                        vec![1.0, 0.0],
                        vec![-1.0, 0.0],
                        vec![0.0, 1.0],
                        vec![0.0, -1.0],
                    ],
                )?;
                let v = ControlSet::new(
                    "v",
                    vec![
                        vec![0.0, 0.0],
                        vec![0.5, 0.0],
                        vec![-0.5, 0.0],
                        vec![0.0, 0.5],
                        vec![0.0, -0.5],
                    ],
                )?;
                Ok(Self {
                    name: "rot2d".into(),
                    dynamics: GameDynamics::rot2d(std::f64::consts::FRAC_PI_2, u, v)?,
                    payoff: linear_payoff(vec![1.0, 0.0]),
                    t0: 0.0,
                    x0: vec![0.0, 0.0],
                    start_box: vec![[-0.3, 0.3], [-0.3, 0.3]],
                    default_slices: 50,
                    default_nodes: 41,
                })
            }
            "coupled-uv" => {
                let u = ControlSet::new("u", vec![vec![-1.0], vec![1.0]])?;
                let v = ControlSet::new("v", vec![vec![-1.0], vec![1.0]])?;
                Ok(Self {
                    name: "coupled-uv".into(),
                    dynamics: GameDynamics::coupled_product(u, v)?,
                    payoff: linear_payoff(vec![1.0]),
                    t0: 0.0,
                    x0: vec![0.0],
                    start_box: vec![[-0.5, 0.5]],
                    default_slices: 50,
                    default_nodes: 101,
                })
            }
            "still" => {
                let u = ControlSet::new("u", vec![vec![0.0]])?;
                let v = ControlSet::new("v", vec![vec![0.0]])?;
                Ok(Self {
                    name: "still".into(),
                    dynamics: GameDynamics::sum(u, v)?,
                    payoff: linear_payoff(vec![1.0]),
                    t0: 0.0,
                    x0: vec![0.3],
                    start_box: vec![[-0.5, 0.5]],
                    default_slices: 10,
                    default_nodes: 21,
                })
            }
            other => Err(Error::Config(format!(
                "unknown game '{other}'; built-ins are {}",
                BUILTIN_GAMES.join(", ")
            ))),
        }
    }

    /// Uniform partition of [t₀, 1] with the given interval count.
    pub fn partition(&self, intervals: usize) -> Result<Partition> {
        Partition::game(self.t0, intervals)
    }

    /// Covering grid: the start box inflated by everything reachable.
    pub fn grid(&self, nodes_per_axis: usize) -> Result<SpatialGrid> {
        let counts = vec![nodes_per_axis; self.dynamics.state_dim()];
        SpatialGrid::covering(
            self.start_box.clone(),
            self.dynamics.f_bound(),
            HORIZON_END - self.t0,
            counts,
        )
    }

    /// Fold a running payoff into the terminal one. The augmented setup gains
    /// an accumulator coordinate started at 0 whose start-box range covers
    /// everything the running term can accrue over the horizon. Returns the
    /// (possibly untouched) setup and whether a reduction happened.
    pub fn reduce_running_payoff(&self) -> Result<(Self, bool)> {
        let reduction = bolza_to_mayer(&self.dynamics, &self.payoff)?;
        if !reduction.reduced {
            return Ok((self.clone(), false));
        }
        let gamma_bound = self
            .payoff
            .gamma
            .as_ref()
            .expect("reduced == true implies a running payoff")
            .bound(self.dynamics.u_set(), self.dynamics.v_set());
        let reach = (gamma_bound * (HORIZON_END - self.t0)).max(1e-3);
        let mut x0 = self.x0.clone();
        x0.push(0.0);
        let mut start_box = self.start_box.clone();
        start_box.push([-reach, reach]);
        Ok((
            Self {
                name: self.name.clone(),
                dynamics: reduction.dynamics,
                payoff: reduction.payoff,
                t0: self.t0,
                x0,
                start_box,
                default_slices: self.default_slices,
                default_nodes: self.default_nodes,
            },
            true,
        ))
    }
}
