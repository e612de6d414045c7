//! TOML game descriptions.
//!
//! A config either names a built-in game (optionally overriding its start
//! time, start state, sampling box, or grid resolution) or specifies a
//! custom affine game in full. The two shapes:
//!
//! ```toml
//! [game]
//! builtin = "pursuit-line"
//! t0 = 0.25
//!
//! [grid]
//! slices = 200
//! nodes = 401
//! ```
//!
//! ```toml
//! [game]
//! name = "drifting-line"
//! t0 = 0.0
//!
//! [affine]            # ẋ = m·x + bu·u + bv·v + b
//! m = [[0.5]]
//! bu = [[1.0]]
//! bv = [[-1.0]]
//! b = [0.0]
//!
//! [controls.u]
//! interval = { lo = -1.0, hi = 1.0, count = 3 }
//!
//! [controls.v]
//! points = [[-0.5], [0.0], [0.5]]
//!
//! [state]
//! x0 = [0.0]
//! box = [[-0.5, 0.5]]
//!
//! [payoff]            # any payoff descriptor; kappa required when the
//! kind = "linear"     # shape has no exact Lipschitz constant
//! coeffs = [1.0]
//! offset = 0.0
//! # gamma = { kind = "constant", value = 0.5 }
//!
//! # [constants]       # optional sharper bounds than the derived ones
//! # f_bound = 1.5
//! # lip_c = 0.5
//! ```
//!
//! Unknown keys are rejected so typos surface as errors, not silent
//! defaults.

use std::path::Path;

use serde::Deserialize;

use crate::dynamics::{
    AffineDynamics, ControlSet, GameDynamics, PayoffFn, PayoffSpec, RunningPayoff, HORIZON_END,
};
use crate::error::{Error, Result};
use crate::games::GameSetup;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    game: RawGame,
    affine: Option<AffineDynamics>,
    controls: Option<RawControls>,
    state: Option<RawState>,
    payoff: Option<RawPayoff>,
    constants: Option<RawConstants>,
    grid: Option<RawGrid>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGame {
    builtin: Option<String>,
    name: Option<String>,
    t0: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawControls {
    u: RawControlSet,
    v: RawControlSet,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawControlSet {
    points: Option<Vec<Vec<f64>>>,
    interval: Option<RawInterval>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInterval {
    lo: f64,
    hi: f64,
    count: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    x0: Option<Vec<f64>>,
    #[serde(rename = "box")]
    state_box: Option<Vec<[f64; 2]>>,
}

/// `deny_unknown_fields` cannot be combined with `flatten`; typos inside
/// `[payoff]` still fail because the payoff descriptor rejects them.
#[derive(Debug, Deserialize)]
struct RawPayoff {
    #[serde(flatten)]
    g: PayoffFn,
    kappa: Option<f64>,
    gamma: Option<RunningPayoff>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstants {
    f_bound: f64,
    lip_c: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    slices: Option<usize>,
    nodes: Option<usize>,
}

/// Reads and materializes a game description from a TOML file.
pub fn load_game_config(path: impl AsRef<Path>) -> Result<GameSetup> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("could not read {}: {e}", path.display())))?;
    parse_game_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Materializes a game description from TOML text.
pub fn parse_game_config(text: &str) -> Result<GameSetup> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| Error::Config(format!("game config: {e}")))?;
    let mut setup = match &raw.game.builtin {
        Some(name) => builtin_setup(&raw, name)?,
        None => custom_setup(&raw)?,
    };
    if let Some(t0) = raw.game.t0 {
        if !t0.is_finite() || t0 < 0.0 || t0 >= HORIZON_END {
            return Err(Error::Config(format!(
                "game.t0 must lie in [0, {HORIZON_END}), got {t0}"
            )));
        }
        setup.t0 = t0;
    }
    if let Some(grid) = &raw.grid {
        if let Some(slices) = grid.slices {
            if slices == 0 {
                return Err(Error::Config("grid.slices must be positive".into()));
            }
            setup.default_slices = slices;
        }
        if let Some(nodes) = grid.nodes {
            if nodes < 2 {
                return Err(Error::Config("grid.nodes must be at least 2".into()));
            }
            setup.default_nodes = nodes;
        }
    }
    check_start_state(&setup)?;
    Ok(setup)
}

fn builtin_setup(raw: &RawConfig, name: &str) -> Result<GameSetup> {
    for (present, section) in [
        (raw.affine.is_some(), "[affine]"),
        (raw.controls.is_some(), "[controls]"),
        (raw.payoff.is_some(), "[payoff]"),
        (raw.constants.is_some(), "[constants]"),
    ] {
        if present {
            return Err(Error::Config(format!(
                "{section} cannot be combined with game.builtin = \"{name}\"; \
                 built-in games fix their dynamics and payoff"
            )));
        }
    }
    let mut setup = GameSetup::builtin(name)?;
    if let Some(name) = &raw.game.name {
        setup.name = name.clone();
    }
    if let Some(state) = &raw.state {
        if let Some(bx) = &state.state_box {
            setup.start_box = bx.clone();
        }
        if let Some(x0) = &state.x0 {
            setup.x0 = x0.clone();
        }
    }
    Ok(setup)
}

fn custom_setup(raw: &RawConfig) -> Result<GameSetup> {
    let affine = raw
        .affine
        .as_ref()
        .ok_or_else(|| Error::Config("custom games need an [affine] section".into()))?;
    let controls = raw
        .controls
        .as_ref()
        .ok_or_else(|| Error::Config("custom games need [controls.u] and [controls.v]".into()))?;
    let state = raw
        .state
        .as_ref()
        .ok_or_else(|| Error::Config("custom games need a [state] section".into()))?;
    let payoff = raw
        .payoff
        .as_ref()
        .ok_or_else(|| Error::Config("custom games need a [payoff] section".into()))?;

    let x0 = state
        .x0
        .clone()
        .ok_or_else(|| Error::Config("state.x0 is required for custom games".into()))?;
    let start_box = state
        .state_box
        .clone()
        .ok_or_else(|| Error::Config("state.box is required for custom games".into()))?;

    let u_set = control_set("u", &controls.u)?;
    let v_set = control_set("v", &controls.v)?;
    let mut dynamics = GameDynamics::affine(affine.clone(), u_set, v_set, &start_box)?;
    if let Some(c) = &raw.constants {
        dynamics = dynamics.override_constants(c.f_bound, c.lip_c)?;
    }

    let mut spec = match payoff.kappa {
        Some(kappa) => PayoffSpec::with_kappa(payoff.g.clone(), kappa)?,
        None => PayoffSpec::terminal(payoff.g.clone()).map_err(|_| {
            Error::Config(
                "payoff.kappa is required: this payoff shape has no exact Lipschitz constant"
                    .into(),
            )
        })?,
    };
    if let Some(gamma) = &payoff.gamma {
        spec = spec.with_gamma(gamma.clone());
    }

    let dim = dynamics.state_dim();
    Ok(GameSetup {
        name: raw.game.name.clone().unwrap_or_else(|| "custom".into()),
        dynamics,
        payoff: spec,
        t0: 0.0,
        x0,
        start_box,
        default_slices: 100,
        default_nodes: if dim == 1 { 201 } else { 41 },
    })
}

fn control_set(which: &str, raw: &RawControlSet) -> Result<ControlSet> {
    match (&raw.points, &raw.interval) {
        (Some(points), None) => ControlSet::new(which, points.clone()),
        (None, Some(iv)) => ControlSet::interval(which, iv.lo, iv.hi, iv.count),
        _ => Err(Error::Config(format!(
            "controls.{which}: give exactly one of `points` or `interval`"
        ))),
    }
}

fn check_start_state(setup: &GameSetup) -> Result<()> {
    let dim = setup.dynamics.state_dim();
    if setup.x0.len() != dim {
        return Err(Error::Config(format!(
            "state.x0 has {} coordinates, the dynamics have state dimension {dim}",
            setup.x0.len()
        )));
    }
    if setup.start_box.len() != dim {
        return Err(Error::Config(format!(
            "state.box has {} axes, the dynamics have state dimension {dim}",
            setup.start_box.len()
        )));
    }
    for (i, ([lo, hi], x)) in setup.start_box.iter().zip(&setup.x0).enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!(
                "state.box axis {i} must be a finite interval [lo, hi] with lo < hi"
            )));
        }
        if x < lo || x > hi {
            return Err(Error::Config(format!(
                "state.x0[{i}] = {x} lies outside state.box axis {i} = [{lo}, {hi}]"
            )));
        }
    }
    if let Some(n) = setup.payoff.g.state_dim_hint() {
        if n != dim {
            return Err(Error::Config(format!(
                "payoff expects {n}-dimensional states, the dynamics have state dimension {dim}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUSTOM: &str = r#"
        [game]
        name = "line"

        [affine]
        m = [[0.0]]
        bu = [[1.0]]
        bv = [[-1.0]]
        b = [0.0]

        [controls.u]
        interval = { lo = -1.0, hi = 1.0, count = 3 }

        [controls.v]
        points = [[-0.5], [0.0], [0.5]]

        [state]
        x0 = [0.0]
        box = [[-0.5, 0.5]]

        [payoff]
        kind = "linear"
        coeffs = [1.0]
        offset = 0.0

        [constants]
        f_bound = 1.5
        lip_c = 0.0
    "#;

    #[test]
    fn builtin_with_overrides() {
        let setup = parse_game_config(
            r#"
            [game]
            builtin = "pursuit-line"
            t0 = 0.25

            [state]
            x0 = [0.1]

            [grid]
            slices = 40
            nodes = 81
            "#,
        )
        .unwrap();
        assert_eq!(setup.name, "pursuit-line");
        assert_eq!(setup.t0, 0.25);
        assert_eq!(setup.x0, vec![0.1]);
        assert_eq!(setup.default_slices, 40);
        assert_eq!(setup.default_nodes, 81);
    }

    #[test]
    fn custom_affine_game_reproduces_the_known_value() {
        use crate::value_dp::compute_lower_value;
        let setup = parse_game_config(CUSTOM).unwrap();
        assert_eq!(setup.name, "line");
        assert_eq!(setup.dynamics.f_bound(), 1.5);
        let partition = setup.partition(25).unwrap();
        let grid = setup.grid(151).unwrap();
        let value = compute_lower_value(&setup.dynamics, &setup.payoff, &partition, &grid).unwrap();
        value.validate_box().unwrap();
        // ẋ = u − v with |u| ≤ 1, |v| ≤ ½ aiming a linear payoff: the value
        // is x + (1 − t)/2.
        let got = value.value_at(0.0, &[0.0]).unwrap();
        assert!((got - 0.5).abs() < 1e-10, "value {got}");
    }

    #[test]
    fn derived_affine_constants_are_used_when_none_are_declared() {
        let text = CUSTOM.replace(
            "[constants]\n        f_bound = 1.5\n        lip_c = 0.0",
            "",
        );
        let setup = parse_game_config(&text).unwrap();
        // The Gronwall envelope for m = 0 gives ‖f‖ = max‖u‖ + max‖v‖.
        assert_eq!(setup.dynamics.f_bound(), 1.5);
        assert_eq!(setup.dynamics.lip_c(), 0.0);
    }

    #[test]
    fn typos_are_rejected_not_ignored() {
        let err = parse_game_config(
            r#"
            [game]
            builtin = "sum"

            [grid]
            slice = 10
            "#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("slice"), "message was: {msg}");
    }

    #[test]
    fn builtin_games_reject_custom_sections() {
        let err = parse_game_config(
            r#"
            [game]
            builtin = "sum"

            [payoff]
            kind = "linear"
            coeffs = [2.0]
            offset = 0.0
            "#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("[payoff]"));
    }

    #[test]
    fn control_sections_need_exactly_one_shape() {
        let err = parse_game_config(
            &CUSTOM.replace(
                "points = [[-0.5], [0.0], [0.5]]",
                "points = [[-0.5]]\n        interval = { lo = -0.5, hi = 0.5, count = 3 }",
            ),
        )
        .unwrap_err();
        assert!(err.to_string().contains("controls.v"));
    }

    #[test]
    fn kappa_is_required_for_polynomial_payoffs() {
        let err = parse_game_config(
            &CUSTOM.replace(
                "kind = \"linear\"\n        coeffs = [1.0]\n        offset = 0.0",
                "kind = \"polynomial\"\n        coeffs = [0.0, 1.0]",
            ),
        )
        .unwrap_err();
        assert!(err.to_string().contains("payoff.kappa"));
    }

    #[test]
    fn start_state_must_sit_inside_the_box() {
        let err = parse_game_config(&CUSTOM.replace("x0 = [0.0]", "x0 = [2.0]")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("x0") && msg.contains("box"), "message: {msg}");
    }

    #[test]
    fn running_payoffs_parse_and_attach() {
        let setup = parse_game_config(&CUSTOM.replace(
            "offset = 0.0",
            "offset = 0.0\n        gamma = { kind = \"constant\", value = 0.5 }",
        ))
        .unwrap();
        assert_eq!(
            setup.payoff.gamma,
            Some(RunningPayoff::Constant { value: 0.5 })
        );
        let (reduced, happened) = setup.reduce_running_payoff().unwrap();
        assert!(happened);
        assert_eq!(reduced.dynamics.state_dim(), 2);
    }

    #[test]
    fn t0_outside_the_horizon_is_rejected() {
        let err =
            parse_game_config("[game]\nbuiltin = \"sum\"\nt0 = 1.5\n").unwrap_err();
        assert!(err.to_string().contains("t0"));
    }

    #[test]
    fn missing_files_name_the_path() {
        let err = load_game_config("/nonexistent/game.toml").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("/nonexistent/game.toml"));
    }
}
