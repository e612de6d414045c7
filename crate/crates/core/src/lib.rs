//! Two-player zero-sum differential games on a fixed horizon.
//!
//! The library covers the pipeline from game description to verified
//! guarantees:
//!
//! * [`dynamics`] — control sets, game dynamics ẋ = f(t, x, u, v) with
//!   certified speed and Lipschitz constants, terminal payoffs, time
//!   partitions, and a Runge–Kutta integrator for piecewise-constant
//!   controls. The maximizer picks u, the minimizer picks v, play runs on
//!   [t₀, 1], and the score is g(x(1)).
//! * [`local_game`] — the frozen-coefficient game over ⟨ξ, f(t, x, u, v)⟩
//!   whose maxmin/minmax values and saddle actions drive everything else.
//! * [`value_dp`] — lower/upper game values on time × space grids by
//!   backward recursion, sub-level sets with projections, candidate-value
//!   checks, and a plain-text cache format.
//! * [`extremal`] — the aiming strategy for the minimizer: project onto a
//!   value sub-level set, aim along ξ = x − w, and hold the local saddle
//!   action; plus the distance bounds the guarantees rest on.
//! * [`games`] — built-in benchmark games, and [`config`] — TOML game
//!   descriptions for everything else.
//! * [`harness`] — randomized experiments that measure the bounds against
//!   simulated play and write machine-readable reports.
//!
//! All randomized procedures take explicit seeds and produce identical
//! results for identical inputs, independent of thread count.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod extremal;
pub mod games;
pub mod harness;
pub mod local_game;
mod math;
pub mod value_dp;

pub use error::{Error, Result};

/// Seed used by operations when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 42;
