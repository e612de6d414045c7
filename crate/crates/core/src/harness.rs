//! Randomized experiments that measure the tracking and payoff guarantees
//! against simulated play, and the report plumbing around them.
//!
//! Each experiment draws seeded trials, measures a quantity the theory
//! bounds, and records measured value, bound, slack = measured − bound, and
//! a violation flag per trial. Tolerances are split and reported
//! separately: a fixed integration allowance, a grid allowance computed
//! from κ and the node spacing, and an arithmetic floor. A report is
//! reproducible bitwise from (configuration, seed): wall-clock runtime is
//! kept out of the serialized form and trial order is fixed regardless of
//! thread count.
//!
//! Experiments that rest on local saddle points (the paired-trajectory
//! bounds and extremal play) refuse games whose sampled one-shot
//! maxmin/minmax gap exceeds [`ISAACS_TOL`]; the gap study instead reports
//! the gap and flags such games.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dynamics::{default_step, Partition, PiecewiseControl, HORIZON_END};
use crate::error::{Error, Result};
use crate::extremal::{
    aiming_constant, corollary1_bound, corollary3_bound, lemma1_bound, paired_trajectories,
    ExtremalStrategy,
};
use crate::games::GameSetup;
use crate::local_game::{isaacs_gap_report, GapReport};
use crate::math;
use crate::value_dp::{compute_lower_value, compute_upper_value};

/// Allowance for integrator truncation and rounding along a trajectory.
pub const INTEGRATION_TOL: f64 = 1e-8;

/// Floor for pure floating-point comparisons.
pub const ARITHMETIC_TOL: f64 = 1e-12;

/// Largest sampled one-shot gap a game may show before saddle-based
/// experiments refuse it.
pub const ISAACS_TOL: f64 = 1e-10;

/// Samples drawn by the saddle-point precheck.
const PRECHECK_SAMPLES: usize = 400;

/// Random piecewise-constant adversaries joined to the constant ones in
/// [`convergence_study`]. Constants plus random switching are the standard
/// falsification family; the supremum over all controls is uncomputable.
const RANDOM_ADVERSARIES: usize = 100;

/// Node spacing used by the convergence study: h = `GRID_SCALE`·√mesh keeps
/// the interpolation error an order below the √mesh payoff guarantee.
const GRID_SCALE: f64 = 0.1;

/// Memory guard: a value grid stores (slices + 1)·nodesᵈ floats; automatic
/// resolution selection never exceeds this many.
const MAX_TOTAL_NODES: usize = 50_000_000;

const MIN_AXIS_NODES: usize = 11;

/// One seeded trial: a measured quantity against its theoretical bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    /// Compact description of the trial's draw (never contains commas, so
    /// CSV rows stay single-celled).
    pub label: String,
    /// Mesh of the partition the trial played on.
    pub mesh: f64,
    pub measured: f64,
    pub bound: f64,
    /// Allowance added to the bound before the trial counts as violated.
    pub tolerance: f64,
    /// measured − bound; positive slack within tolerance still passes.
    pub slack: f64,
    pub violated: bool,
}

impl TrialRecord {
    fn new(
        index: usize,
        label: String,
        mesh: f64,
        measured: f64,
        bound: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            index,
            label,
            mesh,
            measured,
            bound,
            tolerance,
            slack: measured - bound,
            violated: !(measured <= bound + tolerance),
        }
    }
}

/// Per-mesh (or per-partition-size) aggregate: the measured value and bound
/// of the group's worst trial, by slack.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupStat {
    pub label: String,
    pub mesh: f64,
    pub worst_measured: f64,
    pub bound: f64,
    /// Resolution-dependent allowance the group's trials carried.
    pub grid_tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub trials: usize,
    pub violations: usize,
    /// max over trials of measured − bound.
    pub worst_slack: f64,
    /// Wall-clock time; excluded from serialization so reports stay
    /// byte-identical across re-runs.
    #[serde(skip)]
    pub runtime: Duration,
}

/// Outcome of one experiment: configuration snapshot, per-trial records,
/// per-group aggregates, and a summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub game: String,
    pub config: serde_json::Value,
    pub groups: Vec<GroupStat>,
    /// Fitted decay exponent p of worst_measured ≈ c·meshᵖ over groups with
    /// positive measurements (log-log least squares); `None` with fewer than
    /// two usable groups.
    pub exponent: Option<f64>,
    pub trials: Vec<TrialRecord>,
    pub summary: ExperimentSummary,
}

impl ExperimentReport {
    fn assemble(
        experiment: &str,
        game: &str,
        config: serde_json::Value,
        groups: Vec<GroupStat>,
        trials: Vec<TrialRecord>,
        started: Instant,
    ) -> Self {
        let violations = trials.iter().filter(|t| t.violated).count();
        let worst_slack = trials
            .iter()
            .map(|t| t.slack)
            .fold(f64::NEG_INFINITY, f64::max);
        let exponent = fitted_exponent(&groups);
        Self {
            experiment: experiment.into(),
            game: game.into(),
            config,
            groups,
            exponent,
            summary: ExperimentSummary {
                trials: trials.len(),
                violations,
                worst_slack,
                runtime: started.elapsed(),
            },
            trials,
        }
    }

    pub fn passed(&self) -> bool {
        self.summary.violations == 0
    }

    /// Pretty JSON with a trailing newline; keys are sorted, so equal
    /// reports serialize to equal bytes.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("serialize report: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// One CSV row per trial.
    pub fn csv(&self) -> String {
        let mut out = String::from("index,label,mesh,measured,bound,tolerance,slack,violated\n");
        for t in &self.trials {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                t.index, t.label, t.mesh, t.measured, t.bound, t.tolerance, t.slack, t.violated
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.csv())?;
        Ok(())
    }
}

/// Least-squares slope of ln(worst_measured) against ln(mesh).
pub fn fitted_exponent(groups: &[GroupStat]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = groups
        .iter()
        .filter(|g| g.mesh > 0.0 && g.worst_measured > ARITHMETIC_TOL)
        .map(|g| (g.mesh.ln(), g.worst_measured.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let var = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();
    if var <= 0.0 {
        return None;
    }
    let cov = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
    Some(cov / var)
}

fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // stream 0 stays reserved for shared draws like prechecks
    rng.set_stream(stream.wrapping_add(1));
    rng
}

fn draw_in_box<R: Rng>(rng: &mut R, b: &[[f64; 2]]) -> Vec<f64> {
    b.iter().map(|[lo, hi]| rng.gen_range(*lo..=*hi)).collect()
}

fn random_control<R: Rng>(rng: &mut R, set_len: usize, t0: f64) -> Result<PiecewiseControl> {
    let segments = rng.gen_range(1..=5);
    PiecewiseControl::random(rng, set_len, t0, HORIZON_END, segments)
}

/// Refuse games whose sampled one-shot gap exceeds [`ISAACS_TOL`]: without
/// local saddle points the step-wise cancellation behind the tracking
/// bounds is unavailable.
fn require_saddle(setup: &GameSetup, seed: u64) -> Result<GapReport> {
    let report = isaacs_gap_report(&setup.dynamics, &setup.start_box, PRECHECK_SAMPLES, seed)?;
    if report.max_gap > ISAACS_TOL {
        return Err(Error::Precondition(format!(
            "game '{}': sampled one-shot maxmin/minmax gap {:.6e} (at t = {:.4}, ξ = {:?}) \
             exceeds {ISAACS_TOL:e}; the tracking bounds need every local game to have a value",
            setup.name, report.max_gap, report.argmax_t, report.argmax_xi
        )));
    }
    Ok(report)
}

fn require_terminal_payoff(setup: &GameSetup) -> Result<()> {
    if setup.payoff.gamma.is_some() {
        return Err(Error::Config(format!(
            "game '{}' carries a running payoff; fold it into the terminal one first \
             (GameSetup::reduce_running_payoff)",
            setup.name
        )));
    }
    Ok(())
}

/// Index of the partition interval containing t (clamped at the ends).
fn interval_of(times: &[f64], t: f64) -> usize {
    let idx = times.partition_point(|&tm| tm <= t);
    idx.saturating_sub(1).min(times.len().saturating_sub(2))
}

/// Nodes per axis so the spacing lands near `target`, under the memory
/// guard. The width estimate is the start box inflated by everything
/// reachable, the same box covering grids use.
fn nodes_for_spacing(setup: &GameSetup, target: f64, slices: usize) -> usize {
    let d = setup.dynamics.state_dim();
    let horizon = HORIZON_END - setup.t0;
    let widest = setup
        .start_box
        .iter()
        .map(|[lo, hi]| hi - lo)
        .fold(0.0, f64::max)
        + 2.0 * setup.dynamics.f_bound() * horizon;
    let wanted = ((widest / target).ceil() as usize + 1).max(MIN_AXIS_NODES);
    let budget = (MAX_TOTAL_NODES / (slices + 1)).max(1);
    let cap = (budget as f64).powf(1.0 / d as f64).floor() as usize;
    wanted.min(cap.max(MIN_AXIS_NODES))
}

/// All constant u-controls plus `extra` seeded random piecewise ones.
fn adversary_family(
    setup: &GameSetup,
    t0: f64,
    extra: usize,
    seed: u64,
    salt: u64,
) -> Result<Vec<(String, PiecewiseControl)>> {
    let len = setup.dynamics.u_set().len();
    let mut family = Vec::with_capacity(len + extra);
    for i in 0..len {
        family.push((
            format!("u=const[{i}]"),
            PiecewiseControl::constant(i, t0, HORIZON_END)?,
        ));
    }
    for j in 0..extra {
        let mut rng = trial_rng(seed, salt.wrapping_mul(1_000_003).wrapping_add(j as u64));
        family.push((format!("u=rand[{j}]"), random_control(&mut rng, len, t0)?));
    }
    Ok(family)
}

/// Worst trial of a slice of records, by slack.
fn worst_of(records: &[TrialRecord]) -> &TrialRecord {
    records
        .iter()
        .reduce(|a, b| if b.slack > a.slack { b } else { a })
        .expect("groups are never empty")
}

/// Appends monotone-trend rows: sorted by mesh descending, each group's
/// worst measurement must not exceed the previous (coarser) one beyond
/// `tolerance` plus both grid allowances.
fn push_trend_rows(trials: &mut Vec<TrialRecord>, groups: &[GroupStat], tolerance: f64) {
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by(|&i, &j| groups[j].mesh.total_cmp(&groups[i].mesh));
    for pair in order.windows(2) {
        let (coarse, fine) = (&groups[pair[0]], &groups[pair[1]]);
        let tol = tolerance + coarse.grid_tolerance + fine.grid_tolerance;
        trials.push(TrialRecord::new(
            trials.len(),
            format!("trend {} -> {}", coarse.label, fine.label),
            fine.mesh,
            fine.worst_measured,
            coarse.worst_measured,
            tol,
        ));
    }
}

fn tolerance_json(grid: &str) -> serde_json::Value {
    json!({
        "integration": INTEGRATION_TOL,
        "arithmetic": ARITHMETIC_TOL,
        "grid": grid,
    })
}

/// Paired trajectories under saddle actions: on every sampled time of every
/// trial, the squared separation must obey the one-interval tracking bound
/// anchored at the interval start. One record per trial — its worst sample.
pub fn verify_lemma1(setup: &GameSetup, trials: usize, seed: u64) -> Result<ExperimentReport> {
    let started = Instant::now();
    if trials == 0 {
        return Err(Error::Argument("need at least one trial".into()));
    }
    require_saddle(setup, seed)?;
    let consts = setup.dynamics.derived_constants();
    let records: Vec<TrialRecord> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<TrialRecord> {
            let mut rng = trial_rng(seed, i as u64);
            let t0 = rng.gen_range(0.0..0.9);
            let intervals = rng.gen_range(1..=32);
            let partition = Partition::game(t0, intervals)?;
            let x0 = draw_in_box(&mut rng, &setup.start_box);
            let w0 = draw_in_box(&mut rng, &setup.start_box);
            let u = random_control(&mut rng, setup.dynamics.u_set().len(), t0)?;
            let v = random_control(&mut rng, setup.dynamics.v_set().len(), t0)?;
            let run = paired_trajectories(
                &setup.dynamics,
                &partition,
                &x0,
                &w0,
                &u,
                &v,
                default_step(partition.mesh()),
            )?;
            let times = partition.times();
            let mut worst: Option<(f64, f64)> = None;
            for s in &run.samples {
                let m = interval_of(times, s.t);
                let bound =
                    lemma1_bound(run.node_dist_sq[m].sqrt(), s.t - times[m], consts.a, consts.b)?;
                if worst.is_none_or(|(wm, wb)| s.dist_sq - bound > wm - wb) {
                    worst = Some((s.dist_sq, bound));
                }
            }
            let (measured, bound) = worst.expect("paired runs always carry samples");
            let d0 = math::dist(&x0, &w0);
            Ok(TrialRecord::new(
                i,
                format!("t0={t0:.4} N={intervals} d0={d0:.4}"),
                partition.mesh(),
                measured,
                bound,
                INTEGRATION_TOL,
            ))
        })
        .collect::<Result<_>>()?;
    let config = json!({
        "trials": trials,
        "seed": seed,
        "t0-range": [0.0, 0.9],
        "intervals-range": [1, 32],
        "tolerance": tolerance_json("none"),
    });
    Ok(ExperimentReport::assemble(
        "lemma1",
        &setup.name,
        config,
        Vec::new(),
        records,
        started,
    ))
}

/// Paired trajectories chained over whole partitions: the squared
/// separation at the final time must obey the chained bound e^A(d₀² + B·mesh)
/// for every listed partition size.
pub fn verify_corollary1(
    setup: &GameSetup,
    partition_sizes: &[usize],
    trials_per_size: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    let started = Instant::now();
    if partition_sizes.is_empty() || trials_per_size == 0 {
        return Err(Error::Argument(
            "need at least one partition size and one trial per size".into(),
        ));
    }
    if let Some(&n) = partition_sizes.iter().find(|&&n| n == 0) {
        return Err(Error::Argument(format!("partition size {n} is invalid")));
    }
    require_saddle(setup, seed)?;
    let consts = setup.dynamics.derived_constants();
    let jobs: Vec<usize> = partition_sizes
        .iter()
        .flat_map(|&n| std::iter::repeat(n).take(trials_per_size))
        .collect();
    let records: Vec<TrialRecord> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &n)| -> Result<TrialRecord> {
            let mut rng = trial_rng(seed, i as u64);
            let t0 = rng.gen_range(0.0..0.5);
            let partition = Partition::game(t0, n)?;
            let x0 = draw_in_box(&mut rng, &setup.start_box);
            let w0 = draw_in_box(&mut rng, &setup.start_box);
            let u = random_control(&mut rng, setup.dynamics.u_set().len(), t0)?;
            let v = random_control(&mut rng, setup.dynamics.v_set().len(), t0)?;
            let run = paired_trajectories(
                &setup.dynamics,
                &partition,
                &x0,
                &w0,
                &u,
                &v,
                default_step(partition.mesh()),
            )?;
            let measured = *run.node_dist_sq.last().expect("partitions have nodes");
            let d0 = math::dist(&x0, &w0);
            let bound = corollary1_bound(d0, partition.mesh(), consts.a, consts.b)?;
            Ok(TrialRecord::new(
                i,
                format!("N={n} t0={t0:.4} d0={d0:.4}"),
                partition.mesh(),
                measured,
                bound,
                INTEGRATION_TOL,
            ))
        })
        .collect::<Result<_>>()?;
    let groups = records
        .chunks(trials_per_size)
        .zip(partition_sizes)
        .map(|(chunk, &n)| {
            let worst = worst_of(chunk);
            GroupStat {
                label: format!("N={n}"),
                mesh: chunk.iter().map(|r| r.mesh).fold(0.0, f64::max),
                worst_measured: worst.measured,
                bound: worst.bound,
                grid_tolerance: 0.0,
            }
        })
        .collect();
    let config = json!({
        "partition-sizes": partition_sizes,
        "trials-per-size": trials_per_size,
        "seed": seed,
        "t0-range": [0.0, 0.5],
        "tolerance": tolerance_json("none"),
    });
    Ok(ExperimentReport::assemble(
        "corollary1",
        &setup.name,
        config,
        groups,
        records,
        started,
    ))
}

fn validated_meshes(setup: &GameSetup, meshes: &[f64]) -> Result<()> {
    let horizon = HORIZON_END - setup.t0;
    if meshes.is_empty() {
        return Err(Error::Argument("need at least one mesh".into()));
    }
    for &mesh in meshes {
        if !mesh.is_finite() || mesh <= 0.0 || mesh > horizon {
            return Err(Error::Argument(format!(
                "mesh {mesh} is outside (0, {horizon}]"
            )));
        }
    }
    Ok(())
}

/// Starting on the level set of φ = V⁻, the extremal strategy keeps the
/// final state within √(e^A·B·mesh) of the terminal set, up to node
/// quantization: for every listed mesh, every adversary's final squared
/// distance must obey the bound, and the worst distance must not grow as
/// the mesh shrinks.
pub fn verify_corollary3(
    setup: &GameSetup,
    meshes: &[f64],
    random_adversaries: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    let started = Instant::now();
    validated_meshes(setup, meshes)?;
    require_terminal_payoff(setup)?;
    require_saddle(setup, seed)?;
    let consts = setup.dynamics.derived_constants();
    let horizon = HORIZON_END - setup.t0;
    let mut records = Vec::new();
    let mut groups = Vec::new();
    for (gi, &mesh) in meshes.iter().enumerate() {
        let intervals = ((horizon / mesh).round() as usize).max(1);
        let partition = setup.partition(intervals)?;
        let actual = partition.mesh();
        let grid = setup.grid(nodes_for_spacing(setup, actual, intervals))?;
        let phi = compute_lower_value(&setup.dynamics, &setup.payoff, &partition, &grid)?;
        phi.validate_box()?;
        let strategy = ExtremalStrategy::new(
            &setup.dynamics,
            &setup.payoff,
            &phi,
            &setup.x0,
            default_step(actual),
        )?;
        let bound = corollary3_bound(actual, consts.a, consts.b)?;
        // Node quantization can move the projection target by at most one
        // cell diagonal, inflating the measured distance additively:
        // (√bound + diag)² = bound + 2·diag·√bound + diag².
        let diag = grid.max_spacing() * (grid.dim() as f64).sqrt();
        let grid_tol = 2.0 * diag * bound.sqrt() + diag * diag;
        let family = adversary_family(setup, setup.t0, random_adversaries, seed, gi as u64)?;
        let outcomes: Vec<(String, f64)> = family
            .par_iter()
            .map(|(label, u)| Ok((label.clone(), strategy.play(u)?.final_dist_sq)))
            .collect::<Result<_>>()?;
        for (label, dist_sq) in outcomes {
            records.push(TrialRecord::new(
                records.len(),
                format!("mesh={actual:.6} {label}"),
                actual,
                dist_sq,
                bound,
                grid_tol + INTEGRATION_TOL,
            ));
        }
        let base = records.len() - family.len();
        let worst = worst_of(&records[base..]);
        groups.push(GroupStat {
            label: format!("mesh={actual:.6}"),
            mesh: actual,
            worst_measured: worst.measured,
            bound: worst.bound,
            grid_tolerance: grid_tol,
        });
    }
    push_trend_rows(&mut records, &groups, INTEGRATION_TOL);
    let config = json!({
        "meshes": meshes,
        "random-adversaries": random_adversaries,
        "seed": seed,
        "tolerance": tolerance_json("2·diag·√bound + diag²"),
    });
    Ok(ExperimentReport::assemble(
        "corollary3",
        &setup.name,
        config,
        groups,
        records,
        started,
    ))
}

/// For each mesh, the worst payoff over the adversary family against the
/// extremal strategy must exceed φ(t₀, x₀) by at most κ·e^{A/2}·√B·√mesh
/// plus a grid allowance; the report also fits the decay exponent of this
/// excess (p ≥ ½ expected).
pub fn convergence_study(setup: &GameSetup, meshes: &[f64], seed: u64) -> Result<ExperimentReport> {
    let started = Instant::now();
    validated_meshes(setup, meshes)?;
    require_terminal_payoff(setup)?;
    require_saddle(setup, seed)?;
    let consts = setup.dynamics.derived_constants();
    let kappa = setup.payoff.kappa;
    let c_aim = aiming_constant(kappa, consts.a, consts.b)?;
    let horizon = HORIZON_END - setup.t0;
    let mut records = Vec::new();
    let mut groups = Vec::new();
    for (gi, &mesh) in meshes.iter().enumerate() {
        let intervals = ((horizon / mesh).round() as usize).max(1);
        let partition = setup.partition(intervals)?;
        let actual = partition.mesh();
        let target_spacing = GRID_SCALE * actual.sqrt();
        let grid = setup.grid(nodes_for_spacing(setup, target_spacing, intervals))?;
        let phi = compute_lower_value(&setup.dynamics, &setup.payoff, &partition, &grid)?;
        phi.validate_box()?;
        let strategy = ExtremalStrategy::new(
            &setup.dynamics,
            &setup.payoff,
            &phi,
            &setup.x0,
            default_step(actual),
        )?;
        let level = strategy.level();
        let bound = c_aim * actual.sqrt();
        // One projection-cell slip per re-aim, amplified at most by the
        // Gronwall growth factor over the remaining horizon.
        let diag = grid.max_spacing() * (grid.dim() as f64).sqrt();
        let grid_tol = kappa * diag * (1.0 + consts.a.exp());
        let family = adversary_family(setup, setup.t0, RANDOM_ADVERSARIES, seed, gi as u64)?;
        let outcomes: Vec<(String, f64)> = family
            .par_iter()
            .map(|(label, u)| Ok((label.clone(), strategy.play(u)?.payoff - level)))
            .collect::<Result<_>>()?;
        for (label, excess) in outcomes {
            records.push(TrialRecord::new(
                records.len(),
                format!("mesh={actual:.6} {label}"),
                actual,
                excess,
                bound,
                grid_tol + INTEGRATION_TOL,
            ));
        }
        let base = records.len() - family.len();
        let worst = worst_of(&records[base..]);
        groups.push(GroupStat {
            label: format!("mesh={actual:.6}"),
            mesh: actual,
            worst_measured: worst.measured,
            bound: worst.bound,
            grid_tolerance: grid_tol,
        });
    }
    let config = json!({
        "meshes": meshes,
        "seed": seed,
        "adversaries": {
            "constant": setup.dynamics.u_set().len(),
            "random": RANDOM_ADVERSARIES,
        },
        "grid-scale": GRID_SCALE,
        "aiming-constant": c_aim,
        "tolerance": tolerance_json("κ·diag·(1 + e^A)"),
    });
    Ok(ExperimentReport::assemble(
        "convergence",
        &setup.name,
        config,
        groups,
        records,
        started,
    ))
}

/// Computes V⁺ − V⁻ at (t₀, x₀) across joint partition/grid refinements.
/// The order V⁻ ≤ V⁺ is asserted always; games whose sampled one-shot gap
/// exceeds [`ISAACS_TOL`] are flagged in the report and carry a gap ceiling
/// instead of a convergence claim, with no trend assertion. List
/// resolutions coarse to fine. Deterministic: the gap probe uses the
/// documented default seed.
pub fn value_gap_study(
    setup: &GameSetup,
    resolutions: &[(usize, usize)],
) -> Result<ExperimentReport> {
    let started = Instant::now();
    if resolutions.is_empty() {
        return Err(Error::Argument("need at least one resolution".into()));
    }
    require_terminal_payoff(setup)?;
    let probe = isaacs_gap_report(
        &setup.dynamics,
        &setup.start_box,
        PRECHECK_SAMPLES,
        crate::DEFAULT_SEED,
    )?;
    let flagged = probe.max_gap > ISAACS_TOL;
    let horizon = HORIZON_END - setup.t0;
    // Lipschitz ceiling of the value in x, κ·e^{c·horizon}: converts local
    // gaps and node spacings into value differences.
    let kappa_v = setup.payoff.kappa * (setup.dynamics.lip_c() * horizon).exp();
    let mut records = Vec::new();
    let mut groups = Vec::new();
    for &(slices, nodes) in resolutions {
        let partition = setup.partition(slices)?;
        let grid = setup.grid(nodes)?;
        let lower = compute_lower_value(&setup.dynamics, &setup.payoff, &partition, &grid)?;
        let upper = compute_upper_value(&setup.dynamics, &setup.payoff, &partition, &grid)?;
        lower.validate_box()?;
        upper.validate_box()?;
        let vl = lower.value_at(setup.t0, &setup.x0)?;
        let vu = upper.value_at(setup.t0, &setup.x0)?;
        let gap = vu - vl;
        let diag = grid.max_spacing() * (grid.dim() as f64).sqrt();
        let disc_tol = kappa_v * (diag + partition.mesh() * setup.dynamics.f_bound());
        let ceiling = if flagged {
            // Local gaps accumulate at most linearly over the horizon.
            horizon * kappa_v * probe.max_gap + disc_tol
        } else {
            disc_tol
        };
        let tag = if flagged { " no-saddle" } else { "" };
        records.push(TrialRecord::new(
            records.len(),
            format!("gap slices={slices} nodes={nodes}{tag}"),
            partition.mesh(),
            gap,
            ceiling,
            INTEGRATION_TOL,
        ));
        records.push(TrialRecord::new(
            records.len(),
            format!("order slices={slices} nodes={nodes}"),
            partition.mesh(),
            vl - vu,
            0.0,
            ISAACS_TOL,
        ));
        groups.push(GroupStat {
            label: format!("{slices}x{nodes}"),
            mesh: partition.mesh(),
            worst_measured: gap,
            bound: ceiling,
            grid_tolerance: disc_tol,
        });
    }
    if !flagged {
        push_trend_rows(&mut records, &groups, ISAACS_TOL);
    }
    let config = json!({
        "resolutions": resolutions,
        "seed": crate::DEFAULT_SEED,
        "isaacs-gap": probe.max_gap,
        "flagged": flagged,
        "tolerance": tolerance_json("κ·e^{c·H}·(diag + mesh·‖f‖)"),
    });
    Ok(ExperimentReport::assemble(
        "value-gap",
        &setup.name,
        config,
        groups,
        records,
        started,
    ))
}
