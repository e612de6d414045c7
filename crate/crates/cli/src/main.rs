//! `diffgame` — solve, simulate, and verify two-player zero-sum differential
//! games from the command line.
//!
//! The subcommands mirror the library pipeline: `solve` computes the lower
//! and upper game values V⁻/V⁺ on a time × space grid and can cache the
//! lower grid, `simulate` plays a chosen u-control against the extremal
//! aiming strategy built from that grid, `verify` runs the randomized bound
//! experiments and writes machine-readable reports, and `gap` samples the
//! local-game maxmin/minmax gap that separates the two value functions.
//!
//! Exit codes are a stable contract:
//!
//! * 0 — success (for `verify`: the report contains zero violations),
//! * 1 — at least one bound violation in a verification report,
//! * 2 — configuration error (bad flags, files, grids, dimensions),
//! * 3 — precondition refused: the experiment's standing assumption fails,
//!   e.g. the sampled maxmin/minmax gap of the game is too large for the
//!   comparison theorems to apply.
//!
//! Every randomized command takes `--seed` and defaults to seed 42; the same
//! configuration and seed produce byte-identical report files. `--threads N`
//! (or the `DIFFGAME_THREADS` environment variable) caps the worker pool.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use diffgame::config::load_game_config;
use diffgame::dynamics::{default_step, PiecewiseControl, HORIZON_END};
use diffgame::extremal::ExtremalStrategy;
use diffgame::games::{GameSetup, BUILTIN_GAMES};
use diffgame::harness::{
    convergence_study, value_gap_study, verify_corollary1, verify_corollary3, verify_lemma1,
    ExperimentReport,
};
use diffgame::local_game::isaacs_gap_report;
use diffgame::value_dp::{
    compute_lower_value, compute_upper_value, load_value_grid, save_value_grid, ValueGrid,
};
use diffgame::{Error, Result, DEFAULT_SEED};

#[derive(Parser)]
#[command(
    name = "diffgame",
    version,
    about = "Zero-sum differential games: grid values, extremal strategies, verified bounds",
    after_help = "Exit codes: 0 success, 1 bound violation, 2 configuration error, \
                  3 precondition refused."
)]
struct Cli {
    /// Cap the worker-thread count (overrides DIFFGAME_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the lower and upper values on a grid; optionally cache V⁻.
    Solve(SolveArgs),
    /// Play a u-control against the extremal strategy; write the trajectory.
    Simulate(SimulateArgs),
    /// Run a verification experiment and write its report.
    Verify {
        #[command(subcommand)]
        experiment: Experiment,
    },
    /// Sample the local-game maxmin/minmax gap over the start box.
    Gap(GapArgs),
}

/// How the game is selected: a named builtin or a TOML description.
#[derive(Args)]
struct GameArgs {
    /// Builtin game: sum, pursuit-line, rot2d, coupled-uv, still.
    #[arg(long, conflicts_with = "config", value_name = "NAME")]
    game: Option<String>,

    /// TOML game description (see the config module for the schema).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

impl GameArgs {
    fn load(&self) -> Result<GameSetup> {
        match (&self.game, &self.config) {
            (Some(name), None) => GameSetup::builtin(name),
            (None, Some(path)) => load_game_config(path),
            _ => Err(Error::Config(format!(
                "select a game with --game <{}> or --config <file.toml>",
                BUILTIN_GAMES.join("|")
            ))),
        }
    }
}

/// Where to persist a verification report.
#[derive(Args)]
struct ReportArgs {
    /// Write the full report as JSON.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,

    /// Write the per-trial records as CSV.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    game: GameArgs,

    /// Partition intervals on [t₀, 1] (default: per-game).
    #[arg(long)]
    slices: Option<usize>,

    /// Grid nodes per state axis (default: per-game).
    #[arg(long)]
    nodes: Option<usize>,

    /// Cache the lower value grid (the one extremal play tracks) here.
    #[arg(long, value_name = "FILE")]
    cache: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    game: GameArgs,

    /// Partition intervals when solving on the fly (default: per-game).
    #[arg(long)]
    slices: Option<usize>,

    /// Grid nodes per axis when solving on the fly (default: per-game).
    #[arg(long)]
    nodes: Option<usize>,

    /// Load the tracked value grid from a `solve --cache` file instead of
    /// solving. The cache must match the game and start time.
    #[arg(long, value_name = "FILE")]
    cache: Option<PathBuf>,

    /// Hold this u-action index on the whole horizon.
    #[arg(long, conflicts_with = "u_file", value_name = "INDEX")]
    u_index: Option<usize>,

    /// JSON piecewise control, e.g. {"times":[0.0,0.4,1.0],"indices":[2,0]}.
    #[arg(long, value_name = "FILE")]
    u_file: Option<PathBuf>,

    /// Write the trajectory as CSV here.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Experiment {
    /// One-interval tracking inequality d(t)² ≤ (1+(t−t₀)A)d₀² + B(t−t₀)².
    Lemma1 {
        #[command(flatten)]
        game: GameArgs,

        /// Number of random paired-trajectory trials.
        #[arg(long, default_value_t = 1000)]
        trials: usize,

        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,

        #[command(flatten)]
        out: ReportArgs,
    },
    /// Inductive multi-interval bound d_N² ≤ e^A (d₀² + B‖Π‖).
    Corollary1 {
        #[command(flatten)]
        game: GameArgs,

        /// Uniform partition sizes to test.
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
        sizes: Vec<usize>,

        /// Trials per partition size.
        #[arg(long, default_value_t = 100)]
        trials: usize,

        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,

        #[command(flatten)]
        out: ReportArgs,
    },
    /// Level-set tracking with φ = V⁻: D²(x(1), W(1)) ≤ e^A B ‖Π‖.
    Corollary3 {
        #[command(flatten)]
        game: GameArgs,

        /// Partition meshes to test, coarse to fine.
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.01")]
        meshes: Vec<f64>,

        /// Random adversary controls added to the constant ones.
        #[arg(long, default_value_t = 100)]
        adversaries: usize,

        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,

        #[command(flatten)]
        out: ReportArgs,
    },
    /// Guarantee convergence: worst payoff − V⁻(t₀,x₀) ≤ κe^{A/2}√B · √‖Π‖.
    Convergence {
        #[command(flatten)]
        game: GameArgs,

        /// Partition meshes to test, coarse to fine.
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.01")]
        meshes: Vec<f64>,

        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,

        #[command(flatten)]
        out: ReportArgs,
    },
    /// Lower-vs-upper value gap across grid resolutions.
    ValueGap {
        #[command(flatten)]
        game: GameArgs,

        /// Resolutions as SLICESxNODES pairs, e.g. 50x101,100x201
        /// (default: half the game's resolution, then the full one).
        #[arg(long, value_delimiter = ',', value_name = "SxN")]
        resolutions: Option<Vec<String>>,

        #[command(flatten)]
        out: ReportArgs,
    },
}

#[derive(Args)]
struct GapArgs {
    #[command(flatten)]
    game: GameArgs,

    /// Number of (t, x, ξ) samples.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,

    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(err) = configure_threads(cli.threads) {
        eprintln!("error: {err}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(match err {
                Error::Precondition(_) => 3,
                _ => 2,
            })
        }
    }
}

fn configure_threads(flag: Option<usize>) -> Result<()> {
    let requested = match flag {
        Some(n) => Some(n),
        None => match std::env::var("DIFFGAME_THREADS") {
            Ok(text) => Some(text.parse().map_err(|_| {
                Error::Config(format!(
                    "DIFFGAME_THREADS must be a positive integer, got `{text}`"
                ))
            })?),
            Err(_) => None,
        },
    };
    let Some(n) = requested else { return Ok(()) };
    if n == 0 {
        return Err(Error::Config("thread count must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("could not size the thread pool: {e}")))
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Solve(args) => cmd_solve(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Verify { experiment } => cmd_verify(experiment),
        Command::Gap(args) => cmd_gap(args),
    }
}

/// Load the game and fold any running payoff into an extra state coordinate.
fn load_ready(game: &GameArgs) -> Result<GameSetup> {
    let (setup, reduced) = game.load()?.reduce_running_payoff()?;
    if reduced {
        println!(
            "note        running payoff folded into state coordinate {}",
            setup.dynamics.state_dim()
        );
    }
    Ok(setup)
}

fn cmd_solve(args: SolveArgs) -> Result<u8> {
    let setup = load_ready(&args.game)?;
    let slices = args.slices.unwrap_or(setup.default_slices);
    let nodes = args.nodes.unwrap_or(setup.default_nodes);
    let partition = setup.partition(slices)?;
    let grid = setup.grid(nodes)?;

    let lower = compute_lower_value(&setup.dynamics, &setup.payoff, &partition, &grid)?;
    lower.validate_box()?;
    let upper = compute_upper_value(&setup.dynamics, &setup.payoff, &partition, &grid)?;
    upper.validate_box()?;

    let vl = lower.value_at(setup.t0, &setup.x0)?;
    let vu = upper.value_at(setup.t0, &setup.x0)?;
    println!("game        {}", setup.name);
    println!(
        "partition   {} intervals on [{}, {HORIZON_END}], mesh {:.6e}",
        partition.intervals(),
        setup.t0,
        partition.mesh()
    );
    println!(
        "grid        {} nodes across {} axes, max spacing {:.6e}",
        grid.node_count(),
        grid.dim(),
        grid.max_spacing()
    );
    println!("lower       V-(t0, x0) = {vl:.12}");
    println!("upper       V+(t0, x0) = {vu:.12}");
    println!("gap         {:.6e}", vu - vl);
    if let Some(path) = &args.cache {
        save_value_grid(&lower, path)?;
        println!("cache       wrote {}", path.display());
    }
    Ok(0)
}

fn cmd_simulate(args: SimulateArgs) -> Result<u8> {
    let setup = load_ready(&args.game)?;

    let phi: ValueGrid = match &args.cache {
        Some(path) => {
            let grid = load_value_grid(path)?;
            check_cache(&setup, &grid, path)?;
            println!("cache       loaded {}", path.display());
            grid
        }
        None => {
            let slices = args.slices.unwrap_or(setup.default_slices);
            let nodes = args.nodes.unwrap_or(setup.default_nodes);
            let grid = compute_lower_value(
                &setup.dynamics,
                &setup.payoff,
                &setup.partition(slices)?,
                &setup.grid(nodes)?,
            )?;
            grid.validate_box()?;
            grid
        }
    };

    let u = load_u_control(&args, &setup)?;
    let strategy = ExtremalStrategy::new(
        &setup.dynamics,
        &setup.payoff,
        &phi,
        &setup.x0,
        default_step(phi.partition().mesh()),
    )?;
    let play = strategy.play(&u)?;

    println!("game        {}", setup.name);
    println!("level       V-(t0, x0) = {:.12}", play.level);
    println!("payoff      g(x(1))    = {:.12}", play.payoff);
    println!("excess      payoff - level = {:.6e}", play.payoff - play.level);
    println!("final dist  D(x(1), W(1)) = {:.6e}", play.final_dist_sq.sqrt());
    if let Some(path) = &args.out {
        write_trajectory_csv(&play.trajectory, path)?;
        println!(
            "trajectory  wrote {} ({} samples)",
            path.display(),
            play.trajectory.times().len()
        );
    }
    Ok(0)
}

/// A cached grid must fit the game it is replayed against: same state
/// dimension, same start time, and it must reach the horizon end.
fn check_cache(setup: &GameSetup, grid: &ValueGrid, path: &Path) -> Result<()> {
    if grid.grid().dim() != setup.dynamics.state_dim() {
        return Err(Error::Config(format!(
            "cache {} has {} state axes, the game has {}",
            path.display(),
            grid.grid().dim(),
            setup.dynamics.state_dim()
        )));
    }
    if (grid.partition().start() - setup.t0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "cache {} starts at t = {}, the game starts at t = {}",
            path.display(),
            grid.partition().start(),
            setup.t0
        )));
    }
    Ok(())
}

fn load_u_control(args: &SimulateArgs, setup: &GameSetup) -> Result<PiecewiseControl> {
    let u = match (&args.u_index, &args.u_file) {
        (Some(index), None) => PiecewiseControl::constant(*index, setup.t0, HORIZON_END)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("could not read {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text).map_err(|e| {
                Error::Config(format!("could not parse {}: {e}", path.display()))
            })?
        }
        _ => {
            return Err(Error::Config(
                "select the maximizer's control with --u-index <i> or --u-file <json>".into(),
            ))
        }
    };
    u.validate_for(setup.dynamics.u_set())?;
    if !u.covers(setup.t0, HORIZON_END) {
        let (lo, hi) = u.span();
        return Err(Error::Config(format!(
            "u-control spans [{lo}, {hi}] but the game runs on [{}, {HORIZON_END}]",
            setup.t0
        )));
    }
    Ok(u)
}

fn write_trajectory_csv(
    trajectory: &diffgame::dynamics::Trajectory,
    path: &Path,
) -> Result<()> {
    let dim = trajectory.state(0).len();
    let mut text = String::from("t");
    for i in 0..dim {
        text.push_str(&format!(",x{i}"));
    }
    text.push_str(",u_index,v_index\n");
    let times = trajectory.times();
    for (i, t) in times.iter().enumerate() {
        text.push_str(&format!("{t}"));
        for coord in trajectory.state(i) {
            text.push_str(&format!(",{coord}"));
        }
        // Action columns hold the indices applied on [tᵢ, tᵢ₊₁); the final
        // sample has no outgoing interval and leaves them empty.
        if i + 1 < times.len() {
            text.push_str(&format!(
                ",{},{}\n",
                trajectory.u_indices()[i],
                trajectory.v_indices()[i]
            ));
        } else {
            text.push_str(",,\n");
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn cmd_verify(experiment: Experiment) -> Result<u8> {
    let (report, out) = match experiment {
        Experiment::Lemma1 {
            game,
            trials,
            seed,
            out,
        } => (verify_lemma1(&load_ready(&game)?, trials, seed)?, out),
        Experiment::Corollary1 {
            game,
            sizes,
            trials,
            seed,
            out,
        } => (
            verify_corollary1(&load_ready(&game)?, &sizes, trials, seed)?,
            out,
        ),
        Experiment::Corollary3 {
            game,
            meshes,
            adversaries,
            seed,
            out,
        } => (
            verify_corollary3(&load_ready(&game)?, &meshes, adversaries, seed)?,
            out,
        ),
        Experiment::Convergence {
            game,
            meshes,
            seed,
            out,
        } => (convergence_study(&load_ready(&game)?, &meshes, seed)?, out),
        Experiment::ValueGap {
            game,
            resolutions,
            out,
        } => {
            let setup = load_ready(&game)?;
            let pairs = match resolutions {
                Some(items) => items
                    .iter()
                    .map(|s| parse_resolution(s))
                    .collect::<Result<Vec<_>>>()?,
                None => default_resolutions(&setup),
            };
            (value_gap_study(&setup, &pairs)?, out)
        }
    };
    print_report(&report);
    if let Some(path) = &out.report {
        report.write_json(path)?;
        println!("report      wrote {}", path.display());
    }
    if let Some(path) = &out.csv {
        report.write_csv(path)?;
        println!("csv         wrote {}", path.display());
    }
    Ok(if report.passed() { 0 } else { 1 })
}

/// Parse a `SLICESxNODES` resolution such as `100x201`.
fn parse_resolution(text: &str) -> Result<(usize, usize)> {
    let bad = || {
        Error::Config(format!(
            "resolution `{text}` must look like SLICESxNODES, e.g. 100x201"
        ))
    };
    let (s, n) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((
        s.trim().parse().map_err(|_| bad())?,
        n.trim().parse().map_err(|_| bad())?,
    ))
}

/// Half the game's default resolution, then the full one.
fn default_resolutions(setup: &GameSetup) -> Vec<(usize, usize)> {
    let coarse_slices = (setup.default_slices / 2).max(1);
    let coarse_nodes = (setup.default_nodes / 2).max(3) | 1;
    vec![
        (coarse_slices, coarse_nodes),
        (setup.default_slices, setup.default_nodes),
    ]
}

fn print_report(report: &ExperimentReport) {
    println!("experiment  {}", report.experiment);
    println!("game        {}", report.game);
    for group in &report.groups {
        println!(
            "group       {:<24} mesh {:.3e}  worst {:.6e}  bound {:.6e}",
            group.label, group.mesh, group.worst_measured, group.bound
        );
    }
    if let Some(exponent) = report.exponent {
        println!("exponent    {exponent:.4}");
    }
    println!("trials      {}", report.trials.len());
    println!("violations  {}", report.summary.violations);
    println!("worst slack {:.6e}", report.summary.worst_slack);
    println!(
        "runtime     {:.3} s",
        report.summary.runtime.as_secs_f64()
    );
}

fn cmd_gap(args: GapArgs) -> Result<u8> {
    let setup = load_ready(&args.game)?;
    let report = isaacs_gap_report(
        &setup.dynamics,
        &setup.start_box,
        args.samples,
        args.seed,
    )?;
    println!("game        {}", setup.name);
    println!("samples     {}", report.samples);
    println!("max gap     {:.6e}", report.max_gap);
    println!(
        "argmax      t = {:.6}, x = {:?}, xi = {:?}",
        report.argmax_t, report.argmax_x, report.argmax_xi
    );
    println!("H- there    {:.12}", report.h_minus_at_argmax);
    println!("H+ there    {:.12}", report.h_plus_at_argmax);
    Ok(0)
}
