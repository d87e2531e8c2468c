//! `noisy-duel`: solve the gunner-vs-sniper duel, evaluate values and
//! plays, and verify tables.
//!
//! Exit codes: 0 ok, 2 bad input, 3 solver failure, 4 verification failure.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod manifest;
mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use noisy_duel::oracle::{convergence_csv, convergence_sweep, DiscreteGameSpec};
use noisy_duel::payoff::{ConsumptionPath, SniperSchedule};
use noisy_duel::solver::{fmt_sig12, solve_game, SolverConfig, TTable};
use noisy_duel::strategy::{simulate, GunnerStrategy, SimOptions, SniperStrategy, TieBreak};
use noisy_duel::{AccuracyFunction, DuelParameters};

use manifest::RunManifest;

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn bad_input(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: error.into() }
}

fn solver_failure(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 3, error: error.into() }
}

type CmdResult = Result<(), Failure>;

#[derive(Parser)]
#[command(name = "noisy-duel", version, about = "Noisy duel of a continuous-resource gunner against a sniper")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the equilibrium curves; writes a CSV and its JSON sidecar.
    Solve {
        #[command(flatten)]
        game: GameArgs,
        /// Output CSV; the sidecar goes next to it with a .json extension.
        #[arg(long, default_value = "table.csv")]
        out: PathBuf,
    },
    /// Print the value v_k(x) of a solved table in both forms.
    Value {
        #[arg(long)]
        table: PathBuf,
        /// Shots left (defaults to m).
        #[arg(long)]
        k: Option<usize>,
        /// Resource level (defaults to a).
        #[arg(long)]
        x: Option<f64>,
    },
    /// Run a pair of strategies and write the JSON transcript.
    Simulate {
        #[arg(long)]
        table: PathBuf,
        /// `T` or a JSON consumption path.
        #[arg(long, default_value = "T")]
        gunner: String,
        /// `T` or a JSON shot schedule.
        #[arg(long, default_value = "T")]
        sniper: String,
        #[arg(long, value_enum, default_value_t = TieBreakArg::Both)]
        tie_break: TieBreakArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Pieces per grid interval when tracking a curve.
        #[arg(long, default_value_t = 8)]
        refine: usize,
        #[arg(long, default_value = "transcript.json")]
        out: PathBuf,
    },
    /// Residual, structure, bracketing and payoff checks on a table.
    Verify {
        #[arg(long)]
        table: PathBuf,
        #[arg(long, default_value_t = 1e-5)]
        residual_tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        value_tol: f64,
        #[arg(long, default_value_t = 1e-4)]
        payoff_tol: f64,
        #[arg(long, default_value_t = 50)]
        check_points: usize,
        #[arg(long, default_value_t = 20)]
        random_plays: usize,
        /// Scripted deviations per side.
        #[arg(long, default_value_t = 20)]
        deviations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compare the solver's value with discrete backward induction.
    OracleCompare {
        #[command(flatten)]
        game: GameArgs,
        /// Comma-separated N = Q sizes.
        #[arg(long, value_delimiter = ',', default_value = "250,500,1000,2000")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = DiscreteGameSpec::DEFAULT_MAX_PACKETS_PER_STEP)]
        max_packets_per_step: usize,
        #[arg(long, default_value = "convergence.csv")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TieBreakArg {
    GunnerFirst,
    SniperFirst,
    Both,
    Random,
}

impl From<TieBreakArg> for TieBreak {
    fn from(t: TieBreakArg) -> Self {
        match t {
            TieBreakArg::GunnerFirst => TieBreak::GunnerFirst,
            TieBreakArg::SniperFirst => TieBreak::SniperFirst,
            TieBreakArg::Both => TieBreak::Both,
            TieBreakArg::Random => TieBreak::Random,
        }
    }
}

#[derive(Args)]
struct GameArgs {
    /// Gunner accuracy: `power:<c>` or `csv:<path>`.
    #[arg(long, default_value = "power:1")]
    p1: String,
    /// Sniper accuracy: `power:<c>` or `csv:<path>`.
    #[arg(long, default_value = "power:1")]
    p2: String,
    /// Gunner's resource.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Sniper's shots.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Gunner's prize.
    #[arg(long, default_value_t = 1.0)]
    a1: f64,
    /// Sniper's prize.
    #[arg(long, default_value_t = 1.0)]
    a2: f64,
    /// First grid node.
    #[arg(long, default_value_t = 0.05)]
    a0: f64,
    /// Grid step.
    #[arg(long, default_value_t = 0.01, conflicts_with = "points")]
    h: f64,
    /// Number of evenly spaced grid nodes instead of a step.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    u0: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    ode_tol: Option<f64>,
    #[arg(long)]
    root_tol: Option<f64>,
    #[arg(long)]
    max_delta_halvings: Option<usize>,
    #[arg(long)]
    interp_tol: Option<f64>,
}

impl GameArgs {
    /// Parses and validates everything before any computation.
    fn resolve(&self) -> Result<(DuelParameters, SolverConfig), Failure> {
        let p1: AccuracyFunction = self.p1.parse().context("--p1").map_err(bad_input)?;
        let p2: AccuracyFunction = self.p2.parse().context("--p2").map_err(bad_input)?;
        let params = DuelParameters::new(p1, p2, self.a, self.m, self.a1, self.a2).map_err(bad_input)?;
        let mut config = match self.points {
            Some(n) if n >= 2 => SolverConfig::with_points(self.a0, self.a, n),
            Some(n) => return Err(bad_input(anyhow!("--points must be at least 2, got {n}"))),
            None => SolverConfig::new(self.a0, self.a, self.h),
        };
        let d = SolverConfig::default();
        config.u0 = self.u0.unwrap_or(d.u0);
        config.eps = self.eps.unwrap_or(d.eps);
        config.ode_tol = self.ode_tol.unwrap_or(d.ode_tol);
        config.root_tol = self.root_tol.unwrap_or(d.root_tol);
        config.max_delta_halvings = self.max_delta_halvings.unwrap_or(d.max_delta_halvings);
        config.interp_tol = self.interp_tol.unwrap_or(d.interp_tol);
        config.validate().map_err(bad_input)?;
        Ok((params, config))
    }
}

fn load_table(path: &Path) -> Result<TTable, Failure> {
    TTable::read(path)
        .with_context(|| format!("loading table {}", path.display()))
        .map_err(bad_input)
}

fn cmd_solve(game: &GameArgs, out: &Path) -> CmdResult {
    let start = Instant::now();
    let (params, config) = game.resolve()?;
    let sol = solve_game(&params, &config).map_err(solver_failure)?;
    let (csv, json) = sol.table.write(out).map_err(bad_input)?;
    let mut manifest = RunManifest::new("solve", Some(params), Some(config));
    manifest.add_output(&csv).map_err(bad_input)?;
    manifest.add_output(&json).map_err(bad_input)?;
    let mpath = manifest.write_beside(&csv, start.elapsed()).map_err(bad_input)?;
    for v in &sol.values {
        println!("v_{} = {} (exponential form {}, gap {:.2e})", v.k, fmt_sig12(v.product), fmt_sig12(v.exponential), v.gap());
    }
    println!("wrote {}, {}, {}", csv.display(), json.display(), mpath.display());
    Ok(())
}

fn cmd_value(table: &Path, k: Option<usize>, x: Option<f64>) -> CmdResult {
    let table = load_table(table)?;
    let k = k.unwrap_or(table.m());
    let x = x.unwrap_or(table.a());
    if !(x >= 0.0 && x <= table.a()) {
        return Err(bad_input(anyhow!("x={x} outside the tabulated range [0, {}]", table.a())));
    }
    let v = table.game_value_at(x, k).map_err(bad_input)?;
    println!("k={k} x={}", fmt_sig12(x));
    println!("product {}", fmt_sig12(v.product));
    println!("exponential {}", fmt_sig12(v.exponential));
    println!("gap {:.3e}", v.gap());
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &str, what: &str) -> Result<T, Failure> {
    let body = fs::read_to_string(path).with_context(|| format!("reading {what} {path}")).map_err(bad_input)?;
    serde_json::from_str(&body).with_context(|| format!("parsing {what} {path}")).map_err(bad_input)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    table_path: &Path,
    gunner: &str,
    sniper: &str,
    tie_break: TieBreakArg,
    seed: u64,
    refine: usize,
    out: &Path,
) -> CmdResult {
    let start = Instant::now();
    let table = load_table(table_path)?;
    let gunner = if gunner == "T" {
        GunnerStrategy::T
    } else {
        GunnerStrategy::Scripted(read_json::<ConsumptionPath>(gunner, "consumption path")?)
    };
    let sniper = if sniper == "T" {
        SniperStrategy::T
    } else {
        SniperStrategy::Scripted(read_json::<SniperSchedule>(sniper, "shot schedule")?)
    };
    let params = table.params().clone();
    let options = SimOptions {
        tie_break: tie_break.into(),
        refine: refine.max(1),
        seed,
    };
    let result = simulate(&gunner, &sniper, &params, &table, &options).map_err(bad_input)?;
    let mut body = serde_json::to_string_pretty(&result).map_err(bad_input)?;
    body.push('\n');
    fs::write(out, body).with_context(|| format!("writing {}", out.display())).map_err(bad_input)?;
    let mut manifest = RunManifest::new("simulate", Some(params), Some(table.config().clone()));
    manifest.add_output(out).map_err(bad_input)?;
    manifest.write_beside(out, start.elapsed()).map_err(bad_input)?;
    let v = table.game_value(table.m()).map_err(bad_input)?;
    println!("payoff {}", fmt_sig12(result.payoff));
    println!("value {}", fmt_sig12(v.product));
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_verify(table_path: &Path, tol: &verify::Tolerances, report: Option<&Path>) -> CmdResult {
    let start = Instant::now();
    let table = load_table(table_path)?;
    let result = verify::run(&table, tol);
    for c in &result.checks {
        println!(
            "{} {}: {:.3e} (tolerance {:.0e}) {}",
            if c.pass { "ok  " } else { "FAIL" },
            c.name,
            c.measured,
            c.tolerance,
            c.detail
        );
    }
    if let Some(path) = report {
        let mut body = serde_json::to_string_pretty(&result).map_err(bad_input)?;
        body.push('\n');
        fs::write(path, body).with_context(|| format!("writing {}", path.display())).map_err(bad_input)?;
        let mut manifest = RunManifest::new("verify", Some(table.params().clone()), Some(table.config().clone()));
        manifest.add_output(path).map_err(bad_input)?;
        manifest.write_beside(path, start.elapsed()).map_err(bad_input)?;
    }
    if result.pass {
        println!("verification passed");
        Ok(())
    } else {
        let failed: Vec<_> = result.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
        Err(Failure {
            code: 4,
            error: anyhow!("verification failed: {}", failed.join(", ")),
        })
    }
}

fn cmd_oracle_compare(game: &GameArgs, sizes: &[usize], j: usize, out: &Path) -> CmdResult {
    let start = Instant::now();
    let (params, config) = game.resolve()?;
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(bad_input(anyhow!("--sizes needs positive entries")));
    }
    let sol = solve_game(&params, &config).map_err(solver_failure)?;
    let rows = convergence_sweep(&params, sizes, j, sol.value()).map_err(bad_input)?;
    fs::write(out, convergence_csv(&rows)).with_context(|| format!("writing {}", out.display())).map_err(bad_input)?;
    let mut manifest = RunManifest::new("oracle-compare", Some(params), Some(config));
    manifest.add_output(out).map_err(bad_input)?;
    manifest.write_beside(out, start.elapsed()).map_err(bad_input)?;
    for r in &rows {
        println!("N=Q={} discrete {} solver {} gap {:.3e}", r.steps, fmt_sig12(r.discrete), fmt_sig12(r.solver), r.gap);
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve { game, out } => cmd_solve(game, out),
        Command::Value { table, k, x } => cmd_value(table, *k, *x),
        Command::Simulate {
            table,
            gunner,
            sniper,
            tie_break,
            seed,
            refine,
            out,
        } => cmd_simulate(table, gunner, sniper, *tie_break, *seed, *refine, out),
        Command::Verify {
            table,
            residual_tol,
            value_tol,
            payoff_tol,
            check_points,
            random_plays,
            deviations,
            seed,
            report,
        } => {
            let tol = verify::Tolerances {
                residual: *residual_tol,
                value_forms: *value_tol,
                payoff: *payoff_tol,
                check_points: *check_points,
                random_plays: *random_plays,
                deviations: *deviations,
                seed: *seed,
            };
            cmd_verify(table, &tol, report.as_deref())
        }
        Command::OracleCompare {
            game,
            sizes,
            max_packets_per_step,
            out,
        } => cmd_oracle_compare(game, sizes, *max_packets_per_step, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
