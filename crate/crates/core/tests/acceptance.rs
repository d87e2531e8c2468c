//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::process::ExitCode;
use std::time::{Duration, Instant};

use noisy_duel::oracle::{convergence_csv, convergence_sweep, DiscreteGameSpec};
use noisy_duel::payoff::{payoff, ConsumptionPath, Play, SniperSchedule};
use noisy_duel::solver::{solve_game, solve_game_direct, Solution, SolverConfig};
use noisy_duel::strategy::{
    deviation_suite, simulate, GunnerStrategy, SimOptions, SniperStrategy, TieBreak,
};
use noisy_duel::{AccuracyFunction, DuelParameters};

const RESIDUAL_TOL: f64 = 1e-5;
const VALUE_FORM_TOL: f64 = 1e-6;
const PAYOFF_TOL: f64 = 1e-4;
const ORACLE_REL_GAP: f64 = 0.05;
const ANCHOR_TOL: f64 = 1e-12;
const NORMALIZATION_VALUE_TOL: f64 = 1e-6;
const NORMALIZATION_CURVE_TOL: f64 = 1e-5;
const CHECK_POINTS: usize = 50;
const SWEEP_EXPONENTS: [f64; 3] = [0.5, 1.0, 2.0];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn params(c: f64, p2: AccuracyFunction, a: f64, m: usize) -> DuelParameters {
    DuelParameters::new(AccuracyFunction::power(c).unwrap(), p2, a, m, 1.0, 1.0).unwrap()
}

/// Solver grid with step 0.01; checks run on a separate 50-point grid.
fn solver_config(a: f64) -> SolverConfig {
    SolverConfig::new(0.05, a, 0.01)
}

fn check_grid(a: f64) -> Vec<f64> {
    SolverConfig::with_points(0.05, a, CHECK_POINTS).grid()
}

fn sweep() -> Vec<(f64, Solution)> {
    SWEEP_EXPONENTS
        .iter()
        .map(|&c| {
            let p = params(c, AccuracyFunction::linear(), 2.0, 5);
            (c, solve_game(&p, &solver_config(2.0)).unwrap())
        })
        .collect()
}

fn equilibrium_identity(sweep: &[(f64, Solution)], elapsed: Duration) -> Outcome {
    let mut worst = 0.0f64;
    let mut at = (0.0, 0.0, 0);
    for (c, sol) in sweep {
        for x in check_grid(2.0) {
            for k in 1..=5 {
                let r = sol.table.equilibrium_residual(x, k).unwrap();
                if r > worst {
                    worst = r;
                    at = (*c, x, k);
                }
            }
        }
    }
    let fast = elapsed <= Duration::from_secs(60);
    outcome(
        worst <= RESIDUAL_TOL && fast,
        format!(
            "max residual {worst:.2e} (c={}, x={:.4}, k={}) ≤ {RESIDUAL_TOL:e}; runtime {:.1}s ≤ 60s",
            at.0,
            at.1,
            at.2,
            elapsed.as_secs_f64()
        ),
    )
}

fn dual_value(sweep: &[(f64, Solution)]) -> Outcome {
    let mut worst = 0.0f64;
    for (_, sol) in sweep {
        for x in check_grid(2.0) {
            for k in 1..=5 {
                worst = worst.max(sol.table.game_value_at(x, k).unwrap().gap());
            }
        }
    }
    outcome(
        worst <= VALUE_FORM_TOL,
        format!("max |product − exponential| {worst:.2e} ≤ {VALUE_FORM_TOL:e}"),
    )
}

fn structure(sweep: &[(f64, Solution)]) -> Outcome {
    let mut violations = 0;
    for (_, sol) in sweep {
        violations += sol.table.structure_violations().len();
        let xs = check_grid(2.0);
        for (j, &x) in xs.iter().enumerate() {
            for k in 1..=5 {
                let t = sol.table.curve(k, x);
                let above = sol.table.curve(k - 1, x);
                if !(t > 0.0 && t <= 1.0 && (k == 1 || t < above)) {
                    violations += 1;
                }
                if j > 0 && !(t < sol.table.curve(k, xs[j - 1])) {
                    violations += 1;
                }
            }
        }
    }
    outcome(violations == 0, format!("{violations} ordering/monotonicity violations"))
}

fn bracketing(sweep: &[(f64, Solution)]) -> Outcome {
    let eps = solver_config(2.0).eps;
    let (mut crossing, mut increase, mut gap) = (f64::NEG_INFINITY, 0.0f64, 0.0f64);
    let mut halvings = 0;
    for (_, sol) in sweep {
        let stage = sol.table.stage();
        halvings = halvings.max(stage.halvings);
        for d in &stage.levels {
            crossing = crossing.max(d.max_crossing);
            increase = increase.max(d.max_gap_increase);
            gap = gap.max(d.gap_at_grid_start);
        }
    }
    // gap growth allowance: local integrator error per step
    let growth_tol = 10.0 * solver_config(2.0).ode_tol + 1e-12;
    outcome(
        crossing <= 0.0 && increase <= growth_tol && gap <= 10.0 * eps,
        format!(
            "lower − upper ≤ {crossing:.2e} (≤ 0); max gap growth {increase:.2e} ≤ {growth_tol:.0e}; \
             gap at grid start {gap:.2e} ≤ {:.0e} after {halvings} halvings",
            10.0 * eps
        ),
    )
}

fn small_game() -> (DuelParameters, Solution) {
    let p = params(1.0, AccuracyFunction::linear(), 1.0, 3);
    let sol = solve_game(&p, &solver_config(1.0)).unwrap();
    (p, sol)
}

fn payoff_constancy(game: &(DuelParameters, Solution)) -> Outcome {
    let (p, sol) = game;
    let v = sol.value();
    let mut worst = 0.0f64;
    let mut not_t = 0;
    for seed in 0..100 {
        let options = SimOptions {
            tie_break: TieBreak::Random,
            seed,
            ..SimOptions::default()
        };
        let r = simulate(&GunnerStrategy::T, &SniperStrategy::T, p, &sol.table, &options).unwrap();
        worst = worst.max((r.payoff - v).abs());
        if !noisy_duel::payoff::is_t_play(&r.play, &sol.table) {
            not_t += 1;
        }
    }
    outcome(
        worst <= PAYOFF_TOL && not_t == 0,
        format!("100 random T-plays: max |K − v₃(1)| {worst:.2e} ≤ {PAYOFF_TOL:e}; {not_t} not T-plays"),
    )
}

fn deviations(game: &(DuelParameters, Solution), elapsed_solve: Duration) -> Outcome {
    let start = Instant::now();
    let (p, sol) = game;
    let v = sol.value();
    let suite = deviation_suite(p, &sol.table, 2024, 50).unwrap();
    let options = SimOptions::default();
    let mut sniper_low = f64::INFINITY;
    for d in &suite.sniper {
        let s = SniperStrategy::Scripted(d.strategy.clone());
        let r = simulate(&GunnerStrategy::T, &s, p, &sol.table, &options).unwrap();
        sniper_low = sniper_low.min(r.payoff - v);
    }
    let mut gunner_high = f64::NEG_INFINITY;
    for d in &suite.gunner {
        let g = GunnerStrategy::Scripted(d.strategy.clone());
        let r = simulate(&g, &SniperStrategy::T, p, &sol.table, &options).unwrap();
        gunner_high = gunner_high.max(r.payoff - v);
    }
    let elapsed = elapsed_solve + start.elapsed();
    outcome(
        sniper_low >= -PAYOFF_TOL && gunner_high <= PAYOFF_TOL && elapsed <= Duration::from_secs(120),
        format!(
            "min K(α^T, η) − v {sniper_low:.2e} ≥ −{PAYOFF_TOL:e}; max K(α, η^T) − v {gunner_high:.2e} ≤ {PAYOFF_TOL:e}; \
             runtime {:.1}s ≤ 120s",
            elapsed.as_secs_f64()
        ),
    )
}

fn oracle_convergence() -> Outcome {
    let start = Instant::now();
    let p = params(1.0, AccuracyFunction::linear(), 1.0, 1);
    let v1 = solve_game(&p, &solver_config(1.0)).unwrap().value();
    let rows = convergence_sweep(&p, &[250, 500, 1000, 2000], DiscreteGameSpec::DEFAULT_MAX_PACKETS_PER_STEP, v1)
        .unwrap();
    print!("{}", convergence_csv(&rows));
    let shrinking = rows.windows(2).all(|w| w[1].gap < w[0].gap);
    let rel = rows.last().unwrap().gap / v1.abs();
    let elapsed = start.elapsed();
    outcome(
        shrinking && rel <= ORACLE_REL_GAP && elapsed <= Duration::from_secs(300),
        format!(
            "gaps {:?} shrinking={shrinking}; final relative gap {rel:.2e} ≤ {ORACLE_REL_GAP}; runtime {:.1}s ≤ 300s",
            rows.iter().map(|r| format!("{:.2e}", r.gap)).collect::<Vec<_>>(),
            elapsed.as_secs_f64()
        ),
    )
}

fn anchors(game: &(DuelParameters, Solution)) -> Outcome {
    let (p, sol) = game;
    let mut worst = 0.0f64;
    // v_0(a) = A₁
    let v0 = sol.table.game_value(0).unwrap();
    worst = worst.max((v0.product - p.a1).abs()).max((v0.exponential - p.a1).abs());
    let no_sniper = params(1.0, AccuracyFunction::linear(), 1.0, 0);
    let s0 = solve_game(&no_sniper, &solver_config(1.0)).unwrap();
    worst = worst.max((s0.value() - p.a1).abs());
    // v_m(0) = −A₂
    for k in 1..=p.m {
        let v = sol.table.game_value_at(0.0, k).unwrap();
        worst = worst.max((v.product + p.a2).abs()).max((v.exponential + p.a2).abs());
    }
    // gunner idle, sniper fires at t = 1
    let idle = Play::new(ConsumptionPath::constant(p.a, false).unwrap(), SniperSchedule::all_at_end(p.m));
    let k = payoff(&idle, p).unwrap();
    worst = worst.max((k + p.a2).abs());
    outcome(worst <= ANCHOR_TOL, format!("max anchor error {worst:.2e} ≤ {ANCHOR_TOL:e}"))
}

fn normalization() -> Outcome {
    let p = params(1.0, AccuracyFunction::power(2.0).unwrap(), 2.0, 5);
    let config = solver_config(2.0);
    let normalized = solve_game(&p, &config).unwrap();
    let direct = solve_game_direct(&p, &config).unwrap();
    let dv = (normalized.value() - direct.value()).abs();
    let mut sup = 0.0f64;
    for x in check_grid(2.0) {
        for k in 1..=5 {
            sup = sup.max((normalized.table.curve(k, x) - direct.table.curve(k, x)).abs());
        }
    }
    outcome(
        dv <= NORMALIZATION_VALUE_TOL && sup <= NORMALIZATION_CURVE_TOL,
        format!(
            "|Δv₅(2)| {dv:.2e} ≤ {NORMALIZATION_VALUE_TOL:e}; curve sup-norm {sup:.2e} ≤ {NORMALIZATION_CURVE_TOL:e}"
        ),
    )
}

fn main() -> ExitCode {
    let mut results = Vec::new();
    let start = Instant::now();
    let sweep = sweep();
    let sweep_time = start.elapsed();
    results.push(("1 equilibrium identity", equilibrium_identity(&sweep, start.elapsed())));
    results.push(("2 dual value forms", dual_value(&sweep)));
    results.push(("3 structural invariants", structure(&sweep)));
    results.push(("4 bracketing and gap shrink", bracketing(&sweep)));
    let start = Instant::now();
    let game = small_game();
    let game_time = start.elapsed();
    results.push(("5 payoff constancy over T-plays", payoff_constancy(&game)));
    results.push(("6 deviation inequalities", deviations(&game, game_time)));
    results.push(("7 oracle convergence", oracle_convergence()));
    results.push(("8 trivial anchors", anchors(&game)));
    results.push(("9 normalization invariance", normalization()));

    println!("solver sweep (3 instances) took {:.2}s", sweep_time.as_secs_f64());
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
