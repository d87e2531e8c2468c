use noisy_duel::solver::{SolverConfig, TTable};
use noisy_duel::strategy::{
    deviation_suite, simulate, GunnerStrategy, SimOptions, SniperStrategy, TieBreak,
};
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct Tolerances {
    pub residual: f64,
    pub value_forms: f64,
    pub payoff: f64,
    pub check_points: usize,
    pub random_plays: usize,
    pub deviations: usize,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub checks: Vec<Check>,
}

fn check(name: &'static str, measured: f64, tolerance: f64, detail: String) -> Check {
    Check {
        name,
        pass: measured <= tolerance,
        measured,
        tolerance,
        detail,
    }
}

/// Residual, structure, bracketing and payoff suites on a loaded table.
pub fn run(table: &TTable, tol: &Tolerances) -> VerifyReport {
    let params = table.params().clone();
    let m = table.m();
    let a0 = table.grid()[0];
    let xs = SolverConfig::with_points(a0, table.a(), tol.check_points.max(2)).grid();
    let mut checks = Vec::new();

    let (mut residual, mut worst, mut gap) = (0.0f64, (0.0, 0), 0.0f64);
    let mut failures = Vec::new();
    for &x in &xs {
        for k in 1..=m {
            match (table.equilibrium_residual(x, k), table.game_value_at(x, k)) {
                (Ok(r), Ok(v)) => {
                    if !(r <= residual) {
                        residual = r;
                        worst = (x, k);
                    }
                    gap = gap.max(v.gap());
                }
                (Err(e), _) | (_, Err(e)) => failures.push(format!("x={x} k={k}: {e}")),
            }
        }
    }
    if !failures.is_empty() {
        residual = f64::INFINITY;
    }
    checks.push(check(
        "equilibrium_residual",
        residual,
        tol.residual,
        format!("worst at x={} k={}; {}", worst.0, worst.1, failures.join("; ")),
    ));
    checks.push(check("value_forms_gap", gap, tol.value_forms, String::new()));

    let mut violations = table.structure_violations();
    for (j, &x) in xs.iter().enumerate() {
        for k in 1..=m {
            let t = table.curve(k, x);
            if !(t > 0.0 && t <= 1.0 && (k == 1 || t < table.curve(k - 1, x))) {
                violations.push(format!("x={x}: T_{k}={t} out of order"));
            }
            if j > 0 && !(t < table.curve(k, xs[j - 1])) {
                violations.push(format!("x={x}: T_{k} not decreasing"));
            }
        }
    }
    checks.push(check(
        "structure",
        violations.len() as f64,
        0.0,
        violations.iter().take(5).cloned().collect::<Vec<_>>().join("; "),
    ));

    let config = table.config();
    let stage = table.stage();
    let crossing = stage.levels.iter().map(|d| d.max_crossing).fold(f64::NEG_INFINITY, f64::max);
    let growth = stage.levels.iter().map(|d| d.max_gap_increase).fold(0.0, f64::max);
    let start_gap = stage.levels.iter().map(|d| d.gap_at_grid_start).fold(0.0, f64::max);
    checks.push(check("bracket_order", crossing.max(0.0), 0.0, format!("max lower − upper {crossing:e}")));
    checks.push(check("bracket_gap_growth", growth, 10.0 * config.ode_tol + 1e-12, String::new()));
    checks.push(check(
        "bracket_gap_at_grid_start",
        start_gap,
        10.0 * config.eps,
        format!("{} halvings, δ={:e}", stage.halvings, stage.delta),
    ));

    let v = table.game_value(m).map(|v| v.product).unwrap_or(f64::NAN);
    let mut t_play = 0.0f64;
    let mut errors = Vec::new();
    for seed in 0..tol.random_plays as u64 {
        let options = SimOptions {
            tie_break: TieBreak::Random,
            seed: tol.seed.wrapping_add(seed),
            ..SimOptions::default()
        };
        match simulate(&GunnerStrategy::T, &SniperStrategy::T, &params, table, &options) {
            Ok(r) => t_play = t_play.max((r.payoff - v).abs()),
            Err(e) => errors.push(e.to_string()),
        }
    }
    if !errors.is_empty() || v.is_nan() {
        t_play = f64::INFINITY;
    }
    checks.push(check(
        "t_play_payoff",
        t_play,
        tol.payoff,
        format!("{} random T-plays; {}", tol.random_plays, errors.join("; ")),
    ));

    let (mut sniper_gain, mut gunner_gain) = (0.0f64, 0.0f64);
    let mut errors = Vec::new();
    if tol.deviations > 0 {
        match deviation_suite(&params, table, tol.seed, tol.deviations) {
            Ok(suite) => {
                let options = SimOptions::default();
                for d in &suite.sniper {
                    let s = SniperStrategy::Scripted(d.strategy.clone());
                    match simulate(&GunnerStrategy::T, &s, &params, table, &options) {
                        Ok(r) => sniper_gain = sniper_gain.max(v - r.payoff),
                        Err(e) => errors.push(format!("{}: {e}", d.name)),
                    }
                }
                for d in &suite.gunner {
                    let g = GunnerStrategy::Scripted(d.strategy.clone());
                    match simulate(&g, &SniperStrategy::T, &params, table, &options) {
                        Ok(r) => gunner_gain = gunner_gain.max(r.payoff - v),
                        Err(e) => errors.push(format!("{}: {e}", d.name)),
                    }
                }
            }
            Err(e) => errors.push(e.to_string()),
        }
    }
    if !errors.is_empty() || v.is_nan() {
        sniper_gain = f64::INFINITY;
    }
    checks.push(check(
        "sniper_deviation_gain",
        sniper_gain,
        tol.payoff,
        format!("{} deviations; {}", tol.deviations, errors.join("; ")),
    ));
    checks.push(check(
        "gunner_deviation_gain",
        gunner_gain,
        tol.payoff,
        format!("{} deviations", tol.deviations),
    ));

    VerifyReport {
        pass: checks.iter().all(|c| c.pass),
        checks,
    }
}
