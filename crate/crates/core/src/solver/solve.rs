//! Driver: stage one, the δ-halving loop around stage two, head nodes and
//! assembly of the table.

use crate::accuracy::{normalize_p2, AccuracyFunction, DuelParameters};

use super::stage1::{tabulate_t1, x_of_t1_general};
use super::stage2::{integrate_level_k, Level, LevelSetup};
use super::table::{StageReport, TTable, ValueForms};
use super::{SolverConfig, SolverError};

/// Table plus the values `v_0(a) … v_m(a)`.
#[derive(Debug, Clone)]
pub struct Solution {
    pub table: TTable,
    pub values: Vec<ValueForms>,
}

impl Solution {
    /// `v_m(a)` in product form.
    pub fn value(&self) -> f64 {
        self.values.last().expect("v_0 always present").product
    }
}

/// Solves the game in time re-scaled so that the sniper's accuracy is the
/// identity, then maps the curves back to original time.
pub fn solve_game(params: &DuelParameters, config: &SolverConfig) -> Result<Solution, SolverError> {
    let normalized = normalize_p2(params)?;
    let back = |tau: f64| normalized.to_original(tau);
    solve_in(params, &normalized.params.p1, &normalized.params.p2, config, true, &back)
}

/// Same algorithm run directly in original time with a general sniper
/// accuracy. Independent of the re-timing, so the two routes cross-check.
pub fn solve_game_direct(params: &DuelParameters, config: &SolverConfig) -> Result<Solution, SolverError> {
    solve_in(params, &params.p1, &params.p2, config, params.p2.is_identity(), &|t| t)
}

fn check_params(params: &DuelParameters, config: &SolverConfig) -> Result<(), SolverError> {
    config.validate()?;
    if (params.a - config.a).abs() > 1e-12 * params.a.max(1.0) {
        return Err(SolverError::Config(format!(
            "grid end a={} differs from the gunner's resource {}",
            config.a, params.a
        )));
    }
    Ok(())
}

fn solve_in(
    params: &DuelParameters,
    p1: &AccuracyFunction,
    p2: &AccuracyFunction,
    config: &SolverConfig,
    check_gap_monotone: bool,
    back: &dyn Fn(f64) -> f64,
) -> Result<Solution, SolverError> {
    check_params(params, config)?;
    let grid = config.grid();
    let m = params.m;
    if m == 0 {
        let table = TTable::from_parts(
            params.clone(),
            config.clone(),
            grid,
            Vec::new(),
            0,
            StageReport::default(),
        )?;
        let values = table.values()?;
        return Ok(Solution { table, values });
    }

    let u_grid = tabulate_t1(&grid, p1, p2)?;
    let (levels, delta, halvings) = second_stage(m, p1, p2, config, &u_grid, check_gap_monotone)?;

    // head nodes: geometric in 1 − u between the stage-two start and the grid
    let delta_end = 1.0 - u_grid[0];
    let mut head_u = Vec::new();
    if delta < delta_end {
        let decades = (delta_end / delta).log10();
        let n = ((decades * config.head_nodes_per_decade as f64).ceil() as usize).max(1);
        for i in 0..n {
            let d = delta * (delta_end / delta).powf(i as f64 / n as f64);
            head_u.push(1.0 - d);
        }
    }
    let mut x = Vec::with_capacity(head_u.len() + grid.len());
    let mut u_nodes = Vec::with_capacity(head_u.len() + grid.len());
    for &u in &head_u {
        let xu = x_of_t1_general(u, p1, p2)?;
        let last = x.last().copied().unwrap_or(0.0);
        if xu > last && xu < grid[0] * (1.0 - 1e-9) {
            x.push(xu);
            u_nodes.push(u);
        }
    }
    let grid_start = x.len();
    x.extend_from_slice(&grid);
    u_nodes.extend_from_slice(&u_grid);

    let mut curves = vec![u_nodes.iter().map(|&u| back(u)).collect::<Vec<_>>()];
    for level in &levels {
        curves.push(u_nodes.iter().map(|&u| back(level.eval(u))).collect());
    }

    let mut stage = StageReport {
        delta,
        halvings,
        levels: levels.iter().map(|l| l.diagnostics.clone()).collect(),
        interp_error: 0.0,
        head_interp_error: 0.0,
    };
    let table = TTable::from_parts(
        params.clone(),
        config.clone(),
        x.clone(),
        curves,
        grid_start,
        stage.clone(),
    )?;

    // interpolation error at interval midpoints against the integrated curves
    let mids: Vec<f64> = x.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let u_mid = tabulate_t1(&mids, p1, p2)?;
    let (mut interp_error, mut head_interp_error) = (0.0f64, 0.0f64);
    for (&xm, &um) in mids.iter().zip(&u_mid) {
        let mut e = (table.curve(1, xm) - back(um)).abs();
        for level in &levels {
            let exact = back(level.eval(um));
            e = e.max((table.curve(level.k, xm) - exact).abs());
        }
        if xm > grid[0] {
            interp_error = interp_error.max(e);
        } else {
            head_interp_error = head_interp_error.max(e);
        }
    }
    stage.head_interp_error = head_interp_error;
    stage.interp_error = interp_error;
    if interp_error > config.interp_tol {
        return Err(SolverError::Table(format!(
            "interpolation error {interp_error:e} exceeds the tolerance {:e}",
            config.interp_tol
        )));
    }
    let mut table = table;
    table.set_stage(stage);
    let values = table.values()?;
    Ok(Solution { table, values })
}

/// Runs levels `2..=m`, halving `1 − u0` until every level's bracket has
/// closed by the first grid node.
fn second_stage(
    m: usize,
    p1: &AccuracyFunction,
    p2: &AccuracyFunction,
    config: &SolverConfig,
    u_grid: &[f64],
    check_gap_monotone: bool,
) -> Result<(Vec<Level>, f64, usize), SolverError> {
    let mut delta = 1.0 - config.u0;
    if m < 2 {
        return Ok((Vec::new(), delta, 0));
    }
    let u_grid_start = u_grid[0];
    let u_end = *u_grid.last().expect("non-empty grid");
    let mut halvings = 0;
    loop {
        let setup = LevelSetup {
            p1,
            p2,
            u0: 1.0 - delta,
            u_end,
            u_grid_start,
            eps: config.eps,
            ode_tol: config.ode_tol,
            root_tol: config.root_tol,
            check_gap_monotone,
        };
        let mut levels: Vec<Level> = Vec::with_capacity(m - 1);
        let mut uncovered = None;
        for _ in 2..=m {
            let level = integrate_level_k(&levels, &setup)?;
            let gap = level.diagnostics.gap_at_grid_start;
            if !(gap < config.eps) {
                uncovered = Some((level.k, gap));
                break;
            }
            levels.push(level);
        }
        match uncovered {
            None => return Ok((levels, delta, halvings)),
            Some((k, gap)) => {
                // a start this close to 1 is below double resolution
                if halvings >= config.max_delta_halvings || delta * 0.5 < 1e-15 {
                    return Err(SolverError::Coverage {
                        k,
                        gap,
                        delta,
                        halvings,
                    });
                }
                delta *= 0.5;
                halvings += 1;
            }
        }
    }
}
