//! Curves `T_2 … T_m`, one level at a time, in the variable `u = T_1(x)`.

use serde::{Deserialize, Serialize};

use crate::accuracy::{AccuracyFunction, EPS_CLIP};
use crate::numeric::{bisect, ode, DenseSolution, OdeOptions};

use super::SolverError;

/// `F_k(t)` for given values `T_1 … T_{k−1}` (`ts`), with `π_{k−1}` and
/// `ln p(T_{k−1})` precomputed.
fn numerator(t: f64, pi_prev: f64, lnp_prev: f64, p1: &AccuracyFunction, p2: &AccuracyFunction) -> f64 {
    let q = p2.survival(t);
    let lnp = p1.log_survival(t);
    if pi_prev == 1.0 {
        (1.0 - q) * lnp
    } else {
        (1.0 - pi_prev * q) * lnp - (1.0 - pi_prev) * q * lnp_prev
    }
}

fn prefix(ts: &[f64], p1: &AccuracyFunction, p2: &AccuracyFunction) -> (f64, f64) {
    let pi: f64 = ts.iter().map(|&t| p2.survival(t)).product();
    let lnp_prev = ts.last().map_or(0.0, |&t| p1.log_survival(t));
    (pi, lnp_prev)
}

#[inline]
fn slope(t: f64, pi_prev: f64, lnp_prev: f64, p1: &AccuracyFunction, p2: &AccuracyFunction) -> f64 {
    let f = numerator(t, pi_prev, lnp_prev, p1, p2);
    f / (p2.derivative(t) * pi_prev)
}

/// Right-hand side `dT_k/dx` at candidate value `t`, given the values
/// `ts = (T_1, …, T_{k−1})` at the same `x` (empty for `k = 1`).
pub fn rhs_phi_k(
    ts: &[f64],
    t: f64,
    p1: &AccuracyFunction,
    p2: &AccuracyFunction,
) -> Result<f64, SolverError> {
    if !(t > 0.0 && t < 1.0) {
        return Err(SolverError::Domain(t));
    }
    if let Some(&bad) = ts.iter().find(|&&s| !(s > 0.0 && s <= 1.0)) {
        return Err(SolverError::Domain(bad));
    }
    let (pi, lnp_prev) = prefix(ts, p1, p2);
    Ok(slope(t, pi, lnp_prev, p1, p2))
}

/// Floor `f_k`: the root of `F_k(·)` in `(0, T_{k−1})`.
pub fn implicit_boundary_fk(
    ts: &[f64],
    p1: &AccuracyFunction,
    p2: &AccuracyFunction,
    root_tol: f64,
) -> Result<f64, SolverError> {
    let &upper = ts
        .last()
        .ok_or_else(|| SolverError::Floor("needs at least one previous curve".into()))?;
    if ts.windows(2).any(|w| w[1] >= w[0]) || ts.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(SolverError::Floor(format!(
            "previous values must be strictly decreasing inside (0,1): {ts:?}"
        )));
    }
    let (pi, lnp_prev) = prefix(ts, p1, p2);
    let f = |t: f64| numerator(t, pi, lnp_prev, p1, p2);
    let lo = EPS_CLIP.min(0.5 * upper);
    let (f_lo, f_hi) = (f(lo), f(upper));
    if !(f_lo > 0.0) {
        return Err(SolverError::Floor(format!(
            "F_k must be positive near t=0, got {f_lo:e} at t={lo:e}"
        )));
    }
    if !(f_hi < 0.0) {
        return Err(SolverError::Floor(format!(
            "F_k must be negative at the previous curve, got {f_hi:e} at t={upper}"
        )));
    }
    bisect(f, lo, upper, root_tol).map_err(|e| SolverError::Floor(e.to_string()))
}

/// Inputs shared by all levels of one second-stage pass.
#[derive(Debug, Clone, Copy)]
pub struct LevelSetup<'a> {
    pub p1: &'a AccuracyFunction,
    pub p2: &'a AccuracyFunction,
    /// Integration start, just below 1.
    pub u0: f64,
    /// Integration end, `T_1(a)`.
    pub u_end: f64,
    /// `T_1(a0)`: the merged curve must be accurate from here down.
    pub u_grid_start: f64,
    pub eps: f64,
    pub ode_tol: f64,
    pub root_tol: f64,
    /// Fail if the bracket gap ever grows (only guaranteed for `P₂ = t`).
    pub check_gap_monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDiagnostics {
    pub k: usize,
    pub u0: f64,
    /// Floor value `f_k(u0)`; start of the lower solution.
    pub floor_at_u0: f64,
    /// `T_{k−1}(u0) − f_k(u0)`: bracket width at the start.
    pub gap_at_u0: f64,
    /// Bracket width at the first grid node.
    pub gap_at_grid_start: f64,
    /// Largest integration node at which the gap fell below tolerance.
    pub u_star: Option<f64>,
    /// Largest growth of the gap between consecutive nodes.
    pub max_gap_increase: f64,
    /// Largest `z − y` seen (positive means crossed).
    pub max_crossing: f64,
    pub steps: usize,
    pub rejected_steps: usize,
}

/// One integrated level: upper and lower solutions on `[u_end, u0]`.
#[derive(Debug, Clone)]
pub struct Level {
    pub k: usize,
    pub solution: DenseSolution<2>,
    pub diagnostics: LevelDiagnostics,
}

impl Level {
    /// Merged curve `(y + z)/2` at `u`.
    pub fn eval(&self, u: f64) -> f64 {
        let [y, z] = self.solution.eval(u);
        0.5 * (y + z)
    }

    pub fn upper(&self, u: f64) -> f64 {
        self.solution.eval(u)[0]
    }

    pub fn lower(&self, u: f64) -> f64 {
        self.solution.eval(u)[1]
    }
}

/// Values `T_1(u) = u, T_2(u), …` from already integrated levels.
fn previous(levels: &[Level], u: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(u);
    out.extend(levels.iter().map(|l| l.eval(u)));
}

/// Integrates level `k = levels.len() + 2` from `u0` down to `u_end`.
pub fn integrate_level_k(levels: &[Level], setup: &LevelSetup<'_>) -> Result<Level, SolverError> {
    let k = levels.len() + 2;
    let LevelSetup { p1, p2, u0, .. } = *setup;
    let mut ts = Vec::with_capacity(k);
    previous(levels, u0, &mut ts);
    let y0 = *ts.last().expect("at least T_1");
    let z0 = implicit_boundary_fk(&ts, p1, p2, setup.root_tol)?;

    let mut buf = Vec::with_capacity(k);
    let rhs = |u: f64, s: &[f64; 2]| -> Option<[f64; 2]> {
        let [y, z] = *s;
        if !(z > 0.0 && y < 1.0 && z <= y + 1e-12) {
            return None;
        }
        previous(levels, u, &mut buf);
        if buf.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return None;
        }
        let (pi, lnp_prev) = prefix(&buf, p1, p2);
        // dT_1/dx, i.e. du/dx
        let d1 = slope(u, 1.0, 0.0, p1, p2);
        let dy = slope(y, pi, lnp_prev, p1, p2) / d1;
        let dz = slope(z, pi, lnp_prev, p1, p2) / d1;
        (dy.is_finite() && dz.is_finite()).then_some([dy, dz])
    };
    let admissible = |_: f64, s: &[f64; 2]| s[1] > 0.0 && s[0] < 1.0 && s[1] <= s[0] + 1e-12;
    let opts = OdeOptions {
        abs_tol: setup.ode_tol,
        rel_tol: setup.ode_tol,
        initial_step: (1.0 - u0) * 1e-3,
        max_steps: 2_000_000,
        ..OdeOptions::default()
    };
    let solution = ode::integrate(rhs, u0, [y0, z0], setup.u_end, &opts, admissible)
        .map_err(|source| SolverError::Ode { k, source })?;

    let mut max_crossing = f64::NEG_INFINITY;
    let mut max_gap_increase: f64 = 0.0;
    let mut u_star = None;
    let mut prev_gap = f64::INFINITY;
    for (u, s) in solution.t.iter().zip(&solution.y) {
        let gap = s[0] - s[1];
        max_crossing = max_crossing.max(-gap);
        if gap > prev_gap {
            max_gap_increase = max_gap_increase.max(gap - prev_gap);
        }
        prev_gap = gap;
        if u_star.is_none() && gap < setup.eps {
            u_star = Some(*u);
        }
        if -gap > 1e-12 {
            return Err(SolverError::BracketInversion {
                k,
                u: *u,
                y: s[0],
                z: s[1],
            });
        }
    }
    let gap_tol = 10.0 * setup.ode_tol + 1e-12;
    if setup.check_gap_monotone && max_gap_increase > gap_tol {
        let u = solution
            .t
            .windows(2)
            .zip(solution.y.windows(2))
            .find(|(_, y)| (y[1][0] - y[1][1]) - (y[0][0] - y[0][1]) > gap_tol)
            .map_or(u0, |(t, _)| t[1]);
        return Err(SolverError::GapIncrease {
            k,
            u,
            increase: max_gap_increase,
        });
    }
    let [yg, zg] = solution.eval(setup.u_grid_start);
    let diagnostics = LevelDiagnostics {
        k,
        u0,
        floor_at_u0: z0,
        gap_at_u0: y0 - z0,
        gap_at_grid_start: yg - zg,
        u_star,
        max_gap_increase,
        max_crossing,
        steps: solution.t.len() - 1,
        rejected_steps: solution.rejected_steps,
    };
    Ok(Level {
        k,
        solution,
        diagnostics,
    })
}
