//! Tabulation of the equilibrium curves `T_1 > T_2 > … > T_m`.
//!
//! Stage one inverts a quadrature for `T_1`. Every later curve solves an
//! ODE that is singular at `x = 0` (`T_k(0) = 1`), so it is integrated in
//! the variable `u = T_1(x)` from just below `u = 1`, squeezed between an
//! upper trajectory started on `T_{k−1}` and a lower one started on the
//! implicit floor `f_k`. Both trajectories contract onto the true curve.

mod config;
mod solve;
mod stage1;
mod stage2;
mod table;

pub use config::SolverConfig;
pub use solve::{solve_game, solve_game_direct, Solution};
pub use stage1::{tabulate_t1, x_of_t1, x_of_t1_general};
pub use stage2::{
    implicit_boundary_fk, integrate_level_k, rhs_phi_k, Level, LevelDiagnostics, LevelSetup,
};
pub use table::{fmt_sig12, LevelReport, ResidualReport, Sidecar, StageReport, TTable, ValueForms};

use thiserror::Error;

use crate::accuracy::AccuracyError;
use crate::numeric::{InterpError, OdeError, QuadError, RootError};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Accuracy(#[from] AccuracyError),
    #[error("time {0} outside the open interval (0, 1)")]
    Domain(f64),
    #[error("quadrature failed at t={t}: {source}")]
    Quadrature {
        t: f64,
        #[source]
        source: QuadError,
    },
    #[error("root bracket failed for x={x}: {source}")]
    Root {
        x: f64,
        #[source]
        source: RootError,
    },
    #[error("implicit floor: {0}")]
    Floor(String),
    #[error("level {k}: ODE integration failed: {source}")]
    Ode {
        k: usize,
        #[source]
        source: OdeError,
    },
    #[error("level {k}: lower solution crossed the upper one at u={u} (y={y}, z={z})")]
    BracketInversion { k: usize, u: f64, y: f64, z: f64 },
    #[error("level {k}: bracket gap grew by {increase:e} near u={u}")]
    GapIncrease { k: usize, u: f64, increase: f64 },
    #[error(
        "level {k}: gap {gap:e} at the grid start still above tolerance after {halvings} halvings (1−u0={delta:e})"
    )]
    Coverage {
        k: usize,
        gap: f64,
        delta: f64,
        halvings: usize,
    },
    #[error("table: {0}")]
    Table(String),
    #[error("interpolation: {0}")]
    Interp(#[from] InterpError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
