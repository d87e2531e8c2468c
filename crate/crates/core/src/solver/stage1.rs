//! First curve: `x(T_1)` is an explicit integral, so `T_1` on the grid
//! comes from inverting a quadrature.

use crate::accuracy::AccuracyFunction;
use crate::numeric::{brent, integrate, QuadOptions};

use super::SolverError;

const QUAD: QuadOptions = QuadOptions {
    abs_tol: 1e-15,
    rel_tol: 1e-13,
    max_intervals: 5000,
};

/// Resource level at which the first curve passes through time `t`, for a
/// sniper with accuracy `p2`:
/// `x(t) = ∫_t^1 −P₂′(τ) / (P₂(τ) ln(1 − P₁(τ))) dτ`.
pub fn x_of_t1_general(
    t: f64,
    p1: &AccuracyFunction,
    p2: &AccuracyFunction,
) -> Result<f64, SolverError> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(SolverError::Domain(t));
    }
    if t == 1.0 {
        return Ok(0.0);
    }
    let identity = p2.is_identity();
    let integrand = |tau: f64| {
        let hazard = if identity {
            1.0 / tau
        } else {
            p2.derivative(tau) / p2.value(tau)
        };
        -hazard / p1.log_survival(tau)
    };
    integrate(integrand, t, 1.0, QUAD)
        .map(|q| q.value)
        .map_err(|source| SolverError::Quadrature { t, source })
}

/// [`x_of_t1_general`] for the normalized game (`P₂(τ) = τ`).
pub fn x_of_t1(t: f64, p1: &AccuracyFunction) -> Result<f64, SolverError> {
    x_of_t1_general(t, p1, &AccuracyFunction::linear())
}

/// Solves `x(T_1) = x_i` for every node; `xs` must be positive and
/// increasing.
pub fn tabulate_t1(
    xs: &[f64],
    p1: &AccuracyFunction,
    p2: &AccuracyFunction,
) -> Result<Vec<f64>, SolverError> {
    let mut out = Vec::with_capacity(xs.len());
    let mut hi = 1.0;
    let mut prev_x = 0.0;
    for &x in xs {
        if !(x > 0.0 && x.is_finite()) || x < prev_x {
            return Err(SolverError::Config(format!(
                "T_1 nodes must be positive and increasing, got {x}"
            )));
        }
        prev_x = x;
        let mut lo = 0.5f64.min(hi);
        loop {
            let xl = x_of_t1_general(lo, p1, p2)?;
            if xl > x {
                break;
            }
            hi = lo;
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(SolverError::Table(format!(
                    "x={x} is beyond the reach of the first curve"
                )));
            }
        }
        let mut failure = None;
        let t = brent(
            |t| match x_of_t1_general(t, p1, p2) {
                Ok(v) => v - x,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            lo,
            hi,
            1e-16,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let t = t.map_err(|source| SolverError::Root { x, source })?;
        out.push(t);
        hi = t;
    }
    Ok(out)
}
