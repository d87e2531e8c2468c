use serde::{Deserialize, Serialize};

use super::SolverError;

/// Knobs of the two-stage algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// First grid node (resource units).
    pub a0: f64,
    /// Last grid node; the gunner's resource.
    pub a: f64,
    /// Grid step.
    pub h: f64,
    /// Start of the second-stage integration in `u = T_1(x)`, just below 1.
    pub u0: f64,
    /// Bracket gap below which the upper and lower solutions are merged.
    pub eps: f64,
    /// Local tolerance of the adaptive integrator.
    pub ode_tol: f64,
    /// Tolerance of the bisection for the implicit floor.
    pub root_tol: f64,
    /// How often `1 − u0` may be halved to cover the grid.
    pub max_delta_halvings: usize,
    /// Interpolation tolerance promised for the tabulated curves.
    pub interp_tol: f64,
    /// Density of the extra nodes between `x = 0` and the grid start.
    pub head_nodes_per_decade: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            a0: 0.05,
            a: 1.0,
            h: 0.01,
            u0: 1.0 - 1e-10,
            eps: 1e-6,
            ode_tol: 1e-9,
            root_tol: 1e-12,
            max_delta_halvings: 20,
            interp_tol: 1e-5,
            head_nodes_per_decade: 20,
        }
    }
}

impl SolverConfig {
    /// Grid `a0, a0+h, …` ending exactly at `a`.
    pub fn new(a0: f64, a: f64, h: f64) -> Self {
        Self {
            a0,
            a,
            h,
            ..Self::default()
        }
    }

    /// Grid of `points` evenly spaced nodes from `a0` to `a`.
    pub fn with_points(a0: f64, a: f64, points: usize) -> Self {
        let h = if points > 1 {
            (a - a0) / (points - 1) as f64
        } else {
            a - a0
        };
        Self::new(a0, a, h)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::Config(m));
        let finite = [
            self.a0,
            self.a,
            self.h,
            self.u0,
            self.eps,
            self.ode_tol,
            self.root_tol,
            self.interp_tol,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("all numeric settings must be finite".into());
        }
        if !(self.a0 > 0.0 && self.a0 < self.a) {
            return bad(format!("need 0 < a0 < a, got a0={} a={}", self.a0, self.a));
        }
        if !(self.h > 0.0 && self.h <= self.a - self.a0 + 1e-12 * self.a) {
            return bad(format!("need 0 < h ≤ a − a0, got h={}", self.h));
        }
        if !(self.u0 > 0.0 && self.u0 < 1.0) {
            return bad(format!("need 0 < u0 < 1, got {}", self.u0));
        }
        if self.eps <= 0.0 || self.ode_tol <= 0.0 || self.root_tol <= 0.0 || self.interp_tol <= 0.0 {
            return bad("tolerances must be positive".into());
        }
        if self.head_nodes_per_decade == 0 {
            return bad("head_nodes_per_decade must be positive".into());
        }
        if self.grid_len() > 1_000_000 {
            return bad(format!("grid of {} nodes is too large", self.grid_len()));
        }
        Ok(())
    }

    fn grid_len(&self) -> usize {
        let n = ((self.a - self.a0) / self.h * (1.0 + 1e-12)).floor();
        if n.is_finite() {
            n as usize + 2
        } else {
            usize::MAX
        }
    }

    /// Grid nodes `a0 + i·h`, with `a` appended when it is not hit exactly.
    pub fn grid(&self) -> Vec<f64> {
        let mut xs = Vec::new();
        let tol = 1e-9 * self.h;
        let mut i = 0usize;
        loop {
            let x = self.a0 + i as f64 * self.h;
            if x >= self.a - tol {
                break;
            }
            xs.push(x);
            i += 1;
        }
        xs.push(self.a);
        xs
    }
}
