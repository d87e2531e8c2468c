//! Dormand–Prince 5(4) integrator with step rejection hooks and cubic
//! Hermite dense output.
//!
//! The right-hand side may decline to evaluate (returns `None`) and the
//! caller-supplied `admissible` predicate may veto an otherwise accurate
//! step; both shrink the step and retry. Integration runs in either
//! direction.

use thiserror::Error;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// difference between the 5th and 4th order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Magnitude of the first trial step.
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            initial_step: 1e-6,
            max_step: f64::INFINITY,
            min_step: 1e-300,
            max_steps: 500_000,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t={t} (last rejection: {reason})")]
    StepUnderflow { t: f64, reason: &'static str },
    #[error("exceeded {max_steps} steps before reaching t={t_end} (stopped at t={t})")]
    TooManySteps {
        max_steps: usize,
        t: f64,
        t_end: f64,
    },
    #[error("right-hand side undefined at the initial point t={t}")]
    BadStart { t: f64 },
}

/// Accepted nodes of an integration, in integration order.
#[derive(Debug, Clone)]
pub struct DenseSolution<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub dy: Vec<[f64; N]>,
    pub rejected_steps: usize,
}

impl<const N: usize> DenseSolution<N> {
    fn ascending(&self) -> bool {
        self.t.len() < 2 || self.t[1] > self.t[0]
    }

    /// Index `i` with `t` inside the closed span of nodes `i` and `i+1`.
    fn segment(&self, t: f64) -> usize {
        let n = self.t.len();
        debug_assert!(n >= 2);
        let idx = if self.ascending() {
            self.t.partition_point(|&s| s <= t)
        } else {
            self.t.partition_point(|&s| s >= t)
        };
        idx.clamp(1, n - 1) - 1
    }

    pub fn start(&self) -> f64 {
        self.t[0]
    }

    pub fn end(&self) -> f64 {
        *self.t.last().expect("non-empty solution")
    }

    /// True if `t` lies within the integrated span.
    pub fn covers(&self, t: f64) -> bool {
        let (lo, hi) = if self.ascending() {
            (self.start(), self.end())
        } else {
            (self.end(), self.start())
        };
        t >= lo && t <= hi
    }

    /// Cubic Hermite interpolation of the state; clamps outside the span.
    pub fn eval(&self, t: f64) -> [f64; N] {
        if self.t.len() == 1 {
            return self.y[0];
        }
        let i = self.segment(t);
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        let s = ((t - t0) / h).clamp(0.0, 1.0);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let mut out = [0.0; N];
        for (c, o) in out.iter_mut().enumerate() {
            *o = h00 * self.y[i][c]
                + h10 * h * self.dy[i][c]
                + h01 * self.y[i + 1][c]
                + h11 * h * self.dy[i + 1][c];
        }
        out
    }

    /// Derivative of the Hermite interpolant.
    pub fn eval_derivative(&self, t: f64) -> [f64; N] {
        if self.t.len() == 1 {
            return self.dy[0];
        }
        let i = self.segment(t);
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        let s = ((t - t0) / h).clamp(0.0, 1.0);
        let d00 = 6.0 * s * (s - 1.0) / h;
        let d10 = (1.0 - s) * (1.0 - 3.0 * s);
        let d01 = -d00;
        let d11 = s * (3.0 * s - 2.0);
        let mut out = [0.0; N];
        for (c, o) in out.iter_mut().enumerate() {
            *o = d00 * self.y[i][c]
                + d10 * self.dy[i][c]
                + d01 * self.y[i + 1][c]
                + d11 * self.dy[i + 1][c];
        }
        out
    }
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t_end`.
pub fn integrate<const N: usize, F, G>(
    mut rhs: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
    mut admissible: G,
) -> Result<DenseSolution<N>, OdeError>
where
    F: FnMut(f64, &[f64; N]) -> Option<[f64; N]>,
    G: FnMut(f64, &[f64; N]) -> bool,
{
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let k0 = rhs(t0, &y0).ok_or(OdeError::BadStart { t: t0 })?;
    let mut sol = DenseSolution {
        t: vec![t0],
        y: vec![y0],
        dy: vec![k0],
        rejected_steps: 0,
    };
    if t0 == t_end {
        return Ok(sol);
    }

    let mut t = t0;
    let mut y = y0;
    let mut k = [[0.0; N]; 7];
    k[0] = k0;
    let mut h = opts.initial_step.min(opts.max_step).min((t_end - t0).abs());
    let mut last_reason = "none";

    for _ in 0..opts.max_steps {
        let remaining = (t_end - t).abs();
        if remaining <= 0.0 {
            return Ok(sol);
        }
        let mut step = h.min(remaining);
        // avoid leaving a sliver at the end
        if remaining - step < 1e-3 * step {
            step = remaining;
        }
        if step < opts.min_step || t + dir * step == t {
            return Err(OdeError::StepUnderflow {
                t,
                reason: last_reason,
            });
        }
        let hs = dir * step;

        let mut ok = true;
        for s in 1..7 {
            let mut ys = y;
            for c in 0..N {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * k[j][c];
                }
                ys[c] += hs * acc;
            }
            match rhs(t + C[s] * hs, &ys) {
                Some(v) => k[s] = v,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            last_reason = "right-hand side undefined";
            sol.rejected_steps += 1;
            h = step * 0.25;
            continue;
        }

        let mut y_new = y;
        let mut err: f64 = 0.0;
        for c in 0..N {
            let acc: f64 = (0..6).map(|j| A[6][j] * k[j][c]).sum();
            let eacc: f64 = (0..7).map(|j| E[j] * k[j][c]).sum();
            y_new[c] = y[c] + hs * acc;
            let scale = opts.abs_tol + opts.rel_tol * y[c].abs().max(y_new[c].abs());
            err = err.max((hs * eacc).abs() / scale);
        }
        if !err.is_finite() {
            last_reason = "non-finite error estimate";
            sol.rejected_steps += 1;
            h = step * 0.25;
            continue;
        }
        if err > 1.0 {
            last_reason = "local error above tolerance";
            sol.rejected_steps += 1;
            h = step * (0.9 * err.powf(-0.2)).max(0.2);
            continue;
        }
        let t_new = if step == remaining { t_end } else { t + hs };
        if !admissible(t_new, &y_new) {
            last_reason = "state not admissible";
            sol.rejected_steps += 1;
            h = step * 0.5;
            continue;
        }

        // FSAL: the seventh stage is f(t_new, y_new)
        t = t_new;
        y = y_new;
        k[0] = k[6];
        sol.t.push(t);
        sol.y.push(y);
        sol.dy.push(k[6]);
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (step * factor).min(opts.max_step);
        if t == t_end {
            return Ok(sol);
        }
    }
    Err(OdeError::TooManySteps {
        max_steps: opts.max_steps,
        t,
        t_end,
    })
}
