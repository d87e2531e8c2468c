//! Monotonicity-preserving piecewise cubic Hermite interpolation.
//!
//! Slopes either come from the Fritsch–Carlson (PCHIP) construction or are
//! supplied by the caller (e.g. exact derivatives from an ODE right-hand
//! side) and then limited so that monotone data stays monotone.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterpError {
    #[error("need at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("abscissae must be strictly increasing (violated at index {0})")]
    NotIncreasing(usize),
    #[error("length mismatch: {xs} abscissae, {ys} ordinates")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

fn validate(x: &[f64], y: &[f64]) -> Result<(), InterpError> {
    if x.len() != y.len() {
        return Err(InterpError::LengthMismatch {
            xs: x.len(),
            ys: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(InterpError::TooFewPoints(x.len()));
    }
    for (i, (&xi, &yi)) in x.iter().zip(y).enumerate() {
        if !xi.is_finite() || !yi.is_finite() {
            return Err(InterpError::NonFinite(i));
        }
    }
    if let Some(i) = x.windows(2).position(|w| w[1] <= w[0]) {
        return Err(InterpError::NotIncreasing(i + 1));
    }
    Ok(())
}

fn secants(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| (yw[1] - yw[0]) / (xw[1] - xw[0]))
        .collect()
}

/// Fritsch–Carlson limiter applied in place.
fn limit_slopes(secant: &[f64], d: &mut [f64]) {
    let n = d.len();
    for i in 0..n {
        let left = if i > 0 { Some(secant[i - 1]) } else { None };
        let right = if i + 1 < n { Some(secant[i]) } else { None };
        let mut zero = false;
        for s in [left, right].into_iter().flatten() {
            if s == 0.0 || s.signum() != d[i].signum() {
                zero = true;
            }
        }
        if let (Some(l), Some(r)) = (left, right) {
            if l.signum() != r.signum() {
                zero = true;
            }
        }
        if zero {
            d[i] = 0.0;
        }
    }
    for (i, &s) in secant.iter().enumerate() {
        if s == 0.0 {
            d[i] = 0.0;
            d[i + 1] = 0.0;
            continue;
        }
        let alpha = d[i] / s;
        let beta = d[i + 1] / s;
        let r2 = alpha * alpha + beta * beta;
        if r2 > 9.0 {
            let tau = 3.0 / r2.sqrt();
            d[i] = tau * alpha * s;
            d[i + 1] = tau * beta * s;
        }
    }
}

impl MonotoneCubic {
    /// PCHIP slopes (weighted harmonic mean in the interior, shape-preserving
    /// three-point formula at the ends).
    pub fn pchip(x: Vec<f64>, y: Vec<f64>) -> Result<Self, InterpError> {
        validate(&x, &y)?;
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let del = secants(&x, &y);
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = del[0];
            d[1] = del[0];
            return Ok(Self { x, y, d });
        }
        for i in 1..n - 1 {
            let (a, b) = (del[i - 1], del[i]);
            if a == 0.0 || b == 0.0 || a.signum() != b.signum() {
                d[i] = 0.0;
            } else {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / a + w2 / b);
            }
        }
        let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
            let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
            if s.signum() != d0.signum() {
                0.0
            } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
                3.0 * d0
            } else {
                s
            }
        };
        d[0] = end(h[0], h[1], del[0], del[1]);
        d[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        Ok(Self { x, y, d })
    }

    /// Hermite interpolant through `(x, y)` with caller-supplied slopes,
    /// limited to preserve monotonicity of the data.
    pub fn with_slopes(x: Vec<f64>, y: Vec<f64>, slopes: Vec<f64>) -> Result<Self, InterpError> {
        validate(&x, &y)?;
        if slopes.len() != x.len() {
            return Err(InterpError::LengthMismatch {
                xs: x.len(),
                ys: slopes.len(),
            });
        }
        let mut d = slopes;
        // non-finite slopes fall back to the neighbouring secant
        let del = secants(&x, &y);
        for i in 0..d.len() {
            if !d[i].is_finite() {
                d[i] = if i < del.len() { del[i] } else { del[i - 1] };
            }
        }
        limit_slopes(&del, &mut d);
        Ok(Self { x, y, d })
    }

    pub fn xs(&self) -> &[f64] {
        &self.x
    }

    pub fn ys(&self) -> &[f64] {
        &self.y
    }

    pub fn slopes(&self) -> &[f64] {
        &self.d
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    fn locate(&self, x: f64) -> (usize, f64, f64) {
        let n = self.x.len();
        let i = self.x.partition_point(|&s| s <= x).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let s = ((x - self.x[i]) / h).clamp(0.0, 1.0);
        (i, h, s)
    }

    /// Value at `x`, clamped to the end values outside the data range.
    pub fn eval(&self, x: f64) -> f64 {
        let (i, h, s) = self.locate(x);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }

    /// Derivative of the interpolant (one-sided at the data ends).
    pub fn derivative(&self, x: f64) -> f64 {
        let (i, h, s) = self.locate(x);
        let d00 = 6.0 * s * (s - 1.0) / h;
        let d10 = (1.0 - s) * (1.0 - 3.0 * s);
        let d11 = s * (3.0 * s - 2.0);
        d00 * (self.y[i] - self.y[i + 1]) + d10 * self.d[i] + d11 * self.d[i + 1]
    }
}
