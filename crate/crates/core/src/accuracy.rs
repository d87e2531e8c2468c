//! Accuracy (hit-probability) curves and the duel's parameter set.
//!
//! A curve `P` maps time `t ∈ [0,1]` to the probability that one unit of
//! resource spent at `t` succeeds. Survival `1 − P` and its logarithm are
//! exposed separately because the solver leans heavily on `ln(1 − P₁)`,
//! which diverges at `t = 1`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{brent, MonotoneCubic};

/// Distance from `t = 1` at which logarithmic evaluations are clamped.
pub const EPS_CLIP: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum AccuracyError {
    #[error("time {0} outside [0, 1]")]
    Domain(f64),
    #[error("power exponent must be finite and positive, got {0}")]
    BadExponent(f64),
    #[error("tabulated curve invalid: {0}")]
    BadTable(String),
    #[error("accuracy curve is not strictly increasing, cannot be inverted")]
    NotInvertible,
    #[error("cannot parse accuracy spec {0:?} (expected power:<c> or csv:<path>)")]
    BadFlag(String),
    #[error("invalid duel parameters: {0}")]
    BadParameters(String),
    #[error("reading {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

/// Tabulated curve: shape-preserving cubic through sample points.
#[derive(Debug, Clone)]
pub struct Tabulated {
    points: Vec<(f64, f64)>,
    curve: MonotoneCubic,
    strictly_increasing: bool,
}

impl Tabulated {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, AccuracyError> {
        let bad = |m: &str| Err(AccuracyError::BadTable(m.to_string()));
        if points.len() < 2 {
            return bad("need at least two points");
        }
        if points.iter().any(|(t, p)| !t.is_finite() || !p.is_finite()) {
            return bad("non-finite entry");
        }
        let (t0, p0) = points[0];
        let (tn, pn) = points[points.len() - 1];
        if t0 != 0.0 || tn != 1.0 {
            return bad("abscissae must start at 0 and end at 1");
        }
        if p0 != 0.0 || pn != 1.0 {
            return bad("curve must satisfy P(0)=0 and P(1)=1");
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return bad("abscissae must be strictly increasing");
        }
        if points.windows(2).any(|w| w[1].1 < w[0].1) {
            return bad("values must be nondecreasing");
        }
        if points[..points.len() - 1].iter().any(|&(_, p)| p >= 1.0) {
            return bad("P(t) must stay below 1 for t < 1");
        }
        let strictly_increasing = points.windows(2).all(|w| w[1].1 > w[0].1);
        let (x, y): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        let curve = MonotoneCubic::pchip(x, y).map_err(|e| AccuracyError::BadTable(e.to_string()))?;
        Ok(Self {
            points,
            curve,
            strictly_increasing,
        })
    }

    /// Reads a headerless or headed two-column CSV of `(t, P(t))`.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self, AccuracyError> {
        let path = path.as_ref();
        let err = |source| AccuracyError::Csv {
            path: path.display().to_string(),
            source,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(err)?;
        let mut points = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(err)?;
            if rec.len() != 2 {
                return Err(AccuracyError::BadTable(format!(
                    "row {} has {} columns, expected 2",
                    i + 1,
                    rec.len()
                )));
            }
            let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
            match parsed {
                (Ok(t), Ok(p)) => points.push((t, p)),
                // tolerate a single header line
                _ if i == 0 => continue,
                _ => {
                    return Err(AccuracyError::BadTable(format!(
                        "row {} is not numeric",
                        i + 1
                    )))
                }
            }
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

/// A monotone hit-probability curve on `[0, 1]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "AccuracySpec", into = "AccuracySpec")]
pub enum AccuracyFunction {
    /// `P(t) = t^c`.
    Power { c: f64 },
    Tabulated(Tabulated),
    /// `P(τ) = outer(through⁻¹(τ))`, the result of re-timing a curve.
    Pullback {
        outer: Box<AccuracyFunction>,
        through: Box<AccuracyFunction>,
    },
}

/// Serialized form of [`AccuracyFunction`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AccuracySpec {
    Power {
        c: f64,
    },
    Tabulated {
        points: Vec<(f64, f64)>,
    },
    Pullback {
        outer: Box<AccuracySpec>,
        through: Box<AccuracySpec>,
    },
}

impl TryFrom<AccuracySpec> for AccuracyFunction {
    type Error = AccuracyError;

    fn try_from(spec: AccuracySpec) -> Result<Self, Self::Error> {
        match spec {
            AccuracySpec::Power { c } => Self::power(c),
            AccuracySpec::Tabulated { points } => Ok(Self::Tabulated(Tabulated::new(points)?)),
            AccuracySpec::Pullback { outer, through } => {
                let outer = Self::try_from(*outer)?;
                let through = Self::try_from(*through)?;
                outer.pullback(&through)
            }
        }
    }
}

impl From<AccuracyFunction> for AccuracySpec {
    fn from(f: AccuracyFunction) -> Self {
        match f {
            AccuracyFunction::Power { c } => AccuracySpec::Power { c },
            AccuracyFunction::Tabulated(t) => AccuracySpec::Tabulated { points: t.points },
            AccuracyFunction::Pullback { outer, through } => AccuracySpec::Pullback {
                outer: Box::new((*outer).into()),
                through: Box::new((*through).into()),
            },
        }
    }
}

impl fmt::Display for AccuracyFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Power { c } => write!(f, "power:{c}"),
            Self::Tabulated(t) => write!(f, "tabulated[{} points]", t.points.len()),
            Self::Pullback { outer, through } => write!(f, "({outer})∘({through})⁻¹"),
        }
    }
}

impl FromStr for AccuracyFunction {
    type Err = AccuracyError;

    /// Parses `power:<c>` or `csv:<path>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AccuracyError::BadFlag(s.to_string());
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        match kind.trim() {
            "power" => {
                let c: f64 = arg.trim().parse().map_err(|_| bad())?;
                Self::power(c)
            }
            "csv" if !arg.trim().is_empty() => Ok(Self::Tabulated(Tabulated::from_csv(arg.trim())?)),
            _ => Err(bad()),
        }
    }
}

impl AccuracyFunction {
    pub fn power(c: f64) -> Result<Self, AccuracyError> {
        if c.is_finite() && c > 0.0 {
            Ok(Self::Power { c })
        } else {
            Err(AccuracyError::BadExponent(c))
        }
    }

    pub fn linear() -> Self {
        Self::Power { c: 1.0 }
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self, AccuracyError> {
        Ok(Self::Tabulated(Tabulated::new(points)?))
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Self::Power { c } if *c == 1.0)
    }

    pub fn is_strictly_increasing(&self) -> bool {
        match self {
            Self::Power { .. } => true,
            Self::Tabulated(t) => t.strictly_increasing,
            Self::Pullback { outer, .. } => outer.is_strictly_increasing(),
        }
    }

    /// `P(t)`; `t` is clamped into `[0, 1]`.
    pub fn value(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Self::Power { c } => t.powf(*c),
            Self::Tabulated(tab) => tab.curve.eval(t).clamp(0.0, 1.0),
            Self::Pullback { outer, through } => outer.value(through.inverse_unchecked(t)),
        }
    }

    /// `1 − P(t)`, computed without cancellation for the power family.
    pub fn survival(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Self::Power { c } => {
                if t == 0.0 {
                    1.0
                } else {
                    -(c * t.ln()).exp_m1()
                }
            }
            Self::Tabulated(_) => 1.0 - self.value(t),
            Self::Pullback { outer, through } => outer.survival(through.inverse_unchecked(t)),
        }
    }

    /// `ln(1 − P(t))` with `t` clamped to `1 − EPS_CLIP`.
    pub fn log_survival(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0 - EPS_CLIP);
        match self {
            Self::Power { c } => {
                if t == 0.0 {
                    return 0.0;
                }
                let pc = (c * t.ln()).exp();
                if pc < 0.5 {
                    (-pc).ln_1p()
                } else {
                    (-(c * t.ln()).exp_m1()).ln()
                }
            }
            _ => self.survival(t).ln(),
        }
    }

    /// `P′(t)`; one-sided at the ends.
    pub fn derivative(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Self::Power { c } => {
                if *c == 1.0 {
                    1.0
                } else {
                    c * t.powf(c - 1.0)
                }
            }
            Self::Tabulated(tab) => tab.curve.derivative(t),
            Self::Pullback { outer, through } => {
                let s = through.inverse_unchecked(t);
                outer.derivative(s) / through.derivative(s)
            }
        }
    }

    /// `P⁻¹(y)`; for flat stretches of a nondecreasing curve some preimage
    /// is returned.
    pub fn inverse(&self, y: f64) -> Result<f64, AccuracyError> {
        if !(0.0..=1.0).contains(&y) {
            return Err(AccuracyError::Domain(y));
        }
        Ok(self.inverse_unchecked(y))
    }

    fn inverse_unchecked(&self, y: f64) -> f64 {
        let y = y.clamp(0.0, 1.0);
        match self {
            Self::Power { c } => {
                if *c == 1.0 {
                    y
                } else {
                    y.powf(1.0 / c)
                }
            }
            Self::Tabulated(tab) => {
                if y <= 0.0 {
                    return 0.0;
                }
                if y >= 1.0 {
                    return 1.0;
                }
                brent(|t| tab.curve.eval(t) - y, 0.0, 1.0, 1e-15).unwrap_or(y)
            }
            Self::Pullback { outer, through } => through.value(outer.inverse_unchecked(y)),
        }
    }

    fn check(t: f64) -> Result<f64, AccuracyError> {
        if (0.0..=1.0).contains(&t) {
            Ok(t)
        } else {
            Err(AccuracyError::Domain(t))
        }
    }

    pub fn checked_value(&self, t: f64) -> Result<f64, AccuracyError> {
        Self::check(t).map(|t| self.value(t))
    }

    pub fn checked_survival(&self, t: f64) -> Result<f64, AccuracyError> {
        Self::check(t).map(|t| self.survival(t))
    }

    pub fn checked_log_survival(&self, t: f64) -> Result<f64, AccuracyError> {
        Self::check(t).map(|t| self.log_survival(t))
    }

    /// The curve re-timed through `through`: `τ ↦ self(through⁻¹(τ))`.
    pub fn pullback(&self, through: &AccuracyFunction) -> Result<Self, AccuracyError> {
        if !through.is_strictly_increasing() {
            return Err(AccuracyError::NotInvertible);
        }
        Ok(match (self, through) {
            (_, t) if t.is_identity() => self.clone(),
            (Self::Power { c: c1 }, Self::Power { c: c2 }) => Self::Power { c: c1 / c2 },
            _ => Self::Pullback {
                outer: Box::new(self.clone()),
                through: Box::new(through.clone()),
            },
        })
    }
}

/// Everything that defines one instance of the duel.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawParameters")]
pub struct DuelParameters {
    /// Gunner's accuracy.
    pub p1: AccuracyFunction,
    /// Sniper's accuracy.
    pub p2: AccuracyFunction,
    /// Gunner's resource.
    pub a: f64,
    /// Sniper's shots.
    pub m: usize,
    /// Prize for a gunner win.
    pub a1: f64,
    /// Prize for a sniper win.
    pub a2: f64,
}

#[derive(Deserialize)]
struct RawParameters {
    p1: AccuracyFunction,
    p2: AccuracyFunction,
    a: f64,
    m: usize,
    a1: f64,
    a2: f64,
}

impl TryFrom<RawParameters> for DuelParameters {
    type Error = AccuracyError;
    fn try_from(r: RawParameters) -> Result<Self, Self::Error> {
        DuelParameters::new(r.p1, r.p2, r.a, r.m, r.a1, r.a2)
    }
}

impl DuelParameters {
    pub fn new(
        p1: AccuracyFunction,
        p2: AccuracyFunction,
        a: f64,
        m: usize,
        a1: f64,
        a2: f64,
    ) -> Result<Self, AccuracyError> {
        let bad = |m: String| Err(AccuracyError::BadParameters(m));
        if !(a.is_finite() && a >= 0.0) {
            return bad(format!("gunner resource must be finite and ≥ 0, got {a}"));
        }
        if !(a1.is_finite() && a1 > 0.0 && a2.is_finite() && a2 > 0.0) {
            return bad(format!("prizes must be positive, got ({a1}, {a2})"));
        }
        if !p2.is_strictly_increasing() {
            return bad("sniper accuracy must be strictly increasing".into());
        }
        Ok(Self {
            p1,
            p2,
            a,
            m,
            a1,
            a2,
        })
    }

    /// Symmetric linear-accuracy game with unit prizes.
    pub fn linear(a: f64, m: usize) -> Self {
        Self::new(
            AccuracyFunction::linear(),
            AccuracyFunction::linear(),
            a,
            m,
            1.0,
            1.0,
        )
        .expect("valid by construction")
    }

    pub fn with_resources(&self, a: f64, m: usize) -> Result<Self, AccuracyError> {
        Self::new(self.p1.clone(), self.p2.clone(), a, m, self.a1, self.a2)
    }
}

/// A game re-timed so that the sniper's accuracy is the identity.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub params: DuelParameters,
    /// Original sniper accuracy; curves map back via `t = back_map⁻¹(τ)`.
    pub back_map: AccuracyFunction,
}

impl Normalized {
    /// Maps a normalized time back to original time.
    pub fn to_original(&self, tau: f64) -> f64 {
        self.back_map.inverse_unchecked(tau)
    }
}

/// Changes time to `τ = P₂(t)`, leaving resources and prizes alone.
pub fn normalize_p2(params: &DuelParameters) -> Result<Normalized, AccuracyError> {
    let p1 = params.p1.pullback(&params.p2)?;
    Ok(Normalized {
        params: DuelParameters {
            p1,
            p2: AccuracyFunction::linear(),
            ..params.clone()
        },
        back_map: params.p2.clone(),
    })
}
