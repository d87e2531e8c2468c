//! Plays of the duel and the gunner's expected payoff.
//!
//! A play pairs the gunner's remaining-resource path `α(t)` with the
//! sniper's firing moments. The payoff is evaluated chronologically: on
//! each stretch between shots the gunner succeeds with probability
//! `φ = 1 − exp(−∫ ln(1 − P₁) dα)`, then the sniper's shot hits with
//! probability `P₂(η)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accuracy::{AccuracyFunction, DuelParameters};
use crate::numeric::{integrate, QuadError, QuadOptions};
use crate::solver::TTable;

const SEGMENT_QUAD: QuadOptions = QuadOptions {
    abs_tol: 1e-10,
    rel_tol: 1e-12,
    max_intervals: 2000,
};

#[derive(Debug, Error)]
pub enum PayoffError {
    #[error("invalid consumption path: {0}")]
    BadPath(String),
    #[error("invalid sniper schedule: {0}")]
    BadSchedule(String),
    #[error("time {0} outside [0, 1]")]
    Domain(f64),
    #[error("resource increment must be ≥ 0, got {0}")]
    NegativeIncrement(f64),
    #[error("interval [{0}, {1}] is not ordered")]
    BadInterval(f64, f64),
    #[error("play does not match the parameters: {0}")]
    Inconsistent(String),
    #[error("quadrature failed: {0}")]
    Quadrature(#[from] QuadError),
}

/// Gunner's remaining resource: piecewise linear through `breakpoints`,
/// constant after the last one. With `terminal_burst`, whatever is left at
/// `t = 1` is spent there, which guarantees success.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPath")]
pub struct ConsumptionPath {
    breakpoints: Vec<(f64, f64)>,
    terminal_burst: bool,
}

#[derive(Deserialize)]
struct RawPath {
    breakpoints: Vec<(f64, f64)>,
    terminal_burst: bool,
}

impl TryFrom<RawPath> for ConsumptionPath {
    type Error = PayoffError;
    fn try_from(r: RawPath) -> Result<Self, Self::Error> {
        Self::new(r.breakpoints, r.terminal_burst)
    }
}

impl ConsumptionPath {
    pub fn new(breakpoints: Vec<(f64, f64)>, terminal_burst: bool) -> Result<Self, PayoffError> {
        let bad = |m: String| Err(PayoffError::BadPath(m));
        let Some(&(t0, _)) = breakpoints.first() else {
            return bad("no breakpoints".into());
        };
        if t0 != 0.0 {
            return bad(format!("first breakpoint must be at t=0, got {t0}"));
        }
        for &(t, a) in &breakpoints {
            if !(t.is_finite() && a.is_finite()) || !(0.0..=1.0).contains(&t) || a < 0.0 {
                return bad(format!("breakpoint ({t}, {a}) out of range"));
            }
        }
        for w in breakpoints.windows(2) {
            if !(w[1].0 > w[0].0) {
                return bad(format!("times must increase strictly ({} then {})", w[0].0, w[1].0));
            }
            if w[1].1 > w[0].1 {
                return bad(format!("resource grows from {} to {} at t={}", w[0].1, w[1].1, w[1].0));
            }
        }
        Ok(Self {
            breakpoints,
            terminal_burst,
        })
    }

    /// Never spends before `t = 1`.
    pub fn constant(a: f64, terminal_burst: bool) -> Result<Self, PayoffError> {
        Self::new(vec![(0.0, a)], terminal_burst)
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn terminal_burst(&self) -> bool {
        self.terminal_burst
    }

    /// `α(0)`.
    pub fn initial(&self) -> f64 {
        self.breakpoints[0].1
    }

    /// `α(t)`.
    pub fn alpha(&self, t: f64) -> f64 {
        let bp = &self.breakpoints;
        let j = bp.partition_point(|&(s, _)| s <= t);
        if j == 0 {
            return bp[0].1;
        }
        if j == bp.len() {
            return bp[j - 1].1;
        }
        let ((t0, a0), (t1, a1)) = (bp[j - 1], bp[j]);
        a0 + (a1 - a0) * (t - t0) / (t1 - t0)
    }

    /// Resource still held when the clock reaches 1 (before any burst).
    pub fn remaining_at_end(&self) -> f64 {
        self.alpha(1.0)
    }

    /// Linear pieces `(t0, t1, α0, α1)`, the last one held flat up to 1.
    pub fn segments(&self) -> Vec<(f64, f64, f64, f64)> {
        let bp = &self.breakpoints;
        let mut out: Vec<_> = bp.windows(2).map(|w| (w[0].0, w[1].0, w[0].1, w[1].1)).collect();
        let (tl, al) = bp[bp.len() - 1];
        if tl < 1.0 {
            out.push((tl, 1.0, al, al));
        }
        out
    }

    /// Restriction to `[0, t]` followed by holding, no burst.
    pub fn frozen_after(&self, t: f64) -> Result<Self, PayoffError> {
        let mut bp: Vec<_> = self.breakpoints.iter().copied().filter(|&(s, _)| s < t).collect();
        if bp.is_empty() {
            bp.push((0.0, self.initial()));
        }
        let last = bp[bp.len() - 1].0;
        if t > last && t <= 1.0 {
            bp.push((t, self.alpha(t)));
        }
        Self::new(bp, false)
    }
}

/// Sniper's firing moments, stored in chronological order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule")]
pub struct SniperSchedule {
    moments: Vec<f64>,
}

#[derive(Deserialize)]
struct RawSchedule {
    moments: Vec<f64>,
}

impl TryFrom<RawSchedule> for SniperSchedule {
    type Error = PayoffError;
    fn try_from(r: RawSchedule) -> Result<Self, Self::Error> {
        Self::new(r.moments)
    }
}

impl SniperSchedule {
    /// Moments must lie in `[0, 1]` and be nondecreasing.
    pub fn new(moments: Vec<f64>) -> Result<Self, PayoffError> {
        if let Some(t) = moments.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(PayoffError::BadSchedule(format!("moment {t} outside [0, 1]")));
        }
        if moments.windows(2).any(|w| w[1] < w[0]) {
            return Err(PayoffError::BadSchedule("moments must be nondecreasing".into()));
        }
        Ok(Self { moments })
    }

    /// Sorts the moments first.
    pub fn from_unsorted(mut moments: Vec<f64>) -> Result<Self, PayoffError> {
        moments.sort_by(f64::total_cmp);
        Self::new(moments)
    }

    /// `m` shots, all held to the end.
    pub fn all_at_end(m: usize) -> Self {
        Self {
            moments: vec![1.0; m],
        }
    }

    pub fn moments(&self) -> &[f64] {
        &self.moments
    }

    pub fn len(&self) -> usize {
        self.moments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moments.is_empty()
    }

    /// The moment under the conventional reverse index, where
    /// `η_1` is the last shot and `η_m` the first.
    pub fn reverse_indexed(&self, k: usize) -> Option<f64> {
        let m = self.moments.len();
        (1..=m).contains(&k).then(|| self.moments[m - k])
    }
}

/// A realized pair `(α(t), n(t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Play {
    pub path: ConsumptionPath,
    pub schedule: SniperSchedule,
}

impl Play {
    pub fn new(path: ConsumptionPath, schedule: SniperSchedule) -> Self {
        Self { path, schedule }
    }

    /// Shots left at `t`: shots at exactly `t` have not happened yet.
    pub fn shots_left(&self, t: f64) -> usize {
        let m = self.schedule.len();
        m - self.schedule.moments.partition_point(|&s| s < t)
    }
}

/// Probability that spending `dgamma` units at time `t` succeeds.
pub fn single_shot_success(p: &AccuracyFunction, t: f64, dgamma: f64) -> Result<f64, PayoffError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(PayoffError::Domain(t));
    }
    if !(dgamma >= 0.0) {
        return Err(PayoffError::NegativeIncrement(dgamma));
    }
    if dgamma == 0.0 {
        return Ok(0.0);
    }
    if p.survival(t) <= 0.0 {
        return Ok(1.0);
    }
    Ok((-(dgamma * p.log_survival(t)).exp_m1()).clamp(0.0, 1.0))
}

/// Probability that the gunner's spending on `[t1, t2]` succeeds.
pub fn continuous_success_prob(
    path: &ConsumptionPath,
    p1: &AccuracyFunction,
    t1: f64,
    t2: f64,
) -> Result<f64, PayoffError> {
    for t in [t1, t2] {
        if !(0.0..=1.0).contains(&t) {
            return Err(PayoffError::Domain(t));
        }
    }
    if t2 < t1 {
        return Err(PayoffError::BadInterval(t1, t2));
    }
    if path.terminal_burst && t2 >= 1.0 && path.remaining_at_end() > 0.0 {
        return Ok(1.0);
    }
    Ok(-(-log_hazard(path, p1, t1, t2)?).exp_m1())
}

/// `∫_{t1}^{t2} ln(1 − P₁(τ)) dα(τ)` (nonnegative).
fn log_hazard(path: &ConsumptionPath, p1: &AccuracyFunction, t1: f64, t2: f64) -> Result<f64, PayoffError> {
    let mut total = 0.0;
    for (s0, s1, a0, a1) in path.segments() {
        let (lo, hi) = (s0.max(t1), s1.min(t2));
        if hi <= lo || a1 == a0 {
            continue;
        }
        let slope = (a1 - a0) / (s1 - s0);
        let q = integrate(|tau| p1.log_survival(tau), lo, hi, SEGMENT_QUAD)?;
        total += slope * q.value;
    }
    Ok(total.max(0.0))
}

fn check_play(play: &Play, params: &DuelParameters) -> Result<(), PayoffError> {
    let a0 = play.path.initial();
    if (a0 - params.a).abs() > 1e-12 * params.a.max(1.0) {
        return Err(PayoffError::Inconsistent(format!(
            "path starts at α(0)={a0}, resource is {}",
            params.a
        )));
    }
    if play.schedule.len() != params.m {
        return Err(PayoffError::Inconsistent(format!(
            "{} sniper moments for m={}",
            play.schedule.len(),
            params.m
        )));
    }
    Ok(())
}

/// Expected payoff of the gunner.
pub fn payoff(play: &Play, params: &DuelParameters) -> Result<f64, PayoffError> {
    check_play(play, params)?;
    let (a1, a2) = (params.a1, params.a2);
    let mut survive = 1.0;
    let mut k = 0.0;
    let mut prev = 0.0;
    for &s in play.schedule.moments() {
        let phi = continuous_success_prob(&play.path, &params.p1, prev, s)?;
        let hit = params.p2.value(s);
        k += survive * (a1 * phi - a2 * (1.0 - phi) * hit);
        survive *= (1.0 - phi) * (1.0 - hit);
        prev = s;
        if survive == 0.0 {
            return Ok(k);
        }
    }
    let phi = continuous_success_prob(&play.path, &params.p1, prev, 1.0)?;
    Ok(k + survive * a1 * phi)
}

/// Time-resource points of the curve `t = T_k(α)` for `α` running from
/// `from` down to `to`, through every table node in between. Each interval
/// is split into `refine` pieces, and pieces are halved further until the
/// chord stays within a quarter of the table's tolerance of the curve
/// (measured in time, where the curve is steep near `α = 0`).
pub fn tracking_points(table: &TTable, k: usize, from: f64, to: f64, refine: usize) -> Vec<(f64, f64)> {
    let refine = refine.max(1);
    let tol = 0.25 * table.interp_tol();
    let curve = |a: f64| if a <= 0.0 { 1.0 } else { table.curve(k, a) };
    let mut knots = vec![from];
    knots.extend(table.nodes().iter().rev().copied().filter(|&x| x < from && x > to));
    knots.push(to);

    let mut out = vec![(curve(from), from)];
    for w in knots.windows(2) {
        for i in 1..=refine {
            let a0 = w[0] + (w[1] - w[0]) * (i - 1) as f64 / refine as f64;
            let a1 = w[0] + (w[1] - w[0]) * i as f64 / refine as f64;
            push_chords(&curve, a0, a1, tol, 40, &mut out);
        }
    }
    out.dedup_by(|b, a| b.0 <= a.0);
    out
}

// Appends the end of `[a0, a1]` (α descending), first bisecting while the
// chord misses the curve by more than `tol` at interior times.
fn push_chords(curve: &dyn Fn(f64) -> f64, a0: f64, a1: f64, tol: f64, depth: u32, out: &mut Vec<(f64, f64)>) {
    let (t0, t1) = (curve(a0), curve(a1));
    let off = [0.25, 0.5, 0.75].iter().any(|&s| {
        let t = t0 + s * (t1 - t0);
        let a = a0 + s * (a1 - a0);
        (t - curve(a)).abs() > tol
    });
    let am = 0.5 * (a0 + a1);
    if off && depth > 0 && am < a0 && am > a1 {
        push_chords(curve, a0, am, tol, depth - 1, out);
        push_chords(curve, am, a1, tol, depth - 1, out);
    } else {
        out.push((t1, a1));
    }
}

/// The two extreme T-plays: (1) the gunner holds and bursts at the end
/// while the sniper fires at `T_m(a), …, T_1(a)`; (2) the gunner tracks
/// `T_m` down to nothing while the sniper holds every shot to `t = 1`.
pub fn simplest_t_plays(table: &TTable, params: &DuelParameters, refine: usize) -> Result<(Play, Play), PayoffError> {
    let (a, m) = (params.a, params.m);
    if table.m() != m || (table.a() - a).abs() > 1e-12 * a.max(1.0) {
        return Err(PayoffError::Inconsistent(format!(
            "table solved for (a={}, m={}), play needs (a={a}, m={m})",
            table.a(),
            table.m()
        )));
    }
    let burst_hold = ConsumptionPath::constant(a, a > 0.0)?;
    if m == 0 {
        let play = Play::new(burst_hold, SniperSchedule::new(Vec::new())?);
        return Ok((play.clone(), play));
    }
    let moments: Vec<f64> = (1..=m).rev().map(|k| table.curve(k, a)).collect();
    let play1 = Play::new(burst_hold, SniperSchedule::new(moments)?);

    let mut bp = vec![(0.0, a)];
    for (t, x) in tracking_points(table, m, a, 0.0, refine) {
        if t > bp[bp.len() - 1].0 {
            bp.push((t, x));
        }
    }
    let play2 = Play::new(ConsumptionPath::new(bp, false)?, SniperSchedule::all_at_end(m));
    Ok((play1, play2))
}

/// Why a play fails to be a T-play for `table` (empty if it is one).
pub fn t_play_violations(play: &Play, table: &TTable) -> Vec<String> {
    let eps = table.interp_tol();
    let m = play.schedule.len();
    let mut out = Vec::new();
    let target = |n: usize, alpha: f64| table.curve(n, alpha.min(table.a()));

    // sniper: each shot exactly on its curve, processed in order
    for (i, &s) in play.schedule.moments().iter().enumerate() {
        let n = m - i;
        let alpha = play.path.alpha(s);
        if alpha > 0.0 && n > 0 {
            let t = target(n, alpha);
            if (s - t).abs() > eps {
                out.push(format!("shot {} at t={s} but T_{n}(α={alpha})={t}", i + 1));
            }
        }
    }

    // sample every piece of the path
    for (s0, s1, a0, a1) in play.path.segments() {
        let spending = a1 < a0;
        let samples = 16;
        for j in 0..=samples {
            let t = s0 + (s1 - s0) * j as f64 / samples as f64;
            let alpha = play.path.alpha(t);
            let n = play.shots_left(t);
            if alpha <= 0.0 || n == 0 {
                continue;
            }
            let tn = target(n, alpha);
            if t > tn + eps {
                out.push(format!("t={t} beyond T_{n}(α={alpha})={tn}"));
            } else if spending && j > 0 && j < samples && (t - tn).abs() > eps {
                out.push(format!("gunner spends at t={t} off the curve T_{n}(α={alpha})={tn}"));
            }
        }
    }
    if play.path.terminal_burst() && play.path.remaining_at_end() > 0.0 && play.shots_left(1.0) > 0 {
        let (alpha, n) = (play.path.remaining_at_end(), play.shots_left(1.0));
        out.push(format!("burst at t=1 while T_{n}(α={alpha})={} < 1", target(n, alpha)));
    }
    out
}

/// Whether `t ≤ T_{n(t)}(α(t))` throughout, with equality at every action.
pub fn is_t_play(play: &Play, table: &TTable) -> bool {
    t_play_violations(play, table).is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lin() -> AccuracyFunction {
        AccuracyFunction::linear()
    }

    #[test]
    fn single_shot_examples() {
        let p = lin();
        assert_eq!(single_shot_success(&p, 0.3, 0.0).unwrap(), 0.0);
        assert_eq!(single_shot_success(&p, 1.0, 1.0).unwrap(), 1.0);
        assert!((single_shot_success(&p, 0.5, 2.0).unwrap() - 0.75).abs() < 1e-15);
        assert!(single_shot_success(&p, 0.5, -1.0).is_err());
        assert!(single_shot_success(&p, 1.5, 1.0).is_err());
    }

    #[test]
    fn continuous_success_examples() {
        let p = lin();
        let flat = ConsumptionPath::constant(1.0, false).unwrap();
        assert_eq!(continuous_success_prob(&flat, &p, 0.2, 0.7).unwrap(), 0.0);
        let ramp = ConsumptionPath::new(vec![(0.0, 1.0), (1.0, 0.0)], false).unwrap();
        let phi = continuous_success_prob(&ramp, &p, 0.0, 1.0).unwrap();
        assert!((phi - (1.0 - (-1.0f64).exp())).abs() < 1e-9, "{phi}");
        assert!((phi - 0.632121).abs() < 1e-6);
        let burst = ConsumptionPath::constant(0.5, true).unwrap();
        assert_eq!(continuous_success_prob(&burst, &p, 0.3, 1.0).unwrap(), 1.0);
        assert_eq!(continuous_success_prob(&burst, &p, 0.3, 0.9).unwrap(), 0.0);
        assert!(continuous_success_prob(&ramp, &p, 0.5, 0.4).is_err());
    }

    #[test]
    fn payoff_anchor_cases() {
        let params = DuelParameters::linear(1.0, 0);
        let burst = Play::new(ConsumptionPath::constant(1.0, true).unwrap(), SniperSchedule::new(vec![]).unwrap());
        assert_eq!(payoff(&burst, &params).unwrap(), 1.0);

        let params0 = DuelParameters::linear(0.0, 0);
        let nothing = Play::new(ConsumptionPath::constant(0.0, true).unwrap(), SniperSchedule::new(vec![]).unwrap());
        assert_eq!(payoff(&nothing, &params0).unwrap(), 0.0);

        let params1 = DuelParameters::linear(1.0, 1);
        let idle = Play::new(ConsumptionPath::constant(1.0, false).unwrap(), SniperSchedule::all_at_end(1));
        assert_eq!(payoff(&idle, &params1).unwrap(), -1.0);

        let ramp = Play::new(
            ConsumptionPath::new(vec![(0.0, 1.0), (1.0, 0.0)], false).unwrap(),
            SniperSchedule::all_at_end(1),
        );
        let k = payoff(&ramp, &params1).unwrap();
        assert!((k - (1.0 - 2.0 * (-1.0f64).exp())).abs() < 1e-9, "{k}");
        assert!((k - 0.264241).abs() < 1e-6);
    }

    #[test]
    fn inconsistent_plays_are_rejected() {
        let params = DuelParameters::linear(1.0, 2);
        let wrong_a = Play::new(ConsumptionPath::constant(0.5, true).unwrap(), SniperSchedule::all_at_end(2));
        assert!(payoff(&wrong_a, &params).is_err());
        let wrong_m = Play::new(ConsumptionPath::constant(1.0, true).unwrap(), SniperSchedule::all_at_end(1));
        assert!(payoff(&wrong_m, &params).is_err());
    }

    #[test]
    fn path_validation() {
        assert!(ConsumptionPath::new(vec![(0.1, 1.0)], false).is_err());
        assert!(ConsumptionPath::new(vec![(0.0, 1.0), (0.5, 1.2)], false).is_err());
        assert!(ConsumptionPath::new(vec![(0.0, 1.0), (0.5, -0.1)], false).is_err());
        assert!(ConsumptionPath::new(vec![(0.0, 1.0), (0.0, 0.5)], false).is_err());
        assert!(SniperSchedule::new(vec![0.5, 0.2]).is_err());
        let s = SniperSchedule::from_unsorted(vec![0.5, 0.2, 0.9]).unwrap();
        assert_eq!(s.moments(), &[0.2, 0.5, 0.9]);
        assert_eq!(s.reverse_indexed(1), Some(0.9));
        assert_eq!(s.reverse_indexed(3), Some(0.2));
    }

    #[test]
    fn shots_left_is_left_continuous() {
        let play = Play::new(
            ConsumptionPath::constant(1.0, false).unwrap(),
            SniperSchedule::new(vec![0.3, 0.6]).unwrap(),
        );
        assert_eq!(play.shots_left(0.0), 2);
        assert_eq!(play.shots_left(0.3), 2);
        assert_eq!(play.shots_left(0.30001), 1);
        assert_eq!(play.shots_left(1.0), 0);
    }

    #[test]
    fn play_round_trips_through_json() {
        let play = Play::new(
            ConsumptionPath::new(vec![(0.0, 1.0), (0.4, 1.0), (0.9, 0.2)], true).unwrap(),
            SniperSchedule::new(vec![0.3, 0.6]).unwrap(),
        );
        let json = serde_json::to_string(&play).unwrap();
        let back: Play = serde_json::from_str(&json).unwrap();
        assert_eq!(back, play);
        let broken = json.replace("0.6", "0.1");
        assert!(serde_json::from_str::<Play>(&broken).is_err());
    }

    fn random_path() -> impl Strategy<Value = ConsumptionPath> {
        (prop::collection::vec((0.01f64..1.0, 0.0f64..1.0), 1..6), any::<bool>()).prop_map(|(steps, burst)| {
            let total: f64 = steps.iter().map(|s| s.0).sum::<f64>() * 1.1;
            let mut bp = vec![(0.0, 1.5)];
            let (mut t, mut a) = (0.0, 1.5);
            for (dt, frac) in steps {
                t += dt / total;
                a *= frac;
                bp.push((t, a));
            }
            ConsumptionPath::new(bp, burst).unwrap()
        })
    }

    proptest! {
        #[test]
        fn success_probability_is_monotone_in_the_interval(
            path in random_path(), t1 in 0.0f64..1.0, w1 in 0.0f64..1.0, w2 in 0.0f64..1.0,
        ) {
            let p = lin();
            let t2 = t1 + (1.0 - t1) * w1;
            let t3 = t2 + (1.0 - t2) * w2;
            let inner = continuous_success_prob(&path, &p, t1, t2).unwrap();
            let outer = continuous_success_prob(&path, &p, t1, t3).unwrap();
            prop_assert!(outer >= inner - 1e-12);
            // splitting identity: survival multiplies over adjacent stretches
            let rest = continuous_success_prob(&path, &p, t2, t3).unwrap();
            prop_assert!(((1.0 - outer) - (1.0 - inner) * (1.0 - rest)).abs() < 1e-10);
        }

        #[test]
        fn steeper_spending_never_lowers_success(frac in 0.0f64..1.0, extra in 0.0f64..1.0) {
            let p = lin();
            let mild = ConsumptionPath::new(vec![(0.0, 1.0), (0.5, 1.0), (0.9, frac)], false).unwrap();
            let steep = ConsumptionPath::new(vec![(0.0, 1.0), (0.5, 1.0), (0.9, frac * extra)], false).unwrap();
            let a = continuous_success_prob(&mild, &p, 0.0, 1.0).unwrap();
            let b = continuous_success_prob(&steep, &p, 0.0, 1.0).unwrap();
            prop_assert!(b >= a - 1e-12);
        }

        #[test]
        fn payoff_stays_within_prizes(
            path in random_path(),
            mut shots in prop::collection::vec(0.0f64..=1.0, 0..5),
            a1 in 0.1f64..5.0, a2 in 0.1f64..5.0,
        ) {
            shots.sort_by(f64::total_cmp);
            let m = shots.len();
            let params = DuelParameters::new(lin(), AccuracyFunction::power(2.0).unwrap(), 1.5, m, a1, a2).unwrap();
            let play = Play::new(path, SniperSchedule::new(shots).unwrap());
            let k = payoff(&play, &params).unwrap();
            prop_assert!(k >= -a2 - 1e-12 && k <= a1 + 1e-12);
        }

        #[test]
        fn payoff_recursion_matches_three_stretch_split(
            path in random_path(), s1 in 0.0f64..1.0, w in 0.0f64..1.0,
        ) {
            // two shots: evaluate the recursion by hand from stretch probabilities
            let params = DuelParameters::new(lin(), lin(), 1.5, 2, 1.0, 2.0).unwrap();
            let s2 = s1 + (1.0 - s1) * w;
            let play = Play::new(path.clone(), SniperSchedule::new(vec![s1, s2]).unwrap());
            let p = lin();
            let f1 = continuous_success_prob(&path, &p, 0.0, s1).unwrap();
            let f2 = continuous_success_prob(&path, &p, s1, s2).unwrap();
            let f3 = continuous_success_prob(&path, &p, s2, 1.0).unwrap();
            let by_hand = f1 - 2.0 * (1.0 - f1) * s1
                + (1.0 - f1) * (1.0 - s1) * (f2 - 2.0 * (1.0 - f2) * s2
                + (1.0 - f2) * (1.0 - s2) * f3);
            prop_assert!((payoff(&play, &params).unwrap() - by_hand).abs() < 1e-12);
        }
    }
}
