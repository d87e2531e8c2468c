//! T-strategies as decision rules, event-driven simulation of strategy
//! pairs, and scripted deviations for testing the equilibrium.
//!
//! Under a T-strategy nobody acts while `t < T_n(α)`. At `t = T_n(α)` the
//! sniper fires and the gunner spends at intensity `−1/T′_n(α)`, which
//! keeps the state on the curve.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accuracy::DuelParameters;
use crate::payoff::{payoff, tracking_points, ConsumptionPath, PayoffError, Play, SniperSchedule};
use crate::solver::TTable;

/// Resolution of the scan for the first moment a scripted path meets a
/// curve.
const CROSSING_SAMPLES: usize = 4096;

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("protocol violation: t={t} is beyond T_{n}(α={alpha})={target}")]
    ProtocolViolation { t: f64, alpha: f64, n: usize, target: f64 },
    #[error("table solved for (a={table_a}, m={table_m}), game has (a={a}, m={m})")]
    TableMismatch { table_a: f64, table_m: usize, a: f64, m: usize },
    #[error("simulation made no progress for {0} cycles")]
    NoProgress(usize),
    #[error(transparent)]
    Payoff(#[from] PayoffError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Gunner,
    Sniper,
}

/// What the gunner does at the current state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GunnerAction {
    Hold,
    /// Spend at this rate (resource per unit time).
    Spend { intensity: f64 },
    /// Spend everything at `t = 1`.
    Burst,
}

/// What the sniper does at the current state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SniperAction {
    Fire,
    HoldUntil { t: f64 },
}

/// A T-strategy for one side, driven by a solved table.
#[derive(Debug, Clone, Copy)]
pub struct TStrategy<'a> {
    pub table: &'a TTable,
    pub role: Role,
}

impl<'a> TStrategy<'a> {
    pub fn new(table: &'a TTable, role: Role) -> Self {
        Self { table, role }
    }

    fn on_curve(&self, t: f64, alpha: f64, n: usize) -> Result<(f64, bool), StrategyError> {
        let target = self.table.curve(n, alpha);
        let eps = self.table.interp_tol();
        if t > target + eps {
            return Err(StrategyError::ProtocolViolation { t, alpha, n, target });
        }
        Ok((target, (t - target).abs() <= eps))
    }

    /// The gunner's move with `alpha` left against `n` shots at time `t`.
    pub fn gunner_action(&self, t: f64, alpha: f64, n: usize) -> Result<GunnerAction, StrategyError> {
        if alpha <= 0.0 {
            return Ok(GunnerAction::Hold);
        }
        if n == 0 {
            return Ok(if t >= 1.0 { GunnerAction::Burst } else { GunnerAction::Hold });
        }
        let (_, at) = self.on_curve(t, alpha, n)?;
        if !at {
            return Ok(GunnerAction::Hold);
        }
        let slope = self.table.derivative(n, alpha);
        Ok(GunnerAction::Spend { intensity: -1.0 / slope })
    }

    /// The sniper's move with `alpha` facing it and `n` shots left at `t`.
    pub fn sniper_action(&self, t: f64, alpha: f64, n: usize) -> Result<SniperAction, StrategyError> {
        if n == 0 {
            return Ok(SniperAction::HoldUntil { t: 1.0 });
        }
        if alpha <= 0.0 {
            return Ok(if t >= 1.0 { SniperAction::Fire } else { SniperAction::HoldUntil { t: 1.0 } });
        }
        let (target, at) = self.on_curve(t, alpha, n)?;
        Ok(if at { SniperAction::Fire } else { SniperAction::HoldUntil { t: target } })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "script", rename_all = "snake_case")]
pub enum GunnerStrategy {
    T,
    Scripted(ConsumptionPath),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "script", rename_all = "snake_case")]
pub enum SniperStrategy {
    T,
    Scripted(SniperSchedule),
}

/// Who moves when both T-strategies call for action at the same moment.
///
/// A shot is instantaneous while the gunner's spending is a rate, so with
/// `Both` the shot lands before any resource is spent and the realized
/// play coincides with `SniperFirst`. `GunnerFirst` lets the gunner track
/// the curve down to nothing before the sniper fires; `Random` draws at
/// every shared moment between firing and tracking down to a random level.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    GunnerFirst,
    SniperFirst,
    #[default]
    Both,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub tie_break: TieBreak,
    /// Pieces per grid interval of a tracking segment.
    pub refine: usize,
    pub seed: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            tie_break: TieBreak::Both,
            refine: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Continuous spending from `time` to `until`.
    Spend,
    Burst,
    Fire,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub until: f64,
    pub actor: Role,
    pub kind: EventKind,
    pub alpha_before: f64,
    pub alpha_after: f64,
    pub shots_before: usize,
    pub shots_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub play: Play,
    pub payoff: f64,
    pub events: Vec<Event>,
    pub seed: u64,
    pub tie_break: TieBreak,
}

fn check_table(table: &TTable, params: &DuelParameters) -> Result<(), StrategyError> {
    if table.m() != params.m || (table.a() - params.a).abs() > 1e-12 * params.a.max(1.0) {
        return Err(StrategyError::TableMismatch {
            table_a: table.a(),
            table_m: table.m(),
            a: params.a,
            m: params.m,
        });
    }
    Ok(())
}

/// Breakpoints of a path under construction; flat stretches are implicit
/// until the next point is pushed.
struct PathBuilder {
    bp: Vec<(f64, f64)>,
}

impl PathBuilder {
    fn new(a: f64) -> Self {
        Self { bp: vec![(0.0, a)] }
    }

    fn alpha(&self) -> f64 {
        self.bp[self.bp.len() - 1].1
    }

    fn push(&mut self, t: f64, alpha: f64) {
        let (tl, _) = self.bp[self.bp.len() - 1];
        if t > tl {
            self.bp.push((t, alpha.min(self.alpha())));
        }
    }

    /// Follows `T_n` from the current level down to `to`; returns the end time.
    fn track(&mut self, table: &TTable, n: usize, to: f64, refine: usize) -> f64 {
        let from = self.alpha();
        let pts = tracking_points(table, n, from, to, refine);
        for &(t, x) in &pts {
            self.push(t, x);
        }
        if to <= 0.0 {
            1.0
        } else {
            table.curve(n, to)
        }
    }

    fn finish(self, burst: bool) -> Result<ConsumptionPath, PayoffError> {
        ConsumptionPath::new(self.bp, burst)
    }
}

/// The gunner's T-strategy realization against a fixed shot schedule: hold
/// until the current curve is reached, then track it until the next shot.
pub fn gunner_response(
    schedule: &SniperSchedule,
    table: &TTable,
    params: &DuelParameters,
    refine: usize,
) -> Result<ConsumptionPath, StrategyError> {
    check_table(table, params)?;
    let mut path = PathBuilder::new(params.a);
    let m = schedule.len();
    for (i, &s) in schedule.moments().iter().enumerate() {
        let n = m - i;
        let alpha = path.alpha();
        if alpha <= 0.0 {
            break;
        }
        if s > table.curve(n, alpha) {
            let to = table.inverse(n, s).min(alpha);
            path.push(table.curve(n, alpha), alpha);
            path.track(table, n, to, refine);
        }
    }
    Ok(path.finish(true)?)
}

/// First `t ≥ from` with `t ≥ T_n(α(t))` along a fixed path.
fn first_crossing(table: &TTable, path: &ConsumptionPath, n: usize, from: f64) -> f64 {
    let g = |t: f64| t - table.curve(n, path.alpha(t));
    if g(from) >= 0.0 {
        return from;
    }
    let mut knots: Vec<f64> = (0..=CROSSING_SAMPLES)
        .map(|i| from + (1.0 - from) * i as f64 / CROSSING_SAMPLES as f64)
        .chain(path.breakpoints().iter().map(|&(t, _)| t).filter(|&t| t > from))
        .collect();
    knots.sort_by(f64::total_cmp);
    let mut lo = from;
    for &hi in &knots[1..] {
        if g(hi) >= 0.0 {
            let (mut a, mut b) = (lo, hi);
            while b - a > 1e-14 {
                let mid = 0.5 * (a + b);
                if g(mid) >= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            return b;
        }
        lo = hi;
    }
    1.0
}

/// Sniper's T-strategy realization against a fixed consumption path.
pub fn sniper_response(
    path: &ConsumptionPath,
    table: &TTable,
    params: &DuelParameters,
) -> Result<SniperSchedule, StrategyError> {
    check_table(table, params)?;
    let mut moments = Vec::with_capacity(params.m);
    let mut t = 0.0;
    for n in (1..=params.m).rev() {
        t = first_crossing(table, path, n, t);
        moments.push(t);
    }
    Ok(SniperSchedule::new(moments)?)
}

/// Runs a pair of strategies and evaluates the realized play.
pub fn simulate(
    gunner: &GunnerStrategy,
    sniper: &SniperStrategy,
    params: &DuelParameters,
    table: &TTable,
    options: &SimOptions,
) -> Result<SimulationResult, StrategyError> {
    let play = match (gunner, sniper) {
        (GunnerStrategy::Scripted(path), SniperStrategy::Scripted(schedule)) => {
            Play::new(path.clone(), schedule.clone())
        }
        (GunnerStrategy::T, SniperStrategy::Scripted(schedule)) => {
            Play::new(gunner_response(schedule, table, params, options.refine)?, schedule.clone())
        }
        (GunnerStrategy::Scripted(path), SniperStrategy::T) => {
            Play::new(path.clone(), sniper_response(path, table, params)?)
        }
        (GunnerStrategy::T, SniperStrategy::T) => both_t(params, table, options)?,
    };
    let payoff = payoff(&play, params)?;
    Ok(SimulationResult {
        events: event_log(&play),
        play,
        payoff,
        seed: options.seed,
        tie_break: options.tie_break,
    })
}

fn both_t(params: &DuelParameters, table: &TTable, options: &SimOptions) -> Result<Play, StrategyError> {
    check_table(table, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut path = PathBuilder::new(params.a);
    let mut moments = Vec::with_capacity(params.m);
    let mut n = params.m;
    let mut idle = 0;
    while n > 0 {
        let alpha = path.alpha();
        if alpha <= 0.0 {
            moments.extend(std::iter::repeat_n(1.0, n));
            break;
        }
        let tau = table.curve(n, alpha);
        // depth of tracking before the shot: None fires now
        let track_to = match options.tie_break {
            TieBreak::SniperFirst | TieBreak::Both => None,
            TieBreak::GunnerFirst => Some(0.0),
            TieBreak::Random => {
                let u: f64 = rng.gen();
                if u < 0.4 {
                    None
                } else if u < 0.5 {
                    Some(0.0)
                } else {
                    Some(alpha * rng.gen::<f64>())
                }
            }
        };
        match track_to {
            None => {
                path.push(tau, alpha);
                moments.push(tau);
                n -= 1;
                idle = 0;
            }
            Some(to) => {
                path.push(tau, alpha);
                path.track(table, n, to, options.refine);
                if path.alpha() >= alpha {
                    idle += 1;
                    if idle > params.m + 2 {
                        return Err(StrategyError::NoProgress(idle));
                    }
                }
            }
        }
    }
    Ok(Play::new(path.finish(true)?, SniperSchedule::new(moments)?))
}

/// Event log reconstructed from a realized play, in time order.
pub fn event_log(play: &Play) -> Vec<Event> {
    let m = play.schedule.len();
    let mut events = Vec::new();
    for (s0, s1, a0, a1) in play.path.segments() {
        if a1 < a0 {
            let n = play.shots_left(s1);
            events.push(Event {
                time: s0,
                until: s1,
                actor: Role::Gunner,
                kind: EventKind::Spend,
                alpha_before: a0,
                alpha_after: a1,
                shots_before: n,
                shots_after: n,
            });
        }
    }
    for (i, &s) in play.schedule.moments().iter().enumerate() {
        let alpha = play.path.alpha(s);
        events.push(Event {
            time: s,
            until: s,
            actor: Role::Sniper,
            kind: EventKind::Fire,
            alpha_before: alpha,
            alpha_after: alpha,
            shots_before: m - i,
            shots_after: m - i - 1,
        });
    }
    let rest = play.path.remaining_at_end();
    if play.path.terminal_burst() && rest > 0.0 {
        let n = m - play.schedule.moments().iter().filter(|&&s| s < 1.0).count();
        events.push(Event {
            time: 1.0,
            until: 1.0,
            actor: Role::Gunner,
            kind: EventKind::Burst,
            alpha_before: rest,
            alpha_after: 0.0,
            shots_before: n,
            shots_after: n,
        });
    }
    // stable: spending before a shot that ends it, shots in order
    events.sort_by(|a, b| a.until.total_cmp(&b.until).then(a.time.total_cmp(&b.time)));
    events
}

/// A named scripted strategy for one side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation<S> {
    pub name: String,
    pub strategy: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationSuite {
    pub seed: u64,
    pub sniper: Vec<Deviation<SniperSchedule>>,
    pub gunner: Vec<Deviation<ConsumptionPath>>,
}

/// `count` scripted deviations per side, cycling through the families.
pub fn deviation_suite(
    params: &DuelParameters,
    table: &TTable,
    seed: u64,
    count: usize,
) -> Result<DeviationSuite, StrategyError> {
    check_table(table, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, m) = (params.a, params.m);
    let prescribed: Vec<f64> = (1..=m).rev().map(|k| table.curve(k, a)).collect();

    let mut sniper = Vec::with_capacity(count);
    for i in 0..count {
        let (name, moments): (&str, Vec<f64>) = match i % 6 {
            0 => ("postpone_to_end", vec![1.0; m]),
            1 => ("all_at_zero", vec![0.0; m]),
            2 => {
                let f = rng.gen_range(0.0..1.0);
                ("earlier_than_prescribed", prescribed.iter().map(|t| t * f).collect())
            }
            3 => ("uniform_random", (0..m).map(|_| rng.gen_range(0.0..=1.0)).collect()),
            4 => {
                let c: f64 = rng.gen_range(0.0..1.0);
                let moments = (0..m).map(|_| (c + rng.gen_range(-0.02..0.02)).clamp(0.0, 1.0)).collect();
                ("clustered", moments)
            }
            _ => ("all_at_once", vec![rng.gen_range(0.0..=1.0); m]),
        };
        sniper.push(Deviation {
            name: name.into(),
            strategy: SniperSchedule::from_unsorted(moments)?,
        });
    }

    let mut gunner = Vec::with_capacity(count);
    for i in 0..count {
        let (name, path) = match i % 5 {
            0 => ("dump_at_start", ConsumptionPath::new(vec![(0.0, a), (1e-3, 0.0)], false)?),
            1 => {
                let te = rng.gen_range(0.05..0.9);
                ("early_spend", ConsumptionPath::new(vec![(0.0, a), (te, 0.0)], false)?)
            }
            2 => {
                let td: f64 = rng.gen_range(0.3..0.99);
                let te: f64 = rng.gen_range(td..1.0);
                let left = a * rng.gen_range(0.0..1.0);
                let bp = vec![(0.0, a), (td, a), (te.max(td + 1e-6).min(1.0), left)];
                ("delayed_spend_with_burst", ConsumptionPath::new(bp, true)?)
            }
            3 => {
                let t1: f64 = rng.gen_range(0.0..0.8);
                let t2 = rng.gen_range(t1 + 1e-3..1.0);
                let left = a * rng.gen_range(0.0..1.0);
                let bp = vec![(0.0, a), (t1.max(1e-9), a), (t2, left)];
                ("partial_spend_then_freeze", ConsumptionPath::new(bp, false)?)
            }
            _ => {
                let k = rng.gen_range(1..6);
                let mut ts: Vec<f64> = (0..k).map(|_| rng.gen_range(1e-6..1.0)).collect();
                ts.sort_by(f64::total_cmp);
                ts.dedup();
                let mut left: Vec<f64> = (0..ts.len()).map(|_| a * rng.gen_range(0.0..1.0)).collect();
                left.sort_by(|x, y| y.total_cmp(x));
                let bp = std::iter::once((0.0, a)).chain(ts.into_iter().zip(left)).collect();
                ("random_piecewise", ConsumptionPath::new(bp, rng.gen_bool(0.5))?)
            }
        };
        gunner.push(Deviation {
            name: name.into(),
            strategy: path,
        });
    }
    Ok(DeviationSuite { seed, sniper, gunner })
}
