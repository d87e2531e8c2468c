//! Solver for the noisy duel between a gunner with a continuous resource
//! and a sniper with a finite number of shots.
//!
//! Both players see each other's remaining resource at all times. The
//! equilibrium is described by a family of decreasing curves `T_k(x)`:
//! with `x` resource left against `k` shots, nobody acts before time
//! `T_k(x)`. This crate tabulates those curves, evaluates the game value
//! and the payoff of arbitrary plays, simulates strategy pairs, and
//! cross-checks the value against a discrete backward-induction solver.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accuracy;
pub mod numeric;
pub mod oracle;
pub mod payoff;
pub mod solver;
pub mod strategy;

pub use accuracy::{normalize_p2, AccuracyError, AccuracyFunction, DuelParameters, EPS_CLIP};
