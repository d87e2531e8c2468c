//! Discrete-time backward induction for the duel, independent of the
//! curve solver.
//!
//! Time runs over `t_i = i/N`; the gunner's resource is cut into `Q` equal
//! packets. At every step both players see the state and move at once:
//! the gunner spends up to `J` packets, the sniper fires one shot or
//! holds. At `t = 1` everything left is used.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accuracy::DuelParameters;

/// Largest `(Q + 1)·(m + 1)·N` the solver will sweep.
pub const MAX_CELL_STEPS: u64 = 20_000_000_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("invalid discrete game: {0}")]
    Invalid(String),
    #[error("state space of {0} cell-steps exceeds the cap {MAX_CELL_STEPS}")]
    TooLarge(u64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteGameSpec {
    pub params: DuelParameters,
    /// Time steps `N`.
    pub steps: usize,
    /// Packets `Q` the resource is split into.
    pub packets: usize,
    /// Most packets the gunner may spend in one step.
    pub max_packets_per_step: usize,
}

impl DiscreteGameSpec {
    pub const DEFAULT_MAX_PACKETS_PER_STEP: usize = 8;

    pub fn new(params: DuelParameters, steps: usize, packets: usize) -> Self {
        Self {
            params,
            steps,
            packets,
            max_packets_per_step: Self::DEFAULT_MAX_PACKETS_PER_STEP,
        }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if self.steps == 0 {
            return Err(OracleError::Invalid("need at least one time step".into()));
        }
        if self.max_packets_per_step == 0 {
            return Err(OracleError::Invalid("the gunner must be able to spend a packet".into()));
        }
        let cells = (self.packets as u64 + 1)
            .saturating_mul(self.params.m as u64 + 1)
            .saturating_mul(self.steps as u64);
        if cells > MAX_CELL_STEPS {
            return Err(OracleError::TooLarge(cells));
        }
        Ok(())
    }

    /// Resource per packet.
    pub fn packet_size(&self) -> f64 {
        if self.packets == 0 {
            0.0
        } else {
            self.params.a / self.packets as f64
        }
    }
}

/// Value of `max_x min(Σ x_r·fire_r, Σ x_r·hold_r)` over mixed rows.
///
/// Two columns mean an optimal mix needs at most two rows, one better
/// against firing and one better against holding.
pub fn two_column_value(fire: &[f64], hold: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for (&f, &h) in fire.iter().zip(hold) {
        best = best.max(f.min(h));
    }
    for (r, (&fr, &hr)) in fire.iter().zip(hold).enumerate() {
        if !(fr > hr) {
            continue;
        }
        for (s, (&fs, &hs)) in fire.iter().zip(hold).enumerate() {
            if s == r || !(fs < hs) {
                continue;
            }
            // weight w on r equalizing both columns: (ad − bc)/(a + d − b − c)
            let den = (fr - hr) - (fs - hs);
            let w = (hs - fs) / den;
            if w > 0.0 && w < 1.0 {
                best = best.max(w * fr + (1.0 - w) * fs);
            }
        }
    }
    best
}

/// Game value of the discretized duel.
pub fn discrete_value(spec: &DiscreteGameSpec) -> Result<f64, OracleError> {
    spec.validate()?;
    let p = &spec.params;
    let (n_steps, q_max, m) = (spec.steps, spec.packets, p.m);
    let (a1, a2) = (p.a1, p.a2);
    let size = spec.packet_size();
    let idx = |q: usize, n: usize| q * (m + 1) + n;

    // t = 1: the gunner spends everything, the sniper fires everything
    let t_end = 1.0;
    let miss_end = p.p2.survival(t_end);
    let mut next = vec![0.0; (q_max + 1) * (m + 1)];
    for q in 0..=q_max {
        let g = spend_success(p, t_end, q as f64 * size);
        for n in 0..=m {
            let h = 1.0 - miss_end.powi(n as i32);
            next[idx(q, n)] = g * (1.0 - h) * a1 - (1.0 - g) * h * a2;
        }
    }

    let j_max = spec.max_packets_per_step;
    let mut cur = vec![0.0; next.len()];
    let mut fire = Vec::with_capacity(j_max + 1);
    let mut hold = Vec::with_capacity(j_max + 1);
    let mut g = vec![0.0; j_max + 1];
    for i in (0..n_steps).rev() {
        let t = i as f64 / n_steps as f64;
        let hit = p.p2.value(t);
        for (j, gj) in g.iter_mut().enumerate() {
            *gj = spend_success(p, t, j as f64 * size);
        }
        for q in 0..=q_max {
            let rows = j_max.min(q);
            for n in 0..=m {
                fire.clear();
                hold.clear();
                for j in 0..=rows {
                    let gj = g[j];
                    hold.push(gj * a1 + (1.0 - gj) * next[idx(q - j, n)]);
                    if n > 0 {
                        let after = next[idx(q - j, n - 1)];
                        fire.push(gj * (1.0 - hit) * a1 - (1.0 - gj) * hit * a2 + (1.0 - gj) * (1.0 - hit) * after);
                    }
                }
                cur[idx(q, n)] = if n == 0 {
                    hold.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                } else {
                    two_column_value(&fire, &hold)
                };
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(next[idx(q_max, m)])
}

/// Chance that spending `amount` at once at time `t` succeeds.
fn spend_success(p: &DuelParameters, t: f64, amount: f64) -> f64 {
    if amount <= 0.0 {
        return 0.0;
    }
    if p.p1.survival(t) <= 0.0 {
        return 1.0;
    }
    (-(amount * p.p1.log_survival(t)).exp_m1()).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub steps: usize,
    pub packets: usize,
    pub discrete: f64,
    pub solver: f64,
    pub gap: f64,
}

/// Discrete values at `N = Q = size` for every size, against `solver_value`.
pub fn convergence_sweep(
    params: &DuelParameters,
    sizes: &[usize],
    max_packets_per_step: usize,
    solver_value: f64,
) -> Result<Vec<ConvergenceRow>, OracleError> {
    sizes
        .iter()
        .map(|&size| {
            let spec = DiscreteGameSpec {
                max_packets_per_step,
                ..DiscreteGameSpec::new(params.clone(), size, size)
            };
            let discrete = discrete_value(&spec)?;
            Ok(ConvergenceRow {
                steps: size,
                packets: size,
                discrete,
                solver: solver_value,
                gap: (discrete - solver_value).abs(),
            })
        })
        .collect()
}

/// CSV with header `N,Q,discrete,solver,gap`.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["N", "Q", "discrete", "solver", "gap"]).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.steps.to_string(),
            r.packets.to_string(),
            format!("{:.12e}", r.discrete),
            format!("{:.12e}", r.solver),
            format!("{:.6e}", r.gap),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::accuracy::AccuracyFunction;

    fn params(a: f64, m: usize) -> DuelParameters {
        let lin = AccuracyFunction::linear();
        DuelParameters::new(lin.clone(), lin, a, m, 1.0, 1.0).unwrap()
    }

    #[test]
    fn stage_game_saddle_and_mix() {
        // matching pennies: value 0 with an even mix
        assert!((two_column_value(&[1.0, -1.0], &[-1.0, 1.0])).abs() < 1e-15);
        // dominant row
        assert_eq!(two_column_value(&[2.0, 0.0], &[3.0, 1.0]), 2.0);
        // 2×2 closed form (ad − bc)/(a + d − b − c) with rows (3, 0), (1, 2)
        let v = two_column_value(&[3.0, 1.0], &[0.0, 2.0]);
        assert!((v - (3.0 * 2.0 - 0.0 * 1.0) / (3.0 + 2.0 - 0.0 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn no_opposition_and_no_resource() {
        let v = discrete_value(&DiscreteGameSpec::new(params(1.0, 0), 200, 50)).unwrap();
        assert!(v >= 1.0 - 1e-9);
        let v = discrete_value(&DiscreteGameSpec::new(params(1.0, 2), 200, 0)).unwrap();
        assert!((v + 1.0).abs() < 1e-12);
    }

    #[test]
    fn oversized_state_space_is_rejected() {
        let spec = DiscreteGameSpec::new(params(1.0, 5), 2_000_000, 2_000_000);
        assert!(matches!(discrete_value(&spec), Err(OracleError::TooLarge(_))));
        assert!(discrete_value(&DiscreteGameSpec::new(params(1.0, 1), 0, 10)).is_err());
    }

    #[test]
    fn sweep_csv_layout() {
        let rows = convergence_sweep(&params(1.0, 1), &[20, 40], 8, 0.22).unwrap();
        let csv = convergence_csv(&rows);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "N,Q,discrete,solver,gap");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("20,20,"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn value_within_prizes(n in 1usize..40, q in 0usize..30, m in 0usize..4) {
            let v = discrete_value(&DiscreteGameSpec::new(params(1.0, m), n, q)).unwrap();
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&v));
        }

        #[test]
        fn more_packets_of_the_same_size_help(n in 1usize..40, q in 0usize..20, m in 0usize..3) {
            let size = 0.05;
            let v = |q: usize| discrete_value(&DiscreteGameSpec::new(params(size * q as f64, m), n, q)).unwrap();
            prop_assert!(v(q + 1) >= v(q) - 1e-12);
        }

        #[test]
        fn more_shots_hurt_the_gunner(n in 1usize..40, q in 0usize..20, m in 0usize..3) {
            let v = |m: usize| discrete_value(&DiscreteGameSpec::new(params(1.0, m), n, q)).unwrap();
            prop_assert!(v(m + 1) <= v(m) + 1e-12);
        }
    }
}
