#![allow(clippy::excessive_precision)]

use std::sync::OnceLock;

use noisy_duel::solver::{solve_game, solve_game_direct, Solution, SolverConfig, TTable};
use noisy_duel::{AccuracyFunction, DuelParameters};
use proptest::prelude::*;

// independent high-precision quadrature and inversion for P₁(t) = t
const T1_AT_ONE: f64 = 0.389865414707390386;
const V1_AT_ONE: f64 = 0.220269170585219228;

fn linear_game(a: f64, m: usize) -> DuelParameters {
    DuelParameters::linear(a, m)
}

fn three_shots() -> &'static Solution {
    static SOL: OnceLock<Solution> = OnceLock::new();
    SOL.get_or_init(|| solve_game(&linear_game(1.0, 3), &SolverConfig::new(0.05, 1.0, 0.01)).unwrap())
}

#[test]
fn single_shot_value_matches_reference() {
    let sol = solve_game(&linear_game(1.0, 1), &SolverConfig::new(0.05, 1.0, 0.01)).unwrap();
    let t1 = sol.table.curve(1, 1.0);
    assert!((t1 - T1_AT_ONE).abs() < 1e-10, "T_1(1) = {t1}");
    // one factor: v_1(a) = (A₁ + A₂)(1 − P₂(T_1(a))) − A₂
    assert!((sol.value() - (2.0 * (1.0 - t1) - 1.0)).abs() < 1e-15);
    assert!((sol.value() - V1_AT_ONE).abs() < 1e-9);
    assert!(sol.table.stage().levels.is_empty());
}

#[test]
fn no_sniper_means_the_gunner_wins() {
    let sol = solve_game(&linear_game(1.0, 0), &SolverConfig::new(0.05, 1.0, 0.01)).unwrap();
    assert_eq!(sol.table.m(), 0);
    assert_eq!(sol.value(), 1.0);
    assert_eq!(sol.table.to_csv().lines().next(), Some("x"));
}

#[test]
fn each_shot_lowers_the_value() {
    let v = &three_shots().values;
    assert!(v[0].product > v[1].product && v[1].product > v[2].product && v[2].product > v[3].product);
}

#[test]
fn value_forms_agree_across_resource_levels() {
    for a in [0.5, 1.0, 2.0] {
        let sol = solve_game(&linear_game(a, 5), &SolverConfig::new(0.05, a, 0.01)).unwrap();
        for v in &sol.values {
            assert!(v.gap() <= 1e-6, "a={a} k={}: gap {:e}", v.k, v.gap());
        }
    }
}

#[test]
fn residual_is_small_and_vanishes_near_zero() {
    let table = &three_shots().table;
    let report = table.residual_report().unwrap();
    assert!(report.max_residual <= 1e-5, "{report:?}");
    assert!(report.structure_violations.is_empty());
    for k in 1..=3 {
        assert!(table.equilibrium_residual(1e-9, k).unwrap() < 1e-6);
        assert_eq!(table.curve(k, 0.0), 1.0);
    }
}

#[test]
fn perturbed_table_fails_the_residual_check() {
    let table = three_shots().table.perturbed(0.01).unwrap();
    let report = table.residual_report().unwrap();
    assert!(report.max_residual > 1e-3, "residual {:e}", report.max_residual);
}

#[test]
fn normalization_leaves_the_value_unchanged() {
    let p = DuelParameters::new(
        AccuracyFunction::power(3.0).unwrap(),
        AccuracyFunction::linear(),
        1.0,
        3,
        1.0,
        1.0,
    )
    .unwrap();
    let config = SolverConfig::new(0.05, 1.0, 0.01);
    let a = solve_game(&p, &config).unwrap();
    let b = solve_game_direct(&p, &config).unwrap();
    assert!((a.value() - b.value()).abs() < 1e-9);
}

#[test]
fn tabulated_sniper_accuracy_matches_the_closed_form() {
    let pts: Vec<(f64, f64)> = (0..=200).map(|i| i as f64 / 200.0).map(|t| (t, t * t)).collect();
    let tab = DuelParameters::new(
        AccuracyFunction::linear(),
        AccuracyFunction::tabulated(pts).unwrap(),
        1.0,
        2,
        1.0,
        1.0,
    )
    .unwrap();
    let exact = DuelParameters::new(
        AccuracyFunction::linear(),
        AccuracyFunction::power(2.0).unwrap(),
        1.0,
        2,
        1.0,
        1.0,
    )
    .unwrap();
    let config = SolverConfig::new(0.05, 1.0, 0.01);
    let a = solve_game(&tab, &config).unwrap();
    let b = solve_game(&exact, &config).unwrap();
    assert!((a.value() - b.value()).abs() < 1e-4, "{} vs {}", a.value(), b.value());
}

#[test]
fn csv_and_sidecar_round_trip() {
    let sol = three_shots();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("table.csv");
    let (csv_path, json_path) = sol.table.write(&csv).unwrap();
    assert_eq!(json_path, dir.path().join("table.json"));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert!(text.starts_with("x,T_1,T_2,T_3\n"));
    assert_eq!(text.lines().count(), sol.table.grid().len() + 1);

    let back = TTable::read(&csv_path).unwrap();
    assert_eq!(back.grid().len(), sol.table.grid().len());
    for k in 1..=3 {
        for &x in sol.table.grid() {
            assert!((back.curve(k, x) - sol.table.curve(k, x)).abs() < 1e-11);
        }
    }
    assert!((back.game_value(3).unwrap().product - sol.value()).abs() < 1e-10);

    // a second write of the reloaded table reproduces the CSV
    let again = dir.path().join("again.csv");
    back.write(&again).unwrap();
    assert_eq!(std::fs::read_to_string(again).unwrap(), text);
}

#[test]
fn corrupt_tables_are_rejected() {
    let sol = three_shots();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    sol.table.write(&csv).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    std::fs::write(&csv, text.replacen("x,T_1,T_2,T_3", "x,T_1,T_2", 1)).unwrap();
    assert!(TTable::read(&csv).is_err());
    std::fs::write(&csv, text.replacen("\n0.05,", "\n0.05,nan,", 1)).unwrap();
    assert!(TTable::read(&csv).is_err());
    std::fs::remove_file(dir.path().join("t.json")).unwrap();
    std::fs::write(&csv, text).unwrap();
    assert!(TTable::read(&csv).is_err());
}

#[test]
fn mismatched_grid_end_is_rejected() {
    assert!(solve_game(&linear_game(1.0, 2), &SolverConfig::new(0.05, 2.0, 0.01)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn solved_tables_keep_the_curve_order(c in 0.5f64..2.5, a in 0.3f64..2.0, m in 1usize..5) {
        let p = DuelParameters::new(
            AccuracyFunction::power(c).unwrap(),
            AccuracyFunction::linear(),
            a,
            m,
            1.0,
            1.0,
        )
        .unwrap();
        let sol = solve_game(&p, &SolverConfig::new(0.05, a, 0.02)).unwrap();
        prop_assert!(sol.table.structure_violations().is_empty());
        let report = sol.table.residual_report().unwrap();
        prop_assert!(report.max_residual <= 1e-5, "residual {:e}", report.max_residual);
        for w in sol.values.windows(2) {
            prop_assert!(w[1].product < w[0].product);
        }
        for d in &sol.table.stage().levels {
            prop_assert!(d.max_crossing <= 0.0);
            prop_assert!(d.gap_at_grid_start < 1e-5);
        }
    }
}
