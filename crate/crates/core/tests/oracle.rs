mod common;

use qvi_core::{solve_backward, SolveMethod, SolveOptions, SolverConfig, SpaceGrid, TimeGrid};

fn lattice_values(grid: &SpaceGrid<f64>, phi: &[f64]) -> Vec<f64> {
    (0..7)
        .map(|m| phi[grid.index_of(&[m as f64 * common::DX]).unwrap()])
        .collect()
}

fn check(horizon: f64, steps: usize, method: SolveMethod) {
    let toy = common::Toy::new();
    let grid = SpaceGrid::uniform_1d(0.0, 1.0, common::DX).unwrap();
    let time = TimeGrid::new(horizon, steps).unwrap();
    let cfg = SolverConfig {
        tol: 1e-12,
        linear: SolveOptions {
            method,
            ..SolveOptions::default()
        },
        check_invariants: true,
        ..SolverConfig::default()
    };
    let sol = solve_backward(&toy, &grid, &time, &cfg).unwrap();
    let got = lattice_values(&grid, &sol.values[0]);
    let want = common::brute_force(horizon, steps);
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() <= 1e-8, "{got:?} vs {want:?}");
    }
}

#[test]
fn matches_exhaustive_search_over_three_steps() {
    check(0.5, 3, SolveMethod::Direct);
}

#[test]
fn matches_exhaustive_search_with_sweep_solver() {
    check(0.5, 3, SolveMethod::Sweep);
}

#[test]
fn matches_exhaustive_search_single_long_step() {
    check(2.0, 1, SolveMethod::Direct);
}

#[test]
fn oracle_instance_uses_both_branches() {
    let toy = common::Toy::new();
    let grid = SpaceGrid::uniform_1d(0.0, 1.0, common::DX).unwrap();
    let time = TimeGrid::new(0.5, 3).unwrap();
    let sol = solve_backward(&toy, &grid, &time, &SolverConfig::default()).unwrap();
    let regular: Vec<usize> = sol
        .policies
        .iter()
        .flat_map(|p| (0..p.len()).map(|i| p.regular(i)))
        .collect();
    assert!(regular.contains(&0) && regular.contains(&1), "{regular:?}");
    for p in &sol.policies {
        assert!((0..p.len()).any(|i| !p.is_continuation(i)), "{p:?}");
    }
}
