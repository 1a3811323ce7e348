use qvi_core::{
    extract_switch_point, solve_backward, solve_stationary, ForestParamsF32, ForestParamsF64,
    ForestProblemF32, ForestProblemF64, SolverConfigF32, SolverConfigF64, TimeGrid,
};

#[test]
fn stationary_forest_in_single_precision() {
    let p32 = ForestProblemF32::infinite(ForestParamsF32::reference(), 0.1).unwrap();
    let p64 = ForestProblemF64::infinite(ForestParamsF64::reference(), 0.1).unwrap();
    let s32 = solve_stationary(&p32, p32.grid(), &SolverConfigF32::default()).unwrap();
    let s64 = solve_stationary(&p64, p64.grid(), &SolverConfigF64::default()).unwrap();
    assert_eq!(extract_switch_point(&s32.policy, p32.grid()), Some(5.5));
    for (a, b) in s32.values.iter().zip(&s64.values) {
        assert!((*a as f64 - b).abs() < 1e-3 * (1.0 + b.abs()), "{a} vs {b}");
    }
}

#[test]
fn finite_forest_in_single_precision() {
    let p = ForestProblemF32::finite(ForestParamsF32::reference(), 0.1, 0.5).unwrap();
    let time = TimeGrid::<f32>::new(0.5, 100).unwrap();
    let sol = solve_backward(&p, p.grid(), &time, &SolverConfigF32::default()).unwrap();
    assert_eq!(sol.values.len(), 101);
    assert!(sol.values[0].iter().all(|v| v.is_finite()));
}
