use proptest::prelude::*;

use qvi_core::forest::gamma;
use qvi_core::linsolve::residual;
use qvi_core::operators::{assemble_generator_uniform, compute_h, transform_fixed_point};
use qvi_core::sparse::RowBuilder;
use qvi_core::{
    AnalyticSolution, ControlProblem, ControlSets, Direction, DomainBox, ForestParams,
    PolicySystem, Scheme, SolveMethod, SolveOptions, SpaceGrid,
};

/// Constant drift and diffusion on an arbitrary box.
struct Constant {
    drift: Vec<f64>,
    diff: Vec<f64>,
    sets: ControlSets<(), ()>,
}

impl Constant {
    fn new(drift: Vec<f64>, diff: Vec<f64>) -> Self {
        Self {
            drift,
            diff,
            sets: ControlSets::new(vec![()], vec![()]),
        }
    }
}

impl ControlProblem<f64> for Constant {
    type Control = ();
    type Impulse = ();
    fn dim(&self) -> usize {
        self.drift.len()
    }
    fn controls(&self) -> &ControlSets<(), ()> {
        &self.sets
    }
    fn drift(&self, _: f64, _: &[f64], _: &(), out: &mut [f64]) {
        out.copy_from_slice(&self.drift);
    }
    fn diffusion_sq(&self, _: f64, _: &[f64], _: &(), out: &mut [f64]) {
        out.copy_from_slice(&self.diff);
    }
    fn running_profit(&self, _: f64, _: &[f64], _: &()) -> f64 {
        0.0
    }
    fn terminal_value(&self, _: &[f64]) -> f64 {
        0.0
    }
    fn intervention(&self, _: f64, _: &[f64], _: &(), _: &mut [f64]) -> bool {
        false
    }
    fn intervention_profit(&self, _: f64, _: &[f64], _: &()) -> f64 {
        0.0
    }
    fn boundary_value(&self, _: f64, _: &[f64], _: &SpaceGrid<f64>, _: &[f64]) -> f64 {
        0.0
    }
}

/// `max_i |(L u)_i − (μ·∇u + ½ S:∇²u)(x_i)|` for `u = sin(x)cos(y)` (or
/// `sin(x)` in 1-D).
fn truncation_error(p: &Constant, step: f64, scheme: Scheme) -> f64 {
    let n = p.dim();
    let domain = DomainBox::new(vec![0.0; n], vec![1.0; n]).unwrap();
    let grid = SpaceGrid::new(domain, &vec![step; n]).unwrap();
    let l = assemble_generator_uniform(p, &grid, 0.0, 0, scheme).unwrap();
    let u = |x: &[f64]| if n == 1 { x[0].sin() } else { x[0].sin() * x[1].cos() };
    let exact = |x: &[f64]| {
        if n == 1 {
            p.drift[0] * x[0].cos() - 0.5 * p.diff[0] * x[0].sin()
        } else {
            let (sx, cx, sy, cy) = (x[0].sin(), x[0].cos(), x[1].sin(), x[1].cos());
            p.drift[0] * cx * cy - p.drift[1] * sx * sy
                + 0.5 * (-p.diff[0] * sx * cy - p.diff[3] * sx * cy)
                - p.diff[1] * cx * sy
        }
    };
    let values: Vec<f64> = (0..grid.len()).map(|i| u(grid.coord(i))).collect();
    let lu = l.mul_vec(&values);
    grid.interior()
        .map(|i| (lu[i] - exact(grid.coord(i))).abs())
        .fold(0.0, f64::max)
}

fn stable_1d() -> impl Strategy<Value = (f64, f64)> {
    (0.2f64..2.0, -1.0f64..1.0).prop_map(|(s, m)| (s, m * s * 2.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn central_stencil_is_second_order((s, m) in stable_1d()) {
        let p = Constant::new(vec![m], vec![s]);
        let ratio = truncation_error(&p, 0.05, Scheme::Central)
            / truncation_error(&p, 0.025, Scheme::Central);
        prop_assert!((3.0..5.0).contains(&ratio), "ratio {}", ratio);
    }

    #[test]
    fn one_sided_stencil_is_first_order((s, m) in (0.2f64..2.0, 0.3f64..2.0)) {
        let p = Constant::new(vec![m], vec![s]);
        let ratio = truncation_error(&p, 0.05, Scheme::OneSided)
            / truncation_error(&p, 0.025, Scheme::OneSided);
        prop_assert!((1.6..2.4).contains(&ratio), "ratio {}", ratio);
    }

    #[test]
    fn correlated_stencil_is_second_order(
        s0 in 0.5f64..2.0,
        s1 in 0.5f64..2.0,
        rho in -0.9f64..0.9,
        m0 in -0.5f64..0.5,
        m1 in -0.5f64..0.5,
    ) {
        let c = rho * (s0 * s1).sqrt();
        let p = Constant::new(vec![m0, m1], vec![s0, c, c, s1]);
        let ratio = truncation_error(&p, 0.05, Scheme::Central)
            / truncation_error(&p, 0.025, Scheme::Central);
        prop_assert!((3.0..5.0).contains(&ratio), "ratio {}", ratio);
    }

    #[test]
    fn transformed_operator_is_a_contraction(
        (s, m) in stable_1d(),
        dt in 1e-4f64..1.0,
        step in prop::sample::select(vec![0.5, 0.25, 0.125, 0.0625]),
    ) {
        let p = Constant::new(vec![m], vec![s]);
        let grid = SpaceGrid::uniform_1d(0.0, 1.0, step).unwrap();
        let l = assemble_generator_uniform(&p, &grid, 0.0, 0, Scheme::Central).unwrap();
        let h = compute_h(&p, &grid, &[0.0], Scheme::Central, 1.0).unwrap();
        let n = grid.n_interior();
        let (lbar, _) = transform_fixed_point(&l, &vec![0.0; n], &vec![0.0; n], h, dt).unwrap();
        for i in 0..n {
            let (_, v) = lbar.row(i);
            prop_assert!(v.iter().all(|&e| (0.0..1.0).contains(&e)));
            prop_assert!(lbar.row_sum(i) < 1.0);
            prop_assert!((lbar.row_sum(i) - dt / (h + dt)).abs() < 1e-12);
        }
    }

    #[test]
    fn direct_and_sweep_solvers_agree(
        n in 2usize..40,
        seed in any::<u64>(),
    ) {
        let system = random_policy_system(n, seed);
        let direct = qvi_core::solve_policy_system(&system, &SolveOptions::default()).unwrap();
        let sweep = qvi_core::solve_policy_system(
            &system,
            &SolveOptions { method: SolveMethod::Sweep, tol: 1e-13, ..SolveOptions::default() },
        )
        .unwrap();
        for (a, b) in direct.iter().zip(&sweep) {
            prop_assert!((a - b).abs() < 1e-8);
        }
        prop_assert!(residual(&system, &direct) <= 1e-10 * (1.0 + system.b.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
    }

    #[test]
    fn neighbours_round_trip(
        steps in prop::collection::vec(prop::sample::select(vec![0.5f64, 0.25, 0.2, 0.125]), 1..4),
    ) {
        let n = steps.len();
        let domain = DomainBox::new(vec![0.0; n], vec![1.0; n]).unwrap();
        let grid = SpaceGrid::new(domain.clone(), &steps).unwrap();
        prop_assert_eq!(&grid, &SpaceGrid::new(domain, &steps).unwrap());
        for i in grid.interior() {
            for axis in 0..n {
                let j = grid.neighbor(i, axis, Direction::Forward);
                prop_assert!((grid.coord(j)[axis] - grid.coord(i)[axis] - steps[axis]).abs() < 1e-12);
                if grid.is_interior(j) {
                    prop_assert_eq!(grid.neighbor(j, axis, Direction::Backward), i);
                }
            }
            prop_assert_eq!(grid.index_of(grid.coord(i)), Some(i));
        }
    }

    #[test]
    fn analytic_solution_is_smooth_and_solves_the_ode(
        mu in 0.2f64..1.5,
        sigma in 0.5f64..1.5,
        extra in 0.5f64..2.0,
        beta in 0.02f64..0.3,
    ) {
        let params = ForestParams {
            x_max: 50.0,
            replant: 1.0,
            harvest_cost: beta,
            replant_cost: 2.0,
            growth: mu,
            volatility: sigma,
            discount: mu + extra,
        };
        let sol = AnalyticSolution::new(params).unwrap();
        let y = sol.switch_point;
        let eps = 1e-6 * y;
        let (left, right) = (sol.value(y - eps), sol.value(y + eps));
        prop_assert!((left - right).abs() < 1e-5 * (1.0 + sol.value(y).abs()));
        let d_left = (sol.value(y - eps) - sol.value(y - 2.0 * eps)) / eps;
        let d_right = (sol.value(y + 2.0 * eps) - sol.value(y + eps)) / eps;
        prop_assert!((d_left - d_right).abs() < 1e-3 * (1.0 + d_left.abs()), "{} vs {}", d_left, d_right);

        let s2 = sigma * sigma;
        let g = gamma(&params);
        for k in 1..10 {
            let x = 1.0 + (y - 1.0) * k as f64 / 10.0;
            let e = 1e-3 * x;
            let v = sol.value(x);
            let d1 = (sol.value(x + e) - sol.value(x - e)) / (2.0 * e);
            let d2 = (sol.value(x + e) - 2.0 * v + sol.value(x - e)) / (e * e);
            let r = 0.5 * s2 * x * x * d2 + mu * x * d1 - params.discount * v;
            prop_assert!(r.abs() < 1e-4 * (1.0 + v.abs()), "residual {} at {} (γ = {})", r, x, g);
        }
    }

    #[test]
    fn switch_point_scales_with_the_problem(c in 0.5f64..4.0) {
        let base = ForestParams::<f64>::reference();
        let scaled = ForestParams {
            x_max: base.x_max * c,
            replant: base.replant * c,
            replant_cost: base.replant_cost * c,
            ..base
        };
        let y = AnalyticSolution::new(base).unwrap().switch_point;
        let yc = AnalyticSolution::new(scaled).unwrap().switch_point;
        prop_assert!((yc - c * y).abs() < 1e-7 * c * y);
    }
}

/// Continuation rows with non-negative entries summing below one, plus
/// unit rows pointing at lower indices and a few empty rows.
fn random_policy_system(n: usize, seed: u64) -> PolicySystem<f64> {
    let mut state = seed | 1;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut a = RowBuilder::new(n);
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        let kind = next();
        if i > 0 && kind < 0.25 {
            a.push((next() * i as f64) as usize, 1.0);
        } else if kind < 0.35 {
        } else {
            let cols: Vec<usize> = (0..3).map(|_| (next() * n as f64) as usize).collect();
            let weights: Vec<f64> = (0..3).map(|_| next()).collect();
            let total: f64 = weights.iter().sum::<f64>() / (0.2 + 0.79 * next());
            for (c, w) in cols.into_iter().zip(weights) {
                a.push(c, w / total);
            }
        }
        a.finish_row();
        b.push(next() * 4.0 - 2.0);
    }
    PolicySystem { a: a.build(), b }
}
