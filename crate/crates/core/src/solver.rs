//! Policy iteration for the discretised quasi-variational inequality.
//!
//! Each time step solves the fixed-point problem
//! `φ_i = max( max_a (L̄^a φ + f̄^a)_i , max_z (φ_{η(i,z)} + K^z_i) )` with
//! boundary rows pinned to `ψ`. Starting from the next step's values, the
//! loop alternates policy improvement and an exact linear solve until the
//! sup-norm change falls below the admissible error. Backward induction
//! repeats this for `k = N^t − 1, …, 0`.

use std::time::{Duration, Instant};

use crate::error::{QviError, Result};
use crate::grid::{SpaceGrid, TimeGrid};
use crate::linsolve::{residual, solve_policy_system, PolicySystem, SolveOptions};
use crate::operators::{
    assemble_generator_uniform, check_stability, compute_h, profit_vector, transform_fixed_point,
    transform_stationary, FixedPointOperators, InterventionTable, Scheme, StabilityReport,
};
use crate::problem::ControlProblem;
use crate::scalar::{sup_distance, sup_norm, Scalar};
use crate::sparse::{RowBuilder, SparseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    pub scheme: Scheme,
    /// Admissible error per step is `tol · (1 + ‖φ^{k+1}‖∞)`.
    pub tol: T,
    pub max_sweeps: usize,
    pub linear: SolveOptions<T>,
    /// Used for `h` when every generator diagonal vanishes.
    pub h_cap: T,
    /// Start each step from zero instead of `φ^{k+1}` (diagnostic only).
    pub cold_start: bool,
    /// Assert the per-step bound and the branch-dominance residuals.
    pub check_invariants: bool,
    /// Refuse to solve when the scheme's monotonicity condition fails.
    pub enforce_stability: bool,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            scheme: Scheme::Central,
            tol: T::lit(1e-8).max(T::epsilon() * T::lit(64.0)),
            max_sweeps: 1000,
            linear: SolveOptions::default(),
            h_cap: T::one(),
            cold_start: false,
            check_invariants: cfg!(debug_assertions),
            enforce_stability: true,
        }
    }
}

const NO_IMPULSE: u32 = u32::MAX;

/// Decisions at every interior node for one time slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyField {
    regular: Vec<u32>,
    impulse: Vec<u32>,
    continuation: Vec<bool>,
}

impl PolicyField {
    pub fn new(regular: Vec<usize>, impulse: Vec<Option<usize>>, continuation: Vec<bool>) -> Self {
        assert!(regular.len() == impulse.len() && impulse.len() == continuation.len());
        Self {
            regular: regular.into_iter().map(|a| a as u32).collect(),
            impulse: impulse
                .into_iter()
                .map(|z| z.map_or(NO_IMPULSE, |z| z as u32))
                .collect(),
            continuation,
        }
    }

    pub fn len(&self) -> usize {
        self.continuation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.continuation.is_empty()
    }

    /// Index of the chosen regular control `â_i`.
    pub fn regular(&self, i: usize) -> usize {
        self.regular[i] as usize
    }

    /// Index of the best available impulse `ẑ_i`, `None` where masked.
    pub fn impulse(&self, i: usize) -> Option<usize> {
        match self.impulse[i] {
            NO_IMPULSE => None,
            z => Some(z as usize),
        }
    }

    /// Whether `i` belongs to the continuation set `ℐ^k`.
    pub fn is_continuation(&self, i: usize) -> bool {
        self.continuation[i]
    }

    pub fn continuation(&self) -> &[bool] {
        &self.continuation
    }
}

/// Continuation and intervention branch values at every interior node.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchValues<T> {
    pub continuation: Vec<T>,
    /// `None` where no impulse is available.
    pub intervention: Vec<Option<T>>,
}

/// Branch values together with the maximising controls.
pub fn evaluate_branches<T: Scalar>(
    phi: &[T],
    ops: &FixedPointOperators<T>,
    table: &InterventionTable<T>,
) -> (BranchValues<T>, PolicyField) {
    let n = ops.forcing[0].len();
    let mut cont = Vec::with_capacity(n);
    let mut imp = Vec::with_capacity(n);
    let mut regular = Vec::with_capacity(n);
    let mut impulse = Vec::with_capacity(n);
    let mut continuation = Vec::with_capacity(n);
    for i in 0..n {
        let mut best_a = 0;
        let mut best = ops.matrices[0].row_dot(i, phi) + ops.forcing[0][i];
        for a in 1..ops.matrices.len() {
            let v = ops.matrices[a].row_dot(i, phi) + ops.forcing[a][i];
            if v > best {
                best = v;
                best_a = a;
            }
        }
        let mut best_z: Option<(usize, T)> = None;
        for z in 0..table.n_impulses() {
            if let Some(j) = table.target(i, z) {
                let v = phi[j] + table.profit(i, z);
                if best_z.is_none_or(|(_, b)| v > b) {
                    best_z = Some((z, v));
                }
            }
        }
        cont.push(best);
        imp.push(best_z.map(|b| b.1));
        regular.push(best_a);
        impulse.push(best_z.map(|b| b.0));
        continuation.push(best_z.is_none_or(|(_, v)| best >= v));
    }
    (
        BranchValues {
            continuation: cont,
            intervention: imp,
        },
        PolicyField::new(regular, impulse, continuation),
    )
}

/// Step 2: per-node argmax of both branches and the continuation set.
/// Ties go to the lowest control index and to continuation.
pub fn policy_improvement<T: Scalar>(
    phi: &[T],
    ops: &FixedPointOperators<T>,
    table: &InterventionTable<T>,
) -> PolicyField {
    evaluate_branches(phi, ops, table).1
}

/// Step 3: `A` and `b` for a fixed policy. `boundary` holds `ψ` for the
/// boundary block in global order.
pub fn build_policy_system<T: Scalar>(
    ops: &FixedPointOperators<T>,
    table: &InterventionTable<T>,
    policy: &PolicyField,
    boundary: &[T],
) -> PolicySystem<T> {
    let n_int = policy.len();
    let n = n_int + boundary.len();
    let mut a = RowBuilder::new(n);
    let mut b = Vec::with_capacity(n);
    for i in 0..n_int {
        if policy.is_continuation(i) {
            let c = policy.regular(i);
            for (j, v) in ops.matrices[c].row_entries(i) {
                a.push(j, v);
            }
            b.push(ops.forcing[c][i]);
        } else {
            let z = policy.impulse(i).expect("intervention rows carry an impulse");
            let j = table.target(i, z).expect("chosen impulse is available");
            a.push(j, T::one());
            b.push(table.profit(i, z));
        }
        a.finish_row();
    }
    for &psi in boundary {
        a.finish_row();
        b.push(psi);
    }
    PolicySystem { a: a.build(), b }
}

/// Diagnostics for one time step (or for the stationary solve).
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport<T> {
    pub k: usize,
    pub iterations: usize,
    /// Sup-norm change after each sweep; the last entry is within tolerance.
    pub changes: Vec<T>,
    pub tolerance: T,
    /// Linear residual of the final solve.
    pub residual: T,
    /// Per-step sup-norm bound, when invariant checks ran.
    pub bound: Option<T>,
    /// Largest branch-dominance violation, when invariant checks ran.
    pub qvi_residual: Option<T>,
    pub wall_time: Duration,
}

impl<T: Scalar> StepReport<T> {
    pub fn final_change(&self) -> T {
        *self.changes.last().expect("at least one sweep")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<T> {
    pub h: T,
    pub scheme: Scheme,
    pub stability: StabilityReport<T>,
    /// In solve order (`k = N^t − 1` first for backward solves).
    pub steps: Vec<StepReport<T>>,
    pub total_iterations: usize,
    pub max_iterations: usize,
    /// `max_k ‖φ^k‖∞`.
    pub max_sup_norm: T,
    pub wall_time: Duration,
}

impl<T: Scalar> SolveReport<T> {
    fn new(h: T, scheme: Scheme, stability: StabilityReport<T>) -> Self {
        Self {
            h,
            scheme,
            stability,
            steps: Vec::new(),
            total_iterations: 0,
            max_iterations: 0,
            max_sup_norm: T::zero(),
            wall_time: Duration::ZERO,
        }
    }

    fn record(&mut self, step: StepReport<T>, phi: &[T]) {
        self.total_iterations += step.iterations;
        self.max_iterations = self.max_iterations.max(step.iterations);
        self.max_sup_norm = self.max_sup_norm.max(sup_norm(phi));
        self.steps.push(step);
    }
}

/// Full backward solution.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardSolution<T> {
    /// `values[k]` is `φ^k` over the whole grid, `k = 0..=N^t`.
    pub values: Vec<Vec<T>>,
    /// `policies[k]` is the policy at `t_k`, `k = 0..N^t`.
    pub policies: Vec<PolicyField>,
    pub report: SolveReport<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarySolution<T> {
    pub values: Vec<T>,
    pub policy: PolicyField,
    pub report: SolveReport<T>,
}

impl<T: Scalar> StationarySolution<T> {
    pub fn iterations(&self) -> usize {
        self.report.total_iterations
    }
}

/// Everything a time step needs that does not depend on the iterate.
struct StepData<T> {
    t: T,
    ops: FixedPointOperators<T>,
    table: InterventionTable<T>,
    /// Raw generators and profits, kept for the invariant checks.
    generators: Vec<SparseMatrix<T>>,
    profits: Vec<Vec<T>>,
}

fn raw_operators<T: Scalar, P: ControlProblem<T>>(
    problem: &P,
    grid: &SpaceGrid<T>,
    t: T,
    scheme: Scheme,
) -> Result<(Vec<SparseMatrix<T>>, Vec<Vec<T>>)> {
    let nc = problem.controls().regular.len();
    let mut generators = Vec::with_capacity(nc);
    let mut profits = Vec::with_capacity(nc);
    for a in 0..nc {
        generators.push(assemble_generator_uniform(problem, grid, t, a, scheme)?);
        profits.push(profit_vector(problem, grid, t, a));
    }
    Ok((generators, profits))
}

fn boundary_values<T: Scalar, P: ControlProblem<T>>(
    problem: &P,
    grid: &SpaceGrid<T>,
    t: T,
    phi: &[T],
) -> Vec<T> {
    grid.boundary()
        .map(|b| problem.boundary_value(t, grid.coord(b), grid, phi))
        .collect()
}

/// Alternates policy improvement and linear solves from `phi` until the
/// sup-norm change is within `tol(φ)`.
fn policy_iteration<T: Scalar, P: ControlProblem<T>>(
    problem: &P,
    grid: &SpaceGrid<T>,
    data: &StepData<T>,
    mut phi: Vec<T>,
    tol: impl Fn(&[T]) -> T,
    config: &SolverConfig<T>,
) -> Result<(Vec<T>, PolicyField, Vec<T>, T, T)> {
    let n_int = grid.n_interior();
    // The linear residual must sit well inside the outer tolerance.
    let linear = SolveOptions {
        tol: config
            .linear
            .tol
            .min((config.tol * T::lit(0.1)).max(T::epsilon() * T::lit(16.0))),
        ..config.linear
    };
    let mut changes = Vec::new();
    for _ in 0..config.max_sweeps {
        let psi = boundary_values(problem, grid, data.t, &phi);
        let mut current = phi.clone();
        current[n_int..].copy_from_slice(&psi);
        let policy = policy_improvement(&current, &data.ops, &data.table);
        let system = build_policy_system(&data.ops, &data.table, &policy, &psi);
        let next = solve_policy_system(&system, &linear)?;
        let change = sup_distance(&next, &phi);
        changes.push(change);
        let res = residual(&system, &next);
        let tol_now = tol(&next);
        phi = next;
        if !phi.iter().all(|v| v.is_finite()) {
            return Err(QviError::Invariant("iterate is not finite".into()));
        }
        if change <= tol_now {
            return Ok((phi, policy, changes, res, tol_now));
        }
    }
    Err(QviError::NotConverged {
        max_sweeps: config.max_sweeps,
        history: changes.iter().map(|c| c.as_f64()).collect(),
    })
}

/// Largest violation of `φ_i = max(branches)` at the converged iterate.
fn qvi_residual<T: Scalar>(phi: &[T], data: &StepData<T>) -> T {
    let (branches, _) = evaluate_branches(phi, &data.ops, &data.table);
    (0..branches.continuation.len())
        .map(|i| {
            let best = branches.intervention[i]
                .map_or(branches.continuation[i], |v| v.max(branches.continuation[i]));
            (phi[i] - best).abs()
        })
        .fold(T::zero(), T::max)
}

/// Sup-norm bound for one implicit step from the discrete maximum principle:
/// continuation rows are bounded by `δt|f| + |φ^{k+1}|` plus the boundary and
/// intervention-chain inflow, intervention rows add their chain's `Σ|K|`.
fn step_bound<T: Scalar>(
    data: &StepData<T>,
    policy: &PolicyField,
    phi_next: &[T],
    psi: &[T],
    dt: T,
) -> T {
    let n_int = policy.len();
    let mut chain = vec![T::zero(); n_int];
    for i in 0..n_int {
        if !policy.is_continuation(i) {
            let z = policy.impulse(i).expect("intervention rows carry an impulse");
            let j = data.table.target(i, z).expect("available");
            let below = if policy.is_continuation(j) { T::zero() } else { chain[j] };
            chain[i] = data.table.profit(i, z).abs() + below;
        }
    }
    let mut interior = T::zero();
    for i in (0..n_int).filter(|&i| policy.is_continuation(i)) {
        let a = policy.regular(i);
        let mut r = dt * data.profits[a][i].abs() + phi_next[i].abs();
        for (j, v) in data.generators[a].row_entries(i) {
            if j == i {
                continue;
            }
            if j >= n_int {
                r = r + dt * v.abs() * psi[j - n_int].abs();
            } else if !policy.is_continuation(j) {
                r = r + dt * v.abs() * chain[j];
            }
        }
        interior = interior.max(r);
    }
    let chains = chain.iter().copied().fold(T::zero(), T::max);
    (interior + chains).max(sup_norm(psi))
}

/// One backward step: returns `φ^k`, the final policy and the step report.
pub fn solve_time_step<T: Scalar, P: ControlProblem<T>>(
    problem: &P,
    grid: &SpaceGrid<T>,
    time: &TimeGrid<T>,
    k: usize,
    phi_next: &[T],
    h: T,
    config: &SolverConfig<T>,
) -> Result<(Vec<T>, PolicyField, StepReport<T>)> {
    solve_time_step_inner(problem, grid, time, k, phi_next, h, config).map_err(|e| e.at_step(k))
}

fn solve_time_step_inner<T: Scalar, P: ControlProblem<T>>(
    problem: &P,
    grid: &SpaceGrid<T>,
    time: &TimeGrid<T>,
    k: usize,
    phi_next: &[T],
    h: T,
    config: &SolverConfig<T>,
) -> Result<(Vec<T>, PolicyField, StepReport<T>)> {
    let start = Instant::now();
    if phi_next.len() != grid.len() {
        return Err(QviError::Dimension(format!(
            "φ^(k+1) has {} entries for {} nodes",
            phi_next.len(),
            grid.len()
        )));
    }
    let t = time.node(k);
    let dt = time.dt();
    let (generators, profits) = raw_operators(problem, grid, t, config.scheme)?;
    let mut matrices = Vec::with_capacity(generators.len());
    let mut forcing = Vec::with_capacity(generators.len());
    for (l, f) in generators.iter().zip(&profits) {
        let (lbar, fbar) = transform_fixed_point(l, f, &phi_next[..grid.n_interior()], h, dt)?;
        matrices.push(lbar);
        forcing.push(fbar);
    }
    let data = StepData {
        t,
        ops: FixedPointOperators { h, matrices, forcing },
        table: InterventionTable::build(problem, grid, t)?,
        generators,
        profits,
    };

    let start_phi = if config.cold_start {
        vec![T::zero(); grid.len()]
    } else {
        phi_next.to_vec()
    };
    let tol = config.tol * (T::one() + sup_norm(phi_next));
    let (phi, policy, changes, res, tol) =
        policy_iteration(problem, grid, &data, start_phi, |_| tol, config)?;

    let mut report = StepReport {
        k,
        iterations: changes.len(),
        changes,
        tolerance: tol,
        residual: res,
        bound: None,
        qvi_residual: None,
        wall_time: Duration::ZERO,
    };
    if config.check_invariants {
        check_step_invariants(problem, grid, &data, &policy, &phi, phi_next, dt, tol, &mut report)?;
    }
    report.wall_time = start.elapsed();
    Ok((phi, policy, report))
}

#[allow(clippy::too_many_arguments)]
fn check_step_invariants<T: Scalar, P: ControlProblem<T>>(
    problem: &P,
    grid: &SpaceGrid<T>,
    data: &StepData<T>,
    policy: &PolicyField,
    phi: &[T],
    phi_next: &[T],
    dt: T,
    tol: T,
    report: &mut StepReport<T>,
) -> Result<()> {
    let slack = T::lit(10.0) * tol;
    let qvi = qvi_residual(phi, data);
    report.qvi_residual = Some(qvi);
    if qvi > slack {
        return Err(QviError::Invariant(format!(
            "branch residual {qvi:e} exceeds 10·tol = {slack:e}"
        )));
    }
    if !policy.continuation().iter().any(|&c| c) {
        return Err(QviError::Invariant("continuation set is empty".into()));
    }
    let psi = &phi[grid.n_interior()..];
    let bound = step_bound(data, policy, phi_next, psi, dt);
    report.bound = Some(bound);
    let norm = sup_norm(phi);
    if norm > bound + slack {
        return Err(QviError::Invariant(format!(
            "‖φ^k‖∞ = {norm:e} exceeds the step bound {bound:e}"
        )));
    }
    let _ = problem;
    Ok(())
}

fn stability_times<T: Scalar>(time: &TimeGrid<T>) -> Vec<T> {
    (0..time.steps()).map(|k| time.node(k)).collect()
}

/// Backward induction over the whole time grid.
pub fn solve_backward<T: Scalar, P: ControlProblem<T>>(
    problem: &P,
    grid: &SpaceGrid<T>,
    time: &TimeGrid<T>,
    config: &SolverConfig<T>,
) -> Result<BackwardSolution<T>> {
    let start = Instant::now();
    let times = stability_times(time);
    let stability = check_stability(problem, grid, &times, config.scheme)?;
    if config.enforce_stability {
        stability.clone().into_result()?;
    }
    let h = compute_h(problem, grid, &times, config.scheme, config.h_cap)?;
    let mut report = SolveReport::new(h, config.scheme, stability);

    let n_t = time.steps();
    let mut terminal: Vec<T> = (0..grid.len())
        .map(|i| {
            if grid.is_interior(i) {
                problem.terminal_value(grid.coord(i))
            } else {
                T::zero()
            }
        })
        .collect();
    let psi = boundary_values(problem, grid, time.node(n_t), &terminal);
    terminal[grid.n_interior()..].copy_from_slice(&psi);

    let mut values = vec![Vec::new(); n_t + 1];
    let mut policies = vec![None; n_t];
    report.max_sup_norm = sup_norm(&terminal);
    values[n_t] = terminal;
    for k in (0..n_t).rev() {
        let (phi, policy, step) =
            solve_time_step(problem, grid, time, k, &values[k + 1], h, config)?;
        report.record(step, &phi);
        values[k] = phi;
        policies[k] = Some(policy);
    }
    report.wall_time = start.elapsed();
    Ok(BackwardSolution {
        values,
        policies: policies.into_iter().map(|p| p.expect("every step solved")).collect(),
        report,
    })
}

/// Stationary (infinite-horizon) solve from `φ = 0` with `L̄ = I + hL`,
/// `f̄ = hf`. The problem must discount through the generator so that the
/// transformed rows are contractive.
pub fn solve_stationary<T: Scalar, P: ControlProblem<T>>(
    problem: &P,
    grid: &SpaceGrid<T>,
    config: &SolverConfig<T>,
) -> Result<StationarySolution<T>> {
    let start = Instant::now();
    let t = T::zero();
    let stability = check_stability(problem, grid, &[t], config.scheme)?;
    if config.enforce_stability {
        stability.clone().into_result()?;
    }
    let h = compute_h(problem, grid, &[t], config.scheme, config.h_cap)?;
    let (generators, profits) = raw_operators(problem, grid, t, config.scheme)?;
    let mut matrices = Vec::with_capacity(generators.len());
    let mut forcing = Vec::with_capacity(generators.len());
    for (l, f) in generators.iter().zip(&profits) {
        let (lbar, fbar) = transform_stationary(l, f, h)?;
        matrices.push(lbar);
        forcing.push(fbar);
    }
    let data = StepData {
        t,
        ops: FixedPointOperators { h, matrices, forcing },
        table: InterventionTable::build(problem, grid, t)?,
        generators,
        profits,
    };
    let base = config.tol;
    let (phi, policy, changes, res, tol) = policy_iteration(
        problem,
        grid,
        &data,
        vec![T::zero(); grid.len()],
        |phi| base * (T::one() + sup_norm(phi)),
        config,
    )?;
    let mut step = StepReport {
        k: 0,
        iterations: changes.len(),
        changes,
        tolerance: tol,
        residual: res,
        bound: None,
        qvi_residual: None,
        wall_time: Duration::ZERO,
    };
    if config.check_invariants {
        let qvi = qvi_residual(&phi, &data);
        step.qvi_residual = Some(qvi);
        if qvi > T::lit(10.0) * tol {
            return Err(QviError::Invariant(format!(
                "stationary branch residual {qvi:e} exceeds 10·tol"
            )));
        }
    }
    step.wall_time = start.elapsed();
    let mut report = SolveReport::new(h, config.scheme, stability);
    report.record(step, &phi);
    report.wall_time = start.elapsed();
    Ok(StationarySolution {
        values: phi,
        policy,
        report,
    })
}

/// Smallest interior coordinate outside the continuation set (1-D grids).
pub fn extract_switch_point<T: Scalar>(policy: &PolicyField, grid: &SpaceGrid<T>) -> Option<T> {
    assert_eq!(grid.dim(), 1, "switch points are defined on 1-D grids");
    (0..policy.len())
        .find(|&i| !policy.is_continuation(i))
        .map(|i| grid.coord(i)[0])
}
