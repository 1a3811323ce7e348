//! Validation harnesses: analytic comparison, grid-convergence studies,
//! switch-point trajectories and Monte Carlo simulation of a solved policy.

mod monte_carlo;

use std::time::Duration;

pub use monte_carlo::{cholesky, simulate_policy, McEstimate, McOptions};

use crate::error::{QviError, Result};
use crate::forest::{AnalyticSolution, ForestParams, ForestProblem};
use crate::grid::{SpaceGrid, TimeGrid};
use crate::scalar::Scalar;
use crate::solver::{extract_switch_point, solve_stationary, PolicyField, SolverConfig};

/// `max_i |φ_i − V(x_i)|` over interior nodes.
pub fn compare_analytic<T: Scalar>(
    phi: &[T],
    grid: &SpaceGrid<T>,
    analytic: &AnalyticSolution<T>,
) -> T {
    grid.interior()
        .map(|i| (phi[i] - analytic.value(grid.coord(i)[0])).abs())
        .fold(T::zero(), T::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow<T> {
    pub delta_x: T,
    pub max_error: T,
    pub switch_point: Option<T>,
    pub iterations: usize,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy<T> {
    pub rows: Vec<ConvergenceRow<T>>,
    /// Resolutions refused before solving, with the reason.
    pub rejected: Vec<(T, QviError)>,
    /// Least-squares slope of `log(error)` against `log(δx)`; needs two rows.
    pub order: Option<T>,
}

/// Stationary forest solves at each `δx` (strictly decreasing) against the
/// analytic solution.
pub fn convergence_study<T: Scalar>(
    params: ForestParams<T>,
    deltas: &[T],
    config: &SolverConfig<T>,
) -> Result<ConvergenceStudy<T>> {
    if deltas.is_empty() {
        return Err(QviError::InvalidParams("empty δx list".into()));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(QviError::InvalidParams(
            "δx list must be strictly decreasing".into(),
        ));
    }
    let analytic = AnalyticSolution::new(params)?;
    let mut rows = Vec::new();
    let mut rejected = Vec::new();
    for &dx in deltas {
        let problem = match ForestProblem::infinite(params, dx) {
            Ok(p) => p,
            Err(e @ (QviError::OffGrid { .. } | QviError::InvalidGrid { .. })) => {
                rejected.push((dx, e));
                continue;
            }
            Err(e) => return Err(annotate(e, dx)),
        };
        let sol = solve_stationary(&problem, problem.grid(), config).map_err(|e| annotate(e, dx))?;
        rows.push(ConvergenceRow {
            delta_x: dx,
            max_error: compare_analytic(&sol.values, problem.grid(), &analytic),
            switch_point: extract_switch_point(&sol.policy, problem.grid()),
            iterations: sol.iterations(),
            wall_time: sol.report.wall_time,
        });
    }
    let points: Vec<(T, T)> = rows
        .iter()
        .filter(|r| r.max_error > T::zero())
        .map(|r| (r.delta_x.ln(), r.max_error.ln()))
        .collect();
    Ok(ConvergenceStudy {
        order: fit_slope(&points),
        rows,
        rejected,
    })
}

fn annotate(e: QviError, dx: impl Scalar) -> QviError {
    QviError::AtResolution {
        delta_x: dx.as_f64(),
        source: Box::new(e),
    }
}

/// Ordinary least-squares slope; `None` below two points or for a
/// degenerate abscissa.
pub fn fit_slope<T: Scalar>(points: &[(T, T)]) -> Option<T> {
    if points.len() < 2 {
        return None;
    }
    let n = T::from_index(points.len());
    let mx = points.iter().map(|p| p.0).sum::<T>() / n;
    let my = points.iter().map(|p| p.1).sum::<T>() / n;
    let sxx: T = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: T = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > T::zero()).then(|| sxy / sxx)
}

/// `(t_k, ỹ_{t_k})` for every policy slice; slices without an intervention
/// node report the upper domain edge.
pub fn switch_point_trajectory<T: Scalar>(
    policies: &[PolicyField],
    time: &TimeGrid<T>,
    grid: &SpaceGrid<T>,
) -> Vec<(T, T)> {
    let x_max = grid.domain().upper[0];
    policies
        .iter()
        .enumerate()
        .map(|(k, p)| (time.node(k), extract_switch_point(p, grid).unwrap_or(x_max)))
        .collect()
}

/// Length of the trailing run of `ỹ = x_max`, measured up to the horizon.
/// Zero when the last slice already has an intervention node.
pub fn plateau_length<T: Scalar>(trajectory: &[(T, T)], x_max: T, horizon: T) -> T {
    let start = trajectory
        .iter()
        .rposition(|&(_, y)| y < x_max)
        .map_or(0, |p| p + 1);
    match trajectory.get(start) {
        Some(&(t, _)) => horizon - t,
        None => T::zero(),
    }
}
