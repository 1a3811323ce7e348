//! Implicit finite-difference solver for Hamilton–Jacobi–Bellman
//! quasi-variational inequalities from combined impulse and stochastic
//! control.
//!
//! A problem is described through [`ControlProblem`] on a box discretised by
//! a [`SpaceGrid`]. [`solve_backward`] runs policy iteration at every step of
//! a [`TimeGrid`]; [`solve_stationary`] handles discounted infinite-horizon
//! problems. The [`forest`] module provides the harvesting model with its
//! closed-form infinite-horizon solution, and [`validate`] collects the
//! convergence and Monte Carlo harnesses built on it.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar for the common cases.

pub mod error;
pub mod forest;
pub mod grid;
pub mod linsolve;
pub mod operators;
pub mod problem;
pub mod scalar;
pub mod solver;
pub mod sparse;
pub mod validate;

pub use error::{QviError, Result};
pub use forest::{AnalyticSolution, ForestParams, ForestProblem, Horizon};
pub use grid::{build_grid, Direction, DomainBox, SpaceGrid, TimeGrid};
pub use linsolve::{solve_policy_system, PolicySystem, SolveMethod, SolveOptions};
pub use operators::{Scheme, StabilityReport};
pub use problem::{ControlProblem, ControlSets};
pub use scalar::Scalar;
pub use solver::{
    extract_switch_point, solve_backward, solve_stationary, solve_time_step, BackwardSolution,
    PolicyField, SolveReport, SolverConfig, StationarySolution, StepReport,
};
pub use sparse::SparseMatrix;

pub type SpaceGridF64 = SpaceGrid<f64>;
pub type SpaceGridF32 = SpaceGrid<f32>;
pub type TimeGridF64 = TimeGrid<f64>;
pub type TimeGridF32 = TimeGrid<f32>;
pub type SparseMatrixF64 = SparseMatrix<f64>;
pub type SparseMatrixF32 = SparseMatrix<f32>;
pub type ForestParamsF64 = ForestParams<f64>;
pub type ForestParamsF32 = ForestParams<f32>;
pub type ForestProblemF64 = ForestProblem<f64>;
pub type ForestProblemF32 = ForestProblem<f32>;
pub type AnalyticSolutionF64 = AnalyticSolution<f64>;
pub type AnalyticSolutionF32 = AnalyticSolution<f32>;
pub type SolverConfigF64 = SolverConfig<f64>;
pub type SolverConfigF32 = SolverConfig<f32>;
