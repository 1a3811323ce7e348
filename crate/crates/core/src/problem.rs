//! Description of a combined impulse / regular stochastic control problem on
//! a bounded box.
//!
//! Discounting is the implementor's business: fold `e^{-λt}` into the
//! profits, or report a rate through [`ControlProblem::discount`] for
//! stationary problems whose generator carries an explicit `-λV` term.

use std::fmt::Debug;

use crate::grid::SpaceGrid;
use crate::scalar::Scalar;

/// Finite admissible control lists. Both must be non-empty; impulses may be
/// unavailable at individual states (see [`ControlProblem::intervention`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSets<A, Z> {
    pub regular: Vec<A>,
    pub impulse: Vec<Z>,
}

impl<A, Z> ControlSets<A, Z> {
    pub fn new(regular: Vec<A>, impulse: Vec<Z>) -> Self {
        assert!(!regular.is_empty(), "regular control set must be non-empty");
        assert!(!impulse.is_empty(), "impulse control set must be non-empty");
        Self { regular, impulse }
    }
}

pub trait ControlProblem<T: Scalar>: Sync {
    type Control: Clone + Debug + Send + Sync;
    type Impulse: Clone + Debug + Send + Sync;

    /// State dimension `n`.
    fn dim(&self) -> usize;

    fn controls(&self) -> &ControlSets<Self::Control, Self::Impulse>;

    /// Writes the drift `μ(t, x, a)` into `out` (length `n`).
    fn drift(&self, t: T, x: &[T], a: &Self::Control, out: &mut [T]);

    /// Writes `σσᵀ(t, x, a)` row-major into `out` (length `n * n`).
    fn diffusion_sq(&self, t: T, x: &[T], a: &Self::Control, out: &mut [T]);

    /// Rate of an explicit `-λV` term in the generator. Zero unless the
    /// problem is stationary and discounted through the operator.
    fn discount(&self, _t: T, _x: &[T], _a: &Self::Control) -> T {
        T::zero()
    }

    /// Running profit `f(t, x, a)`.
    fn running_profit(&self, t: T, x: &[T], a: &Self::Control) -> T;

    /// Terminal condition `g(x)`.
    fn terminal_value(&self, x: &[T]) -> T;

    /// Post-intervention state `Γ(x, ζ)` written into `out`. Returns `false`
    /// where the impulse is not available. Targets must be interior lattice
    /// nodes with a lower global index than the source node.
    fn intervention(&self, t: T, x: &[T], zeta: &Self::Impulse, out: &mut [T]) -> bool;

    /// Intervention profit `K(t, x, ζ)`.
    fn intervention_profit(&self, t: T, x: &[T], zeta: &Self::Impulse) -> T;

    /// Boundary datum `ψ(t, x; φ)` at boundary node `x`. `phi` is the current
    /// iterate over the whole grid; state-independent boundaries ignore it.
    fn boundary_value(&self, t: T, x: &[T], grid: &SpaceGrid<T>, phi: &[T]) -> T;
}
