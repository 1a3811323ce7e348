//! Forest harvesting under geometric Brownian growth.
//!
//! Biomass follows `dX = μX dt + σX dW`. Harvesting cuts everything, pays
//! `(1−β)X − Q` (replanting included) and resets the stand to `x̃`. The
//! infinite-horizon problem has a closed-form value with a single switch
//! point `y`; the finite-horizon problem exits the business at `T`.

use crate::error::{QviError, Result};
use crate::grid::SpaceGrid;
use crate::problem::{ControlProblem, ControlSets};
use crate::scalar::Scalar;

/// Model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams<T> {
    /// Right end of the computational domain.
    pub x_max: T,
    /// Biomass right after replanting, `x̃`.
    pub replant: T,
    /// Proportional harvesting cost `β ∈ (0, 1)`.
    pub harvest_cost: T,
    /// Replanting cost `Q`.
    pub replant_cost: T,
    /// Expected growth rate `μ`.
    pub growth: T,
    /// Volatility `σ`.
    pub volatility: T,
    /// Discount rate `λ`.
    pub discount: T,
}

impl<T: Scalar> ForestParams<T> {
    /// Reference configuration: `x_max = 10`, `x̃ = 1`, `β = 0.1`, `Q = 2`,
    /// `μ = 1`, `σ = 1`, `λ = 2`.
    pub fn reference() -> Self {
        Self {
            x_max: T::lit(10.0),
            replant: T::one(),
            harvest_cost: T::lit(0.1),
            replant_cost: T::lit(2.0),
            growth: T::one(),
            volatility: T::one(),
            discount: T::lit(2.0),
        }
    }

    pub fn with_x_max(mut self, x_max: T) -> Self {
        self.x_max = x_max;
        self
    }

    /// Net fraction `1 − β` kept at harvest.
    pub fn net(&self) -> T {
        T::one() - self.harvest_cost
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("x_max", self.x_max),
            ("replant", self.replant),
            ("replant_cost", self.replant_cost),
            ("growth", self.growth),
            ("volatility", self.volatility),
            ("discount", self.discount),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(QviError::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.harvest_cost > T::zero() && self.harvest_cost < T::one()) {
            return Err(QviError::InvalidParams(format!(
                "harvest_cost must lie in (0, 1), got {}",
                self.harvest_cost
            )));
        }
        if !(self.replant < self.x_max) {
            return Err(QviError::InvalidParams(format!(
                "replant level {} must be below x_max {}",
                self.replant, self.x_max
            )));
        }
        if !(self.net() * self.replant < self.replant_cost) {
            return Err(QviError::InvalidParams(format!(
                "(1-β)x̃ = {} must be below the replanting cost {}; otherwise harvesting right after replanting is optimal",
                self.net() * self.replant,
                self.replant_cost
            )));
        }
        Ok(())
    }
}

/// Positive root of `½σ²γ(γ−1) + μγ − λ = 0`.
pub fn gamma<T: Scalar>(p: &ForestParams<T>) -> T {
    let s2 = p.volatility * p.volatility;
    let a = s2 - T::lit(2.0) * p.growth;
    (a + (a * a + T::lit(8.0) * s2 * p.discount).sqrt()) / (T::lit(2.0) * s2)
}

/// Residual of the switch-point fixed-point equation; negative just above
/// `x̃` and positive for large `y`.
fn switch_residual<T: Scalar>(p: &ForestParams<T>, g: T, y: T) -> T {
    let net = p.net();
    y - (g * p.replant_cost - net * y * (p.replant / y).powf(g)) / (net * (g - T::one()))
}

/// Maximum number of doublings of the right bracket end.
pub const SWITCH_POINT_EXPANSIONS: usize = 60;

/// Strategy switch point `y > x̃`, to absolute tolerance `1e-9` (or the
/// scalar's resolution, whichever is coarser).
pub fn switch_point<T: Scalar>(p: &ForestParams<T>) -> Result<T> {
    p.validate()?;
    let g = gamma(p);
    if !(g > T::one()) {
        return Err(QviError::InvalidParams(format!("γ = {g} must exceed 1")));
    }
    let lo = p.replant * (T::one() + T::lit(1e-6));
    let hi = T::lit(1e3) * p.replant_cost / p.net();
    bisect_expanding(
        |y| switch_residual(p, g, y),
        lo,
        hi,
        SWITCH_POINT_EXPANSIONS,
        T::lit(1e-9),
    )
}

/// Root of an increasing-through-zero function: `f(lo) < 0`, and `hi` is
/// doubled until `f(hi) > 0`, at most `max_expansions` times.
pub fn bisect_expanding<T: Scalar>(
    f: impl Fn(T) -> T,
    lo: T,
    hi: T,
    max_expansions: usize,
    tol: T,
) -> Result<T> {
    let fail = |hi: T| QviError::NoSwitchPoint {
        lo: lo.as_f64(),
        hi: hi.as_f64(),
        expansions: max_expansions,
    };
    if !(f(lo) < T::zero()) {
        return Err(fail(hi));
    }
    let mut hi = hi;
    let mut expansions = 0;
    while !(f(hi) > T::zero()) {
        if expansions == max_expansions || !hi.is_finite() {
            return Err(fail(hi));
        }
        hi = hi * T::lit(2.0);
        expansions += 1;
    }
    let mut lo = lo;
    while hi - lo > tol {
        let mid = lo + (hi - lo) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + (hi - lo) * T::lit(0.5))
}

/// Closed-form infinite-horizon solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticSolution<T> {
    pub params: ForestParams<T>,
    pub gamma: T,
    pub switch_point: T,
}

impl<T: Scalar> AnalyticSolution<T> {
    pub fn new(params: ForestParams<T>) -> Result<Self> {
        let switch_point = switch_point(&params)?;
        let sol = Self {
            params,
            gamma: gamma(&params),
            switch_point,
        };
        if !(sol.switch_point > params.replant) {
            return Err(QviError::InvalidParams(format!(
                "switch point {} does not exceed x̃ = {}",
                sol.switch_point, params.replant
            )));
        }
        Ok(sol)
    }

    /// Waiting value `Ψ(x) = ((1−β)y/γ)(x/y)^γ`.
    pub fn waiting_value(&self, x: T) -> T {
        let y = self.switch_point;
        self.params.net() * y / self.gamma * (x / y).powf(self.gamma)
    }

    /// `V(x)`: `Ψ(x)` below `y`, harvest-and-replant value at or above it.
    pub fn value(&self, x: T) -> T {
        value_infinite(x, &self.params, self)
    }
}

pub fn value_infinite<T: Scalar>(x: T, p: &ForestParams<T>, sol: &AnalyticSolution<T>) -> T {
    if x < sol.switch_point {
        sol.waiting_value(x)
    } else {
        p.net() * x - p.replant_cost + sol.waiting_value(p.replant)
    }
}

/// The single harvesting impulse: cut everything and replant `x̃`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Harvest;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon<T> {
    /// Stationary problem with `−λV` in the generator.
    Infinite,
    /// Exit at `horizon`; `terminal_q` subtracts `e^{−λT}Q` from the terminal
    /// payoff.
    Finite { horizon: T, terminal_q: bool },
}

/// The forest model as a control problem on `[0, x_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestProblem<T> {
    params: ForestParams<T>,
    horizon: Horizon<T>,
    delta_x: T,
    grid: SpaceGrid<T>,
    replant_index: usize,
    sets: ControlSets<(), Harvest>,
}

impl<T: Scalar> ForestProblem<T> {
    fn new(params: ForestParams<T>, delta_x: T, horizon: Horizon<T>) -> Result<Self> {
        params.validate()?;
        let grid = SpaceGrid::uniform_1d(T::zero(), params.x_max, delta_x)?;
        let replant_index = grid
            .index_of(&[params.replant])
            .filter(|&i| grid.is_interior(i))
            .ok_or_else(|| QviError::OffGrid {
                what: "replanting level",
                value: params.replant.as_f64(),
                nearest: grid.nearest_coordinate(0, params.replant).as_f64(),
            })?;
        Ok(Self {
            params,
            horizon,
            delta_x,
            grid,
            replant_index,
            sets: ControlSets::new(vec![()], vec![Harvest]),
        })
    }

    /// Stationary problem with the boundary `ψ(0) = 0`,
    /// `ψ(x_max) = V(x̃) + (1−β)x_max − Q`.
    pub fn infinite(params: ForestParams<T>, delta_x: T) -> Result<Self> {
        Self::new(params, delta_x, Horizon::Infinite)
    }

    /// Finite-horizon problem with terminal payoff `e^{−λT}(1−β)x`.
    pub fn finite(params: ForestParams<T>, delta_x: T, horizon: T) -> Result<Self> {
        Self::finite_with_terminal_q(params, delta_x, horizon, false)
    }

    pub fn finite_with_terminal_q(
        params: ForestParams<T>,
        delta_x: T,
        horizon: T,
        terminal_q: bool,
    ) -> Result<Self> {
        if !(horizon > T::zero()) {
            return Err(QviError::InvalidParams(format!("horizon must be positive, got {horizon}")));
        }
        Self::new(params, delta_x, Horizon::Finite { horizon, terminal_q })
    }

    pub fn params(&self) -> &ForestParams<T> {
        &self.params
    }

    pub fn horizon(&self) -> Horizon<T> {
        self.horizon
    }

    pub fn delta_x(&self) -> T {
        self.delta_x
    }

    /// Spatial grid on `[0, x_max]` with step `δ_x`.
    pub fn grid(&self) -> &SpaceGrid<T> {
        &self.grid
    }

    /// Interior index of `x̃`.
    pub fn replant_index(&self) -> usize {
        self.replant_index
    }

    fn discount_factor(&self, t: T) -> T {
        match self.horizon {
            Horizon::Infinite => T::one(),
            Horizon::Finite { .. } => (-self.params.discount * t).exp(),
        }
    }
}

impl<T: Scalar> ControlProblem<T> for ForestProblem<T> {
    type Control = ();
    type Impulse = Harvest;

    fn dim(&self) -> usize {
        1
    }

    fn controls(&self) -> &ControlSets<(), Harvest> {
        &self.sets
    }

    fn drift(&self, _t: T, x: &[T], _a: &(), out: &mut [T]) {
        out[0] = self.params.growth * x[0];
    }

    fn diffusion_sq(&self, _t: T, x: &[T], _a: &(), out: &mut [T]) {
        let s = self.params.volatility * x[0];
        out[0] = s * s;
    }

    fn discount(&self, _t: T, _x: &[T], _a: &()) -> T {
        match self.horizon {
            Horizon::Infinite => self.params.discount,
            Horizon::Finite { .. } => T::zero(),
        }
    }

    fn running_profit(&self, _t: T, _x: &[T], _a: &()) -> T {
        T::zero()
    }

    fn terminal_value(&self, x: &[T]) -> T {
        match self.horizon {
            Horizon::Infinite => T::zero(),
            Horizon::Finite { horizon, terminal_q } => {
                let q = if terminal_q { self.params.replant_cost } else { T::zero() };
                (-self.params.discount * horizon).exp() * (self.params.net() * x[0] - q)
            }
        }
    }

    /// Available only strictly above `x̃`, which keeps `η(i) < i`.
    fn intervention(&self, _t: T, x: &[T], _z: &Harvest, out: &mut [T]) -> bool {
        if x[0] > self.params.replant + self.delta_x * T::lit(0.5) {
            out[0] = self.params.replant;
            true
        } else {
            false
        }
    }

    fn intervention_profit(&self, t: T, x: &[T], _z: &Harvest) -> T {
        self.discount_factor(t) * (self.params.net() * x[0] - self.params.replant_cost)
    }

    fn boundary_value(&self, t: T, x: &[T], grid: &SpaceGrid<T>, phi: &[T]) -> T {
        if x[0] <= grid.domain().lower[0] {
            return T::zero();
        }
        let harvest = self.params.net() * self.params.x_max - self.params.replant_cost;
        phi[self.replant_index] + self.discount_factor(t) * harvest
    }
}
