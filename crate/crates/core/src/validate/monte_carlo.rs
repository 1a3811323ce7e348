//! Euler–Maruyama simulation of the controlled process under a grid policy.
//!
//! Randomness: ChaCha8 keyed by the seed, one stream per path, standard
//! normals by inverse CDF of a 53-bit uniform on (0, 1). Path `p` draws the
//! same numbers no matter how paths are split across threads.

use rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{QviError, Result};
use crate::grid::{SpaceGrid, TimeGrid};
use crate::problem::ControlProblem;
use crate::scalar::Scalar;
use crate::solver::PolicyField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub paths: usize,
    pub seed: u64,
    /// Start index `k0`; the path starts at `t_{k0}`.
    pub start_step: usize,
}

impl McOptions {
    pub fn new(paths: usize, seed: u64) -> Self {
        Self {
            paths,
            seed,
            start_step: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate<T> {
    /// Paths that finished with a finite payoff.
    pub paths: usize,
    pub mean: T,
    /// Sample standard deviation over `√paths`.
    pub std_error: T,
    pub seed: u64,
    /// Paths dropped for a non-finite state or payoff.
    pub excluded: usize,
    /// Times a path left the domain and was put back on the nearest interior
    /// node.
    pub clamp_events: usize,
}

/// Lower-triangular `C` with `C Cᵀ = S` for a symmetric positive
/// semi-definite `S` (row-major `n × n`). Non-positive pivots zero their
/// column.
pub fn cholesky<T: Scalar>(s: &[T], n: usize, out: &mut [T]) {
    out.iter_mut().for_each(|v| *v = T::zero());
    for j in 0..n {
        let mut d = s[j * n + j];
        for k in 0..j {
            d = d - out[j * n + k] * out[j * n + k];
        }
        if d <= T::zero() {
            continue;
        }
        let d = d.sqrt();
        out[j * n + j] = d;
        for i in j + 1..n {
            let mut v = s[i * n + j];
            for k in 0..j {
                v = v - out[i * n + k] * out[j * n + k];
            }
            out[i * n + j] = v / d;
        }
    }
}

fn standard_normal(rng: &mut ChaCha8Rng, normal: &Normal) -> f64 {
    let u = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    normal.inverse_cdf(u)
}

struct PathOutcome<T> {
    payoff: Option<T>,
    clamps: usize,
}

/// Monte Carlo estimate of the performance criterion of the extracted policy
/// started from `x0` at `t_{k0}`.
///
/// At every grid time after the start the state is snapped to the nearest
/// interior node; outside the continuation set the chosen impulse is applied
/// (repeatedly, if the landing node also intervenes) before the Euler step
/// with the chosen regular control. The continuous state itself is never
/// snapped except when it leaves the open domain.
pub fn simulate_policy<T: Scalar, P: ControlProblem<T>>(
    problem: &P,
    grid: &SpaceGrid<T>,
    time: &TimeGrid<T>,
    policies: &[PolicyField],
    x0: &[T],
    options: &McOptions,
) -> Result<McEstimate<T>> {
    if options.paths == 0 {
        return Err(QviError::InvalidParams("path count must be positive".into()));
    }
    if policies.len() != time.steps() {
        return Err(QviError::Dimension(format!(
            "{} policy slices for {} time steps",
            policies.len(),
            time.steps()
        )));
    }
    if options.start_step >= time.steps() {
        return Err(QviError::InvalidParams(format!(
            "start step {} is not before the horizon step {}",
            options.start_step,
            time.steps()
        )));
    }
    if x0.len() != grid.dim() || !inside(grid, x0) {
        return Err(QviError::InvalidParams(format!(
            "start state {x0:?} is not inside the domain"
        )));
    }
    let outcomes: Vec<PathOutcome<T>> = (0..options.paths)
        .into_par_iter()
        .map(|p| simulate_path(problem, grid, time, policies, x0, options, p as u64))
        .collect();

    let clamp_events = outcomes.iter().map(|o| o.clamps).sum();
    let payoffs: Vec<T> = outcomes.iter().filter_map(|o| o.payoff).collect();
    let count = payoffs.len();
    let excluded = options.paths - count;
    if count == 0 {
        return Err(QviError::Invariant("every simulated path was excluded".into()));
    }
    // Shifted by the first payoff, so identical payoffs give an exact mean.
    let shift = payoffs[0];
    let n = T::from_index(count);
    let mean = shift + payoffs.iter().map(|&v| v - shift).sum::<T>() / n;
    let var = if count > 1 {
        payoffs.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / T::from_index(count - 1)
    } else {
        T::zero()
    };
    Ok(McEstimate {
        paths: count,
        mean,
        std_error: (var / n).sqrt(),
        seed: options.seed,
        excluded,
        clamp_events,
    })
}

fn inside<T: Scalar>(grid: &SpaceGrid<T>, x: &[T]) -> bool {
    let d = grid.domain();
    x.iter()
        .zip(d.lower.iter().zip(&d.upper))
        .all(|(&v, (&lo, &hi))| v > lo && v < hi)
}

fn simulate_path<T: Scalar, P: ControlProblem<T>>(
    problem: &P,
    grid: &SpaceGrid<T>,
    time: &TimeGrid<T>,
    policies: &[PolicyField],
    x0: &[T],
    options: &McOptions,
    path: u64,
) -> PathOutcome<T> {
    let n = grid.dim();
    let controls = problem.controls();
    let normal = Normal::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    rng.set_stream(path);

    let dt = time.dt();
    let sqrt_dt = dt.sqrt();
    let mut x = x0.to_vec();
    let mut landed = vec![T::zero(); n];
    let mut mu = vec![T::zero(); n];
    let mut s = vec![T::zero(); n * n];
    let mut c = vec![T::zero(); n * n];
    let mut xi = vec![T::zero(); n];
    let mut weight = T::one();
    let mut payoff = T::zero();
    let mut clamps = 0;

    for (k, policy) in policies.iter().enumerate().skip(options.start_step) {
        let t = time.node(k);
        let mut node = grid.nearest_interior(&x);
        if k > options.start_step {
            let mut jumps = 0;
            while !policy.is_continuation(node) {
                let z = policy.impulse(node).expect("intervention nodes carry an impulse");
                let zeta = &controls.impulse[z];
                payoff = payoff + weight * problem.intervention_profit(t, &x, zeta);
                if !problem.intervention(t, &x, zeta, &mut landed) {
                    // Snapped node intervenes but the exact state is masked;
                    // fall back to the node's own landing point.
                    let xn = grid.coord(node).to_vec();
                    problem.intervention(t, &xn, zeta, &mut landed);
                }
                x.copy_from_slice(&landed);
                node = grid.nearest_interior(&x);
                jumps += 1;
                if jumps > grid.n_interior() {
                    return PathOutcome { payoff: None, clamps };
                }
            }
        }
        let a = &controls.regular[policy.regular(node)];
        payoff = payoff + weight * problem.running_profit(t, &x, a) * dt;
        let rate = problem.discount(t, &x, a);
        problem.drift(t, &x, a, &mut mu);
        problem.diffusion_sq(t, &x, a, &mut s);
        cholesky(&s, n, &mut c);
        for v in xi.iter_mut() {
            *v = T::lit(standard_normal(&mut rng, &normal));
        }
        for i in 0..n {
            let mut noise = T::zero();
            for j in 0..=i {
                noise = noise + c[i * n + j] * xi[j];
            }
            x[i] = x[i] + mu[i] * dt + noise * sqrt_dt;
        }
        weight = weight * (-rate * dt).exp();
        if !x.iter().all(|v| v.is_finite()) {
            return PathOutcome { payoff: None, clamps };
        }
        if !inside(grid, &x) {
            let node = grid.nearest_interior(&x);
            x.copy_from_slice(grid.coord(node));
            clamps += 1;
        }
    }
    payoff = payoff + weight * problem.terminal_value(&x);
    PathOutcome {
        payoff: payoff.is_finite().then_some(payoff),
        clamps,
    }
}
