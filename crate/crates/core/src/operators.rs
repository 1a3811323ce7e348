//! Discrete operators: the generator matrix `L^{a,k}`, the intervention
//! matrix `M^z`, the stability conditions, the step bound `h` and the
//! fixed-point transform `(L, f) -> (L̄, f̄)`.
//!
//! Generator rows use the monotone seven-point family: second derivatives by
//! central differences, mixed derivatives split by the sign of `(σσᵀ)_ab`
//! onto the two matching diagonals, first derivatives either centred or
//! upwinded. For a pair of axes `a < b` each matching corner receives
//! `|(σσᵀ)_ab| / (2 δ_a δ_b)`, which is what makes the stencil reproduce
//! `½ tr(σσᵀ ∂²Ψ)` on quadratics.

use crate::error::{QviError, Result};
use crate::grid::{Direction, SpaceGrid};
use crate::problem::ControlProblem;
use crate::scalar::Scalar;
use crate::sparse::{RowBuilder, SparseMatrix};

/// Finite-difference treatment of the drift term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Scheme {
    /// Centred first differences; needs `|μ_a| ≤ S_aa/δ_a − Σ_b |S_ab|/δ_b`.
    #[default]
    Central,
    /// Upwind first differences; needs only `0 ≤ S_aa/δ_a − Σ_b |S_ab|/δ_b`.
    OneSided,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Central => "central",
            Scheme::OneSided => "one_sided",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "central" => Ok(Scheme::Central),
            "one_sided" | "one-sided" => Ok(Scheme::OneSided),
            other => Err(format!("unknown scheme '{other}' (expected central or one_sided)")),
        }
    }
}

/// Coefficients `μ`, `σσᵀ` and discount evaluated at one node.
struct Coefficients<T> {
    drift: Vec<T>,
    diff: Vec<T>,
    discount: T,
}

impl<T: Scalar> Coefficients<T> {
    fn new(n: usize) -> Self {
        Self {
            drift: vec![T::zero(); n],
            diff: vec![T::zero(); n * n],
            discount: T::zero(),
        }
    }

    fn evaluate<P: ControlProblem<T>>(
        &mut self,
        problem: &P,
        t: T,
        x: &[T],
        a: &P::Control,
        node: usize,
    ) -> Result<()> {
        let n = x.len();
        problem.drift(t, x, a, &mut self.drift);
        problem.diffusion_sq(t, x, a, &mut self.diff);
        self.discount = problem.discount(t, x, a);
        let tol = T::structural_tol();
        for r in 0..n {
            if self.diff[r * n + r] < -tol {
                return Err(QviError::NegativeDiffusion { node, axis: r });
            }
            for c in r + 1..n {
                let (u, l) = (self.diff[r * n + c], self.diff[c * n + r]);
                if (u - l).abs() > tol * (T::one() + u.abs().max(l.abs())) {
                    return Err(QviError::NonSymmetricDiffusion { node, row: r, col: c });
                }
            }
        }
        Ok(())
    }

    #[inline]
    fn s(&self, a: usize, b: usize) -> T {
        let n = self.drift.len();
        if a == b {
            self.diff[a * n + a].max(T::zero())
        } else {
            // Symmetrised; the two triangles agree up to the checked tolerance.
            (self.diff[a * n + b] + self.diff[b * n + a]) * T::lit(0.5)
        }
    }

    /// `Σ_{b≠a} |S_ab| / (δ_a δ_b)` times `δ_a`, i.e. `Σ_{b≠a} |S_ab| / δ_b`.
    fn cross_weight(&self, a: usize, steps: &[T]) -> T {
        (0..steps.len())
            .filter(|&b| b != a)
            .map(|b| self.s(a, b).abs() / steps[b])
            .fold(T::zero(), |acc, v| acc + v)
    }

    fn diagonal(&self, steps: &[T], scheme: Scheme) -> T {
        let n = steps.len();
        let mut d = -self.discount;
        for a in 0..n {
            let da = steps[a];
            d = d - self.s(a, a) / (da * da) + self.cross_weight(a, steps) / (T::lit(2.0) * da);
            if scheme == Scheme::OneSided {
                d = d - self.drift[a].abs() / da;
            }
        }
        d
    }

    fn push_row(&self, grid: &SpaceGrid<T>, i: usize, scheme: Scheme, row: &mut RowBuilder<T>) {
        let steps = grid.steps();
        let n = steps.len();
        let two = T::lit(2.0);
        let half = T::lit(0.5);
        row.push(i, self.diagonal(steps, scheme));
        for a in 0..n {
            let da = steps[a];
            let base = half * (self.s(a, a) / (da * da) - self.cross_weight(a, steps) / da);
            let mu = self.drift[a];
            let (fwd, bwd) = match scheme {
                Scheme::Central => (base + mu / (two * da), base - mu / (two * da)),
                Scheme::OneSided => (
                    base + mu.max(T::zero()) / da,
                    base + (-mu).max(T::zero()) / da,
                ),
            };
            row.push(grid.neighbor(i, a, Direction::Forward), fwd);
            row.push(grid.neighbor(i, a, Direction::Backward), bwd);
        }
        for a in 0..n {
            for b in a + 1..n {
                let sab = self.s(a, b);
                if sab == T::zero() {
                    continue;
                }
                let w = sab.abs() / (two * steps[a] * steps[b]);
                let same = sab > T::zero();
                for da in Direction::BOTH {
                    for db in Direction::BOTH {
                        if (da == db) == same {
                            let j = grid
                                .offset(i, &[(a, da), (b, db)])
                                .expect("interior nodes have all diagonal neighbours");
                            row.push(j, w);
                        }
                    }
                }
            }
        }
    }
}

/// Assembles `L^{a,k}` (`N^x × (N^x + N̄^x)`) for a per-node control field
/// given as indices into the regular control list.
pub fn assemble_generator<T: Scalar, P: ControlProblem<T>>(
    problem: &P,
    grid: &SpaceGrid<T>,
    t: T,
    control_field: &[usize],
    scheme: Scheme,
) -> Result<SparseMatrix<T>> {
    if control_field.len() != grid.n_interior() {
        return Err(QviError::Dimension(format!(
            "control field has {} entries for {} interior nodes",
            control_field.len(),
            grid.n_interior()
        )));
    }
    let controls = &problem.controls().regular;
    let mut coeff = Coefficients::new(grid.dim());
    let mut row = RowBuilder::new(grid.len());
    for (i, &a) in control_field.iter().enumerate() {
        let control = controls.get(a).ok_or_else(|| {
            QviError::Dimension(format!("control index {a} out of range at node {i}"))
        })?;
        coeff.evaluate(problem, t, grid.coord(i), control, i)?;
        coeff.push_row(grid, i, scheme, &mut row);
        row.finish_row();
    }
    Ok(row.build())
}

/// Generator for the same control at every node.
pub fn assemble_generator_uniform<T: Scalar, P: ControlProblem<T>>(
    problem: &P,
    grid: &SpaceGrid<T>,
    t: T,
    control: usize,
    scheme: Scheme,
) -> Result<SparseMatrix<T>> {
    assemble_generator(problem, grid, t, &vec![control; grid.n_interior()], scheme)
}

/// Running-profit vector `f^{a,k}` for one control at every node.
pub fn profit_vector<T: Scalar, P: ControlProblem<T>>(
    problem: &P,
    grid: &SpaceGrid<T>,
    t: T,
    control: usize,
) -> Vec<T> {
    let a = &problem.controls().regular[control];
    grid.interior()
        .map(|i| problem.running_profit(t, grid.coord(i), a))
        .collect()
}

/// Location of a stability margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginSite<T> {
    pub time_index: usize,
    pub node: usize,
    pub control: usize,
    pub axis: usize,
    /// Margin normalised by `S_aa/δ_a + Σ_b |S_ab|/δ_b + |μ_a|`; lies in `[-1, 1]`.
    pub margin: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport<T> {
    pub scheme: Scheme,
    pub passed: bool,
    pub violations: usize,
    /// Smallest normalised margin found, `None` if nothing was checked.
    pub worst: Option<MarginSite<T>>,
}

impl<T: Scalar> StabilityReport<T> {
    pub fn into_result(self) -> Result<Self> {
        match (self.passed, self.worst) {
            (false, Some(w)) => Err(QviError::Unstable {
                margin: w.margin.as_f64(),
                time_index: w.time_index,
                node: w.node,
                control: w.control,
            }),
            _ => Ok(self),
        }
    }
}

/// Checks the monotonicity condition of `scheme` at every time sample, node,
/// regular control and axis.
pub fn check_stability<T: Scalar, P: ControlProblem<T>>(
    problem: &P,
    grid: &SpaceGrid<T>,
    times: &[T],
    scheme: Scheme,
) -> Result<StabilityReport<T>> {
    let steps = grid.steps();
    let n = grid.dim();
    let tol = T::structural_tol();
    let mut coeff = Coefficients::new(n);
    let mut report = StabilityReport {
        scheme,
        passed: true,
        violations: 0,
        worst: None,
    };
    for (k, &t) in times.iter().enumerate() {
        for (c, control) in problem.controls().regular.iter().enumerate() {
            for i in grid.interior() {
                coeff.evaluate(problem, t, grid.coord(i), control, i)?;
                for a in 0..n {
                    let diffusive = coeff.s(a, a) / steps[a];
                    let cross = coeff.cross_weight(a, steps);
                    let mu = coeff.drift[a].abs();
                    let raw = match scheme {
                        Scheme::Central => diffusive - cross - mu,
                        Scheme::OneSided => diffusive - cross,
                    };
                    let scale = diffusive + cross + mu;
                    let margin = if scale > T::zero() { raw / scale } else { T::zero() };
                    if margin < -tol {
                        report.passed = false;
                        report.violations += 1;
                    }
                    if report.worst.is_none_or(|w| margin < w.margin) {
                        report.worst = Some(MarginSite {
                            time_index: k,
                            node: i,
                            control: c,
                            axis: a,
                            margin,
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Upper bound `h ≤ min 1/|L_ii|` over all controls, nodes and time samples.
/// Returns `cap` when every diagonal vanishes.
pub fn compute_h<T: Scalar, P: ControlProblem<T>>(
    problem: &P,
    grid: &SpaceGrid<T>,
    times: &[T],
    scheme: Scheme,
    cap: T,
) -> Result<T> {
    let mut coeff = Coefficients::new(grid.dim());
    let mut largest = T::zero();
    for &t in times {
        for control in &problem.controls().regular {
            for i in grid.interior() {
                coeff.evaluate(problem, t, grid.coord(i), control, i)?;
                largest = largest.max(coeff.diagonal(grid.steps(), scheme).abs());
            }
        }
    }
    Ok(if largest > T::zero() {
        (T::one() / largest).min(cap)
    } else {
        cap
    })
}

/// Post-intervention targets `η(i, z)` and profits `K^{z,k}_i` for every
/// interior node and impulse at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionTable<T> {
    n_impulses: usize,
    targets: Vec<Option<usize>>,
    profits: Vec<T>,
}

impl<T: Scalar> InterventionTable<T> {
    pub fn build<P: ControlProblem<T>>(problem: &P, grid: &SpaceGrid<T>, t: T) -> Result<Self> {
        let impulses = &problem.controls().impulse;
        let nz = impulses.len();
        let mut targets = Vec::with_capacity(grid.n_interior() * nz);
        let mut profits = Vec::with_capacity(grid.n_interior() * nz);
        let mut landing = vec![T::zero(); grid.dim()];
        for i in grid.interior() {
            let x = grid.coord(i);
            for z in impulses {
                if problem.intervention(t, x, z, &mut landing) {
                    let j = grid
                        .index_of(&landing)
                        .ok_or(QviError::InterventionOffGrid { row: i })?;
                    if j >= i {
                        return Err(QviError::InterventionOrder { row: i, target: j });
                    }
                    targets.push(Some(j));
                    profits.push(problem.intervention_profit(t, x, z));
                } else {
                    targets.push(None);
                    profits.push(T::zero());
                }
            }
        }
        Ok(Self {
            n_impulses: nz,
            targets,
            profits,
        })
    }

    pub fn n_impulses(&self) -> usize {
        self.n_impulses
    }

    /// `η(i, z)`, or `None` where the impulse is unavailable.
    #[inline]
    pub fn target(&self, i: usize, z: usize) -> Option<usize> {
        self.targets[i * self.n_impulses + z]
    }

    #[inline]
    pub fn profit(&self, i: usize, z: usize) -> T {
        self.profits[i * self.n_impulses + z]
    }

    pub fn available(&self, i: usize) -> bool {
        (0..self.n_impulses).any(|z| self.target(i, z).is_some())
    }
}

/// Assembles `M^z` for an impulse field. Rows whose entry is `None` or whose
/// impulse is unavailable are masked: they carry no entry and `mask[i]` is
/// `false`.
pub fn assemble_intervention<T: Scalar, P: ControlProblem<T>>(
    problem: &P,
    grid: &SpaceGrid<T>,
    t: T,
    impulse_field: &[Option<usize>],
) -> Result<(SparseMatrix<T>, Vec<bool>)> {
    if impulse_field.len() != grid.n_interior() {
        return Err(QviError::Dimension(format!(
            "impulse field has {} entries for {} interior nodes",
            impulse_field.len(),
            grid.n_interior()
        )));
    }
    let table = InterventionTable::build(problem, grid, t)?;
    let mut row = RowBuilder::new(grid.len());
    let mut mask = Vec::with_capacity(grid.n_interior());
    for (i, z) in impulse_field.iter().enumerate() {
        let target = z.and_then(|z| {
            assert!(z < table.n_impulses(), "impulse index {z} out of range");
            table.target(i, z)
        });
        if let Some(j) = target {
            row.push(j, T::one());
        }
        mask.push(target.is_some());
        row.finish_row();
    }
    Ok((row.build(), mask))
}

/// Per-control transformed operators for one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointOperators<T> {
    pub h: T,
    /// `L̄^{a,k}` indexed by regular control.
    pub matrices: Vec<SparseMatrix<T>>,
    /// `f̄^{a,k}` indexed by regular control.
    pub forcing: Vec<Vec<T>>,
}

/// `L̄ = δt/(h+δt) (I + hL)`, `f̄ = (hδt f + h φ^{k+1}) / (h+δt)`.
///
/// Rejects any entry outside `[0, 1)` and any row whose sum exceeds
/// `1 − tol`; entries within `tol` below zero are rounding and are clamped.
pub fn transform_fixed_point<T: Scalar>(
    l: &SparseMatrix<T>,
    f: &[T],
    phi_next: &[T],
    h: T,
    dt: T,
) -> Result<(SparseMatrix<T>, Vec<T>)> {
    check_transform_inputs(l, f, h)?;
    let scale = dt / (h + dt);
    let lbar = shifted_identity(l, scale, scale * h);
    let fbar = f
        .iter()
        .zip(phi_next)
        .map(|(&fi, &pi)| (h * dt * fi + h * pi) / (h + dt))
        .collect();
    Ok((check_transformed(lbar, false)?, fbar))
}

/// Stationary variant `L̄ = I + hL`, `f̄ = h f`; requires row sums below one.
pub fn transform_stationary<T: Scalar>(
    l: &SparseMatrix<T>,
    f: &[T],
    h: T,
) -> Result<(SparseMatrix<T>, Vec<T>)> {
    check_transform_inputs(l, f, h)?;
    let lbar = shifted_identity(l, T::one(), h);
    let fbar = f.iter().map(|&fi| h * fi).collect();
    Ok((check_transformed(lbar, true)?, fbar))
}

fn check_transform_inputs<T: Scalar>(l: &SparseMatrix<T>, f: &[T], h: T) -> Result<()> {
    if !(h > T::zero()) {
        return Err(QviError::InvalidParams(format!("h must be positive, got {h}")));
    }
    if f.len() != l.nrows() {
        return Err(QviError::Dimension(format!(
            "forcing has {} entries for {} rows",
            f.len(),
            l.nrows()
        )));
    }
    Ok(())
}

/// `c·I + s·L`, merged per row so a cancelled diagonal is dropped.
fn shifted_identity<T: Scalar>(l: &SparseMatrix<T>, c: T, s: T) -> SparseMatrix<T> {
    let mut b = RowBuilder::new(l.ncols());
    for i in 0..l.nrows() {
        b.push(i, c);
        for (j, v) in l.row_entries(i) {
            b.push(j, s * v);
        }
        b.finish_row();
    }
    b.build()
}

fn check_transformed<T: Scalar>(m: SparseMatrix<T>, stationary: bool) -> Result<SparseMatrix<T>> {
    let tol = T::structural_tol();
    let mut clamped = 0usize;
    for i in 0..m.nrows() {
        for (j, v) in m.row_entries(i) {
            if v < -tol {
                return Err(QviError::TransformRow {
                    row: i,
                    reason: format!("entry at column {j} is negative ({v:e})"),
                });
            }
            if v < T::zero() {
                clamped += 1;
            }
            if v >= T::one() && !(stationary && i == j && v == T::one()) {
                return Err(QviError::TransformRow {
                    row: i,
                    reason: format!("entry at column {j} is not below one ({v:e})"),
                });
            }
        }
        let sum: T = m.row(i).1.iter().map(|v| v.max(T::zero())).sum();
        if sum > T::one() - tol {
            return Err(if stationary {
                QviError::NotContractive {
                    row: i,
                    sum: sum.as_f64(),
                }
            } else {
                QviError::TransformRow {
                    row: i,
                    reason: format!("row sum {sum:e} is not below one"),
                }
            });
        }
    }
    if clamped == 0 {
        return Ok(m);
    }
    log::debug!("clamped {clamped} rounding-level negative entries of the transformed operator");
    Ok(m.map_entries(|_, _, v| v.max(T::zero())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainBox;
    use crate::problem::ControlSets;

    /// Constant-coefficient test problem on an arbitrary box.
    struct Constant {
        drift: Vec<f64>,
        diff: Vec<f64>,
        discount: f64,
        sets: ControlSets<(), ()>,
    }

    impl Constant {
        fn new(drift: Vec<f64>, diff: Vec<f64>) -> Self {
            Self {
                drift,
                diff,
                discount: 0.0,
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
        fn drift(&self, _t: f64, _x: &[f64], _a: &(), out: &mut [f64]) {
            out.copy_from_slice(&self.drift);
        }
        fn diffusion_sq(&self, _t: f64, _x: &[f64], _a: &(), out: &mut [f64]) {
            out.copy_from_slice(&self.diff);
        }
        fn discount(&self, _t: f64, _x: &[f64], _a: &()) -> f64 {
            self.discount
        }
        fn running_profit(&self, _t: f64, _x: &[f64], _a: &()) -> f64 {
            0.0
        }
        fn terminal_value(&self, _x: &[f64]) -> f64 {
            0.0
        }
        fn intervention(&self, _t: f64, _x: &[f64], _z: &(), _out: &mut [f64]) -> bool {
            false
        }
        fn intervention_profit(&self, _t: f64, _x: &[f64], _z: &()) -> f64 {
            0.0
        }
        fn boundary_value(&self, _t: f64, _x: &[f64], _g: &SpaceGrid<f64>, _p: &[f64]) -> f64 {
            0.0
        }
    }

    fn unit_square(h: f64) -> SpaceGrid<f64> {
        SpaceGrid::new(DomainBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(), &[h, h]).unwrap()
    }

    #[test]
    fn zero_coefficients_give_zero_matrix() {
        let p = Constant::new(vec![0.0], vec![0.0]);
        let g = SpaceGrid::uniform_1d(0.0, 1.0, 0.25).unwrap();
        let l = assemble_generator_uniform(&p, &g, 0.0, 0, Scheme::Central).unwrap();
        assert_eq!(l.nnz(), 0);
        assert_eq!((l.nrows(), l.ncols()), (3, 5));
        assert_eq!(compute_h(&p, &g, &[0.0], Scheme::Central, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn cross_derivative_on_quadratic() {
        let p = Constant::new(vec![0.0, 0.0], vec![1.0, 0.5, 0.5, 1.0]);
        for h in [0.25, 0.125] {
            let g = unit_square(h);
            let l = assemble_generator_uniform(&p, &g, 0.0, 0, Scheme::Central).unwrap();
            let psi: Vec<f64> = (0..g.len()).map(|i| g.coord(i)[0] * g.coord(i)[1]).collect();
            for (i, v) in l.mul_vec(&psi).into_iter().enumerate() {
                assert!((v - 0.5).abs() < 1e-10, "node {i}: {v}");
            }
            // Each row touches at most 1 + 2n + 4 n(n-1)/2 columns; with a
            // positive correlation only the ++/-- corners are used.
            for i in g.interior() {
                assert_eq!(l.row(i).0.len(), 7);
                assert!(l.row_sum(i).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn negative_correlation_uses_anti_diagonal() {
        let p = Constant::new(vec![0.0, 0.0], vec![1.0, -0.5, -0.5, 1.0]);
        let g = unit_square(0.25);
        let l = assemble_generator_uniform(&p, &g, 0.0, 0, Scheme::Central).unwrap();
        let center = g.index_of(&[0.5, 0.5]).unwrap();
        let pm = g.index_of(&[0.75, 0.25]).unwrap();
        let pp = g.index_of(&[0.75, 0.75]).unwrap();
        assert!(l.get(center, pm) > 0.0);
        assert_eq!(l.get(center, pp), 0.0);
        let psi: Vec<f64> = (0..g.len()).map(|i| g.coord(i)[0] * g.coord(i)[1]).collect();
        assert!((l.row_dot(center, &psi) + 0.5).abs() < 1e-10);
    }

    #[test]
    fn rejects_asymmetric_diffusion() {
        let p = Constant::new(vec![0.0, 0.0], vec![1.0, 0.5, 0.2, 1.0]);
        let g = unit_square(0.25);
        let err = assemble_generator_uniform(&p, &g, 0.0, 0, Scheme::Central).unwrap_err();
        assert!(matches!(err, QviError::NonSymmetricDiffusion { row: 0, col: 1, .. }));
        let err = assemble_generator(&p, &g, 0.0, &[0; 3], Scheme::Central).unwrap_err();
        assert!(matches!(err, QviError::Dimension(_)));
    }

    #[test]
    fn degenerate_diffusion_stability() {
        let p = Constant::new(vec![1.0], vec![0.0]);
        let g = SpaceGrid::uniform_1d(0.0, 1.0, 0.25).unwrap();
        let central = check_stability(&p, &g, &[0.0], Scheme::Central).unwrap();
        assert!(!central.passed);
        assert_eq!(central.violations, 3);
        let upwind = check_stability(&p, &g, &[0.0], Scheme::OneSided).unwrap();
        assert!(upwind.passed);
        assert_eq!(upwind.worst.unwrap().margin, 0.0);
        assert!(central.into_result().is_err());
    }

    #[test]
    fn upwind_rows_are_monotone() {
        let p = Constant::new(vec![3.0], vec![0.0]);
        let g = SpaceGrid::uniform_1d(0.0, 1.0, 0.25).unwrap();
        let l = assemble_generator_uniform(&p, &g, 0.0, 0, Scheme::OneSided).unwrap();
        for i in g.interior() {
            assert_eq!(l.get(i, i), -12.0);
            assert_eq!(l.get(i, g.neighbor(i, 0, Direction::Forward)), 12.0);
            assert_eq!(l.get(i, g.neighbor(i, 0, Direction::Backward)), 0.0);
        }
    }

    #[test]
    fn transform_of_zero_operator() {
        let l = SparseMatrix::<f64>::zeros(2, 4);
        let (lbar, fbar) = transform_fixed_point(&l, &[0.0, 0.0], &[0.0; 2], 0.5, 0.25).unwrap();
        let c = 0.25 / 0.75;
        assert_eq!(lbar, SparseMatrix::identity(2, 4).map_entries(|_, _, v| v * c));
        assert_eq!(fbar, vec![0.0, 0.0]);
        let err = transform_stationary(&l, &[0.0, 0.0], 0.5).unwrap_err();
        assert!(matches!(err, QviError::NotContractive { row: 0, .. }));
    }

    #[test]
    fn discounted_stationary_transform_contracts() {
        let mut p = Constant::new(vec![0.0], vec![1.0]);
        p.discount = 2.0;
        let g = SpaceGrid::uniform_1d(0.0, 1.0, 0.25).unwrap();
        let l = assemble_generator_uniform(&p, &g, 0.0, 0, Scheme::Central).unwrap();
        let h = compute_h(&p, &g, &[0.0], Scheme::Central, 1.0).unwrap();
        assert!((h - 1.0 / 18.0).abs() < 1e-15);
        let (lbar, _) = transform_stationary(&l, &[0.0; 3], h).unwrap();
        for i in 0..3 {
            assert!((lbar.row_sum(i) - (1.0 - 2.0 * h)).abs() < 1e-14);
        }
    }

    #[test]
    fn transform_rejects_oversized_h() {
        let p = Constant::new(vec![0.0], vec![1.0]);
        let g = SpaceGrid::uniform_1d(0.0, 1.0, 0.25).unwrap();
        let l = assemble_generator_uniform(&p, &g, 0.0, 0, Scheme::Central).unwrap();
        let err = transform_fixed_point(&l, &[0.0; 3], &[0.0; 3], 1.0, 0.1).unwrap_err();
        assert!(matches!(err, QviError::TransformRow { row: 0, .. }));
    }
}
