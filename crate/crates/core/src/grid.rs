//! Time and space grids.
//!
//! Spatial nodes live on the full lattice `lower + m * step` of a rectangular
//! box. Global indices put every interior node first (`0..n_interior`) and the
//! boundary nodes after them, each block in lexicographic lattice order with
//! axis 0 most significant. Coordinates are always computed from integer
//! lattice indices, never accumulated.

use crate::error::{QviError, Result};
use crate::scalar::Scalar;

/// Relative tolerance for "lies on the lattice" tests.
const ON_GRID_TOL: f64 = 1e-9;

/// Uniform time grid `t_k = k * dt`, `k = 0..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid<T> {
    horizon: T,
    steps: usize,
    dt: T,
}

impl<T: Scalar> TimeGrid<T> {
    pub fn new(horizon: T, steps: usize) -> Result<Self> {
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(QviError::InvalidTimeGrid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(QviError::InvalidTimeGrid("step count must be at least 1".into()));
        }
        Ok(Self {
            horizon,
            steps,
            dt: horizon / T::from_index(steps),
        })
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    /// Number of steps `N^t`; there are `N^t + 1` nodes.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// `t_k`. The last node is pinned to the horizon.
    pub fn node(&self, k: usize) -> T {
        assert!(k <= self.steps, "time index {k} beyond {}", self.steps);
        if k == self.steps {
            self.horizon
        } else {
            T::from_index(k) * self.dt
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = T> + '_ {
        (0..=self.steps).map(|k| self.node(k))
    }
}

/// Axis-aligned box `[lower_a, upper_a]` per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> DomainBox<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(QviError::Dimension(format!(
                "box bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (axis, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(*hi > *lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(QviError::InvalidGrid {
                    axis,
                    reason: format!("box has no positive extent: [{lo}, {hi}]"),
                });
            }
        }
        Ok(Self { lower, upper })
    }

    /// One-dimensional interval `[lo, hi]`.
    pub fn interval(lo: T, hi: T) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }
}

/// Stencil direction along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Backward,
    Forward,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Backward, Direction::Forward];

    pub fn sign(self) -> isize {
        match self {
            Direction::Backward => -1,
            Direction::Forward => 1,
        }
    }
}

/// Rectangular lattice with the interior/boundary index partition.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceGrid<T> {
    domain: DomainBox<T>,
    steps: Vec<T>,
    intervals: Vec<usize>,
    strides: Vec<usize>,
    lattice_to_global: Vec<usize>,
    multi: Vec<usize>,
    coords: Vec<T>,
    n_interior: usize,
}

impl<T: Scalar> SpaceGrid<T> {
    pub fn new(domain: DomainBox<T>, steps: &[T]) -> Result<Self> {
        let n = domain.dim();
        if steps.len() != n {
            return Err(QviError::Dimension(format!(
                "{} steps given for a {n}-dimensional box",
                steps.len()
            )));
        }
        let mut intervals = Vec::with_capacity(n);
        for axis in 0..n {
            let d = steps[axis];
            if !(d > T::zero()) || !d.is_finite() {
                return Err(QviError::InvalidGrid {
                    axis,
                    reason: format!("step must be positive, got {d}"),
                });
            }
            let extent = domain.upper[axis] - domain.lower[axis];
            let m = (extent / d).round();
            if (m * d - extent).abs() > T::lit(ON_GRID_TOL) * extent {
                return Err(QviError::InvalidGrid {
                    axis,
                    reason: format!("step {d} does not divide extent {extent}"),
                });
            }
            let m = m.to_usize().unwrap_or(0);
            if m < 2 {
                return Err(QviError::InvalidGrid {
                    axis,
                    reason: format!("step {d} leaves no interior node"),
                });
            }
            intervals.push(m);
        }

        let mut strides = vec![1usize; n];
        for a in (0..n.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * (intervals[a + 1] + 1);
        }
        let lattice_len = strides[0] * (intervals[0] + 1);

        let is_interior = |lin: usize| {
            (0..n).all(|a| {
                let m = (lin / strides[a]) % (intervals[a] + 1);
                m > 0 && m < intervals[a]
            })
        };
        let order: Vec<usize> = (0..lattice_len)
            .filter(|&l| is_interior(l))
            .chain((0..lattice_len).filter(|&l| !is_interior(l)))
            .collect();
        let n_interior = order.iter().take_while(|&&l| is_interior(l)).count();

        let mut lattice_to_global = vec![0usize; lattice_len];
        let mut multi = Vec::with_capacity(lattice_len * n);
        let mut coords = Vec::with_capacity(lattice_len * n);
        for (g, &lin) in order.iter().enumerate() {
            lattice_to_global[lin] = g;
            for a in 0..n {
                let m = (lin / strides[a]) % (intervals[a] + 1);
                multi.push(m);
                let x = if m == intervals[a] {
                    domain.upper[a]
                } else {
                    domain.lower[a] + T::from_index(m) * steps[a]
                };
                coords.push(x);
            }
        }

        Ok(Self {
            domain,
            steps: steps.to_vec(),
            intervals,
            strides,
            lattice_to_global,
            multi,
            coords,
            n_interior,
        })
    }

    /// Uniform 1-D grid on `[lo, hi]`.
    pub fn uniform_1d(lo: T, hi: T, step: T) -> Result<Self> {
        Self::new(DomainBox::interval(lo, hi)?, &[step])
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &DomainBox<T> {
        &self.domain
    }

    pub fn steps(&self) -> &[T] {
        &self.steps
    }

    pub fn step(&self, axis: usize) -> T {
        self.steps[axis]
    }

    /// Number of lattice intervals per axis.
    pub fn intervals(&self) -> &[usize] {
        &self.intervals
    }

    /// `N^x`.
    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    /// `N̄^x`.
    pub fn n_boundary(&self) -> usize {
        self.len() - self.n_interior
    }

    /// `N^x + N̄^x`.
    pub fn len(&self) -> usize {
        self.lattice_to_global.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_interior(&self, i: usize) -> bool {
        i < self.n_interior
    }

    pub fn coord(&self, i: usize) -> &[T] {
        let n = self.dim();
        &self.coords[i * n..(i + 1) * n]
    }

    pub fn lattice_index(&self, i: usize) -> &[usize] {
        let n = self.dim();
        &self.multi[i * n..(i + 1) * n]
    }

    pub fn interior(&self) -> std::ops::Range<usize> {
        0..self.n_interior
    }

    pub fn boundary(&self) -> std::ops::Range<usize> {
        self.n_interior..self.len()
    }

    /// Global index of `x_i + sign * step_axis * e_axis`.
    ///
    /// Panics if `i` is not interior; every interior node has all of its axis
    /// neighbours on the lattice.
    pub fn neighbor(&self, i: usize, axis: usize, dir: Direction) -> usize {
        assert!(self.is_interior(i), "neighbor() of non-interior node {i}");
        self.offset(i, &[(axis, dir)])
            .expect("interior nodes have all axis neighbours")
    }

    /// Global index of `x_i + Σ sign_k * step_{axis_k} * e_{axis_k}`, or `None`
    /// when the displaced point leaves the lattice.
    pub fn offset(&self, i: usize, moves: &[(usize, Direction)]) -> Option<usize> {
        let base = self.lattice_index(i);
        let mut lin = 0usize;
        let mut shifted: Vec<isize> = base.iter().map(|&m| m as isize).collect();
        for &(axis, dir) in moves {
            shifted[axis] += dir.sign();
        }
        for (a, &m) in shifted.iter().enumerate() {
            if m < 0 || m as usize > self.intervals[a] {
                return None;
            }
            lin += m as usize * self.strides[a];
        }
        Some(self.lattice_to_global[lin])
    }

    /// Global index of the lattice node at `point`, if it lies on the lattice.
    pub fn index_of(&self, point: &[T]) -> Option<usize> {
        if point.len() != self.dim() {
            return None;
        }
        let mut lin = 0usize;
        for (a, &x) in point.iter().enumerate() {
            let r = (x - self.domain.lower[a]) / self.steps[a];
            let m = r.round();
            if (r - m).abs() > T::lit(ON_GRID_TOL) * (T::one() + m.abs()) {
                return None;
            }
            let m = m.to_isize()?;
            if m < 0 || m as usize > self.intervals[a] {
                return None;
            }
            lin += m as usize * self.strides[a];
        }
        Some(self.lattice_to_global[lin])
    }

    /// Nearest interior node to an arbitrary point, clamping into the interior.
    pub fn nearest_interior(&self, point: &[T]) -> usize {
        let mut lin = 0usize;
        for (a, &x) in point.iter().enumerate() {
            let r = ((x - self.domain.lower[a]) / self.steps[a]).round();
            let hi = (self.intervals[a] - 1) as isize;
            let m = r.to_isize().unwrap_or(if r > T::zero() { hi } else { 1 });
            lin += m.clamp(1, hi) as usize * self.strides[a];
        }
        self.lattice_to_global[lin]
    }

    /// Nearest lattice coordinate along one axis (used for diagnostics).
    pub fn nearest_coordinate(&self, axis: usize, x: T) -> T {
        let lo = self.domain.lower[axis];
        let m = ((x - lo) / self.steps[axis])
            .round()
            .max(T::zero())
            .min(T::from_index(self.intervals[axis]));
        lo + m * self.steps[axis]
    }
}

/// Builds the time grid and the spatial grid together.
pub fn build_grid<T: Scalar>(
    domain: DomainBox<T>,
    steps: &[T],
    horizon: T,
    time_steps: usize,
) -> Result<(TimeGrid<T>, SpaceGrid<T>)> {
    let space = SpaceGrid::new(domain, steps)?;
    let time = TimeGrid::new(horizon, time_steps)?;
    Ok((time, space))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forest_grid_shape() {
        let (time, space) =
            build_grid(DomainBox::<f64>::interval(0.0, 10.0).unwrap(), &[0.1], 3.0, 3000).unwrap();
        assert_eq!(space.n_interior(), 99);
        assert_eq!(space.n_boundary(), 2);
        assert!((space.coord(0)[0] - 0.1).abs() < 1e-15);
        assert!((space.coord(98)[0] - 9.9).abs() < 1e-13);
        assert_eq!(space.coord(99)[0], 0.0);
        assert_eq!(space.coord(100)[0], 10.0);
        assert!((time.dt() - 0.001).abs() < 1e-18);
        assert_eq!(time.node(0), 0.0);
        assert_eq!(time.node(3000), 3.0);
    }

    #[test]
    fn smallest_grid() {
        let (time, space) =
            build_grid(DomainBox::interval(0.0, 1.0).unwrap(), &[0.5], 1.0, 1).unwrap();
        assert_eq!(space.n_interior(), 1);
        assert_eq!(space.coord(0), &[0.5]);
        assert_eq!(space.coord(1), &[0.0]);
        assert_eq!(space.coord(2), &[1.0]);
        assert_eq!(time.nodes().collect::<Vec<_>>(), vec![0.0, 1.0]);
    }

    #[test]
    fn two_dimensional_lattice() {
        let d = DomainBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let g = SpaceGrid::new(d, &[0.25, 0.25]).unwrap();
        assert_eq!(g.n_interior(), 9);
        assert_eq!(g.n_boundary(), 16);
        // Interior block in lexicographic order, axis 0 most significant.
        let expected: Vec<[f64; 2]> = [0.25, 0.5, 0.75]
            .iter()
            .flat_map(|&a| [0.25, 0.5, 0.75].map(|b| [a, b]))
            .collect();
        for (i, e) in expected.iter().enumerate() {
            assert_eq!(g.coord(i), e);
        }
        let center = g.index_of(&[0.5, 0.5]).unwrap();
        assert_eq!(center, 4);
        let up = g.neighbor(center, 1, Direction::Forward);
        assert_eq!(g.coord(up), &[0.5, 0.75]);
        // Every interior node reaches all eight surrounding nodes.
        for i in g.interior() {
            for a in Direction::BOTH {
                for b in Direction::BOTH {
                    let j = g.offset(i, &[(0, a), (1, b)]).unwrap();
                    let (xi, xj) = (g.coord(i), g.coord(j));
                    assert!((xj[0] - xi[0] - 0.25 * a.sign() as f64).abs() < 1e-15);
                    assert!((xj[1] - xi[1] - 0.25 * b.sign() as f64).abs() < 1e-15);
                }
            }
        }
        // Corners are boundary nodes.
        assert!(!g.is_interior(g.index_of(&[0.0, 1.0]).unwrap()));
    }

    #[test]
    fn neighbors_in_one_dimension() {
        let g = SpaceGrid::<f64>::uniform_1d(0.0, 10.0, 0.1).unwrap();
        let left = g.neighbor(0, 0, Direction::Backward);
        assert_eq!(g.coord(left), &[0.0]);
        let five = g.index_of(&[5.0]).unwrap();
        let right = g.neighbor(five, 0, Direction::Forward);
        assert!((g.coord(right)[0] - 5.1).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_steps() {
        let err = SpaceGrid::uniform_1d(0.0, 10.0, 0.3).unwrap_err();
        assert!(matches!(err, QviError::InvalidGrid { axis: 0, .. }));
        let d = DomainBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let err = SpaceGrid::new(d.clone(), &[0.25, 0.3]).unwrap_err();
        assert!(matches!(err, QviError::InvalidGrid { axis: 1, .. }));
        assert!(SpaceGrid::new(d, &[0.25, -0.25]).is_err());
        assert!(SpaceGrid::uniform_1d(0.0, 1.0, 0.0).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert!(TimeGrid::new(-1.0, 3).is_err());
    }

    #[test]
    fn nearest_interior_clamps() {
        let g = SpaceGrid::<f64>::uniform_1d(0.0, 10.0, 0.1).unwrap();
        assert_eq!(g.nearest_interior(&[-3.0]), 0);
        assert_eq!(g.nearest_interior(&[12.0]), 98);
        assert_eq!(g.nearest_interior(&[5.04]), g.index_of(&[5.0]).unwrap());
        assert_eq!(g.index_of(&[5.05]), None);
    }
}
