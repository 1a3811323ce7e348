//! Linear solves for the policy system `(I − A) φ′ = b`.
//!
//! `A` comes from the current policy: transformed generator rows
//! on continuation indices, single unit entries `A_{i,η(i)}` with `η(i) < i`
//! on intervention indices, and zero rows on the boundary. The direct method
//! first eliminates the trivial rows structurally (zero rows give `φ′_i = b_i`;
//! unit rows pointing to a lower index give `φ′_i = φ′_{η(i)} + b_i`, so each
//! chain telescopes to a continuation row plus a constant), then factors the
//! remaining continuation block with a sparse LU with partial pivoting.

use crate::error::{QviError, Result};
use crate::scalar::{sup_norm, Scalar};
use crate::sparse::{RowBuilder, SparseMatrix};

/// `(A, b)` for one policy iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySystem<T> {
    pub a: SparseMatrix<T>,
    pub b: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolveMethod {
    /// Chain reduction plus sparse LU with partial pivoting.
    #[default]
    Direct,
    /// Gauss–Seidel sweeps in natural index order.
    Sweep,
}

impl std::str::FromStr for SolveMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "direct" => Ok(SolveMethod::Direct),
            "sweep" => Ok(SolveMethod::Sweep),
            other => Err(format!("unknown solver '{other}' (expected direct or sweep)")),
        }
    }
}

impl SolveMethod {
    pub fn name(self) -> &'static str {
        match self {
            SolveMethod::Direct => "direct",
            SolveMethod::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions<T> {
    pub method: SolveMethod,
    /// Residual target `‖(I−A)φ′ − b‖∞ ≤ tol (1 + ‖b‖∞)`.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            method: SolveMethod::Direct,
            tol: T::lit(1e-10).max(T::epsilon() * T::lit(64.0)),
            max_iter: 100_000,
        }
    }
}

/// `‖(I − A)x − b‖∞`.
pub fn residual<T: Scalar>(system: &PolicySystem<T>, x: &[T]) -> T {
    (0..system.b.len())
        .map(|i| (x[i] - system.a.row_dot(i, x) - system.b[i]).abs())
        .fold(T::zero(), T::max)
}

pub fn solve_policy_system<T: Scalar>(
    system: &PolicySystem<T>,
    opts: &SolveOptions<T>,
) -> Result<Vec<T>> {
    let n = system.b.len();
    if system.a.nrows() != n || system.a.ncols() != n {
        return Err(QviError::Dimension(format!(
            "policy matrix is {}x{} for a right-hand side of length {n}",
            system.a.nrows(),
            system.a.ncols()
        )));
    }
    let x = match opts.method {
        SolveMethod::Direct => solve_direct(system)?,
        SolveMethod::Sweep => solve_sweep(system, opts.tol, opts.max_iter)?,
    };
    let bound = opts.tol * (T::one() + sup_norm(&system.b));
    let r = residual(system, &x);
    if !(r <= bound) {
        return Err(QviError::Residual {
            residual: r.as_f64(),
            bound: bound.as_f64(),
        });
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy)]
enum RowKind {
    Fixed,
    Chain(usize),
    Coupled(usize),
}

fn classify<T: Scalar>(a: &SparseMatrix<T>) -> (Vec<RowKind>, usize) {
    let mut coupled = 0;
    let kinds = (0..a.nrows())
        .map(|i| {
            let (cols, vals) = a.row(i);
            match (cols, vals) {
                ([], []) => RowKind::Fixed,
                ([j], [v]) if *j < i && *v == T::one() => RowKind::Chain(*j),
                _ => {
                    coupled += 1;
                    RowKind::Coupled(coupled - 1)
                }
            }
        })
        .collect();
    (kinds, coupled)
}

fn solve_direct<T: Scalar>(system: &PolicySystem<T>) -> Result<Vec<T>> {
    let a = &system.a;
    let b = &system.b;
    let n = b.len();
    let (kinds, m) = classify(a);

    // Every non-coupled row resolves to `offset + x[root]` (root = None: pure
    // constant). Chains point strictly downwards, so one forward pass suffices.
    let mut root: Vec<Option<usize>> = vec![None; n];
    let mut offset = vec![T::zero(); n];
    let mut coupled_rows = Vec::with_capacity(m);
    for i in 0..n {
        match kinds[i] {
            RowKind::Fixed => offset[i] = b[i],
            RowKind::Chain(j) => {
                root[i] = match kinds[j] {
                    RowKind::Coupled(_) => Some(j),
                    _ => root[j],
                };
                offset[i] = match kinds[j] {
                    RowKind::Coupled(_) => b[i],
                    _ => offset[j] + b[i],
                };
            }
            RowKind::Coupled(_) => coupled_rows.push(i),
        }
    }

    let mut x = vec![T::zero(); n];
    if m > 0 {
        // Reduced system over coupled rows: (I − A) restricted, with fixed
        // and chain columns substituted.
        let mut builder = RowBuilder::new(m);
        let mut rhs = Vec::with_capacity(m);
        for &i in &coupled_rows {
            let mut r = b[i];
            let RowKind::Coupled(ri) = kinds[i] else { unreachable!() };
            builder.push(ri, T::one());
            for (j, v) in a.row_entries(i) {
                match kinds[j] {
                    RowKind::Coupled(cj) => builder.push(cj, -v),
                    _ => {
                        r = r + v * offset[j];
                        if let Some(root_j) = root[j] {
                            let RowKind::Coupled(cj) = kinds[root_j] else { unreachable!() };
                            builder.push(cj, -v);
                        }
                    }
                }
            }
            builder.finish_row();
            rhs.push(r);
        }
        let reduced = builder.build();
        let y = SparseLu::factor(&reduced)?.solve(&rhs);
        for (k, &i) in coupled_rows.iter().enumerate() {
            x[i] = y[k];
        }
    }
    for i in 0..n {
        if !matches!(kinds[i], RowKind::Coupled(_)) {
            x[i] = offset[i] + root[i].map_or(T::zero(), |r| x[r]);
        }
    }
    Ok(x)
}

fn solve_sweep<T: Scalar>(system: &PolicySystem<T>, tol: T, max_iter: usize) -> Result<Vec<T>> {
    let a = &system.a;
    let b = &system.b;
    let n = b.len();
    let bound = tol * (T::one() + sup_norm(b));
    let mut x = b.clone();
    let mut last = T::infinity();
    for _ in 0..max_iter {
        for i in 0..n {
            let (cols, vals) = a.row(i);
            let mut diag = T::zero();
            let mut acc = b[i];
            for (&j, &v) in cols.iter().zip(vals) {
                if j == i {
                    diag = v;
                } else {
                    acc = acc + v * x[j];
                }
            }
            x[i] = acc / (T::one() - diag);
        }
        last = residual(system, &x);
        // Stop a little inside the contract so the post-hoc check never trips
        // on rounding.
        if last <= bound * T::lit(0.5) {
            return Ok(x);
        }
    }
    Err(QviError::SweepNotConverged {
        iterations: max_iter,
        residual: last.as_f64(),
    })
}

/// Sparse LU factorisation `PA = LU` with row partial pivoting, computed by
/// right-looking elimination on sparse rows.
#[derive(Debug, Clone)]
pub struct SparseLu<T> {
    n: usize,
    /// Original row chosen as pivot for each column.
    perm: Vec<usize>,
    /// Elimination record per pivot step: `(target row, multiplier)`.
    eliminations: Vec<Vec<(usize, T)>>,
    /// Upper factor, row `k` belongs to pivot column `k`; diagonal first.
    upper: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> SparseLu<T> {
    pub fn factor(m: &SparseMatrix<T>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(QviError::Dimension(format!(
                "cannot factor a {}x{} matrix",
                n,
                m.ncols()
            )));
        }
        let mut rows: Vec<Vec<(usize, T)>> = (0..n).map(|i| m.row_entries(i).collect()).collect();
        let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, r) in rows.iter().enumerate() {
            for &(j, _) in r {
                col_rows[j].push(i);
            }
        }
        let mut pivoted = vec![false; n];
        let mut perm = Vec::with_capacity(n);
        let mut eliminations = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        let mut scratch: Vec<(usize, T)> = Vec::new();

        for k in 0..n {
            let mut candidates = std::mem::take(&mut col_rows[k]);
            candidates.sort_unstable();
            candidates.dedup();
            candidates.retain(|&r| !pivoted[r]);

            // Rows store only columns >= k once earlier columns are eliminated,
            // so the leading entry decides membership.
            let lead = |r: &Vec<(usize, T)>| match r.first() {
                Some(&(c, v)) if c == k => v,
                _ => T::zero(),
            };
            let mut best: Option<(usize, T)> = None;
            for &r in &candidates {
                let v = lead(&rows[r]).abs();
                if v > T::zero() && best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((r, v));
                }
            }
            let Some((p, _)) = best else {
                return Err(QviError::Singular { pivot: k });
            };
            pivoted[p] = true;
            perm.push(p);
            let pivot_row = std::mem::take(&mut rows[p]);
            let pivot = pivot_row[0].1;

            let mut record = Vec::new();
            for &r in &candidates {
                if r == p {
                    continue;
                }
                let lv = lead(&rows[r]);
                if lv == T::zero() {
                    continue;
                }
                let factor = lv / pivot;
                record.push((r, factor));
                // rows[r] -= factor * pivot_row, dropping column k.
                scratch.clear();
                let target = &rows[r];
                let (mut a, mut b) = (1usize, 1usize);
                while a < target.len() || b < pivot_row.len() {
                    let ca = target.get(a).map_or(usize::MAX, |e| e.0);
                    let cb = pivot_row.get(b).map_or(usize::MAX, |e| e.0);
                    if ca < cb {
                        scratch.push(target[a]);
                        a += 1;
                    } else if cb < ca {
                        scratch.push((cb, -factor * pivot_row[b].1));
                        col_rows[cb].push(r);
                        b += 1;
                    } else {
                        let v = target[a].1 - factor * pivot_row[b].1;
                        if v != T::zero() {
                            scratch.push((ca, v));
                        }
                        a += 1;
                        b += 1;
                    }
                }
                rows[r].clear();
                rows[r].extend_from_slice(&scratch);
            }
            eliminations.push(record);
            upper.push(pivot_row);
        }
        Ok(Self {
            n,
            perm,
            eliminations,
            upper,
        })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n);
        let mut w = b.to_vec();
        for (k, record) in self.eliminations.iter().enumerate() {
            let wp = w[self.perm[k]];
            for &(r, f) in record {
                w[r] = w[r] - f * wp;
            }
        }
        let mut x = vec![T::zero(); self.n];
        for k in (0..self.n).rev() {
            let row = &self.upper[k];
            let mut acc = w[self.perm[k]];
            for &(c, v) in &row[1..] {
                acc = acc - v * x[c];
            }
            x[k] = acc / row[0].1;
        }
        x
    }

    /// Entries stored in the upper factor (fill diagnostic).
    pub fn upper_nnz(&self) -> usize {
        self.upper.iter().map(Vec::len).sum()
    }
}
