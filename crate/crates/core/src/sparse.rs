//! Row-compressed sparse matrix.

use std::io::{self, Write};

use crate::scalar::Scalar;

/// CSR matrix with strictly increasing column indices inside each row and no
/// stored zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Rectangular identity `I_ij = δ_ij`.
    pub fn identity(nrows: usize, ncols: usize) -> Self {
        let mut b = RowBuilder::new(ncols);
        for i in 0..nrows {
            if i < ncols {
                b.push(i, T::one());
            }
            b.finish_row();
        }
        b.build()
    }

    /// Builds from per-row entry lists; duplicates are summed.
    pub fn from_rows<I, R>(ncols: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = (usize, T)>,
    {
        let mut b = RowBuilder::new(ncols);
        for row in rows {
            for (c, v) in row {
                b.push(c, v);
            }
            b.finish_row();
        }
        b.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[s..e], &self.vals[s..e])
    }

    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let (c, v) = self.row(i);
        c.iter().copied().zip(v.iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (c, v) = self.row(i);
        match c.binary_search(&j) {
            Ok(p) => v[p],
            Err(_) => T::zero(),
        }
    }

    #[inline]
    pub fn row_dot(&self, i: usize, x: &[T]) -> T {
        let (c, v) = self.row(i);
        c.iter()
            .zip(v)
            .fold(T::zero(), |acc, (&j, &a)| acc + a * x[j])
    }

    pub fn row_sum(&self, i: usize) -> T {
        self.row(i).1.iter().copied().sum()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.ncols, "vector length mismatch");
        (0..self.nrows).map(|i| self.row_dot(i, x)).collect()
    }

    /// Applies `f(row, col, value)` to every stored entry, dropping entries
    /// mapped to zero.
    pub fn map_entries(&self, mut f: impl FnMut(usize, usize, T) -> T) -> Self {
        let mut b = RowBuilder::new(self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row_entries(i) {
                b.push(j, f(i, j, v));
            }
            b.finish_row();
        }
        b.build()
    }

    /// Text triplets `row col value`, row-major, 17 significant digits.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> io::Result<()> {
        for i in 0..self.nrows {
            for (j, v) in self.row_entries(i) {
                writeln!(w, "{i} {j} {:.16e}", v.as_f64())?;
            }
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row_entries(i) {
                row[j] = v;
            }
        }
        d
    }
}

/// Incremental CSR construction, one row at a time.
#[derive(Debug)]
pub struct RowBuilder<T> {
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
    pending: Vec<(usize, T)>,
}

impl<T: Scalar> RowBuilder<T> {
    pub fn new(ncols: usize) -> Self {
        Self {
            ncols,
            row_ptr: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
            pending: Vec::new(),
        }
    }

    pub fn push(&mut self, col: usize, val: T) {
        assert!(col < self.ncols, "column {col} out of range {}", self.ncols);
        self.pending.push((col, val));
    }

    pub fn finish_row(&mut self) {
        self.pending.sort_by_key(|e| e.0);
        let mut k = 0;
        while k < self.pending.len() {
            let col = self.pending[k].0;
            let mut sum = T::zero();
            while k < self.pending.len() && self.pending[k].0 == col {
                sum = sum + self.pending[k].1;
                k += 1;
            }
            if sum != T::zero() {
                self.cols.push(col);
                self.vals.push(sum);
            }
        }
        self.pending.clear();
        self.row_ptr.push(self.cols.len());
    }

    pub fn build(self) -> SparseMatrix<T> {
        assert!(self.pending.is_empty(), "unfinished row");
        SparseMatrix {
            nrows: self.row_ptr.len() - 1,
            ncols: self.ncols,
            row_ptr: self.row_ptr,
            cols: self.cols,
            vals: self.vals,
        }
    }
}
