//! Dense matrices over a [`Field`]: Gaussian elimination with first-nonzero
//! pivoting (exact arithmetic, deterministic), rank, linear solving, and
//! Vandermonde construction. This is the erasure-decoding workhorse.

use crate::field::Field;
use crate::{Error, Result};

/// Row-major matrix over a finite field, entries stored as integer encodings.
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl std::fmt::Debug for Matrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Matrix {}x{} over {:?}", self.rows, self.cols, self.field)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[r * self.cols..(r + 1) * self.cols])?;
        }
        Ok(())
    }
}

impl Matrix {
    pub fn zeros(field: &Field, rows: usize, cols: usize) -> Matrix {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Matrix {
            field: field.clone(),
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: &Field, n: usize) -> Matrix {
        let mut m = Matrix::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Build from row-major encoded entries.
    pub fn from_rows(field: &Field, rows: &[Vec<u64>]) -> Matrix {
        assert!(!rows.is_empty());
        let cols = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == cols));
        let data = rows.iter().flatten().copied().collect();
        Matrix {
            field: field.clone(),
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_fn(field: &Field, rows: usize, cols: usize, f: impl Fn(usize, usize) -> u64) -> Matrix {
        let mut m = Matrix::zeros(field, rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, f(r, c));
            }
        }
        m
    }

    /// Column vector from a slice.
    pub fn col_vec(field: &Field, entries: &[u64]) -> Matrix {
        Matrix {
            field: field.clone(),
            rows: entries.len(),
            cols: 1,
            data: entries.to_vec(),
        }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<u64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(&self.field, self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// Horizontal concatenation.
    pub fn hstack(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.rows, rhs.rows);
        assert_eq!(self.field, rhs.field);
        Matrix::from_fn(&self.field, self.rows, self.cols + rhs.cols, |r, c| {
            if c < self.cols {
                self.get(r, c)
            } else {
                rhs.get(r, c - self.cols)
            }
        })
    }

    /// Vertical concatenation.
    pub fn vstack(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.cols);
        assert_eq!(self.field, rhs.field);
        Matrix::from_fn(&self.field, self.rows + rhs.rows, self.cols, |r, c| {
            if r < self.rows {
                self.get(r, c)
            } else {
                rhs.get(r - self.rows, c)
            }
        })
    }

    /// Keep the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        Matrix::from_fn(&self.field, self.rows, cols.len(), |r, c| self.get(r, cols[c]))
    }

    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        assert_eq!(self.field, rhs.field);
        let f = &self.field;
        let mut out = Matrix::zeros(f, self.rows, rhs.cols);
        for r in 0..self.rows {
            for i in 0..self.cols {
                let a = self.get(r, i);
                if a == 0 {
                    continue;
                }
                for c in 0..rhs.cols {
                    let b = rhs.get(i, c);
                    if b != 0 {
                        let cur = out.get(r, c);
                        out.set(r, c, f.add(cur, f.mul(a, b)));
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, s: u64) -> Matrix {
        let f = &self.field;
        Matrix::from_fn(f, self.rows, self.cols, |r, c| f.mul(s, self.get(r, c)))
    }

    /// Rank over the field via elimination on a working copy.
    pub fn rank(&self) -> usize {
        let mut work = self.clone();
        let f = work.field.clone();
        let mut rank = 0usize;
        for col in 0..work.cols {
            let Some(pivot) = (rank..work.rows).find(|&r| work.get(r, col) != 0) else {
                continue;
            };
            work.swap_rows(rank, pivot);
            let inv = f.inv(work.get(rank, col)).expect("nonzero pivot");
            work.scale_row(rank, inv);
            for r in 0..work.rows {
                if r != rank {
                    let factor = work.get(r, col);
                    if factor != 0 {
                        work.eliminate_row(r, rank, factor);
                    }
                }
            }
            rank += 1;
            if rank == work.rows {
                break;
            }
        }
        rank
    }

    /// Solve A·X = B for X. A must be square or overdetermined with full
    /// column rank; the system must be consistent.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        if self.rows != b.rows {
            return Err(Error::Dimension(format!(
                "A has {} rows, B has {}",
                self.rows, b.rows
            )));
        }
        if self.rows < self.cols {
            return Err(Error::Dimension(
                "underdetermined system (fewer rows than unknowns)".into(),
            ));
        }
        let f = self.field.clone();
        let mut a = self.clone();
        let mut rhs = b.clone();
        let n = a.cols;
        for col in 0..n {
            // first nonzero pivot: deterministic in exact arithmetic
            let pivot = (col..a.rows)
                .find(|&r| a.get(r, col) != 0)
                .ok_or(Error::Singular)?;
            a.swap_rows(col, pivot);
            rhs.swap_rows(col, pivot);
            let inv = f.inv(a.get(col, col))?;
            a.scale_row(col, inv);
            rhs.scale_row(col, inv);
            for r in 0..a.rows {
                if r != col {
                    let factor = a.get(r, col);
                    if factor != 0 {
                        a.eliminate_row(r, col, factor);
                        rhs.eliminate_row(r, col, factor);
                    }
                }
            }
        }
        // overdetermined part must have reduced to zero
        for r in n..a.rows {
            if rhs.row(r).iter().any(|&v| v != 0) {
                return Err(Error::Inconsistent);
            }
        }
        let mut x = Matrix::zeros(&f, n, rhs.cols);
        for r in 0..n {
            for c in 0..rhs.cols {
                x.set(r, c, rhs.get(r, c));
            }
        }
        Ok(x)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn scale_row(&mut self, r: usize, s: u64) {
        if s == 1 {
            return;
        }
        let f = self.field.clone();
        for c in 0..self.cols {
            let v = self.get(r, c);
            self.set(r, c, f.mul(v, s));
        }
    }

    /// row r -= factor * row pivot
    fn eliminate_row(&mut self, r: usize, pivot: usize, factor: u64) {
        let f = self.field.clone();
        for c in 0..self.cols {
            let pv = self.get(pivot, c);
            if pv != 0 {
                let v = self.get(r, c);
                self.set(r, c, f.sub(v, f.mul(factor, pv)));
            }
        }
    }
}

/// k x |points| Vandermonde matrix: entry (i, j) = `points[j]^i`, i = 0..k-1.
pub fn vandermonde(field: &Field, points: &[u64], k: usize) -> Result<Matrix> {
    assert!(k >= 1);
    for (i, &a) in points.iter().enumerate() {
        for &b in &points[i + 1..] {
            if a == b {
                return Err(Error::DuplicatePoints);
            }
        }
    }
    Ok(Matrix::from_fn(field, k, points.len(), |r, c| {
        field.pow(points[c], r as u64)
    }))
}
