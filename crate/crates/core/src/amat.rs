//! Matrices with entries in a *-algebra.
//!
//! These are the elements of `M_k(A)` without materialising the structure
//! constants of `M_k(A)` itself (which grow like the cube of `k^2 dim A`).
//! Inversion and solving go through the regular representation: an
//! `n x n` matrix over `A` acts on `A^n`, which is a plain scalar space of
//! dimension `n * dim A`.

use std::fmt;

use crate::algebra::{AlgebraRef, StarAlgebra};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;

pub type AElt = Vec<Scalar>;

#[derive(Clone)]
pub struct AMat {
    alg: AlgebraRef,
    rows: usize,
    cols: usize,
    data: Vec<AElt>,
}

impl PartialEq for AMat {
    fn eq(&self, other: &AMat) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.data == other.data
    }
}

impl AMat {
    pub fn zero(alg: AlgebraRef, rows: usize, cols: usize) -> Self {
        let z = alg.zero();
        AMat { alg, rows, cols, data: vec![z; rows * cols] }
    }

    pub fn identity(alg: AlgebraRef, n: usize) -> Self {
        let mut m = AMat::zero(alg.clone(), n, n);
        for k in 0..n {
            m.set(k, k, alg.unit());
        }
        m
    }

    pub fn from_entries(alg: AlgebraRef, rows: usize, cols: usize, data: Vec<AElt>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch("entry count mismatch".into()));
        }
        for e in &data {
            if e.len() != alg.dim() {
                return Err(Error::DimensionMismatch(
                    "entry has the wrong coordinate dimension".into(),
                ));
            }
        }
        Ok(AMat { alg, rows, cols, data })
    }

    pub fn from_fn(alg: AlgebraRef, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> AElt) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        AMat { alg, rows, cols, data }
    }

    /// Diagonal matrix with constant rational entries.
    pub fn scalar_diag(alg: AlgebraRef, entries: &[Scalar]) -> Self {
        let n = entries.len();
        let mut m = AMat::zero(alg.clone(), n, n);
        for (k, s) in entries.iter().enumerate() {
            m.set(k, k, alg.scalar_elt(s));
        }
        m
    }

    pub fn algebra(&self) -> &AlgebraRef {
        &self.alg
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> &AElt {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: AElt) {
        debug_assert_eq!(v.len(), self.alg.dim());
        self.data[r * self.cols + c] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.iter().all(Scalar::is_zero))
    }

    pub fn add(&self, other: &AMat) -> AMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        AMat::from_fn(self.alg.clone(), self.rows, self.cols, |r, c| {
            self.at(r, c).iter().zip(other.at(r, c)).map(|(a, b)| a.clone() + b.clone()).collect()
        })
    }

    pub fn sub(&self, other: &AMat) -> AMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        AMat::from_fn(self.alg.clone(), self.rows, self.cols, |r, c| {
            self.at(r, c).iter().zip(other.at(r, c)).map(|(a, b)| a.clone() - b.clone()).collect()
        })
    }

    pub fn neg(&self) -> AMat {
        AMat::from_fn(self.alg.clone(), self.rows, self.cols, |r, c| {
            self.at(r, c).iter().map(|a| -a.clone()).collect()
        })
    }

    pub fn scale(&self, s: &Scalar) -> AMat {
        AMat::from_fn(self.alg.clone(), self.rows, self.cols, |r, c| {
            self.at(r, c).iter().map(|a| a * s).collect()
        })
    }

    pub fn mul(&self, other: &AMat) -> AMat {
        assert_eq!(self.cols, other.rows, "shape mismatch in algebra-matrix product");
        let alg = &self.alg;
        AMat::from_fn(alg.clone(), self.rows, other.cols, |r, c| {
            let mut acc = alg.zero();
            for k in 0..self.cols {
                let a = self.at(r, k);
                let b = other.at(k, c);
                if a.iter().all(Scalar::is_zero) || b.iter().all(Scalar::is_zero) {
                    continue;
                }
                let p = alg.mul(a, b);
                for (x, y) in acc.iter_mut().zip(p) {
                    *x += y;
                }
            }
            acc
        })
    }

    /// Conjugate transpose: entrywise involution plus transposition.
    pub fn star(&self) -> AMat {
        AMat::from_fn(self.alg.clone(), self.cols, self.rows, |r, c| {
            self.alg.star(self.at(c, r))
        })
    }

    pub fn is_hermitian(&self) -> bool {
        self.rows == self.cols && *self == self.star()
    }

    /// Apply to a column vector over the algebra.
    pub fn apply(&self, v: &[AElt]) -> Vec<AElt> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| {
                let mut acc = self.alg.zero();
                for (c, x) in v.iter().enumerate() {
                    let p = self.alg.mul(self.at(r, c), x);
                    for (a, b) in acc.iter_mut().zip(p) {
                        *a += b;
                    }
                }
                acc
            })
            .collect()
    }

    /// The scalar matrix of the linear action on `A^cols`, with `A^n`
    /// coordinatised block by block.
    pub fn action_matrix(&self) -> Mat {
        let d = self.alg.dim();
        let ring = self.alg.ring();
        let mut big = Mat::zero(ring, self.rows * d, self.cols * d);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let l = self.alg.left_mult_matrix(self.at(r, c));
                for i in 0..d {
                    for j in 0..d {
                        let v = l.at(i, j);
                        if !v.is_zero() {
                            big.set(r * d + i, c * d + j, v.clone());
                        }
                    }
                }
            }
        }
        big
    }

    /// Solve `self * X = rhs` over the algebra, if a solution exists.
    pub fn solve(&self, rhs: &AMat) -> Result<Option<AMat>> {
        assert_eq!(self.rows, rhs.rows);
        let d = self.alg.dim();
        let ring = self.alg.ring();
        let action = self.action_matrix();
        let mut out = AMat::zero(self.alg.clone(), self.cols, rhs.cols);
        for c in 0..rhs.cols {
            let mut col = Mat::zero(ring, self.rows * d, 1);
            for r in 0..self.rows {
                for (i, s) in rhs.at(r, c).iter().enumerate() {
                    col.set(r * d + i, 0, s.clone());
                }
            }
            match action.solve(&col)? {
                Some(x) => {
                    for r in 0..self.cols {
                        let coords: Vec<Scalar> = (0..d).map(|i| x.at(r * d + i, 0).clone()).collect();
                        out.set(r, c, coords);
                    }
                }
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    }

    /// Two-sided inverse in `M_n(A)`, verified on both sides.
    pub fn inverse(&self) -> Result<Option<AMat>> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch("inverse of a non-square matrix".into()));
        }
        let id = AMat::identity(self.alg.clone(), self.rows);
        match self.solve(&id)? {
            Some(inv) => {
                if self.mul(&inv) == id && inv.mul(self) == id {
                    Ok(Some(inv))
                } else {
                    Ok(None)
                }
            }
            None => Ok(None),
        }
    }

    /// Faithful scalar picture when the algebra is a matrix tower: each
    /// entry is replaced by its concrete `m x m` block.
    pub fn flatten_concrete(&self) -> Option<Mat> {
        let m = self.alg.kind().concrete_dim()?;
        let ring = self.alg.ring();
        let mut big = Mat::zero(ring, self.rows * m, self.cols * m);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let block = self.alg.concrete_matrix(self.at(r, c))?;
                for i in 0..m {
                    for j in 0..m {
                        let v = block.at(i, j);
                        if !v.is_zero() {
                            big.set(r * m + i, c * m + j, v.clone());
                        }
                    }
                }
            }
        }
        Some(big)
    }

    /// Inverse of `flatten_concrete`.
    pub fn from_flat_concrete(alg: AlgebraRef, rows: usize, cols: usize, big: &Mat) -> Result<AMat> {
        let m = alg
            .kind()
            .concrete_dim()
            .ok_or_else(|| Error::InvalidRepresentation("no concrete picture".into()))?;
        if big.rows() != rows * m || big.cols() != cols * m {
            return Err(Error::DimensionMismatch("flattened shape mismatch".into()));
        }
        let mut out = AMat::zero(alg.clone(), rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                let block = Mat::from_fn(big.ring(), m, m, |i, j| big.at(r * m + i, c * m + j).clone());
                out.set(r, c, alg.from_concrete_matrix(&block)?);
            }
        }
        Ok(out)
    }

    /// Entrywise classical limit, over the classical algebra.
    pub fn classical(&self, classical_alg: &AlgebraRef) -> AMat {
        AMat::from_fn(classical_alg.clone(), self.rows, self.cols, |r, c| {
            StarAlgebra::classical_coords(self.at(r, c))
        })
    }

    /// Lift a classical matrix into a series-ring algebra with the same
    /// coordinate space.
    pub fn lift(&self, series_alg: &AlgebraRef) -> AMat {
        AMat::from_fn(series_alg.clone(), self.rows, self.cols, |r, c| {
            series_alg.lift_coords(self.at(r, c))
        })
    }

    pub fn submatrix(&self, row_idx: &[usize], col_idx: &[usize]) -> AMat {
        AMat::from_fn(self.alg.clone(), row_idx.len(), col_idx.len(), |r, c| {
            self.at(row_idx[r], col_idx[c]).clone()
        })
    }

    pub fn hcat(&self, other: &AMat) -> AMat {
        assert_eq!(self.rows, other.rows);
        AMat::from_fn(self.alg.clone(), self.rows, self.cols + other.cols, |r, c| {
            if c < self.cols {
                self.at(r, c).clone()
            } else {
                other.at(r, c - self.cols).clone()
            }
        })
    }

    pub fn trace(&self) -> AElt {
        assert_eq!(self.rows, self.cols);
        let mut t = self.alg.zero();
        for k in 0..self.rows {
            for (a, b) in t.iter_mut().zip(self.at(k, k)) {
                *a += b.clone();
            }
        }
        t
    }
}

/// Build `M_k(A)` matrices out of module generators: column `j` holds the
/// coordinates of the `j`-th generator.
pub fn columns_to_amat(alg: AlgebraRef, cols: &[Vec<AElt>]) -> AMat {
    let rows = cols.first().map_or(0, Vec::len);
    AMat::from_fn(alg, rows, cols.len(), |r, c| cols[c][r].clone())
}

impl fmt::Debug for AMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "AMat {}x{} over {}:", self.rows, self.cols, self.alg.name())?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.alg.format_elt(self.at(r, c))).collect();
            writeln!(f, "  [{}]", row.join(" | "))?;
        }
        Ok(())
    }
}
