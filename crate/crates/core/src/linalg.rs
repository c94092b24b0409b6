//! Exact matrices over the scalar ring.
//!
//! Everything downstream (algebra elements, module carriers, operators)
//! reduces to these matrices. Elimination only ever pivots on units of the
//! ring; over the rationals every non-zero scalar is a unit, and over a
//! truncated series ring a unit is a scalar with non-vanishing classical
//! part. When elimination over a series ring gets stuck on a column whose
//! surviving entries are all non-units, the classical rank differs from the
//! series rank and we refuse with `SeriesRankInstability` rather than guess.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::{BaseRing, Q, Scalar};

#[derive(Clone, PartialEq, Eq)]
pub struct Mat {
    ring: BaseRing,
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl Mat {
    pub fn zero(ring: BaseRing, rows: usize, cols: usize) -> Self {
        Mat { ring, rows, cols, data: vec![Scalar::zero(ring); rows * cols] }
    }

    pub fn identity(ring: BaseRing, n: usize) -> Self {
        let mut m = Mat::zero(ring, n, n);
        for k in 0..n {
            *m.at_mut(k, k) = Scalar::one(ring);
        }
        m
    }

    pub fn from_fn(ring: BaseRing, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Self {
        let mut m = Mat::zero(ring, rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                *m.at_mut(r, c) = f(r, c);
            }
        }
        m
    }

    pub fn from_rows(ring: BaseRing, rows: Vec<Vec<Scalar>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat { ring, rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn column(ring: BaseRing, entries: Vec<Scalar>) -> Self {
        let rows = entries.len();
        Mat { ring, rows, cols: 1, data: entries }
    }

    pub fn ring(&self) -> BaseRing {
        self.ring
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> &Scalar {
        &self.data[r * self.cols + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut Scalar {
        &mut self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Scalar) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row_vec(&self, r: usize) -> Vec<Scalar> {
        (0..self.cols).map(|c| self.at(r, c).clone()).collect()
    }

    pub fn col_vec(&self, c: usize) -> Vec<Scalar> {
        (0..self.rows).map(|r| self.at(r, c).clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.ring, self.cols, self.rows, |r, c| self.at(c, r).clone())
    }

    pub fn conj_entries(&self) -> Mat {
        Mat::from_fn(self.ring, self.rows, self.cols, |r, c| self.at(r, c).conj())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Mat {
        Mat::from_fn(self.ring, self.cols, self.rows, |r, c| self.at(c, r).conj())
    }

    pub fn is_hermitian(&self) -> bool {
        self.is_square() && *self == self.adjoint()
    }

    pub fn scale(&self, s: &Scalar) -> Mat {
        Mat::from_fn(self.ring, self.rows, self.cols, |r, c| self.at(r, c) * s)
    }

    pub fn hcat(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows);
        Mat::from_fn(self.ring, self.rows, self.cols + other.cols, |r, c| {
            if c < self.cols {
                self.at(r, c).clone()
            } else {
                other.at(r, c - self.cols).clone()
            }
        })
    }

    pub fn vcat(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.cols);
        Mat::from_fn(self.ring, self.rows + other.rows, self.cols, |r, c| {
            if r < self.rows {
                self.at(r, c).clone()
            } else {
                other.at(r - self.rows, c).clone()
            }
        })
    }

    pub fn kron(&self, other: &Mat) -> Mat {
        let (m, n) = (self.rows, self.cols);
        let (p, q) = (other.rows, other.cols);
        Mat::from_fn(self.ring, m * p, n * q, |r, c| {
            self.at(r / p, c / q) * other.at(r % p, c % q)
        })
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(self.cols, v.len());
        let nz: Vec<usize> = (0..self.cols).filter(|&c| !v[c].is_zero()).collect();
        (0..self.rows)
            .map(|r| {
                let mut acc = Scalar::zero(self.ring);
                for &c in &nz {
                    let a = self.at(r, c);
                    if !a.is_zero() {
                        acc += a * &v[c];
                    }
                }
                acc
            })
            .collect()
    }

    /// Hermitian pairing `conj(x)^T (self) y`.
    pub fn sandwich(&self, x: &[Scalar], y: &[Scalar]) -> Scalar {
        let hy = self.mul_vec(y);
        dot_conj(x, &hy)
    }

    /// Trace (square matrices).
    pub fn trace(&self) -> Scalar {
        assert!(self.is_square());
        let mut t = Scalar::zero(self.ring);
        for k in 0..self.rows {
            t += self.at(k, k).clone();
        }
        t
    }

    /// Monic characteristic polynomial coefficients `[c1, .., cn]` with
    /// `det(tI - A) = t^n + c1 t^(n-1) + ... + cn`, computed by the
    /// Faddeev-LeVerrier recursion (divides only by integers, hence exact
    /// over any ring of characteristic zero, including the truncated ones).
    pub fn char_poly(&self) -> Vec<Scalar> {
        assert!(self.is_square());
        let n = self.rows;
        let mut coeffs = Vec::with_capacity(n);
        let mut m = Mat::identity(self.ring, n);
        for k in 1..=n {
            m = self * &m;
            let c = m.trace().scale(&Q::new((-1).into(), (k as i64).into()));
            for j in 0..n {
                *m.at_mut(j, j) += c.clone();
            }
            coeffs.push(c);
        }
        coeffs
    }

    /// Determinant via the characteristic polynomial: `det = (-1)^n c_n`.
    pub fn det(&self) -> Scalar {
        assert!(self.is_square());
        let n = self.rows;
        if n == 0 {
            return Scalar::one(self.ring);
        }
        let cs = self.char_poly();
        let cn = cs[n - 1].clone();
        if n % 2 == 0 {
            cn
        } else {
            -cn
        }
    }

    /// Row-reduce in place with unit pivots only. Returns pivot columns.
    /// `augment` splits the matrix: columns `>= augment` are carried along
    /// but never chosen as pivots.
    fn row_reduce(&mut self, augment: usize) -> Result<Vec<usize>> {
        let mut pivots = Vec::new();
        let mut row = 0usize;
        for col in 0..augment {
            if row == self.rows {
                break;
            }
            // Deterministic choice: first unit entry in this column.
            let mut chosen = None;
            let mut nonzero_nonunit = false;
            for r in row..self.rows {
                let e = self.at(r, col);
                if e.is_unit() {
                    chosen = Some(r);
                    break;
                } else if !e.is_zero() {
                    nonzero_nonunit = true;
                }
            }
            let Some(p) = chosen else {
                if nonzero_nonunit {
                    return Err(Error::SeriesRankInstability(format!(
                        "column {col} has non-zero entries but no unit pivot"
                    )));
                }
                continue;
            };
            self.swap_rows(row, p);
            let inv = self.at(row, col).inv().expect("unit pivot");
            for c in col..self.cols {
                let v = self.at(row, c) * &inv;
                self.set(row, c, v);
            }
            for r in 0..self.rows {
                if r != row && !self.at(r, col).is_zero() {
                    let f = self.at(r, col).clone();
                    for c in col..self.cols {
                        let v = self.at(r, c).clone() - f.clone() * self.at(row, c).clone();
                        self.set(r, c, v);
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        Ok(pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn rank(&self) -> Result<usize> {
        let mut m = self.clone();
        Ok(m.row_reduce(m.cols)?.len())
    }

    /// Basis of the right kernel `{x : self * x = 0}`.
    pub fn kernel(&self) -> Result<Vec<Vec<Scalar>>> {
        let mut m = self.clone();
        let pivots = m.row_reduce(m.cols)?;
        let mut basis = Vec::new();
        let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
        for free in 0..self.cols {
            if pivot_set.contains(&free) {
                continue;
            }
            let mut v = vec![Scalar::zero(self.ring); self.cols];
            v[free] = Scalar::one(self.ring);
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m.at(r, free).clone();
            }
            basis.push(v);
        }
        Ok(basis)
    }

    /// One solution of `self * X = rhs`, or `None` if inconsistent.
    pub fn solve(&self, rhs: &Mat) -> Result<Option<Mat>> {
        assert_eq!(self.rows, rhs.rows);
        let mut m = self.hcat(rhs);
        let pivots = m.row_reduce(self.cols)?;
        // Inconsistency: a zero row of the coefficient part with a non-zero
        // augmented part.
        for r in pivots.len()..self.rows {
            for c in self.cols..m.cols {
                if !m.at(r, c).is_zero() {
                    return Ok(None);
                }
            }
        }
        let mut x = Mat::zero(self.ring, self.cols, rhs.cols);
        for (r, &pc) in pivots.iter().enumerate() {
            for c in 0..rhs.cols {
                x.set(pc, c, m.at(r, self.cols + c).clone());
            }
        }
        Ok(Some(x))
    }

    pub fn inverse(&self) -> Result<Option<Mat>> {
        assert!(self.is_square());
        let id = Mat::identity(self.ring, self.rows);
        match self.solve(&id)? {
            Some(inv) => {
                if &(self * &inv) == &id && &(&inv * self) == &id {
                    Ok(Some(inv))
                } else {
                    Ok(None)
                }
            }
            None => Ok(None),
        }
    }

    /// Run the elimination once so that many right-hand sides can each be
    /// solved by a single matrix-vector product. Equivalent to calling
    /// [`Mat::solve`] per side, pivot for pivot.
    pub fn prepare_solve(&self) -> Result<PreparedSolve> {
        let mut m = self.hcat(&Mat::identity(self.ring, self.rows));
        let pivots = m.row_reduce(self.cols)?;
        let rref = Mat::from_fn(self.ring, self.rows, self.cols, |r, c| m.at(r, c).clone());
        let transform =
            Mat::from_fn(self.ring, self.rows, self.rows, |r, c| m.at(r, self.cols + c).clone());
        Ok(PreparedSolve { rref, transform, pivots })
    }

    /// The span of the given columns, as a deterministically chosen subset
    /// of the columns forming a basis (indices into the input).
    pub fn column_basis(cols: &[Vec<Scalar>], ring: BaseRing, dim: usize) -> Result<Vec<usize>> {
        if cols.is_empty() {
            return Ok(Vec::new());
        }
        let m = Mat::from_fn(ring, dim, cols.len(), |r, c| cols[c][r].clone());
        let mut red = m;
        let pivots = red.row_reduce(red.cols)?;
        Ok(pivots)
    }
}

/// Hermitian dot product `sum conj(x_k) y_k`.
pub fn dot_conj(x: &[Scalar], y: &[Scalar]) -> Scalar {
    assert_eq!(x.len(), y.len());
    assert!(!x.is_empty(), "dot of empty vectors needs a ring");
    let mut acc = Scalar::zero(x[0].ring());
    for (a, b) in x.iter().zip(y) {
        if !a.is_zero() && !b.is_zero() {
            acc += a.conj() * b.clone();
        }
    }
    acc
}

/// Plain bilinear dot product `sum x_k y_k`.
pub fn dot(x: &[Scalar], y: &[Scalar]) -> Scalar {
    assert_eq!(x.len(), y.len());
    assert!(!x.is_empty());
    let mut acc = Scalar::zero(x[0].ring());
    for (a, b) in x.iter().zip(y) {
        if !a.is_zero() && !b.is_zero() {
            acc += a * b;
        }
    }
    acc
}

pub fn vec_add(x: &[Scalar], y: &[Scalar]) -> Vec<Scalar> {
    x.iter().zip(y).map(|(a, b)| a.clone() + b.clone()).collect()
}

pub fn vec_sub(x: &[Scalar], y: &[Scalar]) -> Vec<Scalar> {
    x.iter().zip(y).map(|(a, b)| a.clone() - b.clone()).collect()
}

pub fn vec_scale(x: &[Scalar], s: &Scalar) -> Vec<Scalar> {
    x.iter().map(|a| a * s).collect()
}

pub fn vec_is_zero(x: &[Scalar]) -> bool {
    x.iter().all(Scalar::is_zero)
}

/// The elimination state of a fixed coefficient matrix `A`: solving
/// `A x = b` afterwards costs one multiplication by the recorded row
/// transform instead of a fresh reduction.
#[derive(Clone, Debug)]
pub struct PreparedSolve {
    rref: Mat,
    transform: Mat,
    pivots: Vec<usize>,
}

impl PreparedSolve {
    /// One solution of `A x = b` with free variables set to zero, or
    /// `None` when the system is inconsistent. Matches [`Mat::solve`].
    pub fn solve_vec(&self, rhs: &[Scalar]) -> Option<Vec<Scalar>> {
        assert_eq!(rhs.len(), self.rref.rows());
        let y = self.transform.mul_vec(rhs);
        for v in y.iter().skip(self.pivots.len()) {
            if !v.is_zero() {
                return None;
            }
        }
        let mut x = vec![Scalar::zero(self.rref.ring()); self.rref.cols()];
        for (r, &pc) in self.pivots.iter().enumerate() {
            x[pc] = y[r].clone();
        }
        Some(x)
    }
}

/// A subspace of `C^dim`, stored with a row-reduced basis so membership and
/// equality tests are cheap and deterministic.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    ring: BaseRing,
    dim: usize,
    /// Row-reduced basis rows.
    basis: Mat,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn from_spanning(ring: BaseRing, dim: usize, vectors: &[Vec<Scalar>]) -> Result<Self> {
        let mut m = Mat::from_fn(ring, vectors.len(), dim, |r, c| vectors[r][c].clone());
        let pivots = m.row_reduce(dim)?;
        let rank = pivots.len();
        let basis = Mat::from_fn(ring, rank, dim, |r, c| m.at(r, c).clone());
        Ok(Subspace { ring, dim, basis, pivots })
    }

    pub fn zero(ring: BaseRing, dim: usize) -> Self {
        Subspace { ring, dim, basis: Mat::zero(ring, 0, dim), pivots: Vec::new() }
    }

    pub fn full(ring: BaseRing, dim: usize) -> Self {
        let mut s = Subspace::zero(ring, dim);
        s.basis = Mat::identity(ring, dim);
        s.pivots = (0..dim).collect();
        s
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis_rows(&self) -> Vec<Vec<Scalar>> {
        (0..self.basis.rows()).map(|r| self.basis.row_vec(r)).collect()
    }

    pub fn basis_row(&self, r: usize) -> Vec<Scalar> {
        self.basis.row_vec(r)
    }

    /// Reduce a vector modulo the subspace; the result is zero iff the
    /// vector is a member.
    pub fn reduce(&self, v: &[Scalar]) -> Vec<Scalar> {
        let mut v = v.to_vec();
        for (r, &pc) in self.pivots.iter().enumerate() {
            if !v[pc].is_zero() {
                let f = v[pc].clone();
                for c in 0..self.dim {
                    let delta = f.clone() * self.basis.at(r, c).clone();
                    v[c] = v[c].clone() - delta;
                }
            }
        }
        v
    }

    pub fn contains(&self, v: &[Scalar]) -> bool {
        vec_is_zero(&self.reduce(v))
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        other.basis_rows().iter().all(|v| self.contains(v))
    }

    pub fn same_as(&self, other: &Subspace) -> bool {
        self.contains_subspace(other) && other.contains_subspace(self)
    }

    /// Coordinates of a member vector in the reduced basis: since the basis
    /// is in reduced row echelon form, the coefficient of basis row `j` is
    /// the entry at its pivot column. Returns `None` for non-members.
    pub fn coordinates(&self, v: &[Scalar]) -> Option<Vec<Scalar>> {
        if !self.contains(v) {
            return None;
        }
        Some(self.pivots.iter().map(|&p| v[p].clone()).collect())
    }

    /// Rebuild an ambient vector from basis coordinates.
    pub fn from_coordinates(&self, coords: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(coords.len(), self.basis.rows());
        let mut v = vec![Scalar::zero(self.ring); self.dim];
        for (j, c) in coords.iter().enumerate() {
            for col in 0..self.dim {
                let delta = c * self.basis.at(j, col);
                v[col] = v[col].clone() + delta;
            }
        }
        v
    }

    /// Coordinates in which the quotient by this subspace is realized: the
    /// non-pivot coordinates, listed in increasing order.
    pub fn complement_coords(&self) -> Vec<usize> {
        let pset: std::collections::BTreeSet<usize> = self.pivots.iter().copied().collect();
        (0..self.dim).filter(|c| !pset.contains(c)).collect()
    }

    /// Project a vector to quotient coordinates (reduce, then read off the
    /// complement coordinates).
    pub fn quotient_coords(&self, v: &[Scalar]) -> Vec<Scalar> {
        let red = self.reduce(v);
        self.complement_coords().iter().map(|&c| red[c].clone()).collect()
    }
}

impl Add for &Mat {
    type Output = Mat;
    fn add(self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat::from_fn(self.ring, self.rows, self.cols, |r, c| {
            self.at(r, c).clone() + rhs.at(r, c).clone()
        })
    }
}

impl Sub for &Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat::from_fn(self.ring, self.rows, self.cols, |r, c| {
            self.at(r, c).clone() - rhs.at(r, c).clone()
        })
    }
}

impl Mul for &Mat {
    type Output = Mat;
    fn mul(self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = Mat::zero(self.ring, self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..rhs.cols {
                    let b = rhs.at(k, c);
                    if b.is_zero() {
                        continue;
                    }
                    *out.at_mut(r, c) += a * b;
                }
            }
        }
        out
    }
}

impl Neg for &Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        Mat::from_fn(self.ring, self.rows, self.cols, |r, c| -self.at(r, c).clone())
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} over {}:", self.rows, self.cols, self.ring.describe())?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.at(r, c).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q_int;

    fn rq(v: i64) -> Scalar {
        Scalar::from_rational(BaseRing::Rationals, q_int(v))
    }

    fn ci(re: i64, im: i64) -> Scalar {
        Scalar::from_complex(BaseRing::Rationals, q_int(re), q_int(im))
    }

    #[test]
    fn char_poly_and_det_of_a_hermitian_example() {
        let r = BaseRing::Rationals;
        let h = Mat::from_rows(r, vec![vec![rq(2), ci(1, 1)], vec![ci(1, -1), rq(2)]]);
        assert!(h.is_hermitian());
        // det(tI - H) = t^2 - 4t + 2
        let cs = h.char_poly();
        assert_eq!(cs, vec![rq(-4), rq(2)]);
        assert_eq!(h.det(), rq(2));
        assert_eq!(h.trace(), rq(4));
    }

    #[test]
    fn det_matches_cofactor_expansion_for_3x3() {
        let r = BaseRing::Rationals;
        let m = Mat::from_rows(
            r,
            vec![
                vec![ci(1, 2), rq(0), ci(3, -1)],
                vec![rq(4), ci(0, 1), rq(-2)],
                vec![ci(-1, 0), rq(5), ci(2, 2)],
            ],
        );
        let cofactor = |a: &Mat| {
            let d2 = |a: &Mat, r0: usize, r1: usize, c0: usize, c1: usize| {
                a.at(r0, c0) * a.at(r1, c1) - a.at(r0, c1) * a.at(r1, c0)
            };
            a.at(0, 0) * &d2(a, 1, 2, 1, 2) - a.at(0, 1) * &d2(a, 1, 2, 0, 2)
                + a.at(0, 2) * &d2(a, 1, 2, 0, 1)
        };
        assert_eq!(m.det(), cofactor(&m));
    }

    #[test]
    fn solve_and_inverse_round_trip() {
        let r = BaseRing::Rationals;
        let a = Mat::from_rows(
            r,
            vec![vec![rq(2), ci(0, 1)], vec![ci(0, -1), rq(1)]],
        );
        let inv = a.inverse().unwrap().expect("invertible");
        assert_eq!(&a * &inv, Mat::identity(r, 2));

        let rhs = Mat::column(r, vec![ci(1, 1), rq(3)]);
        let x = a.solve(&rhs).unwrap().expect("consistent");
        assert_eq!(&a * &x, rhs);

        // Singular matrix: no inverse, kernel of dimension 1.
        let s = Mat::from_rows(r, vec![vec![rq(1), rq(2)], vec![rq(2), rq(4)]]);
        assert!(s.inverse().unwrap().is_none());
        let ker = s.kernel().unwrap();
        assert_eq!(ker.len(), 1);
        assert!(vec_is_zero(&s.mul_vec(&ker[0])));
    }

    #[test]
    fn series_elimination_requires_unit_pivots() {
        let s = BaseRing::series(3).unwrap();
        let l = Scalar::lambda(s).unwrap();
        let m = Mat::from_rows(s, vec![vec![l.clone()]]);
        // lambda has classical rank 0 but is non-zero: rank is ambiguous
        // order by order, so elimination refuses.
        assert!(matches!(m.rank(), Err(Error::SeriesRankInstability(_))));

        // A series unit pivot works fine.
        let u = Mat::from_rows(
            s,
            vec![
                vec![Scalar::one(s) + l.clone(), l.clone()],
                vec![Scalar::zero(s), Scalar::one(s)],
            ],
        );
        assert_eq!(u.rank().unwrap(), 2);
        let inv = u.inverse().unwrap().expect("unit triangular");
        assert_eq!(&u * &inv, Mat::identity(s, 2));
    }

    #[test]
    fn kron_shapes_and_values() {
        let r = BaseRing::Rationals;
        let a = Mat::from_rows(r, vec![vec![rq(1), rq(2)]]);
        let b = Mat::from_rows(r, vec![vec![rq(3)], vec![rq(4)]]);
        let k = a.kron(&b);
        assert_eq!((k.rows(), k.cols()), (2, 2));
        assert_eq!(k.at(0, 0), &rq(3));
        assert_eq!(k.at(1, 1), &rq(8));
    }

    #[test]
    fn subspace_membership_and_quotient() {
        let r = BaseRing::Rationals;
        let v1 = vec![rq(1), rq(0), rq(2)];
        let v2 = vec![rq(0), rq(1), rq(-1)];
        let s = Subspace::from_spanning(r, 3, &[v1.clone(), v2.clone()]).unwrap();
        assert_eq!(s.dim(), 2);
        assert!(s.contains(&v1));
        assert!(s.contains(&vec_add(&v1, &v2)));
        assert!(!s.contains(&[rq(0), rq(0), rq(1)]));
        // Quotient coordinates live on the single non-pivot coordinate.
        assert_eq!(s.complement_coords(), vec![2]);
        let q = s.quotient_coords(&[rq(5), rq(7), rq(0)]);
        // 5*v1 + 7*v2 reduces to zero, so only the residue of e3 matters.
        assert_eq!(q, vec![rq(-3)]);
    }

    #[test]
    fn adjoint_reverses_products() {
        let r = BaseRing::Rationals;
        let a = Mat::from_rows(r, vec![vec![ci(1, 2), rq(3)], vec![rq(0), ci(0, -1)]]);
        let b = Mat::from_rows(r, vec![vec![rq(2), ci(1, 1)], vec![ci(-2, 1), rq(1)]]);
        assert_eq!((&a * &b).adjoint(), &b.adjoint() * &a.adjoint());
        assert_eq!(a.adjoint().adjoint(), a);
    }
}
