//! Finite-dimensional unital *-algebras presented by structure constants.
//!
//! An algebra lives over one of the two base rings and is described by a
//! basis `e_0 .. e_{d-1}`, a multiplication table, coordinates of the unit,
//! and an involution matrix (applied after conjugating coordinates, so the
//! involution is conjugate-linear by construction). Elements are plain
//! coordinate vectors; all operations go through the owning algebra.
//!
//! The `kind` field records how an algebra was assembled. Decision
//! procedures downstream dispatch on it: a matrix tower over the base field
//! admits a faithful concrete matrix picture (and hence complete positivity
//! decisions), while e.g. a Grassmann algebra does not and is handled by
//! its own exact rules.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::{BaseRing, Q, Scalar};

/// Provenance of an algebra's presentation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AlgebraKind {
    /// The base ring itself.
    Base,
    /// Full matrix algebra over the base ring.
    FullMatrix { n: usize },
    /// Matrices with entries in another algebra.
    MatrixOver { n: usize, inner: Box<AlgebraKind> },
    /// Grassmann algebra on two anticommuting hermitian generators.
    Grassmann,
    /// The ring of dual numbers: one hermitian generator squaring to zero.
    DualNumbers,
    /// Two copies of the base ring with the coordinate-swapping involution.
    SwapPair,
    /// External tensor product.
    Tensor { left: Box<AlgebraKind>, right: Box<AlgebraKind> },
    /// A formal deformation of a classical algebra: same coordinate space,
    /// multiplication corrected by higher powers of the formal parameter.
    Deformed { classical: Box<AlgebraKind> },
    /// Anything declared directly by structure constants.
    Custom,
}

impl AlgebraKind {
    /// Dimension of the faithful matrix picture, when one exists by
    /// construction (matrix towers and their tensor products).
    pub fn concrete_dim(&self) -> Option<usize> {
        match self {
            AlgebraKind::Base => Some(1),
            AlgebraKind::FullMatrix { n } => Some(*n),
            AlgebraKind::MatrixOver { n, inner } => inner.concrete_dim().map(|m| n * m),
            AlgebraKind::Tensor { left, right } => {
                Some(left.concrete_dim()? * right.concrete_dim()?)
            }
            _ => None,
        }
    }

    pub fn is_concretizable(&self) -> bool {
        self.concrete_dim().is_some()
    }
}

#[derive(Clone)]
pub struct StarAlgebra {
    name: String,
    ring: BaseRing,
    dim: usize,
    /// `table[i][j]` holds the coordinates of `e_i * e_j`.
    table: Vec<Vec<Vec<Scalar>>>,
    unit: Vec<Scalar>,
    /// `star(e_i) = sum_k invol[k][i] e_k` (coordinates get conjugated
    /// before the matrix is applied).
    invol: Mat,
    basis_names: Vec<String>,
    kind: AlgebraKind,
    faithful_rep: Option<Representation>,
}

pub type AlgebraRef = Arc<StarAlgebra>;

impl StarAlgebra {
    // ------------------------------------------------------------------
    // Construction
    // ------------------------------------------------------------------

    /// Build and fully validate an algebra from raw data.
    pub fn new_explicit(
        name: impl Into<String>,
        ring: BaseRing,
        table: Vec<Vec<Vec<Scalar>>>,
        unit: Vec<Scalar>,
        invol: Mat,
        basis_names: Vec<String>,
        kind: AlgebraKind,
    ) -> Result<Self> {
        let alg = StarAlgebra::assemble(name, ring, table, unit, invol, basis_names, kind)?;
        alg.validate_axioms(true)?;
        Ok(alg)
    }

    fn assemble(
        name: impl Into<String>,
        ring: BaseRing,
        table: Vec<Vec<Vec<Scalar>>>,
        unit: Vec<Scalar>,
        invol: Mat,
        basis_names: Vec<String>,
        kind: AlgebraKind,
    ) -> Result<Self> {
        let dim = unit.len();
        if dim == 0 {
            return Err(Error::InvalidAlgebra("empty basis".into()));
        }
        if table.len() != dim
            || table.iter().any(|row| row.len() != dim)
            || table
                .iter()
                .any(|row| row.iter().any(|entry| entry.len() != dim))
        {
            return Err(Error::InvalidAlgebra(
                "multiplication table shape does not match the basis".into(),
            ));
        }
        if invol.rows() != dim || invol.cols() != dim {
            return Err(Error::InvalidAlgebra("involution matrix shape mismatch".into()));
        }
        if basis_names.len() != dim {
            return Err(Error::InvalidAlgebra("basis name count mismatch".into()));
        }
        let all = table
            .iter()
            .flat_map(|r| r.iter().flat_map(|e| e.iter()))
            .chain(unit.iter());
        for s in all {
            if s.ring() != ring {
                return Err(Error::MixedTruncationOrders(ring.describe(), s.ring().describe()));
            }
        }
        Ok(StarAlgebra {
            name: name.into(),
            ring,
            dim,
            table,
            unit,
            invol,
            basis_names,
            kind,
            faithful_rep: None,
        })
    }

    /// Check the algebra axioms. With `exhaustive` set, associativity is
    /// checked on every basis triple; otherwise on a deterministic sample
    /// (used for large internally-assembled algebras whose tables are
    /// correct by construction).
    pub fn validate_axioms(&self, exhaustive: bool) -> Result<()> {
        let d = self.dim;
        // Unit axioms.
        for i in 0..d {
            let e = self.basis_elt(i);
            if self.mul(&self.unit, &e) != e || self.mul(&e, &self.unit) != e {
                return Err(Error::UnitNotPreserved(format!(
                    "unit fails on basis element {}",
                    self.basis_names[i]
                )));
            }
        }
        // Associativity.
        let triples: Vec<(usize, usize, usize)> = if exhaustive || d <= 12 {
            itertools::iproduct!(0..d, 0..d, 0..d).collect()
        } else {
            // Deterministic sample: strides chosen coprime to the dimension.
            let mut v = Vec::new();
            let (mut a, mut b, mut c) = (0usize, 1usize, 2usize);
            for _ in 0..2000.min(d * d * d) {
                v.push((a % d, b % d, c % d));
                a += 1;
                b += 3;
                c += 7;
            }
            v
        };
        for (i, j, k) in triples {
            let left = self.mul(&self.table[i][j].clone(), &self.basis_elt(k));
            let right = self.mul(&self.basis_elt(i), &self.table[j][k].clone());
            if left != right {
                return Err(Error::InvalidAlgebra(format!(
                    "associativity fails at ({}, {}, {})",
                    self.basis_names[i], self.basis_names[j], self.basis_names[k]
                )));
            }
        }
        // Involution: involutive, unit-fixing, antimultiplicative.
        if self.star(&self.unit) != self.unit {
            return Err(Error::InvalidInvolution("unit is not self-adjoint".into()));
        }
        for i in 0..d {
            let e = self.basis_elt(i);
            if self.star(&self.star(&e)) != e {
                return Err(Error::InvalidInvolution(format!(
                    "square of the involution moves {}",
                    self.basis_names[i]
                )));
            }
        }
        for i in 0..d {
            for j in 0..d {
                let lhs = self.star(&self.table[i][j]);
                let rhs = self.mul(&self.star(&self.basis_elt(j)), &self.star(&self.basis_elt(i)));
                if lhs != rhs {
                    return Err(Error::InvalidInvolution(format!(
                        "antimultiplicativity fails at ({}, {})",
                        self.basis_names[i], self.basis_names[j]
                    )));
                }
            }
        }
        Ok(())
    }

    /// The base ring viewed as a one-dimensional algebra.
    pub fn base(ring: BaseRing) -> Self {
        let one = Scalar::one(ring);
        StarAlgebra::assemble(
            "C",
            ring,
            vec![vec![vec![one.clone()]]],
            vec![one],
            Mat::identity(ring, 1),
            vec!["1".into()],
            AlgebraKind::Base,
        )
        .expect("base algebra")
    }

    /// Full matrix algebra `M_n` with the conjugate-transpose involution.
    /// Basis element `r*n + c` is the matrix unit `E_{rc}`.
    pub fn matrix(ring: BaseRing, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidAlgebra("matrix algebra needs n >= 1".into()));
        }
        let d = n * n;
        let zero = Scalar::zero(ring);
        let one = Scalar::one(ring);
        let idx = |r: usize, c: usize| r * n + c;
        let mut table = vec![vec![vec![zero.clone(); d]; d]; d];
        for r in 0..n {
            for c in 0..n {
                for c2 in 0..n {
                    for c3 in 0..n {
                        // E_{rc} E_{c2 c3} = delta_{c c2} E_{r c3}
                        if c == c2 {
                            table[idx(r, c)][idx(c2, c3)][idx(r, c3)] = one.clone();
                        }
                    }
                }
            }
        }
        let mut unit = vec![zero.clone(); d];
        for r in 0..n {
            unit[idx(r, r)] = one.clone();
        }
        let mut invol = Mat::zero(ring, d, d);
        for r in 0..n {
            for c in 0..n {
                invol.set(idx(c, r), idx(r, c), one.clone());
            }
        }
        let names = (0..n)
            .flat_map(|r| (0..n).map(move |c| format!("E{}{}", r + 1, c + 1)))
            .collect();
        let alg = StarAlgebra::assemble(
            format!("M{n}"),
            ring,
            table,
            unit,
            invol,
            names,
            AlgebraKind::FullMatrix { n },
        )?;
        if d <= 16 {
            alg.validate_axioms(true)?;
        } else {
            alg.validate_axioms(false)?;
        }
        Ok(alg)
    }

    /// Grassmann algebra on two anticommuting generators `t1, t2` with
    /// `t_i^2 = 0` and `t_i^* = t_i`. Basis: `1, t1, t2, t1 t2`.
    pub fn grassmann(ring: BaseRing) -> Self {
        let zero = Scalar::zero(ring);
        let one = Scalar::one(ring);
        let d = 4;
        // indices: 0 = 1, 1 = t1, 2 = t2, 3 = t1 t2.
        let mut table = vec![vec![vec![zero.clone(); d]; d]; d];
        let mut put = |i: usize, j: usize, k: usize, s: i64| {
            table[i][j][k] = Scalar::from_rational(ring, Q::from_integer(s.into()));
        };
        for i in 0..d {
            put(0, i, i, 1);
            if i != 0 {
                put(i, 0, i, 1);
            }
        }
        put(1, 2, 3, 1); // t1 t2
        put(2, 1, 3, -1); // t2 t1 = -t1 t2
        // t1 (t1 t2) = 0, (t1 t2) t1 = 0, t1^2 = t2^2 = 0, (t1t2)(t1t2) = 0:
        // all remaining products vanish, which the zero-initialised table
        // already says.
        let unit = {
            let mut u = vec![zero.clone(); d];
            u[0] = one.clone();
            u
        };
        // Involution: fixes 1, t1, t2; negates t1 t2.
        let mut invol = Mat::identity(ring, d);
        invol.set(3, 3, -one);
        let alg = StarAlgebra::assemble(
            "Gr2",
            ring,
            table,
            unit,
            invol,
            vec!["1".into(), "t1".into(), "t2".into(), "t1t2".into()],
            AlgebraKind::Grassmann,
        )
        .expect("grassmann algebra");
        alg.validate_axioms(true).expect("grassmann axioms");
        alg
    }

    /// Dual numbers: `C[x]/(x^2)` with `x^* = x`.
    pub fn dual_numbers(ring: BaseRing) -> Self {
        let zero = Scalar::zero(ring);
        let one = Scalar::one(ring);
        let mut table = vec![vec![vec![zero.clone(); 2]; 2]; 2];
        table[0][0][0] = one.clone();
        table[0][1][1] = one.clone();
        table[1][0][1] = one.clone();
        // x * x = 0.
        let unit = vec![one.clone(), zero.clone()];
        let invol = Mat::identity(ring, 2);
        let alg = StarAlgebra::assemble(
            "C[x]/(x^2)",
            ring,
            table,
            unit,
            invol,
            vec!["1".into(), "x".into()],
            AlgebraKind::DualNumbers,
        )
        .expect("dual numbers");
        alg.validate_axioms(true).expect("dual number axioms");
        alg
    }

    /// Two copies of the base ring with the swap involution
    /// `(a, b)^* = (conj b, conj a)`.
    pub fn swap_pair(ring: BaseRing) -> Self {
        let zero = Scalar::zero(ring);
        let one = Scalar::one(ring);
        let mut table = vec![vec![vec![zero.clone(); 2]; 2]; 2];
        table[0][0][0] = one.clone();
        table[1][1][1] = one.clone();
        let unit = vec![one.clone(), one.clone()];
        let mut invol = Mat::zero(ring, 2, 2);
        invol.set(0, 1, one.clone());
        invol.set(1, 0, one.clone());
        let alg = StarAlgebra::assemble(
            "C+C(swap)",
            ring,
            table,
            unit,
            invol,
            vec!["p1".into(), "p2".into()],
            AlgebraKind::SwapPair,
        )
        .expect("swap pair");
        alg.validate_axioms(true).expect("swap pair axioms");
        alg
    }

    /// Matrices of size `n` with entries in `inner`. Basis element
    /// `(r*n + c)*d + i` is `E_{rc} e_i`.
    pub fn matrix_over(inner: &StarAlgebra, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidAlgebra("matrix algebra needs n >= 1".into()));
        }
        let ring = inner.ring;
        let d = inner.dim;
        let big = n * n * d;
        let zero = Scalar::zero(ring);
        let idx = |r: usize, c: usize, i: usize| (r * n + c) * d + i;
        let mut table = vec![vec![vec![zero.clone(); big]; big]; big];
        for r in 0..n {
            for c in 0..n {
                for c3 in 0..n {
                    for i in 0..d {
                        for j in 0..d {
                            let prod = &inner.table[i][j];
                            let a = idx(r, c, i);
                            let b = idx(c, c3, j);
                            for (k, coeff) in prod.iter().enumerate() {
                                if !coeff.is_zero() {
                                    table[a][b][idx(r, c3, k)] = coeff.clone();
                                }
                            }
                        }
                    }
                }
            }
        }
        let mut unit = vec![zero.clone(); big];
        for r in 0..n {
            for (i, coeff) in inner.unit.iter().enumerate() {
                unit[idx(r, r, i)] = coeff.clone();
            }
        }
        let mut invol = Mat::zero(ring, big, big);
        for r in 0..n {
            for c in 0..n {
                for i in 0..d {
                    for k in 0..d {
                        let v = inner.invol.at(k, i);
                        if !v.is_zero() {
                            invol.set(idx(c, r, k), idx(r, c, i), v.clone());
                        }
                    }
                }
            }
        }
        let names = (0..n)
            .flat_map(|r| {
                let inner_names = inner.basis_names.clone();
                (0..n).flat_map(move |c| {
                    inner_names
                        .clone()
                        .into_iter()
                        .map(move |nm| format!("E{}{}.{nm}", r + 1, c + 1))
                })
            })
            .collect();
        let alg = StarAlgebra::assemble(
            format!("M{n}({})", inner.name),
            ring,
            table,
            unit,
            invol,
            names,
            AlgebraKind::MatrixOver { n, inner: Box::new(inner.kind.clone()) },
        )?;
        alg.validate_axioms(big <= 20)?;
        Ok(alg)
    }

    /// External tensor product with `(a (x) b)^* = a^* (x) b^*`.
    pub fn tensor(left: &StarAlgebra, right: &StarAlgebra) -> Result<Self> {
        if left.ring != right.ring {
            return Err(Error::MixedTruncationOrders(
                left.ring.describe(),
                right.ring.describe(),
            ));
        }
        let ring = left.ring;
        let (da, db) = (left.dim, right.dim);
        let big = da * db;
        let zero = Scalar::zero(ring);
        let idx = |i: usize, j: usize| i * db + j;
        let mut table = vec![vec![vec![zero.clone(); big]; big]; big];
        for i1 in 0..da {
            for j1 in 0..db {
                for i2 in 0..da {
                    for j2 in 0..db {
                        let pa = &left.table[i1][i2];
                        let pb = &right.table[j1][j2];
                        for (ka, ca) in pa.iter().enumerate() {
                            if ca.is_zero() {
                                continue;
                            }
                            for (kb, cb) in pb.iter().enumerate() {
                                if cb.is_zero() {
                                    continue;
                                }
                                table[idx(i1, j1)][idx(i2, j2)][idx(ka, kb)] = ca * cb;
                            }
                        }
                    }
                }
            }
        }
        let mut unit = vec![zero.clone(); big];
        for (i, ca) in left.unit.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            for (j, cb) in right.unit.iter().enumerate() {
                if !cb.is_zero() {
                    unit[idx(i, j)] = ca * cb;
                }
            }
        }
        let invol = left.invol.kron(&right.invol);
        let names = (0..da)
            .flat_map(|i| {
                let ln = left.basis_names[i].clone();
                let rn = right.basis_names.clone();
                (0..db).map(move |j| format!("{ln}(x){}", rn[j]))
            })
            .collect();
        let alg = StarAlgebra::assemble(
            format!("{}(x){}", left.name, right.name),
            ring,
            table,
            unit,
            invol,
            names,
            AlgebraKind::Tensor {
                left: Box::new(left.kind.clone()),
                right: Box::new(right.kind.clone()),
            },
        )?;
        alg.validate_axioms(big <= 20)?;
        Ok(alg)
    }

    /// The full corner `E M_n E` cut out by a hermitian idempotent scalar
    /// matrix, with the involution inherited from the conjugate transpose.
    /// The result carries the inclusion as a faithful representation, which
    /// is what the positivity engine keys on: corners of matrix algebras
    /// need not be *-isomorphic to matrix algebras over the rationals, so
    /// they get no concrete `kind`, but positivity questions can still be
    /// settled through the ambient picture.
    pub fn corner_of(name: impl Into<String>, e: &Mat) -> Result<Self> {
        let ring = e.ring();
        let n = e.rows();
        if !e.is_square() {
            return Err(Error::DimensionMismatch("corner projection must be square".into()));
        }
        if &(e * e) != e || e.adjoint() != *e {
            return Err(Error::PreconditionViolated(
                "corner constructor needs a hermitian idempotent".into(),
            ));
        }
        // Span of E B E over all matrix units B, compressed to a basis.
        let mut mats: Vec<Mat> = Vec::with_capacity(n * n);
        let mut cols: Vec<Vec<Scalar>> = Vec::with_capacity(n * n);
        for u in 0..n {
            for v in 0..n {
                let mut b = Mat::zero(ring, n, n);
                b.set(u, v, Scalar::one(ring));
                let c = &(e * &b) * e;
                let mut flat = Vec::with_capacity(n * n);
                for r in 0..n {
                    for s in 0..n {
                        flat.push(c.at(r, s).clone());
                    }
                }
                mats.push(c);
                cols.push(flat);
            }
        }
        let picked = Mat::column_basis(&cols, ring, n * n)?;
        if picked.is_empty() {
            return Err(Error::InvalidAlgebra("corner of the zero projection is empty".into()));
        }
        let basis: Vec<Mat> = picked.iter().map(|&i| mats[i].clone()).collect();
        let dim = basis.len();
        // Coordinates of an arbitrary corner matrix against the basis.
        let mut solver = Mat::zero(ring, n * n, dim);
        for (j, b) in basis.iter().enumerate() {
            for r in 0..n {
                for s in 0..n {
                    solver.set(r * n + s, j, b.at(r, s).clone());
                }
            }
        }
        let coords_of = |m: &Mat| -> Result<Vec<Scalar>> {
            let mut rhs = Mat::zero(ring, n * n, 1);
            for r in 0..n {
                for s in 0..n {
                    rhs.set(r * n + s, 0, m.at(r, s).clone());
                }
            }
            match solver.solve(&rhs)? {
                Some(x) => Ok(x.col_vec(0)),
                None => Err(Error::InvalidAlgebra(
                    "corner is not closed under multiplication".into(),
                )),
            }
        };
        let mut table = Vec::with_capacity(dim);
        for bi in &basis {
            let mut row = Vec::with_capacity(dim);
            for bj in &basis {
                row.push(coords_of(&(bi * bj))?);
            }
            table.push(row);
        }
        let unit = coords_of(e)?;
        let mut invol = Mat::zero(ring, dim, dim);
        for (i, b) in basis.iter().enumerate() {
            let star_coords = coords_of(&b.adjoint())?;
            for (k, c) in star_coords.into_iter().enumerate() {
                invol.set(k, i, c);
            }
        }
        let names = picked.iter().map(|&i| format!("p{}{}", i / n + 1, i % n + 1)).collect();
        let alg = StarAlgebra::assemble(
            name,
            ring,
            table,
            unit,
            invol,
            names,
            AlgebraKind::Custom,
        )?;
        alg.validate_axioms(dim <= 12)?;
        alg.with_faithful_rep(Representation { dim: n, mats: basis })
    }

    /// Same coordinate space and involution, new multiplication table
    /// (used for formal deformations; the caller is responsible for the
    /// deformation conditions, which `deform` validates).
    pub fn with_table(
        &self,
        name: impl Into<String>,
        table: Vec<Vec<Vec<Scalar>>>,
        kind: AlgebraKind,
    ) -> Result<Self> {
        let alg = StarAlgebra::assemble(
            name,
            self.ring,
            table,
            self.unit.clone(),
            self.invol.clone(),
            self.basis_names.clone(),
            kind,
        )?;
        alg.validate_axioms(self.dim <= 12)?;
        Ok(alg)
    }

    pub fn with_faithful_rep(mut self, rep: Representation) -> Result<Self> {
        rep.validate(&self)?;
        self.faithful_rep = Some(rep);
        Ok(self)
    }

    pub fn rename(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    // ------------------------------------------------------------------
    // Basic accessors and element arithmetic
    // ------------------------------------------------------------------

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ring(&self) -> BaseRing {
        self.ring
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Structural equality: same ring, multiplication table, unit and
    /// involution. Names and kinds are ignored, so two independently built
    /// copies of the same algebra compare equal.
    pub fn same_structure(&self, other: &StarAlgebra) -> bool {
        self.ring == other.ring
            && self.dim == other.dim
            && self.table == other.table
            && self.unit == other.unit
            && self.invol == other.invol
    }

    pub fn kind(&self) -> &AlgebraKind {
        &self.kind
    }

    pub fn basis_names(&self) -> &[String] {
        &self.basis_names
    }

    pub fn faithful_rep(&self) -> Option<&Representation> {
        self.faithful_rep.as_ref()
    }

    pub fn zero(&self) -> Vec<Scalar> {
        vec![Scalar::zero(self.ring); self.dim]
    }

    pub fn unit(&self) -> Vec<Scalar> {
        self.unit.clone()
    }

    pub fn basis_elt(&self, i: usize) -> Vec<Scalar> {
        let mut v = self.zero();
        v[i] = Scalar::one(self.ring);
        v
    }

    pub fn scalar_elt(&self, s: &Scalar) -> Vec<Scalar> {
        self.unit.iter().map(|u| u * s).collect()
    }

    pub fn mul(&self, a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
        debug_assert_eq!(a.len(), self.dim);
        debug_assert_eq!(b.len(), self.dim);
        let mut out = self.zero();
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                if bj.is_zero() {
                    continue;
                }
                let coeff = ai * bj;
                for (k, c) in self.table[i][j].iter().enumerate() {
                    if !c.is_zero() {
                        out[k] += &coeff * c;
                    }
                }
            }
        }
        out
    }

    pub fn star(&self, a: &[Scalar]) -> Vec<Scalar> {
        let conj: Vec<Scalar> = a.iter().map(Scalar::conj).collect();
        self.invol.mul_vec(&conj)
    }

    pub fn is_hermitian_elt(&self, a: &[Scalar]) -> bool {
        self.star(a) == a
    }

    pub fn hermitian_part(&self, a: &[Scalar]) -> Vec<Scalar> {
        let s = self.star(a);
        let half = Scalar::from_rational(self.ring, Q::new(1.into(), 2.into()));
        a.iter()
            .zip(&s)
            .map(|(x, y)| (x.clone() + y.clone()) * half.clone())
            .collect()
    }

    pub fn commutator(&self, a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
        let ab = self.mul(a, b);
        let ba = self.mul(b, a);
        ab.iter().zip(&ba).map(|(x, y)| x.clone() - y.clone()).collect()
    }

    /// Matrix of left multiplication by `a` in the coordinate basis.
    pub fn left_mult_matrix(&self, a: &[Scalar]) -> Mat {
        let mut m = Mat::zero(self.ring, self.dim, self.dim);
        for j in 0..self.dim {
            let col = self.mul(a, &self.basis_elt(j));
            for k in 0..self.dim {
                m.set(k, j, col[k].clone());
            }
        }
        m
    }

    pub fn right_mult_matrix(&self, a: &[Scalar]) -> Mat {
        let mut m = Mat::zero(self.ring, self.dim, self.dim);
        for j in 0..self.dim {
            let col = self.mul(&self.basis_elt(j), a);
            for k in 0..self.dim {
                m.set(k, j, col[k].clone());
            }
        }
        m
    }

    /// Two-sided inverse, if it exists.
    pub fn inv_elt(&self, a: &[Scalar]) -> Result<Option<Vec<Scalar>>> {
        let l = self.left_mult_matrix(a);
        let rhs = Mat::column(self.ring, self.unit.clone());
        let x = match l.solve(&rhs)? {
            Some(x) => x.col_vec(0),
            None => return Ok(None),
        };
        if self.mul(a, &x) == self.unit && self.mul(&x, &a.to_vec()) == self.unit {
            Ok(Some(x))
        } else {
            Ok(None)
        }
    }

    pub fn is_invertible_elt(&self, a: &[Scalar]) -> Result<bool> {
        Ok(self.inv_elt(a)?.is_some())
    }

    pub fn is_idempotent(&self, a: &[Scalar]) -> bool {
        self.mul(a, a) == a
    }

    pub fn is_projection(&self, a: &[Scalar]) -> bool {
        self.is_idempotent(a) && self.is_hermitian_elt(a)
    }

    /// Format an element as a linear combination of named basis elements.
    pub fn format_elt(&self, a: &[Scalar]) -> String {
        let mut parts = Vec::new();
        for (i, c) in a.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if c.is_one() && self.basis_names[i] != "1" {
                parts.push(self.basis_names[i].clone());
            } else if self.basis_names[i] == "1" {
                parts.push(format!("{c}"));
            } else {
                parts.push(format!("({c})*{}", self.basis_names[i]));
            }
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }

    // ------------------------------------------------------------------
    // Concrete matrix picture for matrix towers
    // ------------------------------------------------------------------

    /// Faithful matrix form of an element, available when the algebra is a
    /// matrix tower (or tensor product of such) over the base ring.
    pub fn concrete_matrix(&self, a: &[Scalar]) -> Option<Mat> {
        let m = self.kind.concrete_dim()?;
        let mut out = Mat::zero(self.ring, m, m);
        for (i, c) in a.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let b = self.concrete_basis(i)?;
            out = &out + &b.scale(c);
        }
        Some(out)
    }

    fn concrete_basis(&self, i: usize) -> Option<Mat> {
        concrete_basis_of_kind(&self.kind, self.ring, self.dim, i)
    }

    /// Inverse of `concrete_matrix`: read an element off its matrix form.
    pub fn from_concrete_matrix(&self, m: &Mat) -> Result<Vec<Scalar>> {
        let cd = self
            .kind
            .concrete_dim()
            .ok_or_else(|| Error::InvalidRepresentation("no concrete picture".into()))?;
        if m.rows() != cd || m.cols() != cd {
            return Err(Error::DimensionMismatch(format!(
                "expected a {cd}x{cd} matrix for {}",
                self.name
            )));
        }
        // The concrete basis matrices are linearly independent, so the
        // coordinates are recovered by solving one linear system.
        let mut cols = Mat::zero(self.ring, cd * cd, self.dim);
        for i in 0..self.dim {
            let b = self.concrete_basis(i).unwrap();
            for r in 0..cd {
                for c in 0..cd {
                    cols.set(r * cd + c, i, b.at(r, c).clone());
                }
            }
        }
        let mut rhs = Mat::zero(self.ring, cd * cd, 1);
        for r in 0..cd {
            for c in 0..cd {
                rhs.set(r * cd + c, 0, m.at(r, c).clone());
            }
        }
        match cols.solve(&rhs)? {
            Some(x) => Ok(x.col_vec(0)),
            None => Err(Error::ElementNotInModule(
                "matrix is not in the image of the concrete picture".into(),
            )),
        }
    }

    /// The canonical faithful *-representation of a matrix tower.
    pub fn concrete_rep(&self) -> Option<Representation> {
        let m = self.kind.concrete_dim()?;
        let mats = (0..self.dim).map(|i| self.concrete_basis(i)).collect::<Option<Vec<_>>>()?;
        Some(Representation { dim: m, mats })
    }

    // ------------------------------------------------------------------
    // Classical limit (series coefficients at order zero)
    // ------------------------------------------------------------------

    /// For an algebra over a series ring: the algebra over the rationals
    /// obtained by setting the formal parameter to zero. For a `Deformed`
    /// kind this is the classical algebra the deformation started from.
    pub fn classical_algebra(&self) -> Result<StarAlgebra> {
        if !self.ring.is_series() {
            return Err(Error::PreconditionViolated(
                "classical limit only applies over a series ring".into(),
            ));
        }
        let r = BaseRing::Rationals;
        let drop = |s: &Scalar| {
            let (re, im) = s.classical_parts();
            Scalar::from_complex(r, re, im)
        };
        let table = self
            .table
            .iter()
            .map(|row| row.iter().map(|e| e.iter().map(drop).collect()).collect())
            .collect();
        let unit = self.unit.iter().map(drop).collect();
        let invol = Mat::from_fn(r, self.dim, self.dim, |i, j| drop(self.invol.at(i, j)));
        let kind = match &self.kind {
            AlgebraKind::Deformed { classical } => (**classical).clone(),
            k => k.clone(),
        };
        let alg = StarAlgebra::assemble(
            format!("{}|0", self.name),
            r,
            table,
            unit,
            invol,
            self.basis_names.clone(),
            kind,
        )?;
        alg.validate_axioms(self.dim <= 12)?;
        Ok(alg)
    }

    /// Coordinates of the classical part of an element, over the rationals.
    pub fn classical_coords(a: &[Scalar]) -> Vec<Scalar> {
        a.iter()
            .map(|s| {
                let (re, im) = s.classical_parts();
                Scalar::from_complex(BaseRing::Rationals, re, im)
            })
            .collect()
    }

    /// Lift coordinates over the rationals into this algebra's series ring.
    pub fn lift_coords(&self, a: &[Scalar]) -> Vec<Scalar> {
        a.iter().map(|s| s.lift_to(self.ring)).collect()
    }
}

fn concrete_basis_of_kind(kind: &AlgebraKind, ring: BaseRing, dim: usize, i: usize) -> Option<Mat> {
    match kind {
        AlgebraKind::Base => {
            let mut m = Mat::zero(ring, 1, 1);
            if i == 0 {
                m.set(0, 0, Scalar::one(ring));
            }
            Some(m)
        }
        AlgebraKind::FullMatrix { n } => {
            let mut m = Mat::zero(ring, *n, *n);
            m.set(i / n, i % n, Scalar::one(ring));
            Some(m)
        }
        AlgebraKind::MatrixOver { n, inner } => {
            let id = inner.concrete_dim()?;
            let din = dim / (n * n);
            let (outer, inner_i) = (i / din, i % din);
            let (r, c) = (outer / n, outer % n);
            let block = concrete_basis_of_kind(inner, ring, din, inner_i)?;
            let mut m = Mat::zero(ring, n * id, n * id);
            for br in 0..id {
                for bc in 0..id {
                    let v = block.at(br, bc);
                    if !v.is_zero() {
                        m.set(r * id + br, c * id + bc, v.clone());
                    }
                }
            }
            Some(m)
        }
        AlgebraKind::Tensor { left, right } => {
            let dl = left.concrete_dim()?;
            let dr = right.concrete_dim()?;
            // dim = dim_left * dim_right as coordinate spaces; recover the
            // coordinate dimensions from the kinds.
            let coord_left = coord_dim_of(left)?;
            let coord_right = coord_dim_of(right)?;
            debug_assert_eq!(coord_left * coord_right, dim);
            let (il, ir) = (i / coord_right, i % coord_right);
            let a = concrete_basis_of_kind(left, ring, coord_left, il)?;
            let b = concrete_basis_of_kind(right, ring, coord_right, ir)?;
            debug_assert_eq!(a.rows(), dl);
            debug_assert_eq!(b.rows(), dr);
            Some(a.kron(&b))
        }
        _ => None,
    }
}

fn coord_dim_of(kind: &AlgebraKind) -> Option<usize> {
    match kind {
        AlgebraKind::Base => Some(1),
        AlgebraKind::FullMatrix { n } => Some(n * n),
        AlgebraKind::MatrixOver { n, inner } => Some(n * n * coord_dim_of(inner)?),
        AlgebraKind::Tensor { left, right } => Some(coord_dim_of(left)? * coord_dim_of(right)?),
        _ => None,
    }
}

/// A *-representation: basis elements mapped to concrete matrices.
#[derive(Clone)]
pub struct Representation {
    pub dim: usize,
    pub mats: Vec<Mat>,
}

impl Representation {
    pub fn apply(&self, a: &[Scalar]) -> Mat {
        let ring = self.mats[0].ring();
        let mut out = Mat::zero(ring, self.dim, self.dim);
        for (i, c) in a.iter().enumerate() {
            if !c.is_zero() {
                out = &out + &self.mats[i].scale(c);
            }
        }
        out
    }

    /// Check that this is a faithful *-representation of `alg`. The unit
    /// may land on any hermitian idempotent `E` (the identity in the unital
    /// case); every image must then stay inside the corner `E M E`, so the
    /// representation identifies the algebra with a subalgebra of that
    /// corner.
    pub fn validate(&self, alg: &StarAlgebra) -> Result<()> {
        if self.mats.len() != alg.dim() {
            return Err(Error::InvalidRepresentation("wrong number of matrices".into()));
        }
        for m in &self.mats {
            if m.rows() != self.dim || m.cols() != self.dim || m.ring() != alg.ring() {
                return Err(Error::InvalidRepresentation("matrix shape or ring mismatch".into()));
            }
        }
        let e = self.apply(&alg.unit());
        if &(&e * &e) != &e || e.adjoint() != e {
            return Err(Error::InvalidRepresentation(
                "unit does not map to a hermitian idempotent".into(),
            ));
        }
        for (i, m) in self.mats.iter().enumerate() {
            if &(&(&e * m) * &e) != m {
                return Err(Error::InvalidRepresentation(format!(
                    "image of {} escapes the corner cut out by the unit",
                    alg.basis_names[i]
                )));
            }
        }
        for i in 0..alg.dim() {
            for j in 0..alg.dim() {
                let lhs = &self.mats[i] * &self.mats[j];
                let rhs = self.apply(&alg.table[i][j]);
                if lhs != rhs {
                    return Err(Error::InvalidRepresentation(format!(
                        "not multiplicative at ({}, {})",
                        alg.basis_names[i], alg.basis_names[j]
                    )));
                }
            }
            let lhs = self.apply(&alg.star(&alg.basis_elt(i)));
            if lhs != self.mats[i].adjoint() {
                return Err(Error::InvalidRepresentation(format!(
                    "involution does not match the adjoint at {}",
                    alg.basis_names[i]
                )));
            }
        }
        // Faithfulness: the matrices must be linearly independent.
        let n2 = self.dim * self.dim;
        let mut flat = Mat::zero(alg.ring(), n2, alg.dim());
        for (i, m) in self.mats.iter().enumerate() {
            for r in 0..self.dim {
                for c in 0..self.dim {
                    flat.set(r * self.dim + c, i, m.at(r, c).clone());
                }
            }
        }
        if flat.rank()? != alg.dim() {
            return Err(Error::InvalidRepresentation("representation is not faithful".into()));
        }
        Ok(())
    }

    /// Image of the algebra unit: a hermitian idempotent, equal to the
    /// identity exactly when the representation is unital.
    pub fn unit_projection(&self, alg: &StarAlgebra) -> Mat {
        self.apply(&alg.unit())
    }

    /// Whether the image is the *whole* corner `E M E` cut out by the
    /// unit's image, rather than a proper subalgebra of it.
    pub fn spans_corner(&self, alg: &StarAlgebra) -> Result<bool> {
        let ring = alg.ring();
        let e = self.apply(&alg.unit());
        let n = self.dim;
        let mut cols: Vec<Vec<Scalar>> = Vec::with_capacity(n * n);
        for u in 0..n {
            for v in 0..n {
                let mut b = Mat::zero(ring, n, n);
                b.set(u, v, Scalar::one(ring));
                let c = &(&e * &b) * &e;
                let mut flat = Vec::with_capacity(n * n);
                for r in 0..n {
                    for s in 0..n {
                        flat.push(c.at(r, s).clone());
                    }
                }
                cols.push(flat);
            }
        }
        let picked = Mat::column_basis(&cols, ring, n * n)?;
        Ok(picked.len() == alg.dim())
    }
}

impl fmt::Debug for StarAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "StarAlgebra({}, dim {}, over {}, kind {:?})",
            self.name,
            self.dim,
            self.ring.describe(),
            self.kind
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vec_is_zero;
    use crate::scalar::q_int;

    fn rq(v: i64) -> Scalar {
        Scalar::from_rational(BaseRing::Rationals, q_int(v))
    }

    #[test]
    fn matrix_algebra_multiplies_like_matrices() {
        let a = StarAlgebra::matrix(BaseRing::Rationals, 2).unwrap();
        // E11 E12 = E12, E12 E21 = E11, E12 E12 = 0.
        let e11 = a.basis_elt(0);
        let e12 = a.basis_elt(1);
        let e21 = a.basis_elt(2);
        assert_eq!(a.mul(&e11, &e12), e12);
        assert_eq!(a.mul(&e12, &e21), e11);
        assert!(vec_is_zero(&a.mul(&e12, &e12)));
        // Star of E12 is E21.
        assert_eq!(a.star(&e12), e21);
    }

    #[test]
    fn concrete_picture_is_a_star_isomorphism() {
        let a = StarAlgebra::matrix(BaseRing::Rationals, 2).unwrap();
        let m2m2 = StarAlgebra::matrix_over(&a, 2).unwrap();
        assert_eq!(m2m2.dim(), 16);
        assert_eq!(m2m2.kind().concrete_dim(), Some(4));
        // Check multiplicativity and star-compatibility of the concrete
        // picture on a spread of basis pairs.
        for i in (0..16).step_by(3) {
            for j in (0..16).step_by(5) {
                let x = m2m2.basis_elt(i);
                let y = m2m2.basis_elt(j);
                let lhs = m2m2.concrete_matrix(&m2m2.mul(&x, &y)).unwrap();
                let rhs = &m2m2.concrete_matrix(&x).unwrap() * &m2m2.concrete_matrix(&y).unwrap();
                assert_eq!(lhs, rhs);
                let sx = m2m2.concrete_matrix(&m2m2.star(&x)).unwrap();
                assert_eq!(sx, m2m2.concrete_matrix(&x).unwrap().adjoint());
            }
        }
        // Round trip through the concrete picture.
        let mut elt = m2m2.zero();
        elt[3] = rq(5);
        elt[7] = Scalar::from_complex(BaseRing::Rationals, q_int(1), q_int(-2));
        let m = m2m2.concrete_matrix(&elt).unwrap();
        assert_eq!(m2m2.from_concrete_matrix(&m).unwrap(), elt);
    }

    #[test]
    fn grassmann_relations() {
        let g = StarAlgebra::grassmann(BaseRing::Rationals);
        let t1 = g.basis_elt(1);
        let t2 = g.basis_elt(2);
        let t12 = g.basis_elt(3);
        assert!(vec_is_zero(&g.mul(&t1, &t1)));
        assert_eq!(g.mul(&t1, &t2), t12);
        let anti = g.mul(&t2, &t1);
        assert_eq!(anti, t12.iter().map(|c| -c.clone()).collect::<Vec<_>>());
        // (t1 t2)^* = t2 t1 = -t1 t2.
        assert_eq!(g.star(&t12), anti);
        assert!(g.concrete_matrix(&t1).is_none());
    }

    #[test]
    fn swap_pair_has_negative_square_sums() {
        let s = StarAlgebra::swap_pair(BaseRing::Rationals);
        // a = (1, -1): 1 + a^* a = 0.
        let a = vec![rq(1), rq(-1)];
        let sq = s.mul(&s.star(&a), &a);
        let total: Vec<Scalar> = s.unit().iter().zip(&sq).map(|(u, v)| u.clone() + v.clone()).collect();
        assert!(vec_is_zero(&total));
    }

    #[test]
    fn inverses_through_the_regular_representation() {
        let a = StarAlgebra::matrix(BaseRing::Rationals, 2).unwrap();
        // 2*E11 + E12 + E22 is invertible (upper triangular, units on diag).
        let mut x = a.zero();
        x[0] = rq(2);
        x[1] = rq(1);
        x[3] = rq(1);
        let inv = a.inv_elt(&x).unwrap().expect("invertible");
        assert_eq!(a.mul(&x, &inv), a.unit());
        // E12 is nilpotent, not invertible.
        assert!(a.inv_elt(&a.basis_elt(1)).unwrap().is_none());
    }

    #[test]
    fn tensor_of_matrix_algebras_concretizes_via_kronecker() {
        let m2 = StarAlgebra::matrix(BaseRing::Rationals, 2).unwrap();
        let t = StarAlgebra::tensor(&m2, &m2).unwrap();
        assert_eq!(t.dim(), 16);
        assert_eq!(t.kind().concrete_dim(), Some(4));
        let x = t.basis_elt(3);
        let y = t.basis_elt(9);
        let lhs = t.concrete_matrix(&t.mul(&x, &y)).unwrap();
        let rhs = &t.concrete_matrix(&x).unwrap() * &t.concrete_matrix(&y).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn representation_validation_rejects_non_star_maps() {
        let a = StarAlgebra::matrix(BaseRing::Rationals, 2).unwrap();
        let rep = a.concrete_rep().unwrap();
        assert!(rep.validate(&a).is_ok());
        // Break star-compatibility: transpose instead of adjoint on E12.
        let mut bad = rep.clone();
        bad.mats[1] = bad.mats[1].transpose();
        assert!(bad.validate(&a).is_err());
    }

    #[test]
    fn dual_numbers_square_to_zero() {
        let d = StarAlgebra::dual_numbers(BaseRing::Rationals);
        let x = d.basis_elt(1);
        assert!(vec_is_zero(&d.mul(&x, &x)));
        assert_eq!(d.star(&x), x);
        assert!(d.inv_elt(&x).unwrap().is_none());
        let u: Vec<Scalar> = vec![rq(1), rq(5)];
        let inv = d.inv_elt(&u).unwrap().expect("unit plus nilpotent");
        assert_eq!(d.mul(&u, &inv), d.unit());
    }
}
