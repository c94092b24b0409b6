//! Finitely generated inner-product modules over a *-algebra.
//!
//! A module lives inside a free ambient `A^n` and is presented by a finite
//! generating family. Everything is realized as an exact linear-algebra
//! object over the scalars: the module is the span of the generator orbits
//! under the right action, inner products are evaluated coordinate by
//! coordinate, and degeneracy spaces, quotients and operator algebras come
//! out of kernels and solves over the base field (or the truncated series
//! ring, where rank stability is enforced by the elimination itself).
//!
//! Inner products are conjugate-linear in the first slot, algebra-linear in
//! the second: `<x, y.a> = <x,y> a` and `<x,y>* = <y,x>`.

use std::sync::OnceLock;

use crate::algebra::AlgebraRef;
use crate::amat::{AElt, AMat};
use crate::error::{Error, Result};
use crate::linalg::{Mat, PreparedSolve, Subspace};
use crate::positivity::{amat_positive, verify_squares_cert, Obstruction, SquaresCert};
use crate::scalar::Scalar;
use crate::verdict::Verdict;

/// An element of `A^n`, one algebra element per ambient slot.
pub type MElt = Vec<AElt>;

#[derive(Clone, Debug)]
pub enum Presentation {
    /// The whole ambient `A^n`, generated by the standard basis columns.
    Free,
    /// The image of a projection in `M_n(A)`; generated by its columns.
    Projective(AMat),
    /// An arbitrary finite generating family.
    Generated,
}

#[derive(Clone, Debug)]
pub enum InnerKind {
    /// `<x,y> = sum_i x_i^* y_i`.
    Canonical,
    /// `<x,y> = sum_{ij} x_i^* H_ij y_j` for a hermitian `H` in `M_n(A)`.
    Twisted(AMat),
    /// A Gram table on the generators; validated against their relations.
    Explicit(AMat),
}

#[derive(Clone)]
pub struct InnerProductModule {
    alg: AlgebraRef,
    ambient: usize,
    generators: Vec<MElt>,
    presentation: Presentation,
    inner: InnerKind,
    span: Subspace,
    /// Lazily factored generator-orbit system; expressing members in the
    /// generators happens on every inner-product evaluation for explicit
    /// tables, so the elimination must not be repeated each time. `None`
    /// once initialization failed (unstable series rank): callers then fall
    /// back to the one-shot solver and surface its error.
    orbit_solver: OnceLock<Option<PreparedSolve>>,
    /// Explicit tables re-expressed on the span basis (same caveat).
    span_gram: OnceLock<Option<AMat>>,
}

// -------------------------------------------------------------------
// Flattening between A^n and C^{n d}
// -------------------------------------------------------------------

pub fn flatten_elt(x: &[AElt]) -> Vec<Scalar> {
    x.iter().flat_map(|a| a.iter().cloned()).collect()
}

pub fn unflatten_elt(alg: &AlgebraRef, n: usize, v: &[Scalar]) -> MElt {
    let d = alg.dim();
    assert_eq!(v.len(), n * d);
    (0..n).map(|i| v[i * d..(i + 1) * d].to_vec()).collect()
}

fn elt_is_zero(x: &[AElt]) -> bool {
    x.iter().all(|a| a.iter().all(Scalar::is_zero))
}

fn elt_add(x: &[AElt], y: &[AElt]) -> MElt {
    x.iter()
        .zip(y)
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p.clone() + q.clone()).collect())
        .collect()
}

fn elt_scale(alg: &AlgebraRef, x: &[AElt], a: &AElt) -> MElt {
    x.iter().map(|c| alg.mul(c, a)).collect()
}

impl InnerProductModule {
    pub fn new(
        alg: AlgebraRef,
        ambient: usize,
        generators: Vec<MElt>,
        presentation: Presentation,
        inner: InnerKind,
    ) -> Result<Self> {
        let d = alg.dim();
        for g in &generators {
            if g.len() != ambient || g.iter().any(|a| a.len() != d) {
                return Err(Error::DimensionMismatch(
                    "generator does not live in the ambient free module".into(),
                ));
            }
        }
        match &presentation {
            Presentation::Projective(p) => {
                if p.rows() != ambient || p.cols() != ambient {
                    return Err(Error::DimensionMismatch("projection has wrong size".into()));
                }
                if !(p.mul(p) == *p && p.star() == *p) {
                    return Err(Error::PreconditionViolated(
                        "presentation matrix is not a projection".into(),
                    ));
                }
            }
            Presentation::Free | Presentation::Generated => {}
        }
        match &inner {
            InnerKind::Canonical => {}
            InnerKind::Twisted(h) => {
                if h.rows() != ambient || h.cols() != ambient {
                    return Err(Error::DimensionMismatch("twist has wrong size".into()));
                }
                if !h.is_hermitian() {
                    return Err(Error::InvalidInnerProduct("twist is not hermitian".into()));
                }
            }
            InnerKind::Explicit(g) => {
                let k = generators.len();
                if g.rows() != k || g.cols() != k {
                    return Err(Error::DimensionMismatch(
                        "explicit gram table does not match the generator count".into(),
                    ));
                }
                if !g.is_hermitian() {
                    return Err(Error::InvalidInnerProduct("gram table is not hermitian".into()));
                }
            }
        }
        let span = a_span(&alg, ambient, &generators)?;
        let module = InnerProductModule {
            alg,
            ambient,
            generators,
            presentation,
            inner,
            span,
            orbit_solver: OnceLock::new(),
            span_gram: OnceLock::new(),
        };
        if let InnerKind::Explicit(g) = &module.inner {
            module.check_explicit_well_defined(g)?;
        }
        Ok(module)
    }

    /// The free module `A^n` with its standard generators.
    pub fn free(alg: AlgebraRef, n: usize, inner: InnerKind) -> Result<Self> {
        let gens: Vec<MElt> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { alg.unit() } else { alg.zero() })
                    .collect()
            })
            .collect();
        Self::new(alg, n, gens, Presentation::Free, inner)
    }

    /// The image `P A^n` of a projection, generated by the columns of `P`.
    pub fn projective(alg: AlgebraRef, p: AMat, inner: InnerKind) -> Result<Self> {
        let n = p.rows();
        let gens: Vec<MElt> = (0..n)
            .map(|j| (0..n).map(|i| p.at(i, j).clone()).collect())
            .collect();
        Self::new(alg, n, gens, Presentation::Projective(p), inner)
    }

    pub fn generated(
        alg: AlgebraRef,
        ambient: usize,
        generators: Vec<MElt>,
        inner: InnerKind,
    ) -> Result<Self> {
        Self::new(alg, ambient, generators, Presentation::Generated, inner)
    }

    pub fn algebra(&self) -> &AlgebraRef {
        &self.alg
    }

    pub fn ambient_rank(&self) -> usize {
        self.ambient
    }

    pub fn generators(&self) -> &[MElt] {
        &self.generators
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn inner_kind(&self) -> &InnerKind {
        &self.inner
    }

    pub fn span(&self) -> &Subspace {
        &self.span
    }

    pub fn span_dim(&self) -> usize {
        self.span.dim()
    }

    pub fn contains(&self, x: &[AElt]) -> bool {
        x.len() == self.ambient && self.span.contains(&flatten_elt(x))
    }

    pub fn span_basis_elt(&self, idx: usize) -> MElt {
        unflatten_elt(&self.alg, self.ambient, &self.span.basis_row(idx))
    }

    pub fn zero_elt(&self) -> MElt {
        (0..self.ambient).map(|_| self.alg.zero()).collect()
    }

    /// Express a member as an A-combination of the generators.
    pub fn express_in_generators(&self, x: &[AElt]) -> Result<Option<Vec<AElt>>> {
        let flat = flatten_elt(x);
        let prepared = self
            .orbit_solver
            .get_or_init(|| self.generator_orbit_matrix().prepare_solve().ok());
        let sol = match prepared {
            Some(p) => match p.solve_vec(&flat) {
                Some(s) => s,
                None => return Ok(None),
            },
            None => {
                let cols = self.generator_orbit_matrix();
                let rhs = Mat::column(self.alg.ring(), flat);
                match cols.solve(&rhs)? {
                    Some(s) => (0..s.rows()).map(|r| s.at(r, 0).clone()).collect(),
                    None => return Ok(None),
                }
            }
        };
        let d = self.alg.dim();
        let coeffs = (0..self.generators.len())
            .map(|i| sol[i * d..(i + 1) * d].to_vec())
            .collect();
        Ok(Some(coeffs))
    }

    /// Columns `flatten(g_i . e_a)` for all generators and basis elements.
    fn generator_orbit_matrix(&self) -> Mat {
        let d = self.alg.dim();
        let nd = self.ambient * d;
        let mut m = Mat::zero(self.alg.ring(), nd, self.generators.len() * d);
        for (i, g) in self.generators.iter().enumerate() {
            for a in 0..d {
                let moved = elt_scale(&self.alg, g, &self.alg.basis_elt(a));
                for (r, v) in flatten_elt(&moved).into_iter().enumerate() {
                    m.set(r, i * d + a, v);
                }
            }
        }
        m
    }

    /// Evaluate the inner product. For explicit tables both arguments must
    /// lie in the module.
    pub fn inner(&self, x: &[AElt], y: &[AElt]) -> Result<AElt> {
        match &self.inner {
            InnerKind::Canonical => {
                let mut acc = self.alg.zero();
                for (a, b) in x.iter().zip(y) {
                    let t = self.alg.mul(&self.alg.star(a), b);
                    for (u, v) in acc.iter_mut().zip(t) {
                        *u += v;
                    }
                }
                Ok(acc)
            }
            InnerKind::Twisted(h) => {
                let mut acc = self.alg.zero();
                for (i, a) in x.iter().enumerate() {
                    for (j, b) in y.iter().enumerate() {
                        if h.at(i, j).iter().all(Scalar::is_zero) {
                            continue;
                        }
                        let t = self
                            .alg
                            .mul(&self.alg.mul(&self.alg.star(a), h.at(i, j)), b);
                        for (u, v) in acc.iter_mut().zip(t) {
                            *u += v;
                        }
                    }
                }
                Ok(acc)
            }
            InnerKind::Explicit(g) => {
                // Through the span table when available: reduced-echelon
                // coordinates are pivot read-offs, far cheaper than
                // re-expressing both arguments through the generator orbit
                // on every evaluation. The value agrees with the direct
                // route because the table vanishes on the relation space.
                if let Some(table) = self.span_gram_table(g) {
                    let cx = self
                        .span
                        .coordinates(&flatten_elt(x))
                        .ok_or_else(|| Error::ElementNotInModule("first argument".into()))?;
                    let cy = self
                        .span
                        .coordinates(&flatten_elt(y))
                        .ok_or_else(|| Error::ElementNotInModule("second argument".into()))?;
                    let mut acc = self.alg.zero();
                    for (p, cp) in cx.iter().enumerate() {
                        if cp.is_zero() {
                            continue;
                        }
                        for (q, dq) in cy.iter().enumerate() {
                            if dq.is_zero() {
                                continue;
                            }
                            let w = cp.conj() * dq.clone();
                            for (u, v) in acc.iter_mut().zip(table.at(p, q)) {
                                *u += &w * v;
                            }
                        }
                    }
                    return Ok(acc);
                }
                let xa = self
                    .express_in_generators(x)?
                    .ok_or_else(|| Error::ElementNotInModule("first argument".into()))?;
                let ya = self
                    .express_in_generators(y)?
                    .ok_or_else(|| Error::ElementNotInModule("second argument".into()))?;
                Ok(self.explicit_pair_value(g, &xa, &ya))
            }
        }
    }

    /// `sum_ij conj(x_i)* g_ij y_j` for generator-coordinate vectors.
    fn explicit_pair_value(&self, g: &AMat, xa: &[AElt], ya: &[AElt]) -> AElt {
        let mut acc = self.alg.zero();
        for (i, a) in xa.iter().enumerate() {
            for (j, b) in ya.iter().enumerate() {
                let t = self.alg.mul(&self.alg.mul(&self.alg.star(a), g.at(i, j)), b);
                for (u, v) in acc.iter_mut().zip(t) {
                    *u += v;
                }
            }
        }
        acc
    }

    /// Gram table on the reduced span basis, derived from the explicit
    /// generator table once and reused for every evaluation. `None` when
    /// the orbit system cannot be solved (the caller then falls back to
    /// per-argument expression, surfacing the underlying error).
    fn span_gram_table(&self, g: &AMat) -> Option<&AMat> {
        self.span_gram
            .get_or_init(|| {
                let s = self.span.dim();
                let mut exprs = Vec::with_capacity(s);
                for p in 0..s {
                    match self.express_in_generators(&self.span_basis_elt(p)) {
                        Ok(Some(c)) => exprs.push(c),
                        _ => return None,
                    }
                }
                let mut t = AMat::zero(self.alg.clone(), s, s);
                for p in 0..s {
                    for q in 0..s {
                        t.set(p, q, self.explicit_pair_value(g, &exprs[p], &exprs[q]));
                    }
                }
                Some(t)
            })
            .as_ref()
    }

    /// Explicit tables must vanish on the relation space of the generators,
    /// otherwise the "inner product" is not a function on the module.
    fn check_explicit_well_defined(&self, g: &AMat) -> Result<()> {
        let cols = self.generator_orbit_matrix();
        let kernel = cols.kernel()?;
        let d = self.alg.dim();
        let k = self.generators.len();
        for rel in kernel {
            let coeffs: Vec<AElt> =
                (0..k).map(|i| rel[i * d..(i + 1) * d].to_vec()).collect();
            for j in 0..k {
                let mut acc = self.alg.zero();
                for (i, a) in coeffs.iter().enumerate() {
                    let t = self.alg.mul(g.at(j, i), a);
                    for (u, v) in acc.iter_mut().zip(t) {
                        *u += v;
                    }
                }
                if !acc.iter().all(Scalar::is_zero) {
                    return Err(Error::InvalidInnerProduct(
                        "gram table does not vanish on a generator relation".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    // ---------------------------------------------------------------
    // Gram matrices and complete positivity
    // ---------------------------------------------------------------

    /// The matrix `[<x_i, x_j>]` over the algebra.
    pub fn gram(&self, xs: &[MElt]) -> Result<AMat> {
        for x in xs {
            if !self.contains(x) {
                return Err(Error::ElementNotInModule(
                    "gram argument outside the module".into(),
                ));
            }
        }
        let k = xs.len();
        let mut g = AMat::zero(self.alg.clone(), k, k);
        for i in 0..k {
            for j in 0..k {
                g.set(i, j, self.inner(&xs[i], &xs[j])?);
            }
        }
        Ok(g)
    }

    /// Decide complete positivity of the inner product by deciding
    /// positivity of the Gram matrix of a generating family: every other
    /// finite Gram is a compression of it, so one verdict settles all
    /// sizes. Structural certificates are used where the inner product
    /// itself is a visible sum of squares.
    pub fn completely_positive(
        &self,
        gens: &[MElt],
    ) -> Result<Verdict<SquaresCert, Obstruction>> {
        let gen_span = a_span(&self.alg, self.ambient, gens)?;
        if !gen_span.same_as(&self.span) {
            return Err(Error::NotGenerating(
                "supplied family does not generate the module".into(),
            ));
        }
        self.gram_positivity(gens)
    }

    /// Positivity of the Gram of an arbitrary family (structural
    /// certificate when available, otherwise the general engine).
    pub fn gram_positivity(&self, xs: &[MElt]) -> Result<Verdict<SquaresCert, Obstruction>> {
        let g = self.gram(xs)?;
        if let Some(cert) = self.structural_certificate(xs, &g)? {
            return Ok(Verdict::Holds(cert));
        }
        amat_positive(&g)
    }

    /// For the canonical product the Gram of any family is literally
    /// `X^* X`; for a twist by a positive `H = sum_k d_k c_k^* c_k` it is
    /// `sum_k d_k (c_k X)^* (c_k X)`.
    fn structural_certificate(
        &self,
        xs: &[MElt],
        g: &AMat,
    ) -> Result<Option<SquaresCert>> {
        let q = xs.len();
        let one = Scalar::one(self.alg.ring());
        let cert = match &self.inner {
            InnerKind::Canonical => {
                let terms = (0..self.ambient)
                    .map(|r| {
                        let row: Vec<AElt> = (0..q).map(|j| xs[j][r].clone()).collect();
                        (one.clone(), row)
                    })
                    .filter(|(_, row)| !row.iter().all(|e| e.iter().all(Scalar::is_zero)))
                    .collect();
                Some(SquaresCert { terms })
            }
            InnerKind::Twisted(h) => match amat_positive(h)? {
                Verdict::Holds(hcert) => {
                    let mut terms = Vec::new();
                    for (d, c) in &hcert.terms {
                        let row: Vec<AElt> = (0..q)
                            .map(|j| {
                                let mut acc = self.alg.zero();
                                for (r, cr) in c.iter().enumerate() {
                                    let t = self.alg.mul(cr, &xs[j][r]);
                                    for (u, v) in acc.iter_mut().zip(t) {
                                        *u += v;
                                    }
                                }
                                acc
                            })
                            .collect();
                        terms.push((d.clone(), row));
                    }
                    Some(SquaresCert { terms })
                }
                _ => None,
            },
            InnerKind::Explicit(_) => None,
        };
        Ok(cert.filter(|c| verify_squares_cert(g, c)))
    }

    // ---------------------------------------------------------------
    // Degeneracy
    // ---------------------------------------------------------------

    /// The space of `x` with `<., x> = 0`, as a subspace of the flattened
    /// ambient together with a module presentation of it.
    pub fn degeneracy_space(&self) -> Result<(Subspace, InnerProductModule)> {
        let s = self.span_dim();
        let d = self.alg.dim();
        let k = self.generators.len();
        // Rows: all coordinates of <g_i, v_b> for each span basis vector.
        let mut m = Mat::zero(self.alg.ring(), k * d, s);
        for b in 0..s {
            let v = self.span_basis_elt(b);
            for (i, gi) in self.generators.iter().enumerate() {
                let p = self.inner(gi, &v)?;
                for (c, val) in p.iter().enumerate() {
                    m.set(i * d + c, b, val.clone());
                }
            }
        }
        let kernel = m.kernel()?;
        let mut vectors = Vec::new();
        for coeffs in kernel {
            let ambient = self.span.from_coordinates(&coeffs);
            vectors.push(ambient);
        }
        let sub = Subspace::from_spanning(self.alg.ring(), self.ambient * d, &vectors)?;
        let gens: Vec<MElt> = sub
            .basis_rows()
            .iter()
            .map(|v| unflatten_elt(&self.alg, self.ambient, v))
            .collect();
        let inner = match &self.inner {
            InnerKind::Explicit(_) => {
                let z = AMat::zero(self.alg.clone(), gens.len(), gens.len());
                InnerKind::Explicit(z)
            }
            other => other.clone(),
        };
        let module =
            InnerProductModule::new(self.alg.clone(), self.ambient, gens, Presentation::Generated, inner)?;
        Ok((sub, module))
    }

    /// Bounded search for a non-degenerate vector of vanishing length:
    /// generator multiples by basis monomials up to the given degree, plus
    /// simple two-term combinations.
    pub fn norm_zero_set_witness(&self, degree: usize) -> Result<Option<MElt>> {
        let (deg_space, _) = self.degeneracy_space()?;
        let d = self.alg.dim();
        let mut monomials: Vec<AElt> = vec![self.alg.unit()];
        if degree >= 1 {
            for a in 0..d {
                monomials.push(self.alg.basis_elt(a));
            }
        }
        if degree >= 2 {
            for a in 0..d {
                for b in 0..d {
                    let m = self.alg.mul(&self.alg.basis_elt(a), &self.alg.basis_elt(b));
                    if !m.iter().all(Scalar::is_zero) {
                        monomials.push(m);
                    }
                }
            }
        }
        let mut candidates: Vec<MElt> = Vec::new();
        for g in &self.generators {
            for m in &monomials {
                candidates.push(elt_scale(&self.alg, g, m));
            }
        }
        let singles = candidates.clone();
        let i_unit = Scalar::i(self.alg.ring());
        for (a, x) in singles.iter().enumerate() {
            for y in singles.iter().skip(a + 1) {
                candidates.push(elt_add(x, y));
                let iy: MElt = y
                    .iter()
                    .map(|c| c.iter().map(|s| s * &i_unit).collect())
                    .collect();
                candidates.push(elt_add(x, &iy));
            }
        }
        for x in candidates {
            if elt_is_zero(&x) || deg_space.contains(&flatten_elt(&x)) {
                continue;
            }
            if self.inner(&x, &x)?.iter().all(Scalar::is_zero) {
                return Ok(Some(x));
            }
        }
        Ok(None)
    }

    /// Quotient by the degeneracy space, realized through the Gram map
    /// `x -> (<g_i, x>)_i` into `A^k`: its kernel is exactly the degeneracy
    /// space, so the image with the inherited table is the non-degenerate
    /// quotient.
    pub fn quotient_by_degeneracy(&self) -> Result<InnerProductModule> {
        let (deg, _) = self.degeneracy_space()?;
        if deg.dim() == 0 {
            return Ok(self.clone());
        }
        let g = self.gram(&self.generators)?;
        let k = self.generators.len();
        let gens: Vec<MElt> = (0..k)
            .map(|j| (0..k).map(|i| g.at(i, j).clone()).collect())
            .collect();
        InnerProductModule::new(
            self.alg.clone(),
            k,
            gens,
            Presentation::Generated,
            InnerKind::Explicit(g),
        )
    }

    // ---------------------------------------------------------------
    // Strong non-degeneracy and comparison of inner products
    // ---------------------------------------------------------------

    /// `x -> <x, .>` must be a bijection onto the A-linear functionals of
    /// the module (values on generators constrained by their relations).
    pub fn strongly_nondegenerate(&self) -> Result<bool> {
        let s = self.span_dim();
        let d = self.alg.dim();
        let k = self.generators.len();
        // Image of the (conjugated) pairing map inside C^{k d}.
        let mut img_vectors = Vec::new();
        for b in 0..s {
            let v = self.span_basis_elt(b);
            let mut w = Vec::with_capacity(k * d);
            for gi in &self.generators {
                w.extend(self.inner(&v, gi)?);
            }
            img_vectors.push(w);
        }
        let image = Subspace::from_spanning(self.alg.ring(), k * d, &img_vectors)?;
        if image.dim() < s {
            return Ok(false);
        }
        // The functional space: tuples (f_i) in A^k with sum f_i a_i = 0
        // for every generator relation (a_i).
        let rels = self.generator_orbit_matrix().kernel()?;
        let mut constraints = Mat::zero(self.alg.ring(), rels.len() * d, k * d);
        for (r, rel) in rels.iter().enumerate() {
            for i in 0..k {
                let a: AElt = rel[i * d..(i + 1) * d].to_vec();
                // f_i a_i contributes right-multiplication by a_i.
                let rm = self.alg.right_mult_matrix(&a);
                for out in 0..d {
                    for inp in 0..d {
                        let cur = constraints.at(r * d + out, i * d + inp).clone();
                        constraints.set(r * d + out, i * d + inp, cur + rm.at(out, inp).clone());
                    }
                }
            }
        }
        let functionals =
            Subspace::from_spanning(self.alg.ring(), k * d, &constraints.kernel()?)?;
        Ok(image.same_as(&functionals))
    }

    /// The unique operator `H` with `second(x, y) = <x, H y>` for all
    /// members, hermitian for the first product. The first product must be
    /// strongly non-degenerate.
    pub fn unique_inner_product_h(
        &self,
        second: &InnerProductModule,
    ) -> Result<ModuleOperator> {
        if !self.strongly_nondegenerate()? {
            return Err(Error::NotStronglyNondegenerate(
                "pairing map is not bijective onto the functionals".into(),
            ));
        }
        let s = self.span_dim();
        let d = self.alg.dim();
        let ring = self.alg.ring();
        // Unknown: H as an s x s matrix in span coordinates, column-major.
        let unknowns = s * s;
        let acts = self.span_actions()?;
        let mut rows: Vec<Vec<Scalar>> = Vec::new();
        let mut rhs: Vec<Scalar> = Vec::new();
        // A-linearity: H R_a - R_a H = 0 for every basis action.
        for ra in &acts {
            for i in 0..s {
                for j in 0..s {
                    let mut row = vec![Scalar::zero(ring); unknowns];
                    // (H R)_{ij} = sum_t H_{it} R_{tj}; (R H)_{ij} = sum_t R_{it} H_{tj}
                    for t in 0..s {
                        let idx = t * s + i; // H_{it}, column-major (col t, row i)
                        row[idx] = row[idx].clone() + ra.at(t, j).clone();
                        let idx2 = j * s + t; // H_{tj}
                        row[idx2] = row[idx2].clone() - ra.at(i, t).clone();
                    }
                    rows.push(row);
                    rhs.push(Scalar::zero(ring));
                }
            }
        }
        // Pairing: <g_i, H v_b> = second(g_i, v_b), coordinatewise in A.
        // <g_i, v_t> are precomputed for all span basis vectors.
        let mut pair: Vec<Vec<AElt>> = Vec::new(); // pair[i][t] = <g_i, v_t>
        for gi in &self.generators {
            let mut per = Vec::new();
            for t in 0..s {
                per.push(self.inner(gi, &self.span_basis_elt(t))?);
            }
            pair.push(per);
        }
        for (i, gi) in self.generators.iter().enumerate() {
            for b in 0..s {
                let target = second.inner(gi, &self.span_basis_elt(b))?;
                for c in 0..d {
                    let mut row = vec![Scalar::zero(ring); unknowns];
                    for t in 0..s {
                        let idx = b * s + t; // coefficient (H v_b)_t = H_{tb}
                        row[idx] = row[idx].clone() + pair[i][t][c].clone();
                    }
                    rows.push(row);
                    rhs.push(target[c].clone());
                }
            }
        }
        let sys = Mat::from_rows(ring, rows);
        let sol = sys
            .solve(&Mat::column(ring, rhs))?
            .ok_or_else(|| Error::NotAdjointable("no operator realizes the second product".into()))?;
        let h = Mat::from_fn(ring, s, s, |r, c| sol.at(c * s + r, 0).clone());
        // Hermitian with respect to the first product: <H x, y> = <x, H y>.
        let op = ModuleOperator::new(self, h.clone(), Some(h))?;
        for x in 0..s {
            let vx = self.span_basis_elt(x);
            for y in 0..s {
                let vy = self.span_basis_elt(y);
                let lhs = self.inner(&op.apply(self, &vx)?, &vy)?;
                let rhs2 = self.inner(&vx, &op.apply(self, &vy)?)?;
                if lhs != rhs2 {
                    return Err(Error::NotHermitian(
                        "comparison operator is not hermitian for the first product".into(),
                    ));
                }
            }
        }
        Ok(op)
    }

    /// Right action of each algebra basis element in span coordinates.
    pub fn span_actions(&self) -> Result<Vec<Mat>> {
        let s = self.span_dim();
        let d = self.alg.dim();
        let ring = self.alg.ring();
        let mut acts = Vec::with_capacity(d);
        for a in 0..d {
            let ea = self.alg.basis_elt(a);
            let mut m = Mat::zero(ring, s, s);
            for b in 0..s {
                let moved = elt_scale(&self.alg, &self.span_basis_elt(b), &ea);
                let coords = self
                    .span
                    .coordinates(&flatten_elt(&moved))
                    .ok_or_else(|| Error::ElementNotInModule("span is not action-invariant".into()))?;
                for (r, v) in coords.into_iter().enumerate() {
                    m.set(r, b, v);
                }
            }
            acts.push(m);
        }
        Ok(acts)
    }

    pub fn to_span_coords(&self, x: &[AElt]) -> Result<Vec<Scalar>> {
        self.span
            .coordinates(&flatten_elt(x))
            .ok_or_else(|| Error::ElementNotInModule("not in the span".into()))
    }

    pub fn from_span_coords(&self, coords: &[Scalar]) -> MElt {
        unflatten_elt(&self.alg, self.ambient, &self.span.from_coordinates(coords))
    }

    // ---------------------------------------------------------------
    // Finite-rank operators
    // ---------------------------------------------------------------

    /// `theta_{x,y}(z) = x . <y, z>`, with adjoint `theta_{y,x}`.
    pub fn finite_rank_operator(&self, x: &[AElt], y: &[AElt]) -> Result<ModuleOperator> {
        let s = self.span_dim();
        let ring = self.alg.ring();
        let build = |u: &[AElt], w: &[AElt]| -> Result<Mat> {
            let mut m = Mat::zero(ring, s, s);
            for b in 0..s {
                let z = self.span_basis_elt(b);
                let val = elt_scale(&self.alg, u, &self.inner(w, &z)?);
                let coords = self.to_span_coords(&val)?;
                for (r, v) in coords.into_iter().enumerate() {
                    m.set(r, b, v);
                }
            }
            Ok(m)
        };
        let mat = build(x, y)?;
        let adj = build(y, x)?;
        ModuleOperator::new(self, mat, Some(adj))
    }

    /// The *-algebra spanned by all `theta_{g_i e_a, g_j e_b}` in span
    /// coordinates, together with its operator basis. The module must be
    /// non-degenerate so adjoints are determined.
    pub fn finite_rank_algebra(&self, name: &str) -> Result<FiniteRankAlgebra> {
        let (deg, _) = self.degeneracy_space()?;
        if deg.dim() != 0 {
            return Err(Error::DegenerateModule(
                "finite-rank operators need a non-degenerate pairing".into(),
            ));
        }
        let s = self.span_dim();
        let d = self.alg.dim();
        let ring = self.alg.ring();
        let mut thetas: Vec<Mat> = Vec::new();
        for gi in &self.generators {
            for a in 0..d {
                let x = elt_scale(&self.alg, gi, &self.alg.basis_elt(a));
                for gj in &self.generators {
                    for b in 0..d {
                        let y = elt_scale(&self.alg, gj, &self.alg.basis_elt(b));
                        thetas.push(self.finite_rank_operator(&x, &y)?.matrix().clone());
                    }
                }
            }
        }
        let vecs: Vec<Vec<Scalar>> = thetas.iter().map(vectorize).collect();
        let space = Subspace::from_spanning(ring, s * s, &vecs)?;
        let f = space.dim();
        let ops: Vec<Mat> = space
            .basis_rows()
            .iter()
            .map(|v| unvectorize(ring, s, v))
            .collect();
        // Identity must be representable for a unital *-algebra.
        let id = vectorize(&Mat::identity(ring, s));
        let unit = space
            .coordinates(&id)
            .ok_or_else(|| Error::InvalidAlgebra("finite-rank algebra is not unital".into()))?;
        // Structure constants from operator products.
        let mut table = vec![vec![vec![Scalar::zero(ring); f]; f]; f];
        for (i, ti) in ops.iter().enumerate() {
            for (j, tj) in ops.iter().enumerate() {
                let prod = vectorize(&(ti * tj));
                let coords = space.coordinates(&prod).ok_or_else(|| {
                    Error::InvalidAlgebra("operator span is not multiplicatively closed".into())
                })?;
                table[i][j] = coords;
            }
        }
        // Involution: adjoint of each basis operator, solved against the
        // pairing on span basis vectors.
        let mut invol = Mat::zero(ring, f, f);
        for (c, t) in ops.iter().enumerate() {
            let adj = self.solve_adjoint(t)?;
            let coords = space.coordinates(&vectorize(&adj)).ok_or_else(|| {
                Error::InvalidAlgebra("operator span is not closed under adjoints".into())
            })?;
            for (r, v) in coords.into_iter().enumerate() {
                invol.set(r, c, v);
            }
        }
        let names: Vec<String> = (0..f).map(|i| format!("T{i}")).collect();
        let algebra = crate::algebra::StarAlgebra::new_explicit(
            name,
            ring,
            table,
            unit,
            invol,
            names,
            crate::algebra::AlgebraKind::Custom,
        )?;
        Ok(FiniteRankAlgebra { algebra, ops })
    }

    /// Solve `<T* u, w> = <u, T w>` for `T*` on span coordinates.
    pub fn solve_adjoint(&self, t: &Mat) -> Result<Mat> {
        let s = self.span_dim();
        let d = self.alg.dim();
        let ring = self.alg.ring();
        // pair[a][b] = <v_a, v_b>
        let mut pair = vec![vec![self.alg.zero(); s]; s];
        for a in 0..s {
            for b in 0..s {
                pair[a][b] = self.inner(&self.span_basis_elt(a), &self.span_basis_elt(b))?;
            }
        }
        // Unknown T* (s x s, column-major). Equations over all (a, b):
        // sum_t conj(T*_{ta}) pair[t][b] = sum_t pair[a][t] T_{tb}
        // The left side is conjugate-linear in T*; substitute S = conj(T*).
        let unknowns = s * s;
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for a in 0..s {
            for b in 0..s {
                // rhs value: sum_t pair[a][t] * T_{tb}
                let mut target = self.alg.zero();
                for tt in 0..s {
                    let coeff = t.at(tt, b);
                    if coeff.is_zero() {
                        continue;
                    }
                    for (u, p) in target.iter_mut().zip(&pair[a][tt]) {
                        *u += p * coeff;
                    }
                }
                for c in 0..d {
                    let mut row = vec![Scalar::zero(ring); unknowns];
                    for tt in 0..s {
                        // S_{ta} multiplies pair[t][b] (S = conj(T*)).
                        let idx = a * s + tt;
                        row[idx] = row[idx].clone() + pair[tt][b][c].clone();
                    }
                    rows.push(row);
                    rhs.push(target[c].clone());
                }
            }
        }
        let sys = Mat::from_rows(ring, rows);
        let sol = sys
            .solve(&Mat::column(ring, rhs))?
            .ok_or_else(|| Error::NotAdjointable("no adjoint exists".into()))?;
        let s_mat = Mat::from_fn(ring, s, s, |r, c| sol.at(c * s + r, 0).clone());
        Ok(s_mat.conj_entries())
    }
}

fn vectorize(m: &Mat) -> Vec<Scalar> {
    let mut v = Vec::with_capacity(m.rows() * m.cols());
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            v.push(m.at(r, c).clone());
        }
    }
    v
}

fn unvectorize(ring: crate::scalar::BaseRing, n: usize, v: &[Scalar]) -> Mat {
    Mat::from_fn(ring, n, n, |r, c| v[r * n + c].clone())
}

/// A C-linear operator on the module, in span coordinates.
#[derive(Clone, Debug)]
pub struct ModuleOperator {
    mat: Mat,
    adjoint: Option<Mat>,
}

impl ModuleOperator {
    /// Validates A-linearity and, when an adjoint is supplied, the adjoint
    /// identity `<x, T y> = <T* x, y>` on span basis pairs.
    pub fn new(module: &InnerProductModule, mat: Mat, adjoint: Option<Mat>) -> Result<Self> {
        let s = module.span_dim();
        if mat.rows() != s || mat.cols() != s {
            return Err(Error::DimensionMismatch("operator must act on span coordinates".into()));
        }
        for ra in module.span_actions()? {
            if &(&mat * &ra) != &(&ra * &mat) {
                return Err(Error::IncompatibleAction(
                    "operator does not commute with the right action".into(),
                ));
            }
        }
        if let Some(adj) = &adjoint {
            for a in 0..s {
                let va = module.span_basis_elt(a);
                let ta = module.from_span_coords(&adj.mul_vec(&module.to_span_coords(&va)?));
                for b in 0..s {
                    let vb = module.span_basis_elt(b);
                    let tb = module.from_span_coords(&mat.mul_vec(&module.to_span_coords(&vb)?));
                    if module.inner(&va, &tb)? != module.inner(&ta, &vb)? {
                        return Err(Error::NotAdjointable(
                            "claimed adjoint fails the pairing identity".into(),
                        ));
                    }
                }
            }
        }
        Ok(ModuleOperator { mat, adjoint })
    }

    pub fn matrix(&self) -> &Mat {
        &self.mat
    }

    pub fn adjoint_matrix(&self) -> Option<&Mat> {
        self.adjoint.as_ref()
    }

    pub fn apply(&self, module: &InnerProductModule, x: &[AElt]) -> Result<MElt> {
        let coords = module.to_span_coords(x)?;
        Ok(module.from_span_coords(&self.mat.mul_vec(&coords)))
    }

    pub fn compose(&self, other: &ModuleOperator) -> ModuleOperator {
        let adjoint = match (&self.adjoint, &other.adjoint) {
            (Some(a), Some(b)) => Some(b * a),
            _ => None,
        };
        ModuleOperator { mat: &self.mat * &other.mat, adjoint }
    }
}

/// The finite-rank operator algebra of a module with its operator basis.
pub struct FiniteRankAlgebra {
    pub algebra: crate::algebra::StarAlgebra,
    pub ops: Vec<Mat>,
}

/// The A-span of a family inside `A^n`, flattened: it is spanned over the
/// scalars by the right translates `g . e_a`.
pub fn a_span(alg: &AlgebraRef, ambient: usize, gens: &[MElt]) -> Result<Subspace> {
    let d = alg.dim();
    let mut vectors = Vec::with_capacity(gens.len() * d);
    for g in gens {
        for a in 0..d {
            vectors.push(flatten_elt(&elt_scale(alg, g, &alg.basis_elt(a))));
        }
    }
    Subspace::from_spanning(alg.ring(), ambient * d, &vectors)
}

/// A left action of a second *-algebra by adjointable operators, making the
/// module a bimodule.
#[derive(Clone)]
pub struct Bimodule {
    pub module: InnerProductModule,
    pub left: AlgebraRef,
    left_action: Vec<Mat>,
    pub left_nondegenerate: bool,
}

impl Bimodule {
    /// Validates: unit acts as the identity, the action is multiplicative
    /// and commutes with the right action, and each generator acts
    /// adjointably with `<b.x, y> = <x, b*.y>`. When `require_nondegenerate`
    /// is set, also checks `B . E = E`.
    pub fn new(
        module: InnerProductModule,
        left: AlgebraRef,
        left_action: Vec<Mat>,
        require_nondegenerate: bool,
    ) -> Result<Self> {
        let s = module.span_dim();
        if left_action.len() != left.dim() {
            return Err(Error::DimensionMismatch(
                "left action needs one matrix per basis element".into(),
            ));
        }
        for m in &left_action {
            if m.rows() != s || m.cols() != s {
                return Err(Error::DimensionMismatch(
                    "left action matrices must act on span coordinates".into(),
                ));
            }
        }
        let apply = |b: &AElt| -> Mat {
            let ring = module.algebra().ring();
            let mut acc = Mat::zero(ring, s, s);
            for (c, m) in b.iter().zip(&left_action) {
                if c.is_zero() {
                    continue;
                }
                acc = &acc + &m.scale(c);
            }
            acc
        };
        // Unit law.
        if apply(&left.unit()) != Mat::identity(module.algebra().ring(), s) {
            return Err(Error::UnitNotPreserved("left unit does not act as identity".into()));
        }
        // Multiplicativity on basis pairs.
        for i in 0..left.dim() {
            for j in 0..left.dim() {
                let prod = apply(&left.mul(&left.basis_elt(i), &left.basis_elt(j)));
                if prod != &left_action[i] * &left_action[j] {
                    return Err(Error::InvalidRepresentation(
                        "left action is not multiplicative".into(),
                    ));
                }
            }
        }
        // Commutation with the right action.
        for ra in module.span_actions()? {
            for la in &left_action {
                if &(la * &ra) != &(&ra * la) {
                    return Err(Error::IncompatibleAction(
                        "left and right actions do not commute".into(),
                    ));
                }
            }
        }
        // Adjointability: <b.x, y> = <x, b*.y> on span basis pairs.
        for i in 0..left.dim() {
            let b = left.basis_elt(i);
            let bstar = left.star(&b);
            let lb = apply(&b);
            let lbs = apply(&bstar);
            for x in 0..s {
                let vx = module.span_basis_elt(x);
                let bx = module.from_span_coords(&lb.mul_vec(&module.to_span_coords(&vx)?));
                for y in 0..s {
                    let vy = module.span_basis_elt(y);
                    let bsy =
                        module.from_span_coords(&lbs.mul_vec(&module.to_span_coords(&vy)?));
                    if module.inner(&bx, &vy)? != module.inner(&vx, &bsy)? {
                        return Err(Error::IncompatibleAction(
                            "left action is not adjointable for the pairing".into(),
                        ));
                    }
                }
            }
        }
        // Strong non-degeneracy: B.E spans E.
        let mut left_nondegenerate = true;
        {
            let ring = module.algebra().ring();
            let mut translates = Vec::new();
            for la in &left_action {
                for b in 0..s {
                    let mut e = vec![Scalar::zero(ring); s];
                    e[b] = Scalar::one(ring);
                    translates.push(la.mul_vec(&e));
                }
            }
            let spanned = Subspace::from_spanning(ring, s, &translates)?;
            if spanned.dim() != s {
                left_nondegenerate = false;
            }
        }
        if require_nondegenerate && !left_nondegenerate {
            return Err(Error::IncompatibleAction(
                "left action is degenerate: B.E is a proper subspace".into(),
            ));
        }
        Ok(Bimodule { module, left, left_action, left_nondegenerate })
    }

    /// Assembles a bimodule whose laws the caller has already established;
    /// used where an axiom battery has just verified every check that
    /// [`Bimodule::new`] would repeat.
    pub(crate) fn from_validated_parts(
        module: InnerProductModule,
        left: AlgebraRef,
        left_action: Vec<Mat>,
        left_nondegenerate: bool,
    ) -> Self {
        Bimodule { module, left, left_action, left_nondegenerate }
    }

    /// One matrix per basis element of the left algebra, in span
    /// coordinates.
    pub fn left_actions(&self) -> &[Mat] {
        &self.left_action
    }

    pub fn left_action_of(&self, b: &AElt) -> Mat {
        let s = self.module.span_dim();
        let ring = self.module.algebra().ring();
        let mut acc = Mat::zero(ring, s, s);
        for (c, m) in b.iter().zip(&self.left_action) {
            if c.is_zero() {
                continue;
            }
            acc = &acc + &m.scale(c);
        }
        acc
    }

    pub fn left_apply(&self, b: &AElt, x: &[AElt]) -> Result<MElt> {
        let coords = self.module.to_span_coords(x)?;
        Ok(self.module.from_span_coords(&self.left_action_of(b).mul_vec(&coords)))
    }
}
