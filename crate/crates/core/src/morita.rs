//! Equivalence bimodules and the strong Morita groupoid.
//!
//! An equivalence bimodule carries two inner products, an algebra-valued
//! one on each side, linked by `_B<x,y> . z = x . <y,z>_A`. Verification
//! produces a per-axiom record; the classification lattice is
//! `NotEquivalence < Unknown < Star < Strong`, where `Strong` additionally
//! requires both products to be completely positive with certificates.
//! Conjugation and tensor composition realize the groupoid structure, and
//! two-sided inverses are witnessed by explicit isomorphisms rather than
//! abstract existence arguments.

use crate::algebra::{AlgebraKind, AlgebraRef, StarAlgebra};
use crate::amat::{AElt, AMat};
use crate::error::{Error, Result};
use crate::gaussian::gaussian_norm_representable;
use crate::linalg::{Mat, Subspace};
use crate::module::{
    flatten_elt, Bimodule, InnerKind, InnerProductModule, MElt, Presentation,
};
use crate::positivity::{amat_positive, Obstruction, SquaresCert};
use crate::scalar::{BaseRing, Scalar};
use crate::tensor::{internal_tensor_bimodule, InternalTensor};
use crate::verdict::Verdict;
use num::{Signed, Zero};
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EquivClass {
    NotEquivalence,
    Unknown,
    Star,
    Strong,
}

impl fmt::Display for EquivClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EquivClass::NotEquivalence => "not-equivalence",
            EquivClass::Unknown => "unknown",
            EquivClass::Star => "star",
            EquivClass::Strong => "strong",
        };
        write!(f, "{s}")
    }
}

type Check = Verdict<(), String>;

/// Per-axiom verification record. The structural axioms are decided
/// exactly; the two CP verdicts may be `Unknown` when the positivity
/// engine cannot settle them, which caps the class at `Star`.
pub struct AxiomRecord {
    pub left_action_valid: Check,
    pub compatibility: Check,
    pub left_table_sesquilinear: Check,
    pub right_nondegenerate: Check,
    pub left_nondegenerate: Check,
    pub right_full: Check,
    pub left_full: Check,
    pub linking: Check,
    pub left_unit_spans: Check,
    pub right_unit_spans: Check,
    pub right_cp: Verdict<SquaresCert, Obstruction>,
    pub left_cp: Verdict<SquaresCert, Obstruction>,
}

impl AxiomRecord {
    pub fn structural(&self) -> Vec<(&'static str, &Check)> {
        vec![
            ("left-action", &self.left_action_valid),
            ("compatibility", &self.compatibility),
            ("left-table-sesquilinear", &self.left_table_sesquilinear),
            ("right-nondegenerate", &self.right_nondegenerate),
            ("left-nondegenerate", &self.left_nondegenerate),
            ("right-full", &self.right_full),
            ("left-full", &self.left_full),
            ("linking", &self.linking),
            ("left-unit-spans", &self.left_unit_spans),
            ("right-unit-spans", &self.right_unit_spans),
        ]
    }

    /// First structural failure, if any, with its witness message.
    pub fn first_failure(&self) -> Option<(&'static str, String)> {
        for (name, v) in self.structural() {
            if let Verdict::Fails(w) = v {
                return Some((name, w.clone()));
            }
        }
        None
    }

    pub fn classify(&self) -> EquivClass {
        let mut unknown = false;
        for (_, v) in self.structural() {
            match v {
                Verdict::Fails(_) => return EquivClass::NotEquivalence,
                Verdict::Unknown(_) => unknown = true,
                Verdict::Holds(_) => {}
            }
        }
        if unknown {
            return EquivClass::Unknown;
        }
        if self.right_cp.is_holds() && self.left_cp.is_holds() {
            EquivClass::Strong
        } else {
            EquivClass::Star
        }
    }
}

pub struct EquivalenceBimodule {
    pub module: InnerProductModule,
    pub left: AlgebraRef,
    pub left_action: Vec<Mat>,
    /// B-valued pairing on span basis pairs, linear in the first slot and
    /// conjugate-linear in the second.
    pub left_table: Vec<Vec<AElt>>,
    pub axioms: AxiomRecord,
    pub class: EquivClass,
    bimodule: Option<Bimodule>,
}

impl EquivalenceBimodule {
    /// One-product view for tensoring; present when the left action
    /// passed validation.
    pub fn bimodule(&self) -> Result<&Bimodule> {
        self.bimodule.as_ref().ok_or_else(|| {
            Error::PreconditionViolated("left action failed validation; no bimodule view".into())
        })
    }

    /// B-valued product of two arbitrary module elements.
    pub fn left_product(&self, x: &[AElt], y: &[AElt]) -> Result<AElt> {
        let cx = self.module.to_span_coords(x)?;
        let cy = self.module.to_span_coords(y)?;
        Ok(self.left_product_coords(&cx, &cy))
    }

    fn left_product_coords(&self, cx: &[Scalar], cy: &[Scalar]) -> AElt {
        let mut acc = self.left.zero();
        for (p, a) in cx.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (q, b) in cy.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let c = a * &b.conj();
                for (u, v) in acc.iter_mut().zip(&self.left_table[p][q]) {
                    *u += v * &c;
                }
            }
        }
        acc
    }

    /// Gram matrix of a family under the left product.
    pub fn gram_left(&self, xs: &[MElt]) -> Result<AMat> {
        let mut g = AMat::zero(self.left.clone(), xs.len(), xs.len());
        for i in 0..xs.len() {
            for j in 0..xs.len() {
                g.set(i, j, self.left_product(&xs[i], &xs[j])?);
            }
        }
        Ok(g)
    }
}

fn ok() -> Check {
    Verdict::Holds(())
}

fn combine_mats(mats: &[Mat], coeffs: &[Scalar], ring: crate::scalar::BaseRing, s: usize) -> Mat {
    let mut out = Mat::zero(ring, s, s);
    for (m, c) in mats.iter().zip(coeffs) {
        if !c.is_zero() {
            out = &out + &m.scale(c);
        }
    }
    out
}

fn elt_right(alg: &AlgebraRef, x: &[AElt], a: &AElt) -> MElt {
    x.iter().map(|c| alg.mul(c, a)).collect()
}

/// Full per-axiom verification of a two-product bimodule. Never errors:
/// every problem is recorded as a verdict and reflected in the class.
pub fn verify_equivalence(
    module: &InnerProductModule,
    left: &AlgebraRef,
    left_action: &[Mat],
    left_table: &[Vec<AElt>],
) -> EquivalenceBimodule {
    let ring = module.algebra().ring();
    let a = module.algebra().clone();
    let s = module.span_dim();
    let db = left.dim();
    let da = a.dim();
    let span_acts = module.span_actions();

    let mut left_action_valid = ok();
    if left_action.len() != db || left_action.iter().any(|m| m.rows() != s || m.cols() != s) {
        left_action_valid = Verdict::Fails("left action has wrong dimensions".into());
    } else {
        let unit_mat = combine_mats(left_action, &left.unit(), ring, s);
        if unit_mat != Mat::identity(ring, s) {
            left_action_valid = Verdict::Fails("unit of B does not act as the identity".into());
        }
        'mult: for i in 0..db {
            for j in 0..db {
                let prod = left.mul(&left.basis_elt(i), &left.basis_elt(j));
                let lhs = &left_action[i] * &left_action[j];
                if lhs != combine_mats(left_action, &prod, ring, s) {
                    left_action_valid =
                        Verdict::Fails(format!("action not multiplicative at basis pair ({i},{j})"));
                    break 'mult;
                }
            }
        }
        if left_action_valid.is_holds() {
            match &span_acts {
                Ok(ra) => {
                    'comm: for la in left_action {
                        for r in ra {
                            if &(la * r) != &(r * la) {
                                left_action_valid = Verdict::Fails(
                                    "left action does not commute with the right action".into(),
                                );
                                break 'comm;
                            }
                        }
                    }
                }
                Err(e) => left_action_valid = Verdict::Unknown(format!("{e}")),
            }
        }
    }

    let table_shaped = left_table.len() == s
        && left_table.iter().all(|r| r.len() == s && r.iter().all(|e| e.len() == db));

    // Adjointability of the left action against the right product, and
    // compatibility of the left product with the right action. These loops,
    // the fullness check, and the linking law below only ever pair span
    // basis elements, so the A-valued Gram table of the span basis is
    // computed once and shared.
    let basis: Vec<MElt> = (0..s).map(|p| module.span_basis_elt(p)).collect();
    let mut gram_err = String::new();
    let gram: Option<Vec<Vec<AElt>>> = {
        let mut rows = Vec::with_capacity(s);
        'gram: for p in 0..s {
            let mut row = Vec::with_capacity(s);
            for q in 0..s {
                match module.inner(&basis[p], &basis[q]) {
                    Ok(v) => row.push(v),
                    Err(e) => {
                        gram_err = format!("{e}");
                        break 'gram;
                    }
                }
            }
            rows.push(row);
        }
        if rows.len() == s {
            Some(rows)
        } else {
            None
        }
    };
    let mut compatibility = if left_action_valid.is_holds() {
        ok()
    } else {
        Verdict::Unknown("left action invalid; compatibility not evaluated".into())
    };
    if compatibility.is_holds() {
        match &gram {
            Some(g) => {
                // In span coordinates <b.x_p, x_q> resolves to
                // sum_u conj(L_b[u,p]) g[u][q], while <x_p, b*.x_q> is
                // sum_v g[p][v] L_{b*}[v,q].
                'adj: for i in 0..db {
                    let star_i = left.star(&left.basis_elt(i));
                    let star_mat = combine_mats(left_action, &star_i, ring, s);
                    for p in 0..s {
                        for q in 0..s {
                            let mut lhs = a.zero();
                            for u in 0..s {
                                let c = left_action[i].at(u, p).conj();
                                if !c.is_zero() {
                                    for (o, v) in lhs.iter_mut().zip(&g[u][q]) {
                                        *o += v * &c;
                                    }
                                }
                            }
                            let mut rhs = a.zero();
                            for v in 0..s {
                                let c = star_mat.at(v, q);
                                if !c.is_zero() {
                                    for (o, w) in rhs.iter_mut().zip(&g[p][v]) {
                                        *o += w * c;
                                    }
                                }
                            }
                            if lhs != rhs {
                                compatibility = Verdict::Fails(format!(
                                    "<b.x, y> != <x, b*.y> at (b,x,y) = ({i},{p},{q})"
                                ));
                                break 'adj;
                            }
                        }
                    }
                }
            }
            None => compatibility = Verdict::Unknown("inner product failed".into()),
        }
        if compatibility.is_holds() && table_shaped {
            if let Ok(ra) = &span_acts {
                'acomp: for t in 0..da {
                    let r_a = &ra[t];
                    let star_t = a.star(&a.basis_elt(t));
                    let r_astar = combine_mats(ra, &star_t, ring, s);
                    for p in 0..s {
                        for q in 0..s {
                            // _B<x.a, y> against _B<x, y.a*>
                            let mut lhs = left.zero();
                            for u in 0..s {
                                let c = r_a.at(u, p);
                                if !c.is_zero() {
                                    for (o, v) in lhs.iter_mut().zip(&left_table[u][q]) {
                                        *o += v * c;
                                    }
                                }
                            }
                            let mut rhs = left.zero();
                            for u in 0..s {
                                let c = r_astar.at(u, q).conj();
                                if !c.is_zero() {
                                    for (o, v) in rhs.iter_mut().zip(&left_table[p][u]) {
                                        *o += v * &c;
                                    }
                                }
                            }
                            if lhs != rhs {
                                compatibility = Verdict::Fails(format!(
                                    "_B<x.a, y> != _B<x, y.a*> at (a,x,y) = ({t},{p},{q})"
                                ));
                                break 'acomp;
                            }
                        }
                    }
                }
            }
        }
    }

    let mut left_table_sesquilinear = if table_shaped {
        ok()
    } else {
        Verdict::Fails("left table has wrong dimensions".into())
    };
    if left_table_sesquilinear.is_holds() {
        'herm: for p in 0..s {
            for q in 0..s {
                if left_table[q][p] != left.star(&left_table[p][q]) {
                    left_table_sesquilinear =
                        Verdict::Fails(format!("table not hermitian at ({p},{q})"));
                    break 'herm;
                }
            }
        }
    }
    if left_table_sesquilinear.is_holds() && left_action_valid.is_holds() {
        'blin: for i in 0..db {
            for p in 0..s {
                for q in 0..s {
                    let mut lhs = left.zero();
                    for u in 0..s {
                        let c = left_action[i].at(u, p);
                        if !c.is_zero() {
                            for (o, v) in lhs.iter_mut().zip(&left_table[u][q]) {
                                *o += v * c;
                            }
                        }
                    }
                    let rhs = left.mul(&left.basis_elt(i), &left_table[p][q]);
                    if lhs != rhs {
                        left_table_sesquilinear = Verdict::Fails(format!(
                            "_B<b.x, y> != b _B<x,y> at (b,x,y) = ({i},{p},{q})"
                        ));
                        break 'blin;
                    }
                }
            }
        }
    }

    let right_nondegenerate = match module.degeneracy_space() {
        Ok((sub, _)) => {
            if sub.dim() == 0 {
                ok()
            } else {
                Verdict::Fails(format!("degeneracy space has dimension {}", sub.dim()))
            }
        }
        Err(e) => Verdict::Unknown(format!("{e}")),
    };

    let left_nondegenerate = if table_shaped {
        let mut m = Mat::zero(ring, s * db, s);
        for p in 0..s {
            for q in 0..s {
                for (comp, v) in left_table[p][q].iter().enumerate() {
                    m.set(q * db + comp, p, v.clone());
                }
            }
        }
        match m.kernel() {
            Ok(k) if k.is_empty() => ok(),
            Ok(_) => Verdict::Fails("a nonzero element pairs to zero with everything".into()),
            Err(e) => Verdict::Unknown(format!("{e}")),
        }
    } else {
        Verdict::Unknown("left table malformed".into())
    };

    let right_full = match &gram {
        Some(g) => {
            let vals: Vec<AElt> = g.iter().flatten().cloned().collect();
            match Subspace::from_spanning(ring, da, &vals) {
                Ok(sp) if sp.dim() == da => ok(),
                Ok(sp) => Verdict::Fails(format!(
                    "values of <.,.>_A span dimension {} of {}",
                    sp.dim(),
                    da
                )),
                Err(e) => Verdict::Unknown(format!("{e}")),
            }
        }
        None => Verdict::Unknown(gram_err.clone()),
    };

    let left_full = if table_shaped {
        let vals: Vec<AElt> = left_table.iter().flatten().cloned().collect();
        match Subspace::from_spanning(ring, db, &vals) {
            Ok(sp) if sp.dim() == db => ok(),
            Ok(sp) => Verdict::Fails(format!(
                "values of _B<.,.> span dimension {} of {}",
                sp.dim(),
                db
            )),
            Err(e) => Verdict::Unknown(format!("{e}")),
        }
    } else {
        Verdict::Unknown("left table malformed".into())
    };

    let mut linking = if table_shaped && left_action_valid.is_holds() {
        ok()
    } else {
        Verdict::Unknown("prerequisites failed; linking not evaluated".into())
    };
    if linking.is_holds() {
        match &gram {
            Some(g) => {
                'link: for p in 0..s {
                    for q in 0..s {
                        let act = combine_mats(left_action, &left_table[p][q], ring, s);
                        for r in 0..s {
                            let lhs = module.from_span_coords(&act.col_vec(r));
                            let rhs = elt_right(&a, &basis[p], &g[q][r]);
                            if flatten_elt(&lhs) != flatten_elt(&rhs) {
                                linking = Verdict::Fails(format!(
                                    "_B<x,y>.z != x.<y,z>_A at ({p},{q},{r})"
                                ));
                                break 'link;
                            }
                        }
                    }
                }
            }
            None => linking = Verdict::Unknown(gram_err.clone()),
        }
    }

    let left_unit_spans = if left_action_valid.is_holds() {
        let mut vecs = Vec::new();
        for la in left_action {
            for p in 0..s {
                vecs.push(la.col_vec(p));
            }
        }
        match Subspace::from_spanning(ring, s, &vecs) {
            Ok(sp) if sp.dim() == s => ok(),
            Ok(sp) => Verdict::Fails(format!("B.E has dimension {} of {}", sp.dim(), s)),
            Err(e) => Verdict::Unknown(format!("{e}")),
        }
    } else {
        Verdict::Unknown("left action invalid".into())
    };

    let right_unit_spans = match &span_acts {
        Ok(ra) => {
            let mut vecs = Vec::new();
            for r in ra {
                for p in 0..s {
                    vecs.push(r.col_vec(p));
                }
            }
            match Subspace::from_spanning(ring, s, &vecs) {
                Ok(sp) if sp.dim() == s => ok(),
                Ok(sp) => Verdict::Fails(format!("E.A has dimension {} of {}", sp.dim(), s)),
                Err(e) => Verdict::Unknown(format!("{e}")),
            }
        }
        Err(e) => Verdict::Unknown(format!("{e}")),
    };

    let right_cp = match module.completely_positive(module.generators()) {
        Ok(v) => v,
        Err(e) => Verdict::Unknown(format!("{e}")),
    };

    let left_cp = if table_shaped {
        let coords: Result<Vec<Vec<Scalar>>> = module
            .generators()
            .iter()
            .map(|g| module.to_span_coords(g))
            .collect();
        match coords {
            Ok(cs) => {
                let k = cs.len();
                let mut lg = AMat::zero(left.clone(), k, k);
                let carrier = EquivalenceBimodule {
                    module: module.clone(),
                    left: left.clone(),
                    left_action: left_action.to_vec(),
                    left_table: left_table.to_vec(),
                    axioms: empty_record(),
                    class: EquivClass::Unknown,
                    bimodule: None,
                };
                for i in 0..k {
                    for j in 0..k {
                        lg.set(i, j, carrier.left_product_coords(&cs[i], &cs[j]));
                    }
                }
                match amat_positive(&lg) {
                    Ok(v) => v,
                    Err(e) => Verdict::Unknown(format!("{e}")),
                }
            }
            Err(e) => Verdict::Unknown(format!("{e}")),
        }
    } else {
        Verdict::Unknown("left table malformed".into())
    };

    let axioms = AxiomRecord {
        left_action_valid,
        compatibility,
        left_table_sesquilinear,
        right_nondegenerate,
        left_nondegenerate,
        right_full,
        left_full,
        linking,
        left_unit_spans,
        right_unit_spans,
        right_cp,
        left_cp,
    };
    let class = axioms.classify();
    // Every law Bimodule::new would re-check sits among the structural
    // axioms that a Star classification certifies, including B.E = E,
    // which is exactly the strong non-degeneracy flag.
    let bimodule = if class >= EquivClass::Star {
        Some(Bimodule::from_validated_parts(
            module.clone(),
            left.clone(),
            left_action.to_vec(),
            true,
        ))
    } else {
        None
    };
    EquivalenceBimodule {
        module: module.clone(),
        left: left.clone(),
        left_action: left_action.to_vec(),
        left_table: left_table.to_vec(),
        axioms,
        class,
        bimodule,
    }
}

fn empty_record() -> AxiomRecord {
    let u = || Verdict::Unknown(String::new());
    AxiomRecord {
        left_action_valid: u(),
        compatibility: u(),
        left_table_sesquilinear: u(),
        right_nondegenerate: u(),
        left_nondegenerate: u(),
        right_full: u(),
        left_full: u(),
        linking: u(),
        left_unit_spans: u(),
        right_unit_spans: u(),
        right_cp: Verdict::Unknown(String::new()),
        left_cp: Verdict::Unknown(String::new()),
    }
}

/// The algebra over itself with `<a,b>_A = a* b` and `_A<a,b> = a b*`.
pub fn identity_bimodule(a: &AlgebraRef) -> Result<EquivalenceBimodule> {
    let module = InnerProductModule::free(a.clone(), 1, InnerKind::Canonical)?;
    let d = a.dim();
    let mats: Vec<Mat> = (0..d).map(|i| a.left_mult_matrix(&a.basis_elt(i))).collect();
    let mut table = vec![vec![a.zero(); d]; d];
    for (p, row) in table.iter_mut().enumerate() {
        for (q, entry) in row.iter_mut().enumerate() {
            *entry = a.mul(&a.basis_elt(p), &a.star(&a.basis_elt(q)));
        }
    }
    Ok(verify_equivalence(&module, a, &mats, &table))
}

/// The column module over the base field: `C^n` between `M_n` and the
/// scalars, with the canonical product on the right and the rank-one
/// operators `x y^*` on the left. The prototype strong equivalence.
pub fn column_equivalence(ring: BaseRing, n: usize) -> Result<EquivalenceBimodule> {
    let scalars: AlgebraRef = Arc::new(StarAlgebra::base(ring));
    let matrices: AlgebraRef = Arc::new(StarAlgebra::matrix(ring, n)?);
    let module = InnerProductModule::free(scalars, n, InnerKind::Canonical)?;
    let mut mats = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            let mut m = Mat::zero(ring, n, n);
            m.set(r, c, Scalar::one(ring));
            mats.push(m);
        }
    }
    // _B<e_p, e_q> = E_pq.
    let mut table = vec![vec![matrices.zero(); n]; n];
    for (p, row) in table.iter_mut().enumerate() {
        for (q, entry) in row.iter_mut().enumerate() {
            *entry = matrices.basis_elt(p * n + q);
        }
    }
    Ok(verify_equivalence(&module, &matrices, &mats, &table))
}

/// `P C^k` for a hermitian idempotent scalar matrix `P`: the projective
/// module with its canonical product, with the full corner `P M_k P`
/// acting on the left through its inclusion representation. Such corners
/// are generally not *-isomorphic to any matrix algebra over the Gaussian
/// rationals, so this is the first genuinely new point of the groupoid.
pub fn corner_equivalence(p: &AMat) -> Result<EquivalenceBimodule> {
    let a = p.algebra().clone();
    if !matches!(a.kind(), AlgebraKind::Base) {
        return Err(Error::PreconditionViolated(
            "corner equivalence is built over the base field".into(),
        ));
    }
    let ring = a.ring();
    let pf = p.flatten_concrete().expect("base field");
    let corner: AlgebraRef = Arc::new(StarAlgebra::corner_of(
        format!("corner(M{})", p.rows()),
        &pf,
    )?);
    let module = InnerProductModule::projective(a.clone(), p.clone(), InnerKind::Canonical)?;
    let s = module.span_dim();
    let rep = corner.faithful_rep().expect("corners carry their inclusion");
    let k = rep.dim;

    let mut left_action = Vec::with_capacity(corner.dim());
    for bt in &rep.mats {
        let mut m = Mat::zero(ring, s, s);
        for q in 0..s {
            let x = module.span_basis_elt(q);
            let flat: Vec<Scalar> = x.iter().map(|c| c[0].clone()).collect();
            let melt: MElt = bt.mul_vec(&flat).into_iter().map(|v| vec![v]).collect();
            let coords = module.to_span_coords(&melt)?;
            for (r, v) in coords.into_iter().enumerate() {
                m.set(r, q, v);
            }
        }
        left_action.push(m);
    }

    // _B<x, y> includes as the rank-one matrix x y^dagger; its corner
    // coordinates come from the representation, solved exactly.
    let mut solver = Mat::zero(ring, k * k, corner.dim());
    for (j, b) in rep.mats.iter().enumerate() {
        for r in 0..k {
            for c in 0..k {
                solver.set(r * k + c, j, b.at(r, c).clone());
            }
        }
    }
    let mut table = vec![vec![corner.zero(); s]; s];
    for i in 0..s {
        let x = module.span_basis_elt(i);
        for j in 0..s {
            let y = module.span_basis_elt(j);
            let mut rhs = Mat::zero(ring, k * k, 1);
            for r in 0..k {
                for c in 0..k {
                    rhs.set(r * k + c, 0, &x[r][0] * &y[c][0].conj());
                }
            }
            let sol = solver.solve(&rhs)?.ok_or_else(|| {
                Error::PreconditionViolated("pairing value escapes the corner".into())
            })?;
            table[i][j] = sol.col_vec(0);
        }
    }
    Ok(verify_equivalence(&module, &corner, &left_action, &table))
}

/// The conjugate bimodule over the opposite pair, realized by pairing
/// against the span basis: the second returned matrix `S` relates the
/// original span to the conjugate span via `psi(x) = S conj(coords x)`.
pub fn conjugate(e: &EquivalenceBimodule) -> Result<(EquivalenceBimodule, Mat)> {
    if e.class < EquivClass::Star {
        return Err(Error::PreconditionViolated(
            "conjugation needs a verified equivalence".into(),
        ));
    }
    let a = e.module.algebra().clone();
    let b = e.left.clone();
    let ring = a.ring();
    let s = e.module.span_dim();
    let db = b.dim();

    // Gram of the conjugate generators = the left table itself.
    let mut lt_amat = AMat::zero(b.clone(), s, s);
    for p in 0..s {
        for q in 0..s {
            lt_amat.set(p, q, e.left_table[p][q].clone());
        }
    }
    let gens: Vec<MElt> = (0..s)
        .map(|q| (0..s).map(|p| lt_amat.at(p, q).clone()).collect())
        .collect();
    let conj_module = InnerProductModule::new(
        b.clone(),
        s,
        gens,
        Presentation::Generated,
        InnerKind::Explicit(lt_amat),
    )?;
    if conj_module.span_dim() != s {
        return Err(Error::DegenerateModule(
            "conjugate span collapsed; the left product is degenerate".into(),
        ));
    }

    // psi(x) = flat pairing column against the span basis, conjugate-linear
    // in x; as a matrix on coordinates, psi(x) = M conj(c_x).
    let mut m = Mat::zero(ring, s * db, s);
    for alpha in 0..s {
        for p in 0..s {
            for (comp, v) in e.left_table[p][alpha].iter().enumerate() {
                m.set(p * db + comp, alpha, v.clone());
            }
        }
    }
    // In conjugate span coordinates.
    let mut s_mat = Mat::zero(ring, s, s);
    for alpha in 0..s {
        let col = m.col_vec(alpha);
        let coords = conj_module
            .span()
            .coordinates(&col)
            .ok_or_else(|| Error::PreconditionViolated("pairing image escapes the span".into()))?;
        for (r, v) in coords.into_iter().enumerate() {
            s_mat.set(r, alpha, v);
        }
    }
    let s_inv = s_mat
        .inverse()?
        .ok_or_else(|| Error::DegenerateModule("conjugate realization is singular".into()))?;

    // Left action of A: a . psi(x) = psi(x . a*).
    let span_acts = e.module.span_actions()?;
    let da = a.dim();
    let mut conj_left = Vec::with_capacity(da);
    for t in 0..da {
        let star_t = a.star(&a.basis_elt(t));
        let r = combine_mats(&span_acts, &star_t, ring, s);
        conj_left.push(&(&s_mat * &r.conj_entries()) * &s_inv);
    }

    // Left table over A from the psi-preimages of the conjugate span.
    let xs: Vec<MElt> = (0..s)
        .map(|p| {
            let c: Vec<Scalar> = s_inv.col_vec(p).iter().map(Scalar::conj).collect();
            e.module.from_span_coords(&c)
        })
        .collect();
    let mut lt_conj = vec![vec![a.zero(); s]; s];
    for p in 0..s {
        for q in 0..s {
            lt_conj[p][q] = e.module.inner(&xs[p], &xs[q])?;
        }
    }
    Ok((
        verify_equivalence(&conj_module, &a, &conj_left, &lt_conj),
        s_mat,
    ))
}

/// Tensor composition of equivalence bimodules; the class is the lattice
/// minimum of the inputs and the composite's own verification.
pub fn compose(
    f: &EquivalenceBimodule,
    e: &EquivalenceBimodule,
) -> Result<(EquivalenceBimodule, InternalTensor)> {
    if f.class < EquivClass::Star || e.class < EquivClass::Star {
        return Err(Error::PreconditionViolated(
            "composition needs verified equivalences".into(),
        ));
    }
    let f_bm = f.bimodule()?;
    let e_bm = e.bimodule()?;
    let (t, bm) = internal_tensor_bimodule(f_bm, e_bm)?;
    let c = f.left.clone();
    let ring = c.ring();
    let (sf, se) = (f.module.span_dim(), e.module.span_dim());
    let pre = sf * se;
    let f_acts = f.module.span_actions()?;

    // Left product on the pre-tensor:
    // _C<y (x) x, y' (x) x'> = _C<y . _B<x,x'>, y'>.
    let mut pre_table = vec![vec![c.zero(); pre]; pre];
    for a1 in 0..sf {
        for b1 in 0..se {
            for a2 in 0..sf {
                for b2 in 0..se {
                    let bb = &e.left_table[b1][b2];
                    let rb = combine_mats(&f_acts, bb, ring, sf);
                    let mut acc = c.zero();
                    for u in 0..sf {
                        let coeff = rb.at(u, a1);
                        if !coeff.is_zero() {
                            for (o, v) in acc.iter_mut().zip(&f.left_table[u][a2]) {
                                *o += v * coeff;
                            }
                        }
                    }
                    pre_table[a1 * se + b1][a2 * se + b2] = acc;
                }
            }
        }
    }

    // The left product must vanish on the kernel of the pairing map (the
    // degeneracy spaces of the two sides coincide).
    for v in t.pre_kernel()? {
        for col in 0..pre {
            let mut acc = c.zero();
            for (r, coeff) in v.iter().enumerate() {
                if !coeff.is_zero() {
                    for (o, w) in acc.iter_mut().zip(&pre_table[r][col]) {
                        *o += w * coeff;
                    }
                }
            }
            if !acc.iter().all(Scalar::is_zero) {
                return Err(Error::InvalidInnerProduct(
                    "left product does not descend to the tensor quotient".into(),
                ));
            }
        }
    }

    let pre_imgs = t.pre_images()?;
    let s_t = t.module.span_dim();
    let mut lt = vec![vec![c.zero(); s_t]; s_t];
    for (p, row) in lt.iter_mut().enumerate() {
        let vp = pre_imgs.col_vec(p);
        for (q, entry) in row.iter_mut().enumerate() {
            let vq = pre_imgs.col_vec(q);
            let mut acc = c.zero();
            for (r, x) in vp.iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                for (cidx, y) in vq.iter().enumerate() {
                    if y.is_zero() {
                        continue;
                    }
                    let coeff = x * &y.conj();
                    for (o, w) in acc.iter_mut().zip(&pre_table[r][cidx]) {
                        *o += w * &coeff;
                    }
                }
            }
            *entry = acc;
        }
    }

    let mut result = verify_equivalence(&t.module, &c, bm.left_actions(), &lt);
    result.class = result.class.min(f.class).min(e.class);
    Ok((result, t))
}

/// Explicit two-sided inverse witnesses: the isomorphisms
/// `conj(E) (x) E -> identity(A)` via `xbar (x) y -> <x,y>_A` and
/// `E (x) conj(E) -> identity(B)` via `x (x) ybar -> _B<x,y>`, both
/// verified bijective, isometric, and bimodule-equivariant.
pub fn conjugate_inverse_check(e: &EquivalenceBimodule) -> Result<Verdict<(Mat, Mat), String>> {
    let (conj, s_mat) = conjugate(e)?;
    if conj.class < EquivClass::Star {
        return Ok(Verdict::Fails(format!(
            "conjugate classified {}",
            conj.class
        )));
    }
    let s = e.module.span_dim();
    let s_inv = s_mat
        .inverse()?
        .ok_or_else(|| Error::DegenerateModule("conjugate realization is singular".into()))?;
    let xs: Vec<MElt> = (0..s)
        .map(|p| {
            let c: Vec<Scalar> = s_inv.col_vec(p).iter().map(Scalar::conj).collect();
            e.module.from_span_coords(&c)
        })
        .collect();

    // Side A: conj(E) (x) E against the identity bimodule of A.
    let a = e.module.algebra().clone();
    let id_a = identity_bimodule(&a)?;
    let (comp_a, t_a) = compose(&conj, e)?;
    let mut values_a = vec![vec![a.zero(); s]; s];
    for (alpha, x) in xs.iter().enumerate() {
        for beta in 0..s {
            values_a[alpha][beta] = e.module.inner(x, &e.module.span_basis_elt(beta))?;
        }
    }
    let iso_a = match explicit_iso_to_identity(&comp_a, &t_a, &values_a, &id_a)? {
        Verdict::Holds(m) => m,
        Verdict::Fails(r) => return Ok(Verdict::Fails(format!("A side: {r}"))),
        Verdict::Unknown(r) => return Ok(Verdict::Unknown(format!("A side: {r}"))),
    };

    // Side B: E (x) conj(E) against the identity bimodule of B.
    let b = e.left.clone();
    let id_b = identity_bimodule(&b)?;
    let (comp_b, t_b) = compose(e, &conj)?;
    let mut values_b = vec![vec![b.zero(); s]; s];
    for alpha in 0..s {
        for (beta, x) in xs.iter().enumerate() {
            values_b[alpha][beta] =
                e.left_product(&e.module.span_basis_elt(alpha), x)?;
        }
    }
    let iso_b = match explicit_iso_to_identity(&comp_b, &t_b, &values_b, &id_b)? {
        Verdict::Holds(m) => m,
        Verdict::Fails(r) => return Ok(Verdict::Fails(format!("B side: {r}"))),
        Verdict::Unknown(r) => return Ok(Verdict::Unknown(format!("B side: {r}"))),
    };
    Ok(Verdict::Holds((iso_a, iso_b)))
}

/// Build and verify the linear map sending composite span vectors to the
/// identity bimodule of the target algebra, given the values of the
/// defining map on pre-tensor basis pairs.
fn explicit_iso_to_identity(
    comp: &EquivalenceBimodule,
    t: &InternalTensor,
    values: &[Vec<AElt>],
    target: &EquivalenceBimodule,
) -> Result<Verdict<Mat, String>> {
    let alg = target.module.algebra().clone();
    let d = alg.dim();
    let ring = alg.ring();
    let s_t = comp.module.span_dim();
    if s_t != d {
        return Ok(Verdict::Fails(format!(
            "composite dimension {s_t} differs from the algebra dimension {d}"
        )));
    }
    let se = values[0].len();
    let pre_imgs = t.pre_images()?;
    let mut map = Mat::zero(ring, d, s_t);
    for p in 0..s_t {
        let vp = pre_imgs.col_vec(p);
        let mut acc = alg.zero();
        for (idx, coeff) in vp.iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            let (alpha, beta) = (idx / se, idx % se);
            for (o, v) in acc.iter_mut().zip(&values[alpha][beta]) {
                *o += v * coeff;
            }
        }
        for (r, v) in acc.into_iter().enumerate() {
            map.set(r, p, v);
        }
    }
    if map.inverse()?.is_none() {
        return Ok(Verdict::Fails("defining map is not bijective".into()));
    }
    // Isometry against the composite's right product.
    for p in 0..s_t {
        let mp = map.col_vec(p);
        for q in 0..s_t {
            let mq = map.col_vec(q);
            let want = comp
                .module
                .inner(&comp.module.span_basis_elt(p), &comp.module.span_basis_elt(q))?;
            let got = alg.mul(&alg.star(&mp), &mq);
            if got != want {
                return Ok(Verdict::Fails(format!("not isometric at pair ({p},{q})")));
            }
        }
    }
    // Equivariance for both actions.
    let comp_ra = comp.module.span_actions()?;
    for i in 0..d {
        let lm = alg.left_mult_matrix(&alg.basis_elt(i));
        if &(&map * &comp.left_action[i]) != &(&lm * &map) {
            return Ok(Verdict::Fails(format!("left action differs at basis {i}")));
        }
        let rm = alg.right_mult_matrix(&alg.basis_elt(i));
        if &(&map * &comp_ra[i]) != &(&rm * &map) {
            return Ok(Verdict::Fails(format!("right action differs at basis {i}")));
        }
    }
    Ok(Verdict::Holds(map))
}

/// The natural map `B -> F(E_A)` sending `b` to its left action, with the
/// finite-rank algebra it lands in and the coordinate matrix of the map.
pub struct FrIso {
    pub finite_rank: crate::module::FiniteRankAlgebra,
    pub coord_map: Mat,
}

pub fn fr_isomorphism(e: &EquivalenceBimodule) -> Result<FrIso> {
    if e.class < EquivClass::Star {
        return Err(Error::PreconditionViolated(
            "the finite-rank isomorphism needs a verified equivalence".into(),
        ));
    }
    let fr = e.module.finite_rank_algebra("fr")?;
    let ring = e.module.algebra().ring();
    let s = e.module.span_dim();
    let df = fr.algebra.dim();
    let db = e.left.dim();
    let mut theta = Mat::zero(ring, s * s, df);
    for (j, op) in fr.ops.iter().enumerate() {
        for r in 0..s {
            for c in 0..s {
                theta.set(r * s + c, j, op.at(r, c).clone());
            }
        }
    }
    let mut rhs = Mat::zero(ring, s * s, db);
    for (j, la) in e.left_action.iter().enumerate() {
        for r in 0..s {
            for c in 0..s {
                rhs.set(r * s + c, j, la.at(r, c).clone());
            }
        }
    }
    let phi = theta.solve(&rhs)?.ok_or_else(|| {
        Error::InvalidRepresentation("left action escapes the finite-rank algebra".into())
    })?;
    if df != db || phi.inverse()?.is_none() {
        return Err(Error::InvalidRepresentation(format!(
            "left action is not bijective onto the finite-rank algebra ({db} vs {df})"
        )));
    }
    // The map must be unital, multiplicative, and *-preserving.
    let send = |x: &AElt| -> AElt { phi.mul_vec(x) };
    if send(&e.left.unit()) != fr.algebra.unit() {
        return Err(Error::InvalidRepresentation("unit is not preserved".into()));
    }
    for i in 0..db {
        let ei = e.left.basis_elt(i);
        if send(&e.left.star(&ei)) != fr.algebra.star(&send(&ei)) {
            return Err(Error::InvalidRepresentation(format!(
                "involution is not preserved at basis {i}"
            )));
        }
        for j in 0..db {
            let ej = e.left.basis_elt(j);
            let lhs = send(&e.left.mul(&ei, &ej));
            let rhs2 = fr.algebra.mul(&send(&ei), &send(&ej));
            if lhs != rhs2 {
                return Err(Error::InvalidRepresentation(format!(
                    "multiplication is not preserved at ({i},{j})"
                )));
            }
        }
    }
    Ok(FrIso {
        finite_rank: fr,
        coord_map: phi,
    })
}

pub struct InverseWitness {
    pub equivalence: EquivalenceBimodule,
    pub inverse: EquivalenceBimodule,
}

impl fmt::Debug for InverseWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InverseWitness")
            .field("class", &self.equivalence.class)
            .field("inverse_class", &self.inverse.class)
            .finish_non_exhaustive()
    }
}

/// Can a one-product bimodule be completed to an equivalence? Attempts the
/// canonical construction: fullness, `E.A = E`, the finite-rank algebra,
/// the theta-product pulled back through the left action, and a full
/// verification; the inverse is the conjugate.
pub fn invertibility_check(e: &Bimodule) -> Result<Verdict<Box<InverseWitness>, String>> {
    let module = &e.module;
    let ring = module.algebra().ring();
    let da = module.algebra().dim();
    let s = module.span_dim();
    // Fullness of the right product.
    let mut vals = Vec::new();
    for p in 0..s {
        for q in 0..s {
            vals.push(module.inner(&module.span_basis_elt(p), &module.span_basis_elt(q))?);
        }
    }
    let sp = Subspace::from_spanning(ring, da, &vals)?;
    if sp.dim() != da {
        return Ok(Verdict::Fails(format!(
            "right product is not full: span {} of {}",
            sp.dim(),
            da
        )));
    }
    let (deg, _) = module.degeneracy_space()?;
    if deg.dim() != 0 {
        return Ok(Verdict::Fails("module is degenerate".into()));
    }
    let fr = match module.finite_rank_algebra("fr") {
        Ok(f) => f,
        Err(err) => return Ok(Verdict::Fails(format!("finite-rank algebra: {err}"))),
    };
    let df = fr.algebra.dim();
    let db = e.left.dim();
    let mut theta = Mat::zero(ring, s * s, df);
    for (j, op) in fr.ops.iter().enumerate() {
        for r in 0..s {
            for c in 0..s {
                theta.set(r * s + c, j, op.at(r, c).clone());
            }
        }
    }
    let mut rhs = Mat::zero(ring, s * s, db);
    for (j, la) in e.left_actions().iter().enumerate() {
        for r in 0..s {
            for c in 0..s {
                rhs.set(r * s + c, j, la.at(r, c).clone());
            }
        }
    }
    let phi = match theta.solve(&rhs)? {
        Some(m) => m,
        None => {
            return Ok(Verdict::Fails(
                "left action escapes the finite-rank algebra".into(),
            ))
        }
    };
    if df != db {
        return Ok(Verdict::Fails(format!(
            "left algebra has dimension {db} but the finite-rank algebra has {df}"
        )));
    }
    let phi_inv = match phi.inverse()? {
        Some(m) => m,
        None => {
            return Ok(Verdict::Fails(
                "left action is not bijective onto the finite-rank algebra".into(),
            ))
        }
    };
    // theta-product: _B<x,y> = phi^{-1}(theta_{x,y}).
    let mut table = vec![vec![e.left.zero(); s]; s];
    for p in 0..s {
        for q in 0..s {
            let op = module
                .finite_rank_operator(&module.span_basis_elt(p), &module.span_basis_elt(q))?;
            let mut vec_op = vec![Scalar::zero(ring); s * s];
            for r in 0..s {
                for c in 0..s {
                    vec_op[r * s + c] = op.matrix().at(r, c).clone();
                }
            }
            let coords = match theta.solve(&Mat::from_rows(
                ring,
                vec_op.iter().map(|v| vec![v.clone()]).collect(),
            ))? {
                Some(m) => m.col_vec(0),
                None => {
                    return Ok(Verdict::Fails(
                        "theta operator escapes the finite-rank algebra".into(),
                    ))
                }
            };
            table[p][q] = phi_inv.mul_vec(&coords);
        }
    }
    let equiv = verify_equivalence(module, &e.left, e.left_actions(), &table);
    if equiv.class < EquivClass::Star {
        let reason = equiv
            .axioms
            .first_failure()
            .map(|(n, w)| format!("{n}: {w}"))
            .unwrap_or_else(|| "verification inconclusive".into());
        return Ok(Verdict::Fails(reason));
    }
    let (inverse, _) = conjugate(&equiv)?;
    Ok(Verdict::Holds(Box::new(InverseWitness {
        equivalence: equiv,
        inverse,
    })))
}

/// Twist the left action by an automorphism of B given in coordinates:
/// `b ._Phi x = Phi(b) . x`. A non-*-automorphism degrades the class, and
/// the record shows where.
pub fn twist(phi: &Mat, e: &EquivalenceBimodule) -> Result<EquivalenceBimodule> {
    let b = &e.left;
    let db = b.dim();
    let ring = b.ring();
    if phi.rows() != db || phi.cols() != db {
        return Err(Error::NotAutomorphism("coordinate matrix has wrong size".into()));
    }
    if phi.inverse()?.is_none() {
        return Err(Error::NotAutomorphism("map is not invertible".into()));
    }
    let apply = |x: &AElt| -> AElt { phi.mul_vec(x) };
    if apply(&b.unit()) != b.unit() {
        return Err(Error::NotAutomorphism("unit is not fixed".into()));
    }
    for i in 0..db {
        for j in 0..db {
            let lhs = apply(&b.mul(&b.basis_elt(i), &b.basis_elt(j)));
            let rhs = b.mul(&apply(&b.basis_elt(i)), &apply(&b.basis_elt(j)));
            if lhs != rhs {
                return Err(Error::NotAutomorphism(format!(
                    "not multiplicative at ({i},{j})"
                )));
            }
        }
    }
    let phi_inv = phi.inverse()?.expect("checked invertible");
    let s = e.module.span_dim();
    let twisted_action: Vec<Mat> = (0..db)
        .map(|i| combine_mats(&e.left_action, &apply(&b.basis_elt(i)), ring, s))
        .collect();
    let mut twisted_table = vec![vec![b.zero(); s]; s];
    for p in 0..s {
        for q in 0..s {
            twisted_table[p][q] = phi_inv.mul_vec(&e.left_table[p][q]);
        }
    }
    Ok(verify_equivalence(
        &e.module,
        b,
        &twisted_action,
        &twisted_table,
    ))
}

/// Isometry classification of two inner products on the same right-module
/// presentation: find `U` with `<Ux, Uy>_1 = <x,y>_2`. Complete for
/// rank-one modules over the Gaussian rationals; otherwise reduces to the
/// factorization oracle on the comparison operator.
pub fn is_isometric_bimodule(
    e1: &InnerProductModule,
    e2: &InnerProductModule,
) -> Result<Verdict<AMat, String>> {
    if !e1.algebra().same_structure(e2.algebra())
        || e1.ambient_rank() != e2.ambient_rank()
        || e1.generators() != e2.generators()
    {
        return Err(Error::IncompatiblePresentations(
            "the modules must share ambient, algebra, and generators".into(),
        ));
    }
    let h_op = e1.unique_inner_product_h(e2)?;
    let alg = e1.algebra().clone();
    let ring = alg.ring();

    // Rank-one module over the base field: delegate to the Gaussian-norm
    // decision, which is complete.
    if matches!(alg.kind(), AlgebraKind::Base)
        && ring == crate::scalar::BaseRing::Rationals
        && e1.span_dim() == 1
    {
        let h = h_op.matrix().at(0, 0).clone();
        if !h.im_coeff(0).is_zero() {
            return Ok(Verdict::Fails("comparison factor is not real".into()));
        }
        let q = h.re_coeff(0).clone();
        if !q.is_positive() {
            return Ok(Verdict::Fails(format!(
                "comparison factor {q} is not positive"
            )));
        }
        return Ok(match gaussian_norm_representable(&q)? {
            Verdict::Holds(z) => {
                let mut u = AMat::zero(alg.clone(), 1, 1);
                u.set(0, 0, vec![z]);
                Verdict::Holds(u)
            }
            Verdict::Fails(p) => {
                Verdict::Fails(format!("{q} is not a Gaussian norm: obstruction prime {p}"))
            }
            Verdict::Unknown(r) => Verdict::Unknown(r),
        });
    }

    // General route: express H as a matrix over the algebra and hand it to
    // the factorization oracle.
    let k = e1.generators().len();
    let mut h_amat = AMat::zero(alg.clone(), k, k);
    for (j, g) in e1.generators().iter().enumerate() {
        let img = h_op.apply(e1, g)?;
        if img.len() != k {
            return Ok(Verdict::Unknown(
                "comparison operator does not close on the generators".into(),
            ));
        }
        for (i, comp) in img.into_iter().enumerate() {
            h_amat.set(i, j, comp);
        }
    }
    let factored = match e1.presentation() {
        Presentation::Projective(p) => crate::structure::factor_positive_in_corner(&h_amat, p)?,
        _ => crate::structure::factor_positive(&h_amat)?,
    };
    match factored {
        Verdict::Holds(u) => {
            // Exact check on span pairs: <Ux, Uy>_1 = <x,y>_2.
            let s = e1.span_dim();
            for p in 0..s {
                let x = e1.span_basis_elt(p);
                let ux = u.apply(&x);
                for q in 0..s {
                    let y = e1.span_basis_elt(q);
                    let uy = u.apply(&y);
                    if e1.inner(&ux, &uy)? != e2.inner(&x, &y)? {
                        return Ok(Verdict::Unknown(
                            "factorization did not verify as an isometry".into(),
                        ));
                    }
                }
            }
            Ok(Verdict::Holds(u))
        }
        Verdict::Fails(r) => Ok(Verdict::Fails(r)),
        Verdict::Unknown(r) => Ok(Verdict::Unknown(r)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::StarAlgebra;
    use crate::scalar::{q_int, q_ratio, BaseRing};
    use std::sync::Arc;

    fn base() -> AlgebraRef {
        Arc::new(StarAlgebra::base(BaseRing::Rationals))
    }

    fn matn(n: usize) -> AlgebraRef {
        Arc::new(StarAlgebra::matrix(BaseRing::Rationals, n).unwrap())
    }

    fn sc(n: i64) -> Scalar {
        Scalar::from_rational(BaseRing::Rationals, q_int(n))
    }

    fn columns(n: usize) -> EquivalenceBimodule {
        column_equivalence(BaseRing::Rationals, n).unwrap()
    }

    #[test]
    fn identity_bimodules_are_strong() {
        let idb = identity_bimodule(&base()).unwrap();
        assert_eq!(idb.class, EquivClass::Strong);
        let idm = identity_bimodule(&matn(2)).unwrap();
        assert_eq!(idm.class, EquivClass::Strong);
        // Both canonical products carry explicit squares certificates even
        // over the Grassmann algebra, where the cone has null vectors.
        let gr: AlgebraRef = Arc::new(StarAlgebra::grassmann(BaseRing::Rationals));
        let idg = identity_bimodule(&gr).unwrap();
        assert_eq!(idg.class, EquivClass::Strong);
    }

    #[test]
    fn column_module_is_strong_and_fullness_is_essential() {
        let e = columns(2);
        assert_eq!(e.class, EquivClass::Strong);
        assert!(e.axioms.linking.is_holds());
        // Zero out the left table: fullness (and linking) collapse.
        let zeroed = vec![vec![e.left.zero(); 2]; 2];
        let broken = verify_equivalence(&e.module, &e.left, &e.left_action, &zeroed);
        assert_eq!(broken.class, EquivClass::NotEquivalence);
        assert!(broken.axioms.first_failure().is_some());
    }

    #[test]
    fn conjugation_is_involutive_up_to_explicit_isometry() {
        let e = columns(2);
        let (conj, s1) = conjugate(&e).unwrap();
        assert_eq!(conj.class, EquivClass::Strong);
        assert_eq!(conj.module.algebra().dim(), 4);
        assert_eq!(conj.left.dim(), 1);
        let (conj2, s2) = conjugate(&conj).unwrap();
        assert_eq!(conj2.class, EquivClass::Strong);
        // The double conjugate maps back: U = S2 conj(S1) matches inner
        // products and intertwines both actions.
        let u = &s2 * &s1.conj_entries();
        let s = e.module.span_dim();
        for p in 0..s {
            let up = conj2.module.from_span_coords(&u.col_vec(p));
            for q in 0..s {
                let uq = conj2.module.from_span_coords(&u.col_vec(q));
                let want = e
                    .module
                    .inner(&e.module.span_basis_elt(p), &e.module.span_basis_elt(q))
                    .unwrap();
                let got = conj2.module.inner(&up, &uq).unwrap();
                assert_eq!(got, want);
            }
        }
        for i in 0..e.left.dim() {
            assert_eq!(&(&u * &e.left_action[i]), &(&conj2.left_action[i] * &u));
        }
    }

    #[test]
    fn composition_with_identity_preserves_grams() {
        let e = columns(2);
        let ida = identity_bimodule(&base()).unwrap();
        let (c, t) = compose(&e, &ida).unwrap();
        assert_eq!(c.class, EquivClass::Strong);
        assert_eq!(t.degeneracy_dim, 0);
        let g_e = e.module.gram(e.module.generators()).unwrap();
        assert_eq!(t.gram, g_e);
    }

    #[test]
    fn conjugates_are_two_sided_inverses() {
        let e = columns(2);
        match conjugate_inverse_check(&e).unwrap() {
            Verdict::Holds((iso_a, iso_b)) => {
                assert_eq!(iso_a.rows(), 1); // identity of the base field
                assert_eq!(iso_b.rows(), 4); // identity of M_2
            }
            other => panic!("expected two-sided inverse, got {other:?}"),
        }
        let idm = identity_bimodule(&matn(2)).unwrap();
        assert!(conjugate_inverse_check(&idm).unwrap().is_holds());
    }

    #[test]
    fn rectangular_composition_is_strong() {
        // C^2 over (M_2, C) composed with the conjugate of C^2 over
        // (M_2, C) placed on the other side: (M_2, M_2) of dimension 4.
        let e = columns(2);
        let (conj, _) = conjugate(&e).unwrap();
        let (c, t) = compose(&e, &conj).unwrap();
        assert_eq!(c.class, EquivClass::Strong);
        assert_eq!(c.module.span_dim(), 4);
        assert_eq!(t.degeneracy_dim, 0);
    }

    #[test]
    fn fr_isomorphism_on_columns_and_corners() {
        let e = columns(2);
        let iso = fr_isomorphism(&e).unwrap();
        assert_eq!(iso.finite_rank.algebra.dim(), 4);

        // P C^3 for a rank-2 projection: the finite-rank algebra is the
        // corner, of dimension 4.
        let b = base();
        let third = q_ratio(1, 3);
        let mut p = AMat::zero(b.clone(), 3, 3);
        for r in 0..3 {
            for c in 0..3 {
                let v = if r == c {
                    Scalar::one(BaseRing::Rationals)
                        - Scalar::from_rational(BaseRing::Rationals, third.clone())
                } else {
                    -Scalar::from_rational(BaseRing::Rationals, third.clone())
                };
                p.set(r, c, vec![v]);
            }
        }
        let module = InnerProductModule::projective(b, p, InnerKind::Canonical).unwrap();
        assert_eq!(module.span_dim(), 2);
        let fr = module.finite_rank_algebra("corner").unwrap();
        assert_eq!(fr.algebra.dim(), 4);
        fr.algebra.validate_axioms(true).unwrap();
    }

    #[test]
    fn invertibility_succeeds_for_columns_and_fails_for_scalar_action() {
        let e = columns(2);
        match invertibility_check(e.bimodule().unwrap()).unwrap() {
            Verdict::Holds(w) => {
                assert_eq!(w.equivalence.class, EquivClass::Strong);
                assert_eq!(w.inverse.class, EquivClass::Strong);
            }
            other => panic!("expected invertible, got {other:?}"),
        }

        // Scalars acting on C^2: the left algebra is one-dimensional but
        // the finite-rank algebra is M_2.
        let scalars = base();
        let module = InnerProductModule::free(scalars.clone(), 2, InnerKind::Canonical).unwrap();
        let bm = Bimodule::new(
            module,
            scalars,
            vec![Mat::identity(BaseRing::Rationals, 2)],
            true,
        )
        .unwrap();
        match invertibility_check(&bm).unwrap() {
            Verdict::Fails(r) => assert!(r.contains("dimension 1")),
            other => panic!("expected failure, got {other:?}"),
        }

        // The zero module is not full.
        let z_mod = InnerProductModule::generated(
            base(),
            1,
            vec![vec![base().zero()]],
            InnerKind::Canonical,
        )
        .unwrap();
        let z_bm = Bimodule::new(z_mod, base(), vec![Mat::zero(BaseRing::Rationals, 0, 0)], false)
            .unwrap();
        match invertibility_check(&z_bm).unwrap() {
            Verdict::Fails(r) => assert!(r.contains("full")),
            other => panic!("expected fullness failure, got {other:?}"),
        }
    }

    #[test]
    fn twists_by_inner_star_automorphisms_stay_strong() {
        let idm = identity_bimodule(&matn(2)).unwrap();
        let b = idm.left.clone();
        let db = b.dim();
        // Identity twist.
        let same = twist(&Mat::identity(BaseRing::Rationals, db), &idm).unwrap();
        assert_eq!(same.class, EquivClass::Strong);
        // Ad(u) for the unitary u = diag(i, 1).
        let i_s = Scalar::i(BaseRing::Rationals);
        let u = vec![i_s.clone(), sc(0), sc(0), sc(1)];
        let u_inv = vec![-i_s, sc(0), sc(0), sc(1)];
        let mut ad = Mat::zero(BaseRing::Rationals, db, db);
        for t in 0..db {
            let img = b.mul(&b.mul(&u, &b.basis_elt(t)), &u_inv);
            for (r, v) in img.into_iter().enumerate() {
                ad.set(r, t, v);
            }
        }
        let twisted = twist(&ad, &idm).unwrap();
        assert_eq!(twisted.class, EquivClass::Strong);
        // A non-*-automorphism: Ad(diag(1,2)) degrades the class.
        let g = vec![sc(1), sc(0), sc(0), sc(2)];
        let g_inv = vec![
            sc(1),
            sc(0),
            sc(0),
            Scalar::from_rational(BaseRing::Rationals, q_ratio(1, 2)),
        ];
        let mut ad2 = Mat::zero(BaseRing::Rationals, db, db);
        for t in 0..db {
            let img = b.mul(&b.mul(&g, &b.basis_elt(t)), &g_inv);
            for (r, v) in img.into_iter().enumerate() {
                ad2.set(r, t, v);
            }
        }
        let degraded = twist(&ad2, &idm).unwrap();
        assert_eq!(degraded.class, EquivClass::NotEquivalence);
        assert!(degraded.axioms.first_failure().is_some());
    }

    #[test]
    fn rank_one_isometry_is_decided_by_gaussian_norms() {
        let b = base();
        let canonical = InnerProductModule::free(b.clone(), 1, InnerKind::Canonical).unwrap();
        // E' = E gives the identity witness.
        match is_isometric_bimodule(&canonical, &canonical).unwrap() {
            Verdict::Holds(u) => assert!(u.at(0, 0)[0].is_one()),
            other => panic!("expected identity witness, got {other:?}"),
        }
        let twist_by = |n: i64| {
            let mut h = AMat::zero(b.clone(), 1, 1);
            h.set(0, 0, vec![sc(n)]);
            InnerProductModule::free(b.clone(), 1, InnerKind::Twisted(h)).unwrap()
        };
        // 3 zbar w is not isometric to the canonical product.
        let three = twist_by(3);
        match is_isometric_bimodule(&three, &canonical).unwrap() {
            Verdict::Fails(r) => assert!(r.contains('3')),
            other => panic!("expected obstruction at 3, got {other:?}"),
        }
        // 5 zbar w is: witness with |z|^2 = 5 on the other side.
        let five = twist_by(5);
        match is_isometric_bimodule(&canonical, &five).unwrap() {
            Verdict::Holds(u) => {
                let z = &u.at(0, 0)[0];
                assert_eq!(z.conj() * z.clone(), sc(5));
            }
            other => panic!("expected witness, got {other:?}"),
        }
        match is_isometric_bimodule(&five, &canonical).unwrap() {
            Verdict::Holds(u) => {
                let z = &u.at(0, 0)[0];
                assert_eq!((z.conj() * z.clone()) * sc(5), sc(1));
            }
            other => panic!("expected witness, got {other:?}"),
        }
    }
}
