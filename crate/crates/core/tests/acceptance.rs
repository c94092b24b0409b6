//! End-to-end acceptance battery.
//!
//! Ten numbered criteria, each printed as one pass/fail line (run with
//! `--nocapture` to see them on success). Every `Holds` certificate and
//! every `Fails` obstruction produced along the way is pushed into an
//! audit ledger together with an *independent* re-evaluation — expanding
//! square certificates from scratch, re-multiplying witnesses, re-running
//! brute-force searches — and the final criterion demands zero mismatches.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{
    base, conjugated_m2, drop_top, matn, norm_brute_small, prime_exponent, rank2_projection3, sc,
    Audit,
};
use morita::algebra::{AlgebraRef, StarAlgebra};
use morita::amat::{AElt, AMat};
use morita::deform::{
    decompose_automorphism, deform_factor, deform_factor_blocked, deform_invert,
    derivation_space, outer_dimension, quasi_inner_test, star_exp, DeformedAlgebra,
};
use morita::gaussian::{gaussian_norm_brute, gaussian_norm_representable};
use morita::linalg::{vec_scale, Mat};
use morita::module::{Bimodule, InnerKind, InnerProductModule};
use morita::morita::{
    column_equivalence, compose, conjugate, conjugate_inverse_check, corner_equivalence,
    identity_bimodule, EquivClass, EquivalenceBimodule,
};
use morita::positivity::{amat_positive, verify_squares_cert};
use morita::sample::Sampler;
use morita::scalar::{q_int, BaseRing, Q, Scalar};
use morita::structure::{kaplansky_projection, structure_theorem};
use morita::tensor::{cp_tensor_check, external_cp_check, external_tensor, internal_tensor};
use morita::Verdict;

const SEED: u64 = 0x6d6f_7269_7461;

type Outcome = Result<String, String>;

fn show<E: std::fmt::Display>(e: E) -> String {
    format!("{e}")
}

// =====================================================================
// 1. The equivalence-relation suite
// =====================================================================

/// Register an equivalence bimodule's own evidence in the audit: all
/// structural axioms must hold, and both CP certificates are re-expanded
/// against independently recomputed Gram matrices.
fn audit_equivalence(audit: &mut Audit, label: &str, e: &EquivalenceBimodule) -> Result<(), String> {
    for (name, v) in e.axioms.structural() {
        if !v.is_holds() {
            return Err(format!("{label}: axiom {name} did not hold"));
        }
    }
    let gens = e.module.generators().to_vec();
    let g_right = e.module.gram(&gens).map_err(show)?;
    match &e.axioms.right_cp {
        Verdict::Holds(c) => {
            audit.check(format!("{label}: right CP certificate"), verify_squares_cert(&g_right, c))
        }
        other => return Err(format!("{label}: right CP verdict was {other:?}")),
    }
    let g_left = e.gram_left(&gens).map_err(show)?;
    match &e.axioms.left_cp {
        Verdict::Holds(c) => {
            audit.check(format!("{label}: left CP certificate"), verify_squares_cert(&g_left, c))
        }
        other => return Err(format!("{label}: left CP verdict was {other:?}")),
    }
    Ok(())
}

fn criterion_equivalence_suite(audit: &mut Audit) -> Outcome {
    let col2 = column_equivalence(BaseRing::Rationals, 2).map_err(show)?;
    let col3 = column_equivalence(BaseRing::Rationals, 3).map_err(show)?;
    let p0 = rank2_projection3();
    let crn = corner_equivalence(&p0).map_err(show)?;

    eprintln!("[acceptance]   generators built");
    let family: Vec<(&str, AlgebraRef)> = vec![
        ("C", base()),
        ("M2", matn(2)),
        ("M3", matn(3)),
        ("PM3P", crn.left.clone()),
    ];
    for (name, a) in &family {
        let idb = identity_bimodule(a).map_err(show)?;
        if idb.class != EquivClass::Strong {
            return Err(format!("identity bimodule of {name} classified {}", idb.class));
        }
        audit_equivalence(audit, &format!("identity[{name}]"), &idb)?;
        eprintln!("[acceptance]   identity[{name}] done");
    }

    let generators: Vec<(&str, &EquivalenceBimodule)> =
        vec![("M2~C", &col2), ("M3~C", &col3), ("PM3P~C", &crn)];
    for (name, e) in &generators {
        if e.class != EquivClass::Strong {
            return Err(format!("{name} classified {}", e.class));
        }
        audit_equivalence(audit, name, e)?;
        eprintln!("[acceptance]   generator {name} done");
    }

    // Conjugates flip the sides and stay strong.
    let mut conjugates = Vec::new();
    for (name, e) in &generators {
        let (c, _) = conjugate(e).map_err(show)?;
        if c.class != EquivClass::Strong {
            return Err(format!("conjugate of {name} classified {}", c.class));
        }
        audit_equivalence(audit, &format!("conj[{name}]"), &c)?;
        eprintln!("[acceptance]   conj[{name}] done");
        conjugates.push(c);
    }

    // Every pair of distinct members is linked by a strong composite.
    let pairs: Vec<(&str, &EquivalenceBimodule, &EquivalenceBimodule)> = vec![
        ("M2~M3", &col2, &conjugates[1]),
        ("M2~PM3P", &col2, &conjugates[2]),
        ("M3~M2", &col3, &conjugates[0]),
        ("M3~PM3P", &col3, &conjugates[2]),
        ("PM3P~M2", &crn, &conjugates[0]),
        ("PM3P~M3", &crn, &conjugates[1]),
    ];
    for (name, f, e) in pairs {
        let (comp, t) = compose(f, e).map_err(show)?;
        if comp.class != EquivClass::Strong {
            return Err(format!("composite {name} classified {}", comp.class));
        }
        audit.check(
            format!("composite {name}: tensor Gram is the module Gram"),
            t.gram == comp.module.gram(comp.module.generators()).map_err(show)?,
        );
        audit_equivalence(audit, &format!("composite[{name}]"), &comp)?;
        eprintln!("[acceptance]   composite {name} done");
    }

    // conj(E) (x) E collapses to the identity bimodule through an explicit
    // isomorphism matching both structure maps exactly.
    for (name, e) in &generators {
        match conjugate_inverse_check(e).map_err(show)? {
            Verdict::Holds((iso_a, iso_b)) => {
                let a_ok = iso_a.rows() == e.module.algebra().dim()
                    && iso_a.inverse().map_err(show)?.is_some();
                let b_ok =
                    iso_b.rows() == e.left.dim() && iso_b.inverse().map_err(show)?.is_some();
                audit.check(format!("inverse law for {name}: explicit isomorphisms"), a_ok && b_ok);
            }
            other => return Err(format!("inverse law for {name} gave {other:?}")),
        }
        eprintln!("[acceptance]   inverse law {name} done");
    }
    Ok("identity, conjugate, and all pairwise composite classes are strong; \
        conjugates invert exactly"
        .into())
}

// =====================================================================
// 2. CP closure of internal and external tensors
// =====================================================================

fn scaled_identity_bimodule(a: &AlgebraRef, c: Scalar) -> Result<Bimodule, String> {
    let mut h = AMat::zero(a.clone(), 1, 1);
    h.set(0, 0, a.scalar_elt(&c));
    let module = InnerProductModule::free(a.clone(), 1, InnerKind::Twisted(h)).map_err(show)?;
    let mats: Vec<Mat> = (0..a.dim()).map(|i| a.left_mult_matrix(&a.basis_elt(i))).collect();
    Bimodule::new(module, a.clone(), mats, true).map_err(show)
}

fn column_bimodule(n: usize) -> Result<Bimodule, String> {
    let scalars = base();
    let matrices = matn(n);
    let module =
        InnerProductModule::free(scalars, n, InnerKind::Canonical).map_err(show)?;
    let mut mats = Vec::new();
    for r in 0..n {
        for c in 0..n {
            let mut m = Mat::zero(BaseRing::Rationals, n, n);
            m.set(r, c, Scalar::one(BaseRing::Rationals));
            mats.push(m);
        }
    }
    Bimodule::new(module, matrices, mats, true).map_err(show)
}

fn criterion_cp_tensor_closure(audit: &mut Audit) -> Outcome {
    let mut s = Sampler::new(SEED ^ 2);
    let mut internal_count = 0usize;
    let mut external_count = 0usize;
    for i in 0..100usize {
        if i % 10 == 0 {
            eprintln!("[acceptance]   tensor pair {i}");
        }
        // Internal tensor F (x)_B E with a randomized positive twist on F.
        let b_size = 1 + i % 3;
        let b = matn(b_size);
        let rank = 1 + (i / 3) % 2;
        let inner = if i % 2 == 0 {
            InnerKind::Canonical
        } else {
            InnerKind::Twisted(s.unit_plus_square(&b, rank, 1))
        };
        let f = InnerProductModule::free(b.clone(), rank, inner).map_err(show)?;
        // The identity bimodule of M_3 has span 9 and makes the balancing
        // quotient needlessly large; columns exercise the same route there.
        let e = if i % 4 < 2 && b_size <= 2 {
            let c = sc(1 + s.int(3).abs());
            scaled_identity_bimodule(&b, c)?
        } else {
            column_bimodule(b_size)?
        };
        let t = internal_tensor(&f, &e).map_err(show)?;
        match cp_tensor_check(&f, &e, &t).map_err(show)? {
            Verdict::Holds(cert) => {
                audit.check(
                    format!("internal tensor #{i}: certificate re-expansion"),
                    verify_squares_cert(&t.gram, &cert),
                );
                internal_count += 1;
            }
            other => return Err(format!("internal tensor #{i} gave {other:?}")),
        }

        // External tensor of two independent bimodules (product algebra
        // sizes kept to <= 6 so the validation stays cheap).
        let n1 = 1 + i % 2;
        let n2 = 1 + (i / 2) % 3;
        let e1 = if i % 3 == 0 {
            scaled_identity_bimodule(&matn(n1), sc(1 + s.int(2).abs()))?
        } else {
            column_bimodule(n1)?
        };
        let e2 = column_bimodule(n2)?;
        let ext = external_tensor(&e1, &e2).map_err(show)?;
        match external_cp_check(&e1, &e2, &ext).map_err(show)? {
            Verdict::Holds(cert) => {
                let g = ext.module.gram(ext.module.generators()).map_err(show)?;
                audit.check(
                    format!("external tensor #{i}: certificate re-expansion"),
                    verify_squares_cert(&g, &cert),
                );
                external_count += 1;
            }
            other => return Err(format!("external tensor #{i} gave {other:?}")),
        }
    }
    Ok(format!(
        "{internal_count} internal and {external_count} external tensors all CP with verified certificates"
    ))
}

// =====================================================================
// 3. The scaled rank-one module and the Gaussian norm oracle
// =====================================================================

fn scaled_rank_one(scale: i64) -> Result<InnerProductModule, String> {
    let c = base();
    let mut h = AMat::zero(c.clone(), 1, 1);
    h.set(0, 0, vec![sc(scale)]);
    InnerProductModule::free(c, 1, InnerKind::Twisted(h)).map_err(show)
}

fn criterion_rank_one_isometry(audit: &mut Audit) -> Outcome {
    let c = base();
    let canonical = InnerProductModule::free(c, 1, InnerKind::Canonical).map_err(show)?;

    let three = scaled_rank_one(3)?;
    match morita::morita::is_isometric_bimodule(&canonical, &three).map_err(show)? {
        Verdict::Fails(msg) => {
            if !msg.contains("obstruction prime 3") {
                return Err(format!("wrong obstruction: {msg}"));
            }
            // Independent evaluation of the obstruction: 3 is 3 mod 4 and
            // occurs to an odd power, and the brute-force search agrees.
            let q3 = q_int(3);
            audit.check(
                "scale-3 obstruction: prime residue and parity",
                3 % 4 == 3 && prime_exponent(3, 3) % 2 == 1 && !gaussian_norm_brute(&q3),
            );
        }
        other => return Err(format!("scale 3 comparison gave {other:?}")),
    }

    let five = scaled_rank_one(5)?;
    match morita::morita::is_isometric_bimodule(&canonical, &five).map_err(show)? {
        Verdict::Holds(u) => {
            let z = u.at(0, 0)[0].clone();
            audit.check("scale-5 witness: conj(z) z = 5", z.norm() == sc(5));
        }
        other => return Err(format!("scale 5 comparison gave {other:?}")),
    }

    // Complete decision against brute force on every reduced fraction.
    let mut checked = 0usize;
    for p in 1i64..=50 {
        for q in 1i64..=50 {
            if num::Integer::gcd(&p, &q) != 1 {
                continue;
            }
            let val = Q::new(p.into(), q.into());
            let brute = norm_brute_small(&val).is_some();
            let brute_lib = gaussian_norm_brute(&val);
            match gaussian_norm_representable(&val).map_err(show)? {
                Verdict::Holds(z) => {
                    if !brute || !brute_lib {
                        return Err(format!("{p}/{q}: library Holds but brute search fails"));
                    }
                    audit.check(
                        format!("norm witness for {p}/{q}"),
                        z.norm() == Scalar::from_rational(BaseRing::Rationals, val.clone()),
                    );
                }
                Verdict::Fails(pr) => {
                    if brute || brute_lib {
                        return Err(format!("{p}/{q}: library Fails but brute search succeeds"));
                    }
                    let pr: u64 = show(&pr).parse().map_err(show)?;
                    let odd = prime_exponent(p as u64, pr) % 2 == 1
                        || prime_exponent(q as u64, pr) % 2 == 1;
                    audit.check(
                        format!("norm obstruction for {p}/{q}"),
                        pr % 4 == 3 && odd,
                    );
                }
                Verdict::Unknown(r) => return Err(format!("{p}/{q}: unexpected Unknown: {r}")),
            }
            checked += 1;
        }
    }
    Ok(format!(
        "scale 3 refuted with prime 3, scale 5 admits an exact witness, \
         {checked} reduced fractions agree with brute force"
    ))
}

// =====================================================================
// 4. The exterior algebra separates degeneracy from the norm-zero set
// =====================================================================

fn criterion_grassmann_gap(audit: &mut Audit) -> Outcome {
    let gr: AlgebraRef = Arc::new(StarAlgebra::grassmann(BaseRing::Rationals));
    let m = InnerProductModule::free(gr.clone(), 1, InnerKind::Canonical).map_err(show)?;
    let (degeneracy, _) = m.degeneracy_space().map_err(show)?;
    if degeneracy.dim() != 0 {
        return Err(format!("degeneracy space has dimension {}", degeneracy.dim()));
    }
    let witness = m
        .norm_zero_set_witness(1)
        .map_err(show)?
        .ok_or("no degree-one norm-zero witness found")?;
    let e1: Vec<AElt> = vec![gr.basis_elt(1)];
    if witness != e1 {
        return Err("the witness is not the first generator".into());
    }
    let ip = m.inner(&witness, &witness).map_err(show)?;
    let against_unit = m.inner(&witness, &vec![gr.unit()]).map_err(show)?;
    audit.check(
        "norm-zero witness: <e1, e1> = 0 but e1 pairs non-trivially",
        ip.iter().all(Scalar::is_zero) && !against_unit.iter().all(Scalar::is_zero),
    );
    Ok("degeneracy space is zero while e1 has vanishing self-pairing".into())
}

// =====================================================================
// 5. Structure theorem round trip on the rank-2 corner
// =====================================================================

fn criterion_structure_roundtrip(audit: &mut Audit) -> Outcome {
    let p0 = rank2_projection3();
    let crn = corner_equivalence(&p0).map_err(show)?;
    let data = match structure_theorem(&crn).map_err(show)? {
        Verdict::Holds(d) => d,
        other => return Err(format!("structure theorem gave {other:?}")),
    };
    if data.n != 3 {
        return Err(format!("generator count {} instead of 3", data.n));
    }
    if data.projection != p0 {
        return Err("the recovered projection is not the original one".into());
    }

    // The span images form an exact isometry onto P0 C^3 with the
    // canonical product, and they live inside the projection's range.
    let module = &crn.module;
    let a = module.algebra().clone();
    let s = module.span_dim();
    let mut isometry_ok = true;
    for p in 0..s {
        let img_p = &data.images[p];
        if data.projection.apply(img_p) != *img_p {
            isometry_ok = false;
        }
        for q in 0..s {
            let mut canon = a.zero();
            for (xc, yc) in data.images[p].iter().zip(&data.images[q]) {
                let term = a.mul(&a.star(xc), yc);
                for (o, v) in canon.iter_mut().zip(term) {
                    *o += v;
                }
            }
            let want = module
                .inner(&module.span_basis_elt(p), &module.span_basis_elt(q))
                .map_err(show)?;
            if canon != want {
                isometry_ok = false;
            }
        }
    }
    audit.check("structure data: span isometry onto P C^3", isometry_ok);

    // The left images realize the acting algebra inside P M_3 P as a
    // *-isomorphism: unital, multiplicative, star-compatible, corner-valued.
    let bb = &crn.left;
    let d = bb.dim();
    let mut iso_ok = data.left_images.len() == d;
    if iso_ok {
        let unit_img = combine_amats(&data.left_images, &bb.unit());
        iso_ok &= unit_img == data.projection;
        for i in 0..d {
            let img_i = &data.left_images[i];
            iso_ok &= data.projection.mul(img_i).mul(&data.projection) == *img_i;
            let star_img = combine_amats(&data.left_images, &bb.star(&bb.basis_elt(i)));
            iso_ok &= star_img == img_i.star();
            for j in 0..d {
                let prod = combine_amats(&data.left_images, &bb.mul(&bb.basis_elt(i), &bb.basis_elt(j)));
                iso_ok &= prod == img_i.mul(&data.left_images[j]);
            }
        }
    }
    audit.check("structure data: corner *-isomorphism identities", iso_ok);

    if !data.fullness.is_holds() {
        return Err(format!("fullness verdict: {:?}", data.fullness));
    }
    match &data.left_cp {
        Verdict::Holds(_) => {
            // Independent positivity recheck of the left product on the
            // original presentation.
            let gens = crn.module.generators().to_vec();
            let g_left = crn.gram_left(&gens).map_err(show)?;
            match amat_positive(&g_left).map_err(show)? {
                Verdict::Holds(c) => audit.check(
                    "structure data: left CP recheck",
                    verify_squares_cert(&g_left, &c),
                ),
                other => return Err(format!("left CP recheck gave {other:?}")),
            }
        }
        other => return Err(format!("left CP verdict: {other:?}")),
    }
    Ok("module rewritten as P0 C^3 with n = 3, exact isometry, and a \
        verified corner *-isomorphism"
        .into())
}

/// Linear combination of matrices over an algebra with coefficient vector.
fn combine_amats(mats: &[AMat], coords: &AElt) -> AMat {
    let mut acc = AMat::zero(
        mats[0].algebra().clone(),
        mats[0].rows(),
        mats[0].cols(),
    );
    for (c, m) in coords.iter().zip(mats) {
        if !c.is_zero() {
            acc = acc.add(&m.scale(c));
        }
    }
    acc
}

// =====================================================================
// 6. The Kaplansky projection formula
// =====================================================================

fn kaplansky_identities(audit: &mut Audit, label: String, e: &AMat) -> Result<(), String> {
    let p = kaplansky_projection(e).map_err(show)?;
    let ok = p.mul(&p) == p && p.star() == p && p.mul(e) == *e && e.mul(&p) == p;
    audit.check(label.clone(), ok);
    if !ok {
        return Err(format!("{label}: an identity failed"));
    }
    Ok(())
}

fn criterion_kaplansky(audit: &mut Audit) -> Outcome {
    let mut s = Sampler::new(SEED ^ 6);
    let b = base();
    for i in 0..50usize {
        let rank = s.index(4); // 0..=3
        let m = s.idempotent_matrix(BaseRing::Rationals, 3, rank, 1);
        let e = AMat::from_fn(b.clone(), 3, 3, |r, c| vec![m.at(r, c).clone()]);
        if e.mul(&e) != e {
            return Err(format!("sample {i} is not idempotent"));
        }
        kaplansky_identities(audit, format!("kaplansky M3 #{i}"), &e)?;
    }

    // Idempotents for the deformed product: conjugation sends classical
    // idempotents to star-product idempotents through the inverse of the
    // equivalence map.
    let (da, t) = conjugated_m2(4);
    let alg = da.algebra().clone();
    let ring = alg.ring();
    let t_inv = t
        .inverse()
        .map_err(show)?
        .ok_or("conjugation map is singular")?;
    for i in 0..20usize {
        let rank = 1 + s.index(2); // 1 or 2
        let m = s.idempotent_matrix(BaseRing::Rationals, 2, rank, 1);
        let coords: Vec<Scalar> =
            (0..4).map(|k| m.at(k / 2, k % 2).lift_to(ring)).collect();
        let e_elt = t_inv.mul_vec(&coords);
        if alg.mul(&e_elt, &e_elt) != e_elt {
            return Err(format!("deformed sample {i} is not star-idempotent"));
        }
        let mut e = AMat::zero(alg.clone(), 1, 1);
        e.set(0, 0, e_elt);
        kaplansky_identities(audit, format!("kaplansky deformed M2 #{i}"), &e)?;
    }
    Ok("all 70 projections satisfy P = P^2 = P*, Pe = e, eP = P exactly".into())
}

// =====================================================================
// 7. Rigidity of truncated deformations at order 5
// =====================================================================

fn criterion_deformation_rigidity(audit: &mut Audit) -> Outcome {
    let mut s = Sampler::new(SEED ^ 7);
    let trivial = DeformedAlgebra::trivial(&matn(2), 5).map_err(show)?;
    let (conj, _) = conjugated_m2(5);
    let deformations = [("trivial", trivial), ("conjugated", conj)];

    let mut inversions = 0usize;
    for (name, da) in &deformations {
        let alg = da.algebra().clone();
        for i in 0..25usize {
            let k = 1 + i % 2;
            let a = s.amat(&alg, k, k, 1);
            let x = AMat::identity(alg.clone(), k).add(&a.star().mul(&a));
            let y = deform_invert(&x).map_err(show)?;
            let ok = x.mul(&y) == AMat::identity(alg.clone(), k)
                && y.mul(&x) == AMat::identity(alg.clone(), k);
            audit.check(format!("inverse over {name} #{i}"), ok);
            if !ok {
                return Err(format!("two-sided inverse failed over {name} #{i}"));
            }
            inversions += 1;
        }
    }

    let mut factored = 0usize;
    for (name, da) in &deformations {
        let alg = da.algebra().clone();
        let classical = da.classical().clone();
        let lambda = Scalar::lambda(alg.ring()).map_err(show)?;
        for i in 0..20usize {
            let k = 1 + i % 2;
            // Positive sample with a classical witness by construction:
            // h = w* . w for invertible w. Even indices keep the classical
            // part at the unit, so the oracle must find its own seed; odd
            // indices hand over the constructed witness.
            let (h, witness) = if i % 2 == 0 {
                let a = s.amat(&alg, k, k, 1);
                let w = AMat::identity(alg.clone(), k).add(&a.scale(&lambda));
                (w.star().mul(&w), None)
            } else {
                let w0 = s.unit_plus_square(&classical, k, 1);
                let a = s.amat(&alg, k, k, 1);
                let w = w0.lift(&alg).add(&a.scale(&lambda));
                (w.star().mul(&w), Some(w0))
            };
            let u = match deform_factor(&h, witness.as_ref()).map_err(show)? {
                Verdict::Holds(u) => u,
                other => return Err(format!("factorization over {name} #{i} gave {other:?}")),
            };
            audit.check(format!("factorization over {name} #{i}"), u.star().mul(&u) == h);
            factored += 1;
        }

        // Block cases with commuting constant projections; norm-friendly
        // classical scales keep the exact square roots inside Q(i).
        for i in 0..5usize {
            let mut blocks = Vec::new();
            for _ in 0..2 {
                let c = sc(1 + (s.index(2) as i64)).lift_to(alg.ring());
                let a = s.amat(&alg, 1, 1, 1);
                let w = AMat::identity(alg.clone(), 1).scale(&c).add(&a.scale(&lambda));
                blocks.push(w.star().mul(&w).at(0, 0).clone());
            }
            let mut h = AMat::zero(alg.clone(), 2, 2);
            h.set(0, 0, blocks[0].clone());
            h.set(1, 1, blocks[1].clone());
            let mut p1 = AMat::zero(alg.clone(), 2, 2);
            p1.set(0, 0, alg.unit());
            let mut p2 = AMat::zero(alg.clone(), 2, 2);
            p2.set(1, 1, alg.unit());
            let u = match deform_factor_blocked(&h, &[p1.clone(), p2.clone()]).map_err(show)? {
                Verdict::Holds(u) => u,
                other => return Err(format!("blocked factor over {name} #{i} gave {other:?}")),
            };
            let ok = u.star().mul(&u) == h
                && u.mul(&p1) == p1.mul(&u)
                && u.mul(&p2) == p2.mul(&u);
            audit.check(format!("blocked factorization over {name} #{i}"), ok);
            factored += 1;
        }
    }
    Ok(format!(
        "{inversions} Neumann inverses and {factored} exact factorizations at order 5"
    ))
}

// =====================================================================
// 8. Automorphism decomposition at order 4
// =====================================================================

/// Truncated exponential of a coordinate map with vanishing classical
/// part: independent of the library's internal one.
fn mat_exp(m: &Mat) -> Mat {
    let n = m.rows();
    let order = m.ring().len();
    let mut acc = Mat::identity(m.ring(), n);
    let mut pow = Mat::identity(m.ring(), n);
    let mut fact = Q::new(1.into(), 1.into());
    for k in 1..order {
        pow = &pow * m;
        fact = fact * Q::new(1.into(), k.into());
        acc = &acc + &pow.scale(&Scalar::from_rational(m.ring(), fact.clone()));
    }
    acc
}

fn criterion_automorphism_decomposition(audit: &mut Audit) -> Outcome {
    let (da, _) = conjugated_m2(4);
    let alg = da.algebra().clone();
    let ring = alg.ring();
    let lambda = Scalar::lambda(ring).map_err(show)?;
    let mut s = Sampler::new(SEED ^ 8);
    let id1 = AMat::identity(alg.clone(), 1);

    for i in 0..20usize {
        // Hermitian generator with vanishing top coefficient so the
        // canonical normalization reproduces it on the nose.
        let h: AElt = s
            .hermitian_element(&alg, 1)
            .iter()
            .map(drop_top)
            .collect();
        let lh = alg.left_mult_matrix(&h);
        let rh = alg.right_mult_matrix(&h);
        let d_in = Mat::from_fn(ring, 4, 4, |r, c| {
            (lh.at(r, c).clone() - rh.at(r, c).clone()) * Scalar::i(ring)
        });

        // The hermitian flow: exp(i lambda D) = (left by g)(right by g^-1)
        // for g = exp(-lambda h).
        let g = star_exp(&alg, &vec_scale(&h, &-lambda.clone())).map_err(show)?;
        let g_inv = star_exp(&alg, &vec_scale(&h, &lambda)).map_err(show)?;
        let flow = &alg.left_mult_matrix(&g) * &alg.right_mult_matrix(&g_inv);

        // A star-automorphism: conjugation by a star-unitary lifted from a
        // random classical unitary.
        let u0 = s.unitary_matrix(BaseRing::Rationals, 2, 2);
        let u0_amat = {
            let cl = da.classical().clone();
            let coords: AElt = (0..4).map(|k| u0.at(k / 2, k % 2).clone()).collect();
            let mut m = AMat::zero(cl, 1, 1);
            m.set(0, 0, coords);
            m
        };
        let u = match deform_factor(&id1, Some(&u0_amat)).map_err(show)? {
            Verdict::Holds(u) => u.at(0, 0).clone(),
            other => return Err(format!("unitary lift #{i} gave {other:?}")),
        };
        let psi_in = &alg.left_mult_matrix(&alg.star(&u)) * &alg.right_mult_matrix(&u);

        let phi = &flow * &psi_in;
        let (dm, psi) = decompose_automorphism(&da, &phi).map_err(show)?;
        if psi != psi_in {
            return Err(format!("sample {i}: star part not recovered exactly"));
        }
        if dm.scale(&lambda) != d_in.scale(&lambda) {
            return Err(format!("sample {i}: hermitian generator not recovered"));
        }
        // Independent reconstruction through a local exponential.
        let i_lambda = Scalar::i(ring) * lambda.clone();
        let rebuilt = &mat_exp(&dm.scale(&i_lambda)) * &psi;
        audit.check(format!("automorphism #{i}: exact reconstruction"), rebuilt == phi);

        // A single-order mutation can no longer be decomposed: the
        // validation battery rejects it.
        let order = s.index(3) + 1;
        let r = s.index(4);
        let c = s.index(4);
        let mut phi_mut = phi.clone();
        phi_mut.set(
            r,
            c,
            phi.at(r, c).clone() + Scalar::one(ring).shift_up(order),
        );
        audit.check(
            format!("automorphism #{i}: order-{order} mutation rejected"),
            decompose_automorphism(&da, &phi_mut).is_err(),
        );
    }
    Ok("20 flows split exactly into hermitian generator and star part; \
        mutations are rejected"
        .into())
}

// =====================================================================
// 9. Outer derivations distinguish the deformations
// =====================================================================

fn criterion_outer_derivations(audit: &mut Audit) -> Outcome {
    let trivial = DeformedAlgebra::trivial(&matn(2), 3).map_err(show)?;
    let dim = outer_dimension(&trivial).map_err(show)?;
    if dim != 0 {
        return Err(format!("matrix deformation has outer dimension {dim}"));
    }
    // Every derivation of the trivial matrix deformation is quasi-inner,
    // and each witness satisfies its defining equation exactly.
    let alg = trivial.algebra().clone();
    let ders = derivation_space(&alg).map_err(show)?;
    for (k, dmat) in ders.iter().enumerate() {
        match quasi_inner_test(&trivial, dmat).map_err(show)? {
            Verdict::Holds(h) => {
                let mut ok = true;
                for j in 0..alg.dim() {
                    let ej = alg.basis_elt(j);
                    let want: AElt = (0..alg.dim())
                        .map(|r| dmat.at(r, j).clone())
                        .collect();
                    let comm = alg.mul(&h, &ej);
                    let comm2 = alg.mul(&ej, &h);
                    let got: AElt = comm
                        .iter()
                        .zip(&comm2)
                        .map(|(a, b)| (a.clone() - b.clone()) * Scalar::i(alg.ring()))
                        .collect();
                    ok &= got == want;
                }
                audit.check(format!("derivation {k} of trivial M2: witness"), ok);
            }
            other => return Err(format!("derivation {k} gave {other:?}")),
        }
    }

    let dual: AlgebraRef = Arc::new(StarAlgebra::dual_numbers(BaseRing::Rationals));
    let dd = DeformedAlgebra::trivial(&dual, 3).map_err(show)?;
    let outer = outer_dimension(&dd).map_err(show)?;
    if outer < 1 {
        return Err(format!("dual-number deformation has outer dimension {outer}"));
    }
    let ring = dd.algebra().ring();
    let mut scaling = Mat::zero(ring, 2, 2);
    scaling.set(1, 1, Scalar::one(ring));
    match quasi_inner_test(&dd, &scaling).map_err(show)? {
        Verdict::Fails(msg) => {
            // Independent reasoning: the algebra is commutative, so all
            // twisted commutators vanish and no non-zero derivation can be
            // quasi-inner.
            let a = dd.algebra().clone();
            let mut commutative = true;
            for p in 0..a.dim() {
                for q in 0..a.dim() {
                    commutative &=
                        a.mul(&a.basis_elt(p), &a.basis_elt(q)) == a.mul(&a.basis_elt(q), &a.basis_elt(p));
                }
            }
            audit.check(
                "scaling derivation obstruction: commutativity argument",
                commutative && msg.contains("no quasi-inner witness"),
            );
        }
        other => return Err(format!("scaling derivation gave {other:?}")),
    }
    Ok(format!(
        "trivial matrix deformation has no outer derivations; the dual-number \
         deformation has {outer} with a refuted scaling witness"
    ))
}

// =====================================================================
// Harness
// =====================================================================

struct Criterion {
    number: usize,
    label: &'static str,
    limit: Option<Duration>,
    run: fn(&mut Audit) -> Outcome,
}

#[test]
fn acceptance_criteria() {
    let criteria = [
        Criterion {
            number: 1,
            label: "equivalence-relation suite",
            limit: Some(Duration::from_secs(10)),
            run: criterion_equivalence_suite,
        },
        Criterion {
            number: 2,
            label: "CP tensor closure",
            limit: Some(Duration::from_secs(60)),
            run: criterion_cp_tensor_closure,
        },
        Criterion {
            number: 3,
            label: "rank-one isometry and norm oracle",
            limit: Some(Duration::from_secs(5)),
            run: criterion_rank_one_isometry,
        },
        Criterion {
            number: 4,
            label: "exterior-algebra degeneracy gap",
            limit: None,
            run: criterion_grassmann_gap,
        },
        Criterion {
            number: 5,
            label: "structure theorem round trip",
            limit: None,
            run: criterion_structure_roundtrip,
        },
        Criterion {
            number: 6,
            label: "Kaplansky projections",
            limit: Some(Duration::from_secs(30)),
            run: criterion_kaplansky,
        },
        Criterion {
            number: 7,
            label: "deformation rigidity",
            limit: None,
            run: criterion_deformation_rigidity,
        },
        Criterion {
            number: 8,
            label: "automorphism decomposition",
            limit: None,
            run: criterion_automorphism_decomposition,
        },
        Criterion {
            number: 9,
            label: "outer derivations",
            limit: None,
            run: criterion_outer_derivations,
        },
    ];

    // Development aid: ACCEPTANCE_FILTER="2,7" runs a subset (the audit
    // criterion then only covers what ran). CI runs the full battery.
    let filter: Option<Vec<usize>> = std::env::var("ACCEPTANCE_FILTER").ok().map(|s| {
        s.split(',').filter_map(|t| t.trim().parse().ok()).collect()
    });

    let mut audit = Audit::default();
    let mut failures = Vec::new();
    for c in &criteria {
        if filter.as_ref().is_some_and(|f| !f.contains(&c.number)) {
            continue;
        }
        eprintln!("[acceptance] criterion {} starting", c.number);
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| (c.run)(&mut audit)))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panicked".into());
                Err(format!("panicked: {msg}"))
            });
        let elapsed = start.elapsed();
        let timed_out = c.limit.is_some_and(|l| elapsed > l);
        match (&outcome, timed_out) {
            (Ok(detail), false) => {
                println!(
                    "criterion {:2} [{}]: pass ({:.2} s) — {detail}",
                    c.number,
                    c.label,
                    elapsed.as_secs_f64()
                );
            }
            (Ok(_), true) => {
                let msg = format!(
                    "criterion {:2} [{}]: fail — exceeded the {:?} budget ({:.2} s)",
                    c.number,
                    c.label,
                    c.limit.unwrap(),
                    elapsed.as_secs_f64()
                );
                println!("{msg}");
                failures.push(msg);
            }
            (Err(reason), _) => {
                let msg = format!(
                    "criterion {:2} [{}]: fail ({:.2} s) — {reason}",
                    c.number,
                    c.label,
                    elapsed.as_secs_f64()
                );
                println!("{msg}");
                failures.push(msg);
            }
        }
    }

    // Criterion 10: the audit itself.
    let mismatches = audit.mismatches();
    if mismatches.is_empty() && !audit.entries.is_empty() {
        println!(
            "criterion 10 [verdict soundness audit]: pass — {} rechecks, zero mismatches",
            audit.entries.len()
        );
    } else {
        let msg = format!(
            "criterion 10 [verdict soundness audit]: fail — {} mismatches out of {}: {:?}",
            mismatches.len(),
            audit.entries.len(),
            mismatches
        );
        println!("{msg}");
        failures.push(msg);
    }

    assert!(failures.is_empty(), "{} criteria failed:\n{}", failures.len(), failures.join("\n"));
}
