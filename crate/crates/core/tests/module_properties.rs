//! Randomized module laws: hermitian Grams, complete positivity of
//! canonical and twisted inner products on arbitrary submodules, the
//! defining formula of the balanced tensor inner product on pure tensors,
//! and the degeneracy quotient.

mod common;

use common::{base, matn};
use morita::amat::AMat;
use morita::module::{unflatten_elt, InnerKind, InnerProductModule, MElt};
use morita::morita::column_equivalence;
use morita::positivity::verify_squares_cert;
use morita::sample::Sampler;
use morita::scalar::{q_ratio, BaseRing, Q};
use morita::tensor::internal_tensor;
use morita::{Scalar, Verdict};
use proptest::prelude::*;

fn rational() -> impl Strategy<Value = Q> {
    (-4i64..=4, 1i64..=3).prop_map(|(p, q)| q_ratio(p, q))
}

fn coords(n: usize) -> impl Strategy<Value = Vec<Scalar>> {
    (
        prop::collection::vec(rational(), n),
        prop::collection::vec(rational(), n),
    )
        .prop_map(|(re, im)| {
            re.into_iter()
                .zip(im)
                .map(|(a, b)| Scalar::from_complex(BaseRing::Rationals, a, b))
                .collect()
        })
}

fn columns(m: &AMat) -> Vec<MElt> {
    (0..m.cols())
        .map(|j| (0..m.rows()).map(|i| m.at(i, j).clone()).collect())
        .collect()
}

/// A generated submodule of `A^ambient` with a canonical or unit-plus-square
/// twisted inner product, drawn from the seeded sampler.
fn random_module(seed: u64, n: usize, ambient: usize, k: usize, twisted: bool) -> InnerProductModule {
    let alg = matn(n);
    let mut s = Sampler::new(seed);
    let gens = columns(&s.amat(&alg, ambient, k, 1));
    let inner = if twisted {
        InnerKind::Twisted(s.unit_plus_square(&alg, ambient, 1))
    } else {
        InnerKind::Canonical
    };
    InnerProductModule::generated(alg, ambient, gens, inner).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn grams_are_hermitian(
        seed in any::<u64>(),
        n in 1usize..=2,
        twisted in any::<bool>(),
        cs in prop::collection::vec(rational(), 12),
    ) {
        let m = random_module(seed, n, 2, 2, twisted);
        let s = m.span_dim();
        let family: Vec<MElt> = cs
            .chunks(s.max(1))
            .take(3)
            .map(|chunk| {
                let mut v = vec![Scalar::zero(BaseRing::Rationals); s];
                for (slot, c) in v.iter_mut().zip(chunk) {
                    *slot = Scalar::from_rational(BaseRing::Rationals, c.clone());
                }
                m.from_span_coords(&v)
            })
            .collect();
        prop_assert!(m.gram(&family).unwrap().is_hermitian());
    }

    #[test]
    fn submodule_inner_products_are_completely_positive(
        seed in any::<u64>(),
        n in 1usize..=2,
        ambient in 1usize..=2,
        k in 1usize..=2,
        twisted in any::<bool>(),
    ) {
        let m = random_module(seed, n, ambient, k, twisted);
        let gens = m.generators().to_vec();
        match m.completely_positive(&gens).unwrap() {
            Verdict::Holds(cert) => {
                prop_assert!(verify_squares_cert(&m.gram(&gens).unwrap(), &cert));
            }
            _ => prop_assert!(false, "canonical/twisted inner products are CP"),
        }
    }

    #[test]
    fn tensor_inner_product_satisfies_its_defining_formula(
        y1 in coords(4), y2 in coords(4),
        x1 in coords(2), x2 in coords(2),
    ) {
        let col = column_equivalence(BaseRing::Rationals, 2).unwrap();
        let e = col.bimodule().unwrap();
        let f = InnerProductModule::free(matn(2), 1, InnerKind::Canonical).unwrap();
        let t = internal_tensor(&f, e).unwrap();

        let ys: Vec<MElt> = [&y1, &y2].iter().map(|c| f.from_span_coords(c)).collect();
        let xs: Vec<MElt> = [&x1, &x2].iter().map(|c| e.module.from_span_coords(c)).collect();

        let lhs = t
            .module
            .inner(
                &t.pure_tensor(&ys[0], &xs[0]).unwrap(),
                &t.pure_tensor(&ys[1], &xs[1]).unwrap(),
            )
            .unwrap();
        let b = f.inner(&ys[0], &ys[1]).unwrap();
        let rhs = e
            .module
            .inner(&xs[0], &e.left_apply(&b, &xs[1]).unwrap())
            .unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn degeneracy_space_pairs_to_zero_and_quotients_away(
        seed in any::<u64>(),
        n in 2usize..=3,
        probe in prop::collection::vec(rational(), 3),
    ) {
        // A deliberately rank-deficient table w*w on the free module.
        let alg = base();
        let mut s = Sampler::new(seed);
        let w = s.amat(&alg, 1, n, 2);
        let g = w.star().mul(&w);
        let m = InnerProductModule::free(alg.clone(), n, InnerKind::Explicit(g.clone())).unwrap();

        let flat = g.flatten_concrete().unwrap();
        let (degeneracy, _) = m.degeneracy_space().unwrap();
        prop_assert_eq!(degeneracy.dim(), n - flat.rank().unwrap());

        let mut y = vec![Scalar::zero(BaseRing::Rationals); n];
        for (slot, c) in y.iter_mut().zip(&probe) {
            *slot = Scalar::from_rational(BaseRing::Rationals, c.clone());
        }
        let y = m.from_span_coords(&y);
        for r in 0..degeneracy.dim() {
            let d = unflatten_elt(&alg, n, &degeneracy.basis_row(r));
            prop_assert!(m.inner(&d, &d).unwrap().iter().all(Scalar::is_zero));
            prop_assert!(m.inner(&d, &y).unwrap().iter().all(Scalar::is_zero));
        }

        // The degenerate directions disappear in one pass and the quotient
        // inherits a certified CP inner product.
        let q = m.quotient_by_degeneracy().unwrap();
        prop_assert_eq!(q.degeneracy_space().unwrap().0.dim(), 0);
        let gens = q.generators().to_vec();
        match q.completely_positive(&gens).unwrap() {
            Verdict::Holds(cert) => {
                prop_assert!(verify_squares_cert(&q.gram(&gens).unwrap(), &cert));
            }
            _ => prop_assert!(false, "quotient inner product must stay CP"),
        }

        // No norm-zero vectors survive outside the (now trivial) kernel.
        prop_assert!(q.norm_zero_set_witness(1).unwrap().is_none());
    }
}

#[test]
fn canonical_free_module_gram_is_the_table_itself() {
    let alg = matn(2);
    let m = InnerProductModule::free(alg.clone(), 2, InnerKind::Canonical).unwrap();
    let gens = m.generators().to_vec();
    assert_eq!(m.gram(&gens).unwrap(), AMat::identity(alg, 2));
}
