//! Randomized laws of the scalar tower: exact ring axioms over both base
//! rings (including the truncation's zero divisors), conjugation, sign
//! multiplicativity on real series, the Gaussian norm criterion against
//! brute force, and the display/parse round trip.

mod common;

use common::{norm_brute_small, prime_exponent};
use morita::gaussian::gaussian_norm_brute;
use morita::gaussian::gaussian_norm_representable;
use morita::scalar::{q_int, q_ratio, BaseRing, Q};
use morita::{Scalar, Sign, Verdict};
use num::ToPrimitive;
use proptest::prelude::*;

const ORDER: usize = 4;
const SERIES: BaseRing = BaseRing::Series { order: ORDER };

fn rational() -> impl Strategy<Value = Q> {
    (-12i64..=12, 1i64..=7).prop_map(|(p, q)| q_ratio(p, q))
}

fn scalar_in(ring: BaseRing) -> impl Strategy<Value = Scalar> {
    (
        prop::collection::vec(rational(), ring.len()),
        prop::collection::vec(rational(), ring.len()),
    )
        .prop_map(move |(re, im)| Scalar::from_parts(ring, re, im).unwrap())
}

/// Triples drawn from one ring at a time; orders never mix.
fn scalar_triple() -> impl Strategy<Value = (Scalar, Scalar, Scalar)> {
    prop_oneof![
        (
            scalar_in(BaseRing::Rationals),
            scalar_in(BaseRing::Rationals),
            scalar_in(BaseRing::Rationals)
        ),
        (scalar_in(SERIES), scalar_in(SERIES), scalar_in(SERIES)),
    ]
}

fn real_series() -> impl Strategy<Value = Scalar> {
    prop::collection::vec(rational(), ORDER)
        .prop_map(|re| Scalar::from_parts(SERIES, re, vec![q_int(0); ORDER]).unwrap())
}

proptest! {
    #[test]
    fn ring_axioms_hold_exactly((a, b, c) in scalar_triple()) {
        prop_assert_eq!(a.clone() + b.clone(), b.clone() + a.clone());
        prop_assert_eq!(
            (a.clone() + b.clone()) + c.clone(),
            a.clone() + (b.clone() + c.clone())
        );
        prop_assert_eq!(a.clone() * b.clone(), b.clone() * a.clone());
        prop_assert_eq!(
            (a.clone() * b.clone()) * c.clone(),
            a.clone() * (b.clone() * c.clone())
        );
        prop_assert_eq!(
            (a.clone() + b.clone()) * c.clone(),
            a.clone() * c.clone() + b.clone() * c.clone()
        );
        let zero = Scalar::zero(a.ring());
        let one = Scalar::one(a.ring());
        prop_assert_eq!(a.clone() + zero.clone(), a.clone());
        prop_assert_eq!(a.clone() * one, a.clone());
        prop_assert_eq!(a * zero.clone(), zero);
    }

    #[test]
    fn conjugation_is_an_involution((a, b, _c) in scalar_triple()) {
        prop_assert_eq!(a.conj().conj(), a.clone());
        prop_assert_eq!((a.clone() * b.clone()).conj(), a.conj() * b.conj());
        prop_assert_eq!((a.clone() + b.clone()).conj(), a.conj() + b.conj());
        prop_assert!(a.norm().is_real());
    }

    #[test]
    fn products_past_the_top_degree_vanish(a in scalar_in(SERIES), k in 1usize..ORDER) {
        let lam = Scalar::lambda(SERIES).unwrap();
        prop_assert!((lam.pow((ORDER - k) as u32) * a.shift_up(k)).is_zero());
    }

    #[test]
    fn sign_is_multiplicative_on_real_products(x in real_series(), y in real_series()) {
        let p = x.clone() * y.clone();
        prop_assume!(!p.is_zero());
        let expected = if x.sign().unwrap() == y.sign().unwrap() {
            Sign::Positive
        } else {
            Sign::Negative
        };
        prop_assert_eq!(p.sign().unwrap(), expected);
    }

    #[test]
    fn norm_criterion_agrees_with_brute_force(p in 1i64..=60, q in 1i64..=60) {
        let frac = q_ratio(p, q);
        match gaussian_norm_representable(&frac).unwrap() {
            Verdict::Holds(z) => {
                let back = z.conj() * z;
                prop_assert_eq!(back, Scalar::from_rational(BaseRing::Rationals, frac.clone()));
                prop_assert!(gaussian_norm_brute(&frac));
                prop_assert!(norm_brute_small(&frac).is_some());
            }
            Verdict::Fails(pr) => {
                let prime = pr.to_u64().unwrap();
                prop_assert_eq!(prime % 4, 3);
                let n = frac.numer().to_u64().unwrap();
                let d = frac.denom().to_u64().unwrap();
                let e = prime_exponent(n, prime) + prime_exponent(d, prime);
                prop_assert_eq!(e % 2, 1);
                prop_assert!(!gaussian_norm_brute(&frac));
                prop_assert!(norm_brute_small(&frac).is_none());
            }
            Verdict::Unknown(w) => prop_assert!(false, "criterion is total, got Unknown({})", w),
        }
    }

    #[test]
    fn display_parse_round_trip((a, _b, _c) in scalar_triple()) {
        let shown = a.to_string();
        prop_assert_eq!(Scalar::parse(a.ring(), &shown).unwrap(), a);
    }
}

#[test]
fn top_power_is_a_zero_divisor() {
    let lam = Scalar::lambda(SERIES).unwrap();
    let top = lam.pow(ORDER as u32 - 1);
    assert!(!top.is_zero());
    assert!((top * lam).is_zero());
}
