//! Deterministic random generators for sampling-based certifiers and tests.
//!
//! Everything is driven by a seeded ChaCha stream, so a run is reproducible
//! from its seed alone. The generators produce exact data: rationals with
//! bounded numerators, Cayley-transform unitaries, conjugated idempotents,
//! and hermitian projections of the form `V (V^* V)^{-1} V^*`.

use crate::algebra::AlgebraRef;
use crate::amat::{AElt, AMat};
use crate::linalg::Mat;
use crate::scalar::{BaseRing, Q, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub struct Sampler {
    rng: ChaCha12Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha12Rng::seed_from_u64(seed) }
    }

    pub fn int(&mut self, bound: i64) -> i64 {
        self.rng.gen_range(-bound..=bound)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub fn rational(&mut self, bound: i64) -> Q {
        let num = self.int(bound);
        let den = self.rng.gen_range(1..=bound.max(1));
        Q::new(num.into(), den.into())
    }

    /// A scalar with small rational real and imaginary parts. Over a series
    /// ring every order below the truncation gets its own coefficients.
    pub fn scalar(&mut self, ring: BaseRing, bound: i64) -> Scalar {
        match ring {
            BaseRing::Rationals => {
                Scalar::from_complex(ring, self.rational(bound), self.rational(bound))
            }
            BaseRing::Series { order } => {
                let lambda = Scalar::lambda(ring).expect("series ring");
                let mut acc = Scalar::zero(ring);
                let mut pw = Scalar::one(ring);
                for _ in 0..order {
                    let c = Scalar::from_complex(ring, self.rational(bound), self.rational(bound));
                    acc += &pw * &c;
                    pw = &pw * &lambda;
                }
                acc
            }
        }
    }

    pub fn element(&mut self, alg: &AlgebraRef, bound: i64) -> AElt {
        (0..alg.dim()).map(|_| self.scalar(alg.ring(), bound)).collect()
    }

    pub fn hermitian_element(&mut self, alg: &AlgebraRef, bound: i64) -> AElt {
        let a = self.element(alg, bound);
        let s = alg.star(&a);
        a.iter().zip(&s).map(|(x, y)| x.clone() + y.clone()).collect()
    }

    pub fn matrix(&mut self, ring: BaseRing, rows: usize, cols: usize, bound: i64) -> Mat {
        Mat::from_fn(ring, rows, cols, |_, _| self.scalar(ring, bound))
    }

    pub fn hermitian_matrix(&mut self, ring: BaseRing, n: usize, bound: i64) -> Mat {
        let a = self.matrix(ring, n, n, bound);
        &a + &a.adjoint()
    }

    pub fn invertible_matrix(&mut self, ring: BaseRing, n: usize, bound: i64) -> Mat {
        loop {
            let mut a = self.matrix(ring, n, n, bound);
            // Bias towards invertibility; the loop still guards exactly.
            for i in 0..n {
                a.set(i, i, a.at(i, i).clone() + Scalar::from_rational(ring, Q::new(1.into(), 1.into())));
            }
            if let Ok(Some(_)) = a.inverse() {
                return a;
            }
        }
    }

    /// A random idempotent `S D S^{-1}` with `D` a 0/1 diagonal of the
    /// given rank; generally not hermitian.
    pub fn idempotent_matrix(&mut self, ring: BaseRing, n: usize, rank: usize, bound: i64) -> Mat {
        let s = self.invertible_matrix(ring, n, bound);
        let sinv = s.inverse().expect("checked").expect("checked");
        let mut d = Mat::zero(ring, n, n);
        for i in 0..rank.min(n) {
            d.set(i, i, Scalar::one(ring));
        }
        &(&s * &d) * &sinv
    }

    /// A hermitian projection `V (V^* V)^{-1} V^*` of the given rank.
    pub fn projection_matrix(&mut self, ring: BaseRing, n: usize, rank: usize, bound: i64) -> Mat {
        let r = rank.min(n);
        if r == 0 {
            return Mat::zero(ring, n, n);
        }
        loop {
            let v = self.matrix(ring, n, r, bound);
            let g = &v.adjoint() * &v;
            let Ok(Some(ginv)) = g.inverse() else { continue };
            return &(&v * &ginv) * &v.adjoint();
        }
    }

    /// A rational unitary via the Cayley transform `(1 - K)(1 + K)^{-1}`
    /// of a random anti-hermitian `K`; exact and always defined because
    /// `1 + K` has no kernel for anti-hermitian `K` over the rationals.
    pub fn unitary_matrix(&mut self, ring: BaseRing, n: usize, bound: i64) -> Mat {
        let a = self.matrix(ring, n, n, bound);
        let k = &a - &a.adjoint();
        let id = Mat::identity(ring, n);
        let plus = &id + &k;
        let inv = plus
            .inverse()
            .expect("solve")
            .expect("1 + K is invertible for anti-hermitian K");
        &(&id - &k) * &inv
    }

    pub fn amat(&mut self, alg: &AlgebraRef, rows: usize, cols: usize, bound: i64) -> AMat {
        AMat::from_fn(alg.clone(), rows, cols, |_, _| self.element(alg, bound))
    }

    pub fn hermitian_amat(&mut self, alg: &AlgebraRef, n: usize, bound: i64) -> AMat {
        let a = self.amat(alg, n, n, bound);
        a.add(&a.star())
    }

    /// `1 + A^* A`: positive and, where the unit-plus-square inversion
    /// property holds, invertible.
    pub fn unit_plus_square(&mut self, alg: &AlgebraRef, n: usize, bound: i64) -> AMat {
        let a = self.amat(alg, n, n, bound);
        AMat::identity(alg.clone(), n).add(&a.star().mul(&a))
    }
}
