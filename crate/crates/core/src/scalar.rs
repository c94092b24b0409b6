//! Exact scalars: the coefficient ring of everything else in this crate.
//!
//! A scalar lives in `C = R(i)` with `i^2 = -1`, where the real part ring `R`
//! is either the rationals or the truncated polynomial ring `Q[[t]]/t^N` in a
//! formal real parameter `t`. Truncated scalars are coefficient vectors of a
//! fixed length `N`; two scalars of different truncation orders never mix
//! (that is an error, not a coercion). The truncated ring has zero divisors
//! (`t^(N-1) * t = 0`), so invertibility is a property of the classical part.
//!
//! Ordering on real scalars is asymptotic: the sign of a series is the sign
//! of its first non-zero coefficient.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational; the only number type used anywhere.
pub type Q = BigRational;

pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_ratio(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// The real coefficient ring: `Q` itself or `Q[[t]]/t^N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseRing {
    Rationals,
    /// Truncated power series with `order` coefficients `c0..c_{order-1}`.
    Series { order: usize },
}

impl BaseRing {
    pub fn series(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidOrder);
        }
        Ok(BaseRing::Series { order })
    }

    /// Number of stored coefficients per real part.
    pub fn len(&self) -> usize {
        match self {
            BaseRing::Rationals => 1,
            BaseRing::Series { order } => *order,
        }
    }

    pub fn is_series(&self) -> bool {
        matches!(self, BaseRing::Series { .. })
    }

    pub fn describe(&self) -> String {
        match self {
            BaseRing::Rationals => "Q(i)".into(),
            BaseRing::Series { order } => format!("Q(i)[[t]]/t^{order}"),
        }
    }
}

/// Sign of a real scalar under the asymptotic order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

/// An element of `R(i)`: real and imaginary coefficient vectors of length
/// `ring.len()`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Scalar {
    ring: BaseRing,
    re: Vec<Q>,
    im: Vec<Q>,
}

fn check_same_ring(a: &Scalar, b: &Scalar) {
    assert_eq!(
        a.ring,
        b.ring,
        "mixed scalar rings: {} vs {} (truncation orders never coerce)",
        a.ring.describe(),
        b.ring.describe()
    );
}

impl Scalar {
    pub fn zero(ring: BaseRing) -> Self {
        let n = ring.len();
        Scalar { ring, re: vec![Q::zero(); n], im: vec![Q::zero(); n] }
    }

    pub fn one(ring: BaseRing) -> Self {
        let mut s = Scalar::zero(ring);
        s.re[0] = Q::one();
        s
    }

    pub fn i(ring: BaseRing) -> Self {
        let mut s = Scalar::zero(ring);
        s.im[0] = Q::one();
        s
    }

    /// The deformation parameter `t`. Only exists for series rings of order
    /// at least 2 (in order 1 it would be identically zero, which is almost
    /// never what a caller means).
    pub fn lambda(ring: BaseRing) -> Result<Self> {
        match ring {
            BaseRing::Series { order } if order >= 2 => {
                let mut s = Scalar::zero(ring);
                s.re[1] = Q::one();
                Ok(s)
            }
            BaseRing::Series { .. } => Err(Error::InvalidOrder),
            BaseRing::Rationals => Err(Error::PreconditionViolated(
                "the deformation parameter only exists over a series ring".into(),
            )),
        }
    }

    pub fn from_rational(ring: BaseRing, q: Q) -> Self {
        let mut s = Scalar::zero(ring);
        s.re[0] = q;
        s
    }

    pub fn from_int(ring: BaseRing, n: i64) -> Self {
        Self::from_rational(ring, q_int(n))
    }

    pub fn from_complex(ring: BaseRing, re: Q, im: Q) -> Self {
        let mut s = Scalar::zero(ring);
        s.re[0] = re;
        s.im[0] = im;
        s
    }

    pub fn from_parts(ring: BaseRing, re: Vec<Q>, im: Vec<Q>) -> Result<Self> {
        if re.len() != ring.len() || im.len() != ring.len() {
            return Err(Error::DimensionMismatch(format!(
                "scalar needs {} coefficients per part, got {}/{}",
                ring.len(),
                re.len(),
                im.len()
            )));
        }
        Ok(Scalar { ring, re, im })
    }

    pub fn ring(&self) -> BaseRing {
        self.ring
    }

    pub fn re_coeff(&self, k: usize) -> &Q {
        &self.re[k]
    }

    pub fn im_coeff(&self, k: usize) -> &Q {
        &self.im[k]
    }

    pub fn is_zero(&self) -> bool {
        self.re.iter().all(Q::is_zero) && self.im.iter().all(Q::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self == &Scalar::one(self.ring)
    }

    pub fn is_real(&self) -> bool {
        self.im.iter().all(Q::is_zero)
    }

    /// Real and imaginary parts of the classical (order-zero) coefficient.
    pub fn classical_parts(&self) -> (Q, Q) {
        (self.re[0].clone(), self.im[0].clone())
    }

    /// The scalar with all positive-order coefficients dropped, viewed in
    /// plain `Q(i)`.
    pub fn classical(&self) -> Scalar {
        Scalar {
            ring: BaseRing::Rationals,
            re: vec![self.re[0].clone()],
            im: vec![self.im[0].clone()],
        }
    }

    /// Reinterpret a classical scalar inside another ring (constant series).
    pub fn lift_to(&self, ring: BaseRing) -> Scalar {
        assert_eq!(self.ring, BaseRing::Rationals, "lift_to expects a classical scalar");
        let mut s = Scalar::zero(ring);
        s.re[0] = self.re[0].clone();
        s.im[0] = self.im[0].clone();
        s
    }

    /// A unit of the ring: exactly the scalars with non-zero classical part.
    pub fn is_unit(&self) -> bool {
        !self.re[0].is_zero() || !self.im[0].is_zero()
    }

    /// Least `k` with a non-zero coefficient at order `k`, if any.
    pub fn leading_order(&self) -> Option<usize> {
        (0..self.ring.len()).find(|&k| !self.re[k].is_zero() || !self.im[k].is_zero())
    }

    pub fn conj(&self) -> Scalar {
        Scalar {
            ring: self.ring,
            re: self.re.clone(),
            im: self.im.iter().map(|c| -c).collect(),
        }
    }

    /// `conj(self) * self`, always real and non-negative.
    pub fn norm(&self) -> Scalar {
        self.conj() * self.clone()
    }

    pub fn scale(&self, q: &Q) -> Scalar {
        Scalar {
            ring: self.ring,
            re: self.re.iter().map(|c| c * q).collect(),
            im: self.im.iter().map(|c| c * q).collect(),
        }
    }

    /// Multiply by `t^k` (shift coefficients up, truncating).
    pub fn shift_up(&self, k: usize) -> Scalar {
        let n = self.ring.len();
        let mut s = Scalar::zero(self.ring);
        for j in 0..n.saturating_sub(k) {
            s.re[j + k] = self.re[j].clone();
            s.im[j + k] = self.im[j].clone();
        }
        s
    }

    /// Divide by `t^k` assuming all coefficients below order `k` vanish;
    /// the lost top coefficients are set to zero.
    pub fn shift_down(&self, k: usize) -> Result<Scalar> {
        let n = self.ring.len();
        for j in 0..k.min(n) {
            if !self.re[j].is_zero() || !self.im[j].is_zero() {
                return Err(Error::PreconditionViolated(format!(
                    "cannot divide by t^{k}: coefficient at order {j} is non-zero"
                )));
            }
        }
        let mut s = Scalar::zero(self.ring);
        for j in k..n {
            s.re[j - k] = self.re[j].clone();
            s.im[j - k] = self.im[j].clone();
        }
        Ok(s)
    }

    /// Asymptotic sign of a real scalar. Errors on non-real input.
    pub fn sign(&self) -> Result<Sign> {
        if !self.is_real() {
            return Err(Error::NonRealScalar(self.to_string()));
        }
        match self.leading_order() {
            None => Ok(Sign::Zero),
            Some(k) => {
                if self.re[k].is_positive() {
                    Ok(Sign::Positive)
                } else {
                    Ok(Sign::Negative)
                }
            }
        }
    }

    pub fn is_positive_real(&self) -> bool {
        self.sign() == Ok(Sign::Positive)
    }

    pub fn is_nonnegative_real(&self) -> bool {
        matches!(self.sign(), Ok(Sign::Positive) | Ok(Sign::Zero))
    }

    /// Multiplicative inverse. Over a series ring this is the geometric
    /// series lift: the classical part must be invertible, and then
    /// `1/(u(1+v)) = u^{-1} (1 - v + v^2 - ...)` truncates after `N` terms.
    pub fn inv(&self) -> Result<Scalar> {
        // 1/(x+iy) = (x - iy)/(x^2+y^2): reduce to inverting the real norm.
        let n2 = self.norm();
        if !n2.is_unit() {
            return Err(Error::NotInvertible(format!(
                "classical part of |{}|^2 vanishes",
                self
            )));
        }
        let inv_norm = invert_real_unit(&n2)?;
        Ok(self.conj() * inv_norm)
    }

    /// Exact division `self / d`, also valid when `d` is a non-unit of the
    /// series ring, provided every coefficient of `self` starts at least at
    /// the valuation of `d`. Coefficients of the quotient above `N - val(d)`
    /// are not determined by the data and are set to zero; any such choice
    /// yields the same product `d * (self/d)`.
    pub fn try_div_exact(&self, d: &Scalar) -> Option<Scalar> {
        check_same_ring(self, d);
        if d.is_zero() {
            return None;
        }
        let k = d.leading_order().unwrap();
        let d0 = d.shift_down(k).ok()?;
        let num = self.shift_down(k).ok()?;
        let q = num * d0.inv().ok()?;
        // Validate: the truncated product must reproduce self exactly.
        if &(q.clone() * d.clone()) == self {
            Some(q)
        } else {
            None
        }
    }

    pub fn pow(&self, mut e: u32) -> Scalar {
        let mut base = self.clone();
        let mut acc = Scalar::one(self.ring);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }
}

/// Invert a real unit of the ring (geometric series over series rings).
fn invert_real_unit(a: &Scalar) -> Result<Scalar> {
    debug_assert!(a.is_real());
    if a.re[0].is_zero() {
        return Err(Error::NotInvertible("classical part vanishes".into()));
    }
    match a.ring {
        BaseRing::Rationals => {
            Ok(Scalar::from_rational(BaseRing::Rationals, a.re[0].recip()))
        }
        BaseRing::Series { order } => {
            let c0_inv = a.re[0].recip();
            // v := a/c0 - 1 has zero constant term; sum the geometric series.
            let mut v = a.scale(&c0_inv);
            v.re[0] -= Q::one();
            let mut acc = Scalar::one(a.ring);
            let mut pw = Scalar::one(a.ring);
            for _ in 1..order {
                pw = pw * (-v.clone());
                if pw.is_zero() {
                    break;
                }
                acc += pw.clone();
            }
            Ok(acc.scale(&c0_inv))
        }
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(mut self, rhs: Scalar) -> Scalar {
        check_same_ring(&self, &rhs);
        for k in 0..self.ring.len() {
            self.re[k] += &rhs.re[k];
            self.im[k] += &rhs.im[k];
        }
        self
    }
}

impl AddAssign for Scalar {
    fn add_assign(&mut self, rhs: Scalar) {
        check_same_ring(self, &rhs);
        for k in 0..self.ring.len() {
            self.re[k] += &rhs.re[k];
            self.im[k] += &rhs.im[k];
        }
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(mut self, rhs: Scalar) -> Scalar {
        check_same_ring(&self, &rhs);
        for k in 0..self.ring.len() {
            self.re[k] -= &rhs.re[k];
            self.im[k] -= &rhs.im[k];
        }
        self
    }
}

impl SubAssign for Scalar {
    fn sub_assign(&mut self, rhs: Scalar) {
        check_same_ring(self, &rhs);
        for k in 0..self.ring.len() {
            self.re[k] -= &rhs.re[k];
            self.im[k] -= &rhs.im[k];
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar {
            ring: self.ring,
            re: self.re.iter().map(|c| -c).collect(),
            im: self.im.iter().map(|c| -c).collect(),
        }
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        check_same_ring(&self, &rhs);
        let n = self.ring.len();
        let mut re = vec![Q::zero(); n];
        let mut im = vec![Q::zero(); n];
        // Truncated convolution of complex coefficient vectors.
        for j in 0..n {
            let (aj_re, aj_im) = (&self.re[j], &self.im[j]);
            if aj_re.is_zero() && aj_im.is_zero() {
                continue;
            }
            for k in 0..n - j {
                let (bk_re, bk_im) = (&rhs.re[k], &rhs.im[k]);
                if bk_re.is_zero() && bk_im.is_zero() {
                    continue;
                }
                re[j + k] += aj_re * bk_re - aj_im * bk_im;
                im[j + k] += aj_re * bk_im + aj_im * bk_re;
            }
        }
        Scalar { ring: self.ring, re, im }
    }
}

impl MulAssign for Scalar {
    fn mul_assign(&mut self, rhs: Scalar) {
        *self = self.clone() * rhs;
    }
}

impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &'a Scalar) -> Scalar {
        self.clone() * rhs.clone()
    }
}

fn fmt_q(q: &Q) -> String {
    if q.denom().is_one() {
        format!("{}", q.numer())
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn fmt_part(coeffs: &[Q], series: bool) -> String {
    if series {
        let inner: Vec<String> = coeffs.iter().map(fmt_q).collect();
        format!("[{}]", inner.join(", "))
    } else {
        fmt_q(&coeffs[0])
    }
}

impl fmt::Display for Scalar {
    /// Exact decimal-free rendering: `p/q`, `p/q+r/s*i`, and for series
    /// `[c0, c1, ...]` per part.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let series = self.ring.is_series();
        let re_zero = self.re.iter().all(Q::is_zero);
        let im_zero = self.im.iter().all(Q::is_zero);
        if im_zero {
            return write!(f, "{}", fmt_part(&self.re, series));
        }
        let im_str = format!("{}*i", fmt_part(&self.im, series));
        if re_zero {
            return write!(f, "{im_str}");
        }
        // Fold the sign of a plain rational imaginary part into the joiner.
        if !series && self.im[0].is_negative() {
            let mag: Vec<Q> = self.im.iter().map(|c| -c).collect();
            return write!(f, "{}-{}*i", fmt_part(&self.re, series), fmt_part(&mag, series));
        }
        write!(f, "{}+{im_str}", fmt_part(&self.re, series))
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    s.parse::<Q>().map_err(|e| Error::Parse(format!("bad rational {s:?}: {e}")))
}

fn parse_part(s: &str, ring: BaseRing) -> Result<Vec<Q>> {
    let s = s.trim();
    let n = ring.len();
    if let Some(body) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        let coeffs: Vec<Q> = body
            .split(',')
            .map(parse_q)
            .collect::<Result<_>>()?;
        if coeffs.len() != n {
            return Err(Error::Parse(format!(
                "series part {s:?} has {} coefficients, expected {n}",
                coeffs.len()
            )));
        }
        Ok(coeffs)
    } else {
        let mut v = vec![Q::zero(); n];
        v[0] = parse_q(s)?;
        Ok(v)
    }
}

/// Split "re+im*i" / "re-im*i" / "im*i" / "re" at the top-level joiner,
/// ignoring signs that start the string or sit inside brackets.
fn split_complex(s: &str) -> (Option<&str>, Option<(&str, char)>) {
    let s = s.trim();
    if let Some(idx) = find_top_level_sign(s) {
        let (re, rest) = s.split_at(idx);
        let sign = rest.chars().next().unwrap();
        (Some(re), Some((&rest[1..], sign)))
    } else if s.ends_with("*i") {
        (None, Some((s, '+')))
    } else {
        (Some(s), None)
    }
}

fn find_top_level_sign(s: &str) -> Option<usize> {
    let bytes = s.as_bytes();
    let mut depth = 0usize;
    for (idx, &b) in bytes.iter().enumerate() {
        match b {
            b'[' => depth += 1,
            b']' => depth = depth.saturating_sub(1),
            b'+' | b'-' if depth == 0 && idx > 0 => {
                // A sign following 'e'/'E' would be scientific notation,
                // which we never emit; treat every interior sign as joiner
                // only when an "*i" tail exists.
                if s[idx..].trim_end().ends_with("*i") {
                    return Some(idx);
                }
            }
            _ => {}
        }
    }
    None
}

impl Scalar {
    /// Parse the exact rendering produced by `Display`.
    pub fn parse(ring: BaseRing, s: &str) -> Result<Scalar> {
        let (re_s, im_s) = split_complex(s);
        let re = match re_s {
            Some(r) => parse_part(r, ring)?,
            None => vec![Q::zero(); ring.len()],
        };
        let im = match im_s {
            Some((body, sign)) => {
                let body = body
                    .trim()
                    .strip_suffix("*i")
                    .ok_or_else(|| Error::Parse(format!("imaginary part {body:?} lacks *i")))?;
                let mut v = parse_part(body, ring)?;
                if sign == '-' {
                    for c in &mut v {
                        *c = -c.clone();
                    }
                }
                v
            }
            None => vec![Q::zero(); ring.len()],
        };
        Scalar::from_parts(ring, re, im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(order: usize) -> BaseRing {
        BaseRing::series(order).unwrap()
    }

    #[test]
    fn rational_arithmetic_basics() {
        let r = BaseRing::Rationals;
        let a = Scalar::from_complex(r, q_ratio(2, 3), q_int(1));
        let b = Scalar::from_complex(r, q_int(-1), q_ratio(1, 2));
        assert_eq!(a.clone() + b.clone() - b.clone(), a);
        let prod = a.clone() * b.clone();
        // (2/3 + i)(-1 + i/2) = -2/3 - 1/2 + i(1/3 - 1) = -7/6 - (2/3)i
        assert_eq!(prod, Scalar::from_complex(r, q_ratio(-7, 6), q_ratio(-2, 3)));
        assert_eq!(a.conj().conj(), a);
        let n = a.norm();
        assert!(n.is_real());
        assert_eq!(n.sign().unwrap(), Sign::Positive);
    }

    #[test]
    fn units_invert_exactly() {
        let r = BaseRing::Rationals;
        let a = Scalar::from_complex(r, q_ratio(3, 7), q_ratio(-5, 2));
        let inv = a.inv().unwrap();
        assert!((a * inv).is_one());

        let s = series(4);
        // 1 + lambda inverts to the truncated geometric series.
        let u = Scalar::one(s) + Scalar::lambda(s).unwrap();
        let inv = u.inv().unwrap();
        let mut expect = Scalar::zero(s);
        for k in 0..4 {
            let term = Scalar::lambda(s).unwrap().pow(k);
            expect = if k % 2 == 0 { expect + term } else { expect - term };
        }
        assert_eq!(inv, expect);
        assert!((u * inv).is_one());
    }

    #[test]
    fn nilpotents_are_not_units() {
        let s = series(3);
        let l = Scalar::lambda(s).unwrap();
        assert!(!l.is_unit());
        assert!(l.inv().is_err());
        // Truncation produces genuine zero divisors.
        assert!((l.pow(2) * l.clone()).is_zero());
    }

    #[test]
    fn asymptotic_sign_looks_at_the_leading_coefficient() {
        let s = series(3);
        let l = Scalar::lambda(s).unwrap();
        // -2*lambda + 7*lambda^2 is negative for small positive lambda.
        let v = l.scale(&q_int(-2)) + l.pow(2).scale(&q_int(7));
        assert_eq!(v.sign().unwrap(), Sign::Negative);
        assert_eq!((-v).sign().unwrap(), Sign::Positive);
        assert_eq!(Scalar::zero(s).sign().unwrap(), Sign::Zero);
        // i has no sign.
        assert!(Scalar::i(s).sign().is_err());
    }

    #[test]
    #[should_panic(expected = "mixed scalar rings")]
    fn mixing_truncation_orders_panics() {
        let a = Scalar::one(series(2));
        let b = Scalar::one(series(3));
        let _ = a + b;
    }

    #[test]
    fn display_parse_round_trip() {
        let r = BaseRing::Rationals;
        let samples = vec![
            Scalar::zero(r),
            Scalar::one(r),
            Scalar::i(r),
            -Scalar::i(r),
            Scalar::from_complex(r, q_ratio(-7, 3), q_int(0)),
            Scalar::from_complex(r, q_ratio(1, 2), q_ratio(-9, 4)),
            Scalar::from_complex(r, q_int(0), q_ratio(3, 5)),
        ];
        for s in samples {
            let text = s.to_string();
            assert_eq!(Scalar::parse(r, &text).unwrap(), s, "round trip of {text}");
        }
        let t = series(3);
        let l = Scalar::lambda(t).unwrap();
        let samples = vec![
            Scalar::zero(t),
            l.clone(),
            Scalar::one(t) - l.clone() + l.pow(2).scale(&q_ratio(5, 2)),
            Scalar::i(t).scale(&q_ratio(-1, 3)) + l.clone(),
        ];
        for s in samples {
            let text = s.to_string();
            assert_eq!(Scalar::parse(t, &text).unwrap(), s, "round trip of {text}");
        }
    }

    #[test]
    fn exact_division_with_valuation_shift() {
        let s = series(4);
        let l = Scalar::lambda(s).unwrap();
        let a = l.pow(2).scale(&q_int(6)); // 6*lambda^2
        let d = l.scale(&q_int(2)); // 2*lambda
        let q = a.try_div_exact(&d).unwrap();
        assert_eq!(q, l.scale(&q_int(3)));
        // 1 is not divisible by lambda.
        assert!(Scalar::one(s).try_div_exact(&l).is_none());
    }

    #[test]
    fn classical_and_lift() {
        let s = series(3);
        let l = Scalar::lambda(s).unwrap();
        let a = Scalar::from_complex(s, q_int(2), q_ratio(1, 2)) + l.clone();
        let (re, im) = a.classical_parts();
        assert_eq!(re, q_int(2));
        assert_eq!(im, q_ratio(1, 2));
        let c = Scalar::from_complex(BaseRing::Rationals, q_int(5), q_int(-1));
        let lifted = c.lift_to(s);
        assert_eq!(lifted.ring(), s);
        assert_eq!(lifted.classical_parts(), (q_int(5), q_int(-1)));
    }
}
