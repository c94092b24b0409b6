//! Exact positive-semidefiniteness decisions for hermitian matrices.
//!
//! The main engine is an outer-product LDL elimination that only divides by
//! ring units (plus exact non-unit divisions over the truncated rings when
//! they happen to be possible). Success produces a *cone certificate*
//! `H = sum_k d_k w_k w_k^*` with each `d_k > 0` in the ring order, which
//! makes positivity of `x^* H x` manifest for every vector `x`. Failure
//! produces a concrete witness vector `x` with `x^* H x < 0`. Over the
//! Gaussian rationals one of the two always happens; over a truncated
//! series ring the elimination can get stuck on nilpotent pivots, in which
//! case a bounded witness search runs and the outcome may be `Undecided`.

use crate::error::{Error, Result};
use crate::linalg::{vec_is_zero, Mat};
use crate::scalar::{q_int, BaseRing, Scalar, Sign};

/// `H = sum d_k w_k w_k^*` with every `d_k` real and positive.
pub type PsdCertificate = Vec<(Scalar, Vec<Scalar>)>;

#[derive(Clone, Debug)]
pub enum PsdOutcome {
    /// Positive semidefinite, with a sum-of-rank-ones certificate.
    Psd(PsdCertificate),
    /// Not positive semidefinite; `x^* H x` has negative sign.
    NotPsd(Vec<Scalar>),
    /// Only possible over truncated series rings.
    Undecided(String),
}

impl PsdOutcome {
    pub fn is_psd(&self) -> bool {
        matches!(self, PsdOutcome::Psd(_))
    }

    pub fn is_not_psd(&self) -> bool {
        matches!(self, PsdOutcome::NotPsd(_))
    }

    /// Re-check the stored evidence against `h` from scratch.
    pub fn verify(&self, h: &Mat) -> bool {
        match self {
            PsdOutcome::Psd(terms) => verify_certificate(h, terms),
            PsdOutcome::NotPsd(x) => {
                h.sandwich(x, x).sign().map(|s| s == Sign::Negative).unwrap_or(false)
            }
            PsdOutcome::Undecided(_) => true,
        }
    }
}

pub fn verify_certificate(h: &Mat, terms: &PsdCertificate) -> bool {
    let n = h.rows();
    let mut acc = Mat::zero(h.ring(), n, n);
    for (d, w) in terms {
        match d.sign() {
            Ok(Sign::Positive) => {}
            _ => return false,
        }
        if w.len() != n {
            return false;
        }
        let col = Mat::column(h.ring(), w.clone());
        acc = &acc + &(&col * &col.adjoint()).scale(d);
    }
    &acc == h
}

/// Decide positive semidefiniteness of a hermitian matrix, with evidence.
pub fn psd_decompose(h: &Mat) -> Result<PsdOutcome> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch("psd check needs a square matrix".into()));
    }
    if !h.is_hermitian() {
        return Err(Error::NotHermitian("matrix is not equal to its conjugate transpose".into()));
    }
    let ring = h.ring();
    let n = h.rows();
    let mut r = h.clone();
    // Recorded elimination steps: (pivot value, column vector, pivot index).
    let mut steps: Vec<(Scalar, Vec<Scalar>, usize)> = Vec::new();

    loop {
        if r.is_zero() {
            let terms = steps.into_iter().map(|(d, w, _)| (d, w)).collect::<Vec<_>>();
            debug_assert!(verify_certificate(h, &terms));
            return Ok(PsdOutcome::Psd(terms));
        }

        // Any negative diagonal entry refutes immediately.
        if let Some(p) = (0..n).find(|&p| r.at(p, p).sign() == Ok(Sign::Negative)) {
            let mut x = vec![Scalar::zero(ring); n];
            x[p] = Scalar::one(ring);
            let x = orthogonalize(ring, x, &steps);
            return Ok(finish_witness(h, x, "negative diagonal residual"));
        }

        // Unit pivot (necessarily positive at this point).
        if let Some(p) = (0..n).find(|&p| r.at(p, p).is_unit()) {
            eliminate(&mut r, &mut steps, p, None)?;
            continue;
        }

        // Over a series ring a nilpotent pivot is still usable when its whole
        // column divides exactly.
        if ring.is_series() {
            let mut eliminated = false;
            'pivot: for p in 0..n {
                let d = r.at(p, p).clone();
                if d.is_zero() {
                    continue;
                }
                let mut col = Vec::with_capacity(n);
                for i in 0..n {
                    match r.at(i, p).try_div_exact(&d) {
                        Some(q) => col.push(q),
                        None => continue 'pivot,
                    }
                }
                eliminate(&mut r, &mut steps, p, Some(col))?;
                eliminated = true;
                break;
            }
            if eliminated {
                continue;
            }
        }

        // Exactly-zero diagonal pair with a non-zero off-diagonal entry:
        // guaranteed witness via the leading coefficient.
        let mut zero_pair = None;
        'outer: for p in 0..n {
            if !r.at(p, p).is_zero() {
                continue;
            }
            for q in 0..n {
                if q != p && r.at(q, q).is_zero() && !r.at(p, q).is_zero() {
                    zero_pair = Some((p, q));
                    break 'outer;
                }
            }
        }
        if let Some((p, q)) = zero_pair {
            let c = leading_const(r.at(p, q));
            let mut x = vec![Scalar::zero(ring); n];
            x[p] = -c;
            x[q] = Scalar::one(ring);
            let x = orthogonalize(ring, x, &steps);
            return Ok(finish_witness(h, x, "zero diagonal with off-diagonal residual"));
        }

        // Stuck: only reachable over series rings (over the rationals every
        // non-zero diagonal entry is a unit, and an all-zero diagonal lands
        // in the zero-pair branch above).
        assert!(ring.is_series(), "elimination over the rationals cannot get stuck");
        if let Some(x) = bounded_witness_search(h, &r, &steps) {
            return Ok(PsdOutcome::NotPsd(x));
        }
        return Ok(PsdOutcome::Undecided(format!(
            "elimination stalled on nilpotent pivots after {} step(s) and no witness was found \
             in the bounded search",
            steps.len()
        )));
    }
}

/// One outer-product elimination step at diagonal index `p`. When `col` is
/// given it already holds the exact quotients `r[i][p] / r[p][p]`.
fn eliminate(
    r: &mut Mat,
    steps: &mut Vec<(Scalar, Vec<Scalar>, usize)>,
    p: usize,
    col: Option<Vec<Scalar>>,
) -> Result<()> {
    let n = r.rows();
    let d = r.at(p, p).clone();
    let w = match col {
        Some(c) => c,
        None => {
            let inv = d.inv()?;
            (0..n).map(|i| r.at(i, p) * &inv).collect()
        }
    };
    for i in 0..n {
        if w[i].is_zero() {
            continue;
        }
        for j in 0..n {
            if w[j].is_zero() {
                continue;
            }
            let delta = d.clone() * w[i].clone() * w[j].conj();
            *r.at_mut(i, j) -= delta;
        }
    }
    steps.push((d, w, p));
    Ok(())
}

/// Adjust `x` on the already-eliminated pivot coordinates so that
/// `w_k^* x = 0` for every recorded step; then `x^* H x = x^* R x` where `R`
/// is the current residual. The system is triangular in the pivot history,
/// so it is solved by a single backward sweep.
fn orthogonalize(
    ring: BaseRing,
    mut x: Vec<Scalar>,
    steps: &[(Scalar, Vec<Scalar>, usize)],
) -> Vec<Scalar> {
    for k in (0..steps.len()).rev() {
        let (_, w, p) = &steps[k];
        // w has a 1 at its own pivot and zeros at all earlier pivots, so
        // setting the coordinate at p removes this step's contribution
        // without disturbing later steps (already processed).
        let mut s = Scalar::zero(ring);
        for (i, xi) in x.iter().enumerate() {
            if i != *p && !xi.is_zero() && !w[i].is_zero() {
                s += w[i].conj() * xi.clone();
            }
        }
        x[*p] = -s;
    }
    x
}

fn finish_witness(h: &Mat, x: Vec<Scalar>, context: &str) -> PsdOutcome {
    let val = h.sandwich(&x, &x);
    match val.sign() {
        Ok(Sign::Negative) => PsdOutcome::NotPsd(x),
        other => unreachable!("witness construction broke ({context}): sign was {other:?}"),
    }
}

/// Leading Gaussian-rational coefficient of a non-zero scalar, as a constant
/// scalar in the same ring.
fn leading_const(s: &Scalar) -> Scalar {
    let m = s.leading_order().expect("leading_const of zero");
    Scalar::from_complex(s.ring(), s.re_coeff(m).clone(), s.im_coeff(m).clone())
}

/// Last-resort witness search over a stalled series residual. Candidates are
/// supported on a pair of non-eliminated coordinates and transferred to the
/// full matrix through `orthogonalize`; every hit is validated against `h`
/// directly, so false positives are impossible.
fn bounded_witness_search(
    h: &Mat,
    r: &Mat,
    steps: &[(Scalar, Vec<Scalar>, usize)],
) -> Option<Vec<Scalar>> {
    let ring = h.ring();
    let n = h.rows();
    let order = ring.len();
    let eliminated: Vec<usize> = steps.iter().map(|(_, _, p)| *p).collect();
    let live: Vec<usize> = (0..n).filter(|i| !eliminated.contains(i)).collect();

    let try_vec = |x: Vec<Scalar>| -> Option<Vec<Scalar>> {
        if vec_is_zero(&x) {
            return None;
        }
        let x = orthogonalize(ring, x, steps);
        if h.sandwich(&x, &x).sign() == Ok(Sign::Negative) {
            Some(x)
        } else {
            None
        }
    };

    // Single-coordinate candidates first.
    for &p in &live {
        let mut x = vec![Scalar::zero(ring); n];
        x[p] = Scalar::one(ring);
        if let Some(w) = try_vec(x) {
            return Some(w);
        }
    }

    let one = Scalar::one(ring);
    let i_unit = Scalar::i(ring);
    for &p in &live {
        for &q in &live {
            if p == q {
                continue;
            }
            let beta = r.at(p, q);
            let mut phases: Vec<Scalar> = vec![one.clone(), -one.clone(), i_unit.clone(), -i_unit.clone()];
            if !beta.is_zero() {
                let c = leading_const(beta);
                phases.push(c.conj());
                phases.push(-c.conj());
                phases.push(c.clone());
                phases.push(-c);
            }
            for j in 0..order {
                let lam_j = if j == 0 {
                    one.clone()
                } else {
                    match Scalar::lambda(ring) {
                        Ok(l) => l.pow(j as u32),
                        Err(_) => break,
                    }
                };
                for t in &phases {
                    let mut x = vec![Scalar::zero(ring); n];
                    x[q] = one.clone();
                    x[p] = -(t * &lam_j);
                    if let Some(w) = try_vec(x) {
                        return Some(w);
                    }
                }
            }
        }
    }
    None
}

/// Independent complete decision over the Gaussian rationals via the
/// characteristic polynomial: a hermitian matrix is positive semidefinite
/// iff all elementary symmetric functions of its (real) eigenvalues are
/// non-negative, i.e. iff the coefficients of `det(tI - H)` alternate in
/// sign weakly.
pub fn psd_decide_charpoly(h: &Mat) -> Result<bool> {
    if h.ring().is_series() {
        return Err(Error::PreconditionViolated(
            "characteristic-polynomial positivity test requires the rational base ring".into(),
        ));
    }
    if !h.is_hermitian() {
        return Err(Error::NotHermitian("matrix is not equal to its conjugate transpose".into()));
    }
    let coeffs = h.char_poly();
    for (k, c) in coeffs.iter().enumerate() {
        // e_{k+1} = (-1)^{k+1} c_{k+1}
        let e = if (k + 1) % 2 == 0 { c.clone() } else { -c.clone() };
        match e.sign()? {
            Sign::Negative => return Ok(false),
            _ => {}
        }
    }
    Ok(true)
}

/// Positive definiteness over the Gaussian rationals (hermitian input):
/// positive semidefinite with non-vanishing determinant.
pub fn pd_decide(h: &Mat) -> Result<bool> {
    Ok(psd_decide_charpoly(h)? && !h.det().is_zero())
}

/// Brute-force oracle for small matrices over the rationals: every
/// principal minor (all index subsets, not just leading) must be
/// non-negative. Exponential in the dimension; test use only.
pub fn psd_principal_minors_oracle(h: &Mat) -> Result<bool> {
    if h.ring().is_series() {
        return Err(Error::PreconditionViolated(
            "principal-minor oracle requires the rational base ring".into(),
        ));
    }
    if !h.is_hermitian() {
        return Err(Error::NotHermitian("matrix is not equal to its conjugate transpose".into()));
    }
    let n = h.rows();
    assert!(n <= 6, "principal-minor oracle is exponential; keep n small");
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let sub = Mat::from_fn(h.ring(), idx.len(), idx.len(), |r, c| {
            h.at(idx[r], idx[c]).clone()
        });
        if sub.det().sign()? == Sign::Negative {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Convenience wrapper used by tests: sandwich a matrix with a rational
/// integer grid of vectors looking for a violation (sound, incomplete).
pub fn grid_counterexample(h: &Mat, radius: i64) -> Option<Vec<Scalar>> {
    let ring = h.ring();
    let n = h.rows();
    let vals: Vec<i64> = (-radius..=radius).collect();
    let mut stack = vec![Vec::<Scalar>::new()];
    while let Some(prefix) = stack.pop() {
        if prefix.len() == n {
            if vec_is_zero(&prefix) {
                continue;
            }
            if h.sandwich(&prefix, &prefix).sign() == Ok(Sign::Negative) {
                return Some(prefix);
            }
            continue;
        }
        for &re in &vals {
            for &im in &vals {
                let mut next = prefix.clone();
                next.push(Scalar::from_complex(ring, q_int(re), q_int(im)));
                stack.push(next);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q_int, BaseRing};

    fn rq(v: i64) -> Scalar {
        Scalar::from_rational(BaseRing::Rationals, q_int(v))
    }

    fn ci(re: i64, im: i64) -> Scalar {
        Scalar::from_complex(BaseRing::Rationals, q_int(re), q_int(im))
    }

    #[test]
    fn positive_definite_example_gets_a_certificate() {
        let r = BaseRing::Rationals;
        let h = Mat::from_rows(r, vec![vec![rq(2), ci(1, 1)], vec![ci(1, -1), rq(2)]]);
        let out = psd_decompose(&h).unwrap();
        match &out {
            PsdOutcome::Psd(terms) => assert_eq!(terms.len(), 2),
            other => panic!("expected a certificate, got {other:?}"),
        }
        assert!(out.verify(&h));
        assert!(psd_decide_charpoly(&h).unwrap());
        assert!(pd_decide(&h).unwrap());
    }

    #[test]
    fn indefinite_example_gets_a_witness() {
        let r = BaseRing::Rationals;
        let h = Mat::from_rows(r, vec![vec![rq(1), rq(2)], vec![rq(2), rq(1)]]);
        let out = psd_decompose(&h).unwrap();
        assert!(out.is_not_psd());
        assert!(out.verify(&h));
        assert!(!psd_decide_charpoly(&h).unwrap());
    }

    #[test]
    fn zero_diagonal_with_coupling_is_refuted() {
        let r = BaseRing::Rationals;
        let h = Mat::from_rows(r, vec![vec![rq(0), ci(0, 1)], vec![ci(0, -1), rq(0)]]);
        let out = psd_decompose(&h).unwrap();
        assert!(out.is_not_psd());
        assert!(out.verify(&h));
    }

    #[test]
    fn rank_deficient_psd_matrices_still_certify(){
        let r = BaseRing::Rationals;
        // (1, i)^* outer product: rank one, PSD.
        let h = Mat::from_rows(r, vec![vec![rq(1), ci(0, -1)], vec![ci(0, 1), rq(1)]]);
        let out = psd_decompose(&h).unwrap();
        match &out {
            PsdOutcome::Psd(terms) => assert_eq!(terms.len(), 1),
            other => panic!("expected rank-one certificate, got {other:?}"),
        }
        assert!(out.verify(&h));
        assert!(psd_decide_charpoly(&h).unwrap());
        assert!(!pd_decide(&h).unwrap());
    }

    #[test]
    fn series_nilpotent_pivots_divide_out_when_possible() {
        let s = BaseRing::series(3).unwrap();
        let l = Scalar::lambda(s).unwrap();
        // lambda * (1,1)(1,1)^*: PSD with a nilpotent coefficient.
        let h = Mat::from_rows(
            s,
            vec![vec![l.clone(), l.clone()], vec![l.clone(), l.clone()]],
        );
        let out = psd_decompose(&h).unwrap();
        assert!(out.is_psd(), "got {out:?}");
        assert!(out.verify(&h));
    }

    #[test]
    fn series_order_mismatch_is_refuted_by_search() {
        let s = BaseRing::series(3).unwrap();
        let l = Scalar::lambda(s).unwrap();
        let one = Scalar::one(s);
        // diag lambda with unit coupling: x = (1,-1) gives 2*lambda - 2 < 0.
        let h = Mat::from_rows(
            s,
            vec![vec![l.clone(), one.clone()], vec![one.clone(), l.clone()]],
        );
        let out = psd_decompose(&h).unwrap();
        assert!(out.is_not_psd(), "got {out:?}");
        assert!(out.verify(&h));

        // diag lambda^2 with lambda coupling: still refutable.
        let h2 = Mat::from_rows(
            s,
            vec![vec![l.pow(2), l.clone()], vec![l.clone(), l.pow(2)]],
        );
        let out2 = psd_decompose(&h2).unwrap();
        assert!(out2.is_not_psd(), "got {out2:?}");
        assert!(out2.verify(&h2));
    }

    #[test]
    fn series_negative_tail_is_caught() {
        let s = BaseRing::series(4).unwrap();
        let l = Scalar::lambda(s).unwrap();
        // [[l, l], [l, l - l^3]] eliminates to a negative residual.
        let h = Mat::from_rows(
            s,
            vec![
                vec![l.clone(), l.clone()],
                vec![l.clone(), l.clone() - l.pow(3)],
            ],
        );
        let out = psd_decompose(&h).unwrap();
        assert!(out.is_not_psd(), "got {out:?}");
        assert!(out.verify(&h));
    }

    #[test]
    fn oracles_agree_on_small_integer_hermitians() {
        let r = BaseRing::Rationals;
        // Enumerate small 2x2 hermitian matrices [[a, b+ci], [b-ci, d]].
        for a in -2i64..=2 {
            for d in -2i64..=2 {
                for b in -2i64..=2 {
                    for c in -2i64..=2 {
                        let h = Mat::from_rows(
                            r,
                            vec![vec![rq(a), ci(b, c)], vec![ci(b, -c), rq(d)]],
                        );
                        let by_charpoly = psd_decide_charpoly(&h).unwrap();
                        let by_minors = psd_principal_minors_oracle(&h).unwrap();
                        let by_ldl = psd_decompose(&h).unwrap();
                        assert_eq!(by_charpoly, by_minors, "charpoly vs minors at {h:?}");
                        assert_eq!(by_charpoly, by_ldl.is_psd(), "charpoly vs ldl at {h:?}");
                        assert!(by_ldl.verify(&h), "evidence check at {h:?}");
                    }
                }
            }
        }
    }
}
