//! Monomials `C * r^a * prod_j ln_j(r)^{b_j}` over iterated logarithms,
//! finite sums of them, and the exact operations the eigenfunction
//! identities are certified in: evaluation, differentiation, asymptotic
//! comparison, and the Bertrand convergence test.

use super::scalar::ExactScalar;
use serde::{Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;

/// Relative safety margin past the `e_n` domain boundary demanded for any
/// floating evaluation.
pub const DOMAIN_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LogAlgError {
    #[error("iterated exponential e_{0} exceeds double-precision range")]
    OverflowDepth(u32),
    #[error("r = {r} outside domain: need r > {min}")]
    Domain { r: f64, min: f64 },
}

/// Iterated exponential `e_n`: `e_0 = 0`, `e_1 = e`, `e_{n+1} = e^{e_n}`.
/// `e_4` overflows a double.
pub fn iter_exp(n: u32) -> Result<f64, LogAlgError> {
    if n >= 4 {
        return Err(LogAlgError::OverflowDepth(n));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let mut x = std::f64::consts::E;
    for _ in 1..n {
        x = x.exp();
    }
    Ok(x)
}

/// Iterated logarithm `ln_n(r)`, defined and positive for `r > e_n`.
pub fn iter_log(n: u32, r: f64) -> Result<f64, LogAlgError> {
    let min = iter_exp(n)?;
    if !(r > min * (1.0 + DOMAIN_MARGIN)) || (min == 0.0 && r <= 0.0) {
        return Err(LogAlgError::Domain { r, min });
    }
    let mut x = r;
    for _ in 0..n {
        x = x.ln();
    }
    Ok(x)
}

/// Successive `ln_1(r) .. ln_depth(r)`; caller guarantees the domain.
fn log_chain(r: f64, depth: usize) -> Result<Vec<f64>, LogAlgError> {
    let min = iter_exp(depth as u32)?;
    if !(r > min * (1.0 + DOMAIN_MARGIN)) || r <= 0.0 {
        return Err(LogAlgError::Domain { r, min });
    }
    let mut out = Vec::with_capacity(depth);
    let mut x = r;
    for _ in 0..depth {
        x = x.ln();
        out.push(x);
    }
    Ok(out)
}

/// `C * r^a * prod_j ln_j(r)^{b_j}`. Trailing zero log exponents are
/// trimmed, so `depth()` is canonical; the domain of validity is
/// `r > e_depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogMonomial {
    coeff: ExactScalar,
    rpow: ExactScalar,
    logpows: Vec<ExactScalar>,
}

impl LogMonomial {
    pub fn new(coeff: ExactScalar, rpow: ExactScalar, mut logpows: Vec<ExactScalar>) -> Self {
        while logpows.last().is_some_and(|b| b.is_zero()) {
            logpows.pop();
        }
        LogMonomial { coeff, rpow, logpows }
    }

    /// `C * r^a` with no logarithmic factors.
    pub fn power(coeff: ExactScalar, rpow: ExactScalar) -> Self {
        LogMonomial::new(coeff, rpow, Vec::new())
    }

    pub fn constant(coeff: ExactScalar) -> Self {
        LogMonomial::power(coeff, ExactScalar::zero())
    }

    pub fn coeff(&self) -> &ExactScalar {
        &self.coeff
    }

    pub fn rpow(&self) -> &ExactScalar {
        &self.rpow
    }

    pub fn logpows(&self) -> &[ExactScalar] {
        &self.logpows
    }

    pub fn depth(&self) -> usize {
        self.logpows.len()
    }

    /// Minimal radius `e_depth` below which the monomial is undefined.
    pub fn domain_min(&self) -> Result<f64, LogAlgError> {
        iter_exp(self.depth() as u32)
    }

    /// Sign and natural log of the absolute value at `r`.
    pub fn eval_log(&self, r: f64) -> Result<(i8, f64), LogAlgError> {
        if self.coeff.is_zero() {
            return Ok((0, f64::NEG_INFINITY));
        }
        let logs = log_chain(r, self.depth())?;
        let mut ln_abs = self.coeff.abs().to_f64().ln() + self.rpow.to_f64() * r.ln();
        for (b, l) in self.logpows.iter().zip(&logs) {
            ln_abs += b.to_f64() * l.ln();
        }
        Ok((self.coeff.signum(), ln_abs))
    }

    pub fn eval(&self, r: f64) -> Result<f64, LogAlgError> {
        let (s, ln_abs) = self.eval_log(r)?;
        Ok(s as f64 * ln_abs.exp())
    }

    /// Exponents compared by eventual pointwise dominance as r -> inf:
    /// `r^a` first, then log exponents lexicographically (padded with 0).
    pub fn dominance_cmp(&self, other: &Self) -> Ordering {
        match self.rpow.cmp(&other.rpow) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let zero = ExactScalar::zero();
        let n = self.logpows.len().max(other.logpows.len());
        for j in 0..n {
            let a = self.logpows.get(j).unwrap_or(&zero);
            let b = other.logpows.get(j).unwrap_or(&zero);
            match a.cmp(b) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        Ordering::Equal
    }

    /// Same `(rpow, logpows)` exponent pair.
    pub fn same_shape(&self, other: &Self) -> bool {
        self.dominance_cmp(other) == Ordering::Equal
    }

    fn mul(&self, other: &Self) -> Self {
        let zero = ExactScalar::zero();
        let n = self.logpows.len().max(other.logpows.len());
        let logpows = (0..n)
            .map(|j| {
                self.logpows.get(j).unwrap_or(&zero) + other.logpows.get(j).unwrap_or(&zero)
            })
            .collect();
        LogMonomial::new(&self.coeff * &other.coeff, &self.rpow + &other.rpow, logpows)
    }
}

/// Eventual sign of a log-polynomial as r -> inf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
    Zero,
}

/// Finite sum of log-monomials in canonical form: no repeated exponent
/// pair, no zero coefficients, terms sorted by descending dominance.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPolynomial {
    terms: Vec<LogMonomial>,
}

impl LogPolynomial {
    pub fn zero() -> Self {
        LogPolynomial { terms: Vec::new() }
    }

    pub fn from_terms(terms: Vec<LogMonomial>) -> Self {
        let mut p = LogPolynomial { terms };
        p.normalize();
        p
    }

    pub fn monomial(m: LogMonomial) -> Self {
        LogPolynomial::from_terms(vec![m])
    }

    pub fn terms(&self) -> &[LogMonomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximal log depth appearing in any term.
    pub fn depth(&self) -> usize {
        self.terms.iter().map(LogMonomial::depth).max().unwrap_or(0)
    }

    pub fn domain_min(&self) -> Result<f64, LogAlgError> {
        iter_exp(self.depth() as u32)
    }

    fn normalize(&mut self) {
        self.terms
            .sort_by(|a, b| b.dominance_cmp(a).then(Ordering::Equal));
        let mut merged: Vec<LogMonomial> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            match merged.last_mut() {
                Some(last) if last.same_shape(&t) => {
                    last.coeff = &last.coeff + &t.coeff;
                }
                _ => merged.push(t),
            }
        }
        merged.retain(|t| !t.coeff.is_zero());
        self.terms = merged;
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        LogPolynomial::from_terms(terms)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&ExactScalar::from_int(-1)))
    }

    pub fn scale(&self, s: &ExactScalar) -> Self {
        LogPolynomial::from_terms(
            self.terms
                .iter()
                .map(|t| LogMonomial::new(&t.coeff * s, t.rpow.clone(), t.logpows.clone()))
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.mul(b));
            }
        }
        LogPolynomial::from_terms(terms)
    }

    /// Direct floating evaluation; underflows to zero where terms do.
    pub fn eval(&self, r: f64) -> Result<f64, LogAlgError> {
        // validate against the maximal depth even if some terms are shallower
        let _ = log_chain(r, self.depth())?;
        let mut acc = 0.0;
        for t in &self.terms {
            acc += t.eval(r)?;
        }
        Ok(acc)
    }

    /// Underflow-safe evaluation: sign and log of |value|, combined over
    /// terms by shifting out the largest log magnitude.
    pub fn eval_log(&self, r: f64) -> Result<(i8, f64), LogAlgError> {
        let _ = log_chain(r, self.depth())?;
        let mut parts = Vec::with_capacity(self.terms.len());
        let mut max_ln = f64::NEG_INFINITY;
        for t in &self.terms {
            let (s, ln_abs) = t.eval_log(r)?;
            if s != 0 && ln_abs > max_ln {
                max_ln = ln_abs;
            }
            parts.push((s, ln_abs));
        }
        if max_ln == f64::NEG_INFINITY {
            return Ok((0, f64::NEG_INFINITY));
        }
        let mut acc = 0.0;
        for (s, ln_abs) in parts {
            if s != 0 {
                acc += s as f64 * (ln_abs - max_ln).exp();
            }
        }
        if acc == 0.0 {
            return Ok((0, f64::NEG_INFINITY));
        }
        Ok((if acc > 0.0 { 1 } else { -1 }, max_ln + acc.abs().ln()))
    }

    /// Sign of the dominant term's coefficient; `Zero` iff the polynomial
    /// is empty. For log-monomial sums this is the eventual pointwise sign.
    pub fn asymptotic_sign(&self) -> Sign {
        match self.terms.first() {
            None => Sign::Zero,
            Some(t) if t.coeff.is_positive() => Sign::Positive,
            _ => Sign::Negative,
        }
    }

    /// Exact derivative in r. A monomial differentiates to
    /// `a r^{a-1} prod ln^b + sum_j b_j r^{a-1} ln_j^{b_j - 1}
    ///  prod_{k<j} ln_k^{-1} prod_{l != j} ln_l^{b_l}`.
    pub fn differentiate(&self) -> Self {
        let one = ExactScalar::one();
        let mut out = Vec::new();
        for t in &self.terms {
            let rpow = &t.rpow - &one;
            if !t.rpow.is_zero() {
                out.push(LogMonomial::new(
                    &t.coeff * &t.rpow,
                    rpow.clone(),
                    t.logpows.clone(),
                ));
            }
            for j in 0..t.logpows.len() {
                if t.logpows[j].is_zero() {
                    continue;
                }
                let mut logpows = t.logpows.clone();
                logpows[j] = &logpows[j] - &one;
                for lp in logpows.iter_mut().take(j) {
                    *lp = &*lp - &one;
                }
                out.push(LogMonomial::new(
                    &t.coeff * &t.logpows[j],
                    rpow.clone(),
                    logpows,
                ));
            }
        }
        LogPolynomial::from_terms(out)
    }
}

impl Serialize for LogPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for LogPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", super::text::format_poly(self))
    }
}

/// Logarithmic derivative `psi'/psi` of a monomial, itself a
/// log-polynomial: `a/r + sum_j b_j / (r prod_{k<=j} ln_k)`.
pub fn log_derivative(psi: &LogMonomial) -> LogPolynomial {
    let minus_one = ExactScalar::from_int(-1);
    let mut terms = Vec::new();
    if !psi.rpow().is_zero() {
        terms.push(LogMonomial::power(psi.rpow().clone(), minus_one.clone()));
    }
    for (j, b) in psi.logpows().iter().enumerate() {
        if b.is_zero() {
            continue;
        }
        let logpows = vec![minus_one.clone(); j + 1];
        terms.push(LogMonomial::new(b.clone(), minus_one.clone(), logpows));
    }
    LogPolynomial::from_terms(terms)
}

/// `Delta psi / psi` for the radial Laplacian in dimension d, computed
/// exactly: with L = psi'/psi, the ratio is L' + L^2 + (d-1)/r * L.
pub fn radial_laplacian_ratio(psi: &LogMonomial, d: u32) -> LogPolynomial {
    assert!(!psi.coeff().is_zero(), "zero monomial");
    let l = log_derivative(psi);
    let inv_r = LogPolynomial::monomial(LogMonomial::power(
        ExactScalar::from_int(d as i64 - 1),
        ExactScalar::from_int(-1),
    ));
    l.differentiate().add(&l.mul(&l)).add(&inv_r.mul(&l))
}

/// Bertrand criterion: does `int^inf r^a prod_j ln_j(r)^{b_j} dr`
/// converge? Yes iff a < -1, or a = -1 and the first b_j differing from
/// -1 satisfies b_j < -1. With a = -1 and every b_j = -1 (including an
/// empty sequence) it diverges.
pub fn integral_converges(a: &ExactScalar, b: &[ExactScalar]) -> bool {
    let minus_one = ExactScalar::from_int(-1);
    match a.cmp(&minus_one) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => {
            for bj in b {
                match bj.cmp(&minus_one) {
                    Ordering::Less => return true,
                    Ordering::Greater => return false,
                    Ordering::Equal => {}
                }
            }
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn es(n: i64, d: i64) -> ExactScalar {
        ExactScalar::new(n, d)
    }

    #[test]
    fn iter_exp_values() {
        assert_eq!(iter_exp(0).unwrap(), 0.0);
        assert!((iter_exp(1).unwrap() - std::f64::consts::E).abs() < 1e-15);
        assert!((iter_exp(3).unwrap() - 3_814_279.104_760_22).abs() < 1e-5);
        assert!(matches!(iter_exp(4), Err(LogAlgError::OverflowDepth(4))));
    }

    #[test]
    fn iter_log_values() {
        let e = std::f64::consts::E;
        assert!((iter_log(1, e * 1.000001).unwrap() - 1.0).abs() < 1e-5);
        // boundary must be strictly exceeded
        assert!(matches!(iter_log(1, e), Err(LogAlgError::Domain { .. })));
        let e2 = iter_exp(2).unwrap();
        assert!(matches!(iter_log(2, e2), Err(LogAlgError::Domain { .. })));
        let e3 = iter_exp(3).unwrap();
        assert!((iter_log(2, e3).unwrap() - e).abs() < 1e-12);
    }

    #[test]
    fn eval_simple_power() {
        let p = LogPolynomial::monomial(LogMonomial::power(es(1, 1), es(-2, 1)));
        assert!((p.eval(10.0).unwrap() - 0.01).abs() < 1e-17);
    }

    #[test]
    fn eval_log_matches_direct() {
        // psi^l_{0,1} in d=3 at r = 2 e_1
        let m = LogMonomial::new(es(1, 1), es(-3, 2), vec![es(-1, 2)]);
        let r = 2.0 * std::f64::consts::E;
        let direct = m.eval(r).unwrap();
        let (s, ln_abs) = m.eval_log(r).unwrap();
        assert_eq!(s, 1);
        assert!((s as f64 * ln_abs.exp() - direct).abs() <= 1e-14 * direct.abs());
    }

    #[test]
    fn cancelling_terms_normalize_to_zero() {
        let c = es(5, 7);
        let p = LogPolynomial::from_terms(vec![
            LogMonomial::power(c.clone(), es(-2, 1)),
            LogMonomial::power(-c, es(-2, 1)),
        ]);
        assert!(p.is_zero());
        assert_eq!(p.eval(10.0).unwrap(), 0.0);
    }

    #[test]
    fn mul_adds_exponents() {
        let m = LogPolynomial::monomial(LogMonomial::new(es(1, 1), es(-1, 1), vec![es(-1, 1)]));
        let sq = m.mul(&m);
        let expect =
            LogPolynomial::monomial(LogMonomial::new(es(1, 1), es(-2, 1), vec![es(-2, 1)]));
        assert_eq!(sq, expect);
    }

    #[test]
    fn derivative_basics() {
        // d/dr r^2 = 2r
        let p = LogPolynomial::monomial(LogMonomial::power(es(1, 1), es(2, 1)));
        let expect = LogPolynomial::monomial(LogMonomial::power(es(2, 1), es(1, 1)));
        assert_eq!(p.differentiate(), expect);
        // d/dr ln_1 = 1/r
        let p = LogPolynomial::monomial(LogMonomial::new(es(1, 1), es(0, 1), vec![es(1, 1)]));
        let expect = LogPolynomial::monomial(LogMonomial::power(es(1, 1), es(-1, 1)));
        assert_eq!(p.differentiate(), expect);
        // d/dr ln_2 = 1/(r ln_1)
        let p =
            LogPolynomial::monomial(LogMonomial::new(es(1, 1), es(0, 1), vec![es(0, 1), es(1, 1)]));
        let expect = LogPolynomial::monomial(LogMonomial::new(
            es(1, 1),
            es(-1, 1),
            vec![es(-1, 1)],
        ));
        assert_eq!(p.differentiate(), expect);
    }

    #[test]
    fn laplacian_ratio_examples() {
        // psi = r^{-3/2}, d = 3: (3/4) r^{-2}
        let psi = LogMonomial::power(es(1, 1), es(-3, 2));
        let expect = LogPolynomial::monomial(LogMonomial::power(es(3, 4), es(-2, 1)));
        assert_eq!(radial_laplacian_ratio(&psi, 3), expect);
        // constant is harmonic
        let c = LogMonomial::constant(es(2, 1));
        assert!(radial_laplacian_ratio(&c, 5).is_zero());
        // psi = r^{-(c+d)/2} with c=0: d(4-d)/4 r^{-2}
        for d in 1..=5u32 {
            let psi = LogMonomial::power(es(1, 1), es(-(d as i64), 2));
            let coeff = es((d as i64) * (4 - d as i64), 4);
            let expect = if coeff.is_zero() {
                LogPolynomial::zero()
            } else {
                LogPolynomial::monomial(LogMonomial::power(coeff, es(-2, 1)))
            };
            assert_eq!(radial_laplacian_ratio(&psi, d), expect);
        }
    }

    #[test]
    fn asymptotic_sign_ordering() {
        let r2 = LogMonomial::power(es(1, 1), es(-2, 1));
        let r3 = LogMonomial::power(es(-1, 1), es(-3, 1));
        let p = LogPolynomial::from_terms(vec![r2.clone(), r3]);
        assert_eq!(p.asymptotic_sign(), Sign::Positive);

        let corrected = LogMonomial::new(es(1, 1), es(-2, 1), vec![es(-1, 1)]);
        let neg = LogMonomial::power(es(-1, 1), es(-2, 1));
        let p = LogPolynomial::from_terms(vec![corrected, neg]);
        assert_eq!(p.asymptotic_sign(), Sign::Negative);

        assert_eq!(LogPolynomial::zero().asymptotic_sign(), Sign::Zero);
    }

    #[test]
    fn bertrand_criterion() {
        assert!(!integral_converges(&es(-1, 1), &[]));
        assert!(integral_converges(
            &es(-1, 1),
            &[es(-1, 1), es(-11, 10)]
        ));
        assert!(integral_converges(&es(-2, 1), &[es(5, 1)]));
        assert!(!integral_converges(&es(-1, 1), &[es(-1, 1), es(-1, 1)]));
        assert!(integral_converges(&es(-1, 1), &[es(-2, 1), es(7, 1)]));
        assert!(!integral_converges(&es(-1, 2), &[es(-5, 1)]));
    }
}
