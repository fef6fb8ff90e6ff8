//! Textual round-trip format for log-polynomials, used by the CLI and
//! test fixtures: terms `coeff * r^(a) * log1^(b1) * log2^(b2)` joined
//! by ` + `, exact fractions as `p/q`.

use super::poly::{LogMonomial, LogPolynomial};
use super::scalar::ExactScalar;

#[derive(Debug, Clone, thiserror::Error)]
#[error("cannot parse log-polynomial: {0}")]
pub struct ParsePolyError(pub String);

pub fn format_poly(p: &LogPolynomial) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    p.terms()
        .iter()
        .map(format_term)
        .collect::<Vec<_>>()
        .join(" + ")
}

fn format_term(t: &LogMonomial) -> String {
    let mut s = format!("{} * r^({})", t.coeff(), t.rpow());
    for (j, b) in t.logpows().iter().enumerate() {
        if !b.is_zero() {
            s.push_str(&format!(" * log{}^({})", j + 1, b));
        }
    }
    s
}

pub fn parse_poly(s: &str) -> Result<LogPolynomial, ParsePolyError> {
    let s = s.trim();
    if s.is_empty() || s == "0" {
        return Ok(LogPolynomial::zero());
    }
    let mut terms = Vec::new();
    for chunk in s.split('+') {
        terms.push(parse_term(chunk)?);
    }
    Ok(LogPolynomial::from_terms(terms))
}

fn parse_term(s: &str) -> Result<LogMonomial, ParsePolyError> {
    let bad = |msg: &str| ParsePolyError(format!("{msg} in `{}`", s.trim()));
    let mut coeff: Option<ExactScalar> = None;
    let mut rpow = ExactScalar::zero();
    let mut logpows: Vec<ExactScalar> = Vec::new();
    for factor in s.split('*') {
        let f = factor.trim();
        if f.is_empty() {
            return Err(bad("empty factor"));
        }
        if let Some(rest) = f.strip_prefix("r^") {
            rpow = parse_exponent(rest).ok_or_else(|| bad("bad r exponent"))?;
        } else if f == "r" {
            rpow = ExactScalar::one();
        } else if let Some(rest) = f.strip_prefix("log") {
            let (idx, exp) = rest
                .split_once('^')
                .ok_or_else(|| bad("log factor needs ^ exponent"))?;
            let j: usize = idx.trim().parse().map_err(|_| bad("bad log index"))?;
            if j == 0 {
                return Err(bad("log index starts at 1"));
            }
            let e = parse_exponent(exp).ok_or_else(|| bad("bad log exponent"))?;
            if logpows.len() < j {
                logpows.resize(j, ExactScalar::zero());
            }
            logpows[j - 1] = e;
        } else {
            let c: ExactScalar = f.parse().map_err(|_| bad("bad coefficient"))?;
            if coeff.is_some() {
                return Err(bad("two coefficients"));
            }
            coeff = Some(c);
        }
    }
    Ok(LogMonomial::new(
        coeff.unwrap_or_else(ExactScalar::one),
        rpow,
        logpows,
    ))
}

fn parse_exponent(s: &str) -> Option<ExactScalar> {
    let s = s.trim();
    let inner = s.strip_prefix('(')?.strip_suffix(')').or_else(|| {
        // tolerate a bare exponent without parentheses
        if s.starts_with('(') {
            None
        } else {
            Some(s)
        }
    })?;
    inner.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn es(n: i64, d: i64) -> ExactScalar {
        ExactScalar::new(n, d)
    }

    #[test]
    fn round_trip() {
        let p = LogPolynomial::from_terms(vec![
            LogMonomial::new(es(15, 4), es(-2, 1), vec![]),
            LogMonomial::new(es(-1, 2), es(-2, 1), vec![es(-1, 1), es(-3, 5)]),
        ]);
        let text = format_poly(&p);
        assert_eq!(
            text,
            "15/4 * r^(-2) + -1/2 * r^(-2) * log1^(-1) * log2^(-3/5)"
        );
        assert_eq!(parse_poly(&text).unwrap(), p);
    }

    #[test]
    fn parse_cli_tail() {
        let p = parse_poly("3/4 * r^(-2)").unwrap();
        assert_eq!(
            p,
            LogPolynomial::monomial(LogMonomial::power(es(3, 4), es(-2, 1)))
        );
    }

    #[test]
    fn zero_round_trip() {
        assert_eq!(format_poly(&LogPolynomial::zero()), "0");
        assert!(parse_poly("0").unwrap().is_zero());
    }

    #[test]
    fn malformed_rejected() {
        assert!(parse_poly("3/4 ** r^(-2)").is_err());
        assert!(parse_poly("x^(2)").is_err());
        assert!(parse_poly("1 * log0^(-1)").is_err());
    }
}
