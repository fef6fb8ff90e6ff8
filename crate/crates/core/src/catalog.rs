//! Constructors for the named threshold eigenfunctions, their exact
//! partner potentials, the theorem bounds, and the closed-form
//! alpha-family example.

use crate::logalg::{iter_exp, ExactScalar, LogAlgError, LogMonomial, LogPolynomial};
use std::sync::Arc;

#[derive(Debug, Clone, thiserror::Error)]
pub enum CatalogError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    LogAlg(#[from] LogAlgError),
    #[error("r = {r} outside potential domain (valid from {valid_from})")]
    Domain { r: f64, valid_from: f64 },
    #[error("unknown potential name `{0}`")]
    UnknownName(String),
}

/// Parameters of the threshold families: moment order c >= 0, log depth
/// m, dimension d, and the positive eps of the upper family.
#[derive(Debug, Clone)]
pub struct ThresholdStateSpec {
    pub c: ExactScalar,
    pub m: usize,
    pub d: u32,
    pub eps: Option<ExactScalar>,
}

impl ThresholdStateSpec {
    pub fn lower(c: ExactScalar, m: usize, d: u32) -> Self {
        ThresholdStateSpec { c, m, d, eps: None }
    }

    pub fn upper(c: ExactScalar, m: usize, d: u32, eps: ExactScalar) -> Self {
        ThresholdStateSpec { c, m, d, eps: Some(eps) }
    }

    pub fn validate(&self) -> Result<(), CatalogError> {
        if self.c.is_negative() {
            return Err(CatalogError::InvalidSpec("c must be >= 0".into()));
        }
        if self.d == 0 {
            return Err(CatalogError::InvalidSpec("d must be >= 1".into()));
        }
        if let Some(eps) = &self.eps {
            if !eps.is_positive() {
                return Err(CatalogError::InvalidSpec("eps must be > 0".into()));
            }
        }
        Ok(())
    }

    fn require_eps(&self) -> Result<&ExactScalar, CatalogError> {
        self.eps
            .as_ref()
            .ok_or_else(|| CatalogError::InvalidSpec("upper family needs eps > 0".into()))
    }
}

fn half() -> ExactScalar {
    ExactScalar::new(1, 2)
}

/// `psi^l_{c,m} = r^{-c/2 - d/2} prod_{j<=m} ln_j^{-1/2}`, the state that
/// barely fails to have a finite c-th moment.
pub fn psi_lower(spec: &ThresholdStateSpec) -> Result<LogMonomial, CatalogError> {
    spec.validate()?;
    let rpow = -(&spec.c + &ExactScalar::from_int(spec.d as i64)) * half();
    Ok(LogMonomial::new(
        ExactScalar::one(),
        rpow,
        vec![-half(); spec.m],
    ))
}

/// `psi^u_{c,m}`: for m = 0 the pure power `r^{-c/2 - d/2 - eps/2}`, for
/// m >= 1 the lower-family monomial with the last log exponent lowered
/// by eps/2. Has barely integrable c-th moment.
pub fn psi_upper(spec: &ThresholdStateSpec) -> Result<LogMonomial, CatalogError> {
    spec.validate()?;
    let eps = spec.require_eps()?.clone();
    let base = -(&spec.c + &ExactScalar::from_int(spec.d as i64)) * half();
    if spec.m == 0 {
        return Ok(LogMonomial::power(
            ExactScalar::one(),
            base - &eps * half(),
        ));
    }
    let mut logpows = vec![-half(); spec.m];
    logpows[spec.m - 1] = -half() - eps * half();
    Ok(LogMonomial::new(ExactScalar::one(), base, logpows))
}

/// Product `prod_{j<=k} ln_j^{-1}` as a dimensionless monomial.
fn log_ladder(k: usize) -> LogMonomial {
    LogMonomial::new(
        ExactScalar::one(),
        ExactScalar::zero(),
        vec![ExactScalar::from_int(-1); k],
    )
}

/// `sum_{k=1}^{m} prod_{j<=k} ln_j^{-1}`; zero polynomial for m = 0.
fn ladder_sum(m: usize) -> LogPolynomial {
    LogPolynomial::from_terms((1..=m).map(log_ladder).collect())
}

fn inv_r2() -> LogPolynomial {
    LogPolynomial::monomial(LogMonomial::power(
        ExactScalar::one(),
        ExactScalar::from_int(-2),
    ))
}

fn leading_coeff(c: &ExactScalar, d: u32) -> ExactScalar {
    // (d(4-d) + c^2 + 4c) / 4
    let d = ExactScalar::from_int(d as i64);
    let four = ExactScalar::from_int(4);
    (&d * &(&four - &d) + c * c + &four * c) / four
}

/// The exact potential `W_{c,m}` with `(-Delta + W_{c,m}) psi^l_{c,m} = 0`
/// outside `e_m`: leading `(d(4-d)+c^2+4c)/(4 r^2)` plus the single-sum,
/// squared-sum, and double-sum log-correction groups.
pub fn w_lower(spec: &ThresholdStateSpec) -> Result<LogPolynomial, CatalogError> {
    spec.validate()?;
    let s = ladder_sum(spec.m);
    let lead = LogPolynomial::monomial(LogMonomial::constant(leading_coeff(&spec.c, spec.d)));
    let single = s.scale(&((&spec.c + &ExactScalar::from_int(2)) * half()));
    let squared = s.mul(&s).scale(&ExactScalar::new(1, 4));
    let double = double_sum(spec.m).scale(&half());
    Ok(inv_r2().mul(&lead.add(&single).add(&squared).add(&double)))
}

/// `sum_{i=1}^m sum_{j=1}^i P_i P_j` where `P_k = prod_{l<=k} ln_l^{-1}`.
fn double_sum(m: usize) -> LogPolynomial {
    let mut acc = LogPolynomial::zero();
    for i in 1..=m {
        let pi = LogPolynomial::monomial(log_ladder(i));
        for j in 1..=i {
            acc = acc.add(&pi.mul(&LogPolynomial::monomial(log_ladder(j))));
        }
    }
    acc
}

/// The exact potential `W^{c,m}` paired with `psi^u_{c,m}`.
pub fn w_upper(spec: &ThresholdStateSpec) -> Result<LogPolynomial, CatalogError> {
    spec.validate()?;
    let eps = spec.require_eps()?.clone();
    let two = ExactScalar::from_int(2);
    let four = ExactScalar::from_int(4);
    if spec.m == 0 {
        // (d(4-d) + c^2 + 4c + eps(2c + 4 + eps)) / (4 r^2)
        let extra = &eps * &(&two * &spec.c + &four + &eps) / four;
        let coeff = leading_coeff(&spec.c, spec.d) + extra;
        return Ok(inv_r2().scale(&coeff));
    }
    let s = ladder_sum(spec.m);
    let pm = LogPolynomial::monomial(log_ladder(spec.m));
    let lead = LogPolynomial::monomial(LogMonomial::constant(leading_coeff(&spec.c, spec.d)));
    let single = s.scale(&((&spec.c + &two) * half()));
    let eps_single = pm.scale(&(&eps * &(&spec.c + &two) * half()));
    let combo = s.add(&pm.scale(&eps));
    let squared = combo.mul(&combo).scale(&ExactScalar::new(1, 4));
    let double = double_sum(spec.m).scale(&half());
    let cross = pm.mul(&s).scale(&(&eps * half()));
    Ok(inv_r2().mul(
        &lead
            .add(&single)
            .add(&eps_single)
            .add(&squared)
            .add(&double)
            .add(&cross),
    ))
}

/// Right-hand side of the absence theorem:
/// `(d(4-d)+4c+c^2)/(4 r^2) + (c+2)/2 * r^{-2} sum_{j<=m} prod_{k<=j} ln_k^{-1}`.
pub fn bound_absence(spec: &ThresholdStateSpec) -> Result<LogPolynomial, CatalogError> {
    spec.validate()?;
    let lead = LogPolynomial::monomial(LogMonomial::constant(leading_coeff(&spec.c, spec.d)));
    let single = ladder_sum(spec.m).scale(&((&spec.c + &ExactScalar::from_int(2)) * half()));
    Ok(inv_r2().mul(&lead.add(&single)))
}

/// Absence bound plus the strict-excess term
/// `eps (c+2)/2 * r^{-2} prod_{k<=m} ln_k^{-1}` of the existence theorem.
pub fn bound_existence(spec: &ThresholdStateSpec) -> Result<LogPolynomial, CatalogError> {
    let eps = spec.require_eps()?.clone();
    let base = bound_absence(spec)?;
    let excess = inv_r2()
        .mul(&LogPolynomial::monomial(log_ladder(spec.m)))
        .scale(&(eps * (&spec.c + &ExactScalar::from_int(2)) * half()));
    Ok(base.add(&excess))
}

/// The shape `r^{-2} prod_{k<=m} ln_k^{-1}` that the existence theorem's
/// eps-term carries at depth m.
pub fn eps_term_shape(m: usize) -> LogMonomial {
    LogMonomial::new(
        ExactScalar::one(),
        ExactScalar::from_int(-2),
        vec![ExactScalar::from_int(-1); m],
    )
}

/// `V_{alpha,d}(r) = (4a^2-(d-2)^2)/(4(1+r^2)) + (1-(a+d/2)^2)/(1+r^2)^2`.
pub fn v_alpha_value(alpha: f64, d: u32, r: f64) -> f64 {
    let d = d as f64;
    let a2 = (4.0 * alpha * alpha - (d - 2.0) * (d - 2.0)) / 4.0;
    let b = 1.0 - (alpha + d / 2.0) * (alpha + d / 2.0);
    let q = 1.0 + r * r;
    a2 / q + b / (q * q)
}

/// `psi_{alpha,d}(r) = (1+r^2)^{(2-d)/4 - alpha/2}`: resonance for
/// 0 <= alpha <= 1, ground state for alpha > 1.
pub fn psi_alpha_value(alpha: f64, d: u32, r: f64) -> f64 {
    (1.0 + r * r).powf((2.0 - d as f64) / 4.0 - alpha / 2.0)
}

pub fn psi_alpha(alpha: f64, d: u32) -> impl Fn(f64) -> f64 + Send + Sync + Clone {
    move |r| psi_alpha_value(alpha, d, r)
}

pub fn v_alpha(alpha: f64, d: u32) -> RadialPotential {
    RadialPotential::AlphaFamily { alpha, d }
}

/// Laurent expansion of `V_{alpha,d}` in powers of `r^{-2}` up to
/// `r^{-2 order}`. The coefficient of `r^{-2k}` is
/// `(-1)^{k-1} (A - (k-1) B)` with `A = (4a^2-(d-2)^2)/4` and
/// `B = 1-(a+d/2)^2`. Real alpha is snapped to the nearest fraction with
/// denominator <= 10^6 so the result lives in the exact algebra.
pub fn alpha_tail_expansion(
    alpha: f64,
    d: u32,
    order: u32,
) -> Result<LogPolynomial, CatalogError> {
    if order == 0 || order > 4 {
        return Err(CatalogError::InvalidSpec(
            "tail expansion order must be in 1..=4".into(),
        ));
    }
    let a = ExactScalar::approx_f64(alpha, 1_000_000)
        .ok_or_else(|| CatalogError::InvalidSpec(format!("non-finite alpha {alpha}")))?;
    let dd = ExactScalar::from_int(d as i64);
    let two = ExactScalar::from_int(2);
    let four = ExactScalar::from_int(4);
    let big_a = (&four * &a * &a - (&dd - &two) * (&dd - &two)) / &four;
    let half_d = &dd / &two;
    let big_b = ExactScalar::one() - (&a + &half_d) * (&a + &half_d);
    let mut terms = Vec::new();
    for k in 1..=order as i64 {
        let mut coeff = &big_a - &(ExactScalar::from_int(k - 1) * &big_b);
        if k % 2 == 0 {
            coeff = -coeff;
        }
        terms.push(LogMonomial::power(coeff, ExactScalar::from_int(-2 * k)));
    }
    Ok(LogPolynomial::from_terms(terms))
}

/// A radial potential: an exact symbolic tail valid outside some radius,
/// the alpha-family closed form, a sampled grid with linear
/// interpolation, or an arbitrary callback.
#[derive(Clone)]
pub enum RadialPotential {
    Symbolic {
        poly: LogPolynomial,
        valid_from: f64,
    },
    AlphaFamily {
        alpha: f64,
        d: u32,
    },
    Sampled {
        radii: Vec<f64>,
        values: Vec<f64>,
    },
    Callback(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for RadialPotential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RadialPotential::Symbolic { poly, valid_from } => f
                .debug_struct("Symbolic")
                .field("poly", &poly.to_string())
                .field("valid_from", valid_from)
                .finish(),
            RadialPotential::AlphaFamily { alpha, d } => f
                .debug_struct("AlphaFamily")
                .field("alpha", alpha)
                .field("d", d)
                .finish(),
            RadialPotential::Sampled { radii, .. } => f
                .debug_struct("Sampled")
                .field("points", &radii.len())
                .finish(),
            RadialPotential::Callback(_) => f.write_str("Callback(..)"),
        }
    }
}

impl RadialPotential {
    pub fn symbolic(poly: LogPolynomial, valid_from: f64) -> Result<Self, CatalogError> {
        let min = iter_exp(poly.depth() as u32)?;
        if valid_from < min {
            return Err(CatalogError::InvalidSpec(format!(
                "valid_from {valid_from} below the symbolic domain boundary {min}"
            )));
        }
        Ok(RadialPotential::Symbolic { poly, valid_from })
    }

    pub fn sampled(radii: Vec<f64>, values: Vec<f64>) -> Result<Self, CatalogError> {
        if radii.len() != values.len() || radii.len() < 2 {
            return Err(CatalogError::InvalidSpec(
                "sampled potential needs >= 2 matching points".into(),
            ));
        }
        if !radii.windows(2).all(|w| w[0] < w[1]) {
            return Err(CatalogError::InvalidSpec(
                "sampled radii must be strictly increasing".into(),
            ));
        }
        Ok(RadialPotential::Sampled { radii, values })
    }

    pub fn callback<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        RadialPotential::Callback(Arc::new(f))
    }

    pub fn zero() -> Self {
        RadialPotential::callback(|_| 0.0)
    }

    pub fn eval(&self, r: f64) -> Result<f64, CatalogError> {
        match self {
            RadialPotential::Symbolic { poly, valid_from } => {
                if r <= *valid_from {
                    return Err(CatalogError::Domain {
                        r,
                        valid_from: *valid_from,
                    });
                }
                Ok(poly.eval(r)?)
            }
            RadialPotential::AlphaFamily { alpha, d } => Ok(v_alpha_value(*alpha, *d, r)),
            RadialPotential::Sampled { radii, values } => {
                if r < radii[0] || r > *radii.last().unwrap() {
                    return Err(CatalogError::Domain {
                        r,
                        valid_from: radii[0],
                    });
                }
                let i = match radii.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
                    Ok(i) => return Ok(values[i]),
                    Err(i) => i,
                };
                let t = (r - radii[i - 1]) / (radii[i] - radii[i - 1]);
                Ok(values[i - 1] + t * (values[i] - values[i - 1]))
            }
            RadialPotential::Callback(f) => Ok(f(r)),
        }
    }
}

/// Names accepted by the string-keyed registry.
pub const NAMED_TAILS: [&str; 4] = ["w_lower", "w_upper", "bound_absence", "bound_existence"];

/// Registry of the named symbolic tails, keyed by the CLI flag strings.
pub fn named_tail(name: &str, spec: &ThresholdStateSpec) -> Result<LogPolynomial, CatalogError> {
    match name {
        "w_lower" => w_lower(spec),
        "w_upper" => w_upper(spec),
        "bound_absence" => bound_absence(spec),
        "bound_existence" => bound_existence(spec),
        other => Err(CatalogError::UnknownName(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logalg::parse_poly;

    fn es(n: i64, d: i64) -> ExactScalar {
        ExactScalar::new(n, d)
    }

    fn lower(c: (i64, i64), m: usize, d: u32) -> ThresholdStateSpec {
        ThresholdStateSpec::lower(es(c.0, c.1), m, d)
    }

    fn upper(c: (i64, i64), m: usize, d: u32, eps: (i64, i64)) -> ThresholdStateSpec {
        ThresholdStateSpec::upper(es(c.0, c.1), m, d, es(eps.0, eps.1))
    }

    #[test]
    fn psi_lower_examples() {
        let p = psi_lower(&lower((0, 1), 0, 3)).unwrap();
        assert_eq!(p, LogMonomial::power(es(1, 1), es(-3, 2)));
        let p = psi_lower(&lower((2, 1), 1, 3)).unwrap();
        assert_eq!(p, LogMonomial::new(es(1, 1), es(-5, 2), vec![es(-1, 2)]));
        let p = psi_lower(&lower((0, 1), 2, 4)).unwrap();
        assert_eq!(
            p,
            LogMonomial::new(es(1, 1), es(-2, 1), vec![es(-1, 2), es(-1, 2)])
        );
    }

    #[test]
    fn psi_upper_examples() {
        let p = psi_upper(&upper((0, 1), 0, 3, (1, 1))).unwrap();
        assert_eq!(p, LogMonomial::power(es(1, 1), es(-2, 1)));
        let p = psi_upper(&upper((0, 1), 1, 3, (1, 1))).unwrap();
        assert_eq!(p, LogMonomial::new(es(1, 1), es(-3, 2), vec![es(-1, 1)]));
        let p = psi_upper(&upper((2, 1), 2, 1, (1, 5))).unwrap();
        assert_eq!(
            p,
            LogMonomial::new(es(1, 1), es(-3, 2), vec![es(-1, 2), es(-3, 5)])
        );
    }

    #[test]
    fn w_lower_examples() {
        let w = w_lower(&lower((0, 1), 0, 3)).unwrap();
        assert_eq!(w, parse_poly("3/4 * r^(-2)").unwrap());
        // d = 4, m = 1: leading term vanishes
        let w = w_lower(&lower((0, 1), 1, 4)).unwrap();
        assert_eq!(
            w,
            parse_poly("1 * r^(-2) * log1^(-1) + 3/4 * r^(-2) * log1^(-2)").unwrap()
        );
        // general m = 0
        let w = w_lower(&lower((3, 2), 0, 5)).unwrap();
        assert_eq!(w, parse_poly("13/16 * r^(-2)").unwrap());
    }

    #[test]
    fn w_upper_examples() {
        let w = w_upper(&upper((0, 1), 0, 3, (1, 1))).unwrap();
        assert_eq!(w, parse_poly("2 * r^(-2)").unwrap());
        // d = 2, leading d(4-d)/4 = 1: (4 + eps(4+eps))/4 with eps = 1/3
        let w = w_upper(&upper((0, 1), 0, 2, (1, 3))).unwrap();
        assert_eq!(w, parse_poly("49/36 * r^(-2)").unwrap());
    }

    #[test]
    fn w_upper_exceeds_w_lower() {
        for m in 0..=3 {
            let wl = w_lower(&lower((1, 1), m, 3)).unwrap();
            let wu = w_upper(&upper((1, 1), m, 3, (1, 10))).unwrap();
            assert_eq!(
                wu.sub(&wl).asymptotic_sign(),
                crate::logalg::Sign::Positive
            );
        }
    }

    #[test]
    fn bound_examples() {
        let b = bound_absence(&lower((0, 1), 0, 3)).unwrap();
        assert_eq!(b, parse_poly("3/4 * r^(-2)").unwrap());
        let b = bound_existence(&upper((0, 1), 0, 3, (1, 1))).unwrap();
        assert_eq!(b, parse_poly("7/4 * r^(-2)").unwrap());
        let b = bound_absence(&lower((2, 1), 1, 3)).unwrap();
        assert_eq!(
            b,
            parse_poly("15/4 * r^(-2) + 2 * r^(-2) * log1^(-1)").unwrap()
        );
    }

    #[test]
    fn alpha_family_values() {
        assert!((v_alpha_value(1.0, 3, 0.0) + 4.5).abs() < 1e-15);
        for &(alpha, d) in &[(0.5, 1), (1.0, 3), (2.0, 4)] {
            assert_eq!(psi_alpha_value(alpha, d, 0.0), 1.0);
        }
        // r^2 V -> (4 alpha^2 - (d-2)^2)/4
        let lim = (4.0 * 4.0 - 1.0) / 4.0;
        let v = v_alpha(2.0, 3);
        for &r in &[1e3, 1e4] {
            let scaled = v.eval(r).unwrap() * r * r;
            assert!((scaled - lim).abs() < 20.0 / (r * r) * 10.0);
        }
    }

    #[test]
    fn alpha_tail_coefficients() {
        let p = alpha_tail_expansion(2.0, 3, 1).unwrap();
        assert_eq!(p, parse_poly("15/4 * r^(-2)").unwrap());
        let p = alpha_tail_expansion(0.0, 3, 1).unwrap();
        assert_eq!(p, parse_poly("-1/4 * r^(-2)").unwrap());
        // alpha = 1, d = 3: second coefficient is -A + B = -3/4 - 21/4 = -6
        let p = alpha_tail_expansion(1.0, 3, 2).unwrap();
        assert_eq!(p, parse_poly("3/4 * r^(-2) + -6 * r^(-4)").unwrap());
        // numeric cross-check of the r^{-4} coefficient at large r
        let r: f64 = 100.0;
        let correction = (v_alpha_value(1.0, 3, r) - 0.75 / (r * r)) * r.powi(4);
        assert!((correction + 6.0).abs() < 1e-2);
    }

    #[test]
    fn sampled_interpolation() {
        let v = RadialPotential::sampled(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert!((v.eval(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((v.eval(1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(v.eval(3.0).is_err());
        assert!(RadialPotential::sampled(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn registry_names() {
        let spec = upper((1, 1), 1, 3, (1, 2));
        for name in NAMED_TAILS {
            assert!(named_tail(name, &spec).is_ok(), "{name}");
        }
        assert!(named_tail("nope", &spec).is_err());
    }
}
