//! Position moments `<psi, |x|^c psi>`: exact finiteness classification
//! from the integrand exponents, numeric values by quadrature with
//! analytic tail handling, and the closed-form critical moment exponent.

use crate::logalg::{integral_converges, iter_exp, ExactScalar, LogAlgError, LogMonomial};
use crate::verify::{PsiEval, VerifyError};
use serde::Serialize;

#[derive(Debug, Clone, thiserror::Error)]
pub enum MomentError {
    #[error(transparent)]
    LogAlg(#[from] LogAlgError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("c_tilde must be >= 0, got {0}")]
    NegativeMoment(String),
    #[error("tail regression residual {residual} exceeds 0.1; no power law on the fit window")]
    FitError { residual: f64 },
    #[error("region_from {region_from} is inside the excluded core (need > {min})")]
    Region { region_from: f64, min: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentStatus {
    Finite,
    Infinite,
}

/// Verdict on `<psi, |x|^{c_tilde} psi>` over the exterior region:
/// exact status from the integrand exponents, with a numeric value when
/// the integral converges.
#[derive(Debug, Clone, Serialize)]
pub struct MomentVerdict {
    pub status: MomentStatus,
    pub numeric_value: Option<f64>,
    pub tail_exponents: (ExactScalar, Vec<ExactScalar>),
}

/// Surface measure of the unit sphere, `omega_{d-1} = 2 pi^{d/2} / Gamma(d/2)`.
pub fn sphere_area(d: u32) -> f64 {
    use std::f64::consts::PI;
    // Gamma at integers and half-integers
    let gamma_half_d = if d % 2 == 0 {
        (1..d / 2).map(|k| k as f64).product::<f64>()
    } else {
        // Gamma(k + 1/2) = (2k)! / (4^k k!) sqrt(pi) with k = (d-1)/2
        let k = (d - 1) / 2;
        let mut g = PI.sqrt();
        for j in 0..k {
            g *= j as f64 + 0.5;
        }
        g
    };
    2.0 * PI.powf(d as f64 / 2.0) / gamma_half_d
}

/// Exact classification of `<psi, |x|^{c_tilde} psi>` restricted to the
/// exterior region `r > region_from`. The radial integrand is
/// `r^{c_tilde + d - 1} psi(r)^2`; its exponents decide finiteness, and
/// when finite the value is computed by the substitution `t = ln r`
/// applied recursively until the power exponent leaves the borderline.
pub fn moment_symbolic(
    psi: &LogMonomial,
    c_tilde: &ExactScalar,
    d: u32,
    region_from: f64,
) -> Result<MomentVerdict, MomentError> {
    if c_tilde.is_negative() {
        return Err(MomentError::NegativeMoment(c_tilde.to_string()));
    }
    let min = iter_exp(psi.depth() as u32)?;
    if region_from <= min {
        return Err(MomentError::Region { region_from, min });
    }
    let two = ExactScalar::from_int(2);
    let a = c_tilde + &ExactScalar::from_int(d as i64 - 1) + &two * psi.rpow();
    let b: Vec<ExactScalar> = psi.logpows().iter().map(|x| &two * x).collect();
    let finite = integral_converges(&a, &b);
    let numeric_value = if finite {
        let c2 = psi.coeff().to_f64().powi(2);
        Some(sphere_area(d) * c2 * exact_tail_integral(&a, &b, region_from))
    } else {
        None
    };
    Ok(MomentVerdict {
        status: if finite {
            MomentStatus::Finite
        } else {
            MomentStatus::Infinite
        },
        numeric_value,
        tail_exponents: (a, b),
    })
}

/// `int_R^inf r^a prod_j ln_j(r)^{b_j} dr` for a convergent exponent
/// pattern. With `t = ln r` the integral becomes
/// `int_{ln R}^inf e^{(a+1)t} t^{b_1} prod_{j>=2} ln_{j-1}(t)^{b_j} dt`;
/// when a = -1 exactly this is the same problem one log level down, so
/// recurse until the exponential factor is genuinely decaying, then
/// integrate over the window where it is non-negligible.
fn exact_tail_integral(a: &ExactScalar, b: &[ExactScalar], lower: f64) -> f64 {
    let minus_one = ExactScalar::from_int(-1);
    if a == &minus_one {
        let (head, rest) = match b.split_first() {
            Some((h, r)) => (h.clone(), r.to_vec()),
            None => unreachable!("a = -1 with no logs diverges; caller checks convergence"),
        };
        return exact_tail_integral(&head, &rest, lower.ln());
    }
    let af = a.to_f64();
    let bf: Vec<f64> = b.iter().map(|x| x.to_f64()).collect();
    let decay = -(af + 1.0);
    debug_assert!(decay > 0.0);
    // e^{-decay (t - t0)} below ~1e-40 contributes nothing at f64 precision,
    // with slack for the slowly varying log factors
    let t0 = lower.ln();
    let span = (95.0 + 25.0 * bf.iter().map(|x| x.abs()).sum::<f64>()) / decay;
    let f = |t: f64| -> f64 {
        let mut val = ((af + 1.0) * t).exp();
        let mut u = t;
        for bj in &bf {
            val *= u.powf(*bj);
            u = u.ln();
        }
        val
    };
    simpson(&f, t0, t0 + span, 40_000)
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / (2 * panels) as f64;
    let mut acc = f(a) + f(b);
    for i in 1..2 * panels {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Numeric moment of an arbitrary radial evaluator.
#[derive(Debug, Clone, Serialize)]
pub struct NumericMoment {
    /// `omega_{d-1} int r^{c_tilde+d-1} psi^2 dr`, `f64::INFINITY` when
    /// the fitted tail is non-integrable.
    pub value: f64,
    /// fitted log-log slope of the integrand on the tail window
    pub tail_slope: f64,
    /// true when the slope is within 0.05 of the integrability
    /// boundary -1, where the power-law fit cannot decide finiteness
    pub boundary: bool,
}

/// Compute `<psi, |x|^{c_tilde} psi>` numerically: adaptive quadrature
/// of `r^{c_tilde+d-1} psi^2` on `[inner_from, split_R]` plus a tail
/// estimated from a log-log power fit on `[split_R, 4 split_R]`.
pub fn moment_numeric(
    psi: &PsiEval,
    c_tilde: f64,
    d: u32,
    split_r: f64,
    inner_from: f64,
) -> Result<NumericMoment, MomentError> {
    let integrand = |r: f64| -> Result<f64, MomentError> {
        if r == 0.0 {
            // r^{c+d-1} -> 0 for d >= 1 unless c = 0, d = 1 where it is psi^2
            if c_tilde + d as f64 - 1.0 > 0.0 {
                return Ok(0.0);
            }
            let p = psi.eval(1e-12)?;
            return Ok(p * p);
        }
        let p = psi.eval(r)?;
        Ok(r.powf(c_tilde + d as f64 - 1.0) * p * p)
    };
    // fit the tail first so a divergent moment skips the bulk quadrature
    let n_fit = 48;
    let mut xs = Vec::with_capacity(n_fit);
    let mut ys = Vec::with_capacity(n_fit);
    for i in 0..n_fit {
        let r = split_r * 4.0f64.powf(i as f64 / (n_fit - 1) as f64);
        let f = integrand(r)?;
        if f <= 0.0 {
            return Err(MomentError::FitError { residual: f64::INFINITY });
        }
        xs.push(r.ln());
        ys.push(f.ln());
    }
    let (slope, intercept, residual) = linear_fit(&xs, &ys);
    if residual > 0.1 {
        return Err(MomentError::FitError { residual });
    }
    let boundary = (slope + 1.0).abs() < 0.05;
    if slope >= -1.0 {
        return Ok(NumericMoment {
            value: f64::INFINITY,
            tail_slope: slope,
            boundary,
        });
    }
    let bulk = adaptive_simpson(&integrand, inner_from, split_r, 1e-10)?;
    let tail = intercept.exp() * split_r.powf(slope + 1.0) / (-slope - 1.0);
    Ok(NumericMoment {
        value: sphere_area(d) * (bulk + tail),
        tail_slope: slope,
        boundary,
    })
}

/// Least squares line through (x, y); returns (slope, intercept,
/// max absolute residual).
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (intercept + slope * x)).abs())
        .fold(0.0f64, f64::max);
    (slope, intercept, residual)
}

fn adaptive_simpson(
    f: &dyn Fn(f64) -> Result<f64, MomentError>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, MomentError> {
    fn recurse(
        f: &dyn Fn(f64) -> Result<f64, MomentError>,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64, MomentError> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm)?;
        let frm = f(rm)?;
        let h = b - a;
        let left = h / 12.0 * (fa + 4.0 * flm + fm);
        let right = h / 12.0 * (fm + 4.0 * frm + fb);
        let err = left + right - whole;
        if depth == 0 || err.abs() <= 15.0 * tol {
            return Ok(left + right + err / 15.0);
        }
        Ok(recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
    }
    if a >= b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let fm = f(0.5 * (a + b))?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // absolute tolerance proportional to the crude estimate
    let tol = tol * whole.abs().max(1e-12);
    recurse(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Critical moment exponent for a potential with tail `a2 / r^2`:
/// `c* = -2 + sqrt((d-2)^2 + 4 a2)`, absent when the discriminant is
/// negative. Moments with `c_tilde < c*` are finite for the matching
/// threshold state; `c_tilde >= c*` are infinite (the equality case
/// belongs to the absence side).
pub fn critical_moment(d: u32, a2: f64) -> Option<f64> {
    let disc = (d as f64 - 2.0).powi(2) + 4.0 * a2;
    if disc < 0.0 {
        None
    } else {
        Some(-2.0 + disc.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{psi_alpha_value, psi_lower, psi_upper, ThresholdStateSpec};
    use std::f64::consts::PI;

    fn es(n: i64, d: i64) -> ExactScalar {
        ExactScalar::new(n, d)
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn lower_family_iff() {
        // <psi^l, |x|^c psi^l> infinite exactly when c_tilde >= c
        let spec = ThresholdStateSpec::lower(es(2, 1), 1, 3);
        let psi = psi_lower(&spec).unwrap();
        let at_c = moment_symbolic(&psi, &es(2, 1), 3, 20.0).unwrap();
        assert_eq!(at_c.status, MomentStatus::Infinite);
        assert_eq!(at_c.tail_exponents.0, es(-1, 1));
        assert_eq!(at_c.tail_exponents.1, vec![es(-1, 1)]);
        let below = moment_symbolic(&psi, &es(1, 1), 3, 20.0).unwrap();
        assert_eq!(below.status, MomentStatus::Finite);
        assert!(below.numeric_value.unwrap() > 0.0);
    }

    #[test]
    fn upper_family_iff() {
        // <psi^u, |x|^c psi^u> finite exactly when c_tilde <= c
        let spec = ThresholdStateSpec::upper(es(2, 1), 1, 3, es(1, 2));
        let psi = psi_upper(&spec).unwrap();
        let at_c = moment_symbolic(&psi, &es(2, 1), 3, 20.0).unwrap();
        assert_eq!(at_c.status, MomentStatus::Finite);
        // last exponent is 2(-1/2 - eps/2) = -1 - eps
        assert_eq!(at_c.tail_exponents.1, vec![es(-3, 2)]);
        let above = moment_symbolic(&psi, &es(5, 2), 3, 20.0).unwrap();
        assert_eq!(above.status, MomentStatus::Infinite);
    }

    #[test]
    fn symbolic_value_closed_form() {
        // int_1^inf r^{-2} dr = 1, times omega_2 = 4 pi for psi = r^{-2}, d=3, c=0
        let psi = LogMonomial::power(es(1, 1), es(-2, 1));
        let v = moment_symbolic(&psi, &es(0, 1), 3, 1.0).unwrap();
        assert_eq!(v.status, MomentStatus::Finite);
        assert!((v.numeric_value.unwrap() - 4.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn symbolic_value_with_log_factor() {
        // int_{e^2}^inf r^{-1} (ln r)^{-2} dr = 1/2; d = 1 so omega_0 = 2
        let psi = LogMonomial::new(es(1, 1), es(-1, 2), vec![es(-1, 1)]);
        let v = moment_symbolic(&psi, &es(0, 1), 1, (2.0f64).exp()).unwrap();
        assert_eq!(v.status, MomentStatus::Finite);
        assert!((v.numeric_value.unwrap() - 1.0).abs() < 1e-6, "{:?}", v);
    }

    #[test]
    fn region_doubling_keeps_verdict() {
        let spec = ThresholdStateSpec::lower(es(1, 1), 2, 4);
        let psi = psi_lower(&spec).unwrap();
        for c in [es(0, 1), es(1, 2), es(1, 1), es(3, 2)] {
            let a = moment_symbolic(&psi, &c, 4, 20.0).unwrap();
            let b = moment_symbolic(&psi, &c, 4, 40.0).unwrap();
            assert_eq!(a.status, b.status);
        }
    }

    #[test]
    fn numeric_r_minus_two() {
        let psi = PsiEval::callback(|r| r.powi(-2));
        let m = moment_numeric(&psi, 0.0, 3, 100.0, 1.0).unwrap();
        assert!((m.value - 4.0 * PI).abs() < 1e-6 * 4.0 * PI, "{:?}", m);
        assert!(!m.boundary);
    }

    #[test]
    fn numeric_alpha_threshold() {
        let psi = PsiEval::callback(|r| psi_alpha_value(2.0, 3, r));
        let norm = moment_numeric(&psi, 0.0, 3, 200.0, 0.0).unwrap();
        assert!(norm.value.is_finite() && norm.value > 0.0);
        let below = moment_numeric(&psi, 1.9, 3, 200.0, 0.0).unwrap();
        assert!(below.value.is_finite());
        let at = moment_numeric(&psi, 2.0, 3, 200.0, 0.0).unwrap();
        assert!(at.value.is_infinite());
        assert!(at.boundary);
    }

    #[test]
    fn numeric_rejects_non_power_tail() {
        let psi = PsiEval::callback(|r| (r * 3.0).sin() * (-r / 60.0).exp() + 2e-3 / r);
        assert!(matches!(
            moment_numeric(&psi, 0.0, 3, 10.0, 1.0),
            Err(MomentError::FitError { .. })
        ));
    }

    #[test]
    fn critical_moment_closed_form() {
        assert!((critical_moment(3, 15.0 / 4.0).unwrap() - 2.0).abs() < 1e-14);
        for d in 1..=5u32 {
            let a2 = (d as f64) * (4.0 - d as f64) / 4.0;
            assert!(critical_moment(d, a2).unwrap().abs() < 1e-14);
        }
        assert!(critical_moment(3, -1.0).is_none());
    }
}
