//! Independent numerical engine: zero-energy radial shooting, tail
//! decay-exponent fits, lowest-eigenvalue computation on finite boxes,
//! and the criticality probe (does an arbitrarily weak attractive bump
//! create a negative bound state?).

use crate::catalog::{CatalogError, RadialPotential};
use serde::Serialize;

#[derive(Debug, Clone, thiserror::Error)]
pub enum SpectralError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("local step error {estimate} exceeds 1e-8 at r = {r}")]
    Step { r: f64, estimate: f64 },
    #[error("sign change inside fit window near r = {r}")]
    NodeInWindow { r: f64 },
    #[error("window contains fewer than two solution samples")]
    InvalidWindow,
    #[error("potential not finite at r = {r}")]
    BadPotential { r: f64 },
    #[error("no eigenvalue bracket found in the scanned energy range")]
    NoBracket,
    #[error("Sturm node count decreased from {lo} to {hi} as E increased; aborting bisection")]
    SturmViolation { lo: usize, hi: usize },
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

/// A radial solution stored in log-magnitude form so that power-law
/// growth or decay over many decades never overflows.
#[derive(Debug, Clone, Serialize)]
pub struct RadialSolution {
    pub radii: Vec<f64>,
    pub log_abs_u: Vec<f64>,
    pub sign_u: Vec<i8>,
    pub dlog_u: Vec<f64>,
    pub nodes: Vec<f64>,
}

/// Reduced zero-energy coefficient `Q = V + (d-1)(d-3)/(4 r^2)` for the
/// substitution `v = r^{(d-1)/2} u`, which removes the first-order term.
fn reduced_q(v: &RadialPotential, d: u32, r: f64) -> Result<f64, SpectralError> {
    let df = d as f64;
    let val = v.eval(r)? + (df - 1.0) * (df - 3.0) / (4.0 * r * r);
    if !val.is_finite() {
        return Err(SpectralError::BadPotential { r });
    }
    Ok(val)
}

const STEP_TOL: f64 = 1e-8;
const RENORM_THRESHOLD: f64 = 1e100;

/// Integrate the zero-energy radial equation `u'' + (d-1)/r u' = V u`
/// from (u0, du0) at r0 out to r1 on a log-spaced grid. Fourth-order
/// Runge-Kutta with per-step halving error control; the solution is
/// renormalized whenever it leaves [1e-100, 1e100], with the factor
/// absorbed into log_abs_u.
pub fn shoot_zero_energy(
    v: &RadialPotential,
    d: u32,
    r0: f64,
    r1: f64,
    u0: f64,
    du0: f64,
    steps_per_decade: u32,
) -> Result<RadialSolution, SpectralError> {
    if !(r0 > 0.0 && r1 > r0) {
        return Err(SpectralError::Invalid(format!(
            "need 0 < r0 < r1, got r0 = {r0}, r1 = {r1}"
        )));
    }
    if steps_per_decade == 0 {
        return Err(SpectralError::Invalid("steps_per_decade must be > 0".into()));
    }
    let n_steps = (((r1 / r0).log10() * steps_per_decade as f64).ceil() as usize).max(1);
    let gamma = (d as f64 - 1.0) / 2.0;
    // reduced variables w = r^gamma u, w' = r^gamma (u' + gamma u / r)
    let mut w = u0;
    let mut dw = du0 + gamma * u0 / r0;
    // factor r0^gamma folded into the log offset
    let mut offset = gamma * r0.ln();
    let mut radii = Vec::with_capacity(n_steps + 1);
    let mut log_abs_u = Vec::with_capacity(n_steps + 1);
    let mut sign_u = Vec::with_capacity(n_steps + 1);
    let mut dlog_u = Vec::with_capacity(n_steps + 1);
    let mut nodes = Vec::new();

    let record = |r: f64,
                  w: f64,
                  dw: f64,
                  offset: f64,
                  radii: &mut Vec<f64>,
                  log_abs_u: &mut Vec<f64>,
                  sign_u: &mut Vec<i8>,
                  dlog_u: &mut Vec<f64>| {
        radii.push(r);
        // u = w / r^gamma
        log_abs_u.push(w.abs().max(f64::MIN_POSITIVE).ln() + offset - gamma * r.ln());
        sign_u.push(if w > 0.0 {
            1
        } else if w < 0.0 {
            -1
        } else {
            0
        });
        dlog_u.push(dw / w - gamma / r);
    };
    record(
        r0, w, dw, offset, &mut radii, &mut log_abs_u, &mut sign_u, &mut dlog_u,
    );

    let ratio = (r1 / r0).powf(1.0 / n_steps as f64);
    let mut r = r0;
    for i in 0..n_steps {
        let r_next = if i + 1 == n_steps { r1 } else { r0 * ratio.powi(i as i32 + 1) };
        let h = r_next - r;
        // full step vs two half steps; accept the finer result
        let full = rk4_step(v, d, r, w, dw, h)?;
        let half = rk4_step(v, d, r, w, dw, h / 2.0)?;
        let fine = rk4_step(v, d, r + h / 2.0, half.0, half.1, h / 2.0)?;
        let scale = fine.0.abs().max(fine.1.abs() * h).max(1e-300);
        let estimate = ((full.0 - fine.0).abs()).max((full.1 - fine.1).abs() * h) / scale;
        if estimate > STEP_TOL {
            return Err(SpectralError::Step { r, estimate });
        }
        let prev_w = w;
        w = fine.0;
        dw = fine.1;
        r = r_next;
        if w != 0.0 && prev_w != 0.0 && w.signum() != prev_w.signum() {
            // linear interpolation of the crossing inside the step
            let frac = prev_w / (prev_w - w);
            nodes.push(r - h + frac * h);
        }
        let mag = w.abs().max(dw.abs());
        if mag > RENORM_THRESHOLD || (mag < 1.0 / RENORM_THRESHOLD && mag > 0.0) {
            let s = mag;
            w /= s;
            dw /= s;
            offset += s.ln();
        }
        record(
            r, w, dw, offset, &mut radii, &mut log_abs_u, &mut sign_u, &mut dlog_u,
        );
    }
    Ok(RadialSolution {
        radii,
        log_abs_u,
        sign_u,
        dlog_u,
        nodes,
    })
}

/// One classical RK4 step of w'' = Q(r) w.
fn rk4_step(
    v: &RadialPotential,
    d: u32,
    r: f64,
    w: f64,
    dw: f64,
    h: f64,
) -> Result<(f64, f64), SpectralError> {
    let f = |r: f64, w: f64| -> Result<f64, SpectralError> { Ok(reduced_q(v, d, r)? * w) };
    let k1w = dw;
    let k1d = f(r, w)?;
    let k2w = dw + 0.5 * h * k1d;
    let k2d = f(r + 0.5 * h, w + 0.5 * h * k1w)?;
    let k3w = dw + 0.5 * h * k2d;
    let k3d = f(r + 0.5 * h, w + 0.5 * h * k2w)?;
    let k4w = dw + h * k3d;
    let k4d = f(r + h, w + h * k3w)?;
    Ok((
        w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
        dw + h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d),
    ))
}

/// Least-squares estimate of p in `u ~ r^{-p}` over a window of the
/// solution. Errors when a node lies inside the window (log|u| is not
/// smooth there) or fewer than two samples fall in it.
pub fn decay_exponent(sol: &RadialSolution, window: (f64, f64)) -> Result<f64, SpectralError> {
    let (lo, hi) = window;
    if let Some(&node) = sol.nodes.iter().find(|&&n| n >= lo && n <= hi) {
        return Err(SpectralError::NodeInWindow { r: node });
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, &r) in sol.radii.iter().enumerate() {
        if r >= lo && r <= hi {
            xs.push(r.ln());
            ys.push(sol.log_abs_u[i]);
        }
    }
    if xs.len() < 2 {
        return Err(SpectralError::InvalidWindow);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(-(sxy / sxx))
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    pub energy: f64,
    pub converged: bool,
    pub iterations: u32,
    pub box_radius: f64,
}

/// Lowest eigenvalue of the reduced operator `-v'' + Q v` on (0, box]
/// with Dirichlet conditions, discretized by second-order finite
/// differences on a uniform mesh. Bisection on the Sturm node count of
/// the tridiagonal system: the count of negative Sturm pivots equals
/// the number of eigenvalues below E, and is monotone in E (violations
/// abort with a diagnostic). For d = 1 the origin gets a Neumann
/// condition (the even, regular branch); for d >= 2 the regular branch
/// `v ~ r^{(d-1)/2}` vanishes at 0, a Dirichlet condition.
pub fn lowest_eigenvalue(
    v: &RadialPotential,
    d: u32,
    box_radius: f64,
    mesh: usize,
) -> Result<EigenResult, SpectralError> {
    if mesh < 8 || !(box_radius > 0.0) {
        return Err(SpectralError::Invalid(format!(
            "need mesh >= 8 and box_radius > 0, got {mesh}, {box_radius}"
        )));
    }
    let h = box_radius / (mesh + 1) as f64;
    let inv_h2 = 1.0 / (h * h);
    let mut q = Vec::with_capacity(mesh);
    for i in 1..=mesh {
        q.push(reduced_q(v, d, i as f64 * h)?);
    }
    // tridiagonal: diag_i = first_diag/h^2 resp. 2/h^2 plus Q_i, off = -1/h^2
    let first_diag = if d == 1 { 1.0 } else { 2.0 };
    let diag: Vec<f64> = q
        .iter()
        .enumerate()
        .map(|(i, &qi)| qi + if i == 0 { first_diag } else { 2.0 } * inv_h2)
        .collect();
    // Sturm count: number of eigenvalues strictly below e
    let count = |e: f64| -> usize {
        let mut c = 0usize;
        let mut pivot = 1.0f64;
        for &di in &diag {
            pivot = di - e - inv_h2 * inv_h2 / pivot;
            if pivot == 0.0 {
                pivot = -1e-300;
            }
            if pivot < 0.0 {
                c += 1;
            }
        }
        c
    };
    // Gershgorin bounds bracket every eigenvalue
    let q_min = q.iter().cloned().fold(f64::INFINITY, f64::min);
    let q_max = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut lo = q_min - 1.0;
    let mut hi = q_max + 4.0 * inv_h2 + 1.0;
    let c_lo = count(lo);
    let c_hi = count(hi);
    if c_lo > 0 || c_hi < 1 {
        return Err(SpectralError::NoBracket);
    }
    let mut iterations = 0u32;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let c_mid = count(mid);
        if c_mid < c_lo || c_mid > c_hi {
            return Err(SpectralError::SturmViolation { lo: c_lo, hi: c_mid });
        }
        if c_mid >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
        let energy = 0.5 * (lo + hi);
        if hi - lo < 1e-10 * energy.abs().max(1.0) {
            return Ok(EigenResult {
                energy,
                converged: true,
                iterations,
                box_radius,
            });
        }
        if iterations > 200 {
            break;
        }
    }
    Ok(EigenResult {
        energy: 0.5 * (lo + hi),
        converged: false,
        iterations,
        box_radius,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeVerdict {
    CriticalConsistent,
    SubcriticalConsistent,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalityVerdict {
    pub verdict: ProbeVerdict,
    pub lambda_grid: Vec<f64>,
    pub negative_eigenvalue_at: Vec<bool>,
    /// per lambda: (box_radius, energy) pairs actually computed
    pub energies: Vec<Vec<(f64, f64)>>,
}

/// Indicator of r < 1 with a cubic smoothstep ramp on [0.9, 1]; this is
/// a bounded, compactly supported, nonnegative bump, hence
/// infinitesimally form bounded as the criticality definition requires.
pub fn default_bump() -> RadialPotential {
    RadialPotential::callback(|r| {
        if r <= 0.9 {
            1.0
        } else if r >= 1.0 {
            0.0
        } else {
            let t = (1.0 - r) / 0.1;
            t * t * (3.0 - 2.0 * t)
        }
    })
}

/// An eigenvalue below this threshold counts as a negative bound state;
/// the margin absorbs bisection and discretization noise around zero.
pub const NEGATIVE_EIGENVALUE_TOL: f64 = -1e-9;

/// Target mesh spacing for the probe's eigensolves.
const PROBE_SPACING: f64 = 0.004;
const PROBE_MESH_CAP: usize = 1_500_000;

/// Test whether `V - lambda * bump` has a negative bound state for each
/// lambda, growing the box through the schedule until the sign of the
/// lowest eigenvalue stabilizes (two consecutive boxes agreeing).
/// Critical-consistent: negative at every lambda. Subcritical-
/// consistent: the smallest lambda shows no negative eigenvalue at any
/// box. Anything else, including unstabilized signs, is inconclusive.
pub fn criticality_probe(
    v: &RadialPotential,
    d: u32,
    bump: &RadialPotential,
    lambdas: &[f64],
    box_schedule: &[f64],
) -> Result<CriticalityVerdict, SpectralError> {
    if lambdas.is_empty() || box_schedule.is_empty() {
        return Err(SpectralError::Invalid("empty lambda grid or box schedule".into()));
    }
    if lambdas.windows(2).any(|w| w[1] >= w[0]) || lambdas.iter().any(|&l| l <= 0.0) {
        return Err(SpectralError::Invalid(
            "lambdas must be positive and strictly decreasing".into(),
        ));
    }
    let mut negative_at = Vec::with_capacity(lambdas.len());
    let mut energies = Vec::with_capacity(lambdas.len());
    let mut all_stable = true;
    for &lambda in lambdas {
        let v = v.clone();
        let bump = bump.clone();
        let perturbed = RadialPotential::callback(move |r| {
            let base = v.eval(r).unwrap_or(f64::NAN);
            let b = bump.eval(r).unwrap_or(f64::NAN);
            base - lambda * b
        });
        let mut history: Vec<(f64, f64)> = Vec::new();
        let mut stable_sign: Option<bool> = None;
        for &box_radius in box_schedule {
            let mesh = ((box_radius / PROBE_SPACING) as usize).clamp(1000, PROBE_MESH_CAP);
            let result = lowest_eigenvalue(&perturbed, d, box_radius, mesh)?;
            history.push((box_radius, result.energy));
            let negative = result.energy < NEGATIVE_EIGENVALUE_TOL;
            if let Some((_, prev)) = history.iter().rev().nth(1) {
                if (*prev < NEGATIVE_EIGENVALUE_TOL) == negative {
                    stable_sign = Some(negative);
                    break;
                }
            }
        }
        match stable_sign {
            Some(neg) => negative_at.push(neg),
            None => {
                all_stable = false;
                negative_at.push(
                    history
                        .last()
                        .map(|(_, e)| *e < NEGATIVE_EIGENVALUE_TOL)
                        .unwrap_or(false),
                );
            }
        }
        energies.push(history);
    }
    let verdict = if !all_stable {
        ProbeVerdict::Inconclusive
    } else if negative_at.iter().all(|&b| b) {
        ProbeVerdict::CriticalConsistent
    } else if !negative_at.last().unwrap() && smallest_never_negative(v, d, bump, lambdas, box_schedule)? {
        ProbeVerdict::SubcriticalConsistent
    } else {
        ProbeVerdict::Inconclusive
    };
    Ok(CriticalityVerdict {
        verdict,
        lambda_grid: lambdas.to_vec(),
        negative_eigenvalue_at: negative_at,
        energies,
    })
}

/// Subcritical consistency demands the smallest lambda stays
/// non-negative at every box in the schedule, not just until the sign
/// stabilizes.
fn smallest_never_negative(
    v: &RadialPotential,
    d: u32,
    bump: &RadialPotential,
    lambdas: &[f64],
    box_schedule: &[f64],
) -> Result<bool, SpectralError> {
    let lambda = *lambdas.last().unwrap();
    let v = v.clone();
    let bump = bump.clone();
    let perturbed = RadialPotential::callback(move |r| {
        v.eval(r).unwrap_or(f64::NAN) - lambda * bump.eval(r).unwrap_or(f64::NAN)
    });
    for &box_radius in box_schedule {
        let mesh = ((box_radius / PROBE_SPACING) as usize).clamp(1000, PROBE_MESH_CAP);
        let result = lowest_eigenvalue(&perturbed, d, box_radius, mesh)?;
        if result.energy < NEGATIVE_EIGENVALUE_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}
