//! Riesz transform kernels
//! `R_m(x,y) = Gamma(|m|/2)^{-1} int_0^inf d_x^m W_t(x,y) t^{|m|/2-1} dt`
//! by two independent routes:
//!
//! * the time route: adaptive quadrature of the derivative kernel in
//!   `ln t`, with the `t -> inf` tail mapped to a power-law endpoint that a
//!   substitution hint renders smooth;
//! * the closed route: each expansion term is integrated in `t`
//!   analytically via `int_0^inf t^{-b-1} e^{-q/4t} dt = Gamma(b) (q/4)^{-b}`,
//!   leaving only integrals `int s^d q^{-b} dOmega(s)`, done on graded rules.
//!
//! The two must agree; their comparison is one of the crate's main
//! cross-checks.

use super::ensure_off_diagonal;
use crate::geometry::HalfSpacePoint;
use crate::heat_kernel::{derivative_terms, eps_ln_c, ExtendedKernel};
use crate::quadrature::{integrate_adaptive_hinted, EndpointHint, GradedOmegaRule};
use crate::specfun::ln_gamma_unchecked;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct RieszValue {
    pub value: f64,
    pub quad_error: f64,
    pub converged: bool,
}

/// Riesz kernel by adaptive time quadrature.
pub fn riesz_kernel_time(
    kern: &ExtendedKernel,
    m: &[u8],
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
) -> Result<RieszValue> {
    let total: u8 = m.iter().sum();
    if total == 0 {
        return Err(Error::invalid("Riesz transform requires |m| > 0".to_string()));
    }
    let r = vec![0u8; m.len()];
    riesz_time_general(kern, m, &r, 0.5 * total as f64, x, y)
}

/// Time-quadrature route for `Gamma(g)^{-1} int d_x^m d_y^r W_t t^{g-1} dt`
/// with `g = half_m` (the base Riesz weight, also used by the gradient
/// checks which add one derivative without changing the weight).
pub(crate) fn riesz_time_general(
    kern: &ExtendedKernel,
    m: &[u8],
    r: &[u8],
    half_m: f64,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
) -> Result<RieszValue> {
    ensure_off_diagonal(x, y)?;
    let xs = x.coords();
    let ys = y.coords();
    let d2 = x.dist(y).powi(2);
    let t_lo = d2 / 2800.0;
    let t_mid = 1e4 * d2;
    let de = kern.derivative(m, r, 0);
    // slowest tail decay: the largest t-power across all corners
    let mut b_min = f64::INFINITY;
    let n = kern.lam().dim();
    for mask in 0..(1u32 << n) {
        let eps: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
        let terms = derivative_terms(kern.lam(), &eps, m, r, 0);
        for t in &terms.terms {
            b_min = b_min.min(-(terms.base_w + t.tshift as f64 + half_m));
        }
    }
    if b_min <= 0.0 {
        return Err(Error::domain(format!(
            "time integral diverges: tail exponent {b_min} <= 0"
        )));
    }
    let mut scale = 0.0_f64;
    for j in 0..=16 {
        let t = t_lo * (t_mid / t_lo).powf(j as f64 / 16.0);
        scale = scale.max((de.eval(t, xs, ys) * t.powf(half_m)).abs());
    }
    let tol = (2e-10 * scale).max(1e-300);
    // central part on [t_lo, t_mid] in ln t
    let central = integrate_adaptive_hinted(
        |u: f64| {
            let t = u.exp();
            de.eval(t, xs, ys) * t.powf(half_m)
        },
        t_lo.ln(),
        t_mid.ln(),
        tol,
        EndpointHint::Smooth,
        EndpointHint::Smooth,
    )?;
    // tail: substitute tau = 1/t; integrand ~ tau^{b_min - 1} at 0
    let tail = integrate_adaptive_hinted(
        |tau: f64| de.eval(1.0 / tau, xs, ys) * tau.powf(-half_m - 1.0),
        0.0,
        1.0 / t_mid,
        tol,
        EndpointHint::Algebraic(b_min - 1.0),
        EndpointHint::Smooth,
    )?;
    let gamma = ln_gamma_unchecked(half_m).exp();
    Ok(RieszValue {
        value: (central.value + tail.value) / gamma,
        quad_error: (central.abs_error + tail.abs_error) / gamma,
        converged: central.converged && tail.converged,
    })
}

/// Riesz kernel with the time integral done analytically per term.
pub fn riesz_kernel_closed(
    kern: &ExtendedKernel,
    m: &[u8],
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
) -> Result<f64> {
    let total: u8 = m.iter().sum();
    if total == 0 {
        return Err(Error::invalid("Riesz transform requires |m| > 0".to_string()));
    }
    let r = vec![0u8; m.len()];
    riesz_closed_general(kern, m, &r, 0.5 * total as f64, x, y, 14)
}

/// Closed (Gamma-integrated) route; `order` controls the graded rules.
pub(crate) fn riesz_closed_general(
    kern: &ExtendedKernel,
    m: &[u8],
    r: &[u8],
    half_m: f64,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
    order: usize,
) -> Result<f64> {
    let specs = [(m.to_vec(), r.to_vec())];
    let out = riesz_closed_batch(kern, &specs, half_m, x, y, order, None)?;
    Ok(out[0])
}

/// Cache of graded rules keyed by `(eta, u_star bucket, order)`. The
/// bucket rounds `u_star` down to a power of 16; a rule graded from a
/// smaller `u_star` is valid (merely finer) for any larger one.
#[derive(Default)]
pub struct GradedRuleCache {
    map: std::sync::RwLock<std::collections::HashMap<(u64, i32, usize), std::sync::Arc<GradedOmegaRule>>>,
}

impl GradedRuleCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn get(&self, eta: f64, u_star: f64, order: usize) -> Result<std::sync::Arc<GradedOmegaRule>> {
        let bucket = u_star.log2().div_euclid(4.0) as i32; // powers of 16
        let key = (eta.to_bits(), bucket, order);
        if let Some(rule) = self.map.read().unwrap().get(&key) {
            return Ok(rule.clone());
        }
        let rule = std::sync::Arc::new(GradedOmegaRule::new(
            eta,
            (16.0_f64).powi(bucket),
            order,
        )?);
        self.map.write().unwrap().insert(key, rule.clone());
        Ok(rule)
    }
}

/// Evaluate several closed-route integrals `(m, r)` sharing one set of
/// graded rules and one tensor sweep over the `s`-nodes. All specs use the
/// same Riesz weight `half_m`. Powers `q^{-b}` are computed once per node
/// for each distinct exponent.
pub(crate) fn riesz_closed_batch(
    kern: &ExtendedKernel,
    specs: &[(Vec<u8>, Vec<u8>)],
    half_m: f64,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
    order: usize,
    cache: Option<&GradedRuleCache>,
) -> Result<Vec<f64>> {
    ensure_off_diagonal(x, y)?;
    let lam = kern.lam();
    let n = lam.dim();
    let xs = x.coords();
    let ys = y.coords();
    let d2 = x.dist(y).powi(2);
    let beta: Vec<f64> = (0..n).map(|i| 2.0 * xs[i] * ys[i]).collect();
    let ln4 = 4.0_f64.ln();
    let mut totals = vec![0.0; specs.len()];

    // flattened term records per corner: (spec index, sign, ln prefactor,
    // s-powers, slot of the q-exponent)
    struct Rec {
        spec: usize,
        sign: f64,
        ln_pref: f64,
        spow: Vec<u8>,
        slot: usize,
    }

    for mask in 0..(1u32 << n) {
        let eps: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
        let (ln_c, _) = eps_ln_c(lam, &eps);
        let mut b_slots: Vec<f64> = Vec::new();
        let mut recs: Vec<Rec> = Vec::new();
        for (si, (m, r)) in specs.iter().enumerate() {
            let terms = derivative_terms(lam, &eps, m, r, 0);
            for term in &terms.terms {
                debug_assert_eq!(term.qpow, 0, "k = 0 derivatives carry no q-powers");
                let b = -(terms.base_w + term.tshift as f64 + half_m);
                if b <= 0.0 {
                    return Err(Error::domain(format!(
                        "closed Riesz route: term exponent condition violated (b = {b})"
                    )));
                }
                let slot = match b_slots.iter().position(|v| *v == b) {
                    Some(p) => p,
                    None => {
                        b_slots.push(b);
                        b_slots.len() - 1
                    }
                };
                let mut ln_pref = ln_c + term.coeff.abs().ln() + ln_gamma_unchecked(b) + b * ln4;
                for i in 0..n {
                    ln_pref +=
                        term.xpow[i] as f64 * xs[i].ln() + term.ypow[i] as f64 * ys[i].ln();
                }
                recs.push(Rec {
                    spec: si,
                    sign: term.coeff.signum(),
                    ln_pref,
                    spow: term.spow.clone(),
                    slot,
                });
            }
        }
        if recs.is_empty() {
            continue;
        }
        let rules: Vec<std::sync::Arc<GradedOmegaRule>> = (0..n)
            .map(|i| {
                let eta = lam.entries()[i] + 1.0 + eps[i] as f64;
                let u_star = (d2 / beta[i]).clamp(1e-14, 0.5);
                match cache {
                    Some(c) => c.get(eta, u_star, order),
                    None => Ok(std::sync::Arc::new(GradedOmegaRule::new(eta, u_star, order)?)),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        // tensor sweep, accumulating sum_nodes w * s^d * q^{-b} per record
        let mut idx = vec![0usize; n];
        let mut qpow = vec![0.0; b_slots.len()];
        let mut integrals = vec![0.0; recs.len()];
        let mut su = vec![0.0; n];
        loop {
            let mut w = 1.0;
            let mut q = d2;
            for i in 0..n {
                let u = rules[i].nodes[idx[i]];
                w *= rules[i].weights[idx[i]];
                su[i] = u - 1.0;
                q += beta[i] * u;
            }
            let ln_q = q.ln();
            for (p, b) in qpow.iter_mut().zip(&b_slots) {
                *p = (-b * ln_q).exp();
            }
            for (rec, acc) in recs.iter().zip(integrals.iter_mut()) {
                let mut v = w * qpow[rec.slot];
                for i in 0..n {
                    if rec.spow[i] > 0 {
                        v *= su[i].powi(rec.spow[i] as i32);
                    }
                }
                *acc += v;
            }
            let mut done = true;
            for i in (0..n).rev() {
                idx[i] += 1;
                if idx[i] < rules[i].nodes.len() {
                    done = false;
                    break;
                }
                idx[i] = 0;
            }
            if done {
                break;
            }
        }
        for (rec, integral) in recs.iter().zip(&integrals) {
            if *integral != 0.0 {
                totals[rec.spec] +=
                    rec.sign * integral.signum() * (rec.ln_pref + integral.abs().ln()).exp();
            }
        }
    }
    let gamma = ln_gamma_unchecked(half_m).exp();
    Ok(totals.into_iter().map(|t| t / gamma).collect())
}
