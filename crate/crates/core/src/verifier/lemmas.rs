//! Checks for the supporting integral lemmas: the bridge estimate, the
//! weighted-norm bound on `Upsilon_u`, the derivative-expansion majorant,
//! the exact `q`-comparison inequalities, the measure-equivalence ratio,
//! and ball-measure comparability.

use super::checks::KernelCache;
use super::report::EstimateReport;
use super::sample::SampleConfig;
use super::VerifyConfig;
use crate::geometry::{dist, mu_ball, q_form, v_lambda, HalfSpacePoint, TypeIndex};
use crate::heat_kernel::{derivative_terms, est33_rhs};
use crate::quadrature::{time_grid, GradedOmegaRule};
use crate::{Error, Result};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn pad_f(p: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    out[..p.len().min(n)].copy_from_slice(&p[..p.len().min(n)]);
    out
}

fn pad_u(p: &[u8], n: usize) -> Vec<u8> {
    let mut out = vec![0u8; n];
    out[..p.len().min(n)].copy_from_slice(&p[..p.len().min(n)]);
    out
}

fn report_from_ratios(
    check_id: &str,
    params: String,
    samples: &[SampleConfig],
    base: &[(usize, f64)],
    refined: Option<&[(usize, f64)]>,
) -> EstimateReport {
    let max_of = |vals: &[(usize, f64)]| -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (i, v) in vals {
            if *v > best.0 {
                best = (*v, *i);
            }
        }
        best
    };
    let (c_base, base_i) = max_of(base);
    let (c_emp, arg_i, drift) = match refined {
        Some(r) => {
            let (c_ref, i_ref) = max_of(r);
            (
                c_ref,
                i_ref,
                Some((c_ref - c_base).abs() / c_base.abs().max(f64::MIN_POSITIVE)),
            )
        }
        None => (c_base, base_i, None),
    };
    EstimateReport {
        check_id: check_id.to_string(),
        params,
        n_samples: samples.len(),
        c_emp,
        argmax: samples.get(arg_i).cloned(),
        drift,
        violations: 0,
    }
}

/// Per-coordinate `u = 1+s` rule for `Omega_eta`, atomic when `eta = 0`.
fn u_rule(eta: f64, u_star: f64, order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if eta == 0.0 {
        let w = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        Ok((vec![0.0, 2.0], vec![w, w]))
    } else {
        let rule = GradedOmegaRule::new(eta, u_star, order)?;
        Ok((rule.nodes, rule.weights))
    }
}

/// `(x+y)^{2 xi} int q^{-n/2-|lam|-|xi|} dOmega_{lam+xi+kappa}(s)` against
/// `1/v_lambda(x,|x-y|)`; requires `lam + xi + kappa >= 0` componentwise.
fn bridge_ratio(
    s: &SampleConfig,
    xi: &[f64],
    kappa: &[f64],
    order: usize,
) -> Result<Option<f64>> {
    let n = s.lam.len();
    let xi = pad_f(xi, n);
    let kappa = pad_f(kappa, n);
    let eta: Vec<f64> = (0..n).map(|i| s.lam[i] + xi[i] + kappa[i]).collect();
    if eta.iter().any(|e| *e < 0.0) {
        return Ok(None); // outside the lemma's hypotheses for this sample
    }
    let d = s.separation();
    let d2 = d * d;
    let abs_xi: f64 = xi.iter().sum();
    let lam_total: f64 = s.lam.iter().sum();
    let p = -(0.5 * n as f64 + lam_total + abs_xi);
    let beta: Vec<f64> = (0..n).map(|i| 2.0 * s.x[i] * s.y[i]).collect();
    let rules: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .map(|i| u_rule(eta[i], (d2 / beta[i]).clamp(1e-14, 0.5), order))
        .collect::<Result<Vec<_>>>()?;
    // tensor loop
    let mut idx = vec![0usize; n];
    let mut integral = 0.0;
    loop {
        let mut w = 1.0;
        let mut q = d2;
        for i in 0..n {
            w *= rules[i].1[idx[i]];
            q += beta[i] * rules[i].0[idx[i]];
        }
        integral += w * (p * q.ln()).exp();
        let mut done = true;
        for i in (0..n).rev() {
            idx[i] += 1;
            if idx[i] < rules[i].0.len() {
                done = false;
                break;
            }
            idx[i] = 0;
        }
        if done {
            break;
        }
    }
    let mut ln_pref = 0.0;
    for i in 0..n {
        ln_pref += 2.0 * xi[i] * (s.x[i] + s.y[i]).ln();
    }
    let lhs = (ln_pref + integral.ln()).exp();
    let lam = s.type_index();
    let rhs = 1.0 / v_lambda(&lam, &s.x_point(), d);
    Ok(Some(lhs / rhs))
}

/// Bridge lemma check over a sample set.
pub fn check_bridge(
    xi: &[f64],
    kappa: &[f64],
    samples: &[SampleConfig],
    cfg: &VerifyConfig,
) -> Result<EstimateReport> {
    let run = |order: usize| -> Result<Vec<(usize, f64)>> {
        let r: Result<Vec<Option<(usize, f64)>>> = samples
            .par_iter()
            .enumerate()
            .map(|(i, s)| Ok(bridge_ratio(s, xi, kappa, order)?.map(|v| (i, v))))
            .collect();
        Ok(r?.into_iter().flatten().collect())
    };
    let base = run((cfg.order / 2).max(8))?;
    if base.is_empty() {
        return Err(Error::invalid(
            "no samples satisfy the bridge hypotheses".to_string(),
        ));
    }
    let refined = if cfg.refine {
        Some(run(cfg.order.max(16))?)
    } else {
        None
    };
    Ok(report_from_ratios(
        "bridge",
        format!("xi={xi:?},kappa={kappa:?}"),
        samples,
        &base,
        refined.as_deref(),
    ))
}

/// Parameters of one `Upsilon_u` instantiation.
#[derive(Debug, Clone)]
pub struct UpsilonParams {
    pub eps: Vec<u8>,
    pub theta: Vec<u8>,
    pub rho: Vec<u8>,
    pub u: f64,
    pub p: f64, // inf encoded as f64::INFINITY
    pub w: f64,
    pub c: f64,
}

impl UpsilonParams {
    pub fn label(&self) -> String {
        format!(
            "eps={:?},theta={:?},rho={:?},u={},p={},W={},C={}",
            self.eps, self.theta, self.rho, self.u, self.p, self.w, self.c
        )
    }

    fn validate(&self) -> Result<()> {
        for (t, e) in self.theta.iter().zip(&self.eps) {
            if *t > 2 * e {
                return Err(Error::invalid("theta must satisfy theta <= 2 eps".to_string()));
            }
        }
        for (r, e) in self.rho.iter().zip(&self.eps) {
            if *r > 2 * e {
                return Err(Error::invalid("rho must satisfy rho <= 2 eps".to_string()));
            }
        }
        if self.u < 0.0 || self.c <= 0.0 || !(self.p >= 1.0) {
            return Err(Error::invalid("need u >= 0, C > 0, p >= 1".to_string()));
        }
        Ok(())
    }
}

/// `||Upsilon_u(x,y,.)||_{L^p(t^{W-1}dt)}` against `|x-y|^{-u}/v(x,|x-y|)`.
fn upsilon_ratio(
    s: &SampleConfig,
    par: &UpsilonParams,
    kern: &crate::heat_kernel::ExtendedKernel,
    t_nodes: usize,
) -> Result<f64> {
    let n = s.lam.len();
    let eps = pad_u(&par.eps, n);
    let theta = pad_u(&par.theta, n);
    let rho = pad_u(&par.rho, n);
    let lam_total: f64 = s.lam.iter().sum();
    let abs_eps: f64 = eps.iter().map(|e| *e as f64).sum();
    let abs_theta: f64 = theta.iter().map(|e| *e as f64).sum();
    let abs_rho: f64 = rho.iter().map(|e| *e as f64).sum();
    let w_over_p = if par.p.is_infinite() { 0.0 } else { par.w / par.p };
    let power = -0.5 * n as f64 - lam_total - 2.0 * abs_eps + 0.5 * abs_theta + 0.5 * abs_rho
        - w_over_p
        - 0.5 * par.u;
    let d = s.separation();
    let span = s
        .x
        .iter()
        .zip(&s.y)
        .map(|(a, b)| (a + b) * (a + b))
        .sum::<f64>();
    let grid = time_grid(1e-8 * par.c * d * d, 1e8 * par.c * span, t_nodes)?;
    let mut ln_poly = 0.0;
    for i in 0..n {
        ln_poly += (2.0 * eps[i] as f64 - theta[i] as f64) * s.x[i].ln()
            + (2.0 * eps[i] as f64 - rho[i] as f64) * s.y[i].ln();
    }
    let values: Vec<f64> = grid
        .nodes
        .iter()
        .map(|t| {
            let kappa = par.c / t;
            let mut ln = ln_poly + power * t.ln();
            for i in 0..n {
                let (shift, m0) = kern.omega_rule(i, eps[i]).gaussian_integral(
                    kappa, s.x[i], s.y[i],
                );
                ln += shift + m0.ln();
            }
            ln.exp()
        })
        .collect();
    let lhs = if par.p.is_infinite() {
        grid.sup_norm(&values)
    } else {
        grid.lp_norm(&values, par.p, par.w)
    };
    let lam = s.type_index();
    let rhs = d.powf(-par.u) / v_lambda(&lam, &s.x_point(), d);
    Ok(lhs / rhs)
}

/// Upsilon lemma check over a sample set.
pub fn check_upsilon(
    par: &UpsilonParams,
    samples: &[SampleConfig],
    cfg: &VerifyConfig,
) -> Result<EstimateReport> {
    par.validate()?;
    let run = |order: usize| -> Result<Vec<(usize, f64)>> {
        let cache = KernelCache::build(samples, order)?;
        samples
            .par_iter()
            .enumerate()
            .map(|(i, s)| Ok((i, upsilon_ratio(s, par, cache.get(s), cfg.t_nodes)?)))
            .collect()
    };
    let base = run(cfg.order)?;
    let refined = if cfg.refine {
        Some(run(2 * cfg.order)?)
    } else {
        None
    };
    Ok(report_from_ratios(
        "upsilon",
        par.label(),
        samples,
        &base,
        refined.as_deref(),
    ))
}

/// Pointwise derivative-expansion majorant check: the exact expansion of
/// `d_t^k d_x^m d_y^r [t^W (xy)^{2 eps} e^{-q/4t}]` against the lemma's
/// right-hand side, sampled over `(x, y, t, s)`.
pub fn check_est33(
    eps: &[u8],
    m: &[u8],
    r: &[u8],
    k: u8,
    samples: &[SampleConfig],
    cfg: &VerifyConfig,
) -> Result<EstimateReport> {
    if m.iter().chain(r.iter()).any(|v| *v > 3) || k > 3 {
        return Err(Error::invalid(
            "derivative orders are budgeted at <= 3 per coordinate".to_string(),
        ));
    }
    let draws = |mult: usize| -> Vec<(usize, f64)> {
        samples
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let n = s.lam.len();
                let epsn = pad_u(eps, n);
                let mn = pad_u(m, n);
                let rn = pad_u(r, n);
                let lam = s.type_index();
                let terms = derivative_terms(&lam, &epsn, &mn, &rn, k);
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (i as u64).wrapping_mul(0x9e37));
                let d2 = s.separation().powi(2);
                let mut worst = 0.0_f64;
                let n_draws = 4 * mult;
                for j in 0..n_draws + 2 {
                    let sv: Vec<f64> = if j == n_draws {
                        vec![-1.0; n]
                    } else if j == n_draws + 1 {
                        vec![1.0; n]
                    } else {
                        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
                    };
                    let t = 1e-6 * d2 * (1e12_f64).powf(rng.random::<f64>());
                    let lhs = terms.eval_sum(&s.x, &s.y, &sv, t).abs();
                    let rhs = est33_rhs(&lam, &epsn, &mn, &rn, k, None, t, &s.x, &s.y, &sv);
                    if rhs > 0.0 {
                        worst = worst.max(lhs / rhs);
                    }
                }
                (i, worst)
            })
            .collect()
    };
    let base = draws(1);
    let refined = if cfg.refine { Some(draws(4)) } else { None };
    Ok(report_from_ratios(
        "est33",
        format!("eps={eps:?},m={m:?},r={r:?},k={k}"),
        samples,
        &base,
        refined.as_deref(),
    ))
}

/// Exact inequality checks: `q >= |x-y|^2` (computed with the cancellation-
/// prone textbook formula) and the two-sided `q`-comparison under
/// `|x-y| > 2|x-z|` and its `y`-mirror. Returns the violation count; the
/// empirical constant field records the worst two-sided ratio divided by 4
/// (at most 1 when the lemma holds).
pub fn check_theta_lemma(samples: &[SampleConfig], cfg: &VerifyConfig) -> Result<EstimateReport> {
    let results: Vec<(u64, f64)> = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let n = s.lam.len();
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (i as u64).wrapping_mul(0x85eb));
            let x = s.x_point();
            let y = s.y_point();
            let z = HalfSpacePoint::new(s.x_prime.clone()).unwrap();
            let zy = HalfSpacePoint::new(s.y_prime.clone()).unwrap();
            let mut violations = 0u64;
            let mut worst = 0.0_f64;
            // random s draws plus all corners
            let mut svs: Vec<Vec<f64>> = (0..4)
                .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            for mask in 0..(1u32 << n) {
                svs.push((0..n).map(|b| if (mask >> b) & 1 == 1 { 1.0 } else { -1.0 }).collect());
            }
            for sv in &svs {
                let q_xy = q_form(&x, &y, sv);
                // naive-formula lower bound check
                let q_scale: f64 = s
                    .x
                    .iter()
                    .map(|v| v * v)
                    .chain(s.y.iter().map(|v| v * v))
                    .sum::<f64>();
                let naive = q_scale
                    + 2.0 * s.x.iter().zip(&s.y).zip(sv).map(|((a, b), c)| a * b * c).sum::<f64>();
                let d2 = dist(&s.x, &s.y).powi(2);
                if naive < d2 - 1e-12 * q_scale {
                    violations += 1;
                }
                // two-sided comparison with z = x'
                let q_zy = q_form(&z, &y, sv);
                if q_zy < 0.25 * q_xy * (1.0 - 1e-12) || q_zy > 4.0 * q_xy * (1.0 + 1e-12) {
                    violations += 1;
                }
                worst = worst.max(q_zy / (4.0 * q_xy)).max(q_xy / (4.0 * q_zy));
                // mirror with z = y'
                let q_xz = q_form(&x, &zy, sv);
                if q_xz < 0.25 * q_xy * (1.0 - 1e-12) || q_xz > 4.0 * q_xy * (1.0 + 1e-12) {
                    violations += 1;
                }
                worst = worst.max(q_xz / (4.0 * q_xy)).max(q_xy / (4.0 * q_xz));
            }
            (violations, worst)
        })
        .collect();
    let violations: u64 = results.iter().map(|(v, _)| v).sum();
    let mut c_emp = 0.0_f64;
    let mut arg = 0usize;
    for (i, (_, w)) in results.iter().enumerate() {
        if *w > c_emp {
            c_emp = *w;
            arg = i;
        }
    }
    Ok(EstimateReport {
        check_id: "theta".to_string(),
        params: String::new(),
        n_samples: samples.len(),
        c_emp,
        argmax: samples.get(arg).cloned(),
        drift: None,
        violations,
    })
}

/// Measure-equivalence ratio `|z-y| v(z,|z-y|) / (|x-y| v(x,|x-y|))` on the
/// constrained set `|x-y| > 2|x-z|`; reports the worst two-sided ratio.
pub fn check_measure_equiv(samples: &[SampleConfig], cfg: &VerifyConfig) -> Result<EstimateReport> {
    let base_n = cfg.samples.min(samples.len());
    let run = |set: &[SampleConfig]| -> Vec<(usize, f64)> {
        set.par_iter()
            .enumerate()
            .map(|(i, s)| {
                let lam = s.type_index();
                let z = HalfSpacePoint::new(s.x_prime.clone()).unwrap();
                let y = s.y_point();
                let dzy = z.dist(&y);
                let dxy = s.separation();
                let num = dzy * v_lambda(&lam, &z, dzy);
                let den = dxy * v_lambda(&lam, &s.x_point(), dxy);
                (i, (num / den).max(den / num))
            })
            .collect()
    };
    // the ratio involves no quadrature at all; the refinement pass is the
    // sample-superset extension
    let base = run(&samples[..base_n]);
    let refined = if cfg.refine { Some(run(samples)) } else { None };
    Ok(report_from_ratios(
        "measure-equivalence",
        String::new(),
        samples,
        &base,
        refined.as_deref(),
    ))
}

/// Ball-measure comparability: the empirical two-sided spread of
/// `mu_lambda(B)/v_lambda` and its drift under a quadrupled sampling
/// budget.
pub fn check_ball_comparability(
    lam_grid: &[Vec<f64>],
    count: usize,
    seed: u64,
    budget: usize,
) -> Result<EstimateReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(count);
    for i in 0..count {
        let lam = &lam_grid[i % lam_grid.len()];
        let n = lam.len();
        let mut x: Vec<f64> = (0..n)
            .map(|_| 1e-3 * (3.0e3_f64).powf(rng.random::<f64>()))
            .collect();
        if i % 3 == 0 {
            x[0] = 1e-3 * (10.0_f64).powf(rng.random::<f64>());
        }
        let radius = 1e-2 * (1e3_f64).powf(rng.random::<f64>());
        cases.push((lam.clone(), x, radius));
    }
    let spread = |budget: usize| -> Result<(f64, f64)> {
        let ratios: Result<Vec<f64>> = cases
            .par_iter()
            .map(|(lam, x, radius)| {
                let lam = TypeIndex::new(lam.clone())?;
                let xp = HalfSpacePoint::new(x.clone())?;
                let est = mu_ball(&lam, &xp, *radius, budget)?;
                Ok(est.value / v_lambda(&lam, &xp, *radius))
            })
            .collect();
        let ratios = ratios?;
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0_f64, f64::max);
        Ok((lo, hi))
    };
    let (lo1, hi1) = spread(budget)?;
    let (lo2, hi2) = spread(4 * budget)?;
    let drift = ((lo2 - lo1).abs() / lo1).max((hi2 - hi1).abs() / hi1);
    Ok(EstimateReport {
        check_id: "ball-comparability".to_string(),
        params: format!("budget={budget}"),
        n_samples: count,
        c_emp: hi2 / lo2,
        argmax: None,
        drift: Some(drift),
        violations: 0,
    })
}
