//! Finite-difference oracle for kernel derivatives, fully independent of
//! the term calculus it cross-checks.
//!
//! `kernel_product` is a product of one-dimensional factors
//! `w_i(t, x_i, y_i)`, and space derivatives act on single factors. The
//! oracle therefore applies eighth-order central stencils per factor (at
//! most a fourth-order mixed derivative each), Richardson-extrapolates, and
//! only the outer `t`-derivative differences the assembled product. This
//! keeps the roundoff amplification of nested differencing far below the
//! naive all-variables-at-once scheme.

use crate::geometry::{HalfSpacePoint, TypeIndex};
use crate::specfun::bessel_i_scaled;
use crate::{Error, Result};

// 8th-order central coefficients on offsets -4..=4.
const D1: [f64; 9] = [
    1.0 / 280.0,
    -4.0 / 105.0,
    1.0 / 5.0,
    -4.0 / 5.0,
    0.0,
    4.0 / 5.0,
    -1.0 / 5.0,
    4.0 / 105.0,
    -1.0 / 280.0,
];
const D2: [f64; 9] = [
    -1.0 / 560.0,
    8.0 / 315.0,
    -1.0 / 5.0,
    8.0 / 5.0,
    -205.0 / 72.0,
    8.0 / 5.0,
    -1.0 / 5.0,
    8.0 / 315.0,
    -1.0 / 560.0,
];

/// Largest step multiplier the internal scale scan applies.
const SCAN_MAX: f64 = 2.25;
const SCALES: [f64; 4] = [0.7, 1.0, 1.5, 2.25];

#[derive(Debug, Clone, Copy)]
pub struct FdResult {
    pub value: f64,
    pub error_estimate: f64,
    /// Set when a step had to be clamped so small that roundoff dominates.
    pub step_underflow: bool,
}

/// One coordinate factor of the product representation.
fn factor_value(li: f64, t: f64, xi: f64, yi: f64) -> Result<f64> {
    let z = xi * yi / (2.0 * t);
    let nu = li - 0.5;
    let scaled = if nu >= -0.5 {
        bessel_i_scaled(nu, z)?
    } else {
        2.0 * (nu + 1.0) / z * bessel_i_scaled(nu + 1.0, z)? + bessel_i_scaled(nu + 2.0, z)?
    };
    let d = xi - yi;
    Ok((-(2.0 * t).ln() + (0.5 - li) * (xi * yi).ln() - d * d / (4.0 * t) + scaled.ln()).exp())
}

struct FactorPlan {
    li: f64,
    xi: f64,
    yi: f64,
    mi: u8,
    ri: u8,
    hx: f64,
    hy: f64,
}

impl FactorPlan {
    /// Tensor stencil over (x_i, y_i) at a fixed time, one step scale.
    fn stencil(&self, t: f64, scale: f64) -> Result<f64> {
        if self.mi == 0 && self.ri == 0 {
            return factor_value(self.li, t, self.xi, self.yi);
        }
        let mut acc = 0.0;
        let (jx_range, jy_range) = (
            if self.mi > 0 { 0..9 } else { 4..5 },
            if self.ri > 0 { 0..9 } else { 4..5 },
        );
        for jx in jx_range {
            let cx = match self.mi {
                0 => 1.0,
                1 => D1[jx] / (self.hx * scale),
                _ => D2[jx] / (self.hx * scale).powi(2),
            };
            if cx == 0.0 {
                continue;
            }
            let xv = self.xi + (jx as f64 - 4.0) * self.hx * scale;
            for jy in jy_range.clone() {
                let cy = match self.ri {
                    0 => 1.0,
                    1 => D1[jy] / (self.hy * scale),
                    _ => D2[jy] / (self.hy * scale).powi(2),
                };
                if cy == 0.0 {
                    continue;
                }
                let yv = self.yi + (jy as f64 - 4.0) * self.hy * scale;
                acc += cx * cy * factor_value(self.li, t, xv, yv)?;
            }
        }
        Ok(acc)
    }

    /// Double-Richardson (kills h^8 and h^10) at one base scale.
    fn richardson(&self, t: f64, scale: f64) -> Result<f64> {
        if self.mi == 0 && self.ri == 0 {
            return factor_value(self.li, t, self.xi, self.yi);
        }
        let rho: f64 = 4.0 / 3.0;
        let a0 = self.stencil(t, scale)?;
        let a1 = self.stencil(t, scale / rho)?;
        let a2 = self.stencil(t, scale / (rho * rho))?;
        let r8 = rho.powi(8);
        let b0 = (r8 * a1 - a0) / (r8 - 1.0);
        let b1 = (r8 * a2 - a1) / (r8 - 1.0);
        let r10 = rho.powi(10);
        Ok((r10 * b1 - b0) / (r10 - 1.0))
    }
}

/// Pick the most self-consistent adjacent pair from a scan over scales.
///
/// The error estimate mixes in the neighbouring pair differences so that a
/// coincidental crossing of two noisy results cannot report false
/// confidence: a genuine plateau has several small gaps in a row.
fn scan_pick(results: &[f64]) -> (f64, f64) {
    let diffs: Vec<f64> = results
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .collect();
    let mut best = (f64::INFINITY, 0usize);
    for (i, d) in diffs.iter().enumerate() {
        if *d < best.0 {
            best = (*d, i);
        }
    }
    let mut context = f64::INFINITY;
    if best.1 > 0 {
        context = context.min(diffs[best.1 - 1]);
    }
    if best.1 + 1 < diffs.len() {
        context = context.min(diffs[best.1 + 1]);
    }
    let est = best.0.max(0.25 * context);
    (0.5 * (results[best.1] + results[best.1 + 1]), est)
}

/// Mixed derivative `d_t^k d_x^m d_y^r` of the heat kernel by Richardson-
/// extrapolated central differences of `kernel_product`'s factors.
///
/// `step` scales the automatically chosen per-variable steps (pass 1.0 for
/// the default). Per-variable orders up to 2 are supported, covering the
/// `(|m|, |r|, k) <= (2, 2, 2)` budget.
#[allow(clippy::too_many_arguments)]
pub fn kernel_derivative_fd(
    lam: &TypeIndex,
    m: &[u8],
    r: &[u8],
    k: u8,
    t: f64,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
    step: f64,
) -> Result<FdResult> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("time must be positive, got {t}")));
    }
    if !(step > 0.0) {
        return Err(Error::invalid("step scale must be positive".to_string()));
    }
    let n = lam.dim();
    if m.len() != n || r.len() != n || x.dim() != n || y.dim() != n {
        return Err(Error::invalid("dimension mismatch".to_string()));
    }
    if m.iter().chain(r).any(|d| *d > 2) || k > 2 {
        return Err(Error::invalid(
            "finite-difference oracle supports per-variable orders <= 2".to_string(),
        ));
    }
    let xs = x.coords();
    let ys = y.coords();
    let diff_scale = (2.0 * t).sqrt();
    let mut underflow = false;
    let mut space_step = |v: f64, o: f64| -> f64 {
        let ds = (v - o).abs();
        let mut l = diff_scale.min(0.6 * v);
        if ds > 0.0 {
            l = l.min(2.5 * t / ds);
        }
        let h = (0.16 * l * step).min(v / (4.6 * SCAN_MAX));
        if h < 1e-7 * v {
            underflow = true;
        }
        h
    };
    let plans: Vec<FactorPlan> = (0..n)
        .map(|i| FactorPlan {
            li: lam.entries()[i],
            xi: xs[i],
            yi: ys[i],
            mi: m[i],
            ri: r[i],
            hx: if m[i] > 0 { space_step(xs[i], ys[i]) } else { 0.0 },
            hy: if r[i] > 0 { space_step(ys[i], xs[i]) } else { 0.0 },
        })
        .collect();

    let product_at = |tau: f64, scale: f64| -> Result<f64> {
        let mut p = 1.0;
        for plan in &plans {
            p *= plan.richardson(tau, scale)?;
        }
        Ok(p)
    };

    if k == 0 {
        let mut results = Vec::with_capacity(SCALES.len());
        for s in SCALES {
            results.push(product_at(t, s)?);
        }
        let (value, err) = scan_pick(&results);
        return Ok(FdResult {
            value,
            error_estimate: err,
            step_underflow: underflow,
        });
    }

    // outer time difference over the space-differentiated product; the
    // space steps are frozen so the function of tau stays smooth
    let qmin = crate::geometry::dist(xs, ys).powi(2);
    let p_scale = 0.5 * n as f64 + lam.total().abs() + 4.0;
    let mut lt = t / p_scale;
    if qmin > 0.0 {
        lt = lt.min(4.0 * t * t / qmin);
    }
    let ht = (0.16 * lt * step).min(t / (4.6 * SCAN_MAX));
    if ht < 1e-9 * t {
        underflow = true;
    }
    let time_stencil = |scale: f64| -> Result<f64> {
        let h = ht * scale;
        let mut acc = 0.0;
        for (j, &c) in (if k == 1 { &D1 } else { &D2 }).iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let tau = t + (j as f64 - 4.0) * h;
            acc += c * product_at(tau, 1.0)? / h.powi(k as i32);
        }
        Ok(acc)
    };
    let rho: f64 = 4.0 / 3.0;
    let time_richardson = |scale: f64| -> Result<f64> {
        let a0 = time_stencil(scale)?;
        let a1 = time_stencil(scale / rho)?;
        let a2 = time_stencil(scale / (rho * rho))?;
        let r8 = rho.powi(8);
        let b0 = (r8 * a1 - a0) / (r8 - 1.0);
        let b1 = (r8 * a2 - a1) / (r8 - 1.0);
        let r10 = rho.powi(10);
        Ok((r10 * b1 - b0) / (r10 - 1.0))
    };
    let mut results = Vec::with_capacity(SCALES.len());
    for s in SCALES {
        results.push(time_richardson(s)?);
    }
    let (value, err) = scan_pick(&results);
    Ok(FdResult {
        value,
        error_estimate: err,
        step_underflow: underflow,
    })
}
