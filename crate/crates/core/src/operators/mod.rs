//! Operator kernels built from the heat semigroup: the maximal-operator
//! profile, square-function profiles, Laplace and Laplace-Stieltjes
//! multiplier kernels, Riesz kernels (two independent routes), the
//! subordinated Poisson kernel, and semigroup / multiplier application to
//! sampled functions.
//!
//! All kernel sections are evaluated strictly off the diagonal; the guard
//! `|x - y| >= 1e-8 (|x| + |y|)` rejects degenerate pairs.

mod riesz;

pub use riesz::{riesz_kernel_closed, riesz_kernel_time, GradedRuleCache, RieszValue};
pub(crate) use riesz::riesz_closed_batch;

use crate::geometry::{HalfSpacePoint, TypeIndex};
use crate::hankel::{hankel_transform, RadialGrid, RadialGridFunction, TransformValue};
use crate::heat_kernel::ExtendedKernel;
use crate::quadrature::{
    integrate_adaptive_hinted, time_grid, EndpointHint, LogTimeGrid,
};
use crate::{Error, Result};
use num_complex::Complex64;

/// A kernel's time section sampled on a logarithmic grid.
#[derive(Debug, Clone)]
pub struct TimeProfile {
    pub grid: LogTimeGrid,
    pub values: Vec<f64>,
    /// Exponent `W` of the weighted norm `L^p(t^{W-1} dt)` this profile is
    /// measured in.
    pub weight_exponent: f64,
}

impl TimeProfile {
    /// Sup over the grid (the `C_0`/`L^inf(dt)` norm proxy).
    pub fn sup_norm(&self) -> f64 {
        self.grid.sup_norm(&self.values)
    }

    /// `L^p(t^{W-1} dt)` norm over the grid range.
    pub fn lp_norm(&self, p: f64) -> f64 {
        self.grid.lp_norm(&self.values, p, self.weight_exponent)
    }

    pub fn l2_norm(&self) -> f64 {
        self.lp_norm(2.0)
    }

    /// True when both grid endpoints carry values below `1e-10` of the
    /// peak, i.e. the section visibly decays to zero in both directions
    /// (the numerical `C_0` membership check).
    pub fn peak_bracketed(&self) -> bool {
        let peak = self.sup_norm();
        if peak == 0.0 {
            return false;
        }
        let first = self.values.first().copied().unwrap_or(0.0).abs();
        let last = self.values.last().copied().unwrap_or(0.0).abs();
        first <= 1e-10 * peak && last <= 1e-10 * peak
    }
}

/// Bounded symbol `psi` of a Laplace-transform-type multiplier.
pub struct LaplaceSymbol {
    psi: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub bound: f64,
}

impl LaplaceSymbol {
    pub fn new(psi: impl Fn(f64) -> f64 + Send + Sync + 'static, bound: f64) -> Result<Self> {
        if !(bound >= 0.0) || !bound.is_finite() {
            return Err(Error::invalid(format!("psi bound must be finite, got {bound}")));
        }
        Ok(LaplaceSymbol {
            psi: Box::new(psi),
            bound,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let v = (self.psi)(t);
        debug_assert!(v.abs() <= self.bound * (1.0 + 1e-12), "psi exceeds its declared bound");
        v
    }
}

/// Finite atomic approximation of a complex Borel measure on `(0, inf)`.
#[derive(Debug, Clone)]
pub struct StieltjesMeasure {
    pub atoms: Vec<(f64, Complex64)>,
}

impl StieltjesMeasure {
    pub fn new(atoms: Vec<(f64, Complex64)>) -> Result<Self> {
        let mut seen = atoms.iter().map(|(t, _)| *t).collect::<Vec<_>>();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in seen.windows(2) {
            if w[0] == w[1] {
                return Err(Error::invalid(format!("duplicate atom at t = {}", w[0])));
            }
        }
        for (t, w) in &atoms {
            if !(*t > 0.0) || !t.is_finite() || !w.norm().is_finite() {
                return Err(Error::invalid(format!("invalid atom ({t}, {w})")));
            }
        }
        Ok(StieltjesMeasure { atoms })
    }

    /// Total variation `sum |w_i|`.
    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w.norm()).sum()
    }
}

pub(crate) fn ensure_off_diagonal(x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<()> {
    let d = x.dist(y);
    let scale = x.norm_sq().sqrt() + y.norm_sq().sqrt();
    if d < 1e-8 * scale {
        return Err(Error::domain(format!(
            "kernel evaluation requires x != y (|x-y| = {d:.3e} below the guard)"
        )));
    }
    Ok(())
}

/// The natural time grid for a pair `(x, y)`: `[1e-6, 1e6]` scaled by
/// `|x-y|^2`, the time scale of `exp(-q/4t)`.
pub fn default_time_grid(x: &HalfSpacePoint, y: &HalfSpacePoint, nodes: usize) -> Result<LogTimeGrid> {
    let d2 = x.dist(y).powi(2);
    time_grid(1e-6 * d2, 1e6 * d2, nodes)
}

/// `W_t^lambda f(x)` by quadrature of the extended-representation kernel
/// against the sampled function.
pub fn heat_apply(
    kern: &ExtendedKernel,
    t: f64,
    f: &RadialGridFunction,
    x: &HalfSpacePoint,
) -> Result<TransformValue> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("time must be positive, got {t}")));
    }
    if kern.lam().dim() != f.dim() || kern.lam().dim() != x.dim() {
        return Err(Error::invalid("dimension mismatch".to_string()));
    }
    let xs = x.coords();
    let value = f.integrate_against(|y| kern.eval(t, xs, y));
    Ok(TransformValue {
        value,
        tail_estimate: f.edge_mass(),
    })
}

/// The maximal-operator kernel section `{W_t(x,y)}_{t>0}` on a grid.
pub fn maximal_profile(
    kern: &ExtendedKernel,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
    grid: &LogTimeGrid,
) -> Result<TimeProfile> {
    ensure_off_diagonal(x, y)?;
    let values = grid
        .nodes
        .iter()
        .map(|t| kern.eval(*t, x.coords(), y.coords()))
        .collect();
    Ok(TimeProfile {
        grid: grid.clone(),
        values,
        weight_exponent: 1.0,
    })
}

/// Numerical `C_0` membership of the section `t -> W_t(x,y)`: both limits
/// vanish below `1e-10` of the peak.
///
/// The large-`t` decay is only polynomial with exponent `n/2 + |lambda|`
/// (arbitrarily slow as `lambda_i -> -1/2`), so the bracket extends far
/// enough in `t` for that power law to fall below the threshold.
pub fn c0_membership(
    kern: &ExtendedKernel,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
) -> Result<bool> {
    ensure_off_diagonal(x, y)?;
    let d2 = x.dist(y).powi(2);
    let decay = 0.5 * kern.lam().dim() as f64 + kern.lam().total();
    let decades_needed = 10.5 / decay + 8.0;
    let t_hi = d2 * 10.0_f64.powf(decades_needed.min(280.0));
    let grid = time_grid(1e-8 * d2, t_hi, 96)?;
    let prof = maximal_profile(kern, x, y, &grid)?;
    Ok(prof.peak_bracketed())
}

/// The square-function kernel section `{d_t^k d_x^m W_t(x,y)}_{t>0}`,
/// measured in `L^2(t^{|m|+2k-1} dt)`.
pub fn g_kernel_profile(
    kern: &ExtendedKernel,
    m: &[u8],
    k: u8,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
    grid: &LogTimeGrid,
) -> Result<TimeProfile> {
    ensure_off_diagonal(x, y)?;
    let total_m: u8 = m.iter().sum();
    if total_m + k == 0 {
        return Err(Error::invalid("square function requires |m| + k > 0".to_string()));
    }
    let r = vec![0u8; m.len()];
    let de = kern.derivative(m, &r, k);
    let values = grid
        .nodes
        .iter()
        .map(|t| de.eval(*t, x.coords(), y.coords()))
        .collect();
    Ok(TimeProfile {
        grid: grid.clone(),
        values,
        weight_exponent: (total_m + 2 * k) as f64,
    })
}

/// `g_{m,k}(f)(x) = || d_x^m d_t^k W_t f(x) ||_{L^2(t^{|m|+2k-1} dt)}`.
pub fn g_apply(
    kern: &ExtendedKernel,
    m: &[u8],
    k: u8,
    f: &RadialGridFunction,
    x: &HalfSpacePoint,
    grid: &LogTimeGrid,
) -> Result<f64> {
    let total_m: u8 = m.iter().sum();
    if total_m + k == 0 {
        return Err(Error::invalid("square function requires |m| + k > 0".to_string()));
    }
    let r = vec![0u8; m.len()];
    let de = kern.derivative(m, &r, k);
    let xs = x.coords();
    let values: Vec<f64> = grid
        .nodes
        .iter()
        .map(|t| f.integrate_against(|y| de.eval(*t, xs, y)))
        .collect();
    Ok(grid.lp_norm(&values, 2.0, (total_m + 2 * k) as f64))
}

/// Result of a time-integrated kernel evaluation.
#[derive(Debug, Clone, Copy)]
pub struct IntegratedKernelValue {
    pub value: f64,
    /// Bound on the neglected time tails.
    pub tail_bound: f64,
    pub quad_error: f64,
    pub converged: bool,
}

/// Laplace-transform-type multiplier kernel
/// `K_psi(x,y) = -int_0^inf psi(t) d_t W_t(x,y) dt`.
///
/// The integral is taken numerically on `[t_lo, T]`; beyond `T` the symbol
/// is frozen at `psi(T)`, which integrates the remaining `d_t W` exactly to
/// `psi(T) W_T(x,y)`. The reported tail bound covers the frozen-symbol
/// residual by `2 ||psi|| W_T`, and the sub-`t_lo` piece by `||psi|| W_{t_lo}`.
pub fn laplace_mult_kernel(
    kern: &ExtendedKernel,
    psi: &LaplaceSymbol,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
) -> Result<IntegratedKernelValue> {
    laplace_type_integral(kern, psi, &vec![0; kern.lam().dim()], &vec![0; kern.lam().dim()], x, y)
}

pub(crate) fn laplace_type_integral(
    kern: &ExtendedKernel,
    psi: &LaplaceSymbol,
    m: &[u8],
    r: &[u8],
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
) -> Result<IntegratedKernelValue> {
    ensure_off_diagonal(x, y)?;
    let xs = x.coords();
    let ys = y.coords();
    let d2 = x.dist(y).powi(2);
    let t_lo = d2 / 2800.0; // exp(-q/4t) < e^{-700} below this
    let t_hi = 1e6 * d2;
    let de_t = kern.derivative(m, r, 1); // d_t of the requested derivative
    let de_0 = kern.derivative(m, r, 0);
    // integrand scale for the absolute tolerance
    let mut scale = 0.0_f64;
    for j in 0..=12 {
        let t = t_lo * (t_hi / t_lo).powf(j as f64 / 12.0);
        scale = scale.max((psi.eval(t) * de_t.eval(t, xs, ys) * t).abs());
    }
    let tol = (1e-9 * scale).max(1e-300);
    let quad = integrate_adaptive_hinted(
        |u: f64| {
            let t = u.exp();
            psi.eval(t) * de_t.eval(t, xs, ys) * t
        },
        t_lo.ln(),
        t_hi.ln(),
        tol,
        EndpointHint::Smooth,
        EndpointHint::Smooth,
    )?;
    let w_hi = de_0.eval(t_hi, xs, ys);
    let w_lo = de_0.eval(t_lo, xs, ys);
    let value = -quad.value + psi.eval(t_hi) * w_hi;
    let tail_bound = 2.0 * psi.bound * w_hi.abs() + psi.bound * w_lo.abs();
    Ok(IntegratedKernelValue {
        value,
        tail_bound,
        quad_error: quad.abs_error,
        converged: quad.converged,
    })
}

/// Laplace-Stieltjes-type multiplier kernel
/// `K_nu(x,y) = sum_i w_i W_{t_i}(x,y)` for an atomic measure.
pub fn stieltjes_mult_kernel(
    kern: &ExtendedKernel,
    nu: &StieltjesMeasure,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
) -> Result<Complex64> {
    ensure_off_diagonal(x, y)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (t, w) in &nu.atoms {
        acc += w * kern.eval(*t, x.coords(), y.coords());
    }
    Ok(acc)
}

/// The subordinated Poisson kernel
/// `P_t(x,y) = int_0^inf W_{t^2/(4u)}(x,y) e^{-u} / sqrt(pi u) du`.
pub fn poisson_kernel(
    kern: &ExtendedKernel,
    t: f64,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
) -> Result<IntegratedKernelValue> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("time must be positive, got {t}")));
    }
    ensure_off_diagonal(x, y)?;
    let xs = x.coords();
    let ys = y.coords();
    let qmin = x.dist(y).powi(2);
    // integrand ~ u^{n/2+|lambda|-1/2} at 0; cut where u (1 + qmin/t^2) > 720
    let alpha = 0.5 * kern.lam().dim() as f64 + kern.lam().total() - 0.5;
    let u_max = 720.0 / (1.0 + qmin / (t * t)) + 20.0;
    let pref = std::f64::consts::PI.sqrt().recip();
    // geometric presample so the O(1)-scale peak sets the tolerance
    let mut scale = 0.0_f64;
    for j in 0..=24 {
        let u = u_max * (1e-6_f64).powf(1.0 - j as f64 / 24.0);
        let v = pref * kern.eval(t * t / (4.0 * u), xs, ys) * (-u).exp() / u.sqrt();
        scale = scale.max(v * u);
    }
    let tol = (1e-9 * scale).max(1e-300);
    let quad = integrate_adaptive_hinted(
        |u: f64| pref * kern.eval(t * t / (4.0 * u), xs, ys) * (-u).exp() / u.sqrt(),
        0.0,
        u_max,
        tol,
        EndpointHint::Algebraic(alpha.min(0.0)),
        EndpointHint::Smooth,
    )?;
    Ok(IntegratedKernelValue {
        value: quad.value,
        tail_bound: (-u_max).exp(),
        quad_error: quad.abs_error,
        converged: quad.converged,
    })
}

/// Spectral application of a radial multiplier:
/// `T_M f(x) = h_lambda(M(|z|) h_lambda f)(x)`.
///
/// The intermediate transform lives on a fresh grid reaching `z_max` and
/// resolving frequencies up to the extent of `f`'s grid.
pub fn multiplier_apply_spectral(
    lam: &TypeIndex,
    m_fn: &dyn Fn(f64) -> Complex64,
    f: &RadialGridFunction,
    x: &HalfSpacePoint,
    z_max: f64,
) -> Result<Complex64> {
    if lam.dim() != f.dim() || lam.dim() != x.dim() {
        return Err(Error::invalid("dimension mismatch".to_string()));
    }
    let y_extent = f
        .grids()
        .iter()
        .map(|g| g.y_max)
        .fold(0.0_f64, f64::max);
    let zgrids: Vec<RadialGrid> = lam
        .entries()
        .iter()
        .map(|l| RadialGrid::for_frequency(*l, z_max, y_extent))
        .collect::<Result<Vec<_>>>()?;
    // hat f on the z-grid, multiplied pointwise by M(|z|), split re/im
    let fhat = RadialGridFunction::from_fn(zgrids.clone(), |z| {
        let zp = HalfSpacePoint::new(z.to_vec()).expect("grid nodes are positive");
        hankel_transform(lam, f, &zp).map(|v| v.value).unwrap_or(f64::NAN)
    })?;
    let mut re_vals = Vec::with_capacity(fhat.values().len());
    let mut im_vals = Vec::with_capacity(fhat.values().len());
    let mut idx = vec![0usize; lam.dim()];
    for v in fhat.values() {
        let mut znorm2 = 0.0;
        for (i, g) in fhat.grids().iter().enumerate() {
            let zi = g.nodes[idx[i]];
            znorm2 += zi * zi;
        }
        let m_val = m_fn(znorm2.sqrt());
        re_vals.push(v * m_val.re);
        im_vals.push(v * m_val.im);
        for (i, g) in fhat.grids().iter().enumerate().rev() {
            idx[i] += 1;
            if idx[i] < g.nodes.len() {
                break;
            }
            idx[i] = 0;
        }
    }
    let re_f = RadialGridFunction::from_values(zgrids.clone(), re_vals)?;
    let im_f = RadialGridFunction::from_values(zgrids, im_vals)?;
    let re = hankel_transform(lam, &re_f, x)?.value;
    let im = hankel_transform(lam, &im_f, x)?.value;
    Ok(Complex64::new(re, im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ti(l: &[f64]) -> TypeIndex {
        TypeIndex::new(l.to_vec()).unwrap()
    }

    fn pt(c: &[f64]) -> HalfSpacePoint {
        HalfSpacePoint::new(c.to_vec()).unwrap()
    }

    fn neumann_kernel(t: f64, x: f64, y: f64) -> f64 {
        (4.0 * std::f64::consts::PI * t).sqrt().recip()
            * ((-(x - y) * (x - y) / (4.0 * t)).exp() + (-(x + y) * (x + y) / (4.0 * t)).exp())
    }

    #[test]
    fn maximal_profile_matches_dense_search() {
        let kern = ExtendedKernel::new(ti(&[0.0]), 48).unwrap();
        let (x, y) = (pt(&[1.0]), pt(&[2.0]));
        let grid = default_time_grid(&x, &y, 4096).unwrap();
        let prof = maximal_profile(&kern, &x, &y, &grid).unwrap();
        assert!(c0_membership(&kern, &x, &y).unwrap());
        // dense 1-D search on the closed form
        let mut sup = 0.0_f64;
        for j in 0..200_000 {
            let t = 1e-4 * (1e8_f64).powf(j as f64 / 199_999.0);
            sup = sup.max(neumann_kernel(t, 1.0, 2.0));
        }
        assert_relative_eq!(prof.sup_norm(), sup, max_relative = 1e-5);
        // sup dominates any single section value
        for &t in &[0.01, 0.3, 2.0] {
            assert!(prof.sup_norm() >= neumann_kernel(t, 1.0, 2.0) * (1.0 - 1e-9));
        }
    }

    #[test]
    fn profile_scaling_under_parabolic_dilation() {
        // profile values for (c x, c y, c^2 t) scale by c^{-n-2|lambda|}
        let lam = ti(&[0.7]);
        let kern = ExtendedKernel::new(lam.clone(), 48).unwrap();
        let c = 2.3_f64;
        let v1 = kern.eval(0.4, &[1.1], &[1.9]);
        let v2 = kern.eval(c * c * 0.4, &[c * 1.1], &[c * 1.9]);
        assert_relative_eq!(
            v2,
            c.powf(-(1.0 + 2.0 * lam.total())) * v1,
            max_relative = 1e-11
        );
    }

    #[test]
    fn heat_apply_conserves_constants() {
        for &l in &[-0.3, 0.0, 1.5] {
            let lam = ti(&[l]);
            let kern = ExtendedKernel::new(lam, 48).unwrap();
            let t = 0.25_f64;
            let y_max = 1.0 + 14.0 * t.sqrt();
            let grid = RadialGrid::new(l, y_max, 10, 14).unwrap();
            let one = RadialGridFunction::from_fn(vec![grid], |_| 1.0).unwrap();
            let got = heat_apply(&kern, t, &one, &pt(&[1.0])).unwrap();
            assert_relative_eq!(got.value, 1.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn heat_apply_matches_spectral_route_on_gaussian() {
        // W_t f for Gaussian f: spectral answer via the self-reciprocal pair
        // h(e^{-y^2/2}) = e^{-z^2/2}: W_t f = h(e^{-t z^2} e^{-z^2/2})
        let l = -0.25;
        let lam = ti(&[l]);
        let kern = ExtendedKernel::new(lam.clone(), 48).unwrap();
        let t = 0.3;
        let grid = RadialGrid::for_frequency(l, 12.0, 3.0).unwrap();
        let f = RadialGridFunction::from_fn(vec![grid], |y| (-0.5 * y[0] * y[0]).exp()).unwrap();
        let x = pt(&[1.2]);
        let direct = heat_apply(&kern, t, &f, &x).unwrap().value;
        let zgrid = RadialGrid::for_frequency(l, 12.0, 2.0).unwrap();
        let damped = RadialGridFunction::from_fn(vec![zgrid], |z| {
            (-t * z[0] * z[0]).exp() * (-0.5 * z[0] * z[0]).exp()
        })
        .unwrap();
        let spectral = crate::hankel::hankel_transform(&lam, &damped, &x).unwrap().value;
        assert_relative_eq!(direct, spectral, max_relative = 1e-5);
    }

    #[test]
    fn g_apply_is_homogeneous_and_vanishes_on_zero() {
        let l = 0.5;
        let lam = ti(&[l]);
        let kern = ExtendedKernel::new(lam, 32).unwrap();
        let grid = RadialGrid::for_frequency(l, 10.0, 2.0).unwrap();
        let f = RadialGridFunction::from_fn(vec![grid.clone()], |y| (-0.5 * y[0] * y[0]).exp())
            .unwrap();
        let cf = RadialGridFunction::from_fn(vec![grid.clone()], |y| {
            -3.0 * (-0.5 * y[0] * y[0]).exp()
        })
        .unwrap();
        let zero = RadialGridFunction::from_fn(vec![grid], |_| 0.0).unwrap();
        let tg = time_grid(1e-4, 1e3, 128).unwrap();
        let x = pt(&[0.9]);
        let g1 = g_apply(&kern, &[0], 1, &f, &x, &tg).unwrap();
        let g3 = g_apply(&kern, &[0], 1, &cf, &x, &tg).unwrap();
        let g0 = g_apply(&kern, &[0], 1, &zero, &x, &tg).unwrap();
        assert!(g1 > 0.0);
        assert_relative_eq!(g3, 3.0 * g1, max_relative = 1e-10);
        assert_eq!(g0, 0.0);
    }

    #[test]
    fn laplace_kernel_telescopes_for_unit_symbol() {
        // psi = 1: -int d_t W dt = W(0+) - W(inf) = 0 off the diagonal
        let psi = LaplaceSymbol::new(|_| 1.0, 1.0).unwrap();
        for &l in &[-0.45, 0.0, 1.0] {
            let kern = ExtendedKernel::new(ti(&[l]), 48).unwrap();
            let got = laplace_mult_kernel(&kern, &psi, &pt(&[1.0]), &pt(&[1.6])).unwrap();
            assert!(got.converged);
            assert!(
                got.value.abs() <= 1e-8,
                "lambda={l}: K_1 = {:.3e} not telescoping",
                got.value
            );
        }
    }

    #[test]
    fn laplace_kernel_zero_symbol() {
        let psi = LaplaceSymbol::new(|_| 0.0, 0.0).unwrap();
        let kern = ExtendedKernel::new(ti(&[0.3]), 32).unwrap();
        let got = laplace_mult_kernel(&kern, &psi, &pt(&[1.0]), &pt(&[2.0])).unwrap();
        assert_eq!(got.value, 0.0);
    }

    #[test]
    fn stieltjes_kernel_atoms() {
        let kern = ExtendedKernel::new(ti(&[0.2]), 48).unwrap();
        let (x, y) = (pt(&[1.0]), pt(&[1.8]));
        // single unit atom reproduces the heat kernel section
        let nu = StieltjesMeasure::new(vec![(0.7, Complex64::new(1.0, 0.0))]).unwrap();
        let got = stieltjes_mult_kernel(&kern, &nu, &x, &y).unwrap();
        assert_relative_eq!(got.re, kern.eval(0.7, &[1.0], &[1.8]), max_relative = 1e-13);
        assert_eq!(got.im, 0.0);
        // linearity: atoms (1, 1) and (2, -1)
        let nu = StieltjesMeasure::new(vec![
            (1.0, Complex64::new(1.0, 0.0)),
            (2.0, Complex64::new(-1.0, 0.0)),
        ])
        .unwrap();
        let got = stieltjes_mult_kernel(&kern, &nu, &x, &y).unwrap();
        let expect = kern.eval(1.0, &[1.0], &[1.8]) - kern.eval(2.0, &[1.0], &[1.8]);
        assert_relative_eq!(got.re, expect, max_relative = 1e-12);
        // triangle inequality against the maximal section
        let grid = default_time_grid(&x, &y, 256).unwrap();
        let prof = maximal_profile(&kern, &x, &y, &grid).unwrap();
        assert!(got.norm() <= nu.total_variation() * prof.sup_norm() * (1.0 + 1e-9));
        // duplicate atoms rejected
        assert!(StieltjesMeasure::new(vec![
            (1.0, Complex64::new(1.0, 0.0)),
            (1.0, Complex64::new(-1.0, 0.0)),
        ])
        .is_err());
    }

    #[test]
    fn poisson_kernel_matches_half_line_closed_form() {
        let kern = ExtendedKernel::new(ti(&[0.0]), 48).unwrap();
        for &(t, x, y) in &[(1.0, 1.0, 2.0), (0.4, 0.5, 0.9), (2.5, 3.0, 0.4)] {
            let got = poisson_kernel(&kern, t, &pt(&[x]), &pt(&[y])).unwrap();
            assert!(got.converged);
            let expect = (t / std::f64::consts::PI)
                * (1.0 / ((x - y) * (x - y) + t * t) + 1.0 / ((x + y) * (x + y) + t * t));
            assert_relative_eq!(got.value, expect, max_relative = 1e-6);
        }
        // symmetry in (x, y)
        let a = poisson_kernel(&kern, 0.8, &pt(&[1.0]), &pt(&[2.2])).unwrap();
        let b = poisson_kernel(&kern, 0.8, &pt(&[2.2]), &pt(&[1.0])).unwrap();
        assert_relative_eq!(a.value, b.value, max_relative = 1e-9);
    }

    #[test]
    fn spectral_multiplier_identity_and_heat() {
        let l = 0.5;
        let lam = ti(&[l]);
        let grid = RadialGrid::for_frequency(l, 14.0, 4.0).unwrap();
        let f_fn = |y: f64| (-0.5 * y * y).exp();
        let f = RadialGridFunction::from_fn(vec![grid], |y| f_fn(y[0])).unwrap();
        let x = pt(&[1.3]);
        // M = 1 reproduces f (involution)
        let m_one = |_z: f64| Complex64::new(1.0, 0.0);
        let got = multiplier_apply_spectral(&lam, &m_one, &f, &x, 14.0).unwrap();
        assert_relative_eq!(got.re, f_fn(1.3), max_relative = 1e-5);
        assert!(got.im.abs() < 1e-12);
        // M = e^{-t z^2} reproduces the heat semigroup
        let t = 0.45;
        let m_heat = move |z: f64| Complex64::new((-t * z * z).exp(), 0.0);
        let got = multiplier_apply_spectral(&lam, &m_heat, &f, &x, 14.0).unwrap();
        let kern = ExtendedKernel::new(lam.clone(), 48).unwrap();
        let direct = heat_apply(&kern, t, &f, &x).unwrap().value;
        assert_relative_eq!(got.re, direct, max_relative = 1e-5);
    }

    #[test]
    fn off_diagonal_guard_trips() {
        let kern = ExtendedKernel::new(ti(&[0.1]), 32).unwrap();
        let x = pt(&[1.0]);
        let y = pt(&[1.0 + 1e-12]);
        let grid = time_grid(1e-6, 1e6, 64).unwrap();
        assert!(maximal_profile(&kern, &x, &y, &grid).is_err());
    }
}
