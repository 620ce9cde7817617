//! The n-dimensional Hankel transform `h_lambda` and its kernel
//! `phi_x^lambda`, the spectral side of the semigroup: `h_lambda`
//! diagonalizes the Bessel operator the way the Fourier transform
//! diagonalizes the Laplacian.
//!
//! `h_lambda f(x) = int phi_x^lambda(y) f(y) dmu_lambda(y)` with
//! `phi_x^lambda(y) = prod_i (x_i y_i)^{-lambda_i+1/2} J_{lambda_i-1/2}(x_i y_i)`.

use crate::geometry::{HalfSpacePoint, TypeIndex};
use crate::quadrature::gauss;
use crate::specfun::{bessel_j, ln_gamma_unchecked};
use crate::{Error, Result};

/// One coordinate's quadrature grid for `int_0^{y_max} g(y) y^{2 lambda} dy`.
///
/// The measure weight `y^{2 lambda}` is folded into the weights; the first
/// panel uses a Gauss-Jacobi rule so the endpoint behaviour at `y = 0`
/// (singular when `lambda < 0`) is integrated exactly.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    pub lambda: f64,
    pub y_max: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RadialGrid {
    pub fn new(lambda: f64, y_max: f64, panels: usize, order: usize) -> Result<Self> {
        if !(lambda > -0.5) {
            return Err(Error::domain(format!(
                "radial grid requires lambda > -1/2, got {lambda}"
            )));
        }
        if !(y_max > 0.0) || panels == 0 || order == 0 {
            return Err(Error::invalid(
                "radial grid needs y_max > 0, panels >= 1, order >= 1".to_string(),
            ));
        }
        let h = y_max / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        // first panel: weight y^{2 lambda} via Jacobi(0, 2 lambda) on [-1,1]
        let rec = gauss::jacobi_recurrence(0.0, 2.0 * lambda, order);
        let (jx, jw) = gauss::golub_welsch(&rec)?;
        let scale = (0.5 * h).powf(2.0 * lambda + 1.0);
        for (u, w) in jx.iter().zip(&jw) {
            nodes.push(0.5 * h * (1.0 + u));
            weights.push(w * scale);
        }
        // remaining panels: plain Gauss-Legendre with the weight folded in
        let rec = gauss::jacobi_recurrence(0.0, 0.0, order);
        let (gx, gw) = gauss::golub_welsch(&rec)?;
        for p in 1..panels {
            let a = p as f64 * h;
            let mid = a + 0.5 * h;
            for (u, w) in gx.iter().zip(&gw) {
                let y = mid + 0.5 * h * u;
                nodes.push(y);
                weights.push(w * 0.5 * h * y.powf(2.0 * lambda));
            }
        }
        Ok(RadialGrid {
            lambda,
            y_max,
            nodes,
            weights,
        })
    }

    /// Grid sized for transforms evaluated at frequencies up to `x_max`:
    /// at least 20 quadrature points per oscillation period.
    pub fn for_frequency(lambda: f64, y_max: f64, x_max: f64) -> Result<Self> {
        let per_unit = (x_max * 3.2_f64).max(4.0); // 20/(2 pi) * x_max
        let order = 16;
        let panels = ((y_max * per_unit / order as f64).ceil() as usize).max(2);
        RadialGrid::new(lambda, y_max, panels, order)
    }
}

/// A function sampled on the tensor product of per-coordinate grids,
/// together with the quadrature that integrates it against `dmu_lambda`.
#[derive(Debug, Clone)]
pub struct RadialGridFunction {
    grids: Vec<RadialGrid>,
    values: Vec<f64>,
}

impl RadialGridFunction {
    /// Wrap precomputed tensor values (row-major over the grids).
    pub fn from_values(grids: Vec<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        let expect: usize = grids.iter().map(|g| g.nodes.len()).product();
        if grids.is_empty() || values.len() != expect {
            return Err(Error::invalid(format!(
                "value count {} does not match grid size {expect}",
                values.len()
            )));
        }
        Ok(RadialGridFunction { grids, values })
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(grids: Vec<RadialGrid>, f: F) -> Result<Self> {
        if grids.is_empty() {
            return Err(Error::invalid("need at least one grid".to_string()));
        }
        let mut values = Vec::new();
        let mut idx = vec![0usize; grids.len()];
        let mut point = vec![0.0; grids.len()];
        loop {
            for (i, g) in grids.iter().enumerate() {
                point[i] = g.nodes[idx[i]];
            }
            let v = f(&point);
            if !v.is_finite() {
                return Err(Error::domain(format!(
                    "sampled function not finite at {point:?}"
                )));
            }
            values.push(v);
            if !advance(&mut idx, &grids) {
                break;
            }
        }
        Ok(RadialGridFunction { grids, values })
    }

    pub fn dim(&self) -> usize {
        self.grids.len()
    }

    pub fn grids(&self) -> &[RadialGrid] {
        &self.grids
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `int g(y) f(y) dmu_lambda(y)` over the truncated box.
    pub fn integrate_against<F: Fn(&[f64]) -> f64>(&self, g: F) -> f64 {
        let mut idx = vec![0usize; self.grids.len()];
        let mut point = vec![0.0; self.grids.len()];
        let mut acc = 0.0;
        let mut k = 0;
        loop {
            let mut w = self.values[k];
            for (i, gr) in self.grids.iter().enumerate() {
                point[i] = gr.nodes[idx[i]];
                w *= gr.weights[idx[i]];
            }
            if w != 0.0 {
                acc += w * g(&point);
            }
            k += 1;
            if !advance(&mut idx, &self.grids) {
                break;
            }
        }
        acc
    }

    /// Rough bound on the mass sitting in the outermost shell of the grid,
    /// used as the truncation estimate for transforms of decaying functions.
    pub fn edge_mass(&self) -> f64 {
       let mut idx = vec![0usize; self.grids.len()];
        let mut acc = 0.0;
        let mut k = 0;
        loop {
            let on_edge = idx
                .iter()
                .zip(&self.grids)
                .any(|(i, g)| g.nodes[*i] > 0.9 * g.y_max);
            if on_edge {
                let mut w = self.values[k].abs();
                for (i, gr) in self.grids.iter().enumerate() {
                    w *= gr.weights[idx[i]];
                }
                acc += w;
            }
            k += 1;
            if !advance(&mut idx, &self.grids) {
                break;
            }
        }
        acc
    }
}

fn advance(idx: &mut [usize], grids: &[RadialGrid]) -> bool {
    for (i, g) in grids.iter().enumerate().rev() {
        idx[i] += 1;
        if idx[i] < g.nodes.len() {
            return true;
        }
        idx[i] = 0;
    }
    false
}

/// One-dimensional transform kernel factor `u^{-lambda+1/2} J_{lambda-1/2}(u)`.
///
/// The apparent singularity at `u = 0` is removable; below `1e-3` a short
/// power series avoids the 0^0-type evaluation.
pub fn phi_factor(lambda: f64, u: f64) -> Result<f64> {
    let nu = lambda - 0.5;
    if u < 1e-3 {
        // 2^{-nu} sum_k (-1)^k (u^2/4)^k / (k! Gamma(nu+k+1))
        let q = 0.25 * u * u;
        let mut term = 1.0 / ln_gamma_unchecked(nu + 1.0).exp();
        let mut sum = term;
        for k in 1..5 {
            term *= -q / (k as f64 * (nu + k as f64));
            sum += term;
        }
        Ok((2.0_f64).powf(-nu) * sum)
    } else {
        Ok(u.powf(-nu) * bessel_j(nu, u)?)
    }
}

/// The Hankel kernel `phi_x^lambda(y)`.
pub fn phi_kernel(lam: &TypeIndex, x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<f64> {
    if lam.dim() != x.dim() || lam.dim() != y.dim() {
        return Err(Error::invalid("dimension mismatch".to_string()));
    }
    let mut prod = 1.0;
    for i in 0..lam.dim() {
        prod *= phi_factor(lam.entries()[i], x.coords()[i] * y.coords()[i])?;
    }
    Ok(prod)
}

/// Result of a truncated transform: the value and a crude bound on the
/// neglected tail.
#[derive(Debug, Clone, Copy)]
pub struct TransformValue {
    pub value: f64,
    pub tail_estimate: f64,
}

/// `h_lambda f(x)` by tensor quadrature over the sampled grid.
pub fn hankel_transform(
    lam: &TypeIndex,
    f: &RadialGridFunction,
    x: &HalfSpacePoint,
) -> Result<TransformValue> {
    if lam.dim() != f.dim() || lam.dim() != x.dim() {
        return Err(Error::invalid("dimension mismatch".to_string()));
    }
    let xs = x.coords();
    let n = lam.dim();
    // separable kernel: precompute per-coordinate phi rows
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let g = &f.grids()[i];
        let mut row = Vec::with_capacity(g.nodes.len());
        for (y, w) in g.nodes.iter().zip(&g.weights) {
            row.push(w * phi_factor(lam.entries()[i], xs[i] * y)?);
        }
        rows.push(row);
    }
    let mut idx = vec![0usize; n];
    let mut acc = 0.0;
    let mut k = 0;
    loop {
        let mut w = f.values()[k];
        for i in 0..n {
            w *= rows[i][idx[i]];
        }
        acc += w;
        k += 1;
        if !advance(&mut idx, f.grids()) {
            break;
        }
    }
    Ok(TransformValue {
        value: acc,
        tail_estimate: f.edge_mass(),
    })
}

/// `(|phi_x^lambda(y)|, prod_i b(x_i y_i))` where `b(u)` is the standard
/// envelope: `1` for `u <= 1` and `u^{-lambda_i}` for `u >= 1` (growing
/// when `lambda_i < 0`).
pub fn phi_bound_margin(
    lam: &TypeIndex,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
) -> Result<(f64, f64)> {
    let phi = phi_kernel(lam, x, y)?.abs();
    let mut bound = 1.0;
    for i in 0..lam.dim() {
        let u = x.coords()[i] * y.coords()[i];
        if u > 1.0 {
            bound *= u.powf(-lam.entries()[i]);
        }
    }
    Ok((phi, bound))
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

    #[test]
    fn phi_kernel_spec_values() {
        // lambda = 1/2: phi = J_0(x y)
        let lam = ti(&[0.5]);
        for &(x, y) in &[(1.0, 1.0), (2.0, 3.0), (0.5, 0.1)] {
            assert_relative_eq!(
                phi_kernel(&lam, &pt(&[x]), &pt(&[y])).unwrap(),
                bessel_j(0.0, x * y).unwrap(),
                max_relative = 1e-12
            );
        }
        // lambda = 0, x = 1, y = pi/2: multiple of cos(pi/2) = 0
        let lam = ti(&[0.0]);
        let v = phi_kernel(&lam, &pt(&[1.0]), &pt(&[std::f64::consts::FRAC_PI_2])).unwrap();
        assert!(v.abs() < 1e-15);
        // small-argument limit 2^{-lambda+1/2} / Gamma(lambda+1/2)
        for &l in &[-0.45, -0.25, 0.0, 0.5, 1.0, 2.5] {
            let lam = ti(&[l]);
            let got = phi_kernel(&lam, &pt(&[1e-8]), &pt(&[1e-7])).unwrap();
            let expect = (2.0_f64).powf(-l + 0.5) / ln_gamma_unchecked(l + 0.5).exp();
            assert_relative_eq!(got, expect, max_relative = 1e-10);
        }
    }

    #[test]
    fn phi_series_matches_direct_at_threshold() {
        // same argument, series path vs the direct power/Bessel product
        for &l in &[-0.3, 0.2, 1.7] {
            let u = 0.999e-3_f64;
            let a = phi_factor(l, u).unwrap();
            let b = u.powf(-(l - 0.5)) * bessel_j(l - 0.5, u).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn gaussian_self_reciprocity() {
        for &l in &[-0.45, -0.25, 0.0, 0.5, 1.0, 2.5] {
            let lam = ti(&[l]);
            let grid = RadialGrid::for_frequency(l, 12.0, 3.0).unwrap();
            let f =
                RadialGridFunction::from_fn(vec![grid], |y| (-0.5 * y[0] * y[0]).exp()).unwrap();
            for &x in &[0.3, 1.0, 2.7] {
                let got = hankel_transform(&lam, &f, &pt(&[x])).unwrap();
                assert_relative_eq!(
                    got.value,
                    (-0.5 * x * x).exp(),
                    max_relative = 1e-7,
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn gaussian_self_reciprocity_2d() {
        let lam = ti(&[-0.25, 0.8]);
        let g0 = RadialGrid::for_frequency(-0.25, 10.0, 2.0).unwrap();
        let g1 = RadialGrid::for_frequency(0.8, 10.0, 2.0).unwrap();
        let f = RadialGridFunction::from_fn(vec![g0, g1], |y| {
            (-0.5 * (y[0] * y[0] + y[1] * y[1])).exp()
        })
        .unwrap();
        let x = pt(&[0.7, 1.4]);
        let got = hankel_transform(&lam, &f, &x).unwrap();
        let expect = (-0.5_f64 * (0.7 * 0.7 + 1.4 * 1.4)).exp();
        assert_relative_eq!(got.value, expect, max_relative = 1e-6);
    }

    #[test]
    fn double_transform_is_involution() {
        // Gaussian mixture, lambda negative
        let l = -0.3;
        let lam = ti(&[l]);
        let f_fn = |y: f64| (-0.5 * y * y).exp() + 0.6 * (-0.125 * y * y).exp();
        let grid = RadialGrid::for_frequency(l, 16.0, 4.0).unwrap();
        let f = RadialGridFunction::from_fn(vec![grid], |y| f_fn(y[0])).unwrap();
        // transform onto a z-grid, then back
        let zgrid = RadialGrid::for_frequency(l, 16.0, 4.0).unwrap();
        let fhat = RadialGridFunction::from_fn(vec![zgrid], |z| {
            hankel_transform(&lam, &f, &pt(&[z[0]])).unwrap().value
        })
        .unwrap();
        for &x in &[0.4, 1.1, 2.3] {
            let back = hankel_transform(&lam, &fhat, &pt(&[x])).unwrap();
            assert_relative_eq!(back.value, f_fn(x), max_relative = 1e-5);
        }
    }

    #[test]
    fn bound_margin_examples() {
        // lambda = 1/2, x y = 10: |J_0(10)| vs 10^{-1/2}
        let lam = ti(&[0.5]);
        let (phi, bound) = phi_bound_margin(&lam, &pt(&[2.0]), &pt(&[5.0])).unwrap();
        assert_relative_eq!(
            phi,
            bessel_j(0.0, 10.0).unwrap().abs(),
            max_relative = 1e-10
        );
        assert_relative_eq!(bound, 10.0_f64.powf(-0.5), max_relative = 1e-12);
        assert!(phi < bound);
        // lambda = 0, small argument: bound stays 1
        let lam = ti(&[0.0]);
        let (_, bound) = phi_bound_margin(&lam, &pt(&[0.1]), &pt(&[0.2])).unwrap();
        assert_eq!(bound, 1.0);
        // lambda = -1/4, x y = 100: bound grows like 100^{1/4}
        let lam = ti(&[-0.25]);
        let (phi, bound) = phi_bound_margin(&lam, &pt(&[10.0]), &pt(&[10.0])).unwrap();
        assert_relative_eq!(bound, 100.0_f64.powf(0.25), max_relative = 1e-12);
        assert!(phi < bound);
    }

    #[test]
    fn grid_integrates_measure_monomials() {
        // int_0^Y y^p y^{2 lambda} dy = Y^{p+2l+1} / (p+2l+1)
        for &l in &[-0.4, 0.0, 1.3] {
            let g = RadialGrid::new(l, 3.0, 6, 12).unwrap();
            for p in 0..4 {
                let got: f64 = g
                    .nodes
                    .iter()
                    .zip(&g.weights)
                    .map(|(y, w)| w * y.powi(p))
                    .sum();
                let e = p as f64 + 2.0 * l + 1.0;
                assert_relative_eq!(got, 3.0_f64.powf(e) / e, max_relative = 1e-11);
            }
        }
    }
}
