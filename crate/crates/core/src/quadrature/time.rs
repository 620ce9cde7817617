//! Logarithmic time grids: composite Gauss-Legendre panels in `ln t`,
//! usable both as integration rules for `int f(t) dt` and as sampling
//! grids for `L^p(t^{W-1} dt)` norms of kernel time-sections.

use super::gauss;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct LogTimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub nodes: Vec<f64>,
    /// Weights for `int_{t_min}^{t_max} f(t) dt` (the `dt` measure).
    pub weights: Vec<f64>,
}

impl LogTimeGrid {
    /// `int f(t) dt` over the grid range.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * f(*t))
            .sum()
    }

    /// `(int |v(t)|^p t^{W-1} dt)^{1/p}` for sampled values `v` on the grid.
    pub fn lp_norm(&self, values: &[f64], p: f64, w_exp: f64) -> f64 {
        assert_eq!(values.len(), self.nodes.len());
        let int: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .zip(values)
            .map(|((t, w), v)| w * v.abs().powf(p) * t.powf(w_exp - 1.0))
            .sum();
        int.powf(1.0 / p)
    }

    pub fn sup_norm(&self, values: &[f64]) -> f64 {
        values.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }
}

/// The 16-point Legendre basis is built once; grids are constructed per
/// kernel pair in hot verifier loops.
fn legendre_basis(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    use std::sync::OnceLock;
    static BASIS16: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    if order == 16 {
        if let Some((x, w)) = BASIS16.get() {
            return Ok((x.clone(), w.clone()));
        }
    }
    let rec = gauss::jacobi_recurrence(0.0, 0.0, order);
    let pair = gauss::golub_welsch(&rec)?;
    if order == 16 {
        let _ = BASIS16.set(pair.clone());
    }
    Ok(pair)
}

/// Log-uniform composite Gauss-Legendre rule with at least `n` nodes on
/// `[t_min, t_max]`.
pub fn time_grid(t_min: f64, t_max: f64, n: usize) -> Result<LogTimeGrid> {
    if !(t_min > 0.0 && t_max > t_min) {
        return Err(Error::invalid(format!(
            "time_grid requires 0 < t_min < t_max, got [{t_min}, {t_max}]"
        )));
    }
    if n < 2 {
        return Err(Error::invalid("time_grid requires n >= 2".to_string()));
    }
    let per_panel = n.min(16);
    let panels = n.div_ceil(per_panel);
    let (gx, gw) = legendre_basis(per_panel)?;
    let (u0, u1) = (t_min.ln(), t_max.ln());
    let du = (u1 - u0) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * per_panel);
    let mut weights = Vec::with_capacity(panels * per_panel);
    for p in 0..panels {
        let a = u0 + p as f64 * du;
        let mid = a + 0.5 * du;
        for (x, w) in gx.iter().zip(&gw) {
            let u = mid + 0.5 * du * x;
            let t = u.exp();
            nodes.push(t);
            weights.push(w * 0.5 * du * t);
        }
    }
    Ok(LogTimeGrid {
        t_min,
        t_max,
        nodes,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reproduces_log_integral_exactly() {
        let g = time_grid(1e-4, 1e4, 128).unwrap();
        assert_relative_eq!(
            g.integrate(|t| 1.0 / t),
            (1e8_f64).ln(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn gamma_function_checks() {
        // int e^{-t} dt on [a, b]: grid reproduces the truncated value to
        // near machine precision; the truncation itself costs ~a.
        let g = time_grid(1e-6, 50.0, 160).unwrap();
        let got = g.integrate(|t| (-t).exp());
        let truncated = (-1e-6_f64).exp() - (-50.0_f64).exp();
        assert_relative_eq!(got, truncated, max_relative = 1e-12);
        assert_relative_eq!(got, 1.0, max_relative = 2e-6);
        // int t e^{-t} dt on [1e-6, 60] = Gamma(2) up to ~5e-13 truncation
        let g = time_grid(1e-6, 60.0, 160).unwrap();
        assert_relative_eq!(g.integrate(|t| t * (-t).exp()), 1.0, max_relative = 1e-8);
    }

    #[test]
    fn nodes_increase_and_refinement_nests_range() {
        let g = time_grid(1e-3, 1e3, 100).unwrap();
        assert!(g.nodes.len() >= 100);
        for i in 1..g.nodes.len() {
            assert!(g.nodes[i] > g.nodes[i - 1]);
        }
        assert!(time_grid(1.0, 1.0, 8).is_err());
        assert!(time_grid(0.0, 1.0, 8).is_err());
        assert!(time_grid(1e-3, 1e3, 1).is_err());
    }

    #[test]
    fn lp_norm_power_law() {
        // ||t||_{L^2(t^{0} dt)} on [a,b] with v(t) = t: (int t^2 t^{-1} dt)^{1/2}
        let g = time_grid(0.5, 2.0, 64).unwrap();
        let vals: Vec<f64> = g.nodes.iter().copied().collect();
        let got = g.lp_norm(&vals, 2.0, 0.0);
        let expect = ((2.0_f64.powi(2) - 0.5_f64.powi(2)) / 2.0).sqrt();
        assert_relative_eq!(got, expect, max_relative = 1e-10);
    }
}
