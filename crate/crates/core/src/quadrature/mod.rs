//! Quadrature rules for the measures `Omega_eta` on `[-1,1]`, logarithmic
//! time grids, and a generic adaptive 1-D integrator.
//!
//! The probability-like measure `Omega_eta` has density
//! `(1-s^2)^{eta-1} / (sqrt(pi) 2^{eta-1/2} Gamma(eta))` for `eta > 0` and
//! degenerates to point masses `1/sqrt(2 pi)` at `+-1` when `eta = 0`; its
//! total mass is `1 / (2^{eta-1/2} Gamma(eta+1/2))`.

mod adaptive;
pub(crate) mod gauss;
mod time;

pub use adaptive::{integrate_adaptive, integrate_adaptive_hinted, EndpointHint, QuadResult};
pub use time::{time_grid, LogTimeGrid};

use crate::specfun::ln_gamma_unchecked;
use crate::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8; // ln sqrt(2 pi)

/// ln of the `Omega_eta` normalizing constant `sqrt(pi) 2^{eta-1/2} Gamma(eta)`.
fn ln_omega_norm(eta: f64) -> f64 {
    0.5 * std::f64::consts::PI.ln() + (eta - 0.5) * 2.0_f64.ln() + ln_gamma_unchecked(eta)
}

/// Total mass of `Omega_eta`: `1 / (2^{eta-1/2} Gamma(eta+1/2))`.
pub fn omega_mass(eta: f64) -> f64 {
    (-(eta - 0.5) * 2.0_f64.ln() - ln_gamma_unchecked(eta + 0.5)).exp()
}

/// Gauss rule for `Omega_eta` on `[-1,1]`; the two-atom rule when `eta = 0`.
#[derive(Debug, Clone)]
pub struct GegenbauerRule {
    pub eta: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub is_atomic: bool,
}

impl GegenbauerRule {
    /// Sum of the weights (the discretized total mass of `Omega_eta`).
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Apply the rule to an integrand: `int f dOmega_eta`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * f(*s))
            .sum()
    }
}

/// Build the Gauss rule of the given order for `Omega_eta`.
///
/// For `eta > 0` this is exact for polynomials of degree `2*order - 1`
/// against the Gegenbauer weight; for `eta = 0` it returns the exact
/// two-atom rule regardless of `order`.
pub fn gegenbauer_rule(eta: f64, order: usize) -> Result<GegenbauerRule> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::domain(format!(
            "gegenbauer_rule requires eta >= 0, got {eta}"
        )));
    }
    if order == 0 {
        return Err(Error::invalid("quadrature order must be >= 1".to_string()));
    }
    if eta == 0.0 {
        let w = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        return Ok(GegenbauerRule {
            eta,
            nodes: vec![-1.0, 1.0],
            weights: vec![w, w],
            is_atomic: true,
        });
    }
    let rec = gauss::jacobi_recurrence(eta - 1.0, eta - 1.0, order);
    let (nodes, raw) = gauss::golub_welsch(&rec)?;
    let norm = (-ln_omega_norm(eta)).exp();
    let weights: Vec<f64> = raw.iter().map(|w| w * norm).collect();
    Ok(GegenbauerRule {
        eta,
        nodes,
        weights,
        is_atomic: false,
    })
}

/// Hybrid integrator for `int s^p exp(-kappa q_i(s)) dOmega_eta(s)` where
/// `q_i(s) = x^2 + y^2 + 2 x y s` is one coordinate's share of the form `q`.
///
/// Writing `c = 2 kappa x y`, the integrand carries the factor
/// `exp(-c s)`. A plain Gauss-Gegenbauer rule resolves it for `c`
/// up to roughly half the rule order; beyond that the mass concentrates in
/// a boundary layer at `s = -1` of width `~1/c`, which the plain nodes
/// cannot see. There the substitution `v = c (1+s)` turns the integral into
/// a generalized Gauss-Laguerre one with weight `v^{eta-1} e^{-v}`, which
/// this type precomputes as well.
#[derive(Debug, Clone)]
pub struct OmegaRule {
    pub eta: f64,
    pub order: usize,
    gauss: GegenbauerRule,
    /// Laguerre nodes/log-weights for the boundary-layer path (empty when atomic).
    layer_nodes: Vec<f64>,
    layer_ln_w: Vec<f64>,
    /// `exp(-c s)` resolution limit of the plain rule.
    c_switch: f64,
}

impl OmegaRule {
    pub fn new(eta: f64, order: usize) -> Result<Self> {
        let gauss = gegenbauer_rule(eta, order)?;
        let (layer_nodes, layer_ln_w) = if gauss.is_atomic {
            (Vec::new(), Vec::new())
        } else {
            let rec = gauss::laguerre_recurrence(eta - 1.0, order);
            let (nodes, weights) = gauss::golub_welsch(&rec)?;
            let lw = weights.iter().map(|w| w.ln()).collect();
            (nodes, lw)
        };
        Ok(OmegaRule {
            eta,
            order,
            gauss,
            layer_nodes,
            layer_ln_w,
            c_switch: 0.5 * order as f64,
        })
    }

    pub fn is_atomic(&self) -> bool {
        self.gauss.is_atomic
    }

    pub fn gauss_rule(&self) -> &GegenbauerRule {
        &self.gauss
    }

    /// Moments `m_p`, `p = 0..=pmax`, of `s^p exp(-kappa q_i(s))` against
    /// `Omega_eta`, in shifted form: the true moment is `exp(sigma) * m[p]`
    /// with `sigma` the returned shift. The shift always contains the
    /// stable factor `-kappa (x-y)^2`; no large cancellations occur.
    pub fn gaussian_moments(&self, kappa: f64, x: f64, y: f64, m: &mut [f64]) -> f64 {
        debug_assert!(kappa > 0.0 && x > 0.0 && y > 0.0);
        let c = 2.0 * kappa * x * y;
        let base = -kappa * (x - y) * (x - y);
        for v in m.iter_mut() {
            *v = 0.0;
        }
        if self.gauss.is_atomic {
            // atoms at -1 and +1 with mass 1/sqrt(2 pi):
            // exp(-kappa q(-1)) = exp(base), exp(-kappa q(+1)) = exp(base - 2c)
            let far = (-2.0 * c).exp();
            let w = (-LN_SQRT_2PI).exp();
            let mut sp = 1.0; // (-1)^p
            for v in m.iter_mut() {
                *v = w * (sp + far);
                sp = -sp;
            }
            return base;
        }
        if c <= self.c_switch {
            // plain rule: fold exp(-c (1+s)) into the weights
            let mut shift = f64::NEG_INFINITY;
            for (s, w) in self.gauss.nodes.iter().zip(&self.gauss.weights) {
                let lw = w.ln() - c * (1.0 + s);
                if lw > shift {
                    shift = lw;
                }
            }
            for (s, w) in self.gauss.nodes.iter().zip(&self.gauss.weights) {
                let e = (w.ln() - c * (1.0 + s) - shift).exp();
                let mut sp = 1.0;
                for v in m.iter_mut() {
                    *v += e * sp;
                    sp *= s;
                }
            }
            base + shift
        } else {
            // boundary layer: v = c (1+s), weight v^{eta-1} e^{-v};
            // residual factor (2 - v/c)^{eta-1} and the Omega normalizer
            let ln_k = -self.eta * c.ln() - ln_omega_norm(self.eta);
            let mut shift = f64::NEG_INFINITY;
            let em1 = self.eta - 1.0;
            for (v, lw) in self.layer_nodes.iter().zip(&self.layer_ln_w) {
                if *v >= 2.0 * c {
                    break;
                }
                let l = ln_k + lw + em1 * (2.0 - v / c).ln();
                if l > shift {
                    shift = l;
                }
            }
            if shift == f64::NEG_INFINITY {
                return base; // all nodes clipped; moments stay zero
            }
            for (v, lw) in self.layer_nodes.iter().zip(&self.layer_ln_w) {
                if *v >= 2.0 * c {
                    break;
                }
                let s = v / c - 1.0;
                let e = (ln_k + lw + em1 * (2.0 - v / c).ln() - shift).exp();
                let mut sp = 1.0;
                for vm in m.iter_mut() {
                    *vm += e * sp;
                    sp *= s;
                }
            }
            base + shift
        }
    }

    /// `int exp(-kappa q_i(s)) dOmega_eta(s)` as `(shift, mantissa)`.
    pub fn gaussian_integral(&self, kappa: f64, x: f64, y: f64) -> (f64, f64) {
        let mut m = [0.0_f64];
        let shift = self.gaussian_moments(kappa, x, y, &mut m);
        (shift, m[0])
    }
}

/// Quadrature for `Omega_eta` in the shifted variable `u = 1 + s in [0,2]`,
/// graded geometrically towards `u = 0` down to the scale `u_star`.
///
/// Built for integrands like `q^{-p}` with `q = D + sum beta_i u_i`, whose
/// relative variation concentrates at scale `u ~ D/beta`: the first panel
/// carries the `u^{eta-1}` endpoint weight exactly (Gauss-Jacobi), the last
/// panel carries `(2-u)^{eta-1}`, and panels grow by a factor of 4 in
/// between, so every scale from `u_star` to `2` is resolved.
#[derive(Debug, Clone)]
pub struct GradedOmegaRule {
    pub eta: f64,
    /// nodes in `u = 1 + s`
    pub nodes: Vec<f64>,
    /// weights including the full normalized `Omega_eta` density
    pub weights: Vec<f64>,
}

impl GradedOmegaRule {
    pub fn new(eta: f64, u_star: f64, order: usize) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(Error::domain(format!(
                "graded rule requires eta > 0, got {eta}"
            )));
        }
        let u_star = u_star.clamp(1e-14, 0.5);
        let norm = (-ln_omega_norm(eta)).exp();
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        // first panel [0, u_star]: weight u^{eta-1} handled by Jacobi(0, eta-1)
        let rec = gauss::jacobi_recurrence(0.0, eta - 1.0, order);
        let (jx, jw) = gauss::golub_welsch(&rec)?;
        let h = 0.5 * u_star;
        let scale = h.powf(eta);
        for (z, w) in jx.iter().zip(&jw) {
            let u = h * (1.0 + z);
            nodes.push(u);
            weights.push(w * scale * (2.0 - u).powf(eta - 1.0) * norm);
        }
        // geometric middle panels [u_star, 1]
        let rec = gauss::jacobi_recurrence(0.0, 0.0, order);
        let (gx, gw) = gauss::golub_welsch(&rec)?;
        let mut a = u_star;
        while a < 1.0 {
            let b = (4.0 * a).min(1.0);
            let mid = 0.5 * (a + b);
            let hw = 0.5 * (b - a);
            for (z, w) in gx.iter().zip(&gw) {
                let u = mid + hw * z;
                nodes.push(u);
                weights.push(w * hw * u.powf(eta - 1.0) * (2.0 - u).powf(eta - 1.0) * norm);
            }
            a = b;
        }
        // last panel [1, 2]: weight (2-u)^{eta-1} handled by Jacobi(eta-1, 0)
        let rec = gauss::jacobi_recurrence(eta - 1.0, 0.0, order);
        let (jx, jw) = gauss::golub_welsch(&rec)?;
        // u = 1 + (1+z)/2 maps (1-z)^{eta-1} onto (2-u)^{eta-1} up to 2^{-eta}
        let scale = 0.5_f64.powf(eta);
        for (z, w) in jx.iter().zip(&jw) {
            let u = 1.0 + 0.5 * (1.0 + z);
            nodes.push(u);
            weights.push(w * scale * u.powf(eta - 1.0) * norm);
        }
        Ok(GradedOmegaRule { eta, nodes, weights })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::bessel_i_scaled;
    use approx::assert_relative_eq;

    #[test]
    fn atomic_rule_matches_paper_constant() {
        let r = gegenbauer_rule(0.0, 64).unwrap();
        assert!(r.is_atomic);
        assert_eq!(r.nodes, vec![-1.0, 1.0]);
        let w = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert_relative_eq!(r.weights[0], w, epsilon = 1e-15);
        assert_relative_eq!(r.weights[1], w, epsilon = 1e-15);
        assert_relative_eq!(r.weights[0], 0.398_942_280_401_432_7, epsilon = 1e-15);
    }

    #[test]
    fn mass_identity_across_eta() {
        for &eta in &[0.0, 0.1, 0.5, 1.0, 2.6] {
            let r = gegenbauer_rule(eta, 32).unwrap();
            assert_relative_eq!(r.mass(), omega_mass(eta), max_relative = 1e-12);
        }
        // continuity into the atomic limit: mass(0) = 2/sqrt(2 pi)
        assert_relative_eq!(
            omega_mass(0.0),
            2.0 / (2.0 * std::f64::consts::PI).sqrt(),
            max_relative = 1e-14
        );
        assert_relative_eq!(omega_mass(1e-9), omega_mass(0.0), max_relative = 1e-7);
    }

    #[test]
    fn spec_mass_examples() {
        // eta = 1, order 8: 1/(2^{1/2} Gamma(3/2)) = sqrt(2/pi)
        let r = gegenbauer_rule(1.0, 8).unwrap();
        assert_relative_eq!(
            r.integrate(|_| 1.0),
            (2.0 / std::f64::consts::PI).sqrt(),
            max_relative = 1e-13
        );
        // eta = 1/2: mass 1
        let r = gegenbauer_rule(0.5, 48).unwrap();
        assert_relative_eq!(r.integrate(|_| 1.0), 1.0, max_relative = 1e-13);
    }

    #[test]
    fn gauss_exactness_even_moments() {
        // int s^{2k} dOmega_eta = Gamma(k+1/2) / (sqrt(pi) 2^{eta-1/2} Gamma(k+eta+1/2))
        for &eta in &[0.05, 0.5, 1.0, 2.6] {
            let order = 8;
            let r = gegenbauer_rule(eta, order).unwrap();
            for k in 0..order {
                let got = r.integrate(|s| s.powi(2 * k as i32));
                let expect = (ln_gamma_unchecked(k as f64 + 0.5)
                    - 0.5 * std::f64::consts::PI.ln()
                    - (eta - 0.5) * 2.0_f64.ln()
                    - ln_gamma_unchecked(k as f64 + eta + 0.5))
                .exp();
                assert_relative_eq!(got, expect, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn nodes_and_weights_symmetric() {
        let r = gegenbauer_rule(0.7, 33).unwrap();
        let n = r.nodes.len();
        for i in 0..n {
            assert_relative_eq!(r.nodes[i], -r.nodes[n - 1 - i], epsilon = 1e-13);
            assert_relative_eq!(r.weights[i], r.weights[n - 1 - i], max_relative = 1e-11);
        }
        for i in 1..n {
            assert!(r.nodes[i] > r.nodes[i - 1]);
        }
        assert!(r.weights.iter().all(|w| *w > 0.0));
    }

    #[test]
    fn rejects_negative_eta() {
        assert!(gegenbauer_rule(-0.1, 8).is_err());
    }

    /// Both moment paths against the Schlafli identity
    /// `int e^{-c s} dOmega_eta(s) = c^{-(eta-1/2)} I_{eta-1/2}(c)`,
    /// i.e. in scaled terms `e^{c} c^{-nu} (e^{-c} I_nu(c))`.
    #[test]
    fn gaussian_integral_matches_scaled_bessel() {
        for &eta in &[0.05, 0.55, 1.0, 2.0, 3.5] {
            for &order in &[24usize, 48, 64] {
                let rule = OmegaRule::new(eta, order).unwrap();
                let nu = eta - 0.5;
                for &c in &[
                    1e-3,
                    0.8,
                    5.0,
                    0.4 * order as f64,
                    0.49 * order as f64,
                    0.51 * order as f64,
                    0.7 * order as f64,
                    2.0 * order as f64,
                    1e4,
                    1e8,
                ] {
                    // choose x = y = 1 so that 2 kappa x y = c with kappa = c/2;
                    // then int exp(-kappa q) dOmega = e^{-c} c^{-nu} I_nu(c),
                    // i.e. ln(int) = -nu ln c + ln(e^{-c} I_nu(c))
                    let (shift, m0) = rule.gaussian_integral(0.5 * c, 1.0, 1.0);
                    let got = shift + m0.ln();
                    let expect = -nu * c.ln() + bessel_i_scaled(nu, c).unwrap().ln();
                    let rel = ((got - expect).abs()).max(0.0);
                    assert!(
                        rel < 5e-9,
                        "eta={eta} order={order} c={c}: log-relative error {rel:e}"
                    );
                }
            }
        }
    }

    #[test]
    fn graded_rule_mass_and_peaked_power() {
        for &eta in &[0.55, 1.0, 2.6] {
            let rule = GradedOmegaRule::new(eta, 1e-6, 14).unwrap();
            let mass: f64 = rule.weights.iter().sum();
            assert_relative_eq!(mass, omega_mass(eta), max_relative = 1e-11);
            // int (D + beta u)^{-p} dOmega against adaptive quadrature
            let (d0, beta, p) = (1e-5_f64, 2.0_f64, 1.3_f64);
            let got: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(u, w)| w * (d0 + beta * u).powf(-p))
                .sum();
            let norm = (-ln_omega_norm(eta)).exp();
            let oracle = integrate_adaptive_hinted(
                |u: f64| {
                    (d0 + beta * u).powf(-p)
                        * u.powf(eta - 1.0)
                        * (2.0 - u).powf(eta - 1.0)
                        * norm
                },
                0.0,
                2.0,
                1e-11,
                EndpointHint::Algebraic(eta - 1.0),
                EndpointHint::Algebraic(eta - 1.0),
            )
            .unwrap();
            assert!(oracle.converged);
            assert_relative_eq!(got, oracle.value, max_relative = 1e-8);
        }
    }

    #[test]
    fn first_moment_matches_bessel_derivative() {
        // int s e^{-c s} dOmega_eta(s) = -c^{-nu} I_{nu+1}(c)
        for &eta in &[0.3, 1.4] {
            let rule = OmegaRule::new(eta, 48).unwrap();
            let nu = eta - 0.5;
            for &c in &[0.5, 10.0, 60.0, 1e3] {
                let mut m = [0.0; 2];
                let shift = rule.gaussian_moments(0.5 * c, 1.0, 1.0, &mut m);
                let got = shift + m[1].abs().ln();
                let expect = -nu * c.ln() + bessel_i_scaled(nu + 1.0, c).unwrap().ln();
                assert!(
                    (got - expect).abs() < 2e-8,
                    "eta={eta} c={c}: {:.3e}",
                    (got - expect).abs()
                );
                assert!(m[1] < 0.0, "first moment must be negative");
            }
        }
    }
}
