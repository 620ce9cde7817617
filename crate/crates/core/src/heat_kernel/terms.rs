//! Closed term calculus for mixed derivatives of the extended heat-kernel
//! integrand `t^W (xy)^{2 eps} exp(-q/(4t))`.
//!
//! Every derivative of the integrand is a finite sum of monomials
//! `coeff * x^a y^b s^d t^{W+o} q^j exp(-q/(4t))`, and the set of such
//! terms is closed under `d/dx_i`, `d/dy_i` and `d/dt`. Exponents are kept
//! as exact integers (the `t`-power as an integer offset from the base
//! power `W`), so repeated differentiation is exact.

use std::collections::BTreeMap;

/// One monomial `coeff * x^xpow y^ypow s^spow t^{W + tshift} q^qpow e^{-q/4t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrandTerm {
    pub coeff: f64,
    pub xpow: Vec<u8>,
    pub ypow: Vec<u8>,
    pub spow: Vec<u8>,
    /// Offset of the `t`-exponent from the base power of the term list.
    pub tshift: i16,
    pub qpow: u8,
}

impl IntegrandTerm {
    /// The full (real) `t`-exponent of this term.
    pub fn tpow(&self, base_w: f64) -> f64 {
        base_w + self.tshift as f64
    }
}

/// A sum of [`IntegrandTerm`]s sharing the base `t`-power `W`.
#[derive(Debug, Clone)]
pub struct TermList {
    pub dim: usize,
    /// Base `t`-exponent `W`; for the heat kernel `W = -n/2 - |lambda| - 2|eps|`.
    pub base_w: f64,
    pub terms: Vec<IntegrandTerm>,
}

type Key = (Vec<u8>, Vec<u8>, Vec<u8>, i16, u8);

fn key_of(t: &IntegrandTerm) -> Key {
    (
        t.xpow.clone(),
        t.ypow.clone(),
        t.spow.clone(),
        t.tshift,
        t.qpow,
    )
}

impl TermList {
    /// The undifferentiated integrand: a single term `(xy)^{2 eps} t^W e^{-q/4t}`.
    pub fn seed(dim: usize, base_w: f64, eps: &[u8]) -> Self {
        assert_eq!(eps.len(), dim);
        let pow: Vec<u8> = eps.iter().map(|e| 2 * e).collect();
        TermList {
            dim,
            base_w,
            terms: vec![IntegrandTerm {
                coeff: 1.0,
                xpow: pow.clone(),
                ypow: pow,
                spow: vec![0; dim],
                tshift: 0,
                qpow: 0,
            }],
        }
    }

    fn merge(dim: usize, base_w: f64, raw: Vec<IntegrandTerm>) -> Self {
        let mut map: BTreeMap<Key, f64> = BTreeMap::new();
        for t in raw {
            *map.entry(key_of(&t)).or_insert(0.0) += t.coeff;
        }
        let terms = map
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|((xpow, ypow, spow, tshift, qpow), coeff)| IntegrandTerm {
                coeff,
                xpow,
                ypow,
                spow,
                tshift,
                qpow,
            })
            .collect();
        TermList { dim, base_w, terms }
    }

    /// Differentiate in `x_i`.
    pub fn dx(&self, i: usize) -> Self {
        let mut out = Vec::with_capacity(4 * self.terms.len());
        for t in &self.terms {
            // product rule on x^{a_i}
            if t.xpow[i] > 0 {
                let mut n = t.clone();
                n.coeff *= t.xpow[i] as f64;
                n.xpow[i] -= 1;
                out.push(n);
            }
            // on q^j: dq/dx_i = 2 x_i + 2 y_i s_i
            if t.qpow > 0 {
                let j = t.qpow as f64;
                let mut n1 = t.clone();
                n1.coeff *= 2.0 * j;
                n1.qpow -= 1;
                n1.xpow[i] += 1;
                out.push(n1);
                let mut n2 = t.clone();
                n2.coeff *= 2.0 * j;
                n2.qpow -= 1;
                n2.ypow[i] += 1;
                n2.spow[i] += 1;
                out.push(n2);
            }
            // on exp(-q/4t): -(2 x_i + 2 y_i s_i)/(4t)
            let mut e1 = t.clone();
            e1.coeff *= -0.5;
            e1.xpow[i] += 1;
            e1.tshift -= 1;
            out.push(e1);
            let mut e2 = t.clone();
            e2.coeff *= -0.5;
            e2.ypow[i] += 1;
            e2.spow[i] += 1;
            e2.tshift -= 1;
            out.push(e2);
        }
        Self::merge(self.dim, self.base_w, out)
    }

    /// Differentiate in `y_i`.
    pub fn dy(&self, i: usize) -> Self {
        let mut out = Vec::with_capacity(4 * self.terms.len());
        for t in &self.terms {
            if t.ypow[i] > 0 {
                let mut n = t.clone();
                n.coeff *= t.ypow[i] as f64;
                n.ypow[i] -= 1;
                out.push(n);
            }
            if t.qpow > 0 {
                let j = t.qpow as f64;
                let mut n1 = t.clone();
                n1.coeff *= 2.0 * j;
                n1.qpow -= 1;
                n1.ypow[i] += 1;
                out.push(n1);
                let mut n2 = t.clone();
                n2.coeff *= 2.0 * j;
                n2.qpow -= 1;
                n2.xpow[i] += 1;
                n2.spow[i] += 1;
                out.push(n2);
            }
            let mut e1 = t.clone();
            e1.coeff *= -0.5;
            e1.ypow[i] += 1;
            e1.tshift -= 1;
            out.push(e1);
            let mut e2 = t.clone();
            e2.coeff *= -0.5;
            e2.xpow[i] += 1;
            e2.spow[i] += 1;
            e2.tshift -= 1;
            out.push(e2);
        }
        Self::merge(self.dim, self.base_w, out)
    }

    /// Differentiate in `t`.
    pub fn dt(&self) -> Self {
        let mut out = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            // on t^{W+o}
            let p = self.base_w + t.tshift as f64;
            if p != 0.0 {
                let mut n = t.clone();
                n.coeff *= p;
                n.tshift -= 1;
                out.push(n);
            }
            // on exp(-q/4t): +q/(4 t^2)
            let mut e = t.clone();
            e.coeff *= 0.25;
            e.qpow += 1;
            e.tshift -= 2;
            out.push(e);
        }
        Self::merge(self.dim, self.base_w, out)
    }

    /// Apply `d_t^k d_x^m d_y^r` to the seed integrand.
    pub fn derive(mut self, m: &[u8], r: &[u8], k: u8) -> Self {
        for (i, &mi) in m.iter().enumerate() {
            for _ in 0..mi {
                self = self.dx(i);
            }
        }
        for (i, &ri) in r.iter().enumerate() {
            for _ in 0..ri {
                self = self.dy(i);
            }
        }
        for _ in 0..k {
            self = self.dt();
        }
        self
    }

    /// Pointwise value of the full sum at `(x, y, s, t)`.
    ///
    /// Each term is assembled in log space so extreme `t`-powers never
    /// overflow before meeting the Gaussian factor.
    pub fn eval_sum(&self, x: &[f64], y: &[f64], s: &[f64], t: f64) -> f64 {
        let mut q = 0.0;
        for i in 0..self.dim {
            let d = x[i] - y[i];
            q += d * d + 2.0 * x[i] * y[i] * (1.0 + s[i]);
        }
        let ln_t = t.ln();
        let gauss = -q / (4.0 * t);
        let mut sum = 0.0;
        for term in &self.terms {
            let mut ln = term.coeff.abs().ln() + (self.base_w + term.tshift as f64) * ln_t + gauss;
            let mut sign = term.coeff.signum();
            let mut zero = false;
            for i in 0..self.dim {
                ln += term.xpow[i] as f64 * x[i].ln() + term.ypow[i] as f64 * y[i].ln();
                if term.spow[i] > 0 {
                    if s[i] == 0.0 {
                        zero = true;
                        break;
                    }
                    ln += term.spow[i] as f64 * s[i].abs().ln();
                    if s[i] < 0.0 && term.spow[i] % 2 == 1 {
                        sign = -sign;
                    }
                }
            }
            if zero {
                continue;
            }
            if term.qpow > 0 {
                if q == 0.0 {
                    continue;
                }
                ln += term.qpow as f64 * q.ln();
            }
            sum += sign * ln.exp();
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_derivatives_keep_seed() {
        let l = TermList::seed(1, -0.5, &[0]).derive(&[0], &[0], 0);
        assert_eq!(l.terms.len(), 1);
        assert_eq!(l.terms[0].coeff, 1.0);
        assert_eq!(l.terms[0].tshift, 0);
        assert_eq!(l.terms[0].qpow, 0);
    }

    #[test]
    fn single_x_derivative_matches_hand_expansion() {
        // d/dx [t^W e^{-q/4t}] = (-(x + y s)/(2t)) t^W e^{-q/4t}
        let l = TermList::seed(1, -0.5, &[0]).derive(&[1], &[0], 0);
        assert_eq!(l.terms.len(), 2);
        for t in &l.terms {
            assert_relative_eq!(t.coeff, -0.5);
            assert_eq!(t.tshift, -1);
            let is_x = t.xpow == vec![1] && t.ypow == vec![0] && t.spow == vec![0];
            let is_ys = t.xpow == vec![0] && t.ypow == vec![1] && t.spow == vec![1];
            assert!(is_x || is_ys, "unexpected term {t:?}");
        }
    }

    #[test]
    fn single_t_derivative_matches_hand_expansion() {
        // d/dt [t^W e^{-q/4t}] = W t^{W-1} e + (q/4) t^{W-2} e
        let w = -0.5;
        let l = TermList::seed(1, w, &[0]).derive(&[0], &[0], 1);
        assert_eq!(l.terms.len(), 2);
        for t in &l.terms {
            if t.qpow == 0 {
                assert_relative_eq!(t.coeff, w);
                assert_eq!(t.tshift, -1);
            } else {
                assert_eq!(t.qpow, 1);
                assert_relative_eq!(t.coeff, 0.25);
                assert_eq!(t.tshift, -2);
            }
        }
    }

    #[test]
    fn mixed_partials_commute() {
        let base = TermList::seed(2, -2.75, &[1, 0]);
        let a = base.clone().dx(0).dt().dy(1);
        let b = base.clone().dy(1).dx(0).dt();
        let (x, y, s) = (&[0.7, 1.3][..], &[2.0, 0.4][..], &[0.3, -0.8][..]);
        for &t in &[0.05, 1.0, 20.0] {
            assert_relative_eq!(
                a.eval_sum(x, y, s, t),
                b.eval_sum(x, y, s, t),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn eval_matches_direct_formula() {
        // first x-derivative of t^W e^{-q/4t} against the explicit value
        let w = -1.5;
        let l = TermList::seed(1, w, &[0]).derive(&[1], &[0], 0);
        let (x, y, s, t) = (1.2_f64, 0.4_f64, 0.25_f64, 0.7_f64);
        let q = x * x + y * y + 2.0 * x * y * s;
        let expect = -(x + y * s) / (2.0 * t) * t.powf(w) * (-q / (4.0 * t)).exp();
        assert_relative_eq!(
            l.eval_sum(&[x], &[y], &[s], t),
            expect,
            max_relative = 1e-13
        );
    }

    #[test]
    fn derivative_of_eps_one_seed_keeps_polynomial_part() {
        // d/dx [(xy)^2 t^W e] = (2 x y^2 - x^2 y^2 (x + y s)/(2t)) t^W e
        let w = -2.5;
        let l = TermList::seed(1, w, &[1]).derive(&[1], &[0], 0);
        let (x, y, s, t) = (0.9_f64, 1.7_f64, -0.5_f64, 0.33_f64);
        let q = x * x + y * y + 2.0 * x * y * s;
        let expect = (2.0 * x * y * y - x * x * y * y * (x + y * s) / (2.0 * t))
            * t.powf(w)
            * (-q / (4.0 * t)).exp();
        assert_relative_eq!(
            l.eval_sum(&[x], &[y], &[s], t),
            expect,
            max_relative = 1e-13
        );
    }
}
