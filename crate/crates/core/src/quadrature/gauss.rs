//! Gauss rules via the Golub-Welsch algorithm: the three-term recurrence
//! coefficients fill a symmetric tridiagonal Jacobi matrix, whose
//! eigenvalues are the nodes and whose first eigenvector components give
//! the weights.

use crate::specfun::ln_gamma_unchecked;
use crate::{Error, Result};

/// Recurrence data for a weight function: diagonal `a_k`, squared
/// off-diagonal `b_k` (k >= 1) and total mass `mu0` of the weight.
pub(crate) struct Recurrence {
    pub diag: Vec<f64>,
    pub off_sq: Vec<f64>,
    pub mu0: f64,
}

/// Jacobi weight `(1-x)^a (1+x)^b` on `[-1,1]`, `a, b > -1`.
pub(crate) fn jacobi_recurrence(a: f64, b: f64, order: usize) -> Recurrence {
    let mut diag = Vec::with_capacity(order);
    let mut off_sq = Vec::with_capacity(order.saturating_sub(1));
    let apb = a + b;
    for k in 0..order {
        let kf = k as f64;
        if k == 0 {
            diag.push((b - a) / (apb + 2.0));
        } else {
            let d = 2.0 * kf + apb;
            diag.push((b * b - a * a) / (d * (d + 2.0)));
        }
        if k + 1 < order {
            let k1 = kf + 1.0;
            let bsq = if k == 0 {
                4.0 * (a + 1.0) * (b + 1.0) / ((apb + 2.0) * (apb + 2.0) * (apb + 3.0))
            } else {
                let d = 2.0 * k1 + apb;
                4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + apb) / ((d * d) * (d + 1.0) * (d - 1.0))
            };
            off_sq.push(bsq);
        }
    }
    let mu0 = ((apb + 1.0) * 2.0_f64.ln() + ln_gamma_unchecked(a + 1.0)
        + ln_gamma_unchecked(b + 1.0)
        - ln_gamma_unchecked(apb + 2.0))
        .exp();
    Recurrence { diag, off_sq, mu0 }
}

/// Generalized Laguerre weight `x^a e^{-x}` on `(0, inf)`, `a > -1`.
pub(crate) fn laguerre_recurrence(a: f64, order: usize) -> Recurrence {
    let mut diag = Vec::with_capacity(order);
    let mut off_sq = Vec::with_capacity(order.saturating_sub(1));
    for k in 0..order {
        let kf = k as f64;
        diag.push(2.0 * kf + a + 1.0);
        if k + 1 < order {
            let k1 = kf + 1.0;
            off_sq.push(k1 * (k1 + a));
        }
    }
    Recurrence {
        diag,
        off_sq,
        mu0: ln_gamma_unchecked(a + 1.0).exp(),
    }
}

/// Nodes and weights from a recurrence. Nodes come out sorted ascending.
pub(crate) fn golub_welsch(rec: &Recurrence) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rec.diag.len();
    if n == 0 {
        return Err(Error::invalid("quadrature order must be >= 1".to_string()));
    }
    let mut d = rec.diag.clone();
    let mut e: Vec<f64> = rec.off_sq.iter().map(|b| b.sqrt()).collect();
    e.push(0.0);
    let mut row = vec![0.0; n];
    row[0] = 1.0;
    tqli_first_row(&mut d, &mut e, &mut row)?;
    let mut pairs: Vec<(f64, f64)> = d
        .into_iter()
        .zip(row.into_iter().map(|z| rec.mu0 * z * z))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(pairs.into_iter().unzip())
}

/// Symmetric tridiagonal QL with implicit shifts, accumulating only the
/// first row of the eigenvector matrix (all Golub-Welsch needs).
fn tqli_first_row(d: &mut [f64], e: &mut [f64], row: &mut [f64]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NonConvergence {
                    what: "tridiagonal eigensolver".to_string(),
                    value: d[l],
                    error: e[l].abs(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0_f64, 1.0_f64);
            let mut p = 0.0_f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                f = row[i + 1];
                row[i + 1] = s * row[i] + c * f;
                row[i] = c * row[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_order_five_reference() {
        // Gauss-Legendre = Jacobi(0,0); classical 5-point values
        let rec = jacobi_recurrence(0.0, 0.0, 5);
        let (x, w) = golub_welsch(&rec).unwrap();
        let x_ref = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683_1,
            0.0,
            0.538_469_310_105_683_1,
            0.906_179_845_938_664,
        ];
        let w_ref = [
            0.236_926_885_056_189_08,
            0.478_628_670_499_366_47,
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_47,
            0.236_926_885_056_189_08,
        ];
        for i in 0..5 {
            assert_relative_eq!(x[i], x_ref[i], epsilon = 1e-14);
            assert_relative_eq!(w[i], w_ref[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn laguerre_integrates_polynomials() {
        // int_0^inf x^k x^a e^{-x} dx = Gamma(a+k+1)
        let a = -0.3;
        let rec = laguerre_recurrence(a, 12);
        let (x, w) = golub_welsch(&rec).unwrap();
        for k in 0..8u32 {
            let got: f64 = x
                .iter()
                .zip(&w)
                .map(|(xi, wi)| wi * xi.powi(k as i32))
                .sum();
            let expect = ln_gamma_unchecked(a + k as f64 + 1.0).exp();
            assert_relative_eq!(got, expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn jacobi_asymmetric_weights() {
        // int_{-1}^{1} (1-x)^a (1+x)^b x dx against the Beta-integral answer
        let (a, b) = (0.7, -0.2);
        let rec = jacobi_recurrence(a, b, 20);
        let (x, w) = golub_welsch(&rec).unwrap();
        let m0: f64 = w.iter().sum();
        let m1: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi).sum();
        assert_relative_eq!(m0, rec.mu0, max_relative = 1e-13);
        // first moment: mu0 * (b-a)/(a+b+2)
        assert_relative_eq!(
            m1,
            rec.mu0 * (b - a) / (a + b + 2.0),
            max_relative = 1e-12
        );
    }
}
