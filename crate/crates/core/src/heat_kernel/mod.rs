//! The Bessel heat kernel `W_t^lambda(x,y)` in three representations, and
//! exact mixed derivatives through the term calculus.
//!
//! * `kernel_product`: the defining product of scaled modified Bessel
//!   factors; valid on the whole parameter range and used as the oracle.
//! * `kernel_schlafli`: the single-integral form against `dOmega_lambda`,
//!   valid for `lambda >= 0` componentwise.
//! * `kernel_extended`: the recurrence-extended form, a sum over corners
//!   `eps in {0,1}^n` of integrals against `dOmega_{lambda+1+eps}`; valid on
//!   the full range `lambda > -1/2` and the default for everything built on
//!   top (derivatives, operator kernels, the verifier).
//!
//! All exponential factors are combined analytically before a single `exp`,
//! so evaluation never overflows for extreme arguments; per coordinate the
//! factor `exp(-q_i/4t)` appears only through the stable combination
//! `exp(-(x_i-y_i)^2/4t) * (boundary-layer remainder)`.

mod fd;
mod terms;

pub use fd::{kernel_derivative_fd, FdResult};
pub use terms::{IntegrandTerm, TermList};

use crate::geometry::{HalfSpacePoint, TypeIndex};
use crate::quadrature::OmegaRule;
use crate::specfun::bessel_i_scaled;
use crate::{Error, Result};

const LN_2: f64 = std::f64::consts::LN_2;

fn check_args(lam: &TypeIndex, t: f64, x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("time must be positive, got {t}")));
    }
    if lam.dim() != x.dim() || lam.dim() != y.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: lambda has {}, x has {}, y has {}",
            lam.dim(),
            x.dim(),
            y.dim()
        )));
    }
    Ok(())
}

/// `ln(e^a + e^b)` tolerating `-inf` inputs.
fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Heat kernel through the product of scaled Bessel factors.
///
/// Per coordinate `w = (2t)^{-1} (x y)^{1/2 - lambda} e^{-(x-y)^2/4t}
/// [e^{-z} I_{lambda-1/2}(z)]` with `z = x y / 2t`; the representation used
/// as the cross-check oracle for the quadrature-based ones.
pub fn kernel_product(
    lam: &TypeIndex,
    t: f64,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
) -> Result<f64> {
    check_args(lam, t, x, y)?;
    kernel_product_raw(lam, t, x.coords(), y.coords())
}

/// `e^{-z} I_nu(z)` for kernel orders `nu = lambda - 1/2 in (-1, inf)`.
///
/// Orders below `-1/2` go through the recurrence
/// `I_nu = 2(nu+1)/z I_{nu+1} + I_{nu+2}`, whose terms are both positive,
/// so no precision is lost.
fn i_scaled_kernel_order(nu: f64, z: f64) -> Result<f64> {
    if nu >= -0.5 {
        bessel_i_scaled(nu, z)
    } else {
        Ok(2.0 * (nu + 1.0) / z * bessel_i_scaled(nu + 1.0, z)?
            + bessel_i_scaled(nu + 2.0, z)?)
    }
}

pub(crate) fn kernel_product_raw(lam: &TypeIndex, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    let mut ln = 0.0;
    for i in 0..lam.dim() {
        let li = lam.entries()[i];
        let z = x[i] * y[i] / (2.0 * t);
        let scaled = i_scaled_kernel_order(li - 0.5, z)?;
        let d = x[i] - y[i];
        ln += -(2.0 * t).ln() + (0.5 - li) * (x[i] * y[i]).ln() - d * d / (4.0 * t) + scaled.ln();
    }
    Ok(ln.exp())
}

/// Schlafli representation, `lambda >= 0` componentwise:
/// `(2t)^{-n/2-|lambda|} int exp(-q/4t) dOmega_lambda(s)`.
pub struct SchlafliKernel {
    lam: TypeIndex,
    rules: Vec<OmegaRule>,
}

impl SchlafliKernel {
    pub fn new(lam: TypeIndex, order: usize) -> Result<Self> {
        for (i, l) in lam.entries().iter().enumerate() {
            if *l < 0.0 {
                return Err(Error::domain(format!(
                    "Schlafli representation requires lambda >= 0; entry {i} is {l}"
                )));
            }
        }
        let rules = lam
            .entries()
            .iter()
            .map(|l| OmegaRule::new(*l, order))
            .collect::<Result<Vec<_>>>()?;
        Ok(SchlafliKernel { lam, rules })
    }

    pub fn eval(&self, t: f64, x: &[f64], y: &[f64]) -> f64 {
        let kappa = 1.0 / (4.0 * t);
        let mut ln = 0.0;
        let mut m = [0.0_f64];
        for i in 0..self.lam.dim() {
            let li = self.lam.entries()[i];
            let sigma = self.rules[i].gaussian_moments(kappa, x[i], y[i], &mut m);
            ln += -(0.5 + li) * (2.0 * t).ln() + sigma + m[0].ln();
        }
        ln.exp()
    }
}

/// One-shot Schlafli evaluation at the given quadrature order.
pub fn kernel_schlafli(
    lam: &TypeIndex,
    t: f64,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
    order: usize,
) -> Result<f64> {
    check_args(lam, t, x, y)?;
    Ok(SchlafliKernel::new(lam.clone(), order)?.eval(t, x.coords(), y.coords()))
}

/// The recurrence-extended representation, valid for all
/// `lambda in (-1/2, inf)^n`:
///
/// `W_t = sum_{eps in {0,1}^n} C_{lambda,eps} t^{-n/2-|lambda|-2|eps|}
///  (xy)^{2 eps} int exp(-q/4t) dOmega_{lambda+1+eps}(s)`,
/// `C_{lambda,eps} = (2 lambda + 1)^{1-eps} 2^{-n/2-|lambda|-2|eps|}`.
///
/// The sum factorizes over coordinates, which is how `eval` computes it.
pub struct ExtendedKernel {
    lam: TypeIndex,
    order: usize,
    /// rules at `eta = lambda_i + 1` (the `eps_i = 0` branch)
    rules_lo: Vec<OmegaRule>,
    /// rules at `eta = lambda_i + 2` (the `eps_i = 1` branch)
    rules_hi: Vec<OmegaRule>,
}

impl ExtendedKernel {
    pub fn new(lam: TypeIndex, order: usize) -> Result<Self> {
        let rules_lo = lam
            .entries()
            .iter()
            .map(|l| OmegaRule::new(l + 1.0, order))
            .collect::<Result<Vec<_>>>()?;
        let rules_hi = lam
            .entries()
            .iter()
            .map(|l| OmegaRule::new(l + 2.0, order))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExtendedKernel {
            lam,
            order,
            rules_lo,
            rules_hi,
        })
    }

    pub fn lam(&self) -> &TypeIndex {
        &self.lam
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Kernel value at `(t, x, y)`.
    pub fn eval(&self, t: f64, x: &[f64], y: &[f64]) -> f64 {
        debug_assert!(t > 0.0);
        let kappa = 1.0 / (4.0 * t);
        let ln_2t = LN_2 + t.ln();
        let mut ln_total = 0.0;
        let mut m = [0.0_f64];
        for i in 0..self.lam.dim() {
            let li = self.lam.entries()[i];
            let s_lo = self.rules_lo[i].gaussian_moments(kappa, x[i], y[i], &mut m);
            let m_lo = m[0];
            let s_hi = self.rules_hi[i].gaussian_moments(kappa, x[i], y[i], &mut m);
            let m_hi = m[0];
            // eps_i = 0 branch: (2 l_i + 1) (2t)^{-1/2-l_i} * integral
            let ln_a = (2.0 * li + 1.0).ln() - (0.5 + li) * ln_2t + s_lo + m_lo.ln();
            // eps_i = 1 branch: (2t)^{-5/2-l_i} (x_i y_i)^2 * integral
            let ln_b = -(2.5 + li) * ln_2t + 2.0 * (x[i] * y[i]).ln() + s_hi + m_hi.ln();
            ln_total += log_add_exp(ln_a, ln_b);
        }
        ln_total.exp()
    }

    /// Evaluator for `d_t^k d_x^m d_y^r W_t(x,y)` at fixed derivative orders.
    pub fn derivative(&self, m: &[u8], r: &[u8], k: u8) -> DerivativeEvaluator<'_> {
        DerivativeEvaluator::new(self, m, r, k)
    }

    /// The coordinate rule for `Omega_{lambda_i + 1 + eps_i}`.
    pub fn omega_rule(&self, i: usize, eps_i: u8) -> &OmegaRule {
        if eps_i == 0 {
            &self.rules_lo[i]
        } else {
            &self.rules_hi[i]
        }
    }
}

/// One-shot extended-representation evaluation.
pub fn kernel_extended(
    lam: &TypeIndex,
    t: f64,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
    order: usize,
) -> Result<f64> {
    check_args(lam, t, x, y)?;
    Ok(ExtendedKernel::new(lam.clone(), order)?.eval(t, x.coords(), y.coords()))
}

/// `ln C_{lambda,eps}` and base power `W_eps` for a corner `eps`.
pub(crate) fn eps_ln_c(lam: &TypeIndex, eps: &[u8]) -> (f64, f64) {
    let n = lam.dim() as f64;
    let abs_eps: f64 = eps.iter().map(|e| *e as f64).sum();
    let w = -0.5 * n - lam.total() - 2.0 * abs_eps;
    let mut ln_c = w * LN_2;
    for (l, e) in lam.entries().iter().zip(eps) {
        if *e == 0 {
            ln_c += (2.0 * l + 1.0).ln();
        }
    }
    (ln_c, w)
}

/// The exact term expansion of `d_t^k d_x^m d_y^r [t^{W_eps} (xy)^{2 eps}
/// exp(-q/4t)]` for one corner `eps`.
pub fn derivative_terms(lam: &TypeIndex, eps: &[u8], m: &[u8], r: &[u8], k: u8) -> TermList {
    assert_eq!(lam.dim(), eps.len());
    assert_eq!(lam.dim(), m.len());
    assert_eq!(lam.dim(), r.len());
    let (_, w) = eps_ln_c(lam, eps);
    TermList::seed(lam.dim(), w, eps).derive(m, r, k)
}

struct EpsBlock {
    eps: Vec<u8>,
    ln_c: f64,
    terms: TermList,
}

/// Evaluates `d_t^k d_x^m d_y^r W_t^lambda(x,y)` by integrating the term
/// calculus against the extended representation's measures.
///
/// Per coordinate the integral factorizes into moments
/// `int s^p exp(-q_i/4t) dOmega_eta(s)`, so no tensor-product quadrature
/// grids are ever formed; global powers `q^j` (from `t`-derivatives) are
/// expanded multinomially over coordinates first.
pub struct DerivativeEvaluator<'a> {
    kernel: &'a ExtendedKernel,
    blocks: Vec<EpsBlock>,
    pmax: usize,
}

impl<'a> DerivativeEvaluator<'a> {
    fn new(kernel: &'a ExtendedKernel, m: &[u8], r: &[u8], k: u8) -> Self {
        let n = kernel.lam.dim();
        assert_eq!(m.len(), n);
        assert_eq!(r.len(), n);
        let mut blocks = Vec::with_capacity(1 << n);
        let mut pmax = 0usize;
        for mask in 0..(1u32 << n) {
            let eps: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
            let (ln_c, _) = eps_ln_c(&kernel.lam, &eps);
            let terms = derivative_terms(&kernel.lam, &eps, m, r, k);
            for t in &terms.terms {
                let sp = t.spow.iter().map(|p| *p as usize).max().unwrap_or(0);
                pmax = pmax.max(sp + t.qpow as usize);
            }
            blocks.push(EpsBlock { eps, ln_c, terms });
        }
        DerivativeEvaluator {
            kernel,
            blocks,
            pmax,
        }
    }

    /// Total number of expansion terms across all corners.
    pub fn term_count(&self) -> usize {
        self.blocks.iter().map(|b| b.terms.terms.len()).sum()
    }

    pub fn pmax(&self) -> usize {
        self.pmax
    }

    pub fn eval(&self, t: f64, x: &[f64], y: &[f64]) -> f64 {
        let mut table = MomentTable::new(self.kernel.lam.dim(), self.pmax);
        self.kernel.fill_moments(t, x, y, &mut table);
        self.eval_with(&table, t, x, y)
    }

    /// Evaluate from a precomputed moment table (its `pmax` must be at
    /// least this evaluator's). Lets several derivative specs share the
    /// per-coordinate moments at one `(t, x, y)`.
    pub fn eval_with(&self, table: &MomentTable, t: f64, x: &[f64], y: &[f64]) -> f64 {
        let n = self.kernel.lam.dim();
        debug_assert!(table.pmax >= self.pmax);
        let stride = table.pmax + 1;
        let ln_t = t.ln();
        let mut total = 0.0;
        let mut split = vec![0u8; n];
        for block in &self.blocks {
            let mut sig_sum = block.ln_c;
            for i in 0..n {
                sig_sum += if block.eps[i] == 0 {
                    table.sig_lo[i]
                } else {
                    table.sig_hi[i]
                };
            }
            for term in &block.terms.terms {
                // sum over multinomial splits of the global q-power
                let mut poly = 0.0;
                let mut more = init_compositions(term.qpow, n, &mut split);
                while more {
                    let mut prod = multinomial(term.qpow, &split);
                    for i in 0..n {
                        let mom = if block.eps[i] == 0 {
                            &table.mom_lo[i * stride..(i + 1) * stride]
                        } else {
                            &table.mom_hi[i * stride..(i + 1) * stride]
                        };
                        prod *=
                            coord_poly(x[i], y[i], term.spow[i] as usize, split[i] as usize, mom);
                        if prod == 0.0 {
                            break;
                        }
                    }
                    poly += prod;
                    more = next_composition(&mut split);
                }
                if poly == 0.0 {
                    continue;
                }
                let mut ln = sig_sum
                    + (block.terms.base_w + term.tshift as f64) * ln_t
                    + term.coeff.abs().ln()
                    + poly.abs().ln();
                for i in 0..n {
                    ln += term.xpow[i] as f64 * x[i].ln() + term.ypow[i] as f64 * y[i].ln();
                }
                total += term.coeff.signum() * poly.signum() * ln.exp();
            }
        }
        total
    }
}

/// Per-coordinate Gaussian moments of the extended measures at one
/// `(t, x, y)`, shared between derivative evaluators.
pub struct MomentTable {
    pmax: usize,
    sig_lo: Vec<f64>,
    sig_hi: Vec<f64>,
    mom_lo: Vec<f64>,
    mom_hi: Vec<f64>,
}

impl MomentTable {
    pub fn new(dim: usize, pmax: usize) -> Self {
        MomentTable {
            pmax,
            sig_lo: vec![0.0; dim],
            sig_hi: vec![0.0; dim],
            mom_lo: vec![0.0; dim * (pmax + 1)],
            mom_hi: vec![0.0; dim * (pmax + 1)],
        }
    }
}

impl ExtendedKernel {
    /// Fill the table with moments up to its `pmax` at `(t, x, y)`.
    pub fn fill_moments(&self, t: f64, x: &[f64], y: &[f64], table: &mut MomentTable) {
        let n = self.lam.dim();
        let stride = table.pmax + 1;
        let kappa = 1.0 / (4.0 * t);
        for i in 0..n {
            table.sig_lo[i] = self.rules_lo[i].gaussian_moments(
                kappa,
                x[i],
                y[i],
                &mut table.mom_lo[i * stride..(i + 1) * stride],
            );
            table.sig_hi[i] = self.rules_hi[i].gaussian_moments(
                kappa,
                x[i],
                y[i],
                &mut table.mom_hi[i * stride..(i + 1) * stride],
            );
        }
    }
}

/// `int s^{d} q_i^{j} exp(-q_i/4t) dOmega` over one coordinate, up to the
/// moment shift: `q_i = A + B s` with `A = x^2+y^2`, `B = 2xy`, so the
/// result is `sum_u C(j,u) A^{j-u} B^u m[d+u]`.
fn coord_poly(x: f64, y: f64, d: usize, j: usize, m: &[f64]) -> f64 {
    if j == 0 {
        return m[d];
    }
    let a = x * x + y * y;
    let b = 2.0 * x * y;
    let mut acc = 0.0;
    let mut binom = 1.0;
    for u in 0..=j {
        acc += binom * a.powi((j - u) as i32) * b.powi(u as i32) * m[d + u];
        binom *= (j - u) as f64 / (u + 1) as f64;
    }
    acc
}

/// First composition of `total` into `parts` nonnegative entries.
fn init_compositions(total: u8, parts: usize, out: &mut [u8]) -> bool {
    if parts == 0 {
        return total == 0;
    }
    out.iter_mut().for_each(|v| *v = 0);
    out[0] = total;
    true
}

/// Advance to the next composition; false when exhausted.
fn next_composition(c: &mut [u8]) -> bool {
    let n = c.len();
    if n <= 1 {
        return false;
    }
    let mut i = 0;
    while i < n - 1 && c[i] == 0 {
        i += 1;
    }
    if i == n - 1 {
        return false;
    }
    let head = c[i];
    c[i + 1] += 1;
    c[i] = 0;
    c[0] = head - 1;
    true
}

fn multinomial(total: u8, parts: &[u8]) -> f64 {
    let mut num = 1.0;
    for k in 2..=total as u64 {
        num *= k as f64;
    }
    let mut den = 1.0;
    for p in parts {
        for k in 2..=*p as u64 {
            den *= k as f64;
        }
    }
    num / den
}

/// Evaluate one mixed derivative of the heat kernel at a single point,
/// building the evaluator on the fly. Hot paths should hold an
/// [`ExtendedKernel`] and reuse [`ExtendedKernel::derivative`].
#[allow(clippy::too_many_arguments)]
pub fn kernel_derivative(
    lam: &TypeIndex,
    m: &[u8],
    r: &[u8],
    k: u8,
    t: f64,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
    order: usize,
) -> Result<f64> {
    check_args(lam, t, x, y)?;
    let kernel = ExtendedKernel::new(lam.clone(), order)?;
    Ok(kernel.derivative(m, r, k).eval(t, x.coords(), y.coords()))
}

/// The derivative lemma's majorant for one corner `eps`, evaluated
/// pointwise in `(t, x, y, s)`:
///
/// `sum_{beta,gamma in {0,1,2}^n} x^{2eps-beta*eps} y^{2eps-gamma*eps}
///  t^{W-k-(|m|-|beta*eps|+|r|-|gamma*eps|)/2} exp(-q/8t)`.
///
/// `w_override` substitutes a different base power `W` (the lemma holds for
/// any real `W`); `None` uses the kernel's own `W = -n/2-|lambda|-2|eps|`.
#[allow(clippy::too_many_arguments)]
pub fn est33_rhs(
    lam: &TypeIndex,
    eps: &[u8],
    m: &[u8],
    r: &[u8],
    k: u8,
    w_override: Option<f64>,
    t: f64,
    x: &[f64],
    y: &[f64],
    s: &[f64],
) -> f64 {
    let n = lam.dim();
    let (_, w_default) = eps_ln_c(lam, eps);
    let w = w_override.unwrap_or(w_default);
    let abs_m: i32 = m.iter().map(|v| *v as i32).sum();
    let abs_r: i32 = r.iter().map(|v| *v as i32).sum();
    let mut q = 0.0;
    for i in 0..n {
        let d = x[i] - y[i];
        q += d * d + 2.0 * x[i] * y[i] * (1.0 + s[i]);
    }
    let gauss = -q / (8.0 * t);
    let ln_t = t.ln();
    let mut total = 0.0;
    let mut beta = vec![0u8; n];
    loop {
        let mut gamma = vec![0u8; n];
        loop {
            let mut ln = gauss;
            let mut abs_be = 0i32;
            let mut abs_ge = 0i32;
            for i in 0..n {
                let be = (beta[i] * eps[i]) as i32;
                let ge = (gamma[i] * eps[i]) as i32;
                abs_be += be;
                abs_ge += ge;
                let px = 2 * eps[i] as i32 - be;
                let py = 2 * eps[i] as i32 - ge;
                ln += px as f64 * x[i].ln() + py as f64 * y[i].ln();
            }
            let tpow = w - k as f64 - 0.5 * ((abs_m - abs_be) as f64 + (abs_r - abs_ge) as f64);
            total += (ln + tpow * ln_t).exp();
            if !odometer(&mut gamma, 2) {
                break;
            }
        }
        if !odometer(&mut beta, 2) {
            break;
        }
    }
    total
}

/// Increment a base-(max+1) odometer; false when it wraps around to zero.
fn odometer(digits: &mut [u8], max: u8) -> bool {
    for d in digits.iter_mut() {
        if *d < max {
            *d += 1;
            return true;
        }
        *d = 0;
    }
    false
}
