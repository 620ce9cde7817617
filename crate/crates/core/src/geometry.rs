//! The space of homogeneous type `((0,inf)^n, d mu_lambda, |.|)`: type
//! indices, half-space points, the quadratic form `q`, ball measures and
//! their closed-form comparator.

use crate::{Error, Result};

/// The multi-parameter type index `lambda`, every entry `> -1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeIndex {
    lambda: Vec<f64>,
}

impl TypeIndex {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::invalid("type index must have dimension >= 1".to_string()));
        }
        for (i, l) in lambda.iter().enumerate() {
            if !l.is_finite() || *l <= -0.5 {
                return Err(Error::domain(format!(
                    "type index entry {i} must be > -1/2, got {l}"
                )));
            }
        }
        Ok(TypeIndex { lambda })
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.lambda
    }

    /// `|lambda| = sum_i lambda_i` (may be negative).
    pub fn total(&self) -> f64 {
        self.lambda.iter().sum()
    }

    /// The vector `2 lambda + 1`; all entries positive.
    pub fn two_lambda_plus_one(&self) -> Vec<f64> {
        self.lambda.iter().map(|l| 2.0 * l + 1.0).collect()
    }
}

/// A point of the open half-space `(0, inf)^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpacePoint {
    coords: Vec<f64>,
}

impl HalfSpacePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("point must have dimension >= 1".to_string()));
        }
        for (i, x) in coords.iter().enumerate() {
            if !x.is_finite() || *x <= 0.0 {
                return Err(Error::domain(format!(
                    "coordinate {i} must be positive, got {x}"
                )));
            }
        }
        Ok(HalfSpacePoint { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm_sq(&self) -> f64 {
        self.coords.iter().map(|x| x * x).sum()
    }

    pub fn dist(&self, other: &HalfSpacePoint) -> f64 {
        dist(&self.coords, &other.coords)
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `q(x,y,s) = |x|^2 + |y|^2 + 2 sum_i x_i y_i s_i`, for `s in [-1,1]^n`.
///
/// Computed as `|x-y|^2 + 2 sum_i x_i y_i (1 + s_i)`, which is exact at the
/// minimizing corner `s = -1` and never cancels catastrophically.
pub fn q_form(x: &HalfSpacePoint, y: &HalfSpacePoint, s: &[f64]) -> f64 {
    assert_eq!(x.dim(), y.dim());
    assert_eq!(x.dim(), s.len());
    let mut q = 0.0;
    for i in 0..s.len() {
        debug_assert!((-1.0..=1.0).contains(&s[i]));
        let d = x.coords[i] - y.coords[i];
        q += d * d + 2.0 * x.coords[i] * y.coords[i] * (1.0 + s[i]);
    }
    q
}

/// The closed-form ball-measure comparator `R^n prod_j (x_j + R)^{2 lambda_j}`.
pub fn v_lambda(lam: &TypeIndex, x: &HalfSpacePoint, radius: f64) -> f64 {
    assert_eq!(lam.dim(), x.dim());
    assert!(radius > 0.0);
    let mut ln = lam.dim() as f64 * radius.ln();
    for (xi, li) in x.coords.iter().zip(lam.entries()) {
        ln += 2.0 * li * (xi + radius).ln();
    }
    ln.exp()
}

/// Componentwise maximum `x v y`.
pub fn join_max(x: &HalfSpacePoint, y: &HalfSpacePoint) -> HalfSpacePoint {
    assert_eq!(x.dim(), y.dim());
    HalfSpacePoint {
        coords: x
            .coords
            .iter()
            .zip(&y.coords)
            .map(|(a, b)| a.max(*b))
            .collect(),
    }
}

/// Estimate of `mu_lambda(B(x,R) cap (0,inf)^n)` with an error bar.
#[derive(Debug, Clone, Copy)]
pub struct MuBallEstimate {
    pub value: f64,
    pub std_error: f64,
    /// False when the sampling budget was exhausted before the error bar
    /// settled.
    pub converged: bool,
}

/// Measure of the (clipped) Euclidean ball under `mu_lambda`.
///
/// In one dimension the integral is exact. For `n >= 2` a deterministic
/// low-discrepancy sequence samples the bounding box, with each coordinate
/// mapped through the inverse CDF of `y^{2 lambda}` so the weight is
/// absorbed exactly and only the ball indicator is estimated.
pub fn mu_ball(
    lam: &TypeIndex,
    x: &HalfSpacePoint,
    radius: f64,
    budget: usize,
) -> Result<MuBallEstimate> {
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("radius must be positive, got {radius}")));
    }
    assert_eq!(lam.dim(), x.dim());
    let n = lam.dim();
    if n == 1 {
        let p = 2.0 * lam.entries()[0] + 1.0;
        let lo = (x.coords[0] - radius).max(0.0);
        let hi = x.coords[0] + radius;
        let value = (hi.powf(p) - lo.powf(p)) / p;
        return Ok(MuBallEstimate {
            value,
            std_error: 0.0,
            converged: true,
        });
    }
    // per-coordinate box and its mu-mass
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    let mut lo_p = vec![0.0; n];
    let mut hi_p = vec![0.0; n];
    let mut box_mass = 1.0;
    for i in 0..n {
        let p = 2.0 * lam.entries()[i] + 1.0;
        lo[i] = (x.coords[i] - radius).max(0.0);
        hi[i] = x.coords[i] + radius;
        lo_p[i] = lo[i].powf(p);
        hi_p[i] = hi[i].powf(p);
        box_mass *= (hi_p[i] - lo_p[i]) / p;
    }
    let samples = budget.max(64);
    let mut seq = RdSequence::new(n);
    let mut y = vec![0.0; n];
    const BLOCKS: usize = 8;
    let mut block_hits = [0.0_f64; BLOCKS];
    let per_block = samples / BLOCKS;
    let total = per_block * BLOCKS;
    for b in 0..BLOCKS {
        let mut hits = 0usize;
        for _ in 0..per_block {
            seq.next_point(&mut y);
            let mut d2 = 0.0;
            for i in 0..n {
                let p = 2.0 * lam.entries()[i] + 1.0;
                let u = lo_p[i] + y[i] * (hi_p[i] - lo_p[i]);
                let yi = u.powf(1.0 / p);
                let d = yi - x.coords[i];
                d2 += d * d;
            }
            if d2 < radius * radius {
                hits += 1;
            }
        }
        block_hits[b] = hits as f64 / per_block as f64;
    }
    let mean = block_hits.iter().sum::<f64>() / BLOCKS as f64;
    let var = block_hits
        .iter()
        .map(|h| (h - mean) * (h - mean))
        .sum::<f64>()
        / (BLOCKS as f64 - 1.0);
    let std_error = box_mass * (var / BLOCKS as f64).sqrt();
    let value = box_mass * mean;
    let converged = total >= 4096 && (std_error <= 0.02 * value.max(f64::MIN_POSITIVE));
    Ok(MuBallEstimate {
        value,
        std_error,
        converged,
    })
}

/// Additive low-discrepancy sequence (the `R_d` construction): the k-th
/// point is `frac(k * alpha)` with `alpha` built from the generalized
/// golden ratio. Deterministic; no seed state beyond the counter.
pub(crate) struct RdSequence {
    alpha: Vec<f64>,
    state: Vec<f64>,
}

impl RdSequence {
    pub fn new(dim: usize) -> Self {
        // phi_d is the unique positive root of x^{d+1} = x + 1
        let d = dim as f64;
        let mut phi = 1.0_f64;
        for _ in 0..64 {
            phi = (1.0 + phi).powf(1.0 / (d + 1.0));
        }
        let mut alpha = Vec::with_capacity(dim);
        let mut a = 1.0;
        for _ in 0..dim {
            a /= phi;
            alpha.push(a);
        }
        RdSequence {
            alpha,
            state: vec![0.5; dim],
        }
    }

    pub fn next_point(&mut self, out: &mut [f64]) {
        for (i, s) in self.state.iter_mut().enumerate() {
            *s += self.alpha[i];
            if *s >= 1.0 {
                *s -= 1.0;
            }
            out[i] = *s;
        }
    }
}
