//! Empirical verification of the kernel estimates and the supporting
//! lemmas: stratified deterministic sampling, growth/smoothness/gradient
//! checks for the five operator-kernel families, the integral-lemma
//! checks, and refinement-stability reporting.

mod checks;
mod lemmas;
mod report;
mod sample;

pub use checks::{
    check_gradient, check_growth, check_kernel_family, check_smoothness_x, check_smoothness_y,
    KernelId,
};
pub use lemmas::{
    check_ball_comparability, check_bridge, check_est33, check_measure_equiv, check_theta_lemma,
    check_upsilon, UpsilonParams,
};
pub use report::EstimateReport;
pub use sample::{sample_configs, Regime, SampleConfig, REGIMES};

use crate::Result;

/// Budgets and determinism knobs for a verification run.
#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Base sample count per check; the refinement pass uses four times
    /// as many at doubled quadrature order.
    pub samples: usize,
    /// Quadrature order per coordinate for the kernel rules.
    pub order: usize,
    /// Nodes of the per-pair logarithmic time grids.
    pub t_nodes: usize,
    /// Whether to run the refinement pass (drift measurement).
    pub refine: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 42,
            samples: 4_000,
            order: 24,
            t_nodes: 128,
            refine: true,
        }
    }
}

impl VerifyConfig {
    /// Reduced budgets for smoke runs.
    pub fn quick() -> Self {
        VerifyConfig {
            samples: 400,
            order: 16,
            t_nodes: 96,
            ..Default::default()
        }
    }
}

/// The default type-index grid: components from
/// `{-0.45, -0.25, 0, 0.5, 1, 2.5}` in one and two dimensions.
pub fn default_lambda_grid() -> Vec<Vec<f64>> {
    let vals = [-0.45, -0.25, 0.0, 0.5, 1.0, 2.5];
    let mut grid: Vec<Vec<f64>> = vals.iter().map(|v| vec![*v]).collect();
    for (i, v) in vals.iter().enumerate() {
        grid.push(vec![*v, vals[(i + 2) % vals.len()]]);
    }
    grid
}

/// The kernel list of the standard-estimate suite: the heat section, the
/// square functions at `(m,k) in {(e1,0),(0,1),(e1,1)}`, both multiplier
/// kernels, and Riesz at `m in {e1, 2e1, e1+e2}`.
pub fn suite_kernels() -> Vec<KernelId> {
    vec![
        KernelId::Heat,
        KernelId::SquareFunction { m: vec![1], k: 0 },
        KernelId::SquareFunction { m: vec![0], k: 1 },
        KernelId::SquareFunction { m: vec![1], k: 1 },
        KernelId::LaplaceMultiplier,
        KernelId::StieltjesMultiplier,
        KernelId::Riesz { m: vec![1] },
        KernelId::Riesz { m: vec![2] },
        KernelId::Riesz { m: vec![1, 1] },
    ]
}

/// The lemma-suite instantiations used in the estimate proofs: one
/// `Upsilon` tuple per kernel family plus the boundary cases.
pub fn suite_upsilon_params() -> Vec<UpsilonParams> {
    vec![
        // growth of the heat section
        UpsilonParams {
            eps: vec![0],
            theta: vec![0],
            rho: vec![0],
            u: 0.0,
            p: f64::INFINITY,
            w: 1.0,
            c: 0.25,
        },
        // smoothness of the heat section
        UpsilonParams {
            eps: vec![1],
            theta: vec![2],
            rho: vec![1],
            u: 1.0,
            p: f64::INFINITY,
            w: 1.0,
            c: 1.0 / 128.0,
        },
        // growth of the square-function kernel
        UpsilonParams {
            eps: vec![1],
            theta: vec![1],
            rho: vec![0],
            u: 0.0,
            p: 2.0,
            w: 3.0,
            c: 0.125,
        },
        // gradient of the Laplace-multiplier kernel
        UpsilonParams {
            eps: vec![0],
            theta: vec![0],
            rho: vec![0],
            u: 1.0,
            p: 1.0,
            w: 1.0,
            c: 0.125,
        },
        // growth of the Riesz kernel (W = |m|/2)
        UpsilonParams {
            eps: vec![1, 0],
            theta: vec![2, 0],
            rho: vec![2, 0],
            u: 0.0,
            p: 1.0,
            w: 0.5,
            c: 0.125,
        },
    ]
}

/// Run the full verification: standard estimates for all five kernel
/// families, the lemma suite, the exact inequalities, and the
/// ball-comparability check.
pub fn run_all(cfg: &VerifyConfig) -> Result<Vec<EstimateReport>> {
    let grid = default_lambda_grid();
    let total = if cfg.refine { 4 * cfg.samples } else { cfg.samples };
    let samples = sample_configs(&grid, total, cfg.seed)?;
    let mut reports = Vec::new();
    for kernel in suite_kernels() {
        reports.extend(check_kernel_family(&kernel, &samples, cfg)?);
    }
    // bridge: the generic nonnegative case and a proof-style instantiation
    reports.push(check_bridge(&[0.0], &[0.0], &samples, cfg)?);
    reports.push(check_bridge(&[1.5], &[0.5], &samples, cfg)?);
    for par in suite_upsilon_params() {
        reports.push(check_upsilon(&par, &samples, cfg)?);
    }
    reports.push(check_est33(&[0], &[1], &[0], 0, &samples, cfg)?);
    reports.push(check_est33(&[1], &[2], &[1], 1, &samples, cfg)?);
    reports.push(check_est33(&[1, 0], &[1, 1], &[0, 1], 2, &samples, cfg)?);
    reports.push(check_theta_lemma(&samples, cfg)?);
    reports.push(check_measure_equiv(&samples, cfg)?);
    reports.push(check_ball_comparability(
        &grid,
        (cfg.samples / 10).max(40),
        cfg.seed,
        1 << 14,
    )?);
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smoke_cfg() -> VerifyConfig {
        VerifyConfig {
            seed: 7,
            samples: 60,
            order: 16,
            t_nodes: 96,
            refine: true,
        }
    }

    fn smoke_samples(cfg: &VerifyConfig) -> Vec<SampleConfig> {
        let grid = vec![vec![-0.45], vec![0.5], vec![-0.25, 1.0]];
        sample_configs(&grid, 4 * cfg.samples, cfg.seed).unwrap()
    }

    #[test]
    fn heat_family_reports_are_finite() {
        // drift saturation needs full-scale sample counts; the smoke run
        // only checks structure, finiteness and violation-freeness
        let cfg = smoke_cfg();
        let samples = smoke_samples(&cfg);
        let reports = check_kernel_family(&KernelId::Heat, &samples, &cfg).unwrap();
        assert_eq!(reports.len(), 3); // gr, sm1, sm2
        for r in &reports {
            assert!(r.c_emp.is_finite() && r.c_emp > 0.0, "{:?}", r.check_id);
            assert!(r.drift.is_some());
            assert_eq!(r.violations, 0);
        }
    }

    #[test]
    fn scalar_kernel_family_has_gradient_check() {
        let cfg = smoke_cfg();
        let samples = smoke_samples(&cfg);
        let reports =
            check_kernel_family(&KernelId::Riesz { m: vec![1] }, &samples, &cfg).unwrap();
        let ids: Vec<&str> = reports.iter().map(|r| r.check_id.as_str()).collect();
        assert_eq!(ids, vec!["growth", "gradient"]);
        for r in &reports {
            assert!(r.c_emp.is_finite() && r.c_emp > 0.0, "{}: {:?}", r.check_id, r);
        }
    }

    #[test]
    fn theta_lemma_has_zero_violations() {
        let cfg = smoke_cfg();
        let samples = smoke_samples(&cfg);
        let r = check_theta_lemma(&samples, &cfg).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.c_emp <= 1.0 + 1e-12);
    }

    #[test]
    fn bridge_and_upsilon_smoke() {
        let cfg = smoke_cfg();
        let samples = smoke_samples(&cfg);
        let b = check_bridge(&[0.0], &[0.5], &samples, &cfg).unwrap();
        assert!(b.c_emp.is_finite() && b.c_emp > 0.0, "bridge: {b:?}");
        let par = &suite_upsilon_params()[0];
        let u = check_upsilon(par, &samples, &cfg).unwrap();
        assert!(u.c_emp.is_finite() && u.c_emp > 0.0, "upsilon: {u:?}");
    }

    #[test]
    fn est33_ratio_bounded_for_seed_case() {
        let cfg = smoke_cfg();
        let samples = smoke_samples(&cfg);
        // m = r = 0, k = 0: the ratio is at most 1 pointwise
        let r = check_est33(&[0], &[0], &[0], 0, &samples, &cfg).unwrap();
        assert!(r.c_emp <= 1.0 + 1e-12);
        assert!(r.passes());
    }

    #[test]
    fn c_emp_monotone_in_sample_count() {
        // max over a superset can only grow
        let cfg = VerifyConfig { refine: false, ..smoke_cfg() };
        let samples = smoke_samples(&cfg);
        let half = check_growth(&KernelId::Heat, &samples[..120], &cfg).unwrap();
        let full = check_growth(&KernelId::Heat, &samples, &cfg).unwrap();
        assert!(full.c_emp >= half.c_emp);
    }

    #[test]
    fn measure_equivalence_bounded() {
        let cfg = smoke_cfg();
        let samples = smoke_samples(&cfg);
        let r = check_measure_equiv(&samples, &cfg).unwrap();
        assert!(r.c_emp.is_finite(), "{r:?}");
        assert!(r.c_emp < 1e3, "unexpectedly wide ratio {}", r.c_emp);
    }
}
