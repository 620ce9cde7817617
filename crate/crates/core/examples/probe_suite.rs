use bessel_kernels::verifier::*;
use std::time::Instant;

fn main() {
    let cfg = VerifyConfig {
        seed: 42,
        samples: 10000,
        order: 24,
        t_nodes: 128,
        refine: true,
    };
    let grid = default_lambda_grid();
    let samples = sample_configs(&grid, 4 * cfg.samples, cfg.seed).unwrap();
    for kernel in [
        KernelId::SquareFunction { m: vec![1], k: 1 },
        KernelId::Riesz { m: vec![1] },
        KernelId::Heat,
    ] {
        let t0 = Instant::now();
        let reports = check_kernel_family(&kernel, &samples, &cfg).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        for r in &reports {
            println!(
                "{:12} {:14} c_emp={:10.4e} drift={:7.4} [{}] {:.1}s",
                kernel.label(),
                r.check_id,
                r.c_emp,
                r.drift.unwrap(),
                if r.passes() { "pass" } else { "FAIL" },
                dt
            );
        }
    }
}
