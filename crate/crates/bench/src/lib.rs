//! Shared fixtures for the criterion benchmarks.

use maxprod_core::function::corpus;
use maxprod_core::operator::{Admission, OperatorInstance};
use maxprod_core::sigmoid::DensityKernel;

/// Operator on the `parabola` corpus function with the named catalog kernel.
pub fn parabola_operator(kernel: &str, n: u32) -> OperatorInstance {
    let k = DensityKernel::by_name(kernel).expect("catalog kernel");
    OperatorInstance::new(&k, &corpus::parabola(), n, Admission::AllowAssumptionViolations)
        .expect("operator is defined on [0, 1]")
}

/// `count` equally spaced points of `[0, 1]`.
pub fn unit_grid(count: usize) -> Vec<f64> {
    (0..count).map(|i| i as f64 / (count - 1) as f64).collect()
}
