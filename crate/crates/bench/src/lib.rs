//! Shared fixtures for the criterion benchmarks.

use bai_core::{BanditInstance, Scenario};

/// Instances of increasing size with distinct means and mixed variances.
pub fn ladder(k: usize) -> BanditInstance {
    let means: Vec<f64> = (0..k).map(|a| 1.0 - 0.05 * a as f64).collect();
    let vars: Vec<f64> = (0..k).map(|a| 0.5 + (a % 3) as f64 * 0.75).collect();
    BanditInstance::gaussian(&means, &vars).expect("valid ladder instance")
}

pub fn scenario_one() -> BanditInstance {
    Scenario::S1.instance()
}
