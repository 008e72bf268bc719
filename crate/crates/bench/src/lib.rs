//! Fixtures shared by the benchmarks.

use perturbed_max::{DistributionSpec, WalkModel};

/// `-Exponential(1)` increments with `Exponential(1)` perturbations.
pub fn closed_form_model() -> WalkModel {
    WalkModel::new(
        DistributionSpec::negated_exponential(1.0).unwrap(),
        DistributionSpec::exponential(1.0).unwrap(),
    )
    .unwrap()
}

/// Light-tailed model with `theta* = 1`.
pub fn light_model() -> WalkModel {
    WalkModel::new(
        DistributionSpec::exp_difference(2.0, 1.0).unwrap(),
        DistributionSpec::exponential(3.0).unwrap(),
    )
    .unwrap()
}

/// Gaussian increments with Lomax perturbations.
pub fn heavy_model() -> WalkModel {
    WalkModel::new(
        DistributionSpec::normal(-0.5, 0.5).unwrap(),
        DistributionSpec::pareto(2.0, 1.0).unwrap(),
    )
    .unwrap()
}
