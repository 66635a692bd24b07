//! Shared parameter fixtures for the benchmark suite.

use std::sync::Arc;

use gpe2d_core::{BasisSpec, SystemParams, TensorBasis2D};

pub fn unit_basis(l: usize) -> Arc<TensorBasis2D> {
    Arc::new(
        TensorBasis2D::new(
            BasisSpec::new(l, 1.0).expect("basis spec"),
            BasisSpec::new(l, 1.0).expect("basis spec"),
        )
        .expect("basis construction"),
    )
}

/// Concentric two-component system with strong intra-species repulsion.
pub fn concentric_params(theta11: f64, theta22: f64, theta12: f64) -> SystemParams {
    let mut p = SystemParams::default();
    p.theta = [[theta11, theta12], [theta12, theta22]];
    p
}

/// The overlap-taxonomy coupling block used throughout the TF figures.
pub fn tf_taxonomy_params(x11: f64, x21: f64) -> SystemParams {
    let mut p = concentric_params(400.0, 200.0, 100.0);
    p.centers[0][0] = x11;
    p.centers[1][0] = x21;
    p
}
