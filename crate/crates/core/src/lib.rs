#![allow(clippy::neg_cmp_op_on_partial_ord)] // !(x > 0) deliberately rejects NaN
#![allow(clippy::needless_range_loop)] // indexed loops over the two components

//! Spectral solver suite for coupled two-dimensional Gross-Pitaevskii
//! systems: ground and excited stationary states by constrained energy
//! minimization in a tensor Hermite basis, an analytic Thomas-Fermi
//! geometry engine, and a strong-interaction segregation harness.

pub mod basis;
pub mod energy;
pub mod error;
pub mod grid;
pub mod minimize;
pub mod model;
pub mod segregation;
pub mod sum;
pub mod thomasfermi;

pub use basis::{BasisSpec, QuadWeight, QuadratureRule, TensorBasis2D};
pub use error::{GpeError, Result};
pub use grid::DensityGrid;
pub use minimize::{InitialGuess, SolverConfig};
pub use model::{CoefficientField, StateReport, SystemParams};
pub use segregation::{SegregatedTrial, SplitAxis, SweepRecord};
pub use thomasfermi::{OverlapClass, TFCoefficients, TFGeometry};
