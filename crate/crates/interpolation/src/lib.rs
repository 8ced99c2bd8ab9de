//! Element interpolation spaces for mixed plane formulations: Q4/Q8
//! displacement shape functions with Jacobians, self-equilibrated and
//! assumed stress bases, piecewise-constant strain partitions, enhanced
//! (incompatible) strain modes, and plastic-multiplier site layouts.
//!
//! All bases are immutable after construction and safe to evaluate from
//! multiple threads. In-plane Voigt order is `[x, y, xy]` with engineering
//! shear on strain-like rows.

use thiserror::Error;

mod b_matrix;
mod enhanced;
mod frame;
mod multiplier;
mod quadrature;
mod shapes;
mod strain;
mod stress;

pub use b_matrix::b_matrix;
pub use enhanced::enhanced_basis_q4;
pub use frame::{local_frame, LocalFrame};
pub use multiplier::{multiplier_basis, MultiplierBasis, MultiplierKind};
pub use quadrature::{default_rule, gauss_rule, QuadratureRule};
pub use shapes::{physical_coords, shape_functions, shape_q4, shape_q8, ShapeEval};
pub use strain::{partition_rule, subdomain_partition, PartitionPoint, StrainBasis, SubdomainData};
pub use stress::{
    airy_basis, airy_basis_extended, parent_linear_basis, pian_filter, pian_sumihara_basis,
    wilson_aux_fields, AiryMode, AuxiliaryField, StressBasis,
};

/// Point in the parent square `[-1, 1]^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParentPoint {
    pub xi: f64,
    pub eta: f64,
}

impl ParentPoint {
    pub fn new(xi: f64, eta: f64) -> Self {
        Self { xi, eta }
    }
}

/// Supported quadrilateral families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementFamily {
    /// Bilinear 4-node quadrilateral.
    Q4,
    /// Serendipity 8-node quadrilateral (mid-side nodes at positions 5-8).
    Q8,
}

impl ElementFamily {
    pub fn n_nodes(self) -> usize {
        match self {
            ElementFamily::Q4 => 4,
            ElementFamily::Q8 => 8,
        }
    }
}

#[derive(Debug, Error)]
pub enum InterpolationError {
    #[error("element geometry is degenerate: det J = {det_j:.3e} <= 0")]
    DegenerateElement { det_j: f64 },
    #[error("stress filter would remove a constant mode; the auxiliary set is inconsistent")]
    RankDeficientFilter,
    #[error("subdomain count {n_d} is not a perfect square")]
    InvalidPartition { n_d: usize },
    #[error("expected {expected} node coordinates, got {got}")]
    WrongNodeCount { expected: usize, got: usize },
}
