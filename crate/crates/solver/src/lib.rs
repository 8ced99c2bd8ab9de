//! Incremental-iterative solution of small-strain elastoplastic problems
//! on 2D meshes: boundary conditions under load or displacement control,
//! skyline-stored symmetric tangents, Newton iterations with increment
//! bisection, and atomic commits of converged states.
//!
//! Element state determination is embarrassingly parallel; with the
//! `parallel` feature the element loop fans out through rayon while
//! accumulation stays sequential in element order, so parallel and
//! sequential runs produce bit-identical results.

use thiserror::Error;

pub mod mesh;
pub mod problem;
pub mod skyline;

pub use mesh::Mesh;
pub use problem::{
    AnalysisConfig, Assembly, BoundaryConditions, Control, DofValue, ExecutionMode, GlobalState,
    IncrementReport, Problem,
};
pub use skyline::SkylineMatrix;

/// Newton iteration cap per attempted increment; past this the increment
/// is bisected rather than ground on.
pub const MAX_GLOBAL_ITER: usize = 25;

/// Relative residual tolerance: the force imbalance must drop this far
/// below the load scale (load control) or the initial imbalance of the
/// prescribed motion (displacement control).
pub const GLOBAL_TOL_REL: f64 = 1e-8;

/// Recursive bisection depth; 2^4 = 16 sub-steps is far past the point
/// where an increment that still fails signals a modelling problem.
pub const MAX_BISECTION_DEPTH: usize = 4;

/// Step halvings tried by the global line search before the iteration
/// settles for the best strict decrease it saw.
pub const LINE_SEARCH_CUTS: usize = 4;

/// Armijo sufficient-decrease slope on the residual norm; shallow, since
/// full Newton steps should be accepted whenever they help at all.
pub const ARMIJO_SLOPE: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Element(#[from] elements::ElementError),
    #[error("global tangent is not positive definite at free DOF {dof} (pivot {pivot:.3e})")]
    SingularTangent { dof: usize, pivot: f64 },
    #[error(
        "no convergence at load factor {factor:.6} after {iterations} iterations \
         (relative residual {residual:.3e})"
    )]
    NoConvergence { factor: f64, iterations: usize, residual: f64 },
    #[error("mesh is not usable: {reason}")]
    BadMesh { reason: String },
    #[error("boundary conditions are not usable: {reason}")]
    BadBoundary { reason: String },
}
