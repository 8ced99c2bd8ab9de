//! Mixed plane finite elements for small-strain elastoplasticity.
//!
//! Six formulations share one state-determination contract: given element
//! nodal displacements and the committed history, produce internal forces,
//! a consistent stiffness, and an uncommitted trial history.
//!
//! * displacement Q4 / Q8 (compatible reference elements),
//! * a three-field Q8 with a 13-mode self-equilibrated stress basis and
//!   piecewise-constant strain, solved by the nodal-force iteration with
//!   per-subdomain inverse constitutive updates,
//! * a three-field Q4 with identical stress and strain interpolation and
//!   closed-form parameter elimination,
//! * an enhanced strain Q4 with four incompatible modes,
//! * a two-field stress-displacement Q4 driven by the inverse (stress to
//!   strain) constitutive map,
//! * a stress-displacement-multiplier Q4 with the flow rule enforced
//!   weakly, solvable by return mapping, interior point, or SQP.

use gsm_material::MaterialError;
use interpolation::InterpolationError;
use nalgebra::{DMatrix, DVector, Vector2, Vector3};
use thiserror::Error;

mod cm;
mod cm_ip;
mod cm_sqp;
mod displacement;
mod dispatch;
mod es;
mod filter;
mod history;
mod hr;
mod hw;
mod nodal_force;
mod operators;

pub use cm::cm_state_return_map;
pub use cm_ip::{cm_state_ip, IpConfig};
pub use cm_sqp::cm_state_sqp;
pub use displacement::displacement_element_state;
pub use dispatch::{element_state, CmSolver, StateOptions};
pub use es::es_state;
pub use filter::{rigid_body_filter, RigidBodyFilter};
pub use history::ElementHistory;
pub use hr::{hr_state, hr_state_relaxed};
pub use hw::hw_identical_state;
pub use nodal_force::hw_nodal_force_state;
pub use operators::{build_operators, ElementOperators, SiteData};

/// Relative element residual tolerance; local accuracy must exceed the
/// global Newton tolerance (1e-8) by at least two orders.
pub const TOL_ELEM_REL: f64 = 1e-10;

/// Cap on local Newton iterations within one state determination.
pub const MAX_ELEM_ITER: usize = 30;

/// Cap on active-set changes in the multiplier solvers.
pub const MAX_ACTIVE_SET_SWEEPS: usize = 20;

/// Element formulations available to the mesh level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// Compatible bilinear displacement element.
    DisplacementQ4,
    /// Compatible serendipity displacement element.
    DisplacementQ8,
    /// Three-field Q8: 13-mode self-equilibrated stress basis (quadratic
    /// complete plus two cubic bending modes), piecewise-constant strain on
    /// a 3x3 subdomain partition, nodal-force state determination.
    HwQ8D,
    /// Three-field Q4 with strain interpolation identical to the 5-mode
    /// stress basis; closed-form parameter elimination.
    HwQ4Identical,
    /// Enhanced strain Q4: four incompatible modes, stress eliminated.
    EsQ4,
    /// Stress-displacement-multiplier Q4 on the 5-mode basis with pointwise
    /// plastic admissibility at the 2x2 Gauss sites.
    CmQ4,
    /// Stress-displacement Q4 on the 5-mode basis, driven by the inverse
    /// constitutive map.
    HrQ4,
    /// Deliberately rank-deficient variant of HrQ4 keeping only the three
    /// constant stress modes; exists to demonstrate instability detection.
    HrQ4Deficient,
    /// Nodal-force iteration: Q4, 5-mode stress basis, piecewise-constant
    /// strain on `n_d` subdomains, per-subdomain multipliers.
    HwNfQ4 { n_d: usize },
}

impl Formulation {
    pub fn n_nodes(self) -> usize {
        match self {
            Formulation::DisplacementQ8 | Formulation::HwQ8D => 8,
            _ => 4,
        }
    }

    pub fn n_dofs(self) -> usize {
        2 * self.n_nodes()
    }

    /// True when the formulation carries explicit stress parameters.
    pub fn carries_stress_parameters(self) -> bool {
        !matches!(self, Formulation::DisplacementQ4 | Formulation::DisplacementQ8)
    }
}

/// Per-call iteration diagnostics.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    /// Local iterations (Newton steps, active-set sweeps included).
    pub local_iters: usize,
    /// Plastically active multiplier sites at the solution.
    pub active_set_size: usize,
    /// Largest site yield value at the trial state (should be <= 0 up to
    /// the local tolerance).
    pub max_yield: f64,
    /// Largest |multiplier x yield| complementarity product.
    pub max_complementarity: f64,
}

/// Outcome of one element state determination. The trial history must not
/// be committed by the caller until the global step is accepted.
#[derive(Debug, Clone)]
pub struct ElementResult {
    /// Internal nodal forces.
    pub q_int: DVector<f64>,
    /// Consistent stiffness, symmetric at converged states.
    pub k_e: DMatrix<f64>,
    /// Updated (uncommitted) history.
    pub trial_history: ElementHistory,
    /// Stress parameters, for formulations that carry them.
    pub beta: Option<DVector<f64>>,
    /// In-plane stress at each site of the trial state (quadrature points
    /// or subdomains, matching the history layout).
    pub site_stresses: Vec<Vector3<f64>>,
    /// Plastic multiplier increment per site for this step.
    pub site_multipliers: Vec<f64>,
    pub diagnostics: Diagnostics,
    /// Stress-residual force correction from the relaxed two-field update;
    /// the solver folds it into a modified global residual.
    pub residual_correction: Option<DVector<f64>>,
}

#[derive(Debug, Error)]
pub enum ElementError {
    #[error(transparent)]
    Interpolation(#[from] InterpolationError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("strain-stress pairing matrix G is numerically singular")]
    SingularG,
    #[error("stress flexibility matrix is numerically singular")]
    SingularFlexibility,
    #[error("enhanced-mode stiffness block is numerically singular")]
    SingularEnhancedStiffness,
    #[error("deformational coupling matrix C V is numerically singular")]
    SingularCV,
    #[error("element nodes are collinear; no rigid-body filter exists")]
    CollinearNodes,
    #[error("element iteration failed to converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("active set oscillates without settling: {description}")]
    ActiveSetCycling { description: String },
}

/// Multiplier threshold above which a site is reported plastically active.
/// Solver-specific iterate floors sit well below; true plastic increments
/// sit well above.
pub const ACTIVE_REPORT_DL: f64 = 1e-8;

/// Relative yield tolerance at converged multiplier sites, on the scale of
/// the yield stress; two orders below the committed-state audit bound.
pub(crate) const TOL_YIELD_REL: f64 = 1e-12;

/// Internal helper: element force scale used to normalize residuals,
/// `E * area` times a strain measure floor.
pub(crate) fn residual_scale(youngs_modulus: f64, area: f64, drive: f64) -> f64 {
    (youngs_modulus * area).max(f64::MIN_POSITIVE) * drive.max(1e-12)
}

/// Internal helper: first three entries of a dynamic vector as a `Vector3`.
pub(crate) fn vec3(v: &DVector<f64>) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

/// Internal helper: yield and complementarity audit of a trial state. The
/// yield value is re-evaluated at zero multiplier increment on the updated
/// internal variables, which is exactly what a later audit of the committed
/// state sees.
pub(crate) fn audit_sites(
    stresses: &[Vector3<f64>],
    multipliers: &[f64],
    states: &[gsm_material::MaterialPointState],
    params: &gsm_material::MaterialParams,
) -> Result<(f64, f64), ElementError> {
    let mut max_yield = f64::NEG_INFINITY;
    let mut max_comp: f64 = 0.0;
    for ((sigma, dl), state) in stresses.iter().zip(multipliers).zip(states) {
        let phi = gsm_material::site_saddle(sigma, 0.0, state, params)?.phi;
        max_yield = max_yield.max(phi);
        max_comp = max_comp.max((dl * phi).abs());
    }
    if stresses.is_empty() {
        max_yield = 0.0;
    }
    Ok((max_yield, max_comp))
}

/// Internal helper: physical coordinates of element nodes as a flat DOF
/// vector ordering check (x1, y1, x2, y2, ...).
pub(crate) fn node_count_checked(
    coords: &[Vector2<f64>],
    expected: usize,
) -> Result<(), ElementError> {
    if coords.len() == expected {
        Ok(())
    } else {
        Err(ElementError::Interpolation(InterpolationError::WrongNodeCount {
            expected,
            got: coords.len(),
        }))
    }
}
