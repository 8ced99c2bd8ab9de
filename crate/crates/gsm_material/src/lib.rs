//! Constitutive kernel for generalized standard materials, specialized to
//! von Mises plasticity with linear isotropic and kinematic hardening.
//!
//! The kernel provides the direct (strain-driven) incremental update, the
//! inverse (stress-driven) update needed by stress-based element
//! formulations, the dissipation support function, and exact consistent
//! tangents for both directions. All updates are backward-Euler minimizers
//! of the incremental energy (free energy plus dissipation over the step).
//!
//! # Voigt conventions
//!
//! In-plane quantities are 3-component Voigt arrays `[x, y, xy]`.
//! Strain-like arrays use the engineering shear `g_xy = 2 e_xy`; stress-like
//! arrays carry the tensor shear `tau_xy`. Internally the kernel works with
//! 4-component arrays `[x, y, z, xy]` under the same shear conventions.
//!
//! Plastic strain and the kinematic hardening variable are trace-free: the
//! out-of-plane component equals `-(x + y)` and is never stored.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

mod dissipation;
mod elastic;
mod inverse;
mod update;
pub mod voigt;
mod yield_fn;

pub use dissipation::dissipation_increment;
pub use elastic::{
    elastic_compliance, elastic_compliance_4, elastic_stiffness_4, elastic_tensor, lame_constants,
};
pub use inverse::{inverse_state_update, site_commit, site_saddle, SiteSaddleResponse};
pub use update::state_update;
pub use yield_fn::{yield_value, yield_value_full};

/// Relative tolerance for local consistency residuals, scaled by the yield
/// stress. Machine-accurate local solves prevent history drift across
/// thousands of committed increments.
pub const TOL_LOCAL_REL: f64 = 1e-12;

/// Trial yield values within this band of zero (relative to the yield
/// stress) take the elastic branch, keeping the response continuous at the
/// onset of plastic flow.
pub const TOL_TIE_REL: f64 = 1e-14;

/// Iteration cap for scalar local Newton loops (out-of-plane unknowns).
pub const MAX_LOCAL_ITER: usize = 50;

/// Reduction of a 3D problem to two dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneAssumption {
    /// Zero out-of-plane stress; the out-of-plane strain is a local unknown.
    PlaneStress,
    /// Zero out-of-plane strain; the out-of-plane stress is a local unknown.
    PlaneStrain,
}

/// Material constants for the von Mises model with linear hardening.
#[derive(Debug, Clone, Copy)]
pub struct MaterialParams {
    /// Young's modulus, stress units, strictly positive.
    pub youngs_modulus: f64,
    /// Poisson's ratio, in (-1, 0.5).
    pub poisson_ratio: f64,
    /// Initial yield limit in tension, strictly positive.
    pub yield_stress: f64,
    /// Isotropic hardening modulus, non-negative.
    pub isotropic_hardening: f64,
    /// Kinematic hardening modulus, non-negative.
    pub kinematic_hardening: f64,
    /// Plane reduction applied by all updates.
    pub plane_assumption: PlaneAssumption,
    /// Scale factor between the deviatoric norm and the uniaxial yield
    /// limit. The tension calibration is sqrt(2/3).
    pub von_mises_constant: f64,
}

impl MaterialParams {
    /// Parameters with the standard tension calibration of the yield radius.
    pub fn new(
        youngs_modulus: f64,
        poisson_ratio: f64,
        yield_stress: f64,
        isotropic_hardening: f64,
        kinematic_hardening: f64,
        plane_assumption: PlaneAssumption,
    ) -> Self {
        Self {
            youngs_modulus,
            poisson_ratio,
            yield_stress,
            isotropic_hardening,
            kinematic_hardening,
            plane_assumption,
            von_mises_constant: (2.0f64 / 3.0).sqrt(),
        }
    }

    /// Checks the admissible parameter ranges.
    pub fn validate(&self) -> Result<(), MaterialError> {
        let ok = self.youngs_modulus > 0.0
            && self.poisson_ratio > -1.0
            && self.poisson_ratio < 0.5
            && self.yield_stress > 0.0
            && self.isotropic_hardening >= 0.0
            && self.kinematic_hardening >= 0.0
            && self.von_mises_constant > 0.0;
        if ok {
            Ok(())
        } else {
            Err(MaterialError::InvalidParams)
        }
    }

    /// Combined hardening modulus governing the inverse update,
    /// `k_k + c^2 k_i`.
    pub fn hardening_modulus(&self) -> f64 {
        let c = self.von_mises_constant;
        self.kinematic_hardening + c * c * self.isotropic_hardening
    }
}

/// Committed inelastic history at one sampling site.
///
/// `plastic_strain` and `kinematic_var` are in-plane Voigt arrays with
/// engineering shear; their out-of-plane components are `-(x + y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialPointState {
    pub plastic_strain: Vector3<f64>,
    pub isotropic_var: f64,
    pub kinematic_var: Vector3<f64>,
}

impl MaterialPointState {
    pub fn virgin() -> Self {
        Self {
            plastic_strain: Vector3::zeros(),
            isotropic_var: 0.0,
            kinematic_var: Vector3::zeros(),
        }
    }
}

impl Default for MaterialPointState {
    fn default() -> Self {
        Self::virgin()
    }
}

/// Output of the strain-driven incremental update.
#[derive(Debug, Clone)]
pub struct UpdateResult {
    /// In-plane stress.
    pub stress: Vector3<f64>,
    /// Updated internal variables (not yet committed).
    pub new_state: MaterialPointState,
    /// Plastic multiplier increment, non-negative.
    pub plastic_multiplier: f64,
    /// Consistent tangent d(stress)/d(strain), symmetric.
    pub tangent: Matrix3<f64>,
    /// Value of the incremental energy density at the minimizer.
    pub incremental_energy_value: f64,
}

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("material parameters outside the admissible ranges")]
    InvalidParams,
    #[error("local iteration failed to converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("stress-driven update requires hardening; the inverse map is multivalued for perfect plasticity")]
    PerfectPlasticityUnsupported,
}
