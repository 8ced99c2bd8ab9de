//! Yield value recomputed through principal stresses.
//!
//! Builds the full 3x3 relative stress tensor (stress minus back stress),
//! diagonalizes it, and measures the deviatoric Frobenius norm on the
//! eigenvalues. Exercises a completely different code path from the Voigt
//! deviator arithmetic in the kernel.

use gsm_material::{MaterialParams, MaterialPointState, PlaneAssumption};
use nalgebra::{Matrix3, Vector3, Vector4};

/// Eigen-decomposition yield value for a full stress `[x, y, z, xy]`.
pub fn yield_eigen_full(
    sigma4: &Vector4<f64>,
    state: &MaterialPointState,
    params: &MaterialParams,
) -> f64 {
    // Relative stress as a 3x3 symmetric tensor. Stored kinematic shear is
    // engineering, so the tensor off-diagonal is half of it.
    let kk = params.kinematic_hardening;
    let ak = &state.kinematic_var;
    let ak_z = -(ak.x + ak.y);
    let rel = Matrix3::new(
        sigma4.x - kk * ak.x,
        sigma4.w - kk * 0.5 * ak.z,
        0.0,
        sigma4.w - kk * 0.5 * ak.z,
        sigma4.y - kk * ak.y,
        0.0,
        0.0,
        0.0,
        sigma4.z - kk * ak_z,
    );
    let eig = rel.symmetric_eigenvalues();
    let mean = (eig.x + eig.y + eig.z) / 3.0;
    let dev = Vector3::new(eig.x - mean, eig.y - mean, eig.z - mean);
    dev.norm()
        - params.von_mises_constant
            * (params.yield_stress + params.isotropic_hardening * state.isotropic_var)
}

/// Eigen-decomposition yield value for an in-plane stress, with the
/// out-of-plane component fixed by the plane assumption (zero for plane
/// stress, elastic lateral value for plane strain).
pub fn yield_eigen(
    sigma: &Vector3<f64>,
    state: &MaterialPointState,
    params: &MaterialParams,
) -> f64 {
    let sig_z = match params.plane_assumption {
        PlaneAssumption::PlaneStress => 0.0,
        PlaneAssumption::PlaneStrain => params.poisson_ratio * (sigma.x + sigma.y),
    };
    yield_eigen_full(&Vector4::new(sigma.x, sigma.y, sig_z, sigma.z), state, params)
}
