//! Von Mises yield function with isotropic and kinematic hardening.
//!
//! The yield value is `|dev(sigma) - k_k a_k| - c (sigma_y0 + k_i a_i)` with
//! the Frobenius tensor norm; non-positive values are plastically admissible.

use crate::voigt;
use crate::{MaterialParams, MaterialPointState, PlaneAssumption};
use nalgebra::{Vector3, Vector4};

/// Relative stress (stress deviator shifted by the back stress), in tensor
/// components `[x, y, z, xy]`.
pub(crate) fn relative_stress(
    sigma4: &Vector4<f64>,
    state: &MaterialPointState,
    params: &MaterialParams,
) -> Vector4<f64> {
    let mut zeta = voigt::dev_stress(sigma4);
    if params.kinematic_hardening != 0.0 {
        let ak = voigt::tracefree4(&state.kinematic_var);
        // Stored shear is engineering; the tensor component is half of it.
        let ak_tensor = Vector4::new(ak.x, ak.y, ak.z, 0.5 * ak.w);
        zeta -= params.kinematic_hardening * ak_tensor;
    }
    zeta
}

/// Current yield radius `c (sigma_y0 + k_i a_i)`.
pub(crate) fn yield_radius(state: &MaterialPointState, params: &MaterialParams) -> f64 {
    params.von_mises_constant
        * (params.yield_stress + params.isotropic_hardening * state.isotropic_var)
}

/// Yield value for a full stress array `[x, y, z, xy]`.
pub fn yield_value_full(
    sigma4: &Vector4<f64>,
    state: &MaterialPointState,
    params: &MaterialParams,
) -> f64 {
    let zeta = relative_stress(sigma4, state, params);
    voigt::tensor_norm_stress(&zeta) - yield_radius(state, params)
}

/// Yield value for an in-plane stress.
///
/// The out-of-plane stress is fixed by the plane assumption: zero for plane
/// stress, and the elastic lateral value `nu (sigma_x + sigma_y)` for plane
/// strain. Callers holding a resolved out-of-plane stress should use
/// [`yield_value_full`].
pub fn yield_value(
    sigma: &Vector3<f64>,
    state: &MaterialPointState,
    params: &MaterialParams,
) -> f64 {
    let sig_z = match params.plane_assumption {
        PlaneAssumption::PlaneStress => 0.0,
        PlaneAssumption::PlaneStrain => params.poisson_ratio * (sigma.x + sigma.y),
    };
    yield_value_full(&voigt::stress4(sigma, sig_z), state, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> MaterialParams {
        MaterialParams::new(70.0, 1.0 / 3.0, 0.243, 0.2, 0.0, PlaneAssumption::PlaneStress)
    }

    #[test]
    fn test_uniaxial_onset_is_zero() {
        // |dev| of uniaxial sigma_x is sqrt(2/3) |sigma_x|, cancelling the
        // radius exactly at sigma_x = sigma_y0.
        let phi = yield_value(
            &Vector3::new(0.243, 0.0, 0.0),
            &MaterialPointState::virgin(),
            &params(),
        );
        assert!(
            phi.abs() <= 1e-15 * 0.243,
            "uniaxial onset must sit on the yield surface, got {phi:e}"
        );
    }

    #[test]
    fn test_origin_is_interior() {
        let phi = yield_value(&Vector3::zeros(), &MaterialPointState::virgin(), &params());
        assert_relative_eq!(phi, -(2.0f64 / 3.0).sqrt() * 0.243, epsilon = 1e-15);
    }

    #[test]
    fn test_isotropic_hardening_expands_radius() {
        let mut state = MaterialPointState::virgin();
        state.isotropic_var = 0.1;
        let p = params();
        let phi = yield_value(&Vector3::new(0.243, 0.0, 0.0), &state, &p);
        let expected = -(2.0f64 / 3.0).sqrt() * p.isotropic_hardening * 0.1;
        assert_relative_eq!(phi, expected, epsilon = 1e-14);
    }

    #[test]
    fn test_back_stress_shifts_surface() {
        let mut p = params();
        p.kinematic_hardening = 0.5;
        let mut state = MaterialPointState::virgin();
        // Pure shear back stress: stored engineering value 0.2 means tensor
        // component 0.1, so a shear stress of k_k * 0.1 centers the surface.
        state.kinematic_var = Vector3::new(0.0, 0.0, 0.2);
        let centered = Vector3::new(0.0, 0.0, p.kinematic_hardening * 0.1);
        let phi = yield_value(&centered, &state, &p);
        assert_relative_eq!(phi, -(2.0f64 / 3.0).sqrt() * 0.243, epsilon = 1e-14);
    }
}
