//! Strain-driven incremental update (radial return with linear hardening).
//!
//! For a fixed total strain the backward-Euler update has a closed form:
//! the relative trial stress and the final relative stress are colinear, so
//! the plastic multiplier follows from one division. Plane stress adds a
//! scalar Newton loop on the out-of-plane strain enforcing zero
//! out-of-plane stress, with the exact consistent tangent entry as the
//! derivative.

use crate::voigt;
use crate::yield_fn;
use crate::{
    elastic, MaterialError, MaterialParams, MaterialPointState, PlaneAssumption, UpdateResult,
    MAX_LOCAL_ITER, TOL_LOCAL_REL, TOL_TIE_REL,
};
use nalgebra::{Matrix4, Vector3, Vector4};

/// Update at a fully known 4-component strain.
pub(crate) struct FixedStrainUpdate {
    pub sigma4: Vector4<f64>,
    pub new_state: MaterialPointState,
    pub plastic_multiplier: f64,
    /// Consistent tangent d sigma4 / d eps4, engineering shear.
    pub tangent4: Matrix4<f64>,
}

pub(crate) fn update_at_fixed_strain(
    eps4: &Vector4<f64>,
    prior: &MaterialPointState,
    params: &MaterialParams,
) -> FixedStrainUpdate {
    let c4 = elastic::elastic_stiffness_4(params);
    let (_, mu) = elastic::lame_constants(params);
    let eps_p_n = voigt::tracefree4(&prior.plastic_strain);
    let sigma_tr = c4 * (eps4 - eps_p_n);
    let zeta_tr = yield_fn::relative_stress(&sigma_tr, prior, params);
    let phi_tr = voigt::tensor_norm_stress(&zeta_tr) - yield_fn::yield_radius(prior, params);

    if phi_tr <= TOL_TIE_REL * params.yield_stress {
        return FixedStrainUpdate {
            sigma4: sigma_tr,
            new_state: *prior,
            plastic_multiplier: 0.0,
            tangent4: c4,
        };
    }

    let c = params.von_mises_constant;
    let norm_tr = voigt::tensor_norm_stress(&zeta_tr);
    let n = zeta_tr / norm_tr;
    // Direction in the stiffness pairing (tensor shear) and the engineering
    // flow increment (doubled shear).
    let nu = Vector4::new(n.x, n.y, n.z, n.w);
    let flow = Vector4::new(n.x, n.y, n.z, 2.0 * n.w);

    let a = 2.0 * mu + params.kinematic_hardening + c * c * params.isotropic_hardening;
    let dl = phi_tr / a;

    let sigma4 = sigma_tr - 2.0 * mu * dl * nu;
    let new_state = MaterialPointState {
        plastic_strain: prior.plastic_strain + dl * Vector3::new(flow.x, flow.y, flow.w),
        isotropic_var: prior.isotropic_var + c * dl,
        kinematic_var: prior.kinematic_var + dl * Vector3::new(flow.x, flow.y, flow.w),
    };

    let four_mu2 = 4.0 * mu * mu;
    let nnt = nu * nu.transpose();
    let tangent4 =
        c4 - (four_mu2 / a) * nnt - (four_mu2 * dl / norm_tr) * (voigt::idev_stiffness() - nnt);

    FixedStrainUpdate { sigma4, new_state, plastic_multiplier: dl, tangent4 }
}

/// Incremental energy density at the updated state: stored energy plus the
/// dissipation of the step.
fn incremental_energy(
    eps4: &Vector4<f64>,
    result: &FixedStrainUpdate,
    params: &MaterialParams,
) -> f64 {
    let c4 = elastic::elastic_stiffness_4(params);
    let ee = eps4 - voigt::tracefree4(&result.new_state.plastic_strain);
    let elastic_part = 0.5 * ee.dot(&(c4 * ee));
    let nk = voigt::tensor_norm_tracefree3(&result.new_state.kinematic_var);
    let ai = result.new_state.isotropic_var;
    let hardening = 0.5 * params.kinematic_hardening * nk * nk
        + 0.5 * params.isotropic_hardening * ai * ai;
    let dissipation =
        params.yield_stress * params.von_mises_constant * result.plastic_multiplier;
    elastic_part + hardening + dissipation
}

/// Rich strain-driven update giving the full stress array and the resolved
/// out-of-plane strain alongside the in-plane result.
pub(crate) fn state_update_full(
    eps: &Vector3<f64>,
    prior: &MaterialPointState,
    params: &MaterialParams,
) -> Result<(UpdateResult, Vector4<f64>, f64), MaterialError> {
    match params.plane_assumption {
        PlaneAssumption::PlaneStrain => {
            let eps4 = voigt::strain4(eps, 0.0);
            let up = update_at_fixed_strain(&eps4, prior, params);
            let res = UpdateResult {
                stress: voigt::in_plane(&up.sigma4),
                new_state: up.new_state,
                plastic_multiplier: up.plastic_multiplier,
                tangent: voigt::block_in_plane(&up.tangent4),
                incremental_energy_value: incremental_energy(&eps4, &up, params),
            };
            Ok((res, up.sigma4, 0.0))
        }
        PlaneAssumption::PlaneStress => {
            // Scalar Newton on eps_z for sigma_z = 0. sigma_z is strictly
            // increasing in eps_z, so a bisection bracket guards the
            // iteration once a sign change is seen.
            let (lambda, mu) = elastic::lame_constants(params);
            let ee_x = eps.x - prior.plastic_strain.x;
            let ee_y = eps.y - prior.plastic_strain.y;
            let eps_p_z = -(prior.plastic_strain.x + prior.plastic_strain.y);
            let mut eps_z = eps_p_z - lambda / (lambda + 2.0 * mu) * (ee_x + ee_y);
            let tol = TOL_LOCAL_REL * params.yield_stress;
            let mut lo: Option<f64> = None;
            let mut hi: Option<f64> = None;
            let mut up = update_at_fixed_strain(&voigt::strain4(eps, eps_z), prior, params);
            for _ in 0..MAX_LOCAL_ITER {
                let res_z = up.sigma4.z;
                if res_z.abs() <= tol {
                    let tangent = voigt::condense_z(&up.tangent4);
                    let eps4 = voigt::strain4(eps, eps_z);
                    let result = UpdateResult {
                        stress: voigt::in_plane(&up.sigma4),
                        new_state: up.new_state,
                        plastic_multiplier: up.plastic_multiplier,
                        tangent,
                        incremental_energy_value: incremental_energy(&eps4, &up, params),
                    };
                    return Ok((result, up.sigma4, eps_z));
                }
                if res_z > 0.0 {
                    hi = Some(eps_z);
                } else {
                    lo = Some(eps_z);
                }
                let slope = up.tangent4[(2, 2)];
                let mut next = eps_z - res_z / slope;
                if let (Some(l), Some(h)) = (lo, hi) {
                    if next <= l || next >= h {
                        next = 0.5 * (l + h);
                    }
                }
                eps_z = next;
                up = update_at_fixed_strain(&voigt::strain4(eps, eps_z), prior, params);
            }
            Err(MaterialError::NoConvergence {
                iterations: MAX_LOCAL_ITER,
                residual: up.sigma4.z.abs(),
            })
        }
    }
}

/// Strain-driven incremental update for the declared plane assumption.
///
/// Returns the minimizer of the incremental energy over the internal
/// variables: stress, updated state, plastic multiplier, the consistent
/// in-plane tangent, and the energy value itself.
pub fn state_update(
    eps: &Vector3<f64>,
    prior: &MaterialPointState,
    params: &MaterialParams,
) -> Result<UpdateResult, MaterialError> {
    state_update_full(eps, prior, params).map(|(r, _, _)| r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cook_params(plane: PlaneAssumption) -> MaterialParams {
        MaterialParams::new(70.0, 1.0 / 3.0, 0.243, 0.2, 0.0, plane)
    }

    #[test]
    fn test_elastic_branch_returns_hooke_response() {
        let p = cook_params(PlaneAssumption::PlaneStress);
        let eps = Vector3::new(1e-3, 0.0, 0.0);
        let r = state_update(&eps, &MaterialPointState::virgin(), &p).unwrap();
        assert_eq!(r.plastic_multiplier, 0.0);
        let ce = elastic::elastic_tensor(&p);
        assert_relative_eq!(r.stress, ce * eps, epsilon = 1e-12);
        assert_relative_eq!(r.tangent, ce, epsilon = 1e-10);
    }

    #[test]
    fn test_zero_strain_is_identically_zero() {
        let p = cook_params(PlaneAssumption::PlaneStress);
        let r = state_update(&Vector3::zeros(), &MaterialPointState::virgin(), &p).unwrap();
        assert_eq!(r.stress.norm(), 0.0);
        assert_eq!(r.plastic_multiplier, 0.0);
        assert_eq!(r.incremental_energy_value, 0.0);
    }

    #[test]
    fn test_plastic_branch_satisfies_kkt() {
        let p = cook_params(PlaneAssumption::PlaneStress);
        let eps = Vector3::new(6e-3, 0.0, 0.0);
        let r = state_update(&eps, &MaterialPointState::virgin(), &p).unwrap();
        assert!(r.plastic_multiplier > 0.0, "stretch past yield must flow");
        let phi = yield_fn::yield_value(&r.stress, &r.new_state, &p);
        assert!(
            phi.abs() <= 1e-10 * p.yield_stress,
            "converged state must sit on the yield surface, phi = {phi:e}"
        );
        assert!(r.plastic_multiplier * phi <= 1e-12);
    }

    #[test]
    fn test_plane_stress_out_of_plane_is_zero() {
        let p = cook_params(PlaneAssumption::PlaneStress);
        let eps = Vector3::new(6e-3, -2e-3, 3e-3);
        let (_, sigma4, _) =
            state_update_full(&eps, &MaterialPointState::virgin(), &p).unwrap();
        assert!(sigma4.z.abs() <= TOL_LOCAL_REL * p.yield_stress);
    }

    #[test]
    fn test_plane_strain_keeps_eps_z_zero() {
        let p = cook_params(PlaneAssumption::PlaneStrain);
        let eps = Vector3::new(6e-3, -2e-3, 3e-3);
        let (r, sigma4, eps_z) =
            state_update_full(&eps, &MaterialPointState::virgin(), &p).unwrap();
        assert_eq!(eps_z, 0.0);
        assert!(sigma4.z != 0.0, "plane strain develops out-of-plane stress");
        assert!(r.plastic_multiplier > 0.0);
    }

    #[test]
    fn test_tangent_is_symmetric() {
        let p = cook_params(PlaneAssumption::PlaneStress);
        let eps = Vector3::new(6e-3, -1e-3, 2e-3);
        let r = state_update(&eps, &MaterialPointState::virgin(), &p).unwrap();
        let asym = (r.tangent - r.tangent.transpose()).norm() / r.tangent.norm();
        assert!(asym <= 1e-12, "associative flow gives a symmetric tangent, asym = {asym:e}");
    }

    #[test]
    fn test_isotropic_variable_monotone() {
        let p = cook_params(PlaneAssumption::PlaneStress);
        let mut state = MaterialPointState::virgin();
        let mut prev = 0.0;
        for k in 1..=5 {
            let eps = Vector3::new(2e-3 * k as f64, 0.0, 1e-3 * k as f64);
            let r = state_update(&eps, &state, &p).unwrap();
            state = r.new_state;
            assert!(state.isotropic_var >= prev);
            prev = state.isotropic_var;
        }
    }

    #[test]
    fn test_tie_band_takes_elastic_branch() {
        let p = cook_params(PlaneAssumption::PlaneStress);
        // Uniaxial stress exactly at the onset: sigma_x = sigma_y0 with
        // lateral contraction keeps the trial yield within roundoff of zero.
        let eps_onset = 0.243 / 70.0;
        let r = state_update(
            &Vector3::new(eps_onset, -1.0 / 3.0 * eps_onset, 0.0),
            &MaterialPointState::virgin(),
            &p,
        )
        .unwrap();
        // The trial value sits within the tie band, so no flow occurs.
        assert_eq!(r.plastic_multiplier, 0.0);
    }
}
