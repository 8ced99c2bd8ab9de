//! Stress-driven inverse update and the per-site saddle response.
//!
//! With linear hardening the relative stress at the end of the step and the
//! trial relative stress are colinear, which makes the yield value an exact
//! affine function of the plastic multiplier at fixed final stress:
//!
//! ```text
//! phi(sigma, dl) = ||dev sigma - k_k a_k||_t - c (sigma_y0 + k_i a_i_n) - h dl,
//! h = k_k + c^2 k_i.
//! ```
//!
//! The inverse update therefore closes in one division once the plane
//! constraint is resolved. Plane stress fixes sigma_z = 0; plane strain
//! resolves sigma_z from eps_z = 0 by a scalar (elastic branch) or 2x2
//! (plastic branch) Newton iteration. Both branches also expose the exact
//! derivative blocks for element-level Newton loops.

use crate::voigt::{self, IN_PLANE};
use crate::yield_fn;
use crate::{
    elastic, MaterialError, MaterialParams, MaterialPointState, PlaneAssumption,
    MAX_LOCAL_ITER, TOL_LOCAL_REL, TOL_TIE_REL,
};
use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};

/// Relative-norm floor below which the flow direction is treated as
/// undefined; such a site is far inside the elastic domain for any
/// admissible multiplier and never activates.
const DEGENERATE_NORM_REL: f64 = 1e-12;

/// Derivative data of the site response at fixed committed history.
///
/// For a final in-plane stress `sigma` and a candidate multiplier `dl`:
///
/// ```text
/// d eps_in = j_ss d sigma + m d dl,      d phi = m . d sigma - h_eff d dl.
/// ```
///
/// The same vector `m` appears in both places because the flow rule is
/// associative; `h_eff` is positive whenever hardening is present.
#[derive(Debug, Clone)]
pub struct SiteSaddleResponse {
    /// In-plane strain realized by (sigma, dl) on top of the committed state.
    pub eps: Vector3<f64>,
    /// Yield value at (sigma, dl); affine in dl.
    pub phi: f64,
    /// Sensitivity of the strain to the in-plane stress (symmetric).
    pub j_ss: Matrix3<f64>,
    /// Shared flow/normal vector coupling stress and multiplier.
    pub m: Vector3<f64>,
    /// Effective hardening modulus after the plane condensation.
    pub h_eff: f64,
}

/// Full 4-component response pieces shared by the public entry points.
struct SiteCore {
    eps4: Vector4<f64>,
    phi: f64,
    /// d eps4 / d sigma4 at fixed dl (symmetric 4x4).
    j4: Matrix4<f64>,
    /// Flow vector in engineering strain components [nx, ny, nz, 2nxy].
    nu_c: Vector4<f64>,
}

/// Evaluate strain, yield value and derivative blocks at a full stress
/// array and multiplier, on top of a committed state.
fn site_core(
    sigma4: &Vector4<f64>,
    dl: f64,
    prior: &MaterialPointState,
    params: &MaterialParams,
) -> SiteCore {
    let a4 = elastic::elastic_compliance_4(params);
    let c = params.von_mises_constant;
    let h = params.hardening_modulus();
    let zeta = yield_fn::relative_stress(sigma4, prior, params);
    let norm = voigt::tensor_norm_stress(&zeta);
    let radius = yield_fn::yield_radius(prior, params);
    let phi = norm - radius - h * dl;
    let eps_p_n = voigt::tracefree4(&prior.plastic_strain);

    if norm <= DEGENERATE_NORM_REL * c * params.yield_stress {
        return SiteCore {
            eps4: a4 * sigma4 + eps_p_n,
            phi,
            j4: a4,
            nu_c: Vector4::zeros(),
        };
    }

    let n = zeta / norm;
    let nu_c = Vector4::new(n.x, n.y, n.z, 2.0 * n.w);
    let eps4 = a4 * sigma4 + eps_p_n + dl * nu_c;
    // d nu_c / d sigma = (DEV_COMPL - nu_c nu_c^T) / ||zeta||.
    let d2 = (voigt::dev_compliance() - nu_c * nu_c.transpose()) / norm;
    let j4 = a4 + dl * d2;
    SiteCore { eps4, phi, j4, nu_c }
}

/// Resolve sigma_z for plane strain at fixed in-plane stress and multiplier
/// by a scalar Newton iteration on eps_z = 0. The derivative j4[(2,2)] is
/// bounded below by 1/E, so plain Newton on this monotone residual is safe.
fn resolve_sigma_z(
    sigma_in: &Vector3<f64>,
    dl: f64,
    prior: &MaterialPointState,
    params: &MaterialParams,
) -> Result<(Vector4<f64>, SiteCore), MaterialError> {
    let eps_p_z = -(prior.plastic_strain.x + prior.plastic_strain.y);
    let mut sigma_z = params.poisson_ratio * (sigma_in.x + sigma_in.y)
        - params.youngs_modulus * eps_p_z;
    // Strain-scale tolerance: the residual noise floor grows with the
    // committed plastic strain and the multiplier, not just with sigma_y0/E.
    let scale = params.yield_stress / params.youngs_modulus + eps_p_z.abs() + dl.abs();
    let tol = TOL_LOCAL_REL * scale;
    let mut sigma4 = voigt::stress4(sigma_in, sigma_z);
    let mut core = site_core(&sigma4, dl, prior, params);
    for _ in 0..MAX_LOCAL_ITER {
        let res = core.eps4.z;
        if res.abs() <= tol {
            return Ok((sigma4, core));
        }
        sigma_z -= res / core.j4[(2, 2)];
        sigma4 = voigt::stress4(sigma_in, sigma_z);
        core = site_core(&sigma4, dl, prior, params);
    }
    Err(MaterialError::NoConvergence { iterations: MAX_LOCAL_ITER, residual: core.eps4.z.abs() })
}

/// Assemble the plane-reduced saddle response from the core data.
fn reduce_core(core: &SiteCore, params: &MaterialParams) -> SiteSaddleResponse {
    let h = params.hardening_modulus();
    match params.plane_assumption {
        PlaneAssumption::PlaneStress => {
            let mut j_ss = Matrix3::zeros();
            for (r, &i) in IN_PLANE.iter().enumerate() {
                for (s, &j) in IN_PLANE.iter().enumerate() {
                    j_ss[(r, s)] = core.j4[(i, j)];
                }
            }
            SiteSaddleResponse {
                eps: Vector3::new(core.eps4.x, core.eps4.y, core.eps4.w),
                phi: core.phi,
                j_ss,
                m: Vector3::new(core.nu_c.x, core.nu_c.y, core.nu_c.w),
                h_eff: h,
            }
        }
        PlaneAssumption::PlaneStrain => {
            // Condense the resolved out-of-plane stress: symmetric Schur
            // complement of the z row/column of [[j4, nu_c], [nu_c^T, -h]].
            let jzz = core.j4[(2, 2)];
            let jz = Vector3::new(core.j4[(0, 2)], core.j4[(1, 2)], core.j4[(3, 2)]);
            let mut j_ss = Matrix3::zeros();
            for (r, &i) in IN_PLANE.iter().enumerate() {
                for (s, &j) in IN_PLANE.iter().enumerate() {
                    j_ss[(r, s)] = core.j4[(i, j)];
                }
            }
            j_ss -= jz * jz.transpose() / jzz;
            let nu_in = Vector3::new(core.nu_c.x, core.nu_c.y, core.nu_c.w);
            let m = nu_in - jz * (core.nu_c.z / jzz);
            let h_eff = h + core.nu_c.z * core.nu_c.z / jzz;
            SiteSaddleResponse {
                eps: Vector3::new(core.eps4.x, core.eps4.y, core.eps4.w),
                phi: core.phi,
                j_ss,
                m,
                h_eff,
            }
        }
    }
}

/// Strain, yield value and exact derivative blocks at an in-plane stress
/// and plastic multiplier on top of a committed state. The out-of-plane
/// component is resolved internally per the plane assumption.
pub fn site_saddle(
    sigma: &Vector3<f64>,
    dl: f64,
    prior: &MaterialPointState,
    params: &MaterialParams,
) -> Result<SiteSaddleResponse, MaterialError> {
    let core = match params.plane_assumption {
        PlaneAssumption::PlaneStress => site_core(&voigt::stress4(sigma, 0.0), dl, prior, params),
        PlaneAssumption::PlaneStrain => resolve_sigma_z(sigma, dl, prior, params)?.1,
    };
    Ok(reduce_core(&core, params))
}

/// Commit a site: advance the internal variables for a final in-plane
/// stress and accepted multiplier.
pub fn site_commit(
    sigma: &Vector3<f64>,
    dl: f64,
    prior: &MaterialPointState,
    params: &MaterialParams,
) -> Result<MaterialPointState, MaterialError> {
    if dl == 0.0 {
        return Ok(*prior);
    }
    let core = match params.plane_assumption {
        PlaneAssumption::PlaneStress => site_core(&voigt::stress4(sigma, 0.0), dl, prior, params),
        PlaneAssumption::PlaneStrain => resolve_sigma_z(sigma, dl, prior, params)?.1,
    };
    let flow = Vector3::new(core.nu_c.x, core.nu_c.y, core.nu_c.w);
    Ok(MaterialPointState {
        plastic_strain: prior.plastic_strain + dl * flow,
        isotropic_var: prior.isotropic_var + params.von_mises_constant * dl,
        kinematic_var: prior.kinematic_var + dl * flow,
    })
}

/// Stress-driven inverse of the incremental update: the strain and updated
/// state whose strain-driven update returns exactly the given stress, plus
/// the consistent compliance d eps / d sigma.
///
/// Requires hardening: with `h = k_k + c^2 k_i = 0` a plastic stress maps
/// to a ray of strains and the inverse is not single-valued.
pub fn inverse_state_update(
    sigma: &Vector3<f64>,
    prior: &MaterialPointState,
    params: &MaterialParams,
) -> Result<(Vector3<f64>, MaterialPointState, Matrix3<f64>), MaterialError> {
    let h = params.hardening_modulus();
    match params.plane_assumption {
        PlaneAssumption::PlaneStress => {
            let sigma4 = voigt::stress4(sigma, 0.0);
            let trial = site_core(&sigma4, 0.0, prior, params);
            if trial.phi <= TOL_TIE_REL * params.yield_stress {
                let resp = reduce_core(&trial, params);
                return Ok((resp.eps, *prior, resp.j_ss));
            }
            if h <= 0.0 {
                return Err(MaterialError::PerfectPlasticityUnsupported);
            }
            let dl = trial.phi / h;
            let core = site_core(&sigma4, dl, prior, params);
            let resp = reduce_core(&core, params);
            let new_state = site_commit(sigma, dl, prior, params)?;
            // Consistency phi = 0 ties d dl = m . d sigma / h.
            let compliance = resp.j_ss + resp.m * resp.m.transpose() / resp.h_eff;
            Ok((resp.eps, new_state, compliance))
        }
        PlaneAssumption::PlaneStrain => {
            let (_, trial) = resolve_sigma_z(sigma, 0.0, prior, params)?;
            if trial.phi <= TOL_TIE_REL * params.yield_stress {
                let resp = reduce_core(&trial, params);
                return Ok((resp.eps, *prior, resp.j_ss));
            }
            if h <= 0.0 {
                return Err(MaterialError::PerfectPlasticityUnsupported);
            }
            // Plastic branch: the saddle reduction already resolves sigma_z
            // at fixed dl, so consistency closes with one more scalar Newton
            // on phi(dl) = 0; the exact slope is -h_eff.
            let mut dl = trial.phi / reduce_core(&trial, params).h_eff;
            let tol = TOL_LOCAL_REL * params.yield_stress;
            for _ in 0..MAX_LOCAL_ITER {
                let resp = site_saddle(sigma, dl, prior, params)?;
                if resp.phi.abs() <= tol {
                    let new_state = site_commit(sigma, dl, prior, params)?;
                    let compliance = resp.j_ss + resp.m * resp.m.transpose() / resp.h_eff;
                    return Ok((resp.eps, new_state, compliance));
                }
                dl += resp.phi / resp.h_eff;
            }
            Err(MaterialError::NoConvergence {
                iterations: MAX_LOCAL_ITER,
                residual: site_saddle(sigma, dl, prior, params)?.phi.abs(),
            })
        }
    }
}
