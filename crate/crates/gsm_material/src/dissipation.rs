//! Incremental dissipation (support function of the elastic domain).
//!
//! For von Mises flow with the isotropic variable driven by the multiplier,
//! the support function is finite exactly when the increment pair is
//! admissible, i.e. the isotropic increment covers the tensor norm of the
//! plastic flow scaled by the von Mises constant. On the admissible cone
//! the value is linear, hence exactly degree-one homogeneous under
//! power-of-two scalings.

use crate::voigt;
use crate::MaterialParams;
use nalgebra::Vector3;

/// Relative slack for the admissibility test; keeps the decision
/// scale-invariant instead of comparing against an absolute cutoff.
const ADMISSIBLE_SLACK_REL: f64 = 1e-12;

/// Dissipation of an internal-variable increment, or `f64::INFINITY` when
/// the increment leaves the admissible cone.
///
/// `deps_p` is the in-plane plastic strain increment in engineering Voigt
/// form with implied trace-free out-of-plane part; `dalpha_i` is the
/// isotropic-variable increment.
pub fn dissipation_increment(
    deps_p: &Vector3<f64>,
    dalpha_i: f64,
    params: &MaterialParams,
) -> f64 {
    let flow_norm = voigt::tensor_norm_tracefree3(deps_p);
    let bound = params.von_mises_constant * flow_norm;
    let slack = ADMISSIBLE_SLACK_REL * bound.max(dalpha_i.abs());
    if dalpha_i + slack < bound {
        return f64::INFINITY;
    }
    params.yield_stress * dalpha_i.max(0.0)
}
