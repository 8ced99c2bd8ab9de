//! Isotropic elastic stiffness and compliance in Voigt form.

use crate::voigt;
use crate::{MaterialParams, PlaneAssumption};
use nalgebra::{Matrix3, Matrix4};

/// Lame constants `(lambda, mu)` from the engineering moduli.
pub fn lame_constants(params: &MaterialParams) -> (f64, f64) {
    let e = params.youngs_modulus;
    let nu = params.poisson_ratio;
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    (lambda, mu)
}

/// Full 4x4 elastic stiffness `[x, y, z, xy]`, engineering shear.
pub fn elastic_stiffness_4(params: &MaterialParams) -> Matrix4<f64> {
    let (lambda, mu) = lame_constants(params);
    let d = lambda + 2.0 * mu;
    Matrix4::new(
        d, lambda, lambda, 0.0, //
        lambda, d, lambda, 0.0, //
        lambda, lambda, d, 0.0, //
        0.0, 0.0, 0.0, mu,
    )
}

/// Full 4x4 elastic compliance `[x, y, z, xy]`, engineering shear.
pub fn elastic_compliance_4(params: &MaterialParams) -> Matrix4<f64> {
    let e = params.youngs_modulus;
    let nu = params.poisson_ratio;
    let a = 1.0 / e;
    let b = -nu / e;
    Matrix4::new(
        a, b, b, 0.0, //
        b, a, b, 0.0, //
        b, b, a, 0.0, //
        0.0, 0.0, 0.0, 2.0 * (1.0 + nu) / e,
    )
}

/// In-plane 3x3 elastic stiffness for the declared plane assumption.
///
/// Plane stress condenses the out-of-plane direction (zero stress); plane
/// strain restricts it (zero strain). Both are symmetric positive definite.
pub fn elastic_tensor(params: &MaterialParams) -> Matrix3<f64> {
    let c4 = elastic_stiffness_4(params);
    match params.plane_assumption {
        PlaneAssumption::PlaneStress => voigt::condense_z(&c4),
        PlaneAssumption::PlaneStrain => voigt::block_in_plane(&c4),
    }
}

/// In-plane 3x3 elastic compliance consistent with `elastic_tensor`.
pub fn elastic_compliance(params: &MaterialParams) -> Matrix3<f64> {
    let a4 = elastic_compliance_4(params);
    match params.plane_assumption {
        PlaneAssumption::PlaneStress => voigt::block_in_plane(&a4),
        PlaneAssumption::PlaneStrain => voigt::condense_z(&a4),
    }
}
