//! Voigt array kinematics shared by the update kernels.
//!
//! 4-component arrays are ordered `[x, y, z, xy]`. Strain-like arrays carry
//! the engineering shear (twice the tensor component); stress-like arrays
//! carry the tensor shear. Helpers that mix the two state this explicitly.

use nalgebra::{Matrix4, Vector3, Vector4};

/// Positions of the in-plane components inside a 4-component array.
pub const IN_PLANE: [usize; 3] = [0, 1, 3];

/// Embeds an in-plane strain with a known out-of-plane component.
pub fn strain4(eps_in: &Vector3<f64>, eps_z: f64) -> Vector4<f64> {
    Vector4::new(eps_in.x, eps_in.y, eps_z, eps_in.z)
}

/// Embeds an in-plane stress with a known out-of-plane component.
pub fn stress4(sig_in: &Vector3<f64>, sig_z: f64) -> Vector4<f64> {
    Vector4::new(sig_in.x, sig_in.y, sig_z, sig_in.z)
}

/// Extracts the in-plane components of a 4-component array.
pub fn in_plane(v: &Vector4<f64>) -> Vector3<f64> {
    Vector3::new(v.x, v.y, v.w)
}

/// Lifts a stored trace-free in-plane array (plastic strain, kinematic
/// variable) to four components, `z = -(x + y)`.
pub fn tracefree4(v: &Vector3<f64>) -> Vector4<f64> {
    Vector4::new(v.x, v.y, -(v.x + v.y), v.z)
}

/// Deviator of a stress-like array, in tensor components.
pub fn dev_stress(s: &Vector4<f64>) -> Vector4<f64> {
    let m = (s.x + s.y + s.z) / 3.0;
    Vector4::new(s.x - m, s.y - m, s.z - m, s.w)
}

/// Frobenius norm of a stress-like array (tensor shear counted twice).
pub fn tensor_norm_stress(s: &Vector4<f64>) -> f64 {
    (s.x * s.x + s.y * s.y + s.z * s.z + 2.0 * s.w * s.w).sqrt()
}

/// Frobenius norm of a strain-like array (engineering shear).
pub fn tensor_norm_strain(e: &Vector4<f64>) -> f64 {
    (e.x * e.x + e.y * e.y + e.z * e.z + 0.5 * e.w * e.w).sqrt()
}

/// Frobenius norm of a stored trace-free in-plane array.
pub fn tensor_norm_tracefree3(v: &Vector3<f64>) -> f64 {
    tensor_norm_strain(&tracefree4(v))
}

/// Deviatoric identity in the stiffness pairing: maps engineering strain to
/// tensor deviatoric stress direction. Shear entry 1/2.
pub fn idev_stiffness() -> Matrix4<f64> {
    let t = 2.0 / 3.0;
    let o = -1.0 / 3.0;
    Matrix4::new(
        t, o, o, 0.0, //
        o, t, o, 0.0, //
        o, o, t, 0.0, //
        0.0, 0.0, 0.0, 0.5,
    )
}

/// Deviatoric identity in the compliance pairing: maps tensor stress to
/// engineering deviatoric strain direction. Shear entry 2.
pub fn dev_compliance() -> Matrix4<f64> {
    let t = 2.0 / 3.0;
    let o = -1.0 / 3.0;
    Matrix4::new(
        t, o, o, 0.0, //
        o, t, o, 0.0, //
        o, o, t, 0.0, //
        0.0, 0.0, 0.0, 2.0,
    )
}

/// Extracts the in-plane block of a 4x4 matrix.
pub fn block_in_plane(m: &Matrix4<f64>) -> nalgebra::Matrix3<f64> {
    let mut out = nalgebra::Matrix3::zeros();
    for (i, &bi) in IN_PLANE.iter().enumerate() {
        for (j, &bj) in IN_PLANE.iter().enumerate() {
            out[(i, j)] = m[(bi, bj)];
        }
    }
    out
}

/// Schur condensation of a 4x4 matrix on its z row and column:
/// `M_in - m_z m_z^T / M_zz`. Valid while `M_zz` is nonzero.
pub fn condense_z(m: &Matrix4<f64>) -> nalgebra::Matrix3<f64> {
    let mut out = block_in_plane(m);
    let mzz = m[(2, 2)];
    for (i, &bi) in IN_PLANE.iter().enumerate() {
        for (j, &bj) in IN_PLANE.iter().enumerate() {
            out[(i, j)] -= m[(bi, 2)] * m[(2, bj)] / mzz;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn test_tracefree_lift_has_zero_trace() {
        let v = Vector3::new(0.3, -0.1, 0.7);
        let v4 = tracefree4(&v);
        assert_relative_eq!(v4.x + v4.y + v4.z, 0.0, epsilon = 1e-15);
        assert_relative_eq!(v4.w, 0.7);
    }

    #[test]
    fn test_deviator_is_tracefree() {
        let s = Vector4::new(3.0, -1.0, 2.0, 0.5);
        let d = dev_stress(&s);
        assert_relative_eq!(d.x + d.y + d.z, 0.0, epsilon = 1e-15);
        assert_relative_eq!(d.w, 0.5);
    }

    #[test]
    fn test_norms_match_tensor_definition() {
        // Pure shear: stress tau = 1 has norm sqrt(2); strain g = 1 is the
        // tensor component 1/2 twice, norm sqrt(1/2).
        let s = Vector4::new(0.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(tensor_norm_stress(&s), 2.0f64.sqrt());
        assert_relative_eq!(tensor_norm_strain(&s), 0.5f64.sqrt());
    }

    #[test]
    fn test_condense_z_matches_manual_schur() {
        let m = Matrix4::new(
            4.0, 1.0, 0.5, 0.2, //
            1.0, 3.0, 0.1, 0.0, //
            0.5, 0.1, 2.0, 0.3, //
            0.2, 0.0, 0.3, 1.5,
        );
        let c = condense_z(&m);
        // Row x, col xy entry: M[0,3] - M[0,2] M[2,3] / M[2,2].
        assert_relative_eq!(c[(0, 2)], 0.2 - 0.5 * 0.3 / 2.0, epsilon = 1e-15);
    }
}
