//! Enhanced (incompatible) strain modes for the 4-node quadrilateral.

use crate::{shape_q4, InterpolationError, ParentPoint};
use nalgebra::{Matrix2, Matrix3x4, Vector2};

/// Evaluate the four enhanced strain modes at a parent point, pushed forward
/// to the physical frame with the center Jacobian and scaled by
/// `det J(0) / det J(xi)`. The parent modes are `eps_xi = xi`, `eps_eta =
/// eta`, and the two shear modes `gamma = xi` and `gamma = eta`; the scaling
/// makes the element integral of the returned matrix vanish, which is the
/// patch-test condition for enhanced formulations.
pub fn enhanced_basis_q4(
    coords: &[Vector2<f64>],
    p: &ParentPoint,
) -> Result<Matrix3x4<f64>, InterpolationError> {
    let center = shape_q4(coords, &ParentPoint::new(0.0, 0.0))?;
    let here = shape_q4(coords, p)?;
    let j0_inv = center
        .jacobian
        .try_inverse()
        .expect("det_j > 0 guarantees invertibility");
    let scale = center.det_j / here.det_j;

    // Parent Voigt modes (engineering shear): columns are
    // (xi,0,0), (0,eta,0), (0,0,xi), (0,0,eta).
    let parent = [
        Vector2::new(p.xi, 0.0),
        Vector2::new(0.0, p.eta),
        Vector2::new(0.0, 0.0),
    ];
    let shears = [0.0, 0.0, p.xi, p.eta];

    let mut out = Matrix3x4::zeros();
    for col in 0..4 {
        let (e_xx, e_yy, gamma) = if col < 2 {
            (parent[0][col], parent[1][col], 0.0)
        } else {
            (0.0, 0.0, shears[col])
        };
        // Covariant strain transform with the center Jacobian:
        // eps_x = J0^-1 eps_parent J0^-T (rows of J are d(x,y)/d(xi or eta)).
        let tensor = Matrix2::new(e_xx, 0.5 * gamma, 0.5 * gamma, e_yy);
        let phys = j0_inv * tensor * j0_inv.transpose();
        out[(0, col)] = scale * phys[(0, 0)];
        out[(1, col)] = scale * phys[(1, 1)];
        out[(2, col)] = scale * 2.0 * phys[(0, 1)];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{default_rule, shape_q4, ElementFamily};
    use approx::assert_relative_eq;
    use nalgebra::Matrix3x4;

    fn integral(coords: &[Vector2<f64>]) -> Matrix3x4<f64> {
        let rule = default_rule(ElementFamily::Q4);
        let mut acc = Matrix3x4::zeros();
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let shape = shape_q4(coords, p).unwrap();
            acc += w * shape.det_j * enhanced_basis_q4(coords, p).unwrap();
        }
        acc
    }

    #[test]
    fn test_vanishes_at_center() {
        let coords = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(2.0, 0.1),
            Vector2::new(1.9, 1.7),
            Vector2::new(-0.2, 1.6),
        ];
        let e = enhanced_basis_q4(&coords, &ParentPoint::new(0.0, 0.0)).unwrap();
        assert_relative_eq!(e, Matrix3x4::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn test_integral_vanishes_on_square() {
        let coords = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(1.0, 1.0),
            Vector2::new(0.0, 1.0),
        ];
        assert_relative_eq!(integral(&coords), Matrix3x4::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn test_integral_vanishes_on_distorted_quad() {
        // The det J(0)/det J(xi) scaling cancels the measure, so the
        // integral reduces to parent integrals of odd monomials.
        let coords = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(2.6, 0.4),
            Vector2::new(2.1, 2.2),
            Vector2::new(-0.4, 1.3),
        ];
        assert!(integral(&coords).amax() <= 1e-12, "integral {:?}", integral(&coords));
    }
}
