//! Rigid-body filter: factorizes the nodal DOF space into rigid motions and
//! deformational coordinates.

use crate::ElementError;
use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector2};

/// Factorization of the DOF space modulo rigid motions.
///
/// `pi_bar` is the orthogonal projector annihilating exactly the two
/// translations and the infinitesimal rotation about the node centroid;
/// `pi` maps DOFs to deformational coordinates and `v` embeds them back, so
/// that `pi_bar = v * pi` and `pi * v = I`.
#[derive(Debug, Clone)]
pub struct RigidBodyFilter {
    pub pi_bar: DMatrix<f64>,
    pub pi: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

/// Build the filter from node coordinates (interleaved DOFs x1,y1,x2,...).
pub fn rigid_body_filter(coords: &[Vector2<f64>]) -> Result<RigidBodyFilter, ElementError> {
    let n = coords.len();
    if n < 3 {
        return Err(ElementError::CollinearNodes);
    }
    let centroid = coords.iter().sum::<Vector2<f64>>() / n as f64;

    // Collinearity: the node scatter must span the plane.
    let mut scatter = nalgebra::Matrix2::zeros();
    for x in coords {
        let d = x - centroid;
        scatter += d * d.transpose();
    }
    let eig2 = SymmetricEigen::new(scatter);
    let (e_max, e_min) = (eig2.eigenvalues.max(), eig2.eigenvalues.min());
    if e_min <= 1e-12 * e_max {
        return Err(ElementError::CollinearNodes);
    }

    // Orthonormal rigid modes: two translations and the centroid rotation.
    // The rotation mode is orthogonal to both translations by construction
    // (centroid-relative coordinates sum to zero).
    let n_dofs = 2 * n;
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let mut modes = DMatrix::zeros(n_dofs, 3);
    for i in 0..n {
        modes[(2 * i, 0)] = inv_sqrt_n;
        modes[(2 * i + 1, 1)] = inv_sqrt_n;
        let d = coords[i] - centroid;
        modes[(2 * i, 2)] = -d.y;
        modes[(2 * i + 1, 2)] = d.x;
    }
    let rot_norm = modes.column(2).norm();
    modes.column_mut(2).scale_mut(1.0 / rot_norm);

    let pi_bar = DMatrix::identity(n_dofs, n_dofs) - &modes * modes.transpose();

    // Orthonormal basis of the deformational subspace from the projector
    // spectrum; deterministic ordering and sign.
    let eig = SymmetricEigen::new(pi_bar.clone());
    let mut rows: Vec<(usize, DVector<f64>)> = Vec::new();
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > 0.5 {
            let mut v = eig.eigenvectors.column(i).into_owned();
            let lead = v.iamax();
            if v[lead] < 0.0 {
                v = -v;
            }
            rows.push((lead, v));
        }
    }
    assert!(rows.len() == n_dofs - 3, "projector rank must be n_dofs - 3");
    rows.sort_by_key(|(lead, _)| *lead);

    let mut pi = DMatrix::zeros(n_dofs - 3, n_dofs);
    for (r, (_, v)) in rows.iter().enumerate() {
        pi.row_mut(r).copy_from(&v.transpose());
    }
    let v = pi.transpose();

    Ok(RigidBodyFilter { pi_bar, pi, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quad() -> Vec<Vector2<f64>> {
        vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(2.0, 0.3),
            Vector2::new(1.7, 1.8),
            Vector2::new(-0.2, 1.5),
        ]
    }

    #[test]
    fn test_translations_and_rotation_are_filtered() {
        let coords = quad();
        let f = rigid_body_filter(&coords).unwrap();
        let tx = DVector::from_fn(8, |i, _| if i % 2 == 0 { 1.0 } else { 0.0 });
        assert_relative_eq!((&f.pi_bar * tx).norm(), 0.0, epsilon = 1e-13);
        let centroid = coords.iter().sum::<Vector2<f64>>() / 4.0;
        let rot = DVector::from_fn(8, |i, _| {
            let d = coords[i / 2] - centroid;
            if i % 2 == 0 {
                -d.y
            } else {
                d.x
            }
        });
        assert_relative_eq!((&f.pi_bar * rot).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn test_factorization_identity() {
        let f = rigid_body_filter(&quad()).unwrap();
        let u = DVector::from_fn(8, |i, _| (i as f64 * 0.77).sin());
        let direct = &f.pi_bar * &u;
        let factored = &f.v * (&f.pi * &u);
        assert_relative_eq!(direct, factored, epsilon = 1e-14);
        // pi has orthonormal rows, so pi v = I.
        assert_relative_eq!(
            &f.pi * &f.v,
            DMatrix::identity(5, 5),
            epsilon = 1e-13
        );
    }

    #[test]
    fn test_collinear_nodes_rejected() {
        let coords = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(1.0, 1.0),
            Vector2::new(2.0, 2.0),
            Vector2::new(3.0, 3.0),
        ];
        assert!(matches!(rigid_body_filter(&coords), Err(ElementError::CollinearNodes)));
    }
}
