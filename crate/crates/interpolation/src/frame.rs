//! Element-local coordinate frame used to condition polynomial stress bases.

use nalgebra::{Matrix2, SymmetricEigen, Vector2};

/// Affine frame `x_local = R^T (x - origin) / scale`.
///
/// The frame keeps polynomial stress modes well scaled on strongly distorted
/// or far-from-origin elements: coordinates seen by the basis are O(1) and
/// aligned with the dominant node-scatter directions.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFrame {
    /// Centroid of the element nodes.
    pub origin: Vector2<f64>,
    /// Rotation whose columns are the principal axes of the node scatter.
    pub rotation: Matrix2<f64>,
    /// Root-mean-square node distance from the centroid.
    pub scale: f64,
}

impl LocalFrame {
    /// Map a physical point into frame coordinates.
    pub fn to_local(&self, x: &Vector2<f64>) -> Vector2<f64> {
        (self.rotation.transpose() * (x - self.origin)) / self.scale
    }
}

/// Build the local frame from the element node coordinates.
pub fn local_frame(coords: &[Vector2<f64>]) -> LocalFrame {
    let n = coords.len() as f64;
    let origin = coords.iter().sum::<Vector2<f64>>() / n;

    let mut scatter = Matrix2::zeros();
    let mut rms = 0.0;
    for x in coords {
        let d = x - origin;
        scatter += d * d.transpose();
        rms += d.norm_squared();
    }
    let scale = (rms / n).sqrt().max(f64::MIN_POSITIVE);

    let eig = SymmetricEigen::new(scatter);
    // Column 0 carries the larger eigenvalue; orient deterministically so the
    // frame does not flip under node reordering: first axis has nonnegative x
    // (tie broken by y), second completes a right-handed pair.
    let (i_max, i_min) = if eig.eigenvalues[0] >= eig.eigenvalues[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    let mut e1 = eig.eigenvectors.column(i_max).into_owned();
    let _ = i_min;
    if e1.x < 0.0 || (e1.x == 0.0 && e1.y < 0.0) {
        e1 = -e1;
    }
    let e2 = Vector2::new(-e1.y, e1.x);
    let rotation = Matrix2::from_columns(&[e1, e2]);

    LocalFrame { origin, rotation, scale }
}
