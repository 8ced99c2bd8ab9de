//! Strain-displacement matrix (discrete symmetric gradient).

use crate::ShapeEval;
use nalgebra::DMatrix;

/// 3 x (2 n) matrix mapping nodal displacements `(u_1x, u_1y, u_2x, ...)`
/// to the in-plane strain `[eps_x, eps_y, gamma_xy]` (engineering shear).
pub fn b_matrix(shape: &ShapeEval) -> DMatrix<f64> {
    let n = shape.values.len();
    let mut b = DMatrix::zeros(3, 2 * n);
    for i in 0..n {
        let dx = shape.gradients[(i, 0)];
        let dy = shape.gradients[(i, 1)];
        b[(0, 2 * i)] = dx;
        b[(1, 2 * i + 1)] = dy;
        b[(2, 2 * i)] = dy;
        b[(2, 2 * i + 1)] = dx;
    }
    b
}
