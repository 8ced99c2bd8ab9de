//! Isoparametric shape functions for Q4 and Q8 quadrilaterals.

use crate::{ElementFamily, InterpolationError, ParentPoint};
use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

/// Shape function data at one parent point.
#[derive(Debug, Clone)]
pub struct ShapeEval {
    /// Shape function values, one per node.
    pub values: DVector<f64>,
    /// Parent-space gradients, row i = (dN_i/dxi, dN_i/deta).
    pub parent_gradients: DMatrix<f64>,
    /// Jacobian of the parent-to-physical map, row 1 = (dx/dxi, dy/dxi).
    pub jacobian: Matrix2<f64>,
    pub det_j: f64,
    /// Physical gradients, row i = (dN_i/dx, dN_i/dy).
    pub gradients: DMatrix<f64>,
}

fn q4_values(p: &ParentPoint) -> (DVector<f64>, DMatrix<f64>) {
    let (xi, eta) = (p.xi, p.eta);
    let signs = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
    let mut values = DVector::zeros(4);
    let mut grads = DMatrix::zeros(4, 2);
    for (i, (sx, se)) in signs.iter().enumerate() {
        values[i] = 0.25 * (1.0 + sx * xi) * (1.0 + se * eta);
        grads[(i, 0)] = 0.25 * sx * (1.0 + se * eta);
        grads[(i, 1)] = 0.25 * se * (1.0 + sx * xi);
    }
    (values, grads)
}

fn q8_values(p: &ParentPoint) -> (DVector<f64>, DMatrix<f64>) {
    let (xi, eta) = (p.xi, p.eta);
    let corner = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
    let mut values = DVector::zeros(8);
    let mut grads = DMatrix::zeros(8, 2);
    for (i, (sx, se)) in corner.iter().enumerate() {
        // N = (1 + sx xi)(1 + se eta)(sx xi + se eta - 1) / 4.
        let a = 1.0 + sx * xi;
        let b = 1.0 + se * eta;
        let c = sx * xi + se * eta - 1.0;
        values[i] = 0.25 * a * b * c;
        grads[(i, 0)] = 0.25 * sx * b * (c + a);
        grads[(i, 1)] = 0.25 * se * a * (c + b);
    }
    // Mid-side nodes: 5 on eta=-1, 6 on xi=+1, 7 on eta=+1, 8 on xi=-1.
    let mids = [(0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)];
    for (k, (mx, me)) in mids.iter().enumerate() {
        let i = 4 + k;
        if *mx == 0.0 {
            // N = (1 - xi^2)(1 + me eta) / 2.
            values[i] = 0.5 * (1.0 - xi * xi) * (1.0 + me * eta);
            grads[(i, 0)] = -xi * (1.0 + me * eta);
            grads[(i, 1)] = 0.5 * me * (1.0 - xi * xi);
        } else {
            // N = (1 + mx xi)(1 - eta^2) / 2.
            values[i] = 0.5 * (1.0 + mx * xi) * (1.0 - eta * eta);
            grads[(i, 0)] = 0.5 * mx * (1.0 - eta * eta);
            grads[(i, 1)] = -eta * (1.0 + mx * xi);
        }
    }
    (values, grads)
}

fn assemble(
    coords: &[Vector2<f64>],
    values: DVector<f64>,
    parent_gradients: DMatrix<f64>,
) -> Result<ShapeEval, InterpolationError> {
    let mut jacobian = Matrix2::zeros();
    for (i, c) in coords.iter().enumerate() {
        jacobian[(0, 0)] += parent_gradients[(i, 0)] * c.x;
        jacobian[(0, 1)] += parent_gradients[(i, 0)] * c.y;
        jacobian[(1, 0)] += parent_gradients[(i, 1)] * c.x;
        jacobian[(1, 1)] += parent_gradients[(i, 1)] * c.y;
    }
    let det_j = jacobian.determinant();
    if det_j <= 0.0 {
        return Err(InterpolationError::DegenerateElement { det_j });
    }
    let inv = jacobian
        .try_inverse()
        .ok_or(InterpolationError::DegenerateElement { det_j })?;
    // Physical gradient: (dN/dx, dN/dy) = J^{-1} (dN/dxi, dN/deta) per node.
    let mut gradients = DMatrix::zeros(coords.len(), 2);
    for i in 0..coords.len() {
        let g = Vector2::new(parent_gradients[(i, 0)], parent_gradients[(i, 1)]);
        let phys = inv * g;
        gradients[(i, 0)] = phys.x;
        gradients[(i, 1)] = phys.y;
    }
    Ok(ShapeEval { values, parent_gradients, jacobian, det_j, gradients })
}

/// Bilinear shape functions on a 4-node quadrilateral with counter-clockwise
/// node ordering.
pub fn shape_q4(coords: &[Vector2<f64>], p: &ParentPoint) -> Result<ShapeEval, InterpolationError> {
    if coords.len() != 4 {
        return Err(InterpolationError::WrongNodeCount { expected: 4, got: coords.len() });
    }
    let (values, grads) = q4_values(p);
    assemble(coords, values, grads)
}

/// Serendipity shape functions on an 8-node quadrilateral; corners first,
/// then mid-side nodes in edge order 1-2, 2-3, 3-4, 4-1.
pub fn shape_q8(coords: &[Vector2<f64>], p: &ParentPoint) -> Result<ShapeEval, InterpolationError> {
    if coords.len() != 8 {
        return Err(InterpolationError::WrongNodeCount { expected: 8, got: coords.len() });
    }
    let (values, grads) = q8_values(p);
    assemble(coords, values, grads)
}

/// Family-dispatched shape functions.
pub fn shape_functions(
    family: ElementFamily,
    coords: &[Vector2<f64>],
    p: &ParentPoint,
) -> Result<ShapeEval, InterpolationError> {
    match family {
        ElementFamily::Q4 => shape_q4(coords, p),
        ElementFamily::Q8 => shape_q8(coords, p),
    }
}

/// Physical location of a parent point under the isoparametric map.
pub fn physical_coords(coords: &[Vector2<f64>], shape: &ShapeEval) -> Vector2<f64> {
    let mut x = Vector2::zeros();
    for (i, c) in coords.iter().enumerate() {
        x += shape.values[i] * c;
    }
    x
}
