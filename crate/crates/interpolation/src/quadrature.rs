//! Tensor-product Gauss rules on the parent square.

use crate::{ElementFamily, ParentPoint};

/// Quadrature rule with parent points and parent weights (no Jacobian).
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<ParentPoint>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn gauss_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    match n {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 1.0 / 3.0f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = (3.0f64 / 5.0).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        _ => panic!("unsupported Gauss order {n}"),
    }
}

/// n-by-n Gauss rule on the parent square, row-major over (eta, xi).
pub fn gauss_rule(n: usize) -> QuadratureRule {
    let (pts, wts) = gauss_1d(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (j, &eta) in pts.iter().enumerate() {
        for (i, &xi) in pts.iter().enumerate() {
            points.push(ParentPoint::new(xi, eta));
            weights.push(wts[i] * wts[j]);
        }
    }
    QuadratureRule { points, weights }
}

/// Default rule per family: 2x2 for Q4, 3x3 for Q8 (exact for the
/// polynomial orders the operators carry).
pub fn default_rule(family: ElementFamily) -> QuadratureRule {
    match family {
        ElementFamily::Q4 => gauss_rule(2),
        ElementFamily::Q8 => gauss_rule(3),
    }
}
