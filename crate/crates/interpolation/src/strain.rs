//! Assumed strain interpolations: identical-to-stress, or piecewise
//! constant on a regular partition of the parent element.

use crate::{
    gauss_rule, shape_functions, ElementFamily, InterpolationError, ParentPoint, StressBasis,
};
use nalgebra::{DMatrix, Vector2};

/// Piecewise-constant strain partition data: subdomain volumes and the
/// volume-averaged stress mode matrices needed by weak compatibility.
#[derive(Debug, Clone)]
pub struct SubdomainData {
    /// Partition is `m x m` equal squares in the parent element.
    pub m: usize,
    /// Physical subdomain volumes (areas), row-major over the parent grid.
    pub volumes: Vec<f64>,
    /// Averaged stress matrices: `averaged[d] = (1/|Omega_d|) integral of S`.
    pub averaged: Vec<DMatrix<f64>>,
    /// Volume-weighted physical centroids, for result reporting.
    pub centroids: Vec<Vector2<f64>>,
}

impl SubdomainData {
    pub fn n_subdomains(&self) -> usize {
        self.m * self.m
    }
}

/// Strain interpolation attached to a mixed element.
#[derive(Debug, Clone)]
pub enum StrainBasis {
    /// Strain modes coincide with the element stress basis (E = S).
    IdenticalToStress,
    /// Constant strain per subdomain; 3 strain modes per subdomain.
    PiecewiseConstant(SubdomainData),
}

impl StrainBasis {
    /// Number of strain parameters given the stress mode count of the
    /// element (identical-to-stress reuses that count).
    pub fn n_modes(&self, n_stress_modes: usize) -> usize {
        match self {
            StrainBasis::IdenticalToStress => n_stress_modes,
            StrainBasis::PiecewiseConstant(data) => 3 * data.n_subdomains(),
        }
    }
}

/// One integration point of the parent-element partition quadrature: the
/// owning subdomain (row-major over the parent grid), the parent location,
/// and the parent weight including the subcell area factor `(1/m)^2`.
#[derive(Debug, Clone, Copy)]
pub struct PartitionPoint {
    pub subdomain: usize,
    pub point: ParentPoint,
    pub weight: f64,
}

/// Parent-space quadrature induced by the `n_d = m^2` partition: a 2x2
/// Gauss rule per subcell. Integrals assembled on these points are exactly
/// consistent with the subdomain averages of `subdomain_partition`, which
/// the weak-compatibility residual of the nodal-force element relies on.
pub fn partition_rule(n_d: usize) -> Result<Vec<PartitionPoint>, InterpolationError> {
    let m = (n_d as f64).sqrt().round() as usize;
    if m == 0 || m * m != n_d {
        return Err(InterpolationError::InvalidPartition { n_d });
    }
    let cell_rule = gauss_rule(2);
    let half = 1.0 / m as f64;
    let mut points = Vec::with_capacity(n_d * cell_rule.len());
    for iy in 0..m {
        for ix in 0..m {
            let cx = -1.0 + (2.0 * ix as f64 + 1.0) * half;
            let cy = -1.0 + (2.0 * iy as f64 + 1.0) * half;
            for (sub_p, w) in cell_rule.points.iter().zip(&cell_rule.weights) {
                points.push(PartitionPoint {
                    subdomain: iy * m + ix,
                    point: ParentPoint::new(cx + half * sub_p.xi, cy + half * sub_p.eta),
                    weight: w * half * half,
                });
            }
        }
    }
    Ok(points)
}

/// Split the parent element into `n_d = m^2` equal squares mapped through
/// the geometry and average the stress basis over each: the result carries
/// `|Omega_d|` and `S_bar_d` for the piecewise-constant strain formulation.
/// Averaging uses a 2x2 Gauss rule per subdomain (`partition_rule`).
pub fn subdomain_partition(
    coords: &[Vector2<f64>],
    n_d: usize,
    stress_basis: &StressBasis,
) -> Result<StrainBasis, InterpolationError> {
    let rule = partition_rule(n_d)?;
    let m = (n_d as f64).sqrt().round() as usize;
    let family = match coords.len() {
        4 => ElementFamily::Q4,
        8 => ElementFamily::Q8,
        got => return Err(InterpolationError::WrongNodeCount { expected: 4, got }),
    };

    let mut volumes = vec![0.0; n_d];
    let mut averaged = vec![DMatrix::zeros(3, stress_basis.n_modes()); n_d];
    let mut centroids = vec![Vector2::zeros(); n_d];
    for pp in &rule {
        let shape = shape_functions(family, coords, &pp.point)?;
        let w = pp.weight * shape.det_j;
        let phys = crate::physical_coords(coords, &shape);
        volumes[pp.subdomain] += w;
        averaged[pp.subdomain] += w * stress_basis.evaluate(&pp.point, &phys);
        centroids[pp.subdomain] += w * phys;
    }
    for d in 0..n_d {
        averaged[d] /= volumes[d];
        centroids[d] /= volumes[d];
    }

    Ok(StrainBasis::PiecewiseConstant(SubdomainData { m, volumes, averaged, centroids }))
}
