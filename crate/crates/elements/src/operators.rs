//! Per-element operator assembly: quadrature sites, compatibility and
//! pairing integrals, and formulation-specific bases. Built once per
//! element and reused across increments.

use crate::{node_count_checked, rigid_body_filter, ElementError, Formulation, RigidBodyFilter};
use gsm_material::{elastic_compliance, elastic_tensor, MaterialParams};
use interpolation::{
    airy_basis, airy_basis_extended, b_matrix, default_rule, enhanced_basis_q4, local_frame,
    multiplier_basis, partition_rule, physical_coords, pian_sumihara_basis, shape_functions,
    subdomain_partition, AiryMode, ElementFamily, InterpolationError, MultiplierBasis,
    MultiplierKind, ParentPoint, StrainBasis, StressBasis, SubdomainData,
};
use nalgebra::{DMatrix, Matrix3, Matrix3x4, Vector2};

/// Subdomain count of the three-field Q8: 27 piecewise-constant strain
/// components cover the 13 stress modes with margin.
pub const N_SUBDOMAINS_Q8: usize = 9;

/// One integration site: geometry factors and basis evaluations.
#[derive(Debug, Clone)]
pub struct SiteData {
    pub parent: ParentPoint,
    pub physical: Vector2<f64>,
    /// Full integration weight: parent weight times Jacobian determinant.
    pub weight: f64,
    /// Strain-displacement matrix, 3 x n_dofs.
    pub b: DMatrix<f64>,
    /// Stress mode matrix S, 3 x n_sigma (stress-carrying formulations).
    pub stress_modes: Option<DMatrix<f64>>,
    /// Enhanced strain modes (enhanced formulation).
    pub enhanced: Option<Matrix3x4<f64>>,
}

impl SiteData {
    pub(crate) fn stress_modes(&self) -> &DMatrix<f64> {
        self.stress_modes
            .as_ref()
            .expect("site carries stress modes for this formulation")
    }

    pub(crate) fn enhanced(&self) -> &Matrix3x4<f64> {
        self.enhanced.as_ref().expect("site carries enhanced modes for this formulation")
    }
}

/// Immutable element operators shared by every state determination call.
#[derive(Debug, Clone)]
pub struct ElementOperators {
    pub formulation: Formulation,
    pub family: ElementFamily,
    pub coords: Vec<Vector2<f64>>,
    pub material: MaterialParams,
    pub area: f64,
    /// Quadrature sites in rule order; material history lives here except
    /// for the nodal-force element, whose history sites are the subdomains.
    pub quad_sites: Vec<SiteData>,
    /// Compatibility coupling: integral of S^T B, n_sigma x n_dofs.
    pub c: Option<DMatrix<f64>>,
    /// Stress-strain pairing Gram matrix: integral of S^T S.
    pub g: Option<DMatrix<f64>>,
    /// Elastic flexibility: integral of S^T Ce^-1 S; assembled from
    /// subdomain averages for the nodal-force element.
    pub h_elastic: Option<DMatrix<f64>>,
    pub stress_basis: Option<StressBasis>,
    /// Piecewise-constant strain partition (nodal-force element).
    pub subdomains: Option<SubdomainData>,
    /// Plastic multiplier site layout (site-enforced formulations).
    pub multipliers: Option<MultiplierBasis>,
    /// Rigid-body factorization of the DOF space (nodal-force element).
    pub filter: Option<RigidBodyFilter>,
    /// Deformational coupling C V (nodal-force element), n_sigma square.
    pub cv: Option<DMatrix<f64>>,
    pub elastic_stiffness: Matrix3<f64>,
    pub elastic_flexibility: Matrix3<f64>,
}

impl ElementOperators {
    pub fn n_dofs(&self) -> usize {
        2 * self.coords.len()
    }

    pub fn n_stress_modes(&self) -> usize {
        self.stress_basis.as_ref().map_or(0, |b| b.n_modes())
    }

    /// Number of material history sites (quadrature points, or subdomains
    /// for the nodal-force element).
    pub fn n_history_sites(&self) -> usize {
        match &self.subdomains {
            Some(data) => data.n_subdomains(),
            None => self.quad_sites.len(),
        }
    }

    pub(crate) fn c(&self) -> &DMatrix<f64> {
        self.c.as_ref().expect("formulation carries a compatibility matrix")
    }

    pub(crate) fn h_elastic(&self) -> &DMatrix<f64> {
        self.h_elastic.as_ref().expect("formulation carries an elastic flexibility")
    }
}

/// Assemble all operators for a formulation on a given geometry.
pub fn build_operators(
    formulation: Formulation,
    coords: &[Vector2<f64>],
    material: &MaterialParams,
) -> Result<ElementOperators, ElementError> {
    material.validate()?;
    node_count_checked(coords, formulation.n_nodes())?;
    let family = match formulation.n_nodes() {
        8 => ElementFamily::Q8,
        _ => ElementFamily::Q4,
    };

    let stress_basis: Option<StressBasis> = match formulation {
        Formulation::DisplacementQ4 | Formulation::DisplacementQ8 => None,
        // Self-equilibrated quadratic basis plus two cubic bending modes:
        // 13 modes, matching the deformational DOF count of the Q8. The
        // shear-family cubics are the pair that keeps the coupling with the
        // serendipity strain space full-rank on rectangular geometry (the
        // normal-family cubics y^3 and x^3 are L2-orthogonal to it there).
        Formulation::HwQ8D => Some(airy_basis_extended(
            2,
            &[AiryMode::ShearX(3), AiryMode::ShearY(3)],
            local_frame(coords),
        )),
        // Constant stress only: deliberately rank-deficient coupling used
        // to demonstrate inf-sup failure.
        Formulation::HrQ4Deficient => Some(airy_basis(0, local_frame(coords))),
        Formulation::EsQ4
        | Formulation::CmQ4
        | Formulation::HrQ4
        | Formulation::HwQ4Identical
        | Formulation::HwNfQ4 { .. } => Some(pian_sumihara_basis(coords)?),
    };
    let n_sigma = stress_basis.as_ref().map_or(0, |b| b.n_modes());

    let elastic_stiffness = elastic_tensor(material);
    let elastic_flexibility = elastic_compliance(material);

    // Subdomain-partitioned formulations integrate on the per-subcell rule
    // so weak compatibility and the averaged stress matrices see the same
    // points; everything else uses the family default rule.
    let partition_count = match formulation {
        Formulation::HwQ8D => Some(N_SUBDOMAINS_Q8),
        Formulation::HwNfQ4 { n_d } => Some(n_d),
        _ => None,
    };
    let parent_points: Vec<(ParentPoint, f64)> = match partition_count {
        Some(n_d) => partition_rule(n_d)
            .map_err(ElementError::Interpolation)?
            .iter()
            .map(|pp| (pp.point, pp.weight))
            .collect(),
        None => {
            let rule = default_rule(family);
            rule.points.iter().copied().zip(rule.weights.iter().copied()).collect()
        }
    };

    let n_dofs = 2 * coords.len();
    let mut quad_sites = Vec::with_capacity(parent_points.len());
    let mut area = 0.0;
    let mut c = stress_basis.as_ref().map(|_| DMatrix::zeros(n_sigma, n_dofs));
    let needs_gram = matches!(formulation, Formulation::HwQ4Identical | Formulation::EsQ4);
    let mut g = needs_gram.then(|| DMatrix::zeros(n_sigma, n_sigma));
    let needs_quad_flex = matches!(
        formulation,
        Formulation::CmQ4 | Formulation::HrQ4 | Formulation::HrQ4Deficient
    );
    let mut h_elastic = needs_quad_flex.then(|| DMatrix::zeros(n_sigma, n_sigma));

    for (p, w) in &parent_points {
        let shape = shape_functions(family, coords, p)?;
        let weight = w * shape.det_j;
        area += weight;
        let b = b_matrix(&shape);
        let physical = physical_coords(coords, &shape);
        let stress_modes = stress_basis.as_ref().map(|basis| {
            let s = basis.evaluate(p, &physical);
            DMatrix::from_fn(3, s.ncols(), |i, j| s[(i, j)])
        });
        if let (Some(c), Some(s)) = (c.as_mut(), stress_modes.as_ref()) {
            *c += weight * s.transpose() * &b;
        }
        if let (Some(g), Some(s)) = (g.as_mut(), stress_modes.as_ref()) {
            *g += weight * s.transpose() * s;
        }
        if let (Some(h), Some(s)) = (h_elastic.as_mut(), stress_modes.as_ref()) {
            *h += weight * s.transpose() * elastic_flexibility * s;
        }
        let enhanced = match formulation {
            Formulation::EsQ4 => Some(enhanced_basis_q4(coords, p)?),
            _ => None,
        };
        quad_sites.push(SiteData { parent: *p, physical, weight, b, stress_modes, enhanced });
    }

    let mut subdomains = None;
    let mut multipliers = None;
    let mut filter = None;
    let mut cv = None;
    if matches!(formulation, Formulation::CmQ4) {
        let rule = default_rule(family);
        multipliers = Some(multiplier_basis(MultiplierKind::GaussPointwise, &rule, None)?);
    }
    if let Some(n_d) = partition_count {
        // Each subdomain contributes 3 averaged strain components; the
        // flexibility is singular if they cannot span the stress modes.
        if 3 * n_d < n_sigma {
            return Err(ElementError::Interpolation(InterpolationError::InvalidPartition {
                n_d,
            }));
        }
        let basis = stress_basis.as_ref().expect("nodal-force element carries stress modes");
        let StrainBasis::PiecewiseConstant(data) = subdomain_partition(coords, n_d, basis)?
        else {
            unreachable!("subdomain_partition returns a piecewise-constant basis");
        };
        let rule = default_rule(family);
        multipliers =
            Some(multiplier_basis(MultiplierKind::PiecewiseConstant, &rule, Some(&data))?);
        let rbf = rigid_body_filter(coords)?;
        let c_mat = c.as_ref().expect("nodal-force element carries a coupling");
        cv = Some(c_mat * &rbf.v);
        filter = Some(rbf);
        let mut f_e = DMatrix::zeros(n_sigma, n_sigma);
        for (vol, s_bar) in data.volumes.iter().zip(&data.averaged) {
            f_e += *vol * s_bar.transpose() * elastic_flexibility * s_bar;
        }
        h_elastic = Some(f_e);
        subdomains = Some(data);
    }

    Ok(ElementOperators {
        formulation,
        family,
        coords: coords.to_vec(),
        material: *material,
        area,
        quad_sites,
        c,
        g,
        h_elastic,
        stress_basis,
        subdomains,
        multipliers,
        filter,
        cv,
        elastic_stiffness,
        elastic_flexibility,
    })
}
