//! Assumed-stress interpolation bases and the Pian filter.
//!
//! Three construction routes are provided: the classical 5-mode
//! Pian-Sumihara basis in parent coordinates, self-equilibrated polynomial
//! (Airy) bases expressed in a conditioning local frame, and filtered bases
//! obtained by removing the modes that do work on a set of incompatible
//! displacement fields.

use crate::{
    default_rule, shape_functions, ElementFamily, InterpolationError, LocalFrame, ParentPoint,
};
use nalgebra::{DMatrix, Matrix2xX, Matrix3, Matrix3xX, SymmetricEigen, Vector2, Vector3};

/// Relative singular-value cutoff for rank decisions inside the filter.
const FILTER_RANK_TOL: f64 = 1e-12;

/// One self-equilibrated polynomial stress mode in local frame coordinates.
///
/// Every non-constant family derives from an Airy potential, so each mode has
/// identically zero divergence. Voigt order is `[sigma_x, sigma_y, sigma_xy]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AiryMode {
    /// Constant unit stress in Voigt component `0..=2`.
    Constant(usize),
    /// `(y^k, 0, 0)`, from the potential `y^(k+2)`.
    NormalXFromY(u32),
    /// `(0, x^k, 0)`, from the potential `x^(k+2)`.
    NormalYFromX(u32),
    /// `(0, k x^(k-1) y, -x^k)`, from the potential `x^(k+1) y`.
    ShearX(u32),
    /// `(k x y^(k-1), 0, -y^k)`, from the potential `x y^(k+1)`.
    ShearY(u32),
}

impl AiryMode {
    fn value(&self, x: f64, y: f64) -> Vector3<f64> {
        match *self {
            AiryMode::Constant(c) => {
                let mut v = Vector3::zeros();
                v[c] = 1.0;
                v
            }
            AiryMode::NormalXFromY(k) => Vector3::new(y.powi(k as i32), 0.0, 0.0),
            AiryMode::NormalYFromX(k) => Vector3::new(0.0, x.powi(k as i32), 0.0),
            AiryMode::ShearX(k) => {
                let k_i = k as i32;
                Vector3::new(0.0, f64::from(k) * x.powi(k_i - 1) * y, -x.powi(k_i))
            }
            AiryMode::ShearY(k) => {
                let k_i = k as i32;
                Vector3::new(f64::from(k) * x * y.powi(k_i - 1), 0.0, -y.powi(k_i))
            }
        }
    }

    /// Analytic derivatives `(d/dx, d/dy)` of the mode in local coordinates.
    fn gradient(&self, x: f64, y: f64) -> (Vector3<f64>, Vector3<f64>) {
        let zero = Vector3::zeros();
        match *self {
            AiryMode::Constant(_) => (zero, zero),
            AiryMode::NormalXFromY(k) => {
                let k_i = k as i32;
                let dy = Vector3::new(f64::from(k) * y.powi(k_i - 1), 0.0, 0.0);
                (zero, dy)
            }
            AiryMode::NormalYFromX(k) => {
                let k_i = k as i32;
                let dx = Vector3::new(0.0, f64::from(k) * x.powi(k_i - 1), 0.0);
                (dx, zero)
            }
            AiryMode::ShearX(k) => {
                let k_i = k as i32;
                let kf = f64::from(k);
                let curv = if k >= 2 {
                    kf * f64::from(k - 1) * x.powi(k_i - 2) * y
                } else {
                    0.0
                };
                let dx = Vector3::new(0.0, curv, -kf * x.powi(k_i - 1));
                let dy = Vector3::new(0.0, kf * x.powi(k_i - 1), 0.0);
                (dx, dy)
            }
            AiryMode::ShearY(k) => {
                let k_i = k as i32;
                let kf = f64::from(k);
                let curv = if k >= 2 {
                    kf * f64::from(k - 1) * x * y.powi(k_i - 2)
                } else {
                    0.0
                };
                let dx = Vector3::new(kf * y.powi(k_i - 1), 0.0, 0.0);
                let dy = Vector3::new(curv, 0.0, -kf * y.powi(k_i - 1));
                (dx, dy)
            }
        }
    }
}

/// Incompatible (element-internal) displacement field used by the Pian
/// filter. Each field is a parent-space bubble carried by one displacement
/// direction; its symmetric gradient is the auxiliary strain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxiliaryField {
    /// Displacement `(1 - xi^2) e_dir`.
    BubbleXi { direction: usize },
    /// Displacement `(1 - eta^2) e_dir`.
    BubbleEta { direction: usize },
}

impl AuxiliaryField {
    fn parent_gradient(&self, p: &ParentPoint) -> Vector2<f64> {
        match self {
            AuxiliaryField::BubbleXi { .. } => Vector2::new(-2.0 * p.xi, 0.0),
            AuxiliaryField::BubbleEta { .. } => Vector2::new(0.0, -2.0 * p.eta),
        }
    }

    fn direction(&self) -> usize {
        match self {
            AuxiliaryField::BubbleXi { direction } | AuxiliaryField::BubbleEta { direction } => {
                *direction
            }
        }
    }
}

/// The four Wilson-type incompatible fields: both parent bubbles carried by
/// both displacement directions.
pub fn wilson_aux_fields() -> Vec<AuxiliaryField> {
    vec![
        AuxiliaryField::BubbleXi { direction: 0 },
        AuxiliaryField::BubbleXi { direction: 1 },
        AuxiliaryField::BubbleEta { direction: 0 },
        AuxiliaryField::BubbleEta { direction: 1 },
    ]
}

#[derive(Debug, Clone)]
enum BasisKind {
    /// 5-mode basis in parent coordinates with geometry coefficients from
    /// the bilinear map: constants plus `(a1^2 eta, b1^2 eta, a1 b1 eta)`
    /// and `(a3^2 xi, b3^2 xi, a3 b3 xi)`.
    PianSumihara { a1: f64, a3: f64, b1: f64, b3: f64 },
    /// Complete linear interpolation of every stress component in parent
    /// coordinates: 3 components x {1, xi, eta} = 9 modes.
    ParentLinear,
    /// Self-equilibrated polynomial modes evaluated in a local frame and
    /// rotated back to global components.
    Airy { frame: LocalFrame, modes: Vec<AiryMode> },
    /// Linear combinations `S_inner * combination` of an inner basis.
    Filtered {
        inner: Box<StressBasis>,
        combination: DMatrix<f64>,
    },
}

/// Stress interpolation basis: evaluates to a `3 x n_modes` matrix whose
/// columns are the Voigt stress modes at a point.
#[derive(Debug, Clone)]
pub struct StressBasis {
    kind: BasisKind,
}

impl StressBasis {
    pub fn n_modes(&self) -> usize {
        match &self.kind {
            BasisKind::PianSumihara { .. } => 5,
            BasisKind::ParentLinear => 9,
            BasisKind::Airy { modes, .. } => modes.len(),
            BasisKind::Filtered { combination, .. } => combination.ncols(),
        }
    }

    /// True when every mode has identically vanishing divergence.
    pub fn is_self_equilibrated(&self) -> bool {
        match &self.kind {
            BasisKind::PianSumihara { .. } | BasisKind::ParentLinear => false,
            BasisKind::Airy { .. } => true,
            BasisKind::Filtered { inner, .. } => inner.is_self_equilibrated(),
        }
    }

    /// Local conditioning frame, present for Airy-type bases.
    pub fn frame(&self) -> Option<&LocalFrame> {
        match &self.kind {
            BasisKind::Airy { frame, .. } => Some(frame),
            BasisKind::Filtered { inner, .. } => inner.frame(),
            _ => None,
        }
    }

    /// Evaluate the `3 x n_modes` mode matrix. Parent-coordinate bases use
    /// `parent`; frame-based bases use `physical`. Both points must describe
    /// the same material point of the element.
    pub fn evaluate(&self, parent: &ParentPoint, physical: &Vector2<f64>) -> Matrix3xX<f64> {
        match &self.kind {
            BasisKind::PianSumihara { a1, a3, b1, b3 } => {
                let (xi, eta) = (parent.xi, parent.eta);
                let mut s = Matrix3xX::zeros(5);
                s[(0, 0)] = 1.0;
                s[(1, 1)] = 1.0;
                s[(2, 2)] = 1.0;
                s[(0, 3)] = a1 * a1 * eta;
                s[(1, 3)] = b1 * b1 * eta;
                s[(2, 3)] = a1 * b1 * eta;
                s[(0, 4)] = a3 * a3 * xi;
                s[(1, 4)] = b3 * b3 * xi;
                s[(2, 4)] = a3 * b3 * xi;
                s
            }
            BasisKind::ParentLinear => {
                // Constants first (filter convention), then the xi block,
                // then the eta block.
                let (xi, eta) = (parent.xi, parent.eta);
                let mut s = Matrix3xX::zeros(9);
                for c in 0..3 {
                    s[(c, c)] = 1.0;
                    s[(c, 3 + c)] = xi;
                    s[(c, 6 + c)] = eta;
                }
                s
            }
            BasisKind::Airy { frame, modes } => {
                let xl = frame.to_local(physical);
                let t = voigt_stress_rotation(&frame.rotation);
                let mut s = Matrix3xX::zeros(modes.len());
                for (j, mode) in modes.iter().enumerate() {
                    s.set_column(j, &(t * mode.value(xl.x, xl.y)));
                }
                s
            }
            BasisKind::Filtered { inner, combination } => {
                inner.evaluate(parent, physical) * combination
            }
        }
    }

    /// Analytic divergence `2 x n_modes` (rows: x- and y-equilibrium) of each
    /// mode at a physical point. Available only for bases whose modes are
    /// polynomials in physical coordinates (Airy-type), where the chain rule
    /// through the frame map is exact.
    pub fn divergence(&self, physical: &Vector2<f64>) -> Option<Matrix2xX<f64>> {
        match &self.kind {
            BasisKind::Airy { frame, modes } => {
                let xl = frame.to_local(physical);
                let t = voigt_stress_rotation(&frame.rotation);
                let r = &frame.rotation;
                let mut div = Matrix2xX::zeros(modes.len());
                for (j, mode) in modes.iter().enumerate() {
                    let (dl_x, dl_y) = mode.gradient(xl.x, xl.y);
                    // d sigma_global / d x_j = (1/scale) T (D_local R_j.),
                    // where R_j. is row j of the frame rotation.
                    let g0 = (t * (dl_x * r[(0, 0)] + dl_y * r[(0, 1)])) / frame.scale;
                    let g1 = (t * (dl_x * r[(1, 0)] + dl_y * r[(1, 1)])) / frame.scale;
                    div[(0, j)] = g0[0] + g1[2];
                    div[(1, j)] = g0[2] + g1[1];
                }
                Some(div)
            }
            BasisKind::Filtered { inner, combination } => {
                inner.divergence(physical).map(|d| d * combination)
            }
            _ => None,
        }
    }
}

/// Voigt transform taking local stress components to global ones for a
/// rotation with columns `(c, s)` and `(-s, c)`:
/// `sigma_global = R sigma_local R^T`.
fn voigt_stress_rotation(r: &nalgebra::Matrix2<f64>) -> Matrix3<f64> {
    let (c, s) = (r[(0, 0)], r[(1, 0)]);
    Matrix3::new(
        c * c,
        s * s,
        -2.0 * c * s,
        s * s,
        c * c,
        2.0 * c * s,
        c * s,
        -c * s,
        c * c - s * s,
    )
}

/// Classical 5-mode assumed stress basis for Q4 geometry. The linear modes
/// are weighted by the bilinear-map coefficients so that on parallelograms
/// the basis is self-equilibrated and frame-insensitive.
pub fn pian_sumihara_basis(coords: &[Vector2<f64>]) -> Result<StressBasis, InterpolationError> {
    if coords.len() != 4 {
        return Err(InterpolationError::WrongNodeCount { expected: 4, got: coords.len() });
    }
    // Geometry must be admissible wherever the basis will be integrated.
    let rule = default_rule(ElementFamily::Q4);
    for p in &rule.points {
        shape_functions(ElementFamily::Q4, coords, p)?;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = coords.iter().map(|c| (c.x, c.y)).unzip();
    let a1 = (-x[0] + x[1] + x[2] - x[3]) / 4.0;
    let a3 = (-x[0] - x[1] + x[2] + x[3]) / 4.0;
    let b1 = (-y[0] + y[1] + y[2] - y[3]) / 4.0;
    let b3 = (-y[0] - y[1] + y[2] + y[3]) / 4.0;
    Ok(StressBasis { kind: BasisKind::PianSumihara { a1, a3, b1, b3 } })
}

/// Complete linear parent-coordinate interpolation of all three stress
/// components (9 modes). Not self-equilibrated; mainly a filter input.
pub fn parent_linear_basis() -> StressBasis {
    StressBasis { kind: BasisKind::ParentLinear }
}

/// Self-equilibrated polynomial basis complete up to `max_degree`:
/// 3 constants plus four mode families per degree, `3 + 4 n` modes total.
pub fn airy_basis(max_degree: u32, frame: LocalFrame) -> StressBasis {
    airy_basis_extended(max_degree, &[], frame)
}

/// Complete basis up to `max_degree` enriched by explicitly chosen extra
/// modes (e.g. two cubic bending modes on top of a quadratic basis).
pub fn airy_basis_extended(
    max_degree: u32,
    extra: &[AiryMode],
    frame: LocalFrame,
) -> StressBasis {
    let mut modes = vec![AiryMode::Constant(0), AiryMode::Constant(1), AiryMode::Constant(2)];
    for k in 1..=max_degree {
        modes.push(AiryMode::NormalXFromY(k));
        modes.push(AiryMode::NormalYFromX(k));
        modes.push(AiryMode::ShearX(k));
        modes.push(AiryMode::ShearY(k));
    }
    modes.extend_from_slice(extra);
    StressBasis { kind: BasisKind::Airy { frame, modes } }
}

/// Reduce a stress basis to the subspace doing no work on the auxiliary
/// strain fields `sym grad u_aux` (means removed, so constant stress modes
/// are always preserved). The returned basis has `n_modes - rank(M)` modes,
/// where `M` is the work-pairing constraint matrix.
pub fn pian_filter(
    basis: &StressBasis,
    aux_modes: &[AuxiliaryField],
    coords: &[Vector2<f64>],
) -> Result<StressBasis, InterpolationError> {
    if aux_modes.is_empty() {
        return Ok(basis.clone());
    }
    let family = match coords.len() {
        4 => ElementFamily::Q4,
        8 => ElementFamily::Q8,
        got => return Err(InterpolationError::WrongNodeCount { expected: 4, got }),
    };
    let rule = default_rule(family);
    let n_q = rule.len();
    let n_modes = basis.n_modes();
    let n_aux = aux_modes.len();

    // Quadrature-sampled inner basis and auxiliary strains.
    let mut weights = vec![0.0; n_q];
    let mut s_samples = Vec::with_capacity(n_q);
    let mut aux_strains = vec![vec![Vector3::zeros(); n_q]; n_aux];
    for (g, p) in rule.points.iter().enumerate() {
        let shape = shape_functions(family, coords, p)?;
        weights[g] = rule.weights[g] * shape.det_j;
        let phys = crate::physical_coords(coords, &shape);
        s_samples.push(basis.evaluate(p, &phys));
        let j_inv = shape.jacobian.try_inverse().expect("det_j > 0 guarantees invertibility");
        for (i, aux) in aux_modes.iter().enumerate() {
            let g_phys = j_inv * aux.parent_gradient(p);
            aux_strains[i][g] = match aux.direction() {
                0 => Vector3::new(g_phys.x, 0.0, g_phys.y),
                _ => Vector3::new(0.0, g_phys.y, g_phys.x),
            };
        }
    }

    // Remove the volume-weighted mean with the same quadrature, so constant
    // stress modes pair to exactly zero with every auxiliary strain.
    let volume: f64 = weights.iter().sum();
    for strains in aux_strains.iter_mut() {
        let mean = strains
            .iter()
            .zip(&weights)
            .fold(Vector3::zeros(), |acc, (e, w)| acc + *w * e)
            / volume;
        for e in strains.iter_mut() {
            *e -= mean;
        }
    }

    // Work-pairing constraints M[i, j] = integral (S e_j) . aux_strain_i.
    let mut m = DMatrix::zeros(n_aux, n_modes);
    for i in 0..n_aux {
        for j in 0..n_modes {
            m[(i, j)] = (0..n_q)
                .map(|g| weights[g] * s_samples[g].column(j).dot(&aux_strains[i][g]))
                .sum::<f64>();
        }
    }

    // Constant modes (first three columns of every constructor here) must
    // survive the filter.
    let m_scale = m.amax().max(f64::MIN_POSITIVE);
    for j in 0..3 {
        if m.column(j).amax() > 1e-10 * m_scale {
            return Err(InterpolationError::RankDeficientFilter);
        }
    }

    // Orthonormal row space of M from the SVD; kernel = complement.
    let svd = m.clone().svd(true, true);
    let v_t = svd.v_t.as_ref().expect("svd requested v_t");
    let sigma_max = svd.singular_values.max();
    let mut constrained: Vec<nalgebra::DVector<f64>> = Vec::new();
    for (i, &sv) in svd.singular_values.iter().enumerate() {
        if sv > FILTER_RANK_TOL * sigma_max {
            constrained.push(v_t.row(i).transpose());
        }
    }
    let rank = constrained.len();

    // Projector onto the complement of span(row space + constant modes);
    // its eigenvalue-one eigenvectors complete the filtered basis.
    let mut proj = DMatrix::identity(n_modes, n_modes);
    for v in &constrained {
        proj -= v * v.transpose();
    }
    for j in 0..3 {
        let mut e = nalgebra::DVector::zeros(n_modes);
        e[j] = 1.0;
        proj -= &e * e.transpose();
    }
    let eig = SymmetricEigen::new(proj);
    let n_extra = n_modes - rank - 3;
    let mut extras: Vec<(usize, nalgebra::DVector<f64>)> = Vec::new();
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > 0.5 {
            let mut v = eig.eigenvectors.column(i).into_owned();
            // Deterministic sign: largest-magnitude component positive.
            let lead = v.iamax();
            if v[lead] < 0.0 {
                v = -v;
            }
            extras.push((lead, v));
        }
    }
    assert!(
        extras.len() == n_extra,
        "projector rank {} disagrees with constraint rank {rank}",
        extras.len()
    );
    // Deterministic column order: by leading component index.
    extras.sort_by_key(|(lead, _)| *lead);

    let mut combination = DMatrix::zeros(n_modes, 3 + n_extra);
    for j in 0..3 {
        combination[(j, j)] = 1.0;
    }
    for (c, (_, v)) in extras.iter().enumerate() {
        combination.set_column(3 + c, v);
    }

    Ok(StressBasis {
        kind: BasisKind::Filtered { inner: Box::new(basis.clone()), combination },
    })
}
