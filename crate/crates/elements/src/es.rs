//! Enhanced strain element: four incompatible strain modes enrich the
//! compatible field; the enhanced parameters are local Newton unknowns and
//! are condensed out of the stiffness.

use crate::{
    audit_sites, residual_scale, vec3, Diagnostics, ElementError, ElementHistory,
    ElementOperators, ElementResult, ACTIVE_REPORT_DL, MAX_ELEM_ITER, TOL_ELEM_REL,
};
use gsm_material::{state_update, UpdateResult};
use nalgebra::{Cholesky, DMatrix, DVector, Vector3};

const N_ENHANCED: usize = 4;

struct EsEval {
    r_e: DVector<f64>,
    k_ee: DMatrix<f64>,
    updates: Vec<UpdateResult>,
    strains: Vec<Vector3<f64>>,
    /// Largest total strain norm over the sites, for residual scaling.
    drive: f64,
}

fn es_evaluate(
    u_e: &DVector<f64>,
    e_tilde: &DVector<f64>,
    history: &ElementHistory,
    ops: &ElementOperators,
) -> Result<EsEval, ElementError> {
    let mut r_e = DVector::zeros(N_ENHANCED);
    let mut k_ee = DMatrix::zeros(N_ENHANCED, N_ENHANCED);
    let mut updates = Vec::with_capacity(ops.quad_sites.len());
    let mut strains = Vec::with_capacity(ops.quad_sites.len());
    let mut drive: f64 = 0.0;
    for (site, prior) in ops.quad_sites.iter().zip(&history.sites) {
        let enh = site.enhanced();
        let eps = vec3(&(&site.b * u_e)) + enh * e_tilde;
        drive = drive.max(eps.norm());
        let update = state_update(&eps, prior, &ops.material)?;
        r_e += site.weight * enh.transpose() * update.stress;
        k_ee += site.weight * enh.transpose() * update.tangent * enh;
        strains.push(eps);
        updates.push(update);
    }
    Ok(EsEval { r_e, k_ee, updates, strains, drive })
}

pub fn es_state(
    u_e: &DVector<f64>,
    history: &ElementHistory,
    ops: &ElementOperators,
) -> Result<ElementResult, ElementError> {
    // The converged enhanced parameters are unique under hardening, so a
    // cold start is deterministic; the orthogonality of the modes to
    // constant stress keeps them zero for homogeneous states.
    let mut e_tilde = DVector::zeros(N_ENHANCED);
    let mut iters = 0;
    let eval = loop {
        let eval = es_evaluate(u_e, &e_tilde, history, ops)?;
        let tol =
            TOL_ELEM_REL * residual_scale(ops.material.youngs_modulus, ops.area, eval.drive);
        if eval.r_e.norm() <= tol {
            break eval;
        }
        if iters >= MAX_ELEM_ITER {
            return Err(ElementError::NoConvergence {
                iterations: iters,
                residual: eval.r_e.norm(),
            });
        }
        let chol = Cholesky::new(eval.k_ee.clone())
            .ok_or(ElementError::SingularEnhancedStiffness)?;
        e_tilde -= chol.solve(&eval.r_e);
        iters += 1;
    };

    // Assemble forces and the condensed stiffness from the converged state.
    let n = ops.n_dofs();
    let mut q_int = DVector::zeros(n);
    let mut k_u = DMatrix::zeros(n, n);
    let mut k_eu = DMatrix::zeros(N_ENHANCED, n);
    for (site, update) in ops.quad_sites.iter().zip(&eval.updates) {
        let enh = site.enhanced();
        q_int += site.weight * site.b.transpose() * update.stress;
        k_u += site.weight * site.b.transpose() * update.tangent * &site.b;
        k_eu += site.weight * enh.transpose() * update.tangent * &site.b;
    }
    let chol = Cholesky::new(eval.k_ee.clone())
        .ok_or(ElementError::SingularEnhancedStiffness)?;
    let k_e = &k_u - k_eu.transpose() * chol.solve(&k_eu);

    // Least-squares stress parameters from the elastic relation on total
    // strains; reporting only, the equilibrium path never uses them.
    let gram = ops.g.as_ref().expect("enhanced formulation carries a recovery Gram matrix");
    let mut rhs = DVector::zeros(ops.n_stress_modes());
    for (site, eps) in ops.quad_sites.iter().zip(&eval.strains) {
        rhs += site.weight * site.stress_modes().transpose() * (ops.elastic_stiffness * eps);
    }
    let beta_rec =
        Cholesky::new(gram.clone()).ok_or(ElementError::SingularG)?.solve(&rhs);

    let sites: Vec<_> = eval.updates.iter().map(|u| u.new_state).collect();
    let stresses: Vec<_> = eval.updates.iter().map(|u| u.stress).collect();
    let multipliers: Vec<_> = eval.updates.iter().map(|u| u.plastic_multiplier).collect();
    let (max_yield, max_comp) = audit_sites(&stresses, &multipliers, &sites, &ops.material)?;
    Ok(ElementResult {
        q_int,
        k_e,
        trial_history: ElementHistory {
            sites,
            beta: Some(beta_rec.clone()),
            q_lambda: None,
            ep_hat: None,
        },
        beta: Some(beta_rec),
        site_stresses: stresses,
        site_multipliers: multipliers.clone(),
        diagnostics: Diagnostics {
            local_iters: iters,
            active_set_size: multipliers.iter().filter(|dl| **dl > ACTIVE_REPORT_DL).count(),
            max_yield,
            max_complementarity: max_comp,
        },
        residual_correction: None,
    })
}
