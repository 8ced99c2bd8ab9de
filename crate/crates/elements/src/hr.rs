//! Two-field stress-displacement element: stress parameters are the local
//! unknowns and the inverse constitutive map (stress to strain) provides
//! residual and flexibility at each site.

use crate::history::plastic_strain_parameters;
use crate::{
    audit_sites, vec3, Diagnostics, ElementError, ElementHistory, ElementOperators,
    ElementResult, ACTIVE_REPORT_DL, MAX_ELEM_ITER, TOL_ELEM_REL,
};
use gsm_material::{inverse_state_update, MaterialPointState};
use nalgebra::{Cholesky, DMatrix, DVector, Vector3};

struct HrEval {
    /// Weighted strain flux: sum of W S^T eps(S beta).
    flux: DVector<f64>,
    /// Elastoplastic flexibility: sum of W S^T (d eps / d sigma) S.
    h_ep: DMatrix<f64>,
    states: Vec<MaterialPointState>,
    stresses: Vec<Vector3<f64>>,
}

fn hr_evaluate(
    beta: &DVector<f64>,
    history: &ElementHistory,
    ops: &ElementOperators,
) -> Result<HrEval, ElementError> {
    let n_sigma = ops.n_stress_modes();
    let mut flux = DVector::zeros(n_sigma);
    let mut h_ep = DMatrix::zeros(n_sigma, n_sigma);
    let mut states = Vec::with_capacity(ops.quad_sites.len());
    let mut stresses = Vec::with_capacity(ops.quad_sites.len());
    for (site, prior) in ops.quad_sites.iter().zip(&history.sites) {
        let s = site.stress_modes();
        let sigma = vec3(&(s * beta));
        let (eps, new_state, compliance) = inverse_state_update(&sigma, prior, &ops.material)?;
        flux += site.weight * s.transpose() * eps;
        h_ep += site.weight * s.transpose() * compliance * s;
        states.push(new_state);
        stresses.push(sigma);
    }
    Ok(HrEval { flux, h_ep, states, stresses })
}

fn compatibility_tolerance(ops: &ElementOperators, c_u: &DVector<f64>, ep_hat: &DVector<f64>) -> f64 {
    let params = &ops.material;
    let floor = ops.area * params.yield_stress / params.youngs_modulus;
    TOL_ELEM_REL * c_u.norm().max(ep_hat.norm()).max(floor)
}

fn multiplier_increments(
    ops: &ElementOperators,
    prior: &[MaterialPointState],
    new: &[MaterialPointState],
) -> Vec<f64> {
    prior
        .iter()
        .zip(new)
        .map(|(p, n)| (n.isotropic_var - p.isotropic_var) / ops.material.von_mises_constant)
        .collect()
}

fn finish(
    ops: &ElementOperators,
    history: &ElementHistory,
    beta: DVector<f64>,
    eval: HrEval,
    local_iters: usize,
    residual_correction: Option<DVector<f64>>,
) -> Result<ElementResult, ElementError> {
    let c = ops.c();
    let q_int = c.transpose() * &beta;
    let chol = Cholesky::new(eval.h_ep.clone()).ok_or(ElementError::SingularFlexibility)?;
    let k_e = c.transpose() * chol.solve(c);
    let multipliers = multiplier_increments(ops, &history.sites, &eval.states);
    let (max_yield, max_comp) =
        audit_sites(&eval.stresses, &multipliers, &eval.states, &ops.material)?;
    Ok(ElementResult {
        q_int,
        k_e,
        trial_history: ElementHistory {
            sites: eval.states,
            beta: Some(beta.clone()),
            q_lambda: None,
            ep_hat: None,
        },
        beta: Some(beta),
        site_stresses: eval.stresses,
        site_multipliers: multipliers.clone(),
        diagnostics: Diagnostics {
            local_iters,
            active_set_size: multipliers.iter().filter(|dl| **dl > ACTIVE_REPORT_DL).count(),
            max_yield,
            max_complementarity: max_comp,
        },
        residual_correction,
    })
}

/// Fully converged local stress solve: Newton on the weak compatibility
/// residual C u - flux(beta) with the elastoplastic flexibility.
pub fn hr_state(
    u_e: &DVector<f64>,
    history: &ElementHistory,
    ops: &ElementOperators,
) -> Result<ElementResult, ElementError> {
    let c_u = ops.c() * u_e;
    let ep_hat = plastic_strain_parameters(ops, &history.sites)?;
    let tol = compatibility_tolerance(ops, &c_u, &ep_hat);

    // Elastic predictor: exact whenever no site yields, because the inverse
    // map is affine there.
    let he_chol = Cholesky::new(ops.h_elastic().clone())
        .ok_or(ElementError::SingularFlexibility)?;
    let mut beta = he_chol.solve(&(&c_u - &ep_hat));
    let mut iters = 0;
    let eval = loop {
        let eval = hr_evaluate(&beta, history, ops)?;
        let r = &c_u - &eval.flux;
        if r.norm() <= tol {
            break eval;
        }
        if iters >= MAX_ELEM_ITER {
            return Err(ElementError::NoConvergence { iterations: iters, residual: r.norm() });
        }
        let chol =
            Cholesky::new(eval.h_ep.clone()).ok_or(ElementError::SingularFlexibility)?;
        beta += chol.solve(&r);
        iters += 1;
    };
    finish(ops, history, beta, eval, iters, None)
}

/// Relaxed variant: a single linearized stress update from the committed
/// parameters. The remaining compatibility defect is returned as a force
/// correction for the global residual, so local convergence is traded for
/// an extra global coupling term.
pub fn hr_state_relaxed(
    u_e: &DVector<f64>,
    history: &ElementHistory,
    ops: &ElementOperators,
) -> Result<ElementResult, ElementError> {
    let c = ops.c();
    let c_u = c * u_e;
    let ep_hat = plastic_strain_parameters(ops, &history.sites)?;

    let beta_start = match &history.beta {
        Some(beta) => beta.clone(),
        None => {
            let he_chol = Cholesky::new(ops.h_elastic().clone())
                .ok_or(ElementError::SingularFlexibility)?;
            he_chol.solve(&(&c_u - &ep_hat))
        }
    };
    let eval0 = hr_evaluate(&beta_start, history, ops)?;
    let chol0 =
        Cholesky::new(eval0.h_ep.clone()).ok_or(ElementError::SingularFlexibility)?;
    let beta = &beta_start + chol0.solve(&(&c_u - &eval0.flux));

    let eval = hr_evaluate(&beta, history, ops)?;
    let chol = Cholesky::new(eval.h_ep.clone()).ok_or(ElementError::SingularFlexibility)?;
    let correction = c.transpose() * chol.solve(&(&c_u - &eval.flux));
    finish(ops, history, beta, eval, 1, Some(correction))
}
