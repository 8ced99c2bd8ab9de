//! Nodal-force element: iterates on the deformational nodal forces. Stress
//! parameters follow algebraically through the invertible deformational
//! coupling, strains come from per-subdomain inverse updates on the
//! piecewise-constant partition, and weak compatibility closes the loop.

use crate::{
    audit_sites, Diagnostics, ElementError, ElementHistory, ElementOperators, ElementResult,
    ACTIVE_REPORT_DL, MAX_ELEM_ITER, TOL_ELEM_REL,
};
use gsm_material::{inverse_state_update, MaterialPointState};
use nalgebra::{Cholesky, DMatrix, DVector, Vector3};

struct NfEval {
    beta: DVector<f64>,
    /// Weighted strain flux over subdomains: sum of |O_d| S_d^T eps_d.
    flux: DVector<f64>,
    /// Elastoplastic flexibility from subdomain compliances.
    flex: DMatrix<f64>,
    states: Vec<MaterialPointState>,
    stresses: Vec<Vector3<f64>>,
}

fn nf_evaluate(
    q_lambda: &DVector<f64>,
    history: &ElementHistory,
    ops: &ElementOperators,
) -> Result<NfEval, ElementError> {
    let cv = ops.cv.as_ref().expect("nodal-force element carries a deformational coupling");
    let cv_t = cv.transpose();
    let lu = cv_t.lu();
    let beta = lu.solve(q_lambda).ok_or(ElementError::SingularCV)?;

    let data = ops.subdomains.as_ref().expect("nodal-force element carries a partition");
    let n_sigma = ops.n_stress_modes();
    let mut flux = DVector::zeros(n_sigma);
    let mut flex = DMatrix::zeros(n_sigma, n_sigma);
    let mut states = Vec::with_capacity(data.n_subdomains());
    let mut stresses = Vec::with_capacity(data.n_subdomains());
    for ((vol, s_bar), prior) in data.volumes.iter().zip(&data.averaged).zip(&history.sites) {
        let sig = s_bar * &beta;
        let sigma = Vector3::new(sig[0], sig[1], sig[2]);
        let (eps, new_state, compliance) = inverse_state_update(&sigma, prior, &ops.material)?;
        flux += *vol * s_bar.transpose() * eps;
        flex += *vol * s_bar.transpose() * compliance * s_bar;
        states.push(new_state);
        stresses.push(sigma);
    }
    Ok(NfEval { beta, flux, flex, states, stresses })
}

pub fn hw_nodal_force_state(
    u_e: &DVector<f64>,
    history: &ElementHistory,
    ops: &ElementOperators,
) -> Result<ElementResult, ElementError> {
    let c = ops.c();
    let cv = ops.cv.as_ref().expect("nodal-force element carries a deformational coupling");
    let filter = ops.filter.as_ref().expect("nodal-force element carries a rigid-body filter");
    let c_u = c * u_e;

    let params = &ops.material;
    let floor = ops.area * params.yield_stress / params.youngs_modulus;
    let tol = TOL_ELEM_REL * c_u.norm().max(floor);

    // Deformational force iteration, warm-started from the committed value.
    let mut q_lambda = history
        .q_lambda
        .clone()
        .unwrap_or_else(|| DVector::zeros(ops.n_stress_modes()));
    let mut iters = 0;
    let eval = loop {
        let eval = nf_evaluate(&q_lambda, history, ops)?;
        let r = &eval.flux - &c_u;
        if r.norm() <= tol {
            break eval;
        }
        if iters >= MAX_ELEM_ITER {
            return Err(ElementError::NoConvergence { iterations: iters, residual: r.norm() });
        }
        // dq = -(C V)^T F^-1 r: Newton on r(q) with d beta / d q = (C V)^-T.
        let chol =
            Cholesky::new(eval.flex.clone()).ok_or(ElementError::SingularFlexibility)?;
        q_lambda -= cv.transpose() * chol.solve(&r);
        iters += 1;
    };

    // Stiffness through the factorized form Pi^T (C V)^T F^-1 (C V) Pi,
    // which coincides with C^T F^-1 C because C annihilates rigid modes.
    let chol = Cholesky::new(eval.flex.clone()).ok_or(ElementError::SingularFlexibility)?;
    let cv_pi = cv * &filter.pi;
    let k_e = cv_pi.transpose() * chol.solve(&cv_pi);
    let q_int = c.transpose() * &eval.beta;

    let multipliers: Vec<f64> = history
        .sites
        .iter()
        .zip(&eval.states)
        .map(|(p, n)| (n.isotropic_var - p.isotropic_var) / params.von_mises_constant)
        .collect();
    let (max_yield, max_comp) =
        audit_sites(&eval.stresses, &multipliers, &eval.states, params)?;
    Ok(ElementResult {
        q_int,
        k_e,
        trial_history: ElementHistory {
            sites: eval.states,
            beta: Some(eval.beta.clone()),
            q_lambda: Some(q_lambda),
            ep_hat: None,
        },
        beta: Some(eval.beta),
        site_stresses: eval.stresses,
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
