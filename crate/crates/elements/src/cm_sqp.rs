//! SQP solver for the stress-displacement-multiplier element: each outer
//! iteration linearizes compatibility and the yield constraints consistently
//! around the current iterate and solves the resulting complementarity
//! subproblem exactly; a merit line search globalizes the step.

use crate::cm::{cm_evaluate, cm_setup, finish_cm, CmEval, CmSetup};
use crate::{
    ElementError, ElementHistory, ElementOperators, ElementResult, MAX_ACTIVE_SET_SWEEPS,
    MAX_ELEM_ITER,
};
use nalgebra::{Cholesky, DMatrix, DVector};
use std::collections::BTreeSet;

/// Exact non-negativity of the subproblem multipliers through a primal
/// active-set loop on the complementarity system psi - Q l <= 0, l >= 0.
/// Q is symmetric positive definite (elastic flexibility pairing plus
/// hardening), so each candidate solve is a Cholesky.
fn solve_lcp(
    q: &DMatrix<f64>,
    psi: &DVector<f64>,
    init: BTreeSet<usize>,
    tol_w: &DVector<f64>,
) -> Result<DVector<f64>, ElementError> {
    let n = psi.len();
    let mut active = init;
    let mut visited: Vec<Vec<usize>> = Vec::new();
    let mut union_tried = false;
    for _ in 0..(4 * n + MAX_ACTIVE_SET_SWEEPS) {
        let key: Vec<usize> = active.iter().copied().collect();
        if visited.contains(&key) {
            if union_tried {
                return Err(ElementError::ActiveSetCycling {
                    description: format!("subproblem set {key:?} revisited"),
                });
            }
            union_tried = true;
            let mut merged = BTreeSet::new();
            for set in &visited {
                merged.extend(set.iter().copied());
            }
            merged.extend(active.iter().copied());
            active = merged;
        }
        visited.push(active.iter().copied().collect());

        let act: Vec<usize> = active.iter().copied().collect();
        let mut l = DVector::zeros(n);
        if !act.is_empty() {
            let q_sub = DMatrix::from_fn(act.len(), act.len(), |i, j| q[(act[i], act[j])]);
            let psi_sub = DVector::from_fn(act.len(), |i, _| psi[act[i]]);
            let chol =
                Cholesky::new(q_sub).ok_or(ElementError::SingularFlexibility)?;
            let l_sub = chol.solve(&psi_sub);
            // Most negative multiplier leaves the set first.
            if let Some((k, _)) = l_sub
                .iter()
                .enumerate()
                .filter(|(_, v)| **v < 0.0)
                .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite multipliers"))
            {
                active.remove(&act[k]);
                continue;
            }
            for (k, g) in act.iter().enumerate() {
                l[*g] = l_sub[k];
            }
        }
        // Most violated constraint enters.
        let w = psi - q * &l;
        let entering = (0..n)
            .filter(|g| !active.contains(g) && w[*g] > tol_w[*g])
            .max_by(|a, b| {
                (w[*a] / tol_w[*a].max(f64::MIN_POSITIVE))
                    .partial_cmp(&(w[*b] / tol_w[*b].max(f64::MIN_POSITIVE)))
                    .expect("finite violations")
            });
        match entering {
            Some(g) => {
                active.insert(g);
            }
            None => return Ok(l),
        }
    }
    Err(ElementError::ActiveSetCycling {
        description: "subproblem active set failed to settle".into(),
    })
}

/// Merit measure balancing compatibility defect and yield violation, both
/// normalized; exact at a KKT point.
fn merit(setup: &CmSetup, ops: &ElementOperators, eval: &CmEval) -> f64 {
    let r = (&setup.c_u - &eval.flux).norm() / setup.r_scale;
    let viol: f64 = ops
        .quad_sites
        .iter()
        .zip(eval.phi.iter())
        .map(|(site, phi)| site.weight * phi.max(0.0))
        .sum::<f64>()
        / (ops.area * ops.material.yield_stress);
    r + viol
}

pub fn cm_state_sqp(
    u_e: &DVector<f64>,
    history: &ElementHistory,
    ops: &ElementOperators,
) -> Result<ElementResult, ElementError> {
    let setup = cm_setup(u_e, history, ops)?;
    let n_sites = ops.quad_sites.len();

    // Warm start from the committed stress parameters when available.
    let mut beta = match &history.beta {
        Some(b) => b.clone(),
        None => setup.beta_tr.clone(),
    };
    let mut dl = DVector::zeros(n_sites);
    let mut eval = cm_evaluate(ops, &beta, &dl, &history.sites)?;
    let mut iters = 0;
    loop {
        let r = &setup.c_u - &eval.flux;
        let max_phi = eval.phi.max();
        let comp = (0..n_sites)
            .map(|g| (dl[g] * eval.phi[g]).abs())
            .fold(0.0, f64::max);
        if r.norm() <= setup.tol_r
            && max_phi <= setup.tol_phi
            && comp <= setup.tol_phi * dl.amax().max(1.0)
        {
            break;
        }
        if iters >= MAX_ELEM_ITER {
            return Err(ElementError::NoConvergence { iterations: iters, residual: r.norm() });
        }
        iters += 1;

        // Consistent subproblem: Newton linearization of compatibility and
        // yield around the current iterate, kept as a complementarity
        // system over the total multipliers l. Eliminating dbeta through
        // the elastoplastic Jacobian H_ep = dflux/dbeta gives
        //   psi - Q l <= 0  perp  l >= 0,
        //   Q = N^T H_ep^-1 N + diag(W h_eff),
        //   psi_g = W_g phi_g + N_g . H_ep^-1 r + (Q dl)_g,
        // with N_g = W_g S_g^T m_g = dflux/ddl_g, so the subproblem KKT is
        // exactly the Newton system of the active constraints.
        let h_chol = Cholesky::new(eval.h_ep.clone())
            .ok_or(ElementError::SingularFlexibility)?;
        let x = h_chol.solve(&eval.n_cols);
        let mut q_mat = eval.n_cols.transpose() * &x;
        let h_r = h_chol.solve(&r);
        let mut tol_w = DVector::zeros(n_sites);
        for g in 0..n_sites {
            let w = ops.quad_sites[g].weight;
            q_mat[(g, g)] += w * eval.h_eff[g];
            tol_w[g] = w * setup.tol_phi;
        }
        let mut psi = &q_mat * &dl;
        for g in 0..n_sites {
            let w = ops.quad_sites[g].weight;
            psi[g] += w * eval.phi[g] + eval.n_cols.column(g).dot(&h_r);
        }
        let init: BTreeSet<usize> =
            (0..n_sites).filter(|g| dl[*g] > 0.0 || eval.phi[*g] > 0.0).collect();
        let l = solve_lcp(&q_mat, &psi, init, &tol_w)?;

        let d_dl = &l - &dl;
        let dbeta = h_chol.solve(&(&r - &eval.n_cols * &d_dl));

        // Backtracking on the merit measure; the last candidate is taken
        // unconditionally and the outer KKT check guards convergence.
        let theta0 = merit(&setup, ops, &eval);
        let mut alpha = 1.0;
        for k in 0..5 {
            let beta_t = &beta + alpha * &dbeta;
            let dl_t = &dl + alpha * &d_dl;
            let eval_t = cm_evaluate(ops, &beta_t, &dl_t, &history.sites)?;
            if merit(&setup, ops, &eval_t) <= theta0 * (1.0 - 1e-4 * alpha) || k == 4 {
                beta = beta_t;
                dl = dl_t;
                eval = eval_t;
                break;
            }
            alpha *= 0.5;
        }
    }
    finish_cm(ops, history, beta, &dl, &eval, iters)
}
