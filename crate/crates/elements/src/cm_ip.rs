//! Interior-point solver for the stress-displacement-multiplier element:
//! every multiplier stays strictly positive, yield conditions are relaxed
//! by slack variables, and complementarity is enforced through clamped
//! floors (optionally preceded by a short barrier path).

use crate::cm::{cm_evaluate, cm_setup, finish_cm, gather_active, solve_bordered};
use crate::{
    ElementError, ElementHistory, ElementOperators, ElementResult, ACTIVE_REPORT_DL,
    MAX_ELEM_ITER,
};
use nalgebra::{Cholesky, DVector};

/// Interior-point controls. The defaults run the zero-barrier scheme whose
/// converged point keeps active sites a slack-floor inside the yield
/// surface; the floors are iterate regularizations, not plastic flow, so
/// multipliers at the floor commit as zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpConfig {
    /// Zero-barrier scheme with slaved, clamped slacks (the default). When
    /// false, a short barrier path precedes the same terminal polish.
    pub simplified: bool,
    /// Floor keeping multiplier iterates strictly positive.
    pub multiplier_floor: f64,
    /// Floor keeping slack iterates strictly positive; three orders above
    /// the multiplier floor, and the converged distance of active sites
    /// from the yield surface.
    pub slack_floor: f64,
    /// Barrier reduction factor per iteration (barrier path only).
    pub barrier_reduction: f64,
    /// Fraction-to-boundary coefficient (barrier path only).
    pub boundary_fraction: f64,
    /// Barrier iterations before the zero-barrier polish.
    pub barrier_iters: usize,
}

impl Default for IpConfig {
    fn default() -> Self {
        Self {
            simplified: true,
            multiplier_floor: 1e-12,
            slack_floor: 1e-9,
            barrier_reduction: 0.5,
            boundary_fraction: 0.95,
            barrier_iters: 8,
        }
    }
}

pub fn cm_state_ip(
    u_e: &DVector<f64>,
    history: &ElementHistory,
    ops: &ElementOperators,
    config: &IpConfig,
) -> Result<ElementResult, ElementError> {
    let setup = cm_setup(u_e, history, ops)?;
    let n_sites = ops.quad_sites.len();
    let all: Vec<usize> = (0..n_sites).collect();

    let mut beta = setup.beta_tr.clone();
    let mut dl = DVector::from_element(n_sites, config.multiplier_floor);
    let mut eval = cm_evaluate(ops, &beta, &dl, &history.sites)?;
    let mut s = DVector::from_fn(n_sites, |g, _| (-eval.phi[g]).max(config.slack_floor));
    let mut mu = if config.simplified {
        0.0
    } else {
        dl.dot(&s) / n_sites as f64
    };

    let max_iters = MAX_ELEM_ITER + config.barrier_iters;
    let mut iters = 0;
    loop {
        if mu == 0.0 {
            // Polish phase: slacks are slaved to the yield values above the
            // floor, so feasibility below means every site either satisfies
            // phi = -s exactly (inactive) or sits at the floor (active).
            for g in 0..n_sites {
                s[g] = (-eval.phi[g]).max(config.slack_floor);
            }
        }
        let r = &setup.c_u - &eval.flux;
        let feas = (0..n_sites)
            .map(|g| (eval.phi[g] + s[g]).abs())
            .fold(0.0, f64::max);
        if mu == 0.0 && r.norm() <= setup.tol_r && feas <= setup.tol_phi {
            break;
        }
        if iters >= max_iters {
            return Err(ElementError::NoConvergence { iterations: iters, residual: r.norm() });
        }
        iters += 1;

        // Bordered Newton over every site; the slack-over-multiplier term
        // regularizes inactive rows (huge slack at the multiplier floor
        // makes them inert) without disturbing active ones.
        let h_chol = Cholesky::new(eval.h_ep.clone())
            .ok_or(ElementError::SingularFlexibility)?;
        let (n_act, mut d_act) = gather_active(ops, &eval, &all);
        for g in 0..n_sites {
            d_act[g] += ops.quad_sites[g].weight * s[g] / dl[g];
        }
        let rhs2 = DVector::from_fn(n_sites, |g, _| {
            let w = ops.quad_sites[g].weight;
            if mu == 0.0 {
                -w * (eval.phi[g] + s[g])
            } else {
                -w * (eval.phi[g] + mu / dl[g])
            }
        });
        let (dbeta, ddl) = solve_bordered(&h_chol, &n_act, &d_act, &r, &rhs2)?;

        let alpha = if mu > 0.0 {
            // Fraction-to-boundary: multipliers and slacks keep at least a
            // (1 - theta) fraction of their current positive value.
            let mut a: f64 = 1.0;
            for g in 0..n_sites {
                if ddl[g] < 0.0 {
                    a = a.min(config.boundary_fraction * dl[g] / -ddl[g]);
                }
                let ds = mu / dl[g] - s[g] - s[g] / dl[g] * ddl[g];
                if ds < 0.0 {
                    a = a.min(config.boundary_fraction * s[g] / -ds);
                }
            }
            a.min(1.0)
        } else {
            1.0
        };

        if mu > 0.0 {
            for g in 0..n_sites {
                let ds = mu / dl[g] - s[g] - s[g] / dl[g] * ddl[g];
                s[g] = (s[g] + alpha * ds).max(config.slack_floor);
            }
            mu *= config.barrier_reduction;
            if iters >= config.barrier_iters {
                mu = 0.0;
            }
        }
        beta += alpha * dbeta;
        for g in 0..n_sites {
            dl[g] = (dl[g] + alpha * ddl[g]).max(config.multiplier_floor);
        }
        eval = cm_evaluate(ops, &beta, &dl, &history.sites)?;
    }

    // Multipliers at or near the floor are regularization, not flow.
    let dl_commit = dl.map(|v| if v > ACTIVE_REPORT_DL { v } else { 0.0 });
    finish_cm(ops, history, beta, &dl_commit, &eval, iters)
}
