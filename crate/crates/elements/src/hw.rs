//! Three-field element with identical stress and strain interpolation: both
//! parameter sets are eliminated in closed form through the pairing Gram
//! matrix, leaving a pointwise state update on projected strains.

use crate::{
    audit_sites, vec3, Diagnostics, ElementError, ElementHistory, ElementOperators,
    ElementResult, ACTIVE_REPORT_DL,
};
use gsm_material::state_update;
use nalgebra::{Cholesky, DMatrix, DVector};

pub fn hw_identical_state(
    u_e: &DVector<f64>,
    history: &ElementHistory,
    ops: &ElementOperators,
) -> Result<ElementResult, ElementError> {
    let c = ops.c();
    let g = ops.g.as_ref().expect("identical-basis formulation carries a Gram matrix");
    let chol = Cholesky::new(g.clone()).ok_or(ElementError::SingularG)?;

    // Strain parameters follow from weak compatibility: G e_hat = C u.
    let e_hat = chol.solve(&(c * u_e));
    let n_sigma = ops.n_stress_modes();
    let mut flux = DVector::zeros(n_sigma);
    let mut k_eps = DMatrix::zeros(n_sigma, n_sigma);
    let mut sites = Vec::with_capacity(ops.quad_sites.len());
    let mut stresses = Vec::with_capacity(ops.quad_sites.len());
    let mut multipliers = Vec::with_capacity(ops.quad_sites.len());
    for (site, prior) in ops.quad_sites.iter().zip(&history.sites) {
        let s = site.stress_modes();
        let eps = vec3(&(s * &e_hat));
        let update = state_update(&eps, prior, &ops.material)?;
        flux += site.weight * s.transpose() * update.stress;
        k_eps += site.weight * s.transpose() * update.tangent * s;
        sites.push(update.new_state);
        stresses.push(update.stress);
        multipliers.push(update.plastic_multiplier);
    }

    // Stress parameters are the pairing projection of the site stresses;
    // the stiffness condenses both parameter sets: K = (G^-1 C)^T K_eps (G^-1 C).
    let beta_hat = chol.solve(&flux);
    let q_int = c.transpose() * &beta_hat;
    let a = chol.solve(c);
    let k_e = a.transpose() * k_eps * a;

    let (max_yield, max_comp) = audit_sites(&stresses, &multipliers, &sites, &ops.material)?;
    Ok(ElementResult {
        q_int,
        k_e,
        trial_history: ElementHistory {
            sites,
            beta: Some(beta_hat.clone()),
            q_lambda: None,
            ep_hat: None,
        },
        beta: Some(beta_hat),
        site_stresses: stresses,
        site_multipliers: multipliers.clone(),
        diagnostics: Diagnostics {
            local_iters: 1,
            active_set_size: multipliers.iter().filter(|dl| **dl > ACTIVE_REPORT_DL).count(),
            max_yield,
            max_complementarity: max_comp,
        },
        residual_correction: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{build_operators, Formulation};
    use approx::assert_relative_eq;
    use gsm_material::{elastic_tensor, MaterialParams, PlaneAssumption};
    use nalgebra::{Vector2, Vector3};

    fn params() -> MaterialParams {
        MaterialParams::new(70.0, 0.3, 0.243, 0.2, 0.15, PlaneAssumption::PlaneStress)
    }

    fn square_q4() -> Vec<Vector2<f64>> {
        vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(2.0, 0.0),
            Vector2::new(2.0, 2.0),
            Vector2::new(0.0, 2.0),
        ]
    }

    #[test]
    fn test_uniform_stretch_reproduces_constant_stress() {
        let coords = square_q4();
        let ops = build_operators(Formulation::HwQ4Identical, &coords, &params()).unwrap();
        let history = ElementHistory::virgin(&ops);
        let a = 1e-4;
        let u = DVector::from_fn(8, |i, _| if i % 2 == 0 { a * coords[i / 2].x } else { 0.0 });
        let result = hw_identical_state(&u, &history, &ops).unwrap();
        let sigma = elastic_tensor(&params()) * Vector3::new(a, 0.0, 0.0);
        for s in &result.site_stresses {
            assert_relative_eq!(s, &sigma, epsilon = 1e-11 * sigma.norm());
        }
    }

    #[test]
    fn test_stiffness_symmetric_on_distorted_element() {
        let mut coords = square_q4();
        coords[2] += Vector2::new(-0.1, 0.2);
        coords[3] += Vector2::new(0.15, 0.0);
        let ops = build_operators(Formulation::HwQ4Identical, &coords, &params()).unwrap();
        let history = ElementHistory::virgin(&ops);
        let u = DVector::from_fn(8, |i, _| 1e-3 * ((i as f64) * 0.47).cos());
        let result = hw_identical_state(&u, &history, &ops).unwrap();
        let k = &result.k_e;
        assert_relative_eq!(k, &k.transpose(), epsilon = 1e-11 * k.amax());
    }
}
