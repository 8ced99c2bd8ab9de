//! Compatible displacement elements: strain from the B matrix, pointwise
//! state update, standard internal force and consistent stiffness.

use crate::{
    audit_sites, vec3, Diagnostics, ElementError, ElementHistory, ElementOperators,
    ElementResult, ACTIVE_REPORT_DL,
};
use gsm_material::state_update;
use nalgebra::{DMatrix, DVector};

pub fn displacement_element_state(
    u_e: &DVector<f64>,
    history: &ElementHistory,
    ops: &ElementOperators,
) -> Result<ElementResult, ElementError> {
    let n = ops.n_dofs();
    let mut q_int = DVector::zeros(n);
    let mut k_e = DMatrix::zeros(n, n);
    let mut sites = Vec::with_capacity(ops.quad_sites.len());
    let mut stresses = Vec::with_capacity(ops.quad_sites.len());
    let mut multipliers = Vec::with_capacity(ops.quad_sites.len());

    for (site, prior) in ops.quad_sites.iter().zip(&history.sites) {
        let eps = vec3(&(&site.b * u_e));
        let update = state_update(&eps, prior, &ops.material)?;
        q_int += site.weight * site.b.transpose() * update.stress;
        k_e += site.weight * site.b.transpose() * update.tangent * &site.b;
        sites.push(update.new_state);
        stresses.push(update.stress);
        multipliers.push(update.plastic_multiplier);
    }

    let (max_yield, max_comp) = audit_sites(&stresses, &multipliers, &sites, &ops.material)?;
    Ok(ElementResult {
        q_int,
        k_e,
        trial_history: ElementHistory { sites, beta: None, q_lambda: None, ep_hat: None },
        beta: None,
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
    use nalgebra::Vector2;

    fn params() -> MaterialParams {
        MaterialParams::new(70.0, 0.3, 0.243, 0.2, 0.15, PlaneAssumption::PlaneStress)
    }

    #[test]
    fn test_uniform_stretch_matches_elastic_tensor() {
        let coords = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(2.0, 0.0),
            Vector2::new(2.0, 1.0),
            Vector2::new(0.0, 1.0),
        ];
        let ops = build_operators(Formulation::DisplacementQ4, &coords, &params()).unwrap();
        let history = ElementHistory::virgin(&ops);
        // u_x = a x: homogeneous strain (a, 0, 0), well inside the yield
        // surface at a = 1e-4.
        let a = 1e-4;
        let u = DVector::from_fn(8, |i, _| if i % 2 == 0 { a * coords[i / 2].x } else { 0.0 });
        let result = displacement_element_state(&u, &history, &ops).unwrap();
        let sigma = elastic_tensor(&params()) * nalgebra::Vector3::new(a, 0.0, 0.0);
        for s in &result.site_stresses {
            assert_relative_eq!(s, &sigma, epsilon = 1e-12 * sigma.norm());
        }
        assert!(result.diagnostics.active_set_size == 0, "stretch must stay elastic");
        // Nodal forces on the right edge carry sigma_xx times edge length,
        // split evenly between the two corner nodes.
        assert_relative_eq!(result.q_int[2], 0.5 * sigma.x, epsilon = 1e-12 * sigma.x.abs());
    }

    #[test]
    fn test_stiffness_symmetric_and_rigid_modes_unloaded() {
        let coords = vec![
            Vector2::new(0.1, 0.0),
            Vector2::new(1.9, 0.3),
            Vector2::new(2.2, 1.8),
            Vector2::new(-0.2, 1.4),
        ];
        let ops = build_operators(Formulation::DisplacementQ4, &coords, &params()).unwrap();
        let history = ElementHistory::virgin(&ops);
        let u = DVector::from_fn(8, |i, _| 1e-3 * ((i as f64) * 0.31).sin());
        let result = displacement_element_state(&u, &history, &ops).unwrap();
        let k = &result.k_e;
        assert_relative_eq!(k, &k.transpose(), epsilon = 1e-12 * k.amax());
        // A rigid translation produces no internal force.
        let t = DVector::from_fn(8, |i, _| if i % 2 == 0 { 0.5 } else { -0.25 });
        let rigid = displacement_element_state(&t, &history, &ops).unwrap();
        assert_relative_eq!(rigid.q_int.norm(), 0.0, epsilon = 1e-12);
    }
}
