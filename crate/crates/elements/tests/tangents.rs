//! Consistent-tangent verification: the stiffness returned by every state
//! determination must match a central-difference Jacobian of its internal
//! force map, at elastic and at plastically loaded states.

use elements::{
    build_operators, element_state, CmSolver, ElementHistory, Formulation, IpConfig,
    StateOptions,
};
use gsm_material::{MaterialParams, PlaneAssumption};
use nalgebra::{DVector, Vector2};
use oracles::{central_difference_jacobian, seeded_rng};
use rand::Rng;

/// Relative Frobenius tolerance for tangent agreement. Central differences
/// with step 1e-8 on smooth branches carry ~1e-8 truncation plus roundoff;
/// 1e-5 leaves two orders of margin.
const TOL_TANGENT: f64 = 1e-5;
const FD_STEP: f64 = 1e-8;

fn params() -> MaterialParams {
    MaterialParams::new(70.0, 0.3, 0.243, 0.2, 0.15, PlaneAssumption::PlaneStress)
}

fn distorted_q4() -> Vec<Vector2<f64>> {
    vec![
        Vector2::new(0.0, 0.0),
        Vector2::new(2.1, 0.2),
        Vector2::new(1.9, 1.7),
        Vector2::new(-0.1, 1.4),
    ]
}

fn distorted_q8() -> Vec<Vector2<f64>> {
    vec![
        Vector2::new(0.0, 0.0),
        Vector2::new(2.0, 0.1),
        Vector2::new(2.1, 1.9),
        Vector2::new(-0.1, 2.0),
        Vector2::new(1.0, 0.0),
        Vector2::new(2.15, 1.0),
        Vector2::new(1.0, 2.0),
        Vector2::new(-0.05, 1.0),
    ]
}

/// Homogeneous stretch plus seeded jitter; the stretch magnitude selects
/// elastic or robustly plastic regimes, the jitter breaks symmetry so no
/// site sits near an active-set boundary by accident.
fn state_dofs(
    coords: &[Vector2<f64>],
    stretch: (f64, f64),
    jitter: f64,
    seed: u64,
) -> DVector<f64> {
    let mut rng = seeded_rng(seed);
    DVector::from_fn(2 * coords.len(), |i, _| {
        let x = coords[i / 2];
        let base = if i % 2 == 0 { stretch.0 * x.x } else { stretch.1 * x.y };
        base + jitter * rng.random_range(-1.0..1.0)
    })
}

fn check_tangent(formulation: Formulation, options: &StateOptions, label: &str) {
    let params = params();
    let coords = if formulation.n_nodes() == 8 { distorted_q8() } else { distorted_q4() };
    let ops = build_operators(formulation, &coords, &params).unwrap();
    let history = ElementHistory::virgin(&ops);

    // (stretch, jitter, plastic expected): two elastic and two plastic
    // states per formulation, all well away from the yield surface.
    let cases = [
        ((1.0e-4, -0.5e-4), 2.0e-5, false),
        ((-0.8e-4, 1.1e-4), 3.0e-5, false),
        ((8.0e-3, -3.0e-3), 5.0e-4, true),
        ((-6.0e-3, 7.0e-3), 8.0e-4, true),
    ];
    for (k, (stretch, jitter, plastic)) in cases.iter().enumerate() {
        let u = state_dofs(&coords, *stretch, *jitter, 40 + k as u64);
        let result = element_state(&u, &history, &ops, options).unwrap();
        assert!(
            (result.diagnostics.active_set_size > 0) == *plastic,
            "{label} case {k}: expected plastic = {plastic}, active set {}",
            result.diagnostics.active_set_size
        );

        let f = |v: &DVector<f64>| {
            element_state(v, &history, &ops, options)
                .expect("state determination inside the FD stencil")
                .q_int
        };
        let jac = central_difference_jacobian(f, &u, FD_STEP);
        let err = (&jac - &result.k_e).norm() / result.k_e.norm();
        assert!(
            err <= TOL_TANGENT,
            "{label} case {k}: tangent off finite differences by {err:.2e}"
        );
        let asym = (&result.k_e - result.k_e.transpose()).norm() / result.k_e.norm();
        assert!(asym <= 1e-8, "{label} case {k}: tangent asymmetric by {asym:.2e}");
    }
}

#[test]
fn test_displacement_tangents() {
    let options = StateOptions::default();
    check_tangent(Formulation::DisplacementQ4, &options, "displacement Q4");
    check_tangent(Formulation::DisplacementQ8, &options, "displacement Q8");
}

#[test]
fn test_three_field_tangents() {
    let options = StateOptions::default();
    check_tangent(Formulation::HwQ4Identical, &options, "three-field Q4");
    check_tangent(Formulation::HwQ8D, &options, "three-field Q8");
    check_tangent(Formulation::HwNfQ4 { n_d: 4 }, &options, "nodal-force Q4");
}

#[test]
fn test_enhanced_strain_tangent() {
    check_tangent(Formulation::EsQ4, &StateOptions::default(), "enhanced strain");
}

#[test]
fn test_stress_compatible_tangent() {
    check_tangent(Formulation::HrQ4, &StateOptions::default(), "stress-compatible");
}

#[test]
fn test_multiplier_element_tangents_all_solvers() {
    for (solver, label) in [
        (CmSolver::ReturnMap, "multiplier element, return map"),
        (CmSolver::InteriorPoint(IpConfig::default()), "multiplier element, interior point"),
        (CmSolver::Sqp, "multiplier element, SQP"),
    ] {
        let options = StateOptions { cm_solver: solver, ..Default::default() };
        check_tangent(Formulation::CmQ4, &options, label);
    }
}
