//! Every analytic derivative in the kernel is checked against central
//! differences: the consistent tangent of the strain-driven update, the
//! consistent compliance of the stress-driven update, and the full bordered
//! derivative block of the site saddle response.

use gsm_material::{
    inverse_state_update, site_saddle, state_update, MaterialParams, MaterialPointState,
    PlaneAssumption,
};
use nalgebra::{DVector, Matrix3, Vector3};
use oracles::{central_difference_jacobian, seeded_rng};
use rand::Rng;

const FD_STEP: f64 = 1e-7;
const FD_TOL: f64 = 1e-5;

fn params(plane: PlaneAssumption) -> MaterialParams {
    MaterialParams::new(70.0, 1.0 / 3.0, 0.243, 0.2, 0.1, plane)
}

/// Random strain that lands robustly inside one branch: the plastic
/// multiplier is either exactly zero or large enough that a finite
/// difference of step `FD_STEP` cannot straddle the yield surface.
fn robust_sample<R: Rng>(
    rng: &mut R,
    p: &MaterialParams,
    want_plastic: bool,
) -> (Vector3<f64>, MaterialPointState) {
    loop {
        let eps = Vector3::new(
            rng.random_range(-8e-3..8e-3),
            rng.random_range(-8e-3..8e-3),
            rng.random_range(-1.2e-2..1.2e-2),
        );
        let prior = if rng.random_bool(0.5) {
            MaterialPointState::virgin()
        } else {
            state_update(
                &Vector3::new(
                    rng.random_range(-6e-3..6e-3),
                    rng.random_range(-6e-3..6e-3),
                    rng.random_range(-9e-3..9e-3),
                ),
                &MaterialPointState::virgin(),
                p,
            )
            .unwrap()
            .new_state
        };
        let r = state_update(&eps, &prior, p).unwrap();
        let robust_plastic = r.plastic_multiplier > 1e-5;
        let robust_elastic = {
            // Distance to the surface in strain units must exceed the step.
            let phi = gsm_material::yield_value(&r.stress, &r.new_state, p);
            r.plastic_multiplier == 0.0 && phi < -100.0 * FD_STEP * p.youngs_modulus
        };
        if (want_plastic && robust_plastic) || (!want_plastic && robust_elastic) {
            return (eps, prior);
        }
    }
}

fn rel_frobenius(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn tangent_suite(plane: PlaneAssumption, seed: u64) {
    let p = params(plane);
    let mut rng = seeded_rng(seed);
    for want_plastic in [false, true] {
        for k in 0..10 {
            let (eps, prior) = robust_sample(&mut rng, &p, want_plastic);
            let r = state_update(&eps, &prior, &p).unwrap();

            let f = |x: &DVector<f64>| {
                let e = Vector3::new(x[0], x[1], x[2]);
                let s = state_update(&e, &prior, &p).unwrap().stress;
                DVector::from_vec(vec![s.x, s.y, s.z])
            };
            let x0 = DVector::from_vec(vec![eps.x, eps.y, eps.z]);
            let jac = central_difference_jacobian(f, &x0, FD_STEP);
            let fd = Matrix3::from_fn(|i, j| jac[(i, j)]);

            let err = rel_frobenius(&fd, &r.tangent);
            assert!(
                err <= FD_TOL,
                "{plane:?} plastic={want_plastic} sample {k}: tangent FD error {err:.3e}"
            );

            let asym = (r.tangent - r.tangent.transpose()).norm() / r.tangent.norm();
            assert!(asym <= 1e-12, "tangent asymmetry {asym:.3e}");
        }
    }
}

#[test]
fn test_update_tangent_matches_finite_differences_plane_stress() {
    tangent_suite(PlaneAssumption::PlaneStress, 0xfd_0001);
}

#[test]
fn test_update_tangent_matches_finite_differences_plane_strain() {
    tangent_suite(PlaneAssumption::PlaneStrain, 0xfd_0002);
}

fn compliance_suite(plane: PlaneAssumption, seed: u64) {
    let p = params(plane);
    let mut rng = seeded_rng(seed);
    for k in 0..20 {
        // Reach a robustly plastic stress through the forward update, then
        // differentiate the inverse map around it.
        let (eps, prior) = robust_sample(&mut rng, &p, k % 2 == 0);
        let fwd = state_update(&eps, &prior, &p).unwrap();
        let sigma = fwd.stress;

        let (_, _, compliance) = inverse_state_update(&sigma, &prior, &p).unwrap();

        let f = |x: &DVector<f64>| {
            let s = Vector3::new(x[0], x[1], x[2]);
            let (e, _, _) = inverse_state_update(&s, &prior, &p).unwrap();
            DVector::from_vec(vec![e.x, e.y, e.z])
        };
        let x0 = DVector::from_vec(vec![sigma.x, sigma.y, sigma.z]);
        // Stress-space step scaled to the yield stress.
        let jac = central_difference_jacobian(f, &x0, FD_STEP * p.yield_stress);
        let fd = Matrix3::from_fn(|i, j| jac[(i, j)]);

        let err = rel_frobenius(&fd, &compliance);
        assert!(err <= FD_TOL, "{plane:?} sample {k}: compliance FD error {err:.3e}");

        let asym = (compliance - compliance.transpose()).norm() / compliance.norm();
        assert!(asym <= 1e-12, "compliance asymmetry {asym:.3e}");
    }
}

#[test]
fn test_inverse_compliance_matches_finite_differences_plane_stress() {
    compliance_suite(PlaneAssumption::PlaneStress, 0xfd_0003);
}

#[test]
fn test_inverse_compliance_matches_finite_differences_plane_strain() {
    compliance_suite(PlaneAssumption::PlaneStrain, 0xfd_0004);
}

fn saddle_block_suite(plane: PlaneAssumption, seed: u64) {
    let p = params(plane);
    let mut rng = seeded_rng(seed);
    let prior = MaterialPointState::virgin();
    for k in 0..20 {
        let sigma = Vector3::new(
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.2..0.2),
        );
        let dl = rng.random_range(1e-4..5e-3);
        let resp = site_saddle(&sigma, dl, &prior, &p).unwrap();

        // Differentiate (eps, phi) jointly in (sigma, dl): the Jacobian must
        // be the symmetric bordered block [[j_ss, m], [m^T, -h_eff]].
        let f = |x: &DVector<f64>| {
            let s = Vector3::new(x[0], x[1], x[2]);
            let r = site_saddle(&s, x[3], &prior, &p).unwrap();
            DVector::from_vec(vec![r.eps.x, r.eps.y, r.eps.z, r.phi])
        };
        let x0 = DVector::from_vec(vec![sigma.x, sigma.y, sigma.z, dl]);
        // Larger step than the pure-stress suites: the plane-strain branch
        // resolves an inner Newton to ~1e-14, and that noise must stay well
        // below the difference quotient. dl >= 1e-4 keeps dl - step > 0.
        let jac = central_difference_jacobian(f, &x0, 1e-6 * p.yield_stress);

        for i in 0..3 {
            for j in 0..3 {
                let err = (jac[(i, j)] - resp.j_ss[(i, j)]).abs() / resp.j_ss.norm();
                assert!(err <= FD_TOL, "sample {k}: j_ss[{i}{j}] FD error {err:.3e}");
            }
            let m_scale = resp.m.norm().max(1e-6);
            let err_col = (jac[(i, 3)] - resp.m[i]).abs() / m_scale;
            let err_row = (jac[(3, i)] - resp.m[i]).abs() / m_scale;
            assert!(err_col <= FD_TOL, "sample {k}: m column FD error {err_col:.3e}");
            assert!(err_row <= FD_TOL, "sample {k}: m row FD error {err_row:.3e}");
        }
        let err_h = (jac[(3, 3)] + resp.h_eff).abs() / resp.h_eff;
        assert!(err_h <= FD_TOL, "{plane:?} sample {k}: h_eff FD error {err_h:.3e}");
    }
}

#[test]
fn test_site_saddle_block_matches_finite_differences_plane_stress() {
    saddle_block_suite(PlaneAssumption::PlaneStress, 0xfd_0005);
}

#[test]
fn test_site_saddle_block_matches_finite_differences_plane_strain() {
    saddle_block_suite(PlaneAssumption::PlaneStrain, 0xfd_0006);
}
