//! Cross-checks of the dissipation support function against a sampled
//! supremum over the elastic domain, and of the yield value against an
//! eigen-decomposition route.

use gsm_material::{
    dissipation_increment, state_update, yield_value, yield_value_full, MaterialParams,
    MaterialPointState, PlaneAssumption,
};
use nalgebra::{Vector3, Vector4};
use oracles::{dissipation_sup_oracle, seeded_rng, yield_eigen, yield_eigen_full};
use rand::Rng;

fn params(plane: PlaneAssumption) -> MaterialParams {
    MaterialParams::new(70.0, 1.0 / 3.0, 0.243, 0.2, 0.1, plane)
}

#[test]
fn test_dissipation_matches_sampled_supremum() {
    let p = params(PlaneAssumption::PlaneStress);
    let mut rng = seeded_rng(0xd1_0001);
    for k in 0..25 {
        let deps: Vector3<f64> = Vector3::new(
            rng.random_range(-5e-3..5e-3),
            rng.random_range(-5e-3..5e-3),
            rng.random_range(-8e-3..8e-3),
        );
        let flow_norm = {
            let z = -(deps.x + deps.y);
            (deps.x * deps.x + deps.y * deps.y + z * z + 0.5 * deps.z * deps.z).sqrt()
        };
        // Clear margin on either side of the admissibility boundary.
        let da = p.von_mises_constant * flow_norm * rng.random_range(1.001..1.8);
        let kernel = dissipation_increment(&deps, da, &p);
        let oracle = dissipation_sup_oracle(&deps, da, &p, &mut rng);
        let err = (kernel - oracle).abs() / kernel.abs().max(1e-12);
        assert!(err <= 1e-9, "sample {k}: dissipation mismatch {err:.3e}");
    }
}

#[test]
fn test_dissipation_inadmissible_detected_by_both() {
    let p = params(PlaneAssumption::PlaneStress);
    let mut rng = seeded_rng(0xd1_0002);
    for _ in 0..10 {
        let deps: Vector3<f64> = Vector3::new(
            rng.random_range(1e-4..5e-3),
            rng.random_range(-5e-3..-1e-4),
            rng.random_range(-8e-3..8e-3),
        );
        let flow_norm = {
            let z = -(deps.x + deps.y);
            (deps.x * deps.x + deps.y * deps.y + z * z + 0.5 * deps.z * deps.z).sqrt()
        };
        let da = p.von_mises_constant * flow_norm * rng.random_range(0.2..0.999);
        assert!(dissipation_increment(&deps, da, &p).is_infinite());
        assert!(dissipation_sup_oracle(&deps, da, &p, &mut rng).is_infinite());
    }
}

#[test]
fn test_committed_increments_are_always_admissible() {
    // Increments produced by the update itself must lie in the domain of
    // the support function with finite dissipation sigma_y0 * c * dl.
    let p = params(PlaneAssumption::PlaneStress);
    let mut rng = seeded_rng(0xd1_0003);
    for _ in 0..20 {
        let eps = Vector3::new(
            rng.random_range(-8e-3..8e-3),
            rng.random_range(-8e-3..8e-3),
            rng.random_range(-1.2e-2..1.2e-2),
        );
        let r = state_update(&eps, &MaterialPointState::virgin(), &p).unwrap();
        let deps = r.new_state.plastic_strain;
        let da = r.new_state.isotropic_var;
        let d = dissipation_increment(&deps, da, &p);
        assert!(d.is_finite(), "update produced an inadmissible increment");
        let expected = p.yield_stress * p.von_mises_constant * r.plastic_multiplier;
        assert!((d - expected).abs() <= 1e-12 * expected.max(1e-12));
    }
}

fn random_state<R: Rng>(rng: &mut R) -> MaterialPointState {
    MaterialPointState {
        plastic_strain: Vector3::new(
            rng.random_range(-5e-3..5e-3),
            rng.random_range(-5e-3..5e-3),
            rng.random_range(-8e-3..8e-3),
        ),
        isotropic_var: rng.random_range(0.0..1e-2),
        kinematic_var: Vector3::new(
            rng.random_range(-5e-3..5e-3),
            rng.random_range(-5e-3..5e-3),
            rng.random_range(-8e-3..8e-3),
        ),
    }
}

#[test]
fn test_yield_value_matches_eigen_route() {
    let mut rng = seeded_rng(0xd1_0004);
    for plane in [PlaneAssumption::PlaneStress, PlaneAssumption::PlaneStrain] {
        let p = params(plane);
        for k in 0..50 {
            let sigma = Vector3::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.3..0.3),
            );
            let state = random_state(&mut rng);
            let a = yield_value(&sigma, &state, &p);
            let b = yield_eigen(&sigma, &state, &p);
            let err = (a - b).abs() / a.abs().max(p.yield_stress);
            assert!(err <= 1e-12, "{plane:?} sample {k}: yield mismatch {err:.3e}");
        }
    }
}

#[test]
fn test_yield_value_full_matches_eigen_route() {
    let mut rng = seeded_rng(0xd1_0005);
    let p = params(PlaneAssumption::PlaneStress);
    for k in 0..50 {
        let sigma4 = Vector4::new(
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.4..0.4),
            rng.random_range(-0.3..0.3),
        );
        let state = random_state(&mut rng);
        let a = yield_value_full(&sigma4, &state, &p);
        let b = yield_eigen_full(&sigma4, &state, &p);
        let err = (a - b).abs() / a.abs().max(p.yield_stress);
        assert!(err <= 1e-12, "sample {k}: yield mismatch {err:.3e}");
    }
}
