//! Dissipation recomputed as the support function of the elastic domain.
//!
//! The dissipation of an increment is the supremum of the conjugate-force
//! power over the elastic domain. With the kinematic-variable increment
//! tied to the plastic strain increment, the back-stress terms cancel and
//! the supremum runs over the deviatoric relative stress (a ball of radius
//! `c (sigma_y0 - q_i)`) and the isotropic force `q_i <= sigma_y0`. This
//! oracle evaluates that supremum numerically: a grid over `q_i`, and for
//! each radius random deviatoric directions polished by one projected
//! ascent step (exact for a linear functional on a ball).

use gsm_material::MaterialParams;
use nalgebra::{Vector3, Vector4};
use rand::Rng;

fn tracefree4(v: &Vector3<f64>) -> Vector4<f64> {
    Vector4::new(v.x, v.y, -(v.x + v.y), v.z)
}

/// Tensor pairing of a deviatoric stress direction (tensor components) with
/// an engineering strain increment.
fn pairing(zeta: &Vector4<f64>, deps_eng: &Vector4<f64>) -> f64 {
    zeta.x * deps_eng.x + zeta.y * deps_eng.y + zeta.z * deps_eng.z + zeta.w * deps_eng.w
}

fn random_unit_deviatoric<R: Rng>(rng: &mut R) -> Vector4<f64> {
    loop {
        let mut z = Vector4::new(
            crate::normal_sample(rng),
            crate::normal_sample(rng),
            crate::normal_sample(rng),
            crate::normal_sample(rng),
        );
        let m = (z.x + z.y + z.z) / 3.0;
        z.x -= m;
        z.y -= m;
        z.z -= m;
        let n = (z.x * z.x + z.y * z.y + z.z * z.z + 2.0 * z.w * z.w).sqrt();
        if n > 1e-8 {
            return z / n;
        }
    }
}

/// Supremum of the boundary-stress power for a plastic strain increment
/// (in-plane engineering components, trace-free by storage) and an
/// isotropic variable increment. Returns infinity when the increment is
/// not in the domain of the support function.
pub fn dissipation_sup_oracle<R: Rng>(
    deps_p: &Vector3<f64>,
    dalpha_i: f64,
    params: &MaterialParams,
    rng: &mut R,
) -> f64 {
    let c = params.von_mises_constant;
    let sy = params.yield_stress;
    let deps4 = tracefree4(deps_p);

    // Directional supremum over the unit deviatoric ball by sampling plus a
    // single projected ascent polish (the maximizer of a linear functional
    // over a ball lies along the projected gradient).
    let n_dirs = 512;
    let mut best_dir_value: f64 = 0.0;
    for _ in 0..n_dirs {
        let d = random_unit_deviatoric(rng);
        best_dir_value = best_dir_value.max(pairing(&d, &deps4));
    }
    // Ascent polish: the gradient of the pairing w.r.t. the tensor direction
    // is the tensor form of the strain increment; project and normalize.
    let grad = Vector4::new(deps4.x, deps4.y, deps4.z, 0.5 * deps4.w);
    let gnorm = (grad.x * grad.x + grad.y * grad.y + grad.z * grad.z + 2.0 * grad.w * grad.w).sqrt();
    if gnorm > 0.0 {
        best_dir_value = best_dir_value.max(pairing(&(grad / gnorm), &deps4));
    }

    // The power at fixed q_i is linear in q_i; scan a grid including both
    // endpoints, then probe a much lower bound to detect unboundedness.
    let value_at = |q_i: f64| -> f64 { c * (sy - q_i) * best_dir_value + q_i * dalpha_i };
    let mut sup = f64::NEG_INFINITY;
    let lo = -1e3 * sy;
    for k in 0..=100 {
        let q_i = lo + (sy - lo) * (k as f64) / 100.0;
        sup = sup.max(value_at(q_i));
    }
    let probe = value_at(-1e9 * sy);
    if probe > sup.max(0.0) * (1.0 + 1e-9) + 1e-30 {
        return f64::INFINITY;
    }
    sup
}

#[cfg(test)]
mod tests {
    use super::*;
    use gsm_material::PlaneAssumption;

    fn params() -> MaterialParams {
        MaterialParams::new(70.0, 1.0 / 3.0, 0.243, 0.2, 0.0, PlaneAssumption::PlaneStress)
    }

    #[test]
    fn test_zero_increment_zero_dissipation() {
        let mut rng = crate::seeded_rng(1);
        let d = dissipation_sup_oracle(&Vector3::zeros(), 0.0, &params(), &mut rng);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn test_inadmissible_is_unbounded() {
        let mut rng = crate::seeded_rng(2);
        let deps = Vector3::new(1e-3, -5e-4, 2e-4);
        let d = dissipation_sup_oracle(&deps, 0.0, &params(), &mut rng);
        assert!(d.is_infinite(), "zero isotropic increment with flow must be inadmissible");
    }

    #[test]
    fn test_admissible_value_matches_closed_form() {
        let mut rng = crate::seeded_rng(3);
        let p = params();
        let deps = Vector3::new(1e-3, -5e-4, 2e-4);
        let deps4 = tracefree4(&deps);
        let norm = (deps4.x * deps4.x
            + deps4.y * deps4.y
            + deps4.z * deps4.z
            + 0.5 * deps4.w * deps4.w)
            .sqrt();
        let dalpha_i = p.von_mises_constant * norm * 1.5;
        let d = dissipation_sup_oracle(&deps, dalpha_i, &p, &mut rng);
        let expected = p.yield_stress * dalpha_i;
        assert!(
            (d - expected).abs() <= 1e-6 * expected,
            "sup {d:e} vs closed form {expected:e}"
        );
    }
}
