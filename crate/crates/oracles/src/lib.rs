//! Independent reference implementations used to cross-check the numerical
//! kernels. Each oracle rebuilds what it needs from first principles (Lame
//! constants, tensor algebra) rather than calling the code under test, so a
//! shared bug cannot hide.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod dissipation_sup;
mod energy_min;
mod yield_eigen;

pub use dissipation_sup::dissipation_sup_oracle;
pub use energy_min::{energy_minimization_update, incremental_energy_at, EnergyMinResult};
pub use yield_eigen::{yield_eigen, yield_eigen_full};

/// Deterministic generator for reproducible sampling in tests.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Central-difference Jacobian of a vector map, one fixed step for all
/// coordinates. The caller chooses the step from the problem scale
/// (a common choice is `1e-7 * max(norm(x), scale)`).
pub fn central_difference_jacobian<F>(f: F, x: &DVector<f64>, step: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    assert!(step > 0.0, "finite-difference step must be positive");
    let n = x.len();
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, n);
    for j in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += step;
        xm[j] -= step;
        let fp = f(&xp);
        let fm = f(&xm);
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * step);
        }
    }
    jac
}

/// Standard normal sample by the Box-Muller transform.
pub(crate) fn normal_sample<R: rand::Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
