//! Committed element history: material states at the element's sites plus
//! formulation-specific warm-start data.

use crate::{ElementError, ElementOperators, Formulation};
use gsm_material::{site_saddle, MaterialPointState};
use nalgebra::{DVector, Vector3};

/// Converged data carried between increments for one element.
#[derive(Debug, Clone)]
pub struct ElementHistory {
    /// Material states, one per history site (quadrature points, or
    /// subdomains for the nodal-force element).
    pub sites: Vec<MaterialPointState>,
    /// Committed stress parameters (stress-carrying formulations).
    pub beta: Option<DVector<f64>>,
    /// Committed deformational nodal forces (nodal-force element).
    pub q_lambda: Option<DVector<f64>>,
    /// Committed discrete plastic strain parameters (complementary mixed
    /// element); kept consistent with `sites` by the state functions.
    pub ep_hat: Option<DVector<f64>>,
}

impl ElementHistory {
    /// Unloaded history matching the operators' site layout.
    pub fn virgin(ops: &ElementOperators) -> Self {
        let n_sigma = ops.n_stress_modes();
        let (q_lambda, ep_hat) = match ops.formulation {
            Formulation::CmQ4 => (None, Some(DVector::zeros(n_sigma))),
            Formulation::HwQ8D | Formulation::HwNfQ4 { .. } => {
                (Some(DVector::zeros(n_sigma)), None)
            }
            _ => (None, None),
        };
        Self {
            sites: vec![MaterialPointState::virgin(); ops.n_history_sites()],
            beta: None,
            q_lambda,
            ep_hat,
        }
    }
}

/// Discrete plastic strain parameters: quadrature pairing of the stress modes
/// with the plastic contribution to the in-plane strain of each committed
/// state. Evaluated through the saddle response at zero stress so the
/// out-of-plane condensation is exact for both plane assumptions.
pub(crate) fn plastic_strain_parameters(
    ops: &ElementOperators,
    sites: &[MaterialPointState],
) -> Result<DVector<f64>, ElementError> {
    let mut out = DVector::zeros(ops.n_stress_modes());
    for (site, state) in ops.quad_sites.iter().zip(sites) {
        let eps_p = site_saddle(&Vector3::zeros(), 0.0, state, &ops.material)?.eps;
        out += site.weight * site.stress_modes().transpose() * eps_p;
    }
    Ok(out)
}
