//! Single entry point routing an element state request to the formulation's
//! solver, with per-run options for the complementary solver variant and the
//! relaxed flux-residual treatment.

use crate::{
    cm_state_ip, cm_state_return_map, cm_state_sqp, displacement_element_state, es_state,
    hr_state, hr_state_relaxed, hw_identical_state, hw_nodal_force_state, ElementError,
    ElementHistory, ElementOperators, ElementResult, Formulation, IpConfig,
};
use nalgebra::DVector;

/// Local solver used for the complementary mixed element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CmSolver {
    ReturnMap,
    InteriorPoint(IpConfig),
    Sqp,
}

impl Default for CmSolver {
    fn default() -> Self {
        CmSolver::ReturnMap
    }
}

/// Options shared by every element state call in a run.
#[derive(Debug, Clone, Copy, Default)]
pub struct StateOptions {
    pub cm_solver: CmSolver,
    /// Use the one-update flux iteration for the stress-compatible element,
    /// carrying the unconverged remainder as a residual correction.
    pub hr_relaxed: bool,
}

pub fn element_state(
    u_e: &DVector<f64>,
    history: &ElementHistory,
    ops: &ElementOperators,
    options: &StateOptions,
) -> Result<ElementResult, ElementError> {
    match ops.formulation {
        Formulation::DisplacementQ4 | Formulation::DisplacementQ8 => {
            displacement_element_state(u_e, history, ops)
        }
        Formulation::HwQ4Identical => hw_identical_state(u_e, history, ops),
        Formulation::EsQ4 => es_state(u_e, history, ops),
        Formulation::CmQ4 => match options.cm_solver {
            CmSolver::ReturnMap => cm_state_return_map(u_e, history, ops),
            CmSolver::InteriorPoint(config) => cm_state_ip(u_e, history, ops, &config),
            CmSolver::Sqp => cm_state_sqp(u_e, history, ops),
        },
        Formulation::HrQ4 | Formulation::HrQ4Deficient => {
            if options.hr_relaxed {
                hr_state_relaxed(u_e, history, ops)
            } else {
                hr_state(u_e, history, ops)
            }
        }
        Formulation::HwQ8D | Formulation::HwNfQ4 { .. } => {
            hw_nodal_force_state(u_e, history, ops)
        }
    }
}
