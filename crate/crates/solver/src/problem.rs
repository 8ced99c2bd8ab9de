//! Incremental-iterative driver: boundary-condition management, global
//! assembly with a parallel element map and deterministic sequential
//! accumulation, Newton iterations on the free degrees of freedom, and
//! increment bisection with atomic history commits.

use crate::{
    Mesh, SkylineMatrix, SolveError, ARMIJO_SLOPE, GLOBAL_TOL_REL, LINE_SEARCH_CUTS,
    MAX_BISECTION_DEPTH, MAX_GLOBAL_ITER,
};
use elements::{
    build_operators, element_state, ElementError, ElementHistory, ElementOperators,
    ElementResult, Formulation, StateOptions,
};
use gsm_material::MaterialParams;
use nalgebra::DVector;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// What the load factor scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    /// External nodal forces grow with the factor; prescribed
    /// displacements stay fixed (usually zero).
    Load,
    /// Prescribed displacements grow with the factor; external forces
    /// stay fixed (usually zero).
    Displacement,
}

/// One nodal degree of freedom with its value at load factor one.
#[derive(Debug, Clone, Copy)]
pub struct DofValue {
    pub node: usize,
    /// 0 = x, 1 = y.
    pub component: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BoundaryConditions {
    /// Prescribed displacement DOFs (zeros pin, nonzeros drive).
    pub prescribed: Vec<DofValue>,
    /// External nodal forces.
    pub forces: Vec<DofValue>,
}

/// Element-loop execution. `Parallel` needs the `parallel` feature; without
/// it the loop silently runs sequentially (results are bit-identical either
/// way, so the mode only affects wall time).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecutionMode {
    Sequential,
    Parallel,
}

#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub formulation: Formulation,
    pub material: MaterialParams,
    pub state_options: StateOptions,
    pub control: Control,
    pub execution: ExecutionMode,
}

/// Committed solution state; replaced atomically when an increment is
/// accepted, so a failed attempt never leaks a partial update.
#[derive(Debug, Clone)]
pub struct GlobalState {
    pub u: DVector<f64>,
    pub histories: Vec<ElementHistory>,
    pub factor: f64,
}

/// One accepted increment.
#[derive(Debug, Clone)]
pub struct IncrementReport {
    pub factor: f64,
    /// Newton iterations summed over all committed sub-steps.
    pub global_iters: usize,
    /// Committed sub-steps (1 when no bisection was needed).
    pub substeps: usize,
    /// Largest yield value over all element sites at the committed state.
    pub max_yield: f64,
    /// Largest |multiplier x yield| complementarity product.
    pub max_complementarity: f64,
    /// Global internal force at the committed state, residual corrections
    /// folded in; constrained entries are the reactions.
    pub q_int: DVector<f64>,
}

/// Assembled response at one displacement state.
pub struct Assembly {
    pub q: DVector<f64>,
    pub k: SkylineMatrix,
    pub results: Vec<ElementResult>,
    pub max_yield: f64,
    pub max_complementarity: f64,
}

pub struct Problem {
    pub mesh: Mesh,
    pub config: AnalysisConfig,
    ops: Vec<ElementOperators>,
    /// Free DOFs in ascending order.
    free: Vec<usize>,
    /// Global DOF -> free index.
    free_index: Vec<Option<usize>>,
    /// Constrained DOFs with their values at factor one.
    prescribed: Vec<(usize, f64)>,
    f_ext_unit: DVector<f64>,
    skyline_template: SkylineMatrix,
}

impl Problem {
    pub fn new(
        mesh: Mesh,
        config: AnalysisConfig,
        bcs: &BoundaryConditions,
    ) -> Result<Self, SolveError> {
        mesh.validate(config.formulation.n_nodes())?;
        let n_dofs = mesh.n_dofs();

        let mut prescribed: Vec<(usize, f64)> = Vec::new();
        let mut seen = vec![false; n_dofs];
        for p in &bcs.prescribed {
            if p.component > 1 || p.node >= mesh.n_nodes() {
                return Err(SolveError::BadBoundary {
                    reason: format!("prescribed DOF ({}, {}) out of range", p.node, p.component),
                });
            }
            let dof = 2 * p.node + p.component;
            if seen[dof] {
                return Err(SolveError::BadBoundary {
                    reason: format!("DOF ({}, {}) prescribed twice", p.node, p.component),
                });
            }
            seen[dof] = true;
            prescribed.push((dof, p.value));
        }
        prescribed.sort_unstable_by_key(|(dof, _)| *dof);
        if prescribed.is_empty() {
            return Err(SolveError::BadBoundary {
                reason: "no prescribed DOFs; the system has rigid modes".into(),
            });
        }

        let mut f_ext_unit = DVector::zeros(n_dofs);
        for f in &bcs.forces {
            if f.component > 1 || f.node >= mesh.n_nodes() {
                return Err(SolveError::BadBoundary {
                    reason: format!("force DOF ({}, {}) out of range", f.node, f.component),
                });
            }
            f_ext_unit[2 * f.node + f.component] += f.value;
        }

        let free: Vec<usize> = (0..n_dofs).filter(|d| !seen[*d]).collect();
        let mut free_index = vec![None; n_dofs];
        for (k, d) in free.iter().enumerate() {
            free_index[*d] = Some(k);
        }

        let ops: Vec<ElementOperators> = mesh
            .connectivities
            .iter()
            .map(|conn| {
                let coords: Vec<_> = conn.iter().map(|n| mesh.coords[*n]).collect();
                build_operators(config.formulation, &coords, &config.material)
                    .map_err(ElementError::from)
            })
            .collect::<Result<_, _>>()?;

        let groups: Vec<Vec<usize>> = mesh
            .connectivities
            .iter()
            .map(|conn| {
                conn.iter()
                    .flat_map(|n| [2 * n, 2 * n + 1])
                    .filter_map(|d| free_index[d])
                    .collect()
            })
            .collect();
        let skyline_template = SkylineMatrix::from_couplings(free.len(), &groups);

        Ok(Self {
            mesh,
            config,
            ops,
            free,
            free_index,
            prescribed,
            f_ext_unit,
            skyline_template,
        })
    }

    pub fn initial_state(&self) -> GlobalState {
        GlobalState {
            u: DVector::zeros(self.mesh.n_dofs()),
            histories: self.ops.iter().map(ElementHistory::virgin).collect(),
            factor: 0.0,
        }
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn operators(&self) -> &[ElementOperators] {
        &self.ops
    }

    fn gather(&self, e: usize, u: &DVector<f64>) -> DVector<f64> {
        let conn = &self.mesh.connectivities[e];
        let mut u_e = DVector::zeros(2 * conn.len());
        for (i, n) in conn.iter().enumerate() {
            u_e[2 * i] = u[2 * n];
            u_e[2 * i + 1] = u[2 * n + 1];
        }
        u_e
    }

    fn element_results(
        &self,
        u: &DVector<f64>,
        histories: &[ElementHistory],
    ) -> Result<Vec<ElementResult>, SolveError> {
        let run_one = |e: usize| -> Result<ElementResult, SolveError> {
            let u_e = self.gather(e, u);
            element_state(&u_e, &histories[e], &self.ops[e], &self.config.state_options)
                .map_err(SolveError::from)
        };
        #[cfg(feature = "parallel")]
        if matches!(self.config.execution, ExecutionMode::Parallel) {
            return (0..self.ops.len()).into_par_iter().map(run_one).collect();
        }
        (0..self.ops.len()).map(run_one).collect()
    }

    /// Assemble the global response at a displacement state. The element
    /// map may run in parallel; accumulation is sequential in element
    /// order, so results are bit-identical across execution modes.
    pub fn assemble(
        &self,
        u: &DVector<f64>,
        histories: &[ElementHistory],
    ) -> Result<Assembly, SolveError> {
        let results = self.element_results(u, histories)?;
        let mut q = DVector::zeros(self.mesh.n_dofs());
        let mut k = self.skyline_template.clone();
        let mut max_yield = f64::NEG_INFINITY;
        let mut max_comp: f64 = 0.0;
        for (e, result) in results.iter().enumerate() {
            let conn = &self.mesh.connectivities[e];
            let dofs: Vec<usize> = conn.iter().flat_map(|n| [2 * n, 2 * n + 1]).collect();
            for (i_loc, dof) in dofs.iter().enumerate() {
                q[*dof] += result.q_int[i_loc];
                if let Some(corr) = &result.residual_correction {
                    q[*dof] += corr[i_loc];
                }
            }
            for (i_loc, di) in dofs.iter().enumerate() {
                let Some(fi) = self.free_index[*di] else { continue };
                for (j_loc, dj) in dofs.iter().enumerate() {
                    if let Some(fj) = self.free_index[*dj] {
                        if fi <= fj {
                            k.add(fi, fj, result.k_e[(i_loc, j_loc)]);
                        }
                    }
                }
            }
            max_yield = max_yield.max(result.diagnostics.max_yield);
            max_comp = max_comp.max(result.diagnostics.max_complementarity);
        }
        Ok(Assembly { q, k, results, max_yield, max_complementarity: max_comp })
    }

    fn free_residual(&self, f_ext: &DVector<f64>, q: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.free.len(), |k, _| {
            let d = self.free[k];
            f_ext[d] - q[d]
        })
    }

    /// Newton iteration at a fixed load factor, damped by a backtracking
    /// line search on the residual norm. On success the state is committed
    /// (displacements, histories, factor) and the accepted assembly is
    /// returned with the iteration count.
    fn newton_at(
        &self,
        state: &mut GlobalState,
        factor: f64,
    ) -> Result<(Assembly, usize), SolveError> {
        let mut u = state.u.clone();
        for (dof, value) in &self.prescribed {
            u[*dof] = factor * value;
        }
        let f_ext = factor * &self.f_ext_unit;

        // Working histories: committed plastic states with warm-start
        // fields (stress parameters, multiplier guesses) advanced to the
        // last accepted iterate. Formulations that converge their local
        // solves only get faster; the relaxed stress-compatible variant
        // needs the advancing linearization point to be a monolithic
        // Newton iteration on displacements and stress parameters jointly.
        let mut hist = state.histories.clone();
        let mut assembly = self.assemble(&u, &hist)?;
        let mut r = self.free_residual(&f_ext, &assembly.q);
        // Residual reference: the external force scale under load control,
        // the initial imbalance produced by the prescribed motion under
        // displacement control.
        let r_ref = match self.config.control {
            Control::Load => self.free_residual(&f_ext, &DVector::zeros(u.len())).norm(),
            Control::Displacement => r.norm(),
        }
        .max(1e-30);

        let mut iters = 0;
        loop {
            if r.norm() <= GLOBAL_TOL_REL * r_ref {
                state.u = u;
                state.histories =
                    assembly.results.iter().map(|res| res.trial_history.clone()).collect();
                state.factor = factor;
                return Ok((assembly, iters));
            }
            if iters >= MAX_GLOBAL_ITER {
                return Err(SolveError::NoConvergence {
                    factor,
                    iterations: iters,
                    residual: r.norm() / r_ref,
                });
            }
            iters += 1;
            let mut k = assembly.k.clone();
            k.factorize()?;
            let du = k.solve(&r);

            // Backtracking on the residual norm. Element state solves can
            // legitimately fail at a wild trial point; such failures just
            // shorten the step. A trial that beats the Armijo bound is
            // taken immediately, otherwise the best strict decrease found;
            // no decrease at all means the increment is too large.
            let r_norm = r.norm();
            let mut accepted = None;
            let mut best: Option<(f64, DVector<f64>, Assembly, DVector<f64>)> = None;
            let mut last_err = None;
            let mut alpha = 1.0;
            for _ in 0..=LINE_SEARCH_CUTS {
                let mut u_t = u.clone();
                for (k_idx, d) in self.free.iter().enumerate() {
                    u_t[*d] += alpha * du[k_idx];
                }
                match self.assemble(&u_t, &hist) {
                    Ok(a) => {
                        let r_t = self.free_residual(&f_ext, &a.q);
                        let m = r_t.norm();
                        if m <= (1.0 - ARMIJO_SLOPE * alpha) * r_norm {
                            accepted = Some((u_t, a, r_t));
                            break;
                        }
                        if best.as_ref().is_none_or(|(bm, ..)| m < *bm) {
                            best = Some((m, u_t, a, r_t));
                        }
                    }
                    Err(err) if Self::retryable(&err) => last_err = Some(err),
                    Err(err) => return Err(err),
                }
                alpha *= 0.5;
            }
            match accepted.or_else(|| {
                best.and_then(|(m, u_t, a, r_t)| (m < r_norm).then_some((u_t, a, r_t)))
            }) {
                Some((u_t, a, r_t)) => {
                    u = u_t;
                    for (h, res) in hist.iter_mut().zip(&a.results) {
                        h.beta = res.trial_history.beta.clone();
                        h.q_lambda = res.trial_history.q_lambda.clone();
                    }
                    assembly = a;
                    r = r_t;
                }
                None => {
                    return Err(last_err.unwrap_or(SolveError::NoConvergence {
                        factor,
                        iterations: iters,
                        residual: r_norm / r_ref,
                    }));
                }
            }
        }
    }

    /// A failure that a smaller increment can plausibly cure: iteration
    /// caps and state-dependent matrices that degenerate at wild trial
    /// points. Structural errors (bad geometry, singular pairings built
    /// from the mesh alone, invalid parameters) propagate immediately
    /// instead of being bisected away.
    fn retryable(err: &SolveError) -> bool {
        matches!(
            err,
            SolveError::NoConvergence { .. }
                | SolveError::SingularTangent { .. }
                | SolveError::Element(ElementError::NoConvergence { .. })
                | SolveError::Element(ElementError::ActiveSetCycling { .. })
                | SolveError::Element(ElementError::SingularFlexibility)
                | SolveError::Element(ElementError::SingularEnhancedStiffness)
                | SolveError::Element(ElementError::Material(
                    gsm_material::MaterialError::NoConvergence { .. },
                ))
        )
    }

    /// Advance the committed state to `target` factor, bisecting the
    /// increment up to `MAX_BISECTION_DEPTH` times on convergence failures.
    pub fn solve_increment(
        &self,
        state: &mut GlobalState,
        target: f64,
    ) -> Result<IncrementReport, SolveError> {
        fn advance(
            problem: &Problem,
            state: &mut GlobalState,
            target: f64,
            depth: usize,
            iters: &mut usize,
            substeps: &mut usize,
        ) -> Result<(Assembly, usize), SolveError> {
            let from = state.factor;
            match problem.newton_at(state, target) {
                Ok((assembly, n)) => {
                    *iters += n;
                    *substeps += 1;
                    Ok((assembly, n))
                }
                Err(err) if Problem::retryable(&err) && depth < MAX_BISECTION_DEPTH => {
                    let mid = 0.5 * (from + target);
                    advance(problem, state, mid, depth + 1, iters, substeps)?;
                    advance(problem, state, target, depth + 1, iters, substeps)
                }
                Err(err) => Err(err),
            }
        }

        let mut iters = 0;
        let mut substeps = 0;
        let (assembly, _) = advance(self, state, target, 0, &mut iters, &mut substeps)?;
        Ok(IncrementReport {
            factor: target,
            global_iters: iters,
            substeps,
            max_yield: assembly.max_yield,
            max_complementarity: assembly.max_complementarity,
            q_int: assembly.q,
        })
    }

    /// Run a factor schedule, invoking the observer after each committed
    /// increment.
    pub fn run(
        &self,
        state: &mut GlobalState,
        factors: &[f64],
        mut on_step: impl FnMut(&GlobalState, &IncrementReport),
    ) -> Result<(), SolveError> {
        for factor in factors {
            let report = self.solve_increment(state, *factor)?;
            on_step(state, &report);
        }
        Ok(())
    }

    /// Re-evaluate every element at a committed state. At a converged,
    /// committed state this reproduces the stresses without any plastic
    /// increment, which is what field output and audits want.
    pub fn snapshot(&self, state: &GlobalState) -> Result<Vec<ElementResult>, SolveError> {
        self.element_results(&state.u, &state.histories)
    }
}
