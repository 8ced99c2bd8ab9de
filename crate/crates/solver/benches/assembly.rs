//! Sequential vs parallel global assembly on a structured mesh. The two
//! modes produce bit-identical results; this bench measures what the
//! element-loop fan-out buys on multi-core hardware.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gsm_material::{MaterialParams, PlaneAssumption};
use interpolation::ElementFamily;
use nalgebra::DVector;
use solver::{
    AnalysisConfig, BoundaryConditions, Control, DofValue, ExecutionMode, Mesh, Problem,
};

fn problem(mode: ExecutionMode, n: usize) -> Problem {
    let mesh = Mesh::structured(ElementFamily::Q4, n, n);
    let material = MaterialParams::new(70.0, 0.3, 0.243, 0.2, 0.1, PlaneAssumption::PlaneStress);
    let prescribed = mesh
        .set("left")
        .unwrap()
        .iter()
        .flat_map(|n| {
            [
                DofValue { node: *n, component: 0, value: 0.0 },
                DofValue { node: *n, component: 1, value: 0.0 },
            ]
        })
        .collect();
    let bcs = BoundaryConditions { prescribed, forces: Vec::new() };
    let config = AnalysisConfig {
        formulation: elements::Formulation::HwNfQ4 { n_d: 4 },
        material,
        state_options: elements::StateOptions::default(),
        control: Control::Load,
        execution: mode,
    };
    Problem::new(mesh, config, &bcs).unwrap()
}

/// Displacement field deep enough into the plastic range that element
/// state determination does real work at every site.
fn plastic_displacement(problem: &Problem) -> DVector<f64> {
    let n = problem.mesh.n_nodes();
    let mut u = DVector::zeros(2 * n);
    for (i, c) in problem.mesh.coords.iter().enumerate() {
        u[2 * i] = 8e-3 * c.x + 2e-3 * c.y;
        u[2 * i + 1] = -5e-3 * c.y + 1e-3 * c.x * c.x;
    }
    u
}

fn bench_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assembly");
    for n in [16usize, 32, 48] {
        for (label, mode) in
            [("sequential", ExecutionMode::Sequential), ("parallel", ExecutionMode::Parallel)]
        {
            let problem = problem(mode, n);
            let u = plastic_displacement(&problem);
            let histories = problem.initial_state().histories;
            group.bench_with_input(
                BenchmarkId::new(label, format!("{n}x{n}")),
                &problem,
                |b, p| b.iter(|| p.assemble(&u, &histories).unwrap()),
            );
        }
    }
    group.finish();
}

criterion_group!(benches, bench_assembly);
criterion_main!(benches);
