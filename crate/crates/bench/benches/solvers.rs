use std::sync::Arc;

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use smaflow_core::config::LoadSection;
use smaflow_core::coupler::{CoupledState, Coupler, CouplerConfig};
use smaflow_core::mech::{MechConfig, MechSolver, MechState};
use smaflow_core::thermal::{ThermalConfig, ThermalSolver};
use smaflow_core::{fem, sparse, DevTensor, MaterialParams, Mesh, SymTensor};

fn assembly(c: &mut Criterion) {
    let mesh = Mesh::rectangle(64, 64, 1.0, 1.0).unwrap();
    let kappa = vec![0.5 * SymTensor::IDENTITY; mesh.num_triangles()];
    c.bench_function("assemble_stiffness_64x64", |b| {
        b.iter(|| fem::assemble_stiffness(black_box(&mesh), black_box(&kappa)).unwrap())
    });
    c.bench_function("assemble_momentum_32x32", |b| {
        let mesh = Mesh::rectangle(32, 32, 1.0, 1.0).unwrap();
        let p = MaterialParams::default();
        b.iter(|| smaflow_core::mech::assemble_momentum_operator(black_box(&mesh), &p, 0.005))
    });
}

fn pcg(c: &mut Criterion) {
    let mesh = Mesh::rectangle(64, 64, 1.0, 1.0).unwrap();
    let mass = fem::assemble_mass(&mesh, true);
    let stiff = fem::assemble_laplacian(&mesh);
    let system = mass.linear_combination(1.0 / 0.005, &stiff, 0.5);
    let rhs: Vec<f64> = mesh.nodes().iter().map(|p| (3.0 * p[0]).sin() + p[1]).collect();
    c.bench_function("pcg_heat_system_64x64", |b| {
        b.iter(|| sparse::solve_spd(black_box(&system), black_box(&rhs), 1e-10).unwrap())
    });
}

fn steps(c: &mut Criterion) {
    let mesh = Arc::new(Mesh::rectangle(32, 32, 1.0, 1.0).unwrap());
    let n = mesh.num_nodes();
    let params = MaterialParams { c1_hat: 0.1, ..MaterialParams::default() };
    let load = LoadSection::default().evaluate(&mesh, 0.25);

    let mech = MechSolver::new(mesh.clone(), params.clone(), MechConfig::default(), 0.005).unwrap();
    let theta = vec![0.5; n];
    let prev = MechState::zeros(n);
    c.bench_function("mech_step_32x32", |b| b.iter(|| mech.step(black_box(&prev), &theta, &load).unwrap()));

    let thermal = ThermalSolver::new(mesh.clone(), ThermalConfig::default()).unwrap();
    let kappa = vec![0.5 * SymTensor::IDENTITY; mesh.num_triangles()];
    let v0: Vec<f64> = mesh.nodes().iter().map(|p| 1.0 + 0.3 * p[0] * p[1]).collect();
    let f = vec![0.1; n];
    c.bench_function("thermal_step_32x32", |b| b.iter(|| thermal.step(black_box(&v0), &kappa, &f, 0.005).unwrap()));

    let coupler = Coupler::new(
        mesh.clone(),
        params,
        CouplerConfig::default(),
        MechConfig::default(),
        ThermalConfig::default(),
    )
    .unwrap();
    let state = CoupledState::uniform(n, DevTensor::ZERO, 1.0);
    let mut group = c.benchmark_group("coupled");
    group.sample_size(10);
    group.bench_function("coupled_step_32x32", |b| b.iter(|| coupler.coupled_step(black_box(&state), &load).unwrap()));
    group.finish();
}

criterion_group!(benches, assembly, pcg, steps);
criterion_main!(benches);
