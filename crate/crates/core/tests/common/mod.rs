//! Independent reference computations shared by the integration suites.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use smaflow_core::fem;
use smaflow_core::mech::{MechConfig, MechSolver, MechState};
use smaflow_core::thermal::{ThermalConfig, ThermalSolver};
use smaflow_core::{config, DevTensor, MaterialParams, Mesh, SimConfig, SymTensor};

pub fn standard_text() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/standard.toml"))
        .expect("standard scenario file")
}

pub fn standard_config(dt: f64) -> SimConfig {
    config::parse_config(&standard_text())
        .unwrap()
        .with_overrides(Some(dt), None)
        .unwrap()
}

/// Parameters for which the incremental mechanical problem is exactly
/// quadratic: no threshold, no square-root hardening, saturation far away.
pub fn quadratic_params() -> MaterialParams {
    MaterialParams {
        mu: 1.3,
        lambda: 0.7,
        eta_u: 0.8,
        eta_z: 1.1,
        nu: 0.2,
        alpha: 0.3,
        rho: 0.0,
        c1: 0.0,
        c2: 0.9,
        c3: 1e3,
        c1_hat: 0.0,
        c2_hat: 0.4,
        ..MaterialParams::default()
    }
}

fn z_matrix(z: [f64; 2]) -> [[f64; 2]; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [[s * z[0], s * z[1]], [s * z[1], -s * z[0]]]
}

fn frob(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

fn elastic(p: &MaterialParams, x: &[[f64; 2]; 2]) -> f64 {
    let tr = x[0][0] + x[1][1];
    0.5 * (2.0 * p.mu * frob(x, x) + p.lambda * tr * tr)
}

/// Incremental potential of a backward-Euler step, written directly from
/// nodal values. `x` stacks the interior displacement components and then
/// the `(a, b)` coordinates of `z` at every node.
pub struct DensePotential<'a> {
    pub mesh: &'a Mesh,
    pub p: &'a MaterialParams,
    pub dt: f64,
    pub u_prev: &'a [[f64; 2]],
    pub z_prev: &'a [DevTensor],
    pub theta: &'a [f64],
    pub load: &'a [[f64; 2]],
    pub interior: Vec<usize>,
}

impl<'a> DensePotential<'a> {
    pub fn dim(&self) -> usize {
        2 * self.interior.len() + 2 * self.mesh.num_nodes()
    }

    pub fn unpack(&self, x: &[f64]) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
        let n = self.mesh.num_nodes();
        let mut u = vec![[0.0; 2]; n];
        for (j, &i) in self.interior.iter().enumerate() {
            u[i] = [x[2 * j], x[2 * j + 1]];
        }
        let off = 2 * self.interior.len();
        let z = (0..n).map(|i| [x[off + 2 * i], x[off + 2 * i + 1]]).collect();
        (u, z)
    }

    fn grad_u(&self, k: usize, u: &[[f64; 2]]) -> [[f64; 2]; 2] {
        let tri = self.mesh.triangles()[k];
        let g = self.mesh.shape_gradients(k);
        let mut e = [[0.0; 2]; 2];
        for a in 0..3 {
            for r in 0..2 {
                for c in 0..2 {
                    e[r][c] += 0.5 * (u[tri[a]][r] * g[a][c] + u[tri[a]][c] * g[a][r]);
                }
            }
        }
        e
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let (u, z) = self.unpack(x);
        let p = self.p;
        let mesh = self.mesh;
        let mut total = 0.0;
        let mut lumped = vec![0.0; mesh.num_nodes()];
        for (k, tri) in mesh.triangles().iter().enumerate() {
            let area = mesh.areas()[k];
            let e = self.grad_u(k, &u);
            let e_prev = self.grad_u(k, self.u_prev);
            let mut de = e;
            for r in 0..2 {
                for c in 0..2 {
                    de[r][c] -= e_prev[r][c];
                }
            }
            let th = (self.theta[tri[0]] + self.theta[tri[1]] + self.theta[tri[2]]) / 3.0;
            total += area * (p.eta_u / (2.0 * self.dt) * frob(&de, &de) + p.alpha * th * (e[0][0] + e[1][1]));
            let g = mesh.shape_gradients(k);
            for comp in 0..2 {
                let gx: f64 = (0..3).map(|a| z[tri[a]][comp] * g[a][0]).sum();
                let gy: f64 = (0..3).map(|a| z[tri[a]][comp] * g[a][1]).sum();
                total += area * 0.5 * p.nu * (gx * gx + gy * gy);
            }
            for a in 0..3 {
                let i = tri[a];
                lumped[i] += area / 3.0;
                let zm = z_matrix(z[i]);
                let mut d = e;
                for r in 0..2 {
                    for c in 0..2 {
                        d[r][c] -= zm[r][c];
                    }
                }
                total += area / 3.0 * elastic(p, &d);
                for b in 0..3 {
                    let w = area / 12.0 * if a == b { 2.0 } else { 1.0 };
                    let j = tri[b];
                    total -= w * (self.load[i][0] * u[j][0] + self.load[i][1] * u[j][1]);
                }
            }
        }
        for (i, zi) in z.iter().enumerate() {
            let r2 = zi[0] * zi[0] + zi[1] * zi[1];
            let dz = [zi[0] - self.z_prev[i].a, zi[1] - self.z_prev[i].b];
            total += lumped[i]
                * (p.c2 * r2 + self.theta[i] * p.c2_hat * r2
                    + p.eta_z / (2.0 * self.dt) * (dz[0] * dz[0] + dz[1] * dz[1]));
        }
        total
    }

    /// Minimizer of the quadratic potential from its Hessian and gradient,
    /// both recovered by exact polarization on unit vectors.
    pub fn minimize(&self) -> Vec<f64> {
        let m = self.dim();
        let zero = vec![0.0; m];
        let f0 = self.eval(&zero);
        let unit = |i: usize| {
            let mut v = zero.clone();
            v[i] = 1.0;
            v
        };
        let fi: Vec<f64> = (0..m).map(|i| self.eval(&unit(i))).collect();
        let mut h = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                let mut v = unit(i);
                v[j] += 1.0;
                h[(i, j)] = if i == j {
                    self.eval(&v) - 2.0 * fi[i] + f0
                } else {
                    self.eval(&v) - fi[i] - fi[j] + f0
                };
            }
        }
        let grad0 = DVector::from_iterator(m, (0..m).map(|i| fi[i] - f0 - 0.5 * h[(i, i)]));
        let sol = h.cholesky().expect("potential must be strictly convex").solve(&(-grad0));
        sol.iter().copied().collect()
    }
}

pub struct MechOracleResult {
    pub max_u_error: f64,
    pub max_z_error: f64,
}

/// Solves one step on the `3×3`-node mesh with the staggered solver and with
/// a dense monolithic solve of the same quadratic problem.
pub fn mech_dense_oracle(seed: u64) -> MechOracleResult {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mesh = Arc::new(Mesh::rectangle(2, 2, 1.0, 1.0).unwrap());
    let n = mesh.num_nodes();
    let p = quadratic_params();
    let dt = 0.05;
    let interior: Vec<usize> = (0..n).filter(|&i| !mesh.is_boundary(i)).collect();
    let mut u_prev = vec![[0.0; 2]; n];
    for &i in &interior {
        u_prev[i] = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
    }
    let z_prev: Vec<DevTensor> = (0..n)
        .map(|_| DevTensor::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
        .collect();
    let theta: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..2.0)).collect();
    let load: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]).collect();

    let cfg = MechConfig { tol_outer: 1e-14, tol_z: 1e-14, tol_linear: 1e-15, max_outer: 2000, ..MechConfig::default() };
    let solver = MechSolver::new(mesh.clone(), p.clone(), cfg, dt).unwrap();
    let prev = MechState { u: u_prev.clone(), z: z_prev.clone() };
    let (state, _) = solver.step(&prev, &theta, &load).unwrap();

    let pot = DensePotential {
        mesh: &mesh,
        p: &p,
        dt,
        u_prev: &u_prev,
        z_prev: &z_prev,
        theta: &theta,
        load: &load,
        interior,
    };
    let x = pot.minimize();
    let (u, z) = pot.unpack(&x);
    let max_u_error = u
        .iter()
        .zip(&state.u)
        .map(|(a, b)| (a[0] - b[0]).abs().max((a[1] - b[1]).abs()))
        .fold(0.0, f64::max);
    let max_z_error = z
        .iter()
        .zip(&state.z)
        .map(|(a, b)| (a[0] - b.a).abs().max((a[1] - b.b).abs()))
        .fold(0.0, f64::max);
    MechOracleResult { max_u_error, max_z_error }
}

/// Manufactured solution `ϑ = 1 + cos(πx)cos(πy)e^{-t}` of
/// `ϑ_t − k₀Δϑ = f` with insulated boundary on the unit square, marched to
/// `t = 0.1` with `Δt = h²`. Returns the `L²` error (consistent mass,
/// against the nodal interpolant) for each `n`.
pub fn manufactured_thermal_errors(cells: &[usize]) -> Vec<f64> {
    use std::f64::consts::PI;
    let k0 = 0.5;
    let t_end = 0.1;
    cells
        .iter()
        .map(|&nc| {
            let mesh = Arc::new(Mesh::rectangle(nc, nc, 1.0, 1.0).unwrap());
            let h = 1.0 / nc as f64;
            let steps = (t_end / (h * h)).ceil() as usize;
            let dt = t_end / steps as f64;
            let solver = ThermalSolver::new(mesh.clone(), ThermalConfig { tol: 1e-13, ..ThermalConfig::default() }).unwrap();
            let shape: Vec<f64> = mesh.nodes().iter().map(|q| (PI * q[0]).cos() * (PI * q[1]).cos()).collect();
            let exact = |t: f64| -> Vec<f64> { shape.iter().map(|s| 1.0 + s * (-t).exp()).collect() };
            let kappa = vec![k0 * SymTensor::IDENTITY; mesh.num_triangles()];
            let mut v = exact(0.0);
            for s in 1..=steps {
                let t = s as f64 * dt;
                let f: Vec<f64> = shape.iter().map(|s| (2.0 * PI * PI * k0 - 1.0) * s * (-t).exp()).collect();
                v = solver.step(&v, &kappa, &f, dt).unwrap().vartheta;
            }
            let err: Vec<f64> = v.iter().zip(exact(t_end)).map(|(a, b)| a - b).collect();
            let mass = fem::assemble_mass(&mesh, false);
            mass.bilinear(&err, &err).sqrt()
        })
        .collect()
}
