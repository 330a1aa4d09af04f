//! One backward-Euler step of momentum balance and flow rule at a given
//! temperature field.
//!
//! Pointwise terms of the internal-variable problem use the vertex
//! (lumped) rule, which makes the dissipation separable per node: every
//! node sees `ρ|δ| + (η_z/2Δt)|δ|²` weighted by its lumped mass, and the
//! proximal step reduces to a closed-form shrinkage.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{self, basis_strain};
use crate::material::{shrink, MaterialParams};
use crate::mesh::Mesh;
use crate::sparse::{self, SparseOperator, TripletBuilder};
use crate::tensor::{DevTensor, SymTensor};

/// Displacement and internal variable at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct MechState {
    pub u: Vec<[f64; 2]>,
    pub z: Vec<DevTensor>,
}

impl MechState {
    pub fn zeros(n: usize) -> Self {
        Self {
            u: vec![[0.0; 2]; n],
            z: vec![DevTensor::ZERO; n],
        }
    }
}

/// Step-size policy of the proximal-gradient iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProxStep {
    /// Start at `τ = Δt/η_z` and halve until the quadratic upper model holds.
    Backtracking,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MechConfig {
    pub tol_outer: f64,
    pub tol_z: f64,
    pub tol_linear: f64,
    pub max_outer: usize,
    pub max_prox_iters: usize,
    pub step: ProxStep,
}

impl Default for MechConfig {
    fn default() -> Self {
        Self {
            tol_outer: 1e-10,
            tol_z: 1e-10,
            tol_linear: sparse::DEFAULT_TOL,
            max_outer: 100,
            max_prox_iters: 50_000,
            step: ProxStep::Backtracking,
        }
    }
}

impl MechConfig {
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        for (name, tol) in [
            ("solver.tol_outer", self.tol_outer),
            ("solver.tol_z", self.tol_z),
            ("solver.tol_linear", self.tol_linear),
        ] {
            if !(tol > 0.0 && tol < 1.0) {
                v.push(crate::error::Violation::new(name, format!("tolerance must lie in (0,1), got {tol}")));
            }
        }
        if self.max_outer < 1 || self.max_prox_iters < 1 {
            v.push(crate::error::Violation::new(
                "solver.iteration_caps",
                "iteration caps must be >= 1",
            ));
        }
        if let ProxStep::Fixed(t) = self.step {
            if !(t > 0.0) {
                v.push(crate::error::Violation::new("solver.prox_step", format!("fixed step must be > 0, got {t}")));
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}

/// Result of [`MechSolver::z_update`].
#[derive(Debug, Clone)]
pub struct ZUpdate {
    pub z: Vec<DevTensor>,
    pub iterations: usize,
    /// Largest nodal flow residual, relative to `max(1, ρ)`.
    pub residual: f64,
    /// Incremental functional after each accepted iterate (first entry is the start).
    pub energy_history: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MechDiagnostics {
    pub outer_iterations: usize,
    pub prox_iterations: usize,
    pub z_residual: f64,
}

/// Solver for the mechanical subproblem on a fixed mesh and time step.
#[derive(Debug, Clone)]
pub struct MechSolver {
    mesh: Arc<Mesh>,
    params: MaterialParams,
    cfg: MechConfig,
    dt: f64,
    mass: SparseOperator,
    lumped: Vec<f64>,
    laplacian: SparseOperator,
    system: SparseOperator,
}

impl MechSolver {
    pub fn new(mesh: Arc<Mesh>, params: MaterialParams, cfg: MechConfig, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::config("time.dt_positive", format!("dt must be > 0, got {dt}")));
        }
        cfg.validate()?;
        let mass = fem::assemble_mass(&mesh, false);
        let lumped = fem::lumped_weights(&mesh);
        let laplacian = fem::assemble_laplacian(&mesh);
        let system = assemble_momentum_operator(&mesh, &params, dt);
        Ok(Self {
            mesh,
            params,
            cfg,
            dt,
            mass,
            lumped,
            laplacian,
            system,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn params(&self) -> &MaterialParams {
        &self.params
    }

    pub fn config(&self) -> &MechConfig {
        &self.cfg
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn lumped_weights(&self) -> &[f64] {
        &self.lumped
    }

    pub fn laplacian(&self) -> &SparseOperator {
        &self.laplacian
    }

    pub fn consistent_mass(&self) -> &SparseOperator {
        &self.mass
    }

    /// The momentum operator `E + (η_u/Δt)·I` with clamped boundary rows.
    pub fn momentum_operator(&self) -> &SparseOperator {
        &self.system
    }

    fn check_len(&self, got: usize) -> Result<()> {
        let n = self.mesh.num_nodes();
        if got != n {
            return Err(Error::Dimension { expected: n, got });
        }
        Ok(())
    }

    /// Right-hand side of the momentum balance for given `z`, `θ`, load and `uⁿ`.
    pub fn momentum_rhs(
        &self,
        u_prev: &[[f64; 2]],
        z: &[DevTensor],
        theta: &[f64],
        load: &[[f64; 2]],
    ) -> Result<Vec<f64>> {
        for len in [u_prev.len(), z.len(), theta.len(), load.len()] {
            self.check_len(len)?;
        }
        let mesh = &*self.mesh;
        let p = &self.params;
        let visc = p.eta_u / self.dt;
        let strain_prev = fem::element_strain(mesh, u_prev)?;
        let mut rhs = vec![0.0; 2 * mesh.num_nodes()];
        for (i, f) in fem::apply_componentwise(&self.mass, load).into_iter().enumerate() {
            rhs[2 * i] = f[0];
            rhs[2 * i + 1] = f[1];
        }
        for (k, tri) in mesh.triangles().iter().enumerate() {
            let area = mesh.areas()[k];
            let g = mesh.shape_gradients(k);
            let z_mean = (1.0 / 3.0) * (z[tri[0]] + z[tri[1]] + z[tri[2]]);
            let theta_mean = (theta[tri[0]] + theta[tri[1]] + theta[tri[2]]) / 3.0;
            let stress = p.elastic_apply(&z_mean.to_sym())
                + (-p.alpha * theta_mean) * SymTensor::IDENTITY
                + visc * strain_prev[k];
            for a in 0..3 {
                for c in 0..2 {
                    rhs[2 * tri[a] + c] += area * stress.ddot(&basis_strain(g[a], c));
                }
            }
        }
        for (i, &b) in mesh.boundary_flags().iter().enumerate() {
            if b {
                rhs[2 * i] = 0.0;
                rhs[2 * i + 1] = 0.0;
            }
        }
        Ok(rhs)
    }

    /// Displacement update with `z` and `θ` frozen.
    pub fn u_solve(
        &self,
        u_prev: &[[f64; 2]],
        z: &[DevTensor],
        theta: &[f64],
        load: &[[f64; 2]],
    ) -> Result<Vec<[f64; 2]>> {
        let rhs = self.momentum_rhs(u_prev, z, theta, load)?;
        let n = rhs.len();
        let (x, _) = sparse::solve_spd_with(&self.system, &rhs, self.cfg.tol_linear, 10 * n, None)?;
        Ok(x.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
    }

    /// Nodal averages `d_i = Σ_K (|K|/3) dev e_K / m_i` of the deviatoric strain.
    fn nodal_dev_strain(&self, strain: &[SymTensor]) -> Vec<DevTensor> {
        let mut d = vec![DevTensor::ZERO; self.mesh.num_nodes()];
        for (k, tri) in self.mesh.triangles().iter().enumerate() {
            let w = self.mesh.areas()[k] / 3.0;
            let dev = strain[k].dev();
            for &i in tri {
                d[i] += w * dev;
            }
        }
        for (di, &m) in d.iter_mut().zip(&self.lumped) {
            *di = (1.0 / m) * *di;
        }
        d
    }

    /// Smooth part of the incremental functional and its gradient density
    /// (gradient divided by the lumped weight).
    fn smooth_part(&self, z: &[DevTensor], d: &[DevTensor], theta: &[f64]) -> (f64, Vec<DevTensor>) {
        let p = &self.params;
        let (za, zb): (Vec<f64>, Vec<f64>) = z.iter().map(|v| (v.a, v.b)).unzip();
        let ka = self.laplacian.mul_vec(&za);
        let kb = self.laplacian.mul_vec(&zb);
        let mut value = 0.5 * p.nu * (sparse::dot(&za, &ka) + sparse::dot(&zb, &kb));
        let mut grad = Vec::with_capacity(z.len());
        for i in 0..z.len() {
            let m = self.lumped[i];
            let (h1, dh1) = p.hardening_h1(&z[i]);
            let (h2, dh2) = p.hardening_h2(&z[i]);
            value += m
                * (p.mu * z[i].norm_sq() - 2.0 * p.mu * z[i].dot(&d[i]) + h1 + theta[i] * h2);
            let g = (2.0 * p.mu) * (z[i] - d[i])
                + dh1
                + theta[i] * dh2
                + (p.nu / m) * DevTensor::new(ka[i], kb[i]);
            grad.push(g);
        }
        (value, grad)
    }

    fn dissipative_part(&self, z: &[DevTensor], z_prev: &[DevTensor]) -> f64 {
        let a = self.params.eta_z / self.dt;
        z.iter()
            .zip(z_prev)
            .zip(&self.lumped)
            .map(|((z, zp), m)| {
                let dz = *z - *zp;
                m * (self.params.psi(&dz) + 0.5 * a * dz.norm_sq())
            })
            .sum()
    }

    /// The incremental functional `J(z)` minimized by [`Self::z_update`].
    pub fn incremental_energy(
        &self,
        strain: &[SymTensor],
        z: &[DevTensor],
        z_prev: &[DevTensor],
        theta: &[f64],
    ) -> f64 {
        let d = self.nodal_dev_strain(strain);
        let elastic_offset: f64 = strain
            .iter()
            .zip(self.mesh.areas())
            .map(|(e, &area)| area * 0.5 * self.params.elastic_apply(e).ddot(e))
            .sum();
        self.smooth_part(z, &d, theta).0 + self.dissipative_part(z, z_prev) + elastic_offset
    }

    fn residual_from_grad(&self, z: &[DevTensor], z_prev: &[DevTensor], grad: &[DevTensor]) -> Vec<f64> {
        let a = self.params.eta_z / self.dt;
        let scale = self.params.rho.max(1.0);
        z.iter()
            .zip(z_prev)
            .zip(grad)
            .map(|((z, zp), g)| {
                let lhs = a * (*z - *zp);
                (lhs - shrink(-*g, self.params.rho)).norm() / scale
            })
            .collect()
    }

    /// Per-node residual of the discrete flow rule
    /// `0 ∈ ρ∂|δz| + (η_z/Δt)δz + ∇J_smooth(z)`, measured through its
    /// shrinkage fixed-point form and scaled by `max(1, ρ)`.
    pub fn flow_residual(
        &self,
        strain: &[SymTensor],
        z: &[DevTensor],
        z_prev: &[DevTensor],
        theta: &[f64],
    ) -> Vec<f64> {
        let d = self.nodal_dev_strain(strain);
        let (_, grad) = self.smooth_part(z, &d, theta);
        self.residual_from_grad(z, z_prev, &grad)
    }

    /// Proximal-gradient minimization of the incremental functional in `z`,
    /// starting from `z_start`, with the dissipation centred at `z_prev`.
    pub fn z_update(
        &self,
        strain: &[SymTensor],
        z_prev: &[DevTensor],
        z_start: &[DevTensor],
        theta: &[f64],
    ) -> Result<ZUpdate> {
        self.check_len(z_prev.len())?;
        self.check_len(z_start.len())?;
        self.check_len(theta.len())?;
        if strain.len() != self.mesh.num_triangles() {
            return Err(Error::Dimension {
                expected: self.mesh.num_triangles(),
                got: strain.len(),
            });
        }
        let p = &self.params;
        let a = p.eta_z / self.dt;
        let d = self.nodal_dev_strain(strain);
        let offset: f64 = strain
            .iter()
            .zip(self.mesh.areas())
            .map(|(e, &area)| area * 0.5 * p.elastic_apply(e).ddot(e))
            .sum();

        let mut z = z_start.to_vec();
        let (mut s_val, mut grad) = self.smooth_part(&z, &d, theta);
        let mut history = vec![s_val + self.dissipative_part(&z, z_prev) + offset];
        let mut tau = match self.cfg.step {
            ProxStep::Backtracking => self.dt / p.eta_z,
            ProxStep::Fixed(t) => t,
        };

        for it in 0..=self.cfg.max_prox_iters {
            let res = self
                .residual_from_grad(&z, z_prev, &grad)
                .into_iter()
                .fold(0.0, f64::max);
            if res <= self.cfg.tol_z {
                return Ok(ZUpdate {
                    z,
                    iterations: it,
                    residual: res,
                    energy_history: history,
                });
            }
            if it == self.cfg.max_prox_iters {
                return Err(Error::NonConvergence {
                    what: "internal-variable update",
                    iterations: it,
                    residual: res,
                    hint: "; try a smaller time step",
                });
            }
            loop {
                let trial: Vec<DevTensor> = z
                    .iter()
                    .zip(z_prev)
                    .zip(&grad)
                    .map(|((zi, zp), g)| {
                        let v = *zi - *zp - tau * *g;
                        *zp + (1.0 / (a + 1.0 / tau)) * shrink((1.0 / tau) * v, p.rho)
                    })
                    .collect();
                let (s_trial, g_trial) = self.smooth_part(&trial, &d, theta);
                let accept = match self.cfg.step {
                    ProxStep::Fixed(_) => true,
                    ProxStep::Backtracking => {
                        let mut model = s_val;
                        for i in 0..z.len() {
                            let step = trial[i] - z[i];
                            model += self.lumped[i] * (grad[i].dot(&step) + step.norm_sq() / (2.0 * tau));
                        }
                        s_trial <= model + 1e-13 * s_val.abs().max(1.0)
                    }
                };
                if accept {
                    z = trial;
                    s_val = s_trial;
                    grad = g_trial;
                    break;
                }
                tau *= 0.5;
                if tau < 1e-300 {
                    return Err(Error::NonConvergence {
                        what: "internal-variable step-size search",
                        iterations: it,
                        residual: res,
                        hint: "",
                    });
                }
            }
            let j = s_val + self.dissipative_part(&z, z_prev) + offset;
            debug_assert!(
                matches!(self.cfg.step, ProxStep::Fixed(_))
                    || j <= history.last().unwrap() + 1e-12 * j.abs().max(1.0),
                "incremental energy increased: {} -> {}",
                history.last().unwrap(),
                j
            );
            history.push(j);
        }
        unreachable!("loop returns on the last iteration")
    }

    /// Gauss–Seidel alternation of [`Self::u_solve`] and [`Self::z_update`].
    pub fn step(
        &self,
        prev: &MechState,
        theta: &[f64],
        load: &[[f64; 2]],
    ) -> Result<(MechState, MechDiagnostics)> {
        let mut u = prev.u.clone();
        let mut z = prev.z.clone();
        let mut diag = MechDiagnostics::default();
        let mut change = f64::INFINITY;
        for outer in 1..=self.cfg.max_outer {
            let u_new = self.u_solve(&prev.u, &z, theta, load)?;
            let strain = fem::element_strain(&self.mesh, &u_new)?;
            let upd = self.z_update(&strain, &prev.z, &z, theta)?;
            diag.prox_iterations += upd.iterations;
            diag.z_residual = upd.residual;
            let mut diff = 0.0;
            let mut size = 0.0;
            for (new, old) in u_new.iter().zip(&u) {
                diff += (new[0] - old[0]).powi(2) + (new[1] - old[1]).powi(2);
                size += new[0] * new[0] + new[1] * new[1];
            }
            for (new, old) in upd.z.iter().zip(&z) {
                diff += (*new - *old).norm_sq();
                size += new.norm_sq();
            }
            change = diff.sqrt() / size.sqrt().max(1.0);
            u = u_new;
            z = upd.z;
            diag.outer_iterations = outer;
            if change <= self.cfg.tol_outer {
                return Ok((MechState { u, z }, diag));
            }
        }
        Err(Error::NonConvergence {
            what: "mechanical Gauss-Seidel coupling",
            iterations: self.cfg.max_outer,
            residual: change,
            hint: "; try a smaller time step",
        })
    }
}

/// Assembles `∫ E e(u):e(v) + (η_u/Δt) e(u):e(v)` with `u = 0` imposed on
/// the boundary by identity rows.
pub fn assemble_momentum_operator(mesh: &Mesh, params: &MaterialParams, dt: f64) -> SparseOperator {
    let n = 2 * mesh.num_nodes();
    let visc = params.eta_u / dt;
    let bnd = mesh.boundary_flags();
    let mut t = TripletBuilder::with_capacity(n, n, 36 * mesh.num_triangles() + n);
    for (k, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.areas()[k];
        let g = mesh.shape_gradients(k);
        for a in 0..3 {
            if bnd[tri[a]] {
                continue;
            }
            for c in 0..2 {
                let ea = basis_strain(g[a], c);
                let sa = params.elastic_apply(&ea) + visc * ea;
                for b in 0..3 {
                    if bnd[tri[b]] {
                        continue;
                    }
                    for d in 0..2 {
                        let eb = basis_strain(g[b], d);
                        t.add(2 * tri[a] + c, 2 * tri[b] + d, area * sa.ddot(&eb));
                    }
                }
            }
        }
    }
    for (i, &b) in bnd.iter().enumerate() {
        if b {
            t.add(2 * i, 2 * i, 1.0);
            t.add(2 * i + 1, 2 * i + 1, 1.0);
        }
    }
    t.build(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_rect_mesh;

    fn solver(n: usize, params: MaterialParams, dt: f64) -> MechSolver {
        let mesh = Arc::new(build_rect_mesh(n, n, 1.0, 1.0).unwrap());
        MechSolver::new(mesh, params, MechConfig::default(), dt).unwrap()
    }

    fn bump_load(mesh: &Mesh, amp: f64) -> Vec<[f64; 2]> {
        mesh.nodes()
            .iter()
            .map(|p| {
                let b = 16.0 * p[0] * (1.0 - p[0]) * p[1] * (1.0 - p[1]);
                [amp * b, 0.5 * amp * b]
            })
            .collect()
    }

    #[test]
    fn zero_data_gives_zero_state() {
        let s = solver(3, MaterialParams::default(), 0.1);
        let n = s.mesh().num_nodes();
        let prev = MechState::zeros(n);
        let (next, _) = s.step(&prev, &vec![0.0; n], &vec![[0.0; 2]; n]).unwrap();
        assert_eq!(next, prev);
    }

    #[test]
    fn u_is_linear_in_load() {
        let p = MaterialParams { alpha: 0.0, ..MaterialParams::default() };
        let s = solver(4, p, 0.1);
        let n = s.mesh().num_nodes();
        let z = vec![DevTensor::ZERO; n];
        let th = vec![0.0; n];
        let u0 = vec![[0.0; 2]; n];
        let l1 = bump_load(s.mesh(), 1.0);
        let l2 = bump_load(s.mesh(), 2.0);
        let a = s.u_solve(&u0, &z, &th, &l1).unwrap();
        let b = s.u_solve(&u0, &z, &th, &l2).unwrap();
        let scale = a.iter().map(|v| v[0].abs().max(v[1].abs())).fold(0.0, f64::max);
        assert!(scale > 0.0);
        for (x, y) in a.iter().zip(&b) {
            assert!((2.0 * x[0] - y[0]).abs() < 1e-8 * scale);
            assert!((2.0 * x[1] - y[1]).abs() < 1e-8 * scale);
        }
        for (i, v) in a.iter().enumerate() {
            if s.mesh().is_boundary(i) {
                assert_eq!(*v, [0.0, 0.0]);
            }
        }
    }

    #[test]
    fn sticking_keeps_z() {
        let s = solver(3, MaterialParams::default(), 0.1);
        let n = s.mesh().num_nodes();
        let strain = vec![SymTensor::ZERO; s.mesh().num_triangles()];
        let zero = vec![DevTensor::ZERO; n];
        let upd = s.z_update(&strain, &zero, &zero, &vec![0.0; n]).unwrap();
        assert_eq!(upd.z, zero);
        assert_eq!(upd.iterations, 0);
    }

    #[test]
    fn quadratic_hardening_nodal_oracle() {
        // ρ = 0, ν = 0, c1 = 0, c3 large: each node solves a 2×2 linear system
        // (η_z/Δt + 2μ + 2c₂) z = 2μ d_i + (η_z/Δt) zⁿ.
        let p = MaterialParams {
            rho: 0.0,
            nu: 0.0,
            c1: 0.0,
            c2: 0.7,
            c3: 1e6,
            c1_hat: 0.0,
            c2_hat: 0.0,
            ..MaterialParams::default()
        };
        let s = solver(3, p.clone(), 0.05);
        let mesh = s.mesh();
        let u: Vec<[f64; 2]> = mesh
            .nodes()
            .iter()
            .map(|q| [0.3 * q[0] * q[1], -0.2 * q[0] * q[0] + 0.1 * q[1]])
            .collect();
        let strain = fem::element_strain(mesh, &u).unwrap();
        let n = mesh.num_nodes();
        let z_prev: Vec<DevTensor> = (0..n).map(|i| DevTensor::new(0.01 * i as f64, -0.02)).collect();
        let upd = s.z_update(&strain, &z_prev, &z_prev, &vec![0.0; n]).unwrap();

        let mut d = vec![DevTensor::ZERO; n];
        let mut m = vec![0.0; n];
        for (k, tri) in mesh.triangles().iter().enumerate() {
            for &i in tri {
                d[i] += (mesh.areas()[k] / 3.0) * strain[k].dev();
                m[i] += mesh.areas()[k] / 3.0;
            }
        }
        let a = p.eta_z / 0.05;
        for i in 0..n {
            let di = (1.0 / m[i]) * d[i];
            let expect = (1.0 / (a + 2.0 * p.mu + 2.0 * p.c2)) * ((2.0 * p.mu) * di + a * z_prev[i]);
            assert!((upd.z[i] - expect).norm() < 1e-8, "node {i}");
        }
    }

    #[test]
    fn energy_decreases_and_residual_detects_perturbation() {
        let p = MaterialParams { rho: 0.05, nu: 0.02, ..MaterialParams::default() };
        let s = solver(4, p, 0.02);
        let mesh = s.mesh();
        let u: Vec<[f64; 2]> = mesh
            .nodes()
            .iter()
            .map(|q| [0.8 * q[1] * (1.0 - q[1]), 0.4 * q[0] * q[0]])
            .collect();
        let strain = fem::element_strain(mesh, &u).unwrap();
        let n = mesh.num_nodes();
        let z_prev = vec![DevTensor::ZERO; n];
        let theta = vec![0.3; n];
        let upd = s.z_update(&strain, &z_prev, &z_prev, &theta).unwrap();
        assert!(upd.iterations > 0);
        for w in upd.energy_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
        let j_out = s.incremental_energy(&strain, &upd.z, &z_prev, &theta);
        assert!(j_out <= s.incremental_energy(&strain, &z_prev, &z_prev, &theta));

        let res = s.flow_residual(&strain, &upd.z, &z_prev, &theta);
        assert!(res.iter().all(|&r| r <= s.config().tol_z));
        let mut z_bad = upd.z.clone();
        z_bad[7] += DevTensor::new(0.1, 0.0);
        let res_bad = s.flow_residual(&strain, &z_bad, &z_prev, &theta);
        assert!(res_bad[7] > s.config().tol_z);
    }

    #[test]
    fn complementarity_at_converged_nodes() {
        let p = MaterialParams { rho: 0.1, nu: 0.0, ..MaterialParams::default() };
        let s = solver(4, p.clone(), 0.02);
        let mesh = s.mesh();
        let u: Vec<[f64; 2]> = mesh.nodes().iter().map(|q| [0.4 * q[1] * q[1], 0.0]).collect();
        let strain = fem::element_strain(mesh, &u).unwrap();
        let n = mesh.num_nodes();
        let zp = vec![DevTensor::ZERO; n];
        let th = vec![0.0; n];
        let upd = s.z_update(&strain, &zp, &zp, &th).unwrap();
        let d = s.nodal_dev_strain(&strain);
        let (_, grad) = s.smooth_part(&upd.z, &d, &th);
        let a = p.eta_z / 0.02;
        let mut moved = 0;
        for i in 0..n {
            let dz = upd.z[i] - zp[i];
            let force = -grad[i];
            if dz.norm() == 0.0 {
                assert!(force.norm() <= p.rho * (1.0 + 1e-8));
            } else {
                moved += 1;
                // force − a·δz is parallel to δz with length ρ.
                let r = force - a * dz;
                assert!((r.norm() - p.rho).abs() < 1e-8);
                assert!((r.dot(&dz) / (r.norm() * dz.norm()) - 1.0).abs() < 1e-8);
            }
        }
        assert!(moved > 0);
    }

    #[test]
    fn step_is_deterministic() {
        let p = MaterialParams { rho: 0.05, ..MaterialParams::default() };
        let s = solver(4, p, 0.05);
        let n = s.mesh().num_nodes();
        let load = bump_load(s.mesh(), 3.0);
        let th = vec![0.4; n];
        let a = s.step(&MechState::zeros(n), &th, &load).unwrap();
        let b = s.step(&MechState::zeros(n), &th, &load).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn operator_is_symmetric() {
        let s = solver(3, MaterialParams::default(), 0.1);
        assert!(s.momentum_operator().symmetry_defect() < 1e-12);
    }

    #[test]
    fn rejects_bad_config() {
        let mesh = Arc::new(build_rect_mesh(2, 2, 1.0, 1.0).unwrap());
        let cfg = MechConfig { tol_z: 2.0, ..MechConfig::default() };
        assert!(MechSolver::new(mesh.clone(), MaterialParams::default(), cfg, 0.1).is_err());
        assert!(MechSolver::new(mesh, MaterialParams::default(), MechConfig::default(), 0.0).is_err());
    }
}
