//! Backward-Euler step of the enthalpy equation with insulated boundary.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem;
use crate::material::MaterialParams;
use crate::mesh::Mesh;
use crate::sparse::{self, SparseOperator};
use crate::tensor::{DevTensor, SymTensor};

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalConfig {
    pub tol: f64,
    /// Iteration cap of the linear solver; 0 selects `10·n`.
    pub max_iter: usize,
    /// Use the row-sum lumped mass in the time derivative.
    pub lumped_mass: bool,
}

impl Default for ThermalConfig {
    fn default() -> Self {
        Self {
            tol: sparse::DEFAULT_TOL,
            max_iter: 0,
            lumped_mass: true,
        }
    }
}

/// Nodal heat-source densities split into their dissipative and
/// thermo-mechanical coupling parts; `f = dissipation + coupling`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatSource {
    pub f: Vec<f64>,
    pub dissipation: Vec<f64>,
    pub coupling: Vec<f64>,
}

/// Heat source `η_u|ė|² + θ(α tr ė + D_zH₂(z):ż) + ρ|ż| + η_z|ż|²` as nodal
/// densities. Element-constant strain-rate terms are distributed to the
/// vertices with weight `|K|/3`, matching the quadrature of the momentum
/// balance so that the source integrates to the mechanical power exactly.
pub fn heat_source(
    params: &MaterialParams,
    mesh: &Mesh,
    strain_rate: &[SymTensor],
    theta: &[f64],
    z_new: &[DevTensor],
    z_rate: &[DevTensor],
) -> Result<HeatSource> {
    let n = mesh.num_nodes();
    for len in [theta.len(), z_new.len(), z_rate.len()] {
        if len != n {
            return Err(Error::Dimension { expected: n, got: len });
        }
    }
    if strain_rate.len() != mesh.num_triangles() {
        return Err(Error::Dimension {
            expected: mesh.num_triangles(),
            got: strain_rate.len(),
        });
    }
    let mut weight = vec![0.0; n];
    let mut visc = vec![0.0; n];
    let mut trace = vec![0.0; n];
    for (k, tri) in mesh.triangles().iter().enumerate() {
        let w = mesh.areas()[k] / 3.0;
        let rate = strain_rate[k];
        for &i in tri {
            weight[i] += w;
            visc[i] += w * params.eta_u * rate.ddot(&rate);
            trace[i] += w * rate.trace();
        }
    }
    let mut f = Vec::with_capacity(n);
    let mut dissipation = Vec::with_capacity(n);
    let mut coupling = Vec::with_capacity(n);
    for i in 0..n {
        let zr = z_rate[i];
        let d = visc[i] / weight[i] + params.psi(&zr) + params.eta_z * zr.norm_sq();
        let dh2 = params.hardening_h2(&z_new[i]).1;
        let c = theta[i] * (params.alpha * trace[i] / weight[i] + dh2.dot(&zr));
        dissipation.push(d);
        coupling.push(c);
        f.push(d + c);
    }
    Ok(HeatSource {
        f,
        dissipation,
        coupling,
    })
}

#[derive(Debug, Clone)]
pub struct ThermalStep {
    pub vartheta: Vec<f64>,
    pub iterations: usize,
    /// The stiffness used in this step (`∫κ^c∇·∇`).
    pub stiffness: SparseOperator,
}

#[derive(Debug, Clone)]
pub struct ThermalSolver {
    mesh: Arc<Mesh>,
    cfg: ThermalConfig,
    mass: SparseOperator,
    area: f64,
}

impl ThermalSolver {
    pub fn new(mesh: Arc<Mesh>, cfg: ThermalConfig) -> Result<Self> {
        if !(cfg.tol > 0.0 && cfg.tol < 1.0) {
            return Err(Error::config(
                "solver.tol_linear",
                format!("thermal tolerance must lie in (0,1), got {}", cfg.tol),
            ));
        }
        let mass = fem::assemble_mass(&mesh, cfg.lumped_mass);
        let area = mesh.total_area();
        Ok(Self {
            mesh,
            cfg,
            mass,
            area,
        })
    }

    pub fn mass(&self) -> &SparseOperator {
        &self.mass
    }

    pub fn config(&self) -> &ThermalConfig {
        &self.cfg
    }

    /// `∫ϑ` under the scheme's mass matrix.
    pub fn integral(&self, v: &[f64]) -> f64 {
        self.mass.row_sums().iter().zip(v).map(|(m, x)| m * x).sum()
    }

    /// Solves `(M/Δt + K)ϑ = M(ϑ_prev/Δt + f)`.
    ///
    /// Testing the scheme with the constant function gives
    /// `∫ϑ = ∫ϑ_prev + Δt∫f`; the iterate is shifted by a constant (which
    /// `K` annihilates) so that this holds to round-off rather than to the
    /// linear-solver tolerance.
    pub fn step(
        &self,
        vartheta_prev: &[f64],
        kappa_c: &[SymTensor],
        f: &[f64],
        dt: f64,
    ) -> Result<ThermalStep> {
        let n = self.mesh.num_nodes();
        for len in [vartheta_prev.len(), f.len()] {
            if len != n {
                return Err(Error::Dimension { expected: n, got: len });
            }
        }
        if !(dt > 0.0) {
            return Err(Error::config("time.dt_positive", format!("dt must be > 0, got {dt}")));
        }
        let stiffness = fem::assemble_stiffness(&self.mesh, kappa_c)?;
        let system = self.mass.linear_combination(1.0 / dt, &stiffness, 1.0);
        let load: Vec<f64> = vartheta_prev.iter().zip(f).map(|(v, f)| v / dt + f).collect();
        let rhs = self.mass.mul_vec(&load);
        let cap = if self.cfg.max_iter == 0 { 10 * n } else { self.cfg.max_iter };
        let (mut vartheta, info) =
            sparse::solve_spd_with(&system, &rhs, self.cfg.tol, cap, Some(vartheta_prev))?;
        let target = self.integral(vartheta_prev) + dt * self.integral(f);
        let shift = (target - self.integral(&vartheta)) / self.area;
        vartheta.iter_mut().for_each(|v| *v += shift);
        Ok(ThermalStep {
            vartheta,
            iterations: info.iterations,
            stiffness,
        })
    }
}

/// One row of the energy-estimate report.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub t: f64,
    /// `‖ϑ(t)‖² + 2∫₀ᵗ ∫κ^c∇ϑ·∇ϑ`.
    pub lhs: f64,
    /// `e^t (‖ϑ⁰‖² + ∫₀ᵗ‖f‖²)`.
    pub rhs: f64,
    /// Right side with the backward-Euler Gronwall factor `(1−Δt)^{-n}` in place of `e^t`.
    pub rhs_discrete: f64,
    pub violated: bool,
}

/// Incremental form of [`energy_estimate_check`].
#[derive(Debug, Clone)]
pub struct EnergyEstimate {
    dt: f64,
    initial: f64,
    f_accum: f64,
    grad_accum: f64,
    rows: Vec<EstimateRow>,
}

const ESTIMATE_SLACK: f64 = 1e-10;

impl EnergyEstimate {
    pub fn new(dt: f64, initial_norm_sq: f64) -> Self {
        Self {
            dt,
            initial: initial_norm_sq,
            f_accum: 0.0,
            grad_accum: 0.0,
            rows: vec![EstimateRow {
                t: 0.0,
                lhs: initial_norm_sq,
                rhs: initial_norm_sq,
                rhs_discrete: initial_norm_sq,
                violated: false,
            }],
        }
    }

    /// Adds step `n → n+1` given `‖ϑⁿ⁺¹‖²`, `(ϑⁿ⁺¹)ᵀKϑⁿ⁺¹` and `‖fⁿ⁺¹‖²`.
    pub fn push(&mut self, norm_sq: f64, grad_energy: f64, f_norm_sq: f64) {
        self.f_accum += self.dt * f_norm_sq;
        self.grad_accum += self.dt * grad_energy;
        let steps = self.rows.len() as i32;
        let t = self.dt * f64::from(steps);
        let base = self.initial + self.f_accum;
        let rhs = t.exp() * base;
        let rhs_discrete = (1.0 - self.dt).powi(-steps) * base;
        let lhs = norm_sq + 2.0 * self.grad_accum;
        let violated = !(lhs <= rhs_discrete.max(rhs) * (1.0 + ESTIMATE_SLACK));
        self.rows.push(EstimateRow {
            t,
            lhs,
            rhs,
            rhs_discrete,
            violated,
        });
    }

    pub fn rows(&self) -> &[EstimateRow] {
        &self.rows
    }

    pub fn any_violation(&self) -> bool {
        self.rows.iter().any(|r| r.violated)
    }
}

/// Evaluates `‖ϑ(τ)‖² + 2∫‖∇ϑ‖²_{κ^c} ≤ e^τ(‖ϑ⁰‖² + ‖f‖²)` along a
/// trajectory. `vartheta[0]` is the initial state and `f[n]` drives step
/// `n → n+1`; norms use `mass`, gradients use `stiffness`.
pub fn energy_estimate_check(
    mass: &SparseOperator,
    stiffness: &SparseOperator,
    dt: f64,
    vartheta: &[Vec<f64>],
    f: &[Vec<f64>],
) -> EnergyEstimate {
    assert!(!vartheta.is_empty() && f.len() + 1 == vartheta.len());
    let mut est = EnergyEstimate::new(dt, mass.bilinear(&vartheta[0], &vartheta[0]));
    for (v, f) in vartheta[1..].iter().zip(f) {
        est.push(mass.bilinear(v, v), stiffness.bilinear(v, v), mass.bilinear(f, f));
    }
    est
}
