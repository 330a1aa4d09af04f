//! Fixed-point coupling of the mechanical and thermal steps, and the
//! trajectory runner that keeps the thermodynamic ledger.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::audit::{
    self, AuditLedger, AuditSpace, EnthalpyFloor, LedgerRow, MonitorRecord, MonitorReport,
};
use crate::config::{LoadSection, SimConfig};
use crate::error::{Error, Result, Violation};
use crate::fem;
use crate::material::MaterialParams;
use crate::mech::{MechConfig, MechDiagnostics, MechSolver, MechState};
use crate::mesh::Mesh;
use crate::output;
use crate::sparse::SparseOperator;
use crate::tensor::{DevTensor, SymTensor};
use crate::thermal::{heat_source, HeatSource, ThermalConfig, ThermalSolver};

pub use crate::point::{
    material_point_run, point_z_update, CycleSummary, PointMode, PointRow, PointRun,
    PointSolverConfig, StrainPath,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub mech: MechState,
    pub vartheta: Vec<f64>,
    pub t: f64,
}

impl CoupledState {
    pub fn uniform(n: usize, z0: DevTensor, vartheta0: f64) -> Self {
        Self {
            mech: MechState { u: vec![[0.0; 2]; n], z: vec![z0; n] },
            vartheta: vec![vartheta0; n],
            t: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplerConfig {
    pub tol_couple: f64,
    pub max_fp_iters: usize,
    /// Relaxation `ϑ̃ ← (1−ω)ϑ̃ + ωϑ`.
    pub omega: f64,
    pub dt: f64,
    pub t_end: f64,
}

impl Default for CouplerConfig {
    fn default() -> Self {
        Self { tol_couple: 1e-10, max_fp_iters: 50, omega: 1.0, dt: 0.005, t_end: 1.0 }
    }
}

impl CouplerConfig {
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if !(self.tol_couple > 0.0 && self.tol_couple < 1.0) {
            v.push(Violation::new("solver.tol_couple", format!("must lie in (0,1), got {}", self.tol_couple)));
        }
        if self.max_fp_iters < 1 {
            v.push(Violation::new("solver.iteration_caps", "max_fp_iters must be >= 1"));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            v.push(Violation::new("solver.omega_range", format!("omega must lie in (0,1], got {}", self.omega)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            v.push(Violation::new("time.dt_positive", format!("dt = {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            v.push(Violation::new("time.t_end_nonnegative", format!("t_end = {}", self.t_end)));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().max(0.0) as usize
    }
}

/// Diagnostics of one accepted coupled step.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub iterations: usize,
    /// Relative fixed-point residual after each iteration.
    pub residuals: Vec<f64>,
    /// Temperature `ζ(ϑ̃)` used by the accepted iterate.
    pub theta: Vec<f64>,
    pub heat: HeatSource,
    pub kappa_c: Vec<SymTensor>,
    pub strain: Vec<SymTensor>,
    pub mech: MechDiagnostics,
    pub thermal_iterations: usize,
    pub thermal_stiffness: SparseOperator,
}

#[derive(Debug, Clone)]
pub struct Coupler {
    mesh: Arc<Mesh>,
    params: MaterialParams,
    cfg: CouplerConfig,
    mech: MechSolver,
    thermal: ThermalSolver,
}

impl Coupler {
    pub fn new(
        mesh: Arc<Mesh>,
        params: MaterialParams,
        cfg: CouplerConfig,
        mech_cfg: MechConfig,
        thermal_cfg: ThermalConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        params.validate()?;
        let mech = MechSolver::new(mesh.clone(), params.clone(), mech_cfg, cfg.dt)?;
        let thermal = ThermalSolver::new(mesh.clone(), thermal_cfg)?;
        Ok(Self { mesh, params, cfg, mech, thermal })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn params(&self) -> &MaterialParams {
        &self.params
    }

    pub fn config(&self) -> &CouplerConfig {
        &self.cfg
    }

    pub fn mech_solver(&self) -> &MechSolver {
        &self.mech
    }

    pub fn thermal_solver(&self) -> &ThermalSolver {
        &self.thermal
    }

    /// One time step: iterate `ϑ̃ → θ = ζ(ϑ̃) → (u, z) → source → ϑ` until
    /// the change in `ϑ` is below `tol_couple·max(‖ϑ‖, 1)` in `L²`.
    pub fn coupled_step(&self, state: &CoupledState, load: &[[f64; 2]]) -> Result<(CoupledState, StepReport)> {
        let n = self.mesh.num_nodes();
        if state.vartheta.len() != n {
            return Err(Error::Dimension { expected: n, got: state.vartheta.len() });
        }
        let p = &self.params;
        let dt = self.cfg.dt;
        let mass = self.thermal.mass();
        let strain_old = fem::element_strain(&self.mesh, &state.mech.u)?;
        let mut guess = state.vartheta.clone();
        let mut residuals = Vec::new();
        for it in 1..=self.cfg.max_fp_iters {
            let theta: Vec<f64> = guess.iter().map(|v| p.zeta(*v)).collect();
            let (mech, diag) = self.mech.step(&state.mech, &theta, load)?;
            let strain = fem::element_strain(&self.mesh, &mech.u)?;
            let rate: Vec<SymTensor> = strain
                .iter()
                .zip(&strain_old)
                .map(|(a, b)| (1.0 / dt) * (*a - *b))
                .collect();
            let z_rate: Vec<DevTensor> = mech
                .z
                .iter()
                .zip(&state.mech.z)
                .map(|(a, b)| (1.0 / dt) * (*a - *b))
                .collect();
            let heat = heat_source(p, &self.mesh, &rate, &theta, &mech.z, &z_rate)?;
            let kappa_c: Vec<SymTensor> = self
                .mesh
                .triangles()
                .iter()
                .enumerate()
                .map(|(k, tri)| {
                    let z_mean = (1.0 / 3.0) * (mech.z[tri[0]] + mech.z[tri[1]] + mech.z[tri[2]]);
                    let v_mean = (guess[tri[0]] + guess[tri[1]] + guess[tri[2]]) / 3.0;
                    p.kappa_c(&strain[k], &z_mean, v_mean)
                })
                .collect();
            let th = self.thermal.step(&state.vartheta, &kappa_c, &heat.f, dt)?;
            let diff: Vec<f64> = th.vartheta.iter().zip(&guess).map(|(a, b)| a - b).collect();
            let res = audit::l2_norm(mass, &diff) / audit::l2_norm(mass, &th.vartheta).max(1.0);
            if !res.is_finite() {
                return Err(Error::NonConvergence {
                    what: "thermo-mechanical fixed point",
                    iterations: it,
                    residual: res,
                    hint: "; try a smaller time step",
                });
            }
            residuals.push(res);
            if res <= self.cfg.tol_couple {
                let t = state.t + dt;
                let min = th.vartheta.iter().copied().fold(f64::INFINITY, f64::min);
                if !(min > 0.0) {
                    return Err(Error::Positivity { t, min_enthalpy: min });
                }
                let report = StepReport {
                    iterations: it,
                    residuals,
                    theta,
                    heat,
                    kappa_c,
                    strain,
                    mech: diag,
                    thermal_iterations: th.iterations,
                    thermal_stiffness: th.stiffness,
                };
                return Ok((CoupledState { mech, vartheta: th.vartheta, t }, report));
            }
            let w = self.cfg.omega;
            for (g, v) in guess.iter_mut().zip(&th.vartheta) {
                *g = (1.0 - w) * *g + w * v;
            }
        }
        Err(Error::NonConvergence {
            what: "thermo-mechanical fixed point",
            iterations: self.cfg.max_fp_iters,
            residual: residuals.last().copied().unwrap_or(f64::NAN),
            hint: "; try a smaller time step",
        })
    }
}

/// Per-step numbers that are not part of the ledger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub coupler_iters: usize,
    pub mech_outer: usize,
    pub prox_iters: usize,
    /// `∫ϑⁿ⁺¹ − ∫ϑⁿ − Δt∫f`.
    pub conservation_defect: f64,
    /// `max(|∫ϑⁿ⁺¹|, |∫ϑⁿ|, Δt∫|f|)`.
    pub conservation_scale: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub ledger: AuditLedger,
    pub monitor: Vec<MonitorRecord>,
    pub report: MonitorReport,
    pub steps: Vec<StepRecord>,
    pub snapshots: Vec<(usize, CoupledState)>,
    pub final_state: CoupledState,
}

/// Full run: a coupler, a load law and output cadence.
#[derive(Debug, Clone)]
pub struct Simulation {
    coupler: Coupler,
    load: LoadSection,
    snapshot_stride: usize,
    lumped: Vec<f64>,
    laplacian: SparseOperator,
    mass: SparseOperator,
}

impl Simulation {
    pub fn new(coupler: Coupler, load: LoadSection, snapshot_stride: usize) -> Self {
        let mesh = coupler.mesh().clone();
        Self {
            lumped: fem::lumped_weights(&mesh),
            laplacian: fem::assemble_laplacian(&mesh),
            mass: fem::assemble_mass(&mesh, false),
            coupler,
            load,
            snapshot_stride: snapshot_stride.max(1),
        }
    }

    pub fn from_config(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let mesh = Arc::new(Mesh::rectangle(cfg.mesh.nx, cfg.mesh.ny, cfg.mesh.lx, cfg.mesh.ly)?);
        let ccfg = CouplerConfig {
            tol_couple: cfg.solver.tol_couple,
            max_fp_iters: cfg.solver.max_fp_iters,
            omega: cfg.solver.omega,
            dt: cfg.time.dt,
            t_end: cfg.time.t_end,
        };
        let coupler = Coupler::new(mesh, cfg.material.clone(), ccfg, cfg.solver.mech(), cfg.solver.thermal())?;
        Ok(Self::new(coupler, cfg.load.clone(), cfg.output.snapshot_stride))
    }

    pub fn coupler(&self) -> &Coupler {
        &self.coupler
    }

    pub fn space(&self) -> AuditSpace<'_> {
        AuditSpace {
            mesh: self.coupler.mesh(),
            lumped: &self.lumped,
            laplacian: &self.laplacian,
            mass: &self.mass,
        }
    }

    /// Ledger row of the initial state.
    fn initial_row(&self, state: &CoupledState) -> Result<(LedgerRow, audit::Energies)> {
        let p = self.coupler.params();
        let space = self.space();
        let strain = fem::element_strain(space.mesh, &state.mech.u)?;
        let theta: Vec<f64> = state.vartheta.iter().map(|v| p.zeta(*v)).collect();
        let energies = audit::internal_energy(&space, p, &strain, &state.mech.z, &state.vartheta);
        let (min_theta, max_theta) = min_max(&theta);
        let row = LedgerRow {
            t: state.t,
            e_mech: energies.mech,
            e_th: energies.thermal,
            entropy: audit::total_entropy(&space, p, &theta, &strain, &state.mech.z)?,
            min_theta,
            max_theta,
            phi_floor: p.vartheta_bar,
            ..LedgerRow::default()
        };
        Ok((row, energies))
    }

    /// Marches `steps` steps from `initial`, calling `observer` after each
    /// accepted step.
    pub fn run_from<F>(&self, initial: CoupledState, steps: usize, mut observer: F) -> Result<Trajectory>
    where
        F: FnMut(usize, &CoupledState, &StepReport),
    {
        let p = self.coupler.params();
        let space = self.space();
        let thermal = self.coupler.thermal_solver();
        let dt = self.coupler.config().dt;
        let mesh = self.coupler.mesh().clone();

        let (row0, mut energies) = self.initial_row(&initial)?;
        let mut ledger = AuditLedger::new();
        ledger.push(row0)?;
        let mut floor = EnthalpyFloor::new(p, audit::max_norm(&initial.mech.z));
        let mut monitor = vec![audit::monitor_record(
            &space,
            p,
            initial.t,
            &initial.mech.u,
            &initial.mech.z,
            &initial.vartheta,
        )];
        let mut records = Vec::with_capacity(steps);
        let mut snapshots = vec![(0, initial.clone())];
        let (mut w_ext, mut d_cum) = (0.0, 0.0);
        let t0 = initial.t;
        let mut state = initial;

        for step in 1..=steps {
            let t_next = t0 + step as f64 * dt;
            let load = self.load.evaluate(&mesh, t_next);
            let (mut next, report) = self.coupler.coupled_step(&state, &load)?;
            next.t = t_next;
            observer(step, &next, &report);

            let after = audit::internal_energy(&space, p, &report.strain, &next.mech.z, &next.vartheta);
            let work = audit::external_work(&space, &load, &next.mech.u, &state.mech.u);
            w_ext += work;
            d_cum += dt * crate::sparse::dot(&self.lumped, &report.heat.dissipation);
            let theta: Vec<f64> = next.vartheta.iter().map(|v| p.zeta(*v)).collect();
            let entropy_prod =
                audit::entropy_production(&space, &report.kappa_c, &next.vartheta, &theta, &report.heat.dissipation)?;
            let (min_theta, max_theta) = min_max(&theta);
            ledger.push(LedgerRow {
                t: next.t,
                e_mech: after.mech,
                e_th: after.thermal,
                w_ext,
                d_cum,
                entropy: audit::total_entropy(&space, p, &theta, &report.strain, &next.mech.z)?,
                entropy_prod,
                min_theta,
                max_theta,
                coupler_iters: report.iterations,
                energy_residual: audit::energy_residual(&energies, &after, work),
                phi_floor: floor.advance(next.t, audit::max_norm(&next.mech.z)),
            })?;
            energies = after;
            monitor.push(audit::monitor_record(&space, p, next.t, &next.mech.u, &next.mech.z, &next.vartheta));

            let int_new = thermal.integral(&next.vartheta);
            let int_old = thermal.integral(&state.vartheta);
            let int_f = thermal.integral(&report.heat.f);
            let abs_f: Vec<f64> = report.heat.f.iter().map(|v| v.abs()).collect();
            records.push(StepRecord {
                step,
                t: next.t,
                coupler_iters: report.iterations,
                mech_outer: report.mech.outer_iterations,
                prox_iters: report.mech.prox_iterations,
                conservation_defect: int_new - int_old - dt * int_f,
                conservation_scale: int_new.abs().max(int_old.abs()).max(dt * thermal.integral(&abs_f)),
            });
            if step % self.snapshot_stride == 0 || step == steps {
                snapshots.push((step, next.clone()));
            }
            state = next;
        }
        let report = audit::global_monitor(&monitor, p, audit::DEFAULT_MONITOR_FACTOR);
        Ok(Trajectory { ledger, monitor, report, steps: records, snapshots, final_state: state })
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

/// Uniform initial state of a configuration.
pub fn initial_state(cfg: &SimConfig) -> CoupledState {
    let n = (cfg.mesh.nx + 1) * (cfg.mesh.ny + 1);
    CoupledState::uniform(n, DevTensor::new(cfg.initial.z0[0], cfg.initial.z0[1]), cfg.initial.vartheta0)
}

/// Runs a validated configuration to `t_end` without writing files.
pub fn run(cfg: &SimConfig) -> Result<Trajectory> {
    let sim = Simulation::from_config(cfg)?;
    sim.run_from(initial_state(cfg), cfg.time.steps(), |_, _, _| {})
}

/// Runs and writes `mesh.txt`, `timeseries.csv`, `monitor.csv` and
/// `snapshot_NNNNNN.txt` files into `dir`.
pub fn run_to_dir(cfg: &SimConfig, dir: &Path) -> Result<Trajectory> {
    let sim = Simulation::from_config(cfg)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mesh = sim.coupler().mesh().clone();
    mesh.write_text(&dir.join("mesh.txt"))?;
    let traj = sim.run_from(initial_state(cfg), cfg.time.steps(), |_, _, _| {})?;
    output::write_timeseries(traj.ledger.rows(), &dir.join("timeseries.csv"))?;
    output::write_monitor(&traj.monitor, &dir.join("monitor.csv"))?;
    for (step, s) in &traj.snapshots {
        output::write_snapshot(&mesh, &s.mech, &s.vartheta, &dir.join(format!("snapshot_{step:06}.txt")))?;
    }
    Ok(traj)
}
