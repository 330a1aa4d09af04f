//! Run configuration: TOML sections, defaults, validation and load laws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::material::MaterialParams;
use crate::mech::{MechConfig, ProxStep};
use crate::mesh::Mesh;
use crate::thermal::ThermalConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshSection {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Default for MeshSection {
    fn default() -> Self {
        Self { nx: 32, ny: 32, lx: 1.0, ly: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { dt: 0.005, t_end: 1.0 }
    }
}

impl TimeSection {
    /// Number of steps `round(t_end/dt)`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().max(0.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol_linear: f64,
    pub tol_outer: f64,
    pub tol_z: f64,
    pub max_outer: usize,
    pub max_prox_iters: usize,
    /// Fixed proximal step; backtracking when absent.
    pub prox_step: Option<f64>,
    pub tol_couple: f64,
    pub max_fp_iters: usize,
    pub omega: f64,
    pub lumped_thermal_mass: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let m = MechConfig::default();
        Self {
            tol_linear: m.tol_linear,
            tol_outer: m.tol_outer,
            tol_z: m.tol_z,
            max_outer: m.max_outer,
            max_prox_iters: m.max_prox_iters,
            prox_step: None,
            tol_couple: 1e-10,
            max_fp_iters: 50,
            omega: 1.0,
            lumped_thermal_mass: true,
        }
    }
}

impl SolverSection {
    pub fn mech(&self) -> MechConfig {
        MechConfig {
            tol_outer: self.tol_outer,
            tol_z: self.tol_z,
            tol_linear: self.tol_linear,
            max_outer: self.max_outer,
            max_prox_iters: self.max_prox_iters,
            step: self.prox_step.map_or(ProxStep::Backtracking, ProxStep::Fixed),
        }
    }

    pub fn thermal(&self) -> ThermalConfig {
        ThermalConfig {
            tol: self.tol_linear,
            max_iter: 0,
            lumped_mass: self.lumped_thermal_mass,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadLaw {
    None,
    /// `ℓ = A·d`.
    Constant,
    /// `ℓ = A sin(2πft)·b(x)·d` with the bump `b = 16 x̂(1−x̂) ŷ(1−ŷ)`.
    SineBump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadSection {
    pub law: LoadLaw,
    pub amplitude: f64,
    pub frequency: f64,
    pub direction: [f64; 2],
}

impl Default for LoadSection {
    fn default() -> Self {
        Self {
            law: LoadLaw::SineBump,
            amplitude: 1.0,
            frequency: 1.0,
            direction: [1.0, 0.0],
        }
    }
}

impl LoadSection {
    /// Nodal body force at time `t`.
    pub fn evaluate(&self, mesh: &Mesh, t: f64) -> Vec<[f64; 2]> {
        let d = self.direction;
        match self.law {
            LoadLaw::None => vec![[0.0; 2]; mesh.num_nodes()],
            LoadLaw::Constant => vec![[self.amplitude * d[0], self.amplitude * d[1]]; mesh.num_nodes()],
            LoadLaw::SineBump => {
                let (lx, ly) = mesh.extent();
                let s = self.amplitude * (2.0 * std::f64::consts::PI * self.frequency * t).sin();
                mesh.nodes()
                    .iter()
                    .map(|p| {
                        let (x, y) = (p[0] / lx, p[1] / ly);
                        let b = 16.0 * x * (1.0 - x) * y * (1.0 - y);
                        [s * b * d[0], s * b * d[1]]
                    })
                    .collect()
            }
        }
    }
}

/// Spatially constant initial data. The displacement is clamped on the
/// whole boundary, so only `u0 = 0` is admissible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub u0: [f64; 2],
    /// Deviatoric coordinates `(a, b)` of `z⁰`.
    pub z0: [f64; 2],
    pub vartheta0: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { u0: [0.0; 2], z0: [0.0; 2], vartheta0: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    /// Write a snapshot every `snapshot_stride` steps (and at the end).
    pub snapshot_stride: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into(), snapshot_stride: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointModeKind {
    Isothermal,
    Adiabatic,
}

/// Zero-dimensional driver: triangle-wave cycles of a deviatoric strain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialPointSection {
    pub mode: PointModeKind,
    /// Initial temperature `θ₀` (the enthalpy starts at `g(θ₀)`).
    pub theta0: f64,
    /// Peak deviatoric strain `(a, b)`.
    pub amplitude: [f64; 2],
    /// Peak volumetric strain `tr e / 2`.
    pub volumetric: f64,
    pub period: f64,
    pub cycles: usize,
    pub steps_per_cycle: usize,
}

impl Default for MaterialPointSection {
    fn default() -> Self {
        Self {
            mode: PointModeKind::Isothermal,
            theta0: 1.0,
            amplitude: [1.0, 0.0],
            volumetric: 0.0,
            period: 1.0,
            cycles: 3,
            steps_per_cycle: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub mesh: MeshSection,
    pub material: MaterialParams,
    pub time: TimeSection,
    pub solver: SolverSection,
    pub load: LoadSection,
    pub initial: InitialSection,
    pub output: OutputSection,
    pub material_point: MaterialPointSection,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Parses and validates a configuration. An absent
/// `material.vartheta_bar` defaults to `initial.vartheta0`.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let parse_err = |e: toml::de::Error| Error::Parse {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    };
    let table: toml::Table = toml::from_str(text).map_err(parse_err)?;
    let mut cfg: SimConfig = toml::from_str(text).map_err(parse_err)?;
    let has_floor = table
        .get("material")
        .and_then(|m| m.get("vartheta_bar"))
        .is_some();
    if !has_floor {
        cfg.material.vartheta_bar = cfg.initial.vartheta0;
    }
    cfg.validate()?;
    Ok(cfg)
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let mut check = |ok: bool, name: &'static str, detail: String| {
            if !ok {
                v.push(Violation::new(name, detail));
            }
        };
        let m = &self.mesh;
        check(m.nx >= 1 && m.ny >= 1, "mesh.cells_positive", format!("nx = {}, ny = {}", m.nx, m.ny));
        check(
            m.lx > 0.0 && m.ly > 0.0 && m.lx.is_finite() && m.ly.is_finite(),
            "mesh.lengths_positive",
            format!("lx = {}, ly = {}", m.lx, m.ly),
        );
        let t = &self.time;
        check(t.dt > 0.0 && t.dt.is_finite(), "time.dt_positive", format!("dt = {}", t.dt));
        check(t.t_end >= 0.0 && t.t_end.is_finite(), "time.t_end_nonnegative", format!("t_end = {}", t.t_end));
        let s = &self.solver;
        for (name, tol) in [
            ("solver.tol_linear", s.tol_linear),
            ("solver.tol_outer", s.tol_outer),
            ("solver.tol_z", s.tol_z),
            ("solver.tol_couple", s.tol_couple),
        ] {
            check(tol > 0.0 && tol < 1.0, name, format!("tolerance must lie in (0,1), got {tol}"));
        }
        check(
            s.max_outer >= 1 && s.max_prox_iters >= 1 && s.max_fp_iters >= 1,
            "solver.iteration_caps",
            "iteration caps must be >= 1".into(),
        );
        check(s.omega > 0.0 && s.omega <= 1.0, "solver.omega_range", format!("omega must lie in (0,1], got {}", s.omega));
        if let Some(tau) = s.prox_step {
            check(tau > 0.0 && tau.is_finite(), "solver.prox_step", format!("fixed step must be > 0, got {tau}"));
        }
        let l = &self.load;
        check(
            l.amplitude.is_finite() && l.frequency.is_finite() && l.frequency >= 0.0,
            "load.finite",
            format!("amplitude = {}, frequency = {}", l.amplitude, l.frequency),
        );
        check(
            l.direction.iter().all(|d| d.is_finite()),
            "load.direction_finite",
            format!("{:?}", l.direction),
        );
        let i = &self.initial;
        check(
            i.u0 == [0.0, 0.0],
            "initial.u0_clamped",
            format!("displacement is clamped on the boundary; u0 must be zero, got {:?}", i.u0),
        );
        check(i.z0.iter().all(|x| x.is_finite()), "initial.z0_finite", format!("{:?}", i.z0));
        check(
            i.vartheta0 > 0.0 && i.vartheta0.is_finite(),
            "initial.enthalpy_strictly_positive",
            format!("initial enthalpy must be strictly positive, got {}", i.vartheta0),
        );
        check(
            i.vartheta0 >= self.material.vartheta_bar,
            "initial.enthalpy_above_floor",
            format!("vartheta0 = {} < vartheta_bar = {}", i.vartheta0, self.material.vartheta_bar),
        );
        check(self.output.snapshot_stride >= 1, "output.snapshot_stride", "stride must be >= 1".into());
        let p = &self.material_point;
        check(p.theta0 >= 0.0 && p.theta0.is_finite(), "material_point.theta0", format!("{}", p.theta0));
        check(p.period > 0.0 && p.period.is_finite(), "material_point.period_positive", format!("{}", p.period));
        check(p.steps_per_cycle >= 4, "material_point.steps_per_cycle", format!("{}", p.steps_per_cycle));
        v.extend(self.material.violations());
        v
    }

    /// Applies `--dt` and `--steps` style overrides; `steps` sets `t_end = steps·dt`.
    pub fn with_overrides(mut self, dt: Option<f64>, steps: Option<usize>) -> Result<Self> {
        if let Some(dt) = dt {
            self.time.dt = dt;
        }
        if let Some(n) = steps {
            self.time.t_end = n as f64 * self.time.dt;
        }
        self.validate()?;
        Ok(self)
    }
}
