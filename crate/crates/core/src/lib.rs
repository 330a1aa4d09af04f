//! Thermo-mechanical simulation of shape-memory alloys in two dimensions.
//!
//! A P1 finite-element discretization on a structured triangle mesh couples
//! a viscous momentum balance, a rate-independent flow rule for the
//! transformation strain `z`, and an enthalpy formulation of the heat
//! equation. Each time step is a fixed-point iteration over the temperature.
//! Every accepted state is checked against the energy and entropy balances.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod config;
pub mod coupler;
pub mod error;
pub mod fem;
pub mod material;
pub mod mech;
pub mod mesh;
pub mod output;
mod point;
pub mod sparse;
pub mod tensor;
pub mod thermal;

pub use audit::{AuditLedger, LedgerRow, MonitorRecord, MonitorReport};
pub use config::{LoadLaw, SimConfig};
pub use coupler::{
    material_point_run, CoupledState, Coupler, CouplerConfig, PointMode, PointRun, Simulation,
    StepReport, StrainPath, Trajectory,
};
pub use error::{Error, Result, Violation};
pub use material::MaterialParams;
pub use mech::{MechConfig, MechSolver, MechState, ProxStep};
pub use mesh::{build_rect_mesh, Mesh};
pub use sparse::SparseOperator;
pub use tensor::{DevTensor, SymTensor};
pub use thermal::{ThermalConfig, ThermalSolver};
