//! Thermodynamic bookkeeping of a discrete trajectory.
//!
//! The mechanical energy uses the same quadrature as the time-discrete
//! mechanical problem: element-constant strain terms exactly, pointwise
//! terms in `z` by the vertex (lumped) rule, and the gradient term through
//! the P1 stiffness. With this choice the energy residual of a step is the
//! quadratic remainder of the implicit scheme and nothing else.

use crate::error::{Error, Result};
use crate::material::MaterialParams;
use crate::mesh::Mesh;
use crate::sparse::{self, SparseOperator};
use crate::tensor::{DevTensor, SymTensor};

/// One row of the ledger. Field order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LedgerRow {
    pub t: f64,
    pub e_mech: f64,
    pub e_th: f64,
    pub w_ext: f64,
    pub d_cum: f64,
    pub entropy: f64,
    pub entropy_prod: f64,
    pub min_theta: f64,
    pub max_theta: f64,
    pub coupler_iters: usize,
    pub energy_residual: f64,
    pub phi_floor: f64,
}

impl LedgerRow {
    pub const HEADER: &'static str = "t,E_mech,E_th,W_ext,D_cum,entropy,entropy_prod,min_theta,max_theta,coupler_iters,energy_residual,phi_floor";

    pub fn float_columns(&self) -> [f64; 11] {
        [
            self.t,
            self.e_mech,
            self.e_th,
            self.w_ext,
            self.d_cum,
            self.entropy,
            self.entropy_prod,
            self.min_theta,
            self.max_theta,
            self.energy_residual,
            self.phi_floor,
        ]
    }
}

/// Per-step thermodynamic ledger with strictly increasing time stamps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditLedger {
    rows: Vec<LedgerRow>,
}

impl AuditLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: LedgerRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if !(row.t > last.t) {
                return Err(Error::Domain(format!(
                    "ledger time must increase strictly ({} after {})",
                    row.t, last.t
                )));
            }
        }
        if !row.float_columns().iter().all(|v| v.is_finite()) {
            return Err(Error::Domain(format!("non-finite ledger row at t = {}", row.t)));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[LedgerRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn from_rows(rows: Vec<LedgerRow>) -> Self {
        Self { rows }
    }

    /// Sum of `|R|` over all steps.
    pub fn total_abs_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.energy_residual.abs()).sum()
    }

    /// `Σ(t_end) − Σ(0) − Σ P·Δt` with `P` taken at the end of each step.
    pub fn entropy_mismatch(&self) -> f64 {
        let (Some(first), Some(last)) = (self.rows.first(), self.rows.last()) else {
            return 0.0;
        };
        let produced: f64 = self
            .rows
            .windows(2)
            .map(|w| (w[1].t - w[0].t) * w[1].entropy_prod)
            .sum();
        last.entropy - first.entropy - produced
    }
}

/// Quadrature-consistent discrete operators needed by the audit.
#[derive(Debug, Clone)]
pub struct AuditSpace<'a> {
    pub mesh: &'a Mesh,
    pub lumped: &'a [f64],
    pub laplacian: &'a SparseOperator,
    pub mass: &'a SparseOperator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energies {
    pub mech: f64,
    pub thermal: f64,
}

impl Energies {
    pub fn total(&self) -> f64 {
        self.mech + self.thermal
    }
}

/// `∫W₁` and `∫ϑ`; their sum is the internal energy since
/// `θD_θW₀ − W₀ = g(θ) = ϑ`.
pub fn internal_energy(
    space: &AuditSpace<'_>,
    params: &MaterialParams,
    strain: &[SymTensor],
    z: &[DevTensor],
    vartheta: &[f64],
) -> Energies {
    let mesh = space.mesh;
    let mut mech = 0.0;
    for (k, tri) in mesh.triangles().iter().enumerate() {
        let w = mesh.areas()[k] / 3.0;
        for &i in tri {
            mech += w * params.elastic_energy(&strain[k], &z[i]);
        }
    }
    for (zi, m) in z.iter().zip(space.lumped) {
        mech += m * params.hardening_h1(zi).0;
    }
    let (za, zb): (Vec<f64>, Vec<f64>) = z.iter().map(|v| (v.a, v.b)).unzip();
    mech += 0.5 * params.nu * (space.laplacian.bilinear(&za, &za) + space.laplacian.bilinear(&zb, &zb));
    let thermal = vartheta.iter().zip(space.lumped).map(|(v, m)| v * m).sum();
    Energies { mech, thermal }
}

/// `R = ΔE_total − W_ext` for one step.
pub fn energy_residual(before: &Energies, after: &Energies, work: f64) -> f64 {
    after.total() - before.total() - work
}

/// External work `∫ℓⁿ⁺¹·(uⁿ⁺¹ − uⁿ)` with the consistent mass.
pub fn external_work(space: &AuditSpace<'_>, load: &[[f64; 2]], u_new: &[[f64; 2]], u_old: &[[f64; 2]]) -> f64 {
    let du: Vec<[f64; 2]> = u_new
        .iter()
        .zip(u_old)
        .map(|(a, b)| [a[0] - b[0], a[1] - b[1]])
        .collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) = load.iter().map(|l| (l[0], l[1])).unzip();
    let (dx, dy): (Vec<f64>, Vec<f64>) = du.iter().map(|d| (d[0], d[1])).unzip();
    space.mass.bilinear(&lx, &dx) + space.mass.bilinear(&ly, &dy)
}

/// Total entropy `∫(S(θ) − α tr e − H₂(z))`.
pub fn total_entropy(
    space: &AuditSpace<'_>,
    params: &MaterialParams,
    theta: &[f64],
    strain: &[SymTensor],
    z: &[DevTensor],
) -> Result<f64> {
    let mut s = 0.0;
    for ((th, zi), m) in theta.iter().zip(z).zip(space.lumped) {
        s += m * (params.entropy_coefficient(*th)? - params.hardening_h2(zi).0);
    }
    for (e, area) in strain.iter().zip(space.mesh.areas()) {
        s -= area * params.alpha * e.trace();
    }
    Ok(s)
}

/// Entropy production rate
/// `P = ∫κ^c∇ϑ·∇θ/θ² + ∫ξ/θ`, with the heat-flux part written edge by
/// edge as `Σ w_e (ϑ_i − ϑ_j)(1/θ_j − 1/θ_i)`, `w_e = −K_ij ≥ 0`. Each
/// summand is nonnegative because `θ = ζ(ϑ)` is monotone; a negative
/// summand is reported as an error.
pub fn entropy_production(
    space: &AuditSpace<'_>,
    kappa_c: &[SymTensor],
    vartheta: &[f64],
    theta: &[f64],
    dissipation: &[f64],
) -> Result<f64> {
    let min_theta = theta.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_theta > 0.0) {
        return Err(Error::Domain(format!(
            "entropy production needs positive temperature (min {min_theta})"
        )));
    }
    let mesh = space.mesh;
    let mut total = 0.0;
    for (k, tri) in mesh.triangles().iter().enumerate() {
        let g = mesh.shape_gradients(k);
        let area = mesh.areas()[k];
        for a in 0..3 {
            for b in (a + 1)..3 {
                let kg = kappa_c[k].apply(g[a]);
                let weight = -area * (kg[0] * g[b][0] + kg[1] * g[b][1]);
                let (i, j) = (tri[a], tri[b]);
                let term = weight * (vartheta[i] - vartheta[j]) * (1.0 / theta[j] - 1.0 / theta[i]);
                if term < 0.0 {
                    return Err(Error::Domain(format!(
                        "negative heat-flux entropy term {term:e} on element {k}"
                    )));
                }
                total += term;
            }
        }
    }
    for ((d, th), m) in dissipation.iter().zip(theta).zip(space.lumped) {
        let term = m * d / th;
        if term < 0.0 {
            return Err(Error::Domain(format!("negative dissipation {d:e}")));
        }
        total += term;
    }
    Ok(total)
}

/// Constant `C = (3α)²/(2η_u) + C_z²/η_z` of the positivity bound.
pub fn floor_constant(params: &MaterialParams, z_sup: f64) -> f64 {
    let cz = params.h2_growth_constant(z_sup);
    (3.0 * params.alpha).powi(2) / (2.0 * params.eta_u) + cz * cz / params.eta_z
}

/// Running evaluation of the enthalpy floor
/// `φ(t) = ϑ̄ exp(−(β₁/c_c)∫₀ᵗ (C + C_z²/η_z ‖z‖²_∞) ds)`,
/// with the time integral by the trapezoid rule.
#[derive(Debug, Clone)]
pub struct EnthalpyFloor {
    params: MaterialParams,
    t: f64,
    exponent: f64,
    z_sup: f64,
    last_integrand: f64,
}

impl EnthalpyFloor {
    pub fn new(params: &MaterialParams, z_inf0: f64) -> Self {
        let mut floor = Self {
            params: params.clone(),
            t: 0.0,
            exponent: 0.0,
            z_sup: z_inf0,
            last_integrand: 0.0,
        };
        floor.last_integrand = floor.integrand(z_inf0);
        floor
    }

    fn integrand(&self, z_inf: f64) -> f64 {
        let cz = self.params.h2_growth_constant(self.z_sup);
        floor_constant(&self.params, self.z_sup) + cz * cz / self.params.eta_z * z_inf * z_inf
    }

    pub fn value(&self) -> f64 {
        self.params.vartheta_bar * (-self.params.beta1 / self.params.c_c * self.exponent).exp()
    }

    pub fn advance(&mut self, t: f64, z_inf: f64) -> f64 {
        self.z_sup = self.z_sup.max(z_inf);
        let next = self.integrand(z_inf);
        self.exponent += 0.5 * (t - self.t) * (self.last_integrand + next);
        self.last_integrand = next;
        self.t = t;
        self.value()
    }
}

/// Floor values `φ(t_k)` for a recorded `‖z(t_k)‖_∞` history.
pub fn enthalpy_floor(times: &[f64], z_inf: &[f64], params: &MaterialParams) -> Vec<f64> {
    assert_eq!(times.len(), z_inf.len());
    let Some((&z0, rest)) = z_inf.split_first() else {
        return Vec::new();
    };
    let mut floor = EnthalpyFloor::new(params, z0);
    let mut out = vec![floor.value()];
    for (&t, &z) in times[1..].iter().zip(rest) {
        out.push(floor.advance(t, z));
    }
    out
}

/// Boundedness quantities of one time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorRecord {
    pub t: f64,
    /// `‖u‖²_{H¹} + ‖z‖²_{H¹} + ‖ϑ‖_{L¹}`.
    pub m_value: f64,
    /// `‖θ‖_{L^β₁}^{β₁}`.
    pub theta_pow: f64,
    pub vartheta_l1: f64,
    pub min_vartheta: f64,
    /// Nodewise `ζ(ϑ)^β₁ ≤ β₁ϑ⁺/c_c`.
    pub zeta_bound_ok: bool,
}

pub fn monitor_record(
    space: &AuditSpace<'_>,
    params: &MaterialParams,
    t: f64,
    u: &[[f64; 2]],
    z: &[DevTensor],
    vartheta: &[f64],
) -> MonitorRecord {
    let h1 = |v: &[f64]| space.mass.bilinear(v, v) + space.laplacian.bilinear(v, v);
    let comp = |f: &dyn Fn(usize) -> f64| (0..u.len()).map(f).collect::<Vec<f64>>();
    let m_u = h1(&comp(&|i| u[i][0])) + h1(&comp(&|i| u[i][1]));
    let m_z = h1(&comp(&|i| z[i].a)) + h1(&comp(&|i| z[i].b));
    let mut l1 = 0.0;
    let mut theta_pow = 0.0;
    let mut ok = true;
    let mut min_v = f64::INFINITY;
    for (v, m) in vartheta.iter().zip(space.lumped) {
        let th = params.zeta(*v);
        let p = th.powf(params.beta1);
        l1 += m * v.abs();
        theta_pow += m * p;
        min_v = min_v.min(*v);
        let bound = params.beta1 * v.max(0.0) / params.c_c;
        ok &= p <= bound * (1.0 + 1e-12);
    }
    MonitorRecord {
        t,
        m_value: m_u + m_z + l1,
        theta_pow,
        vartheta_l1: l1,
        min_vartheta: min_v,
        zeta_bound_ok: ok,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    pub m0: f64,
    pub max_ratio: f64,
    /// Times at which `M(t) > factor·max(M(0), 1)`.
    pub flagged: Vec<f64>,
    /// `‖θ‖^β₁_{L^β₁} ≤ (β₁/c_c)‖ϑ‖_{L¹}` at every record.
    pub temperature_bound_ok: bool,
    pub zeta_bound_ok: bool,
}

pub const DEFAULT_MONITOR_FACTOR: f64 = 50.0;

pub fn global_monitor(records: &[MonitorRecord], params: &MaterialParams, factor: f64) -> MonitorReport {
    let m0 = records.first().map_or(0.0, |r| r.m_value);
    let limit = factor * m0.max(1.0);
    MonitorReport {
        m0,
        max_ratio: records
            .iter()
            .map(|r| r.m_value / m0.max(1.0))
            .fold(0.0, f64::max),
        flagged: records.iter().filter(|r| r.m_value > limit).map(|r| r.t).collect(),
        temperature_bound_ok: records
            .iter()
            .all(|r| r.theta_pow <= params.beta1 / params.c_c * r.vartheta_l1 * (1.0 + 1e-12)),
        zeta_bound_ok: records.iter().all(|r| r.zeta_bound_ok),
    }
}

/// A failed check on a saved ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub check: &'static str,
    pub row: usize,
    pub detail: String,
}

/// Default fraction of the floor `φ(t)` below which the enthalpy is flagged.
pub const DEFAULT_FLOOR_SLACK: f64 = 0.5;

/// Re-runs the hard checks on ledger rows: finiteness, increasing time,
/// `P ≥ 0`, nondecreasing dissipation, `min θ > 0` and the enthalpy floor.
pub fn check_ledger(rows: &[LedgerRow], params: &MaterialParams, floor_slack: f64) -> Vec<Finding> {
    let mut out = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        if !r.float_columns().iter().all(|v| v.is_finite()) {
            out.push(Finding { check: "finite_columns", row: i, detail: format!("{r:?}") });
            continue;
        }
        if i > 0 && !(r.t > rows[i - 1].t) {
            out.push(Finding {
                check: "time_increasing",
                row: i,
                detail: format!("t = {} after {}", r.t, rows[i - 1].t),
            });
        }
        if r.entropy_prod < 0.0 {
            out.push(Finding {
                check: "entropy_production_nonnegative",
                row: i,
                detail: format!("P = {:e}", r.entropy_prod),
            });
        }
        if i > 0 && r.d_cum < rows[i - 1].d_cum {
            out.push(Finding {
                check: "dissipation_nondecreasing",
                row: i,
                detail: format!("D_cum {} < {}", r.d_cum, rows[i - 1].d_cum),
            });
        }
        if !(r.min_theta > 0.0) {
            out.push(Finding {
                check: "temperature_positive",
                row: i,
                detail: format!("min theta = {:e}", r.min_theta),
            });
        } else {
            let min_enthalpy = params.g_of_theta(r.min_theta).unwrap_or(0.0);
            if min_enthalpy < floor_slack * r.phi_floor {
                out.push(Finding {
                    check: "enthalpy_floor",
                    row: i,
                    detail: format!("min enthalpy {min_enthalpy:e} < {floor_slack}·phi = {:e}", floor_slack * r.phi_floor),
                });
            }
        }
    }
    out
}

pub(crate) fn max_norm(z: &[DevTensor]) -> f64 {
    z.iter().map(DevTensor::norm).fold(0.0, f64::max)
}

pub(crate) fn l2_norm(mass: &SparseOperator, v: &[f64]) -> f64 {
    mass.bilinear(v, v).max(0.0).sqrt()
}

#[allow(dead_code)]
pub(crate) fn weighted_sum(w: &[f64], v: &[f64]) -> f64 {
    sparse::dot(w, v)
}
