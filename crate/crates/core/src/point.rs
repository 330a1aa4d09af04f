//! Zero-dimensional material point driven by a prescribed strain path.

use crate::error::{Error, Result};
use crate::material::{shrink, MaterialParams};
use crate::tensor::{DevTensor, SymTensor};

/// Piecewise-linear strain history, constant beyond the last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct StrainPath {
    knots: Vec<(f64, SymTensor)>,
    period: Option<f64>,
}

impl StrainPath {
    pub fn new(knots: Vec<(f64, SymTensor)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::config("material_point.path", "strain path needs at least one knot"));
        }
        if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::config("material_point.path", "knot times must increase strictly"));
        }
        Ok(Self { knots, period: None })
    }

    /// `cycles` closed triangle-wave cycles `0 → A → −A → 0` of length `period`.
    pub fn triangle_cycles(amplitude: SymTensor, period: f64, cycles: usize) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::config("material_point.period_positive", format!("period = {period}")));
        }
        let mut knots = vec![(0.0, SymTensor::ZERO)];
        for c in 0..cycles {
            let t0 = c as f64 * period;
            knots.push((t0 + 0.25 * period, amplitude));
            knots.push((t0 + 0.75 * period, -amplitude));
            knots.push((t0 + period, SymTensor::ZERO));
        }
        let mut path = Self::new(knots)?;
        path.period = Some(period);
        Ok(path)
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn end_time(&self) -> f64 {
        self.knots.last().map_or(0.0, |k| k.0)
    }

    pub fn eval(&self, t: f64) -> SymTensor {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        let j = k.partition_point(|(s, _)| *s <= t);
        if j >= k.len() {
            return k[k.len() - 1].1;
        }
        let (t0, e0) = k[j - 1];
        let (t1, e1) = k[j];
        let s = (t - t0) / (t1 - t0);
        (1.0 - s) * e0 + s * e1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointMode {
    Isothermal { theta0: f64 },
    /// Insulated point starting at temperature `theta0`.
    Adiabatic { theta0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointRow {
    pub t: f64,
    pub strain: SymTensor,
    pub z: DevTensor,
    pub stress: SymTensor,
    pub theta: f64,
    pub vartheta: f64,
    /// `ρ|ż| + η_z|ż|²` with the backward difference quotient.
    pub dissipation_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSummary {
    pub index: usize,
    /// `∮σ:de` by the trapezoid rule.
    pub loop_area: f64,
    /// `∫(ρ|ż| + η_z|ż|²)dt` by the trapezoid rule.
    pub dissipated: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointRun {
    pub rows: Vec<PointRow>,
    pub cycles: Vec<CycleSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSolverConfig {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PointSolverConfig {
    fn default() -> Self {
        Self { tol: 1e-12, max_iters: 100_000 }
    }
}

fn smooth(p: &MaterialParams, z: &DevTensor, d: &DevTensor, theta: f64) -> (f64, DevTensor) {
    let (h1, dh1) = p.hardening_h1(z);
    let (h2, dh2) = p.hardening_h2(z);
    (
        p.mu * z.norm_sq() - 2.0 * p.mu * z.dot(d) + h1 + theta * h2,
        (2.0 * p.mu) * (*z - *d) + dh1 + theta * dh2,
    )
}

/// Minimizes `ρ|z−z_prev| + (η_z/2Δt)|z−z_prev|² + ½E(e−z):(e−z) + H₁^δ(z) + θH₂(z)`
/// by proximal gradient with backtracking.
pub fn point_z_update(
    p: &MaterialParams,
    strain: &SymTensor,
    z_prev: DevTensor,
    theta: f64,
    dt: f64,
    cfg: PointSolverConfig,
) -> Result<(DevTensor, usize)> {
    let a = p.eta_z / dt;
    let d = strain.dev();
    let mut z = z_prev;
    let (mut s, mut g) = smooth(p, &z, &d, theta);
    let mut tau = dt / p.eta_z;
    let scale = p.rho.max(1.0);
    for it in 0..=cfg.max_iters {
        let res = (a * (z - z_prev) - shrink(-g, p.rho)).norm() / scale;
        if res <= cfg.tol {
            return Ok((z, it));
        }
        if it == cfg.max_iters {
            break;
        }
        loop {
            let v = z - z_prev - tau * g;
            let trial = z_prev + (1.0 / (a + 1.0 / tau)) * shrink((1.0 / tau) * v, p.rho);
            let (st, gt) = smooth(p, &trial, &d, theta);
            let step = trial - z;
            if st <= s + g.dot(&step) + step.norm_sq() / (2.0 * tau) + 1e-15 * s.abs().max(1.0) {
                z = trial;
                s = st;
                g = gt;
                break;
            }
            tau *= 0.5;
            if tau < 1e-300 {
                return Err(Error::NonConvergence {
                    what: "material-point step-size search",
                    iterations: it,
                    residual: res,
                    hint: "",
                });
            }
        }
    }
    Err(Error::NonConvergence {
        what: "material-point flow rule",
        iterations: cfg.max_iters,
        residual: f64::NAN,
        hint: "; try a smaller time step",
    })
}

fn stress(p: &MaterialParams, e: &SymTensor, z: &DevTensor, theta: f64) -> SymTensor {
    p.elastic_apply(&(*e - z.to_sym())) + (p.alpha * theta) * SymTensor::IDENTITY
}

/// Integrates the point model along `path` with `n = round(t_end/Δt)` steps.
pub fn material_point_run(
    path: &StrainPath,
    mode: PointMode,
    p: &MaterialParams,
    dt: f64,
    t_end: f64,
) -> Result<PointRun> {
    p.validate()?;
    if !(dt > 0.0) {
        return Err(Error::config("time.dt_positive", format!("dt = {dt}")));
    }
    let cfg = PointSolverConfig::default();
    let theta0 = match mode {
        PointMode::Isothermal { theta0 } | PointMode::Adiabatic { theta0 } => theta0,
    };
    let vartheta0 = p.g_of_theta(theta0)?;
    let steps = (t_end / dt).round().max(0.0) as usize;
    let e0 = path.eval(0.0);
    let mut rows = vec![PointRow {
        t: 0.0,
        strain: e0,
        z: DevTensor::ZERO,
        stress: stress(p, &e0, &DevTensor::ZERO, theta0),
        theta: theta0,
        vartheta: vartheta0,
        dissipation_rate: 0.0,
    }];
    for n in 1..=steps {
        let t = n as f64 * dt;
        let prev = rows[n - 1];
        let e = path.eval(t);
        let rate = (1.0 / dt) * (e - prev.strain);
        let advance = |theta: f64| -> Result<(DevTensor, f64, f64)> {
            let (z, _) = point_z_update(p, &e, prev.z, theta, dt, cfg)?;
            let zr = (1.0 / dt) * (z - prev.z);
            let diss = p.psi(&zr) + p.eta_z * zr.norm_sq();
            let coupling = theta * (p.alpha * rate.trace() + p.hardening_h2(&z).1.dot(&zr));
            Ok((z, diss, coupling))
        };
        let row = match mode {
            PointMode::Isothermal { .. } => {
                let (z, diss, _) = advance(theta0)?;
                PointRow {
                    t,
                    strain: e,
                    z,
                    stress: stress(p, &e, &z, theta0),
                    theta: theta0,
                    vartheta: vartheta0,
                    dissipation_rate: diss,
                }
            }
            PointMode::Adiabatic { .. } => {
                let mut guess = prev.vartheta;
                let mut found = None;
                for _ in 0..200 {
                    let theta = p.zeta(guess);
                    let (z, diss, coupling) = advance(theta)?;
                    let next = prev.vartheta + dt * (diss + coupling);
                    let done = (next - guess).abs() <= 1e-14 * next.abs().max(1.0);
                    guess = next;
                    if done {
                        found = Some((z, diss, theta));
                        break;
                    }
                }
                let Some((z, diss, theta)) = found else {
                    return Err(Error::NonConvergence {
                        what: "adiabatic temperature iteration",
                        iterations: 200,
                        residual: f64::NAN,
                        hint: "; try a smaller time step",
                    });
                };
                if !(guess > 0.0) {
                    return Err(Error::Positivity { t, min_enthalpy: guess });
                }
                PointRow {
                    t,
                    strain: e,
                    z,
                    stress: stress(p, &e, &z, theta),
                    theta,
                    vartheta: guess,
                    dissipation_rate: diss,
                }
            }
        };
        rows.push(row);
    }
    let cycles = summarize_cycles(&rows, path.period(), dt);
    Ok(PointRun { rows, cycles })
}

fn summarize_cycles(rows: &[PointRow], period: Option<f64>, dt: f64) -> Vec<CycleSummary> {
    let Some(period) = period else {
        return Vec::new();
    };
    let per = (period / dt).round() as usize;
    if per == 0 {
        return Vec::new();
    }
    let complete = (rows.len() - 1) / per;
    (0..complete)
        .map(|c| {
            let (mut area, mut diss) = (0.0, 0.0);
            for w in rows[c * per..=(c + 1) * per].windows(2) {
                let (a, b) = (&w[0], &w[1]);
                area += 0.5 * (a.stress + b.stress).ddot(&(b.strain - a.strain));
                diss += 0.5 * (a.dissipation_rate + b.dissipation_rate) * (b.t - a.t);
            }
            CycleSummary { index: c, loop_area: area, dissipated: diss }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dev(a: f64) -> SymTensor {
        DevTensor::new(a, 0.0).to_sym()
    }

    #[test]
    fn path_interpolates() {
        let p = StrainPath::triangle_cycles(dev(1.0), 1.0, 1).unwrap();
        assert_eq!(p.eval(0.0), SymTensor::ZERO);
        assert!((p.eval(0.125).dev().a - 0.5).abs() < 1e-15);
        assert!((p.eval(0.5).dev().a).abs() < 1e-15);
        assert_eq!(p.eval(5.0), SymTensor::ZERO);
    }

    #[test]
    fn elastic_regime_has_no_loop() {
        let params = MaterialParams::default();
        let path = StrainPath::triangle_cycles(dev(0.2), 1.0, 2).unwrap();
        let run = material_point_run(&path, PointMode::Isothermal { theta0: 1.0 }, &params, 1e-3, 2.0).unwrap();
        assert!(run.rows.iter().all(|r| r.z == DevTensor::ZERO));
        assert_eq!(run.cycles.len(), 2);
        for c in &run.cycles {
            assert!(c.loop_area.abs() < 1e-13);
            assert_eq!(c.dissipated, 0.0);
        }
    }

    #[test]
    fn point_update_satisfies_flow_rule() {
        let p = MaterialParams { c1_hat: 0.1, ..MaterialParams::default() };
        let e = dev(1.5) + 0.1 * SymTensor::IDENTITY;
        let (z, _) = point_z_update(&p, &e, DevTensor::new(0.1, -0.2), 0.8, 0.01, PointSolverConfig::default()).unwrap();
        let (_, g) = smooth(&p, &z, &e.dev(), 0.8);
        let dz = z - DevTensor::new(0.1, -0.2);
        let r = (p.eta_z / 0.01) * dz - shrink(-g, p.rho);
        assert!(r.norm() < 1e-11);
    }
}
