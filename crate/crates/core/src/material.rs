//! Pointwise material laws: elasticity, hardening, dissipation and the
//! enthalpy transformation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::tensor::{DevTensor, SymTensor};

/// Constitutive constants. Field names match the `[material]` section of
/// the run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialParams {
    /// Lamé shear modulus μ.
    pub mu: f64,
    /// Lamé modulus λ.
    pub lambda: f64,
    /// Viscosity of the momentum balance (`L = η_u·I`).
    pub eta_u: f64,
    /// Internal viscosity of the flow rule (`M = η_z·I` on deviators).
    pub eta_z: f64,
    /// Gradient regularization of the internal variable.
    pub nu: f64,
    /// Thermal expansion coupling.
    pub alpha: f64,
    /// Dissipation threshold, `Ψ(v) = ρ|v|`.
    pub rho: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Regularization width of the hardening law.
    pub delta: f64,
    pub c1_hat: f64,
    pub c2_hat: f64,
    /// Heat-capacity scale, `c(θ) = c_c (1+θ)^(β₁−1)`.
    pub c_c: f64,
    pub beta1: f64,
    /// Transformed conductivity, `κ^c = k0·I`.
    pub k0: f64,
    /// Lower bound of the initial enthalpy.
    pub vartheta_bar: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self {
            mu: 1.0,
            lambda: 1.0,
            eta_u: 1.0,
            eta_z: 1.0,
            nu: 0.1,
            alpha: 0.1,
            rho: 0.5,
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            delta: 1e-2,
            c1_hat: 0.0,
            c2_hat: 0.0,
            c_c: 1.0,
            beta1: 4.0,
            k0: 0.5,
            vartheta_bar: 1.0,
        }
    }
}

/// Soft-threshold `max(0, 1 − t/|r|)·r`.
pub fn shrink(r: DevTensor, threshold: f64) -> DevTensor {
    let n = r.norm();
    if n <= threshold {
        DevTensor::ZERO
    } else {
        (1.0 - threshold / n) * r
    }
}

fn sqrt_reg(delta: f64, z: DevTensor) -> (f64, DevTensor) {
    let s = (delta * delta + z.norm_sq()).sqrt();
    (s, (1.0 / s) * z)
}

impl MaterialParams {
    /// Checks every sign and range constraint and reports all violations.
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
        let mut need = |ok: bool, name: &'static str, detail: String| {
            if !ok {
                v.push(Violation::new(name, detail));
            }
        };
        let all = [
            self.mu,
            self.lambda,
            self.eta_u,
            self.eta_z,
            self.nu,
            self.alpha,
            self.rho,
            self.c1,
            self.c2,
            self.c3,
            self.delta,
            self.c1_hat,
            self.c2_hat,
            self.c_c,
            self.beta1,
            self.k0,
            self.vartheta_bar,
        ];
        need(
            all.iter().all(|x| x.is_finite()),
            "material.finite",
            "all material parameters must be finite".into(),
        );
        need(
            self.mu > 0.0 && self.lambda >= 0.0,
            "material.elasticity_positive_definite",
            format!(
                "elasticity must be positive definite on symmetric tensors: need mu > 0 and lambda >= 0 (mu = {}, lambda = {})",
                self.mu, self.lambda
            ),
        );
        need(
            self.eta_u > 0.0,
            "material.viscosity_L_positive_definite",
            format!("eta_u must be > 0 (got {})", self.eta_u),
        );
        need(
            self.eta_z > 0.0,
            "material.viscosity_M_positive_definite",
            format!("eta_z must be > 0 (got {})", self.eta_z),
        );
        need(self.nu >= 0.0, "material.nu_nonnegative", format!("nu must be >= 0 (got {})", self.nu));
        need(
            self.alpha >= 0.0,
            "material.alpha_nonnegative",
            format!("alpha must be >= 0 (got {})", self.alpha),
        );
        need(
            self.rho > 0.0,
            "material.dissipation_threshold_positive",
            format!("rho must be > 0 (got {})", self.rho),
        );
        need(
            self.c1 > 0.0 && self.c2 > 0.0 && self.c3 > 0.0,
            "material.hardening_coefficients_positive",
            format!(
                "c1, c2, c3 must be > 0 (got {}, {}, {})",
                self.c1, self.c2, self.c3
            ),
        );
        need(
            self.delta > 0.0,
            "material.regularization_delta_positive",
            format!("delta must be > 0 (got {})", self.delta),
        );
        need(
            self.c1_hat >= 0.0 && self.c2_hat >= 0.0,
            "material.coupled_hardening_nonnegative",
            format!(
                "c1_hat and c2_hat must be >= 0 (got {}, {})",
                self.c1_hat, self.c2_hat
            ),
        );
        need(
            self.c_c > 0.0,
            "material.heat_capacity_lower_bound_positive",
            format!("c_c must be > 0 (got {})", self.c_c),
        );
        need(
            self.beta1 >= 4.0,
            "material.beta1_at_least_4",
            format!(
                "global existence requires beta1 >= 4 (got {})",
                self.beta1
            ),
        );
        need(
            self.k0 > 0.0,
            "material.conductivity_uniformly_positive",
            format!("k0 must be > 0 (got {})", self.k0),
        );
        need(
            self.vartheta_bar > 0.0,
            "material.initial_enthalpy_strictly_positive",
            format!("vartheta_bar must be > 0 (got {})", self.vartheta_bar),
        );
        v
    }

    /// `E ξ = 2μ ξ + λ tr(ξ) I`.
    pub fn elastic_apply(&self, xi: &SymTensor) -> SymTensor {
        2.0 * self.mu * *xi + (self.lambda * xi.trace()) * SymTensor::IDENTITY
    }

    /// `½E(e−z):(e−z)`.
    pub fn elastic_energy(&self, e: &SymTensor, z: &DevTensor) -> f64 {
        let d = *e - z.to_sym();
        0.5 * self.elastic_apply(&d).ddot(&d)
    }

    /// Stored energy `W₁ = ½E(e−z):(e−z) + (ν/2)|∇z|² + H₁^δ(z)`.
    /// `gz` holds the partial derivatives `∂z/∂x`, `∂z/∂y`.
    pub fn w1_density(&self, e: &SymTensor, z: &DevTensor, gz: &[DevTensor; 2]) -> f64 {
        self.elastic_energy(e, z)
            + 0.5 * self.nu * (gz[0].norm_sq() + gz[1].norm_sq())
            + self.hardening_h1(z).0
    }

    /// Regularized hardening `H₁^δ` and its gradient.
    pub fn hardening_h1(&self, z: &DevTensor) -> (f64, DevTensor) {
        let r2 = z.norm_sq();
        let (s, ds) = sqrt_reg(self.delta, *z);
        let mut value = self.c1 * s + self.c2 * r2;
        let mut grad = self.c1 * ds + (2.0 * self.c2) * *z;
        let r = r2.sqrt();
        let excess = r - self.c3;
        if excess > 0.0 {
            let den = self.delta * (1.0 + r2);
            let e3 = excess * excess * excess;
            value += e3 * excess / den;
            let dpdr = (4.0 * e3 * (1.0 + r2) - e3 * excess * 2.0 * r) / (den * (1.0 + r2));
            grad += (dpdr / r) * *z;
        }
        (value, grad)
    }

    /// Temperature-coupled hardening `H₂(z) = ĉ₁√(δ²+|z|²) + ĉ₂|z|²`.
    pub fn hardening_h2(&self, z: &DevTensor) -> (f64, DevTensor) {
        let (s, ds) = sqrt_reg(self.delta, *z);
        (
            self.c1_hat * s + self.c2_hat * z.norm_sq(),
            self.c1_hat * ds + (2.0 * self.c2_hat) * *z,
        )
    }

    /// Growth constant with `|D H₂(z)| ≤ C (1 + |z|)` for `|z| ≤ z_sup`.
    pub fn h2_growth_constant(&self, z_sup: f64) -> f64 {
        self.c1_hat + 2.0 * self.c2_hat * (1.0 + z_sup)
    }

    /// Dissipation potential `Ψ(v) = ρ|v|`.
    pub fn psi(&self, v: &DevTensor) -> f64 {
        self.rho * v.norm()
    }

    /// Minimizer of `ρ|δ| + (η_z/2Δt)|δ|² − r:δ`, with `r` a force density.
    /// The lumped-mass weight `m_w` scales every term and drops out.
    pub fn prox_flow(&self, r: &DevTensor, dt: f64, m_w: f64) -> DevTensor {
        debug_assert!(dt > 0.0 && m_w > 0.0);
        (dt / self.eta_z) * shrink(*r, self.rho)
    }

    /// Heat capacity `c(θ) = c_c (1+θ)^(β₁−1)`.
    pub fn heat_capacity(&self, theta: f64) -> f64 {
        self.c_c * (1.0 + theta).powf(self.beta1 - 1.0)
    }

    /// Enthalpy `g(θ) = ∫₀^θ c = (c_c/β₁)((1+θ)^β₁ − 1)`.
    pub fn g_of_theta(&self, theta: f64) -> Result<f64> {
        if !(theta >= 0.0) {
            return Err(Error::Domain(format!(
                "enthalpy transform needs theta >= 0 (got {theta})"
            )));
        }
        Ok(self.c_c / self.beta1 * (self.beta1 * theta.ln_1p()).exp_m1())
    }

    /// Temperature from enthalpy: `g⁻¹(ϑ)` for `ϑ ≥ 0`, else 0.
    pub fn zeta(&self, vartheta: f64) -> f64 {
        if vartheta > 0.0 {
            ((self.beta1 * vartheta / self.c_c).ln_1p() / self.beta1).exp_m1()
        } else {
            0.0
        }
    }

    /// Transformed conductivity `κ^c = k0·I`.
    pub fn kappa_c(&self, _e: &SymTensor, _z: &DevTensor, _vartheta: f64) -> SymTensor {
        self.k0 * SymTensor::IDENTITY
    }

    /// Physical conductivity `κ = κ^c·c(ζ(ϑ))`.
    pub fn kappa(&self, e: &SymTensor, z: &DevTensor, vartheta: f64) -> SymTensor {
        self.heat_capacity(self.zeta(vartheta)) * self.kappa_c(e, z, vartheta)
    }

    /// Entropy function `S(θ) = ∫₁^θ c(s)/s ds`.
    pub fn entropy_coefficient(&self, theta: f64) -> Result<f64> {
        if !(theta > 0.0) {
            return Err(Error::Domain(format!(
                "entropy needs theta > 0 (got {theta})"
            )));
        }
        let n = self.beta1 - 1.0;
        if (n - n.round()).abs() < 1e-12 {
            // Binomial expansion of (1+s)^n / s.
            let n = n.round() as u32;
            let mut sum = theta.ln();
            let mut binom = 1.0;
            for k in 1..=n {
                binom *= f64::from(n - k + 1) / f64::from(k);
                sum += binom * (theta.powi(k as i32) - 1.0) / f64::from(k);
            }
            Ok(self.c_c * sum)
        } else {
            // s = e^w turns ds/s into dw.
            let f = |w: f64| self.heat_capacity(w.exp());
            Ok(adaptive_simpson(&f, 0.0, theta.ln(), 1e-13, 50))
        }
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, depth)
}
