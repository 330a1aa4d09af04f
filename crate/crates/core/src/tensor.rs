//! Symmetric and deviatoric 2×2 tensors.
//!
//! [`DevTensor`] stores coordinates in the orthonormal basis
//! `B1 = [[1,0],[0,-1]]/√2`, `B2 = [[0,1],[1,0]]/√2` of the trace-free
//! symmetric matrices, so the Euclidean norm of `(a, b)` is the Frobenius
//! norm of the matrix and `z:w = a·a' + b·b'`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Symmetric 2×2 tensor `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymTensor {
    pub const ZERO: SymTensor = SymTensor {
        xx: 0.0,
        xy: 0.0,
        yy: 0.0,
    };
    pub const IDENTITY: SymTensor = SymTensor {
        xx: 1.0,
        xy: 0.0,
        yy: 1.0,
    };

    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Full contraction `A:B`.
    pub fn ddot(&self, other: &SymTensor) -> f64 {
        self.xx * other.xx + 2.0 * self.xy * other.xy + self.yy * other.yy
    }

    pub fn norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn dev(&self) -> DevTensor {
        DevTensor {
            a: (self.xx - self.yy) * FRAC_1_SQRT_2,
            b: self.xy * SQRT_2,
        }
    }

    /// Positive definite (Sylvester criterion).
    pub fn is_spd(&self) -> bool {
        self.xx > 0.0 && self.det() > 0.0
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * self.trace();
        let r = (0.25 * (self.xx - self.yy).powi(2) + self.xy * self.xy).sqrt();
        (mean - r, mean + r)
    }

    /// Matrix–vector product.
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.xx * v[0] + self.xy * v[1],
            self.xy * v[0] + self.yy * v[1],
        ]
    }
}

impl Add for SymTensor {
    type Output = SymTensor;
    fn add(self, o: SymTensor) -> SymTensor {
        SymTensor::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }
}

impl AddAssign for SymTensor {
    fn add_assign(&mut self, o: SymTensor) {
        *self = *self + o;
    }
}

impl Sub for SymTensor {
    type Output = SymTensor;
    fn sub(self, o: SymTensor) -> SymTensor {
        SymTensor::new(self.xx - o.xx, self.xy - o.xy, self.yy - o.yy)
    }
}

impl Mul<SymTensor> for f64 {
    type Output = SymTensor;
    fn mul(self, t: SymTensor) -> SymTensor {
        SymTensor::new(self * t.xx, self * t.xy, self * t.yy)
    }
}

impl Neg for SymTensor {
    type Output = SymTensor;
    fn neg(self) -> SymTensor {
        -1.0 * self
    }
}

/// Trace-free symmetric 2×2 tensor in orthonormal deviatoric coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DevTensor {
    pub a: f64,
    pub b: f64,
}

impl DevTensor {
    pub const ZERO: DevTensor = DevTensor { a: 0.0, b: 0.0 };

    pub const fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn dot(&self, o: &DevTensor) -> f64 {
        self.a * o.a + self.b * o.b
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.a.hypot(self.b)
    }

    pub fn to_sym(&self) -> SymTensor {
        SymTensor {
            xx: self.a * FRAC_1_SQRT_2,
            xy: self.b * FRAC_1_SQRT_2,
            yy: -self.a * FRAC_1_SQRT_2,
        }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.a, self.b]
    }
}

impl Add for DevTensor {
    type Output = DevTensor;
    fn add(self, o: DevTensor) -> DevTensor {
        DevTensor::new(self.a + o.a, self.b + o.b)
    }
}

impl AddAssign for DevTensor {
    fn add_assign(&mut self, o: DevTensor) {
        self.a += o.a;
        self.b += o.b;
    }
}

impl Sub for DevTensor {
    type Output = DevTensor;
    fn sub(self, o: DevTensor) -> DevTensor {
        DevTensor::new(self.a - o.a, self.b - o.b)
    }
}

impl Mul<DevTensor> for f64 {
    type Output = DevTensor;
    fn mul(self, t: DevTensor) -> DevTensor {
        DevTensor::new(self * t.a, self * t.b)
    }
}

impl Neg for DevTensor {
    type Output = DevTensor;
    fn neg(self) -> DevTensor {
        DevTensor::new(-self.a, -self.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dev_roundtrip_is_trace_free() {
        let z = DevTensor::new(0.3, -1.2);
        let m = z.to_sym();
        assert_eq!(m.trace(), 0.0);
        let back = m.dev();
        assert!((back.a - z.a).abs() < 1e-15 && (back.b - z.b).abs() < 1e-15);
        assert!((m.norm() - z.norm()).abs() < 1e-15);
    }

    #[test]
    fn contraction_matches_matrix_form() {
        let z = DevTensor::new(0.7, 0.2);
        let w = DevTensor::new(-0.4, 1.5);
        assert!((z.to_sym().ddot(&w.to_sym()) - z.dot(&w)).abs() < 1e-15);
    }

    #[test]
    fn dev_projection_removes_trace() {
        let e = SymTensor::new(2.0, 0.5, -1.0);
        let d = e.dev().to_sym();
        let expected = e - (0.5 * e.trace()) * SymTensor::IDENTITY;
        assert!((d - expected).norm() < 1e-15);
    }

    #[test]
    fn eigenvalues_of_diagonal() {
        let (l0, l1) = SymTensor::new(3.0, 0.0, 1.0).eigenvalues();
        assert_eq!((l0, l1), (1.0, 3.0));
    }
}
