use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Symmetric 2×2 tensor with the off-diagonal entry stored once.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymTensor2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymTensor2 {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0);
    pub const IDENTITY: Self = Self::new(1.0, 0.0, 1.0);

    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub const fn diag(xx: f64, yy: f64) -> Self {
        Self::new(xx, 0.0, yy)
    }

    /// Symmetric part of a general 2×2 matrix given row-major.
    pub fn sym(m: [[f64; 2]; 2]) -> Self {
        Self::new(m[0][0], 0.5 * (m[0][1] + m[1][0]), m[1][1])
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Trace-free part `z - (tr z / 2) Id`.
    pub fn dev(&self) -> Self {
        let half = 0.5 * (self.xx - self.yy);
        Self::new(half, self.xy, -half)
    }

    /// Frobenius product `z : w`.
    pub fn ddot(&self, other: &Self) -> f64 {
        self.xx * other.xx + 2.0 * self.xy * other.xy + self.yy * other.yy
    }

    pub fn norm_sq(&self) -> f64 {
        self.ddot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Eigenvalues in ascending order.
    pub fn principal_values(&self) -> (f64, f64) {
        let mean = 0.5 * self.trace();
        let half = 0.5 * (self.xx - self.yy);
        let radius = half.hypot(self.xy);
        (mean - radius, mean + radius)
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }
}

impl Add for SymTensor2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.xx + rhs.xx, self.xy + rhs.xy, self.yy + rhs.yy)
    }
}

impl Sub for SymTensor2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.xx - rhs.xx, self.xy - rhs.xy, self.yy - rhs.yy)
    }
}

impl Neg for SymTensor2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.xx, -self.xy, -self.yy)
    }
}

impl Mul<f64> for SymTensor2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(s * self.xx, s * self.xy, s * self.yy)
    }
}

impl Mul<SymTensor2> for f64 {
    type Output = SymTensor2;
    fn mul(self, z: SymTensor2) -> SymTensor2 {
        z * self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Deviator of a general (not necessarily symmetric) matrix, entry by entry.
    fn general_dev(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let off = 0.5 * (m[0][1] + m[1][0]);
        [[0.5 * (m[0][0] - m[1][1]), off], [off, 0.5 * (m[1][1] - m[0][0])]]
    }

    #[test]
    fn dev_matches_general_formula_on_symmetric_input() {
        let m = [[2.0, 1.0], [1.0, 0.0]];
        let z = SymTensor2::sym(m);
        let g = general_dev(m);
        let d = z.dev();
        assert_eq!([[d.xx, d.xy], [d.xy, d.yy]], g);
    }

    #[test]
    fn norm_counts_off_diagonal_twice() {
        let z = SymTensor2::new(1.0, 2.0, 3.0);
        assert_eq!(z.norm_sq(), 1.0 + 8.0 + 9.0);
    }

    #[test]
    fn principal_values_of_diagonal() {
        assert_eq!(SymTensor2::diag(3.0, -1.0).principal_values(), (-1.0, 3.0));
    }
}
