//! Two-level atom states in the `{|g>, |e>}` basis.

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;

use crate::linalg::{ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitState {
    pub g: C64,
    pub e: C64,
}

impl QubitState {
    /// Normalizes `(g, e)`.
    pub fn new(g: C64, e: C64) -> Self {
        let n = (g.norm_sqr() + e.norm_sqr()).sqrt();
        Self { g: g / n, e: e / n }
    }

    pub fn ground() -> Self {
        Self { g: ONE, e: ZERO }
    }

    pub fn excited() -> Self {
        Self { g: ZERO, e: ONE }
    }

    /// `cos(theta/2)|g> + e^{i phi} sin(theta/2)|e>`; `|g>` is the north pole.
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        Self {
            g: C64::new((0.5 * theta).cos(), 0.0),
            e: C64::from_polar((0.5 * theta).sin(), phi),
        }
    }

    pub fn as_vector(&self) -> nalgebra::Vector2<C64> {
        nalgebra::Vector2::new(self.g, self.e)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.g.norm_sqr() + self.e.norm_sqr()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QubitState) -> C64 {
        self.g.conj() * other.g + self.e.conj() * other.e
    }

    /// Bloch vector `(x, y, z)` with `z = |g|^2 - |e|^2`.
    pub fn bloch_vector(&self) -> [f64; 3] {
        let coh = self.g.conj() * self.e;
        [2.0 * coh.re, 2.0 * coh.im, self.g.norm_sqr() - self.e.norm_sqr()]
    }
}

/// Reduced atomic density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitDensity(pub Matrix2<C64>);

impl QubitDensity {
    pub fn from_pure(psi: &QubitState) -> Self {
        let v = psi.as_vector();
        Self(v * v.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0[(0, 0)] + self.0[(1, 1)]
    }

    pub fn purity(&self) -> f64 {
        self.0.iter().map(|v| v.norm_sqr()).sum()
    }

    /// `<psi|rho|psi>`.
    pub fn expectation(&self, psi: &QubitState) -> f64 {
        let v = psi.as_vector();
        (v.adjoint() * self.0 * v)[(0, 0)].re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn bloch_poles_and_equator() {
        assert_eq!(QubitState::from_bloch(0.0, 1.3), QubitState::ground());
        let e = QubitState::from_bloch(PI, 0.0);
        assert!((e.e - ONE).norm() < 1e-15 && e.g.norm() < 1e-15);
        let y = QubitState::from_bloch(PI / 2.0, PI / 2.0).bloch_vector();
        assert!((y[1] - 1.0).abs() < 1e-15 && y[0].abs() < 1e-15 && y[2].abs() < 1e-15);
    }

    #[test]
    fn pure_density_has_unit_purity() {
        let rho = QubitDensity::from_pure(&QubitState::from_bloch(1.1, 0.4));
        assert!((rho.trace().re - 1.0).abs() < 1e-15);
        assert!((rho.purity() - 1.0).abs() < 1e-15);
    }
}
