//! Single-mode field states on a truncated Fock basis `|0>..|D-1>`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, ONE, ZERO};

/// Largest probability allowed outside the retained Fock levels.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

/// Pure field state: normalized amplitudes over `|0>..|D-1>`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    amps: Vec<C64>,
}

impl FieldState {
    /// Normalizes `amps`. Fails on `D < 2` or a zero vector.
    pub fn new(mut amps: Vec<C64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::DimensionTooSmall {
                dim: amps.len(),
                required: 2,
            });
        }
        let norm = linalg::norm_sqr(&amps).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidArgument("field state has zero or non-finite norm".into()));
        }
        for a in amps.iter_mut() {
            *a /= norm;
        }
        Ok(Self { amps })
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &FieldState) -> C64 {
        linalg::inner(&self.amps, &other.amps)
    }

    pub fn to_density(&self) -> FieldDensity {
        FieldDensity {
            mat: linalg::outer(&self.amps),
        }
    }

    /// Phase-insensitive distance `min_chi || self - e^{i chi} other ||`.
    pub fn distance_up_to_phase(&self, other: &FieldState) -> f64 {
        (2.0 - 2.0 * self.inner(other).norm()).max(0.0).sqrt()
    }
}

/// Mixed field state: Hermitian, unit-trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldDensity {
    mat: DMatrix<C64>,
}

impl FieldDensity {
    /// Checks Hermiticity and unit trace (1e-12) and positivity (-1e-10).
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        let rho = Self { mat };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(mat: DMatrix<C64>) -> Self {
        Self { mat }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.mat.nrows();
        if d != self.mat.ncols() || d < 2 {
            return Err(Error::InvalidArgument(format!(
                "density must be square with D >= 2, got {}x{}",
                self.mat.nrows(),
                self.mat.ncols()
            )));
        }
        let herm = linalg::hermiticity_defect(&self.mat);
        if herm > 1e-12 {
            return Err(Error::InvalidArgument(format!("density not Hermitian (defect {herm:.2e})")));
        }
        let tr = linalg::trace(&self.mat);
        if (tr - ONE).norm() > 1e-12 {
            return Err(Error::InvalidArgument(format!("density trace {tr} differs from 1")));
        }
        let min_ev = self.min_eigenvalue();
        if min_ev < -1e-10 {
            return Err(Error::InvalidArgument(format!("density has eigenvalue {min_ev:.2e} < 0")));
        }
        Ok(())
    }

    /// Convex combination `sum_k w_k rho_k`. Weights must be non-negative and sum to one.
    pub fn mixture(parts: &[(f64, &FieldDensity)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let d = first.1.dim();
        let total: f64 = parts.iter().map(|p| p.0).sum();
        if parts.iter().any(|p| p.0 < 0.0 || p.1.dim() != d) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(
                "mixture weights must be non-negative, sum to 1, and share a dimension".into(),
            ));
        }
        let mut mat = DMatrix::zeros(d, d);
        for (w, rho) in parts {
            mat += &rho.mat * C64::new(*w, 0.0);
        }
        Ok(Self { mat })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.mat)
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.mat[(n, n)].re).collect()
    }

    pub fn top_level_occupancy(&self) -> f64 {
        let d = self.dim();
        self.mat[(d - 1, d - 1)].re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigenvalues(&self.mat)
            .first()
            .copied()
            .unwrap_or(0.0)
    }

    pub fn purity(&self) -> f64 {
        // Tr rho^2 = sum_ij |rho_ij|^2 for Hermitian rho
        self.mat.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn trace_distance(&self, other: &FieldDensity) -> f64 {
        linalg::trace_distance(&self.mat, &other.mat)
    }

    /// `<phi|rho|phi>`.
    pub fn expectation(&self, phi: &FieldState) -> f64 {
        let v = &self.mat * DMatrix::from_column_slice(phi.dim(), 1, phi.amps());
        linalg::inner(phi.amps(), v.as_slice()).re
    }
}

/// Photon-number moments and purity of a field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StateMoments {
    pub mean_n: f64,
    pub var_n: f64,
    pub purity: f64,
}

impl StateMoments {
    pub fn delta_n(&self) -> f64 {
        self.var_n.max(0.0).sqrt()
    }
}

pub trait Moments {
    fn moments(&self) -> StateMoments;
}

fn number_moments(p: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut m1, mut m2) = (0.0, 0.0);
    for (n, pn) in p.enumerate() {
        let n = n as f64;
        m1 += n * pn;
        m2 += n * n * pn;
    }
    (m1, m2 - m1 * m1)
}

impl Moments for FieldState {
    fn moments(&self) -> StateMoments {
        let (mean_n, var_n) = number_moments(self.amps.iter().map(|a| a.norm_sqr()));
        StateMoments {
            mean_n,
            var_n,
            purity: 1.0,
        }
    }
}

impl Moments for FieldDensity {
    fn moments(&self) -> StateMoments {
        let tr = self.trace().re;
        let (mean_n, var_n) = number_moments((0..self.dim()).map(|n| self.mat[(n, n)].re / tr));
        StateMoments {
            mean_n,
            var_n,
            purity: self.purity(),
        }
    }
}

/// Random density of the given rank, supported on the lowest `support` levels
/// of a `dim`-level space. Columns of a complex Gaussian matrix, so the
/// spectrum is generic.
pub fn random_density<R: rand::Rng + ?Sized>(
    dim: usize,
    support: usize,
    rank: usize,
    rng: &mut R,
) -> Result<FieldDensity> {
    if support == 0 || support > dim || rank == 0 {
        return Err(Error::InvalidArgument(format!(
            "random density needs 0 < support <= dim and rank > 0 (dim {dim}, support {support}, rank {rank})"
        )));
    }
    let mut g = DMatrix::<C64>::zeros(dim, rank);
    for j in 0..rank {
        for i in 0..support {
            g[(i, j)] = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
    }
    let mut mat = &g * g.adjoint();
    let tr = linalg::trace(&mat).re;
    mat /= C64::new(tr, 0.0);
    Ok(FieldDensity { mat })
}

/// `<phi|rho|phi>`, clamped to `[0, 1]`.
pub fn fidelity(pure: &FieldState, rho: &FieldDensity) -> f64 {
    rho.expectation(pure).clamp(0.0, 1.0)
}

pub fn number_state(n: usize, dim: usize) -> Result<FieldState> {
    if n >= dim {
        return Err(Error::IndexOutOfRange { index: n, dim });
    }
    let mut amps = vec![ZERO; dim];
    amps[n] = ONE;
    FieldState::new(amps)
}

pub fn coherent_state(alpha: C64, dim: usize) -> Result<FieldState> {
    coherent_state_with_tol(alpha, dim, DEFAULT_TAIL_TOL)
}

pub fn coherent_state_with_tol(alpha: C64, dim: usize, tail_tol: f64) -> Result<FieldState> {
    // the r = 0 member of the displaced squeezed family
    squeezed_state_with_tol(alpha, 0.0, dim, tail_tol)
}

/// `D(alpha) S(r) |0>` with `S(r) = exp(r (a^2 - a^dag^2) / 2)`.
///
/// For real positive `alpha` and `r > 0` this reduces the photon-number
/// variance (amplitude squeezing). Amplitudes come from the two-term
/// recurrence of the eigen-equation
/// `(cosh r a + sinh r a^dag) |psi> = (alpha cosh r + alpha* sinh r) |psi>`.
pub fn squeezed_state(alpha: C64, r: f64, dim: usize) -> Result<FieldState> {
    squeezed_state_with_tol(alpha, r, dim, DEFAULT_TAIL_TOL)
}

pub fn squeezed_state_with_tol(alpha: C64, r: f64, dim: usize, tail_tol: f64) -> Result<FieldState> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall { dim, required: 2 });
    }
    if !(alpha.re.is_finite() && alpha.im.is_finite() && r.is_finite()) {
        return Err(Error::InvalidArgument("non-finite squeezed-state parameters".into()));
    }
    let (mu, nu) = (r.cosh(), r.sinh());
    let beta = alpha * mu + alpha.conj() * nu;

    // unnormalized, c_0 = 1; `log_scale` tracks rescalings against overflow
    let mut amps = vec![ZERO; dim];
    amps[0] = ONE;
    amps[1] = beta / mu;
    let mut log_scale = 0.0;
    for n in 1..dim - 1 {
        let nf = n as f64;
        amps[n + 1] = (beta * amps[n] - amps[n - 1] * (nu * nf.sqrt())) / (mu * (nf + 1.0).sqrt());
        if amps[n + 1].norm() > 1e150 {
            for a in amps.iter_mut().take(n + 2) {
                *a *= 1e-150;
            }
            log_scale += 150.0 * std::f64::consts::LN_10;
        }
    }

    // exact vacuum amplitude fixes the full-space normalization
    let log_c0_sq = -alpha.norm_sqr() - (alpha.conj() * alpha.conj()).re * r.tanh() - mu.ln();
    let kept = linalg::norm_sqr(&amps);
    let log_kept = kept.ln() + 2.0 * log_scale + log_c0_sq;
    let tail = -log_kept.exp_m1();
    if tail >= tail_tol {
        return Err(Error::Truncation {
            mass: tail,
            tol: tail_tol,
        });
    }
    FieldState::new(amps)
}

/// Smallest dimension holding all but `tail_tol` of `|alpha>`.
pub fn coherent_min_dim(alpha: C64, tail_tol: f64) -> usize {
    let mut dim = (alpha.norm_sqr().ceil() as usize).max(2);
    while coherent_state_with_tol(alpha, dim, tail_tol).is_err() {
        dim += 1 + dim / 16;
    }
    dim
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn vacuum_from_zero_amplitude() {
        let v = coherent_state(c(0.0), 10).unwrap();
        assert!((v.amps()[0] - ONE).norm() < 1e-15);
        assert!(v.amps()[1..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn coherent_mean_and_variance_are_poissonian() {
        let s = coherent_state(c(5.0), 120).unwrap();
        let m = s.moments();
        assert!((m.mean_n - 25.0).abs() < 1e-8);
        assert!((m.var_n - 25.0).abs() < 1e-8);
        assert_eq!(m.purity, 1.0);
    }

    #[test]
    fn opposite_phase_coherent_overlap() {
        let a = coherent_state(c(5.0), 120).unwrap();
        let b = coherent_state(c(-5.0), 120).unwrap();
        // e^{-50} sits far below the roundoff of the alternating sum
        assert!(a.inner(&b).norm() < 1e-15);
        for (x, y) in a.probabilities().iter().zip(b.probabilities()) {
            assert!((x - y).abs() < 1e-15);
        }
        let f = fidelity(&a, &b.to_density());
        assert!((f - (-100.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn truncation_is_reported() {
        match coherent_state(c(5.0), 40) {
            Err(Error::Truncation { mass, .. }) => assert!(mass > 1e-10),
            other => panic!("expected truncation error, got {other:?}"),
        }
        assert!(squeezed_state(c(5.0), 0.3, 45).is_err());
    }

    #[test]
    fn coherent_min_dim_is_sufficient() {
        let d = coherent_min_dim(c(5.0), 1e-10);
        assert!(coherent_state(c(5.0), d).is_ok());
        assert!(d < 80);
    }

    #[test]
    fn number_states() {
        assert_eq!(number_state(0, 4).unwrap().amps(), &[ONE, ZERO, ZERO, ZERO]);
        assert_eq!(number_state(3, 4).unwrap().amps(), &[ZERO, ZERO, ZERO, ONE]);
        assert_eq!(number_state(7, 20).unwrap().moments().mean_n, 7.0);
        assert!(matches!(number_state(4, 4), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn moments_of_simple_states() {
        let vac = number_state(0, 5).unwrap().moments();
        assert_eq!((vac.mean_n, vac.var_n, vac.purity), (0.0, 0.0, 1.0));
        let mixed = FieldDensity::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(0.5),
            c(0.5),
        ])))
        .unwrap();
        assert!((mixed.moments().purity - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fidelity_extremes() {
        let phi = coherent_state(c(2.0), 30).unwrap();
        assert!((fidelity(&phi, &phi.to_density()) - 1.0).abs() < 1e-14);
        let zero = number_state(0, 4).unwrap();
        assert_eq!(fidelity(&zero, &number_state(1, 4).unwrap().to_density()), 0.0);
    }

    #[test]
    fn density_validation_rejects_bad_input() {
        let bad_trace = DMatrix::from_element(3, 3, c(0.0));
        assert!(FieldDensity::new(bad_trace).is_err());
        let mut neg = DMatrix::zeros(2, 2);
        neg[(0, 0)] = c(1.5);
        neg[(1, 1)] = c(-0.5);
        assert!(FieldDensity::new(neg).is_err());
    }

    #[test]
    fn zero_squeezing_is_coherent() {
        let a = coherent_state(c(5.0), 120).unwrap();
        let b = squeezed_state(c(5.0), 0.0, 120).unwrap();
        for (x, y) in a.amps().iter().zip(b.amps()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn squeezed_variance_decreases_with_r() {
        let mut last = f64::INFINITY;
        for k in 0..=30 {
            let r = 0.02 * k as f64;
            let v = squeezed_state(c(5.0), r, 160).unwrap().moments().var_n;
            assert!(v < last, "var_n not decreasing at r = {r}");
            last = v;
        }
    }

    #[test]
    fn squeezed_mean_matches_closed_form() {
        let s = squeezed_state(c(5.0), 0.3, 160).unwrap().moments();
        assert!((s.mean_n - (25.0 + 0.3f64.sinh().powi(2))).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn coherent_amplitude_ratio(re in -4.0f64..4.0, im in -4.0f64..4.0) {
            let alpha = C64::new(re, im);
            let s = coherent_state(alpha, 90).unwrap();
            let a = s.amps();
            prop_assert!((linalg::norm_sqr(a) - 1.0).abs() < 1e-12);
            for n in 0..a.len() - 1 {
                if a[n].norm() > 1e-8 {
                    let ratio = a[n + 1] / a[n];
                    let expect = alpha / ((n + 1) as f64).sqrt();
                    prop_assert!((ratio - expect).norm() < 1e-9 * (1.0 + expect.norm()));
                }
            }
        }

        #[test]
        fn moments_agree_with_direct_sums(re in 0.0f64..4.0, r in -0.4f64..0.6) {
            let s = squeezed_state(C64::new(re, 0.0), r, 100).unwrap();
            let p = s.probabilities();
            let m1: f64 = p.iter().enumerate().map(|(n, q)| n as f64 * q).sum();
            let m2: f64 = p.iter().enumerate().map(|(n, q)| (n * n) as f64 * q).sum();
            let m = s.moments();
            prop_assert!((m.mean_n - m1).abs() < 1e-12);
            prop_assert!((m.var_n - (m2 - m1 * m1)).abs() < 1e-11);
            prop_assert!((s.to_density().moments().mean_n - m1).abs() < 1e-12);
        }
    }
}
