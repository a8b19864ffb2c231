//! Field states that rotate one Bloch-sphere point exactly and are left
//! unchanged by the interaction.
//!
//! For an ancilla `|v1> = c|g> + e^{i phi} s|e>` (`c = cos(theta/2)`,
//! `s = sin(theta/2)`) and pulse area `gT = theta / sqrt(n_target)`, the
//! state `|Phi_Theta>` with coefficients
//!
//! ```text
//! C_{n+1} = -i e^{i phi} tan(theta/2) cot(gT sqrt(n+1) / 2) C_n
//! ```
//!
//! is a simultaneous eigenvector of both conditional field operators and
//! rotates `|v1>` by `Theta = 2 theta` into `c|g> - e^{i phi} s|e>`. The
//! recursion stops at the first zero of the cotangent,
//! `n_max = (pi/gT)^2 - 1`, which is an integer whenever `theta = pi/k`.

use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fock::{self, FieldState, Moments, DEFAULT_TAIL_TOL};
use crate::jcm::JcmBlocks;
use crate::linalg;
use crate::qubit::QubitState;

/// Pulse that rotates the ancilla point `(theta, phi)` by `Theta = 2 theta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PulseSpec {
    /// Ancilla colatitude (half the rotation angle).
    pub theta: f64,
    /// Ancilla azimuth.
    pub phi: f64,
    /// Photon-number scale: `gT = theta / sqrt(n_target)`.
    pub n_target: u32,
    /// Fock truncation.
    pub dim: usize,
}

impl PulseSpec {
    /// Default truncation `4 n_target + 8`.
    pub fn new(theta: f64, phi: f64, n_target: u32) -> Result<Self> {
        if !(theta > 0.0 && theta < PI) {
            return Err(Error::DegenerateAncilla { theta });
        }
        if n_target == 0 {
            return Err(Error::InvalidArgument("n_target must be at least 1".into()));
        }
        if !phi.is_finite() {
            return Err(Error::InvalidArgument("azimuth must be finite".into()));
        }
        Ok(Self {
            theta,
            phi,
            n_target,
            dim: default_dim(n_target),
        })
    }

    /// Spec for a rotation by `rotation` (so the ancilla sits at colatitude `rotation / 2`).
    pub fn for_rotation(rotation: f64, phi: f64, n_target: u32) -> Result<Self> {
        Self::new(0.5 * rotation, phi, n_target)
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn rotation(&self) -> f64 {
        2.0 * self.theta
    }

    pub fn gt(&self) -> f64 {
        self.theta / (self.n_target as f64).sqrt()
    }

    /// First index whose coefficient vanishes exactly, `(pi/gT)^2`.
    pub fn termination_index(&self) -> f64 {
        (PI / self.gt()).powi(2)
    }

    pub fn ancilla(&self) -> QubitState {
        QubitState::from_bloch(self.theta, self.phi)
    }

    pub fn blocks(&self) -> Result<JcmBlocks> {
        JcmBlocks::new(self.gt(), self.dim)
    }

    pub(crate) fn cs(&self) -> (f64, f64) {
        ((0.5 * self.theta).cos(), (0.5 * self.theta).sin())
    }
}

pub fn default_dim(n_target: u32) -> usize {
    4 * n_target as usize + 8
}

/// Log-magnitudes of the exact recursion over its whole support, with `C_0 = 1`.
fn recursion_log_magnitudes(spec: &PulseSpec) -> Vec<f64> {
    let gt = spec.gt();
    let k_stop = spec.termination_index() * (1.0 - 1e-12);
    let log_tan = (0.5 * spec.theta).tan().ln();
    let mut lm = vec![0.0];
    let mut peak: f64 = 0.0;
    let mut k = 1usize;
    while (k as f64) < k_stop {
        let step = log_tan - (0.5 * gt * (k as f64).sqrt()).tan().ln();
        let next = lm[k - 1] + step;
        peak = peak.max(next);
        // steps decrease monotonically, so past the peak the rest underflows
        if step < 0.0 && next < peak - 760.0 {
            break;
        }
        lm.push(next);
        k += 1;
    }
    lm
}

fn masses(lm: &[f64]) -> Vec<f64> {
    let peak = lm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    lm.iter().map(|l| (2.0 * (l - peak)).exp()).collect()
}

/// Smallest truncation keeping all but `tail_tol` of the exact state.
pub fn required_dim(spec: &PulseSpec, tail_tol: f64) -> usize {
    let p = masses(&recursion_log_magnitudes(spec));
    let total: f64 = p.iter().sum();
    let mut tail = 0.0;
    for k in (0..p.len()).rev() {
        tail += p[k];
        if tail / total >= tail_tol {
            return (k + 1).max(2);
        }
    }
    2
}

/// Exact fixed-point state, `C_0` real positive.
pub fn phi_theta(spec: &PulseSpec) -> Result<FieldState> {
    phi_theta_with_tol(spec, DEFAULT_TAIL_TOL)
}

pub fn phi_theta_with_tol(spec: &PulseSpec, tail_tol: f64) -> Result<FieldState> {
    let lm = recursion_log_magnitudes(spec);
    let p = masses(&lm);
    let total: f64 = p.iter().sum();
    let tail: f64 = p.iter().skip(spec.dim).sum::<f64>() / total;
    if tail >= tail_tol || spec.dim < 2 {
        return Err(Error::DimensionTooSmall {
            dim: spec.dim,
            required: required_dim(spec, tail_tol),
        });
    }
    let peak = lm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let step_phase = spec.phi - 0.5 * PI;
    let amps = (0..spec.dim)
        .map(|k| match lm.get(k) {
            Some(l) => C64::from_polar((l - peak).exp(), k as f64 * step_phase),
            None => C64::new(0.0, 0.0),
        })
        .collect();
    FieldState::new(amps)
}

/// Norms of the two eigen-relation residuals,
/// `||(c U_eg + e^{i phi} s U_ee) Phi + e^{i phi} s Phi||` and
/// `||(c U_gg + e^{i phi} s U_ge) Phi - c Phi||`.
pub fn fixed_point_residuals(state: &FieldState, spec: &PulseSpec, blocks: &JcmBlocks) -> (f64, f64) {
    let (c, s) = spec.cs();
    let (kg, ke) = blocks.kraus(&spec.ancilla());
    let es = C64::from_polar(s, spec.phi);
    let amps = state.amps();
    let r_e: Vec<C64> = ke.apply(amps).iter().zip(amps).map(|(a, b)| a + es * b).collect();
    let r_g: Vec<C64> = kg.apply(amps).iter().zip(amps).map(|(a, b)| a - b * c).collect();
    (linalg::norm_sqr(&r_e).sqrt(), linalg::norm_sqr(&r_g).sqrt())
}

/// Gaussian approximation of `|Phi_Theta>`, optionally with the cubic skew factor.
///
/// `|C_n| ~ (Theta / (4 pi n_T sin(Theta/2)))^{1/4} exp(-x^2 Theta / (8 n_T sin(Theta/2)))
///          (1 + Theta (2 + Theta cot(Theta/2)) x^3 / (96 n_T^2 sin(Theta/2)))`
/// with `x = n - n_T + 1/2` and phase `e^{i n (phi - pi/2)}`; the exponent is
/// quadratic in `x`. Renormalized on the truncated grid.
pub fn phi_theta_gaussian(spec: &PulseSpec, with_cubic: bool) -> Result<FieldState> {
    let rot = spec.rotation();
    let n = spec.n_target as f64;
    let sin_half = (0.5 * rot).sin();
    let quad = rot / (8.0 * n * sin_half);
    let cubic = if with_cubic {
        rot * (2.0 + rot / (0.5 * rot).tan()) / (96.0 * n * n * sin_half)
    } else {
        0.0
    };
    let step_phase = spec.phi - 0.5 * PI;
    let amps = (0..spec.dim)
        .map(|k| {
            let x = k as f64 - n + 0.5;
            let mag = (-quad * x * x).exp() * (1.0 + cubic * x * x * x);
            C64::from_polar(1.0, k as f64 * step_phase) * mag
        })
        .collect();
    FieldState::new(amps)
}

/// Closed-form mean photon number of `|Phi_pi>`: `n - 1/2 + (2 + pi) / (8 sqrt n)`.
pub fn mean_n_prediction(n_pi: u32) -> f64 {
    let n = n_pi as f64;
    n - 0.5 + (2.0 + PI) / (8.0 * n.sqrt())
}

/// Photon-number width `sqrt(2 n sin(Theta/2) / Theta)` of `|Phi_Theta>`.
pub fn width_prediction(mean_n: f64, rotation: f64) -> f64 {
    (2.0 * mean_n * (0.5 * rotation).sin() / rotation).sqrt()
}

/// Companion state orthogonal to `|Phi_1>`, with its raw squared norm.
#[derive(Clone, Debug)]
pub struct PhiTwo {
    pub state: FieldState,
    pub norm_sqr: f64,
}

/// `[(s/c)(1 + U_ee) - (c/s)(1 - U_gg)] |Phi_1>`, normalized.
pub fn phi_two(spec: &PulseSpec, phi_one: &FieldState, blocks: &JcmBlocks) -> Result<PhiTwo> {
    let (c, s) = spec.cs();
    if c.abs() < 1e-300 || s.abs() < 1e-300 {
        return Err(Error::DegenerateAncilla { theta: spec.theta });
    }
    if phi_one.dim() != blocks.dim() {
        return Err(Error::InvalidArgument("state and blocks differ in dimension".into()));
    }
    let raw: Vec<C64> = phi_one
        .amps()
        .iter()
        .enumerate()
        .map(|(n, a)| {
            let w = (s / c) * (1.0 + blocks.u_ee_diag()[n]) - (c / s) * (1.0 - blocks.u_gg_diag()[n]);
            a * w
        })
        .collect();
    let norm_sqr = linalg::norm_sqr(&raw);
    Ok(PhiTwo {
        state: FieldState::new(raw)?,
        norm_sqr,
    })
}

/// Width-matched stand-in for a transcoherent state.
#[derive(Clone, Debug)]
pub struct SqueezedFit {
    pub state: FieldState,
    pub alpha: f64,
    pub r: f64,
    pub target_var: f64,
}

/// Amplitude-squeezed state with mean `n_bar` and variance `n_bar sin(Theta)/Theta`,
/// the width of a transcoherent state for a `Theta` rotation. Not the exact
/// transcoherent recursion.
pub fn transcoherent_surrogate(rotation: f64, n_bar: f64, dim: usize) -> Result<SqueezedFit> {
    if !(rotation > 0.0 && rotation < PI) {
        return Err(Error::InvalidArgument(format!(
            "transcoherent width vanishes or is undefined for rotation {rotation} (need 0 < Theta < pi)"
        )));
    }
    if !(n_bar > 0.0) {
        return Err(Error::InvalidArgument("n_bar must be positive".into()));
    }
    let target = n_bar * rotation.sin() / rotation;
    let build = |r: f64| -> Result<(FieldState, f64)> {
        let alpha = (n_bar - r.sinh().powi(2)).max(0.0).sqrt();
        Ok((fock::squeezed_state(C64::new(alpha, 0.0), r, dim)?, alpha))
    };
    let excess = |r: f64| -> Result<f64> { Ok(build(r)?.0.moments().var_n - target) };

    let (mut lo, mut hi) = (0.0, 0.0);
    let mut f_lo = excess(0.0)?;
    if f_lo <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "target variance {target} not below the coherent variance"
        )));
    }
    loop {
        hi += 0.05;
        let f_hi = excess(hi)?;
        if f_hi <= 0.0 {
            break;
        }
        if f_hi >= f_lo || hi > 3.0 {
            return Err(Error::InvalidArgument(format!(
                "variance {target} unreachable by amplitude squeezing"
            )));
        }
        lo = hi;
        f_lo = f_hi;
    }
    let mut r = 0.5 * (lo + hi);
    for _ in 0..200 {
        r = 0.5 * (lo + hi);
        let f = excess(r)?;
        if f.abs() < 1e-7 * target || hi - lo < 1e-15 {
            break;
        }
        if f > 0.0 {
            lo = r;
        } else {
            hi = r;
        }
    }
    let (state, alpha) = build(r)?;
    Ok(SqueezedFit {
        state,
        alpha,
        r,
        target_var: target,
    })
}
