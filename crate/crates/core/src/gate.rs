//! Gate errors of a field-driven qubit rotation.
//!
//! The error of a single run is `1 - <psi_ideal| rho_at |psi_ideal>`, where
//! `rho_at` is the atom after the interaction with the field traced out and
//! `psi_ideal = R |psi_in>`. Since `rho_at` is bilinear in the input atom,
//! each field is reduced once to a 4x4 response matrix
//! `T[(i,a),(j,b)] = Tr(U_ia rho U_jb^dag)`, after which every atom of an
//! ensemble costs a handful of flops.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::fock::{self, FieldDensity, FieldState, Moments};
use crate::jcm::JcmBlocks;
use crate::linalg::{self, Banded, I, ZERO};
use crate::qubit::{QubitDensity, QubitState};

/// Rotation by `rotation` about the equatorial axis at azimuth `axis_azimuth`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationTarget {
    pub rotation: f64,
    pub axis_azimuth: f64,
    pub matrix: Matrix2<C64>,
}

fn rotation_matrix(rotation: f64, axis: f64) -> Matrix2<C64> {
    let (c, s) = ((0.5 * rotation).cos(), (0.5 * rotation).sin());
    // n.sigma for n = (cos a, sin a, 0)
    let ns = Matrix2::new(ZERO, C64::from_polar(1.0, -axis), C64::from_polar(1.0, axis), ZERO);
    Matrix2::identity() * C64::new(c, 0.0) - ns * (I * s)
}

/// The rotation that takes `cos(T/4)|g> + e^{i phi} sin(T/4)|e>` to
/// `cos(T/4)|g> - e^{i phi} sin(T/4)|e>` for `T = rotation`.
///
/// The axis sits at azimuth `phi - pi/2`; its sign is checked against that
/// mapping on construction rather than taken on faith.
pub fn ideal_rotation(rotation: f64, phi: f64) -> Result<RotationTarget> {
    if !rotation.is_finite() || !phi.is_finite() {
        return Err(Error::InvalidArgument("rotation angle and azimuth must be finite".into()));
    }
    let half = 0.5 * rotation;
    let v1 = QubitState::from_bloch(half, phi);
    let v1_out = QubitState {
        g: v1.g,
        e: -v1.e,
    };
    for axis in [phi - FRAC_PI_2, phi + FRAC_PI_2] {
        let matrix = rotation_matrix(rotation, axis);
        let target = RotationTarget {
            rotation,
            axis_azimuth: axis,
            matrix,
        };
        if target.apply(&v1).inner(&v1_out).norm() > 1.0 - 1e-12 {
            return Ok(target);
        }
    }
    Err(Error::InvalidArgument(format!(
        "no equatorial axis maps the ancilla point for rotation {rotation}, azimuth {phi}"
    )))
}

impl RotationTarget {
    pub fn apply(&self, psi: &QubitState) -> QubitState {
        let v = self.matrix * psi.as_vector();
        QubitState { g: v[0], e: v[1] }
    }
}

/// A field given either as a ket or as a density matrix.
#[derive(Clone, Copy, Debug)]
pub enum FieldRef<'a> {
    Pure(&'a FieldState),
    Mixed(&'a FieldDensity),
}

impl<'a> From<&'a FieldState> for FieldRef<'a> {
    fn from(s: &'a FieldState) -> Self {
        FieldRef::Pure(s)
    }
}

impl<'a> From<&'a FieldDensity> for FieldRef<'a> {
    fn from(r: &'a FieldDensity) -> Self {
        FieldRef::Mixed(r)
    }
}

impl FieldRef<'_> {
    fn dim(&self) -> usize {
        match self {
            FieldRef::Pure(s) => s.dim(),
            FieldRef::Mixed(r) => r.dim(),
        }
    }

    fn top_level(&self) -> f64 {
        match self {
            FieldRef::Pure(s) => s.amps()[s.dim() - 1].norm_sqr(),
            FieldRef::Mixed(r) => r.top_level_occupancy(),
        }
    }
}

/// How a fixed field maps input atoms to output atomic densities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldResponse {
    /// Index `2 i + a` for output level `i` and input level `a`, `g = 0`.
    t: Matrix4<C64>,
}

impl FieldResponse {
    pub fn new(field: FieldRef<'_>, blocks: &JcmBlocks) -> Result<Self> {
        if field.dim() != blocks.dim() {
            return Err(Error::InvalidArgument(format!(
                "field dimension {} does not match blocks dimension {}",
                field.dim(),
                blocks.dim()
            )));
        }
        let top = field.top_level();
        if top >= fock::DEFAULT_TAIL_TOL {
            return Err(Error::Truncation {
                mass: top,
                tol: fock::DEFAULT_TAIL_TOL,
            });
        }
        let ops: [&Banded; 4] = [blocks.u_gg(), blocks.u_ge(), blocks.u_eg(), blocks.u_ee()];
        let mut t = Matrix4::zeros();
        match field {
            FieldRef::Pure(s) => {
                let w: Vec<Vec<C64>> = ops.iter().map(|u| u.apply(s.amps())).collect();
                for p in 0..4 {
                    for q in 0..4 {
                        t[(p, q)] = linalg::inner(&w[q], &w[p]);
                    }
                }
            }
            FieldRef::Mixed(r) => {
                for p in 0..4 {
                    for q in 0..4 {
                        t[(p, q)] = ops[p].sandwich_trace(r.matrix(), ops[q]);
                    }
                }
            }
        }
        Ok(Self { t })
    }

    /// Reduced atomic state after the interaction.
    pub fn atom_density(&self, atom: &QubitState) -> QubitDensity {
        let v = [atom.g, atom.e];
        let mut rho = Matrix2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = ZERO;
                for a in 0..2 {
                    for b in 0..2 {
                        acc += v[a] * v[b].conj() * self.t[(2 * i + a, 2 * j + b)];
                    }
                }
                rho[(i, j)] = acc;
            }
        }
        QubitDensity(rho)
    }

    pub fn gate_error(&self, atom: &QubitState, target: &RotationTarget) -> f64 {
        let ideal = target.apply(atom);
        (1.0 - self.atom_density(atom).expectation(&ideal)).clamp(0.0, 1.0)
    }

    /// Error averaged over the whole Bloch sphere in closed form, using the
    /// Haar moment `E[v_a v_d v_c* v_b*] = (d_ac d_db + d_ab d_dc) / 6`.
    /// The second pairing collapses to `Tr T` because `R` is unitary.
    pub fn bloch_average_error(&self, target: &RotationTarget) -> f64 {
        let r = &target.matrix;
        let mut acc = self.t.trace();
        for i in 0..2 {
            for j in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        acc += r[(i, a)].conj() * r[(j, b)] * self.t[(2 * i + a, 2 * j + b)];
                    }
                }
            }
        }
        (1.0 - acc.re / 6.0).clamp(0.0, 1.0)
    }
}

/// Single-atom gate error, clamped to `[0, 1]`.
pub fn gate_error<'a>(
    field: impl Into<FieldRef<'a>>,
    atom: &QubitState,
    target: &RotationTarget,
    blocks: &JcmBlocks,
) -> Result<f64> {
    Ok(FieldResponse::new(field.into(), blocks)?.gate_error(atom, target))
}

/// Seeded sample of pure atomic states.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    pub seed: u64,
    pub states: Vec<QubitState>,
}

/// `count` states uniform on the Bloch sphere (`cos theta` uniform on `[-1, 1]`).
pub fn random_bloch_ensemble(count: usize, seed: u64) -> Ensemble {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = (0..count)
        .map(|_| {
            let cos_theta: f64 = rng.random_range(-1.0..=1.0);
            let phi: f64 = rng.random_range(0.0..2.0 * PI);
            QubitState::from_bloch(cos_theta.acos(), phi)
        })
        .collect();
    Ensemble { seed, states }
}

impl Ensemble {
    pub fn single(atom: QubitState) -> Self {
        Self {
            seed: 0,
            states: vec![atom],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorEnsembleReport {
    #[serde(skip)]
    pub errors: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub p10: f64,
    pub p25: f64,
    pub p75: f64,
    pub p90: f64,
    pub seed: u64,
}

/// Percentile by linear interpolation between order statistics at rank `q (n - 1)`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

impl ErrorEnsembleReport {
    pub fn from_errors(errors: Vec<f64>, seed: u64) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::InvalidArgument("empty ensemble".into()));
        }
        let mut sorted = errors.clone();
        sorted.sort_by(f64::total_cmp);
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        Ok(Self {
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            mean: mean.clamp(sorted[0], sorted[sorted.len() - 1]),
            p10: percentile(&sorted, 0.10),
            p25: percentile(&sorted, 0.25),
            p75: percentile(&sorted, 0.75),
            p90: percentile(&sorted, 0.90),
            seed,
            errors,
        })
    }
}

pub fn ensemble_errors<'a>(
    field: impl Into<FieldRef<'a>>,
    target: &RotationTarget,
    blocks: &JcmBlocks,
    ensemble: &Ensemble,
) -> Result<ErrorEnsembleReport> {
    let response = FieldResponse::new(field.into(), blocks)?;
    let errors = ensemble
        .states
        .par_iter()
        .map(|atom| response.gate_error(atom, target))
        .collect();
    ErrorEnsembleReport::from_errors(errors, ensemble.seed)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub r: f64,
    pub mean_n: f64,
    pub delta_n: f64,
    pub report: ErrorEnsembleReport,
    /// Error for an atom starting in `|g>`.
    pub ground_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SqueezeSweep {
    pub rows: Vec<SweepRow>,
    pub argmin: usize,
}

impl SqueezeSweep {
    pub fn best(&self) -> &SweepRow {
        &self.rows[self.argmin]
    }
}

/// Ensemble errors of `D(sqrt(n_bar)) S(r)|0>` for each `r`, rotating about
/// the x axis. Rows come back in grid order.
pub fn squeeze_sweep(
    n_bar: f64,
    rotation: f64,
    r_grid: &[f64],
    ensemble: &Ensemble,
    blocks: &JcmBlocks,
) -> Result<SqueezeSweep> {
    if r_grid.is_empty() {
        return Err(Error::InvalidArgument("empty squeeze grid".into()));
    }
    if !(n_bar > 0.0) {
        return Err(Error::InvalidArgument("n_bar must be positive".into()));
    }
    let target = ideal_rotation(rotation, FRAC_PI_2)?;
    let alpha = C64::new(n_bar.sqrt(), 0.0);
    let rows = r_grid
        .par_iter()
        .map(|&r| -> Result<SweepRow> {
            let field = fock::squeezed_state(alpha, r, blocks.dim())?;
            let response = FieldResponse::new(FieldRef::Pure(&field), blocks)?;
            let errors = ensemble.states.iter().map(|a| response.gate_error(a, &target)).collect();
            let m = field.moments();
            Ok(SweepRow {
                r,
                mean_n: m.mean_n,
                delta_n: m.delta_n(),
                report: ErrorEnsembleReport::from_errors(errors, ensemble.seed)?,
                ground_error: response.gate_error(&QubitState::ground(), &target),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let argmin = rows
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.report.mean.total_cmp(&b.1.report.mean))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(SqueezeSweep { rows, argmin })
}

/// Bloch-averaged error of a coherent field driving a `pi/2` pulse, `pi^2/(64 n) + 1/(16 n)`.
pub fn coherent_error_prediction(n_bar: f64) -> f64 {
    PI * PI / (64.0 * n_bar) + 1.0 / (16.0 * n_bar)
}

/// Average error `pi/(6 n)` of `|Phi_pi>`.
pub fn epsilon_one(n_bar: f64) -> f64 {
    PI / (6.0 * n_bar)
}

/// Average error `7 pi/(16 n)` of the companion state `|Phi_2>`.
pub fn epsilon_two(n_bar: f64) -> f64 {
    7.0 * PI / (16.0 * n_bar)
}

/// `(1 - lambda) eps_1 + lambda eps_2 = pi/(6 n) + 13 pi lambda / (48 n)`.
pub fn mixed_error_formula(lambda: f64, n_bar: f64) -> f64 {
    epsilon_one(n_bar) + lambda * 13.0 * PI / (48.0 * n_bar)
}

/// [`mixed_error_formula`] with `n_bar` the mean photon number of `|Phi_pi>` for `n_pi`.
pub fn mixed_error_budget(lambda: f64, n_pi: u32) -> Result<f64> {
    let spec = crate::optimal::PulseSpec::new(FRAC_PI_2, FRAC_PI_2, n_pi)?;
    let n_bar = crate::optimal::phi_theta(&spec)?.moments().mean_n;
    Ok(mixed_error_formula(lambda, n_bar))
}

/// Ensemble-averaged error of the lowest-order mixed fixed point for a `pi` pulse.
pub fn mixed_error_numeric(lambda: f64, n_pi: u32, ensemble: &Ensemble) -> Result<ErrorEnsembleReport> {
    let spec = crate::optimal::PulseSpec::new(FRAC_PI_2, FRAC_PI_2, n_pi)?;
    let anc = crate::recycler::AncillaSpec::new(spec.theta, spec.phi, lambda)?;
    let rho = crate::recycler::mixed_fixed_point(&anc, &spec)?;
    let target = ideal_rotation(spec.rotation(), spec.phi)?;
    ensemble_errors(&rho, &target, &spec.blocks()?, ensemble)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jcm::{evolve_joint, trace_out_field, JointState};
    use crate::linalg::ONE;
    use crate::optimal::{self, PulseSpec};

    #[test]
    fn pi_rotation_about_x() {
        let t = ideal_rotation(PI, FRAC_PI_2).unwrap();
        let expect = Matrix2::new(ZERO, -I, -I, ZERO);
        assert!((t.matrix - expect).camax() < 1e-15);
        let out = t.apply(&QubitState::new(ONE, I));
        assert!((out.inner(&QubitState::new(ONE, -I)).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_rotation_is_identity() {
        let t = ideal_rotation(0.0, 0.7).unwrap();
        assert!((t.matrix - Matrix2::identity()).camax() < 1e-15);
    }

    #[test]
    fn quarter_turn_maps_ancilla_point() {
        let t = ideal_rotation(FRAC_PI_2, 0.0).unwrap();
        let (c, s) = ((PI / 8.0).cos(), (PI / 8.0).sin());
        // axis along -y: R = cos(pi/4) + i sin(pi/4) sigma_y
        let h = C64::new(0.5f64.sqrt(), 0.0);
        let r = Matrix2::new(h, h, -h, h);
        assert!((t.matrix - r).camax() < 1e-15);
        let out = t.apply(&QubitState::new(C64::new(c, 0.0), C64::new(s, 0.0)));
        assert!((out.g - c).norm() < 1e-15 && (out.e + s).norm() < 1e-15);
    }

    #[test]
    fn unitary_targets() {
        for (rot, phi) in [(0.3, 0.1), (PI, -2.0), (2.0, 4.0)] {
            let m = ideal_rotation(rot, phi).unwrap().matrix;
            assert!((m.adjoint() * m - Matrix2::identity()).camax() < 1e-14);
        }
    }

    #[test]
    fn number_state_half_pulse_is_maximally_wrong() {
        let spec = PulseSpec::for_rotation(FRAC_PI_2, FRAC_PI_2, 16).unwrap();
        let blocks = spec.blocks().unwrap();
        let field = fock::number_state(16, spec.dim).unwrap();
        let t = ideal_rotation(FRAC_PI_2, FRAC_PI_2).unwrap();
        let e = gate_error(&field, &QubitState::ground(), &t, &blocks).unwrap();
        assert!((e - 0.5).abs() < 1e-14);
    }

    #[test]
    fn response_matches_explicit_evolution() {
        let spec = PulseSpec::new(1.0, 0.3, 20).unwrap();
        let blocks = spec.blocks().unwrap();
        let field = fock::coherent_state(C64::new(3.0, 1.0), spec.dim).unwrap();
        let response = FieldResponse::new(FieldRef::Pure(&field), &blocks).unwrap();
        let mixed = FieldResponse::new(FieldRef::Mixed(&field.to_density()), &blocks).unwrap();
        for atom in random_bloch_ensemble(8, 5).states {
            let joint = evolve_joint(&blocks, &JointState::product(&atom, &field));
            let direct = trace_out_field(&joint.to_density()).0;
            assert!((response.atom_density(&atom).0 - direct).camax() < 1e-13);
            assert!((mixed.atom_density(&atom).0 - direct).camax() < 1e-13);
        }
    }

    #[test]
    fn fixed_point_gives_exact_rotation() {
        let spec = PulseSpec::new(PI / 4.0, 1.1, 25).unwrap();
        let phi = optimal::phi_theta(&spec).unwrap();
        let t = ideal_rotation(spec.rotation(), spec.phi).unwrap();
        let e = gate_error(&phi, &spec.ancilla(), &t, &spec.blocks().unwrap()).unwrap();
        assert!(e < 1e-12);
    }

    #[test]
    fn ensemble_is_seeded_and_uniform() {
        let a = random_bloch_ensemble(2000, 42);
        assert_eq!(a, random_bloch_ensemble(2000, 42));
        assert_ne!(a, random_bloch_ensemble(2000, 43));
        let mean_z: f64 = a.states.iter().map(|s| s.bloch_vector()[2]).sum::<f64>() / 2000.0;
        assert!(mean_z.abs() < 3.0 / 2000f64.sqrt());
        assert!(a.states.iter().all(|s| (s.norm_sqr() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn closed_form_average_matches_large_sample() {
        let spec = PulseSpec::new(FRAC_PI_2, FRAC_PI_2, 25).unwrap();
        let blocks = spec.blocks().unwrap();
        let field = fock::coherent_state(C64::new(5.0, 0.0), spec.dim).unwrap();
        let t = ideal_rotation(PI, FRAC_PI_2).unwrap();
        let response = FieldResponse::new(FieldRef::Pure(&field), &blocks).unwrap();
        let sample = ensemble_errors(&field, &t, &blocks, &random_bloch_ensemble(100_000, 9)).unwrap();
        let exact = response.bloch_average_error(&t);
        assert!((sample.mean / exact - 1.0).abs() < 0.01, "{} vs {exact}", sample.mean);
        // six-point design: the octahedron integrates quartic polynomials exactly
        let octa: f64 = [(0.0, 0.0), (PI, 0.0), (FRAC_PI_2, 0.0), (FRAC_PI_2, PI), (FRAC_PI_2, FRAC_PI_2), (FRAC_PI_2, -FRAC_PI_2)]
            .iter()
            .map(|&(th, ph)| response.gate_error(&QubitState::from_bloch(th, ph), &t))
            .sum::<f64>()
            / 6.0;
        assert!((octa - exact).abs() < 1e-14);
    }

    #[test]
    fn percentiles_interpolate() {
        let r = ErrorEnsembleReport::from_errors(vec![4.0, 0.0, 1.0, 2.0, 3.0], 0).unwrap();
        assert_eq!((r.min, r.max, r.mean), (0.0, 4.0, 2.0));
        assert!((r.p10 - 0.4).abs() < 1e-15 && (r.p75 - 3.0).abs() < 1e-15);
        assert!(ErrorEnsembleReport::from_errors(vec![], 0).is_err());
    }

    #[test]
    fn single_atom_report() {
        let spec = PulseSpec::new(FRAC_PI_2, FRAC_PI_2, 16).unwrap();
        let blocks = spec.blocks().unwrap();
        let field = fock::coherent_state(C64::new(4.0, 0.0), spec.dim).unwrap();
        let t = ideal_rotation(PI, FRAC_PI_2).unwrap();
        let atom = QubitState::from_bloch(0.9, 2.0);
        let e = gate_error(&field, &atom, &t, &blocks).unwrap();
        let r = ensemble_errors(&field, &t, &blocks, &Ensemble::single(atom)).unwrap();
        for v in [r.min, r.max, r.mean, r.p10, r.p25, r.p75, r.p90] {
            assert_eq!(v, e);
        }
    }

    #[test]
    fn empty_sweep_rejected() {
        let blocks = JcmBlocks::new(0.3, 60).unwrap();
        let ens = random_bloch_ensemble(4, 1);
        assert!(squeeze_sweep(9.0, PI, &[], &ens, &blocks).is_err());
    }

    #[test]
    fn budget_coefficients() {
        assert!((13.0 * PI / 48.0 - (7.0 * PI / 16.0 - PI / 6.0)).abs() < 1e-15);
        assert_eq!(mixed_error_formula(0.0, 30.0), epsilon_one(30.0));
    }
}
