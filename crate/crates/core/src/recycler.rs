//! The field channel induced by one ancilla passing through the cavity, and
//! its iteration towards the fixed point.
//!
//! An ancilla in `rho_a = (1 - lambda)|v1><v1| + lambda|v2><v2|` interacts
//! once and is discarded. For a pure atom `|v>` the field picks up the two
//! operators `K_g = v_g U_gg + v_e U_ge` and `K_e = v_g U_eg + v_e U_ee`, so
//! the channel is a sum of four sandwiches. No joint `2D x 2D` density is ever
//! formed here; that path lives in [`crate::jcm`] and serves as the oracle.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{self, FieldDensity, FieldState, Moments};
use crate::jcm::JcmBlocks;
use crate::linalg;
use crate::optimal::{self, PulseSpec};
use crate::qubit::QubitState;

/// Input top-level occupancy above which truncation leakage would show up in tests.
pub const INPUT_TOP_LEVEL_TOL: f64 = 1e-10;
/// Output top-level occupancy that signals the field is running into the cutoff.
pub const OUTPUT_TOP_LEVEL_TOL: f64 = 1e-8;
pub const DEFAULT_STEP_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AncillaSpec {
    pub theta: f64,
    pub phi: f64,
    /// Weight of the orthogonal state `|v2>`.
    pub lambda: f64,
}

impl AncillaSpec {
    pub fn new(theta: f64, phi: f64, lambda: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < std::f64::consts::PI) {
            return Err(Error::DegenerateAncilla { theta });
        }
        if !(0.0..0.5).contains(&lambda) {
            return Err(Error::InvalidArgument(format!(
                "preparation error lambda = {lambda} outside [0, 1/2)"
            )));
        }
        Ok(Self { theta, phi, lambda })
    }

    pub fn pure(spec: &PulseSpec) -> Self {
        Self {
            theta: spec.theta,
            phi: spec.phi,
            lambda: 0.0,
        }
    }

    pub fn v1(&self) -> QubitState {
        QubitState::from_bloch(self.theta, self.phi)
    }

    /// `s|g> - e^{i phi} c|e>`.
    pub fn v2(&self) -> QubitState {
        let (c, s) = ((0.5 * self.theta).cos(), (0.5 * self.theta).sin());
        QubitState {
            g: C64::new(s, 0.0),
            e: -C64::from_polar(c, self.phi),
        }
    }
}

fn check_input(rho: &FieldDensity, blocks: &JcmBlocks) -> Result<()> {
    if rho.dim() != blocks.dim() {
        return Err(Error::InvalidArgument(format!(
            "field dimension {} does not match blocks dimension {}",
            rho.dim(),
            blocks.dim()
        )));
    }
    let top = rho.top_level_occupancy();
    if top >= INPUT_TOP_LEVEL_TOL {
        return Err(Error::Truncation {
            mass: top,
            tol: INPUT_TOP_LEVEL_TOL,
        });
    }
    Ok(())
}

fn accumulate(out: &mut nalgebra::DMatrix<C64>, rho: &FieldDensity, atom: &QubitState, blocks: &JcmBlocks, w: f64) {
    let (kg, ke) = blocks.kraus(atom);
    let w = C64::new(w, 0.0);
    *out += kg.sandwich(rho.matrix()) * w;
    *out += ke.sandwich(rho.matrix()) * w;
}

fn finish(out: nalgebra::DMatrix<C64>) -> Result<FieldDensity> {
    let out = FieldDensity::from_matrix_unchecked(out);
    let top = out.top_level_occupancy();
    if top >= OUTPUT_TOP_LEVEL_TOL {
        return Err(Error::Truncation {
            mass: top,
            tol: OUTPUT_TOP_LEVEL_TOL,
        });
    }
    Ok(out)
}

/// Field after one interaction with a pure atom that is then discarded.
pub fn atom_channel(rho: &FieldDensity, atom: &QubitState, blocks: &JcmBlocks) -> Result<FieldDensity> {
    check_input(rho, blocks)?;
    let d = rho.dim();
    let mut out = nalgebra::DMatrix::zeros(d, d);
    accumulate(&mut out, rho, atom, blocks, 1.0);
    finish(out)
}

/// Field after one ancilla drawn from `(1 - lambda)|v1><v1| + lambda|v2><v2|`.
pub fn ancilla_channel(rho: &FieldDensity, anc: &AncillaSpec, blocks: &JcmBlocks) -> Result<FieldDensity> {
    check_input(rho, blocks)?;
    let d = rho.dim();
    let mut out = nalgebra::DMatrix::zeros(d, d);
    accumulate(&mut out, rho, &anc.v1(), blocks, 1.0 - anc.lambda);
    if anc.lambda > 0.0 {
        accumulate(&mut out, rho, &anc.v2(), blocks, anc.lambda);
    }
    finish(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    /// Number of ancillas that have interacted; 0 is the starting field.
    pub iteration: usize,
    pub fidelity: f64,
    pub mean_n: f64,
    pub purity: f64,
    /// Half the Frobenius norm of the last change, a lower bound on its trace distance.
    pub step: f64,
}

impl TraceRecord {
    fn of(iteration: usize, rho: &FieldDensity, target: &FieldState, step: f64) -> Self {
        let m = rho.moments();
        Self {
            iteration,
            fidelity: fock::fidelity(target, rho),
            mean_n: m.mean_n,
            purity: m.purity,
            step,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceTrace {
    pub initial: TraceRecord,
    /// One record per channel application.
    pub records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    /// First record (including the initial one) satisfying `pred`.
    pub fn first_where(&self, pred: impl Fn(&TraceRecord) -> bool) -> Option<&TraceRecord> {
        std::iter::once(&self.initial).chain(&self.records).find(|r| pred(r))
    }

    pub fn last(&self) -> &TraceRecord {
        self.records.last().unwrap_or(&self.initial)
    }

    pub fn min_purity(&self) -> f64 {
        std::iter::once(&self.initial)
            .chain(&self.records)
            .map(|r| r.purity)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IterationLimits {
    pub max_iters: usize,
    /// Stop once successive iterates are closer than this in trace distance.
    pub tol: f64,
}

impl Default for IterationLimits {
    fn default() -> Self {
        Self {
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_STEP_TOL,
        }
    }
}

#[derive(Clone, Debug)]
pub struct IterationOutcome {
    pub state: FieldDensity,
    pub trace: ConvergenceTrace,
    pub converged: bool,
}

impl IterationOutcome {
    /// Turns an unconverged run into [`Error::NoConvergence`].
    pub fn require_converged(self) -> Result<Self> {
        match self.failure() {
            None => Ok(self),
            Some(e) => Err(e),
        }
    }

    pub fn failure(&self) -> Option<Error> {
        (!self.converged).then(|| Error::NoConvergence {
            iterations: self.trace.records.len(),
            last_step: self.trace.last().step,
        })
    }
}

/// Applies [`ancilla_channel`] until two successive fields are within `limits.tol`
/// in trace distance, recording fidelity to `target` along the way.
pub fn iterate(
    rho0: &FieldDensity,
    anc: &AncillaSpec,
    blocks: &JcmBlocks,
    target: &FieldState,
    limits: IterationLimits,
) -> Result<IterationOutcome> {
    iterate_observed(rho0, anc, blocks, target, limits, |_, _| {})
}

/// [`iterate`], calling `observe(k, rho_k)` after every step.
pub fn iterate_observed(
    rho0: &FieldDensity,
    anc: &AncillaSpec,
    blocks: &JcmBlocks,
    target: &FieldState,
    limits: IterationLimits,
    mut observe: impl FnMut(usize, &FieldDensity),
) -> Result<IterationOutcome> {
    let mut trace = ConvergenceTrace {
        initial: TraceRecord::of(0, rho0, target, f64::NAN),
        records: Vec::new(),
    };
    let mut rho = rho0.clone();
    let mut converged = false;
    for k in 1..=limits.max_iters {
        let next = ancilla_channel(&rho, anc, blocks)?;
        let diff = next.matrix() - rho.matrix();
        let step = 0.5 * diff.norm();
        let (done, _) = linalg::trace_distance_below(next.matrix(), rho.matrix(), limits.tol);
        trace.records.push(TraceRecord::of(k, &next, target, step));
        observe(k, &next);
        rho = next;
        if done {
            converged = true;
            break;
        }
    }
    Ok(IterationOutcome {
        state: rho,
        trace,
        converged,
    })
}

/// Lowest-order fixed point `(1 - lambda)|Phi1><Phi1| + lambda|Phi2><Phi2|`.
pub fn mixed_fixed_point(anc: &AncillaSpec, spec: &PulseSpec) -> Result<FieldDensity> {
    if (anc.theta - spec.theta).abs() > 1e-12 || (anc.phi - spec.phi).abs() > 1e-12 {
        return Err(Error::InvalidArgument(
            "ancilla and pulse specs describe different Bloch points".into(),
        ));
    }
    let phi1 = optimal::phi_theta(spec)?;
    let p1 = phi1.to_density();
    if anc.lambda == 0.0 {
        return Ok(p1);
    }
    let phi2 = optimal::phi_two(spec, &phi1, &spec.blocks()?)?;
    FieldDensity::mixture(&[(1.0 - anc.lambda, &p1), (anc.lambda, &phi2.state.to_density())])
}

/// Populations of `rho` on `|Phi1>`, `|Phi2>` and the rest of the space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupportWeights {
    pub phi_one: f64,
    pub phi_two: f64,
    pub off_support: f64,
}

pub fn support_weights(rho: &FieldDensity, phi1: &FieldState, phi2: &FieldState) -> SupportWeights {
    let w1 = rho.expectation(phi1);
    let w2 = rho.expectation(phi2);
    SupportWeights {
        phi_one: w1,
        phi_two: w2,
        off_support: rho.trace().re - w1 - w2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jcm::{evolve_joint_density, trace_out_atom};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn oracle(rho: &FieldDensity, anc: &AncillaSpec, blocks: &JcmBlocks) -> FieldDensity {
        let d = rho.dim();
        let mut out = nalgebra::DMatrix::zeros(d, d);
        for (w, v) in [(1.0 - anc.lambda, anc.v1()), (anc.lambda, anc.v2())] {
            let a = nalgebra::DMatrix::from_fn(2, 2, |i, j| {
                let x = [v.g, v.e];
                x[i] * x[j].conj()
            });
            let joint = a.kronecker(rho.matrix());
            let after = trace_out_atom(&evolve_joint_density(blocks, &joint));
            out += after.matrix() * C64::new(w, 0.0);
        }
        FieldDensity::from_matrix_unchecked(out)
    }

    #[test]
    fn v2_is_orthogonal() {
        let anc = AncillaSpec::new(0.7, 2.1, 0.1).unwrap();
        assert!(anc.v1().inner(&anc.v2()).norm() < 1e-15);
        assert!((anc.v2().norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        assert!(AncillaSpec::new(1.0, 0.0, 0.5).is_err());
        assert!(AncillaSpec::new(1.0, 0.0, -0.1).is_err());
        assert!(AncillaSpec::new(0.0, 0.0, 0.1).is_err());
        assert!(AncillaSpec::new(1.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn matches_joint_evolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let blocks = JcmBlocks::new(0.31, 24).unwrap();
        for lambda in [0.0, 0.2] {
            let anc = AncillaSpec::new(1.2, 0.4, lambda).unwrap();
            let rho = fock::random_density(24, 16, 4, &mut rng).unwrap();
            let a = ancilla_channel(&rho, &anc, &blocks).unwrap();
            let b = oracle(&rho, &anc, &blocks);
            assert!(a.trace_distance(&b) < 1e-12);
        }
    }

    #[test]
    fn output_is_a_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let blocks = JcmBlocks::new(0.5, 30).unwrap();
        let anc = AncillaSpec::new(FRAC_PI_2, 0.3, 0.1).unwrap();
        for _ in 0..5 {
            let rho = fock::random_density(30, 20, 3, &mut rng).unwrap();
            ancilla_channel(&rho, &anc, &blocks).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn rejects_occupied_top_level() {
        let blocks = JcmBlocks::new(0.5, 10).unwrap();
        let rho = fock::number_state(9, 10).unwrap().to_density();
        let anc = AncillaSpec::new(1.0, 0.0, 0.0).unwrap();
        assert!(matches!(ancilla_channel(&rho, &anc, &blocks), Err(Error::Truncation { .. })));
    }

    #[test]
    fn pi_state_is_fixed() {
        let spec = PulseSpec::new(FRAC_PI_2, FRAC_PI_2, 25).unwrap();
        let blocks = spec.blocks().unwrap();
        let rho = optimal::phi_theta(&spec).unwrap().to_density();
        let out = ancilla_channel(&rho, &AncillaSpec::pure(&spec), &blocks).unwrap();
        assert!(out.trace_distance(&rho) < 1e-10);
    }

    #[test]
    fn generic_state_is_fixed() {
        let spec = PulseSpec::new(PI / 4.0, 1.1, 25).unwrap();
        let blocks = spec.blocks().unwrap();
        let rho = optimal::phi_theta(&spec).unwrap().to_density();
        let anc = AncillaSpec::pure(&spec);
        let out = ancilla_channel(&rho, &anc, &blocks).unwrap();
        assert!(out.trace_distance(&rho) < 1e-9);
        assert!(out.trace_distance(&oracle(&rho, &anc, &blocks)) < 1e-10);
    }

    #[test]
    fn fixed_point_converges_in_one_step() {
        let spec = PulseSpec::new(FRAC_PI_2, FRAC_PI_2, 9).unwrap();
        let phi = optimal::phi_theta(&spec).unwrap();
        let out = iterate(
            &phi.to_density(),
            &AncillaSpec::pure(&spec),
            &spec.blocks().unwrap(),
            &phi,
            IterationLimits::default(),
        )
        .unwrap();
        assert!(out.converged);
        assert_eq!(out.trace.records.len(), 1);
        assert!(out.trace.records[0].step < 1e-12);
    }

    #[test]
    fn unconverged_run_reports_error() {
        let spec = PulseSpec::new(FRAC_PI_2, FRAC_PI_2, 9).unwrap();
        let phi = optimal::phi_theta(&spec).unwrap();
        let start = fock::coherent_state(C64::new(2.0, 0.0), spec.dim).unwrap().to_density();
        let limits = IterationLimits { max_iters: 3, tol: 1e-10 };
        let out = iterate(&start, &AncillaSpec::pure(&spec), &spec.blocks().unwrap(), &phi, limits).unwrap();
        assert!(!out.converged);
        assert_eq!(out.trace.records.len(), 3);
        assert!(matches!(
            out.require_converged(),
            Err(Error::NoConvergence { iterations: 3, .. })
        ));
    }

    #[test]
    fn mixed_fixed_point_without_error_is_pure() {
        let spec = PulseSpec::new(FRAC_PI_2, FRAC_PI_2, 16).unwrap();
        let rho = mixed_fixed_point(&AncillaSpec::pure(&spec), &spec).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        let anc = AncillaSpec::new(spec.theta, spec.phi, 0.1).unwrap();
        let mixed = mixed_fixed_point(&anc, &spec).unwrap();
        assert!((mixed.purity() - (0.81 + 0.01)).abs() < 1e-10);
    }
}
