//! Numerical checks of the perturbative identities behind the mixed-ancilla
//! fixed point.
//!
//! Measured values come from exact block evolution of the exact states;
//! predicted values are the closed forms, accurate to lowest nonvanishing
//! order in `1/n_Theta`. Nothing is shared between the two sides.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::Result;
use crate::fock::{FieldDensity, FieldState};
use crate::jcm::{evolve_joint, JcmBlocks, JointState};
use crate::linalg::{self, Banded};
use crate::optimal::{self, PulseSpec};
use crate::qubit::QubitState;
use crate::recycler::{self, AncillaSpec};

/// One measured quantity next to its lowest-order prediction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub quantity: &'static str,
    pub measured_re: f64,
    pub measured_im: f64,
    pub predicted: f64,
    /// `|measured - predicted|`, complex distance.
    pub deviation: f64,
}

impl Comparison {
    fn new(quantity: &'static str, measured: C64, predicted: f64) -> Self {
        Self {
            quantity,
            measured_re: measured.re,
            measured_im: measured.im,
            predicted,
            deviation: (measured - predicted).norm(),
        }
    }

    pub fn measured(&self) -> C64 {
        C64::new(self.measured_re, self.measured_im)
    }

    pub fn relative_deviation(&self) -> f64 {
        self.deviation / self.predicted.abs()
    }
}

/// States, blocks and ancilla kets shared by all checks for one pulse.
#[derive(Clone, Debug)]
pub struct AppendixContext {
    pub spec: PulseSpec,
    pub blocks: JcmBlocks,
    pub phi1: FieldState,
    pub phi2: FieldState,
    pub n2: f64,
    v1: QubitState,
    v2: QubitState,
    v1_out: QubitState,
    v2_out: QubitState,
}

impl AppendixContext {
    pub fn new(spec: &PulseSpec) -> Result<Self> {
        let blocks = spec.blocks()?;
        let phi1 = optimal::phi_theta(spec)?;
        let two = optimal::phi_two(spec, &phi1, &blocks)?;
        let (c, s) = spec.cs();
        let e = C64::from_polar(1.0, spec.phi);
        Ok(Self {
            spec: *spec,
            blocks,
            phi1,
            phi2: two.state,
            n2: two.norm_sqr,
            v1: QubitState::from_bloch(spec.theta, spec.phi),
            v2: QubitState { g: C64::new(s, 0.0), e: -e * c },
            v1_out: QubitState { g: C64::new(c, 0.0), e: -e * s },
            v2_out: QubitState { g: C64::new(s, 0.0), e: e * c },
        })
    }

    /// `theta sin(theta) / n_Theta`, the squared transition amplitude.
    pub fn eps_sqr(&self) -> f64 {
        self.spec.theta * self.spec.theta.sin() / self.spec.n_target as f64
    }

    fn evolve(&self, field: &FieldState, atom: &QubitState) -> JointState {
        evolve_joint(&self.blocks, &JointState::product(atom, field))
    }

    fn project(&self, psi: &JointState, field: &FieldState, atom: &QubitState) -> C64 {
        JointState::product(atom, field).inner(psi)
    }

    fn cs(&self) -> (f64, f64) {
        self.spec.cs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RotatedAmplitudes {
    /// `<Phi1 v2'| U |Phi1 v2>` against `-(1 - eps^2/2)`.
    pub survival_one: Comparison,
    /// `<Phi2 v1'| U |Phi1 v2>` against `eps`.
    pub transition_one: Comparison,
    /// `<Phi2 v1'| U |Phi2 v1>` against `1 - eps^2/2`.
    pub survival_two: Comparison,
    /// `<Phi1 v2'| U |Phi2 v1>` against `eps`.
    pub transition_two: Comparison,
    /// Weight of `U|Phi1 v2>` on the four products of `{Phi1, Phi2}` and `{v1', v2'}`.
    pub captured_probability: f64,
}

/// Evolves `|Phi1 v2>` and `|Phi2 v1>` and reads off their amplitudes on the rotated products.
pub fn rotated_amplitudes(ctx: &AppendixContext) -> RotatedAmplitudes {
    let eps2 = ctx.eps_sqr();
    let from_one = ctx.evolve(&ctx.phi1, &ctx.v2);
    let from_two = ctx.evolve(&ctx.phi2, &ctx.v1);
    let mut captured = 0.0;
    for f in [&ctx.phi1, &ctx.phi2] {
        for a in [&ctx.v1_out, &ctx.v2_out] {
            captured += ctx.project(&from_one, f, a).norm_sqr();
        }
    }
    RotatedAmplitudes {
        survival_one: Comparison::new(
            "survival amplitude <Phi1 v2'|U|Phi1 v2>",
            ctx.project(&from_one, &ctx.phi1, &ctx.v2_out),
            -(1.0 - 0.5 * eps2),
        ),
        transition_one: Comparison::new(
            "transition amplitude <Phi2 v1'|U|Phi1 v2>",
            ctx.project(&from_one, &ctx.phi2, &ctx.v1_out),
            eps2.sqrt(),
        ),
        survival_two: Comparison::new(
            "survival amplitude <Phi2 v1'|U|Phi2 v1>",
            ctx.project(&from_two, &ctx.phi2, &ctx.v1_out),
            1.0 - 0.5 * eps2,
        ),
        transition_two: Comparison::new(
            "transition amplitude <Phi1 v2'|U|Phi2 v1>",
            ctx.project(&from_two, &ctx.phi1, &ctx.v2_out),
            eps2.sqrt(),
        ),
        captured_probability: captured,
    }
}

/// `<Phi1|(U_gg - U_ee)|Phi1>` against `theta sin(theta) / (2 n_Theta)`.
pub fn diagonal_deficit(ctx: &AppendixContext) -> Comparison {
    let b = &ctx.blocks;
    let measured: f64 = ctx
        .phi1
        .probabilities()
        .iter()
        .enumerate()
        .map(|(n, p)| p * (b.u_gg_diag()[n] - b.u_ee_diag()[n]))
        .sum();
    Comparison::new(
        "diagonal deficit <Phi1|(U_gg - U_ee)|Phi1>",
        C64::new(measured, 0.0),
        0.5 * ctx.eps_sqr(),
    )
}

/// Raw squared norm of the unnormalized companion state against `theta sin(theta) / n_Theta`.
pub fn companion_norm(ctx: &AppendixContext) -> Comparison {
    Comparison::new("companion norm N2", C64::new(ctx.n2, 0.0), ctx.eps_sqr())
}

/// `<Phi2|Phi1>`, which vanishes exactly.
pub fn orthogonality(ctx: &AppendixContext) -> f64 {
    ctx.phi2.inner(&ctx.phi1).norm()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommutatorReport {
    /// `(sc/sqrt(N2)) <Phi2|[e^{i phi} U_ge - e^{-i phi} U_eg, (s/c) U_ee + (c/s) U_gg]|Phi1>`
    /// against `-theta sin(theta) / (2 n_Theta)`.
    pub diagonal_projection: Comparison,
    /// `<Phi1|(sc U_gg + s^2 e^{i phi} U_ge + c^2 e^{-i phi} U_eg + sc U_ee)|Phi2>` against `eps`.
    pub cross_projection: Comparison,
    /// The same cross term through the commutator
    /// `(1/sqrt(N2)) <Phi1|[s^2 e^{i phi} U_ge + c^2 e^{-i phi} U_eg, (s/c) U_ee + (c/s) U_gg]|Phi1>`.
    pub cross_via_commutator: C64Pair,
    /// First commutator's `<n+1|.|n>` element at `n = n_Theta` against
    /// `-i e^{i phi} theta sin(theta) / n_Theta` (magnitude).
    pub stripe_element: Comparison,
    /// Largest matrix element off the `|n +- 1><n|` stripes relative to the largest on them.
    pub off_stripe_ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct C64Pair {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for C64Pair {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

fn dressing(ctx: &AppendixContext) -> Banded {
    let (c, s) = ctx.cs();
    let b = &ctx.blocks;
    b.u_ee().scale(C64::new(s / c, 0.0)).add(&b.u_gg().scale(C64::new(c / s, 0.0)))
}

/// Commutator projections of the second rotated amplitude.
pub fn commutator_projections(ctx: &AppendixContext) -> CommutatorReport {
    let (c, s) = ctx.cs();
    let b = &ctx.blocks;
    let e = C64::from_polar(1.0, ctx.spec.phi);
    let dress = dressing(ctx);

    let hop = b.u_ge().scale(e).sub(&b.u_eg().scale(e.conj()));
    let comm = hop.commutator(&dress);
    let p1 = ctx.phi1.amps();
    let p2 = ctx.phi2.amps();
    let sqrt_n2 = ctx.n2.sqrt();
    let diag = linalg::inner(p2, &comm.apply(p1)) * (s * c / sqrt_n2);

    let cross_op = b
        .u_gg()
        .scale(C64::new(s * c, 0.0))
        .add(&b.u_ge().scale(e * s * s))
        .add(&b.u_eg().scale(e.conj() * c * c))
        .add(&b.u_ee().scale(C64::new(s * c, 0.0)));
    let cross = linalg::inner(p1, &cross_op.apply(p2));
    let hop2 = b.u_ge().scale(e * s * s).add(&b.u_eg().scale(e.conj() * c * c));
    let cross_comm = linalg::inner(p1, &hop2.commutator(&dress).apply(p1)) / sqrt_n2;

    let n = ctx.spec.n_target as usize;
    let stripe = comm.get(n + 1, n);

    let dense = comm.to_dense();
    let (mut on, mut off) = (0.0f64, 0.0f64);
    for i in 0..dense.nrows() {
        for j in 0..dense.ncols() {
            let v = dense[(i, j)].norm();
            if i.abs_diff(j) == 1 {
                on = on.max(v);
            } else {
                off = off.max(v);
            }
        }
    }

    CommutatorReport {
        diagonal_projection: Comparison::new("commutator projection onto Phi2", diag, -0.5 * ctx.eps_sqr()),
        cross_projection: Comparison::new("cross projection onto Phi1", cross, ctx.eps_sqr().sqrt()),
        cross_via_commutator: cross_comm.into(),
        stripe_element: Comparison::new(
            "commutator stripe |<n+1|C|n>| at n_Theta",
            C64::new(stripe.norm(), 0.0),
            ctx.eps_sqr(),
        ),
        off_stripe_ratio: off / on,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CleanRotation {
    /// `min_chi ||U|Phi2 v2> - e^{i chi}|Phi2 v2'>||^2 = 2 - 2|<Phi2 v2'|U|Phi2 v2>|`.
    pub residual: f64,
    /// Overlap `<Phi2 v2'|U|Phi2 v2>`; its sign is `-1` at leading order.
    pub overlap: C64Pair,
}

/// How far `|Phi2 v2>` is from being rotated cleanly.
pub fn clean_rotation_residual(ctx: &AppendixContext) -> CleanRotation {
    let out = ctx.evolve(&ctx.phi2, &ctx.v2);
    let overlap = ctx.project(&out, &ctx.phi2, &ctx.v2_out);
    CleanRotation {
        residual: (2.0 - 2.0 * overlap.norm()).max(0.0),
        overlap: overlap.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MixedWeightStep {
    pub lambda: f64,
    pub x_in: f64,
    /// Weight on `|Phi2>` after one ancilla.
    pub x_out: f64,
    /// `x + eps^2 (lambda - x)`.
    pub x_predicted: f64,
    pub off_support: f64,
}

/// One channel step applied to `(1 - x)|Phi1><Phi1| + x|Phi2><Phi2|`.
pub fn mixed_weight_step(ctx: &AppendixContext, lambda: f64, x: f64) -> Result<MixedWeightStep> {
    let anc = AncillaSpec::new(ctx.spec.theta, ctx.spec.phi, lambda)?;
    let rho = FieldDensity::mixture(&[(1.0 - x, &ctx.phi1.to_density()), (x, &ctx.phi2.to_density())])?;
    let out = recycler::ancilla_channel(&rho, &anc, &ctx.blocks)?;
    let w = recycler::support_weights(&out, &ctx.phi1, &ctx.phi2);
    Ok(MixedWeightStep {
        lambda,
        x_in: x,
        x_out: w.phi_two,
        x_predicted: x + ctx.eps_sqr() * (lambda - x),
        off_support: w.off_support,
    })
}

/// All checks for one pulse.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AppendixReport {
    pub spec: PulseSpec,
    pub orthogonality: f64,
    pub amplitudes: RotatedAmplitudes,
    pub diagonal_deficit: Comparison,
    pub companion_norm: Comparison,
    pub commutators: CommutatorReport,
    pub clean_rotation: CleanRotation,
    pub mixed_weight: MixedWeightStep,
}

impl AppendixReport {
    /// The scalar comparisons, in a fixed order.
    pub fn comparisons(&self) -> Vec<&Comparison> {
        vec![
            &self.amplitudes.survival_one,
            &self.amplitudes.transition_one,
            &self.amplitudes.survival_two,
            &self.amplitudes.transition_two,
            &self.diagonal_deficit,
            &self.companion_norm,
            &self.commutators.diagonal_projection,
            &self.commutators.cross_projection,
            &self.commutators.stripe_element,
        ]
    }
}

pub fn verify_all(spec: &PulseSpec, lambda: f64) -> Result<AppendixReport> {
    let ctx = AppendixContext::new(spec)?;
    Ok(AppendixReport {
        spec: *spec,
        orthogonality: orthogonality(&ctx),
        amplitudes: rotated_amplitudes(&ctx),
        diagonal_deficit: diagonal_deficit(&ctx),
        companion_norm: companion_norm(&ctx),
        commutators: commutator_projections(&ctx),
        clean_rotation: clean_rotation_residual(&ctx),
        mixed_weight: mixed_weight_step(&ctx, lambda, lambda)?,
    })
}
