//! Independent constructions checked against the library, plus randomized invariants.

use std::f64::consts::{FRAC_PI_2, PI};

use field_recycler::fock::{self, FieldDensity, Moments};
use field_recycler::gate::{self, FieldResponse};
use field_recycler::jcm::{self, JcmBlocks};
use field_recycler::linalg;
use field_recycler::optimal::{self, PulseSpec};
use field_recycler::qubit::QubitState;
use field_recycler::recycler::{self, AncillaSpec, IterationLimits};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lowering(dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `D(alpha) S(r) |0>` by dense matrix exponentials in a `big`-level space.
fn brute_squeezed(alpha: f64, r: f64, big: usize) -> DVector<C64> {
    let a = lowering(big);
    let ad = a.adjoint();
    let squeeze = ((&a * &a - &ad * &ad) * C64::new(0.5 * r, 0.0)).exp();
    let displace = ((&ad - &a) * C64::new(alpha, 0.0)).exp();
    let mut vac = DVector::zeros(big);
    vac[0] = C64::new(1.0, 0.0);
    displace * (squeeze * vac)
}

#[test]
fn squeezed_state_matches_operator_exponentials() {
    let dim = 160;
    let ours = fock::squeezed_state(C64::new(5.0, 0.0), 0.3, dim).unwrap();
    let brute = brute_squeezed(5.0, 0.3, 260);
    let worst = (0..dim).map(|n| (ours.amps()[n] - brute[n]).norm()).fold(0.0, f64::max);
    assert!(worst < 1e-9, "largest amplitude difference {worst:e}");
    let m = ours.moments();
    assert!(m.var_n < 25.0, "number variance {}", m.var_n);
}

#[test]
fn coherent_state_matches_displacement() {
    let dim = 80;
    let ours = fock::coherent_state(C64::new(3.0, 0.0), dim).unwrap();
    let brute = brute_squeezed(3.0, 0.0, 160);
    let worst = (0..dim).map(|n| (ours.amps()[n] - brute[n]).norm()).fold(0.0, f64::max);
    assert!(worst < 1e-10, "{worst:e}");
}

#[test]
fn recycled_weight_on_companion_settles_at_preparation_error() {
    let lambda = 0.02;
    let spec = PulseSpec::new(FRAC_PI_2, FRAC_PI_2, 50).unwrap();
    let blocks = spec.blocks().unwrap();
    let phi1 = optimal::phi_theta(&spec).unwrap();
    let phi2 = optimal::phi_two(&spec, &phi1, &blocks).unwrap().state;
    let anc = AncillaSpec::new(spec.theta, spec.phi, lambda).unwrap();
    let out = recycler::iterate(&phi1.to_density(), &anc, &blocks, &phi1, IterationLimits::default())
        .unwrap()
        .require_converged()
        .unwrap();
    let w = recycler::support_weights(&out.state, &phi1, &phi2);
    assert!((w.phi_two / lambda - 1.0).abs() < 0.2, "weight {}", w.phi_two);
}

fn density_strategy() -> impl Strategy<Value = (u64, usize)> {
    (any::<u64>(), 1usize..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn channel_output_is_a_density(
        (seed, rank) in density_strategy(),
        gt in 0.02f64..1.0,
        theta in 0.0f64..PI,
        phi in 0.0f64..6.3,
    ) {
        let dim = 40;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = fock::random_density(dim, dim - 6, rank, &mut rng).unwrap();
        let blocks = JcmBlocks::new(gt, dim).unwrap();
        let out = recycler::atom_channel(&rho, &QubitState::from_bloch(theta, phi), &blocks).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(linalg::hermiticity_defect(out.matrix()) < 1e-13);
        prop_assert!(out.min_eigenvalue() > -1e-12);
    }

    #[test]
    fn channel_agrees_with_joint_evolution(
        (seed, rank) in density_strategy(),
        gt in 0.02f64..1.0,
        theta in 0.0f64..PI,
    ) {
        let dim = 24;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = fock::random_density(dim, dim - 4, rank, &mut rng).unwrap();
        let blocks = JcmBlocks::new(gt, dim).unwrap();
        let atom = QubitState::from_bloch(theta, 0.9);
        let a = atom.as_vector();
        let joint = DMatrix::from_fn(2, 2, |i, j| a[i] * a[j].conj()).kronecker(rho.matrix());
        let slow = jcm::trace_out_atom(&jcm::evolve_joint_density(&blocks, &joint));
        let fast = recycler::atom_channel(&rho, &atom, &blocks).unwrap();
        prop_assert!(linalg::trace_distance(fast.matrix(), slow.matrix()) < 1e-12);
    }

    #[test]
    fn joint_unitary_preserves_untruncated_columns(gt in 0.01f64..2.0) {
        let dim = 30;
        let u = JcmBlocks::new(gt, dim).unwrap().joint_unitary();
        let keep: Vec<usize> = (0..2 * dim).filter(|&k| k != dim - 1 && k != 2 * dim - 1).collect();
        let cols = u.select_columns(&keep);
        let gram = cols.adjoint() * &cols;
        let defect = (gram - DMatrix::<C64>::identity(keep.len(), keep.len())).camax();
        prop_assert!(defect < 1e-12);
    }

    #[test]
    fn recursion_states_are_fixed_points(
        rotation in 0.2f64..PI,
        phi in -3.0f64..3.0,
        n in 4u32..60,
    ) {
        // the residual is an amplitude, so the default truncation (sized by
        // probability mass) can leave about 1e-6 for small n
        let spec = PulseSpec::for_rotation(rotation, phi, n).unwrap();
        let dim = optimal::required_dim(&spec, 1e-24).max(spec.dim);
        let spec = spec.with_dim(dim);
        let blocks = spec.blocks().unwrap();
        let state = optimal::phi_theta(&spec).unwrap();
        let (re, rg) = optimal::fixed_point_residuals(&state, &spec, &blocks);
        prop_assert!(re < 1e-9 && rg < 1e-9, "residuals {} {}", re, rg);
        let err = gate::gate_error(&state, &spec.ancilla(), &gate::ideal_rotation(rotation, phi).unwrap(), &blocks).unwrap();
        prop_assert!(err < 1e-10);
    }

    #[test]
    fn sphere_average_equals_octahedron_average(
        (seed, rank) in density_strategy(),
        rotation in 0.1f64..PI,
        phi in 0.0f64..6.3,
    ) {
        let dim = 40;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = fock::random_density(dim, dim - 6, rank, &mut rng).unwrap();
        let blocks = JcmBlocks::new(rotation / 2.0 / 5.0, dim).unwrap();
        let target = gate::ideal_rotation(rotation, phi).unwrap();
        let resp = FieldResponse::new((&rho).into(), &blocks).unwrap();
        // the six axis states form a spherical 2-design
        let axes = [
            (0.0, 0.0), (PI, 0.0), (FRAC_PI_2, 0.0), (FRAC_PI_2, PI), (FRAC_PI_2, FRAC_PI_2), (FRAC_PI_2, -FRAC_PI_2),
        ];
        let octa = axes.iter().map(|&(t, p)| resp.gate_error(&QubitState::from_bloch(t, p), &target)).sum::<f64>() / 6.0;
        prop_assert!((octa - resp.bloch_average_error(&target)).abs() < 1e-13);
    }

    #[test]
    fn gate_error_is_linear_in_the_field(
        seed in any::<u64>(),
        weight in 0.0f64..1.0,
        theta in 0.0f64..PI,
    ) {
        let dim = 40;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = fock::random_density(dim, 30, 2, &mut rng).unwrap();
        let b = fock::random_density(dim, 30, 1, &mut rng).unwrap();
        let mix = FieldDensity::mixture(&[(1.0 - weight, &a), (weight, &b)]).unwrap();
        let blocks = JcmBlocks::new(0.2, dim).unwrap();
        let target = gate::ideal_rotation(FRAC_PI_2, 0.4).unwrap();
        let atom = QubitState::from_bloch(theta, 1.3);
        let e = |f: &FieldDensity| gate::gate_error(f, &atom, &target, &blocks).unwrap();
        prop_assert!((e(&mix) - ((1.0 - weight) * e(&a) + weight * e(&b))).abs() < 1e-12);
    }

    #[test]
    fn squeezed_states_are_normalized(alpha in -4.0f64..4.0, r in -0.5f64..0.5) {
        let dim = fock::coherent_min_dim(C64::new(alpha.abs() + 4.0, 0.0), 1e-12);
        let s = fock::squeezed_state(C64::new(alpha, 0.0), r, dim).unwrap();
        prop_assert!((linalg::norm_sqr(s.amps()) - 1.0).abs() < 1e-12);
    }
}
