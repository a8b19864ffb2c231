use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use super::config::{Experiment, ExperimentConfig};
use super::output::Table;
use crate::appendix;
use crate::error::{Error, Result};
use crate::fock::{self, FieldDensity, FieldState, Moments};
use crate::gate::{self, ErrorEnsembleReport};
use crate::jcm::JcmBlocks;
use crate::optimal::{self, PulseSpec};
use crate::qubit::QubitState;
use crate::recycler::{self, AncillaSpec, ConvergenceTrace, IterationLimits};

/// Everything a run produces. `failure` is set when the numbers were written
/// but the run did not meet its own stopping rule.
#[derive(Debug)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub summary: Value,
    pub failure: Option<Error>,
}

pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput> {
    match cfg.experiment {
        Experiment::ConvergePi | Experiment::ConvergeOppositePhase => converge(cfg),
        Experiment::SqueezeSweep => squeeze_sweep(cfg),
        Experiment::StateGen => state_gen(cfg),
        Experiment::MixedAncilla => mixed_ancilla(cfg),
        Experiment::Appendix => appendix_suite(cfg),
        Experiment::ErrorEval => error_eval(cfg),
    }
}

fn trace_table(trace: &ConvergenceTrace) -> Table {
    let mut t = Table::new(
        "trace.csv",
        &["iteration", "fidelity_to_target", "mean_n_photons", "purity", "step_frobenius_half"],
    );
    for r in std::iter::once(&trace.initial).chain(&trace.records) {
        t.push(vec![
            r.iteration.to_string(),
            r.fidelity.to_string(),
            r.mean_n.to_string(),
            r.purity.to_string(),
            if r.step.is_nan() { String::new() } else { r.step.to_string() },
        ]);
    }
    t
}

fn distribution_table(columns: &[(&str, Vec<f64>)]) -> Table {
    let mut header = vec!["n_photons".to_string()];
    header.extend(columns.iter().map(|(name, _)| format!("p_{name}")));
    let mut t = Table::with_header("distribution.csv", header);
    let len = columns.iter().map(|c| c.1.len()).max().unwrap_or(0);
    for n in 0..len {
        let mut row = vec![n.to_string()];
        row.extend(columns.iter().map(|c| c.1.get(n).copied().unwrap_or(0.0).to_string()));
        t.push(row);
    }
    t
}

fn report_json(r: &ErrorEnsembleReport) -> Value {
    serde_json::to_value(r).expect("report serializes")
}

fn converge(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let spec = cfg.pulse()?;
    let blocks = spec.blocks()?;
    let target = optimal::phi_theta(&spec)?;
    let anc = AncillaSpec::new(spec.theta, spec.phi, cfg.lambda)?;
    let coherent = fock::coherent_state(C64::new(cfg.alpha, 0.0), spec.dim)?;
    let start = if cfg.ground_atom_first {
        recycler::atom_channel(&coherent.to_density(), &QubitState::ground(), &blocks)?
    } else {
        coherent.to_density()
    };

    let snapshot_at = [10usize, 50, 200];
    let mut snapshots: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let limits = IterationLimits {
        max_iters: cfg.max_iters,
        tol: cfg.tol,
    };
    let outcome = recycler::iterate_observed(&start, &anc, &blocks, &target, limits, |k, rho| {
        if snapshot_at.contains(&k) {
            snapshots.insert(k, rho.populations());
        }
    })?;

    let trace = &outcome.trace;
    let last = *trace.last();
    let settled = trace.first_where(|r| r.fidelity > 0.99 && r.purity > 0.99).map(|r| r.iteration);
    let target_m = target.moments();
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "quantities": {
            "final_mean_n": "mean photon number of the recycled field",
            "final_purity": "purity of the recycled field",
            "final_fidelity": "overlap of the recycled field with the exact fixed-point state",
            "initial_fidelity": "overlap of the starting field with the fixed-point state",
            "min_purity": "lowest purity along the run",
            "settled_iteration": "first ancilla count with fidelity and purity both above 0.99",
        },
        "alpha": cfg.alpha,
        "ground_atom_first": cfg.ground_atom_first,
        "start_mean_n": trace.initial.mean_n,
        "initial_fidelity": trace.initial.fidelity,
        "final_mean_n": last.mean_n,
        "final_purity": last.purity,
        "final_fidelity": last.fidelity,
        "min_purity": trace.min_purity(),
        "settled_iteration": settled,
        "iterations": trace.records.len(),
        "converged": outcome.converged,
        "target_mean_n": target_m.mean_n,
        "target_delta_n": target_m.delta_n(),
        "dim": spec.dim,
    });

    let mut columns = vec![
        ("coherent", coherent.probabilities()),
        ("start", start.populations()),
    ];
    for (k, p) in &snapshots {
        columns.push((snapshot_name(*k), p.clone()));
    }
    columns.push(("final", outcome.state.populations()));
    columns.push(("target", target.probabilities()));

    let failure = outcome.failure();
    Ok(RunOutput {
        tables: vec![trace_table(trace), distribution_table(&columns)],
        summary,
        failure,
    })
}

fn snapshot_name(k: usize) -> &'static str {
    match k {
        10 => "iteration_10",
        50 => "iteration_50",
        _ => "iteration_200",
    }
}

fn squeeze_sweep(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let n_bar = cfg.n_theta as f64;
    let spec = cfg.pulse()?;
    let blocks = JcmBlocks::new(cfg.rotation / (2.0 * n_bar.sqrt()), spec.dim)?;
    let ensemble = gate::random_bloch_ensemble(cfg.ensemble_size, cfg.seed);
    let sweep = gate::squeeze_sweep(n_bar, cfg.rotation, &cfg.r_grid, &ensemble, &blocks)?;

    // reference: the optimal state for the same rotation about x
    let opt_spec = PulseSpec::for_rotation(cfg.rotation, std::f64::consts::FRAC_PI_2, cfg.n_theta)?.with_dim(spec.dim);
    let opt = optimal::phi_theta(&opt_spec)?;
    let target = gate::ideal_rotation(cfg.rotation, opt_spec.phi)?;
    let opt_report = gate::ensemble_errors(&opt, &target, &blocks, &ensemble)?;

    let mut t = Table::new(
        "sweep.csv",
        &[
            "r", "mean_n_photons", "delta_n_photons", "min_error", "p10_error", "p25_error", "mean_error",
            "p75_error", "p90_error", "max_error", "ground_start_error",
        ],
    );
    for row in &sweep.rows {
        let r = &row.report;
        t.push(
            [row.r, row.mean_n, row.delta_n, r.min, r.p10, r.p25, r.mean, r.p75, r.p90, r.max, row.ground_error]
                .iter()
                .map(f64::to_string)
                .collect(),
        );
    }
    let best = sweep.best();
    let width_law = optimal::width_prediction(best.mean_n, cfg.rotation);
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "quantities": {
            "argmin_mean_error": "smallest ensemble-mean error over the squeeze grid",
            "optimal_state_mean_error": "ensemble-mean error of the exact optimal state, same atoms",
            "argmin_delta_n": "photon-number spread at the best squeeze parameter",
            "width_law": "sqrt(2 n sin(Theta/2) / Theta)",
            "coherent_prediction": "pi^2/(64 n) + 1/(16 n), meaningful for a pi/2 rotation",
        },
        "n_bar": n_bar,
        "rotation": cfg.rotation,
        "seed": cfg.seed,
        "ensemble_size": cfg.ensemble_size,
        "argmin_r": best.r,
        "argmin_mean_error": best.report.mean,
        "argmin_delta_n": best.delta_n,
        "optimal_state_mean_error": opt_report.mean,
        "argmin_over_optimal": best.report.mean / opt_report.mean,
        "width_law": width_law,
        "argmin_delta_n_over_width_law": best.delta_n / width_law,
        "coherent_mean_error": sweep.rows.iter().find(|r| r.r == 0.0).map(|r| r.report.mean),
        "coherent_ground_error": sweep.rows.iter().find(|r| r.r == 0.0).map(|r| r.ground_error),
        "coherent_prediction": gate::coherent_error_prediction(n_bar),
    });
    Ok(RunOutput {
        tables: vec![t],
        summary,
        failure: None,
    })
}

fn state_gen(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let spec = cfg.pulse()?;
    let blocks = spec.blocks()?;
    let exact = optimal::phi_theta(&spec)?;
    let gauss = optimal::phi_theta_gaussian(&spec, false)?;
    let cubic = optimal::phi_theta_gaussian(&spec, true)?;
    let two = optimal::phi_two(&spec, &exact, &blocks)?;
    let m = exact.moments();
    let (res_e, res_g) = optimal::fixed_point_residuals(&exact, &spec, &blocks);
    let surrogate = if cfg.rotation < PI {
        let fit = optimal::transcoherent_surrogate(cfg.rotation, m.mean_n, spec.dim)?;
        json!({ "r": fit.r, "alpha": fit.alpha, "var_n": fit.state.moments().var_n, "target_var_n": fit.target_var })
    } else {
        Value::Null
    };
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "quantities": {
            "mean_n": "mean photon number of the exact optimal state",
            "mean_n_prediction": "n - 1/2 + (2 + pi)/(8 sqrt n), derived for a pi rotation",
            "width_law": "sqrt(2 n sin(Theta/2) / Theta)",
            "companion_norm_sqr": "raw squared norm of the companion state, predicted theta sin(theta)/n",
        },
        "n_theta": cfg.n_theta,
        "rotation": cfg.rotation,
        "phi": cfg.phi,
        "dim": spec.dim,
        "mean_n": m.mean_n,
        "delta_n": m.delta_n(),
        "mean_n_prediction": optimal::mean_n_prediction(cfg.n_theta),
        "width_law": optimal::width_prediction(m.mean_n, cfg.rotation),
        "gaussian_mean_n": gauss.moments().mean_n,
        "gaussian_cubic_mean_n": cubic.moments().mean_n,
        "gaussian_overlap": exact.inner(&gauss).norm_sqr(),
        "gaussian_cubic_overlap": exact.inner(&cubic).norm_sqr(),
        "eigen_residual_e": res_e,
        "eigen_residual_g": res_g,
        "companion_norm_sqr": two.norm_sqr,
        "companion_norm_prediction": spec.theta * spec.theta.sin() / cfg.n_theta as f64,
        "transcoherent_surrogate": surrogate,
    });
    let columns = [
        ("exact", exact.probabilities()),
        ("gaussian", gauss.probabilities()),
        ("gaussian_cubic", cubic.probabilities()),
        ("companion", two.state.probabilities()),
    ];
    Ok(RunOutput {
        tables: vec![distribution_table(&columns)],
        summary,
        failure: None,
    })
}

fn mixed_ancilla(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let spec = cfg.pulse()?;
    let blocks = spec.blocks()?;
    let anc = AncillaSpec::new(spec.theta, spec.phi, cfg.lambda)?;
    let phi1 = optimal::phi_theta(&spec)?;
    let phi2 = optimal::phi_two(&spec, &phi1, &blocks)?.state;
    let limits = IterationLimits {
        max_iters: cfg.max_iters,
        tol: cfg.tol,
    };
    let outcome = recycler::iterate(&phi1.to_density(), &anc, &blocks, &phi1, limits)?;
    let w = recycler::support_weights(&outcome.state, &phi1, &phi2);
    let predicted = recycler::mixed_fixed_point(&anc, &spec)?;
    let ctx = appendix::AppendixContext::new(&spec)?;
    let step = appendix::mixed_weight_step(&ctx, cfg.lambda, cfg.lambda)?;
    let n = cfg.n_theta as f64;
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "quantities": {
            "weight_phi_two": "asymptotic population of the companion state, predicted lambda",
            "off_support": "population outside the two-state support, bounded by 10 lambda / n",
            "trace_distance_to_prediction": "distance to (1 - lambda)|Phi1><Phi1| + lambda|Phi2><Phi2|",
            "one_step": "one ancilla applied to the predicted mixture",
        },
        "lambda": cfg.lambda,
        "n_theta": cfg.n_theta,
        "iterations": outcome.trace.records.len(),
        "converged": outcome.converged,
        "weight_phi_one": w.phi_one,
        "weight_phi_two": w.phi_two,
        "off_support": w.off_support,
        "off_support_bound": 10.0 * cfg.lambda / n,
        "trace_distance_to_prediction": outcome.state.trace_distance(&predicted),
        "final_purity": outcome.trace.last().purity,
        "one_step": step,
    });
    let columns = [
        ("final", outcome.state.populations()),
        ("phi_one", phi1.probabilities()),
        ("phi_two", phi2.probabilities()),
        ("prediction", predicted.populations()),
    ];
    let failure = outcome.failure();
    Ok(RunOutput {
        tables: vec![trace_table(&outcome.trace), distribution_table(&columns)],
        summary,
        failure,
    })
}

fn appendix_suite(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let spec = cfg.pulse()?;
    let lambda = if cfg.lambda > 0.0 { cfg.lambda } else { 0.02 };
    let report = appendix::verify_all(&spec, lambda)?;
    let mut t = Table::new(
        "appendix.csv",
        &["quantity", "measured_re", "measured_im", "predicted", "deviation", "relative_deviation"],
    );
    for c in report.comparisons() {
        t.push(vec![
            c.quantity.to_string(),
            c.measured_re.to_string(),
            c.measured_im.to_string(),
            c.predicted.to_string(),
            c.deviation.to_string(),
            c.relative_deviation().to_string(),
        ]);
    }
    let summary = json!({
        "experiment": cfg.experiment.name(),
        "quantities": {
            "report": "measured values from exact evolution next to lowest-order closed forms",
        },
        "report": report,
    });
    Ok(RunOutput {
        tables: vec![t],
        summary,
        failure: None,
    })
}

fn error_eval(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let spec = cfg.pulse()?;
    let blocks = spec.blocks()?;
    let ensemble = gate::random_bloch_ensemble(cfg.ensemble_size, cfg.seed);
    let target = gate::ideal_rotation(spec.rotation(), spec.phi)?;
    let phi1 = optimal::phi_theta(&spec)?;
    let phi2 = optimal::phi_two(&spec, &phi1, &blocks)?.state;
    let n_bar = phi1.moments().mean_n;
    let anc = AncillaSpec::new(spec.theta, spec.phi, cfg.lambda)?;
    let mixed: FieldDensity = recycler::mixed_fixed_point(&anc, &spec)?;
    let coherent: FieldState = fock::coherent_state(C64::new((cfg.n_theta as f64).sqrt(), 0.0), spec.dim)?;
    // the coherent field is compared with a rotation about x
    let x_target = gate::ideal_rotation(spec.rotation(), std::f64::consts::FRAC_PI_2)?;

    let r1 = gate::ensemble_errors(&phi1, &target, &blocks, &ensemble)?;
    let r2 = gate::ensemble_errors(&phi2, &target, &blocks, &ensemble)?;
    let rm = gate::ensemble_errors(&mixed, &target, &blocks, &ensemble)?;
    let rc = gate::ensemble_errors(&coherent, &x_target, &blocks, &ensemble)?;
    let coherent_ground = gate::gate_error(&coherent, &QubitState::ground(), &x_target, &blocks)?;
    let exact = |field: gate::FieldRef<'_>, t: &gate::RotationTarget| -> Result<f64> {
        Ok(gate::FieldResponse::new(field, &blocks)?.bloch_average_error(t))
    };
    let sphere = json!({
        "optimal": exact((&phi1).into(), &target)?,
        "companion": exact((&phi2).into(), &target)?,
        "mixed": exact((&mixed).into(), &target)?,
        "coherent": exact((&coherent).into(), &x_target)?,
    });

    let summary = json!({
        "experiment": cfg.experiment.name(),
        "quantities": {
            "optimal": "ensemble errors of the exact optimal state, predicted pi/(6 n) for a pi rotation",
            "companion": "ensemble errors of the companion state, predicted 7 pi/(16 n) for a pi rotation",
            "mixed": "ensemble errors of the lowest-order mixed fixed point",
            "coherent": "ensemble errors of a coherent field with the same photon-number scale",
            "sphere_average": "exact Bloch-sphere averages of the same four errors",
        },
        "n_bar": n_bar,
        "lambda": cfg.lambda,
        "seed": cfg.seed,
        "ensemble_size": cfg.ensemble_size,
        "optimal": report_json(&r1),
        "companion": report_json(&r2),
        "mixed": report_json(&rm),
        "coherent": report_json(&rc),
        "coherent_ground_error": coherent_ground,
        "sphere_average": sphere,
        "predicted_optimal": gate::epsilon_one(n_bar),
        "predicted_companion": gate::epsilon_two(n_bar),
        "predicted_mixed": gate::mixed_error_formula(cfg.lambda, n_bar),
        "predicted_coherent_half_pulse": gate::coherent_error_prediction(cfg.n_theta as f64),
    });
    Ok(RunOutput {
        tables: vec![],
        summary,
        failure: None,
    })
}
