//! Experiment implementations: each kind maps the validated configuration to
//! core-library calls, writes its artifacts, and produces check results.

use crate::config::{ExperimentConfig, ExperimentKind, InitialSpec};
use crate::report::{CheckResult, RunReport};
use liouq_core::algebra::{
    check_bracket_preservation, check_m_condition, commutator, groenewold_demo, lie_derivative,
    observable_set, poisson_bracket, prequantize, random_polynomial, verify_tables, PhaseOperator,
    PhasePolynomial, Scalar,
};
use liouq_core::dynamics::{action_field, pde_residual, NumericHamiltonian, TransportSource};
use liouq_core::evolution::{
    evolve, gaussian_ensemble, marginal_q, superposition_check, write_field_csv, write_matrix_dat,
    EnsembleField, EvolutionConfig,
};
use liouq_core::grid::{MaskedField, PhaseGrid};
use liouq_core::quantum::{
    coherent_state, compare_marginal, schrodinger_evolve, write_wavefunction_csv, CoherentStateSpec,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::io::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Validation(Vec<String>),
    #[error("numerical abort: {0}")]
    Numerical(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

fn numerical(e: impl std::fmt::Display) -> RunError {
    RunError::Numerical(e.to_string())
}

/// Validate, dispatch, and assemble the report. Artifacts land in `out_dir`.
pub fn run(
    kind: ExperimentKind,
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<RunReport, RunError> {
    let violations = config.validate(kind);
    if !violations.is_empty() {
        return Err(RunError::Validation(violations));
    }
    std::fs::create_dir_all(out_dir)?;
    let started = std::time::Instant::now();
    let (checks, artifacts) = match kind {
        ExperimentKind::VerifyAlgebra => verify_algebra(config)?,
        ExperimentKind::Tables => tables(config, out_dir)?,
        ExperimentKind::Groenewold => groenewold(out_dir)?,
        ExperimentKind::Evolve => evolve_experiment(config, out_dir)?,
        ExperimentKind::Decoupling => decoupling(config, out_dir)?,
        ExperimentKind::Superposition => superposition(config)?,
        ExperimentKind::CompareSchrodinger => compare_schrodinger(config, out_dir)?,
        ExperimentKind::ActionField => action_field_experiment(config, out_dir)?,
    };
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    let config_echo = serde_json::to_value(config).expect("config serializes");
    Ok(RunReport::assemble(
        kind.as_str(),
        config.seed,
        config_echo,
        checks,
        artifacts,
        wall_ms,
    ))
}

type Outcome = (Vec<CheckResult>, Vec<String>);

fn verify_algebra(config: &ExperimentConfig) -> Result<Outcome, RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pairs_per_dof = config.checks.pairs;
    let alpha = Scalar::ratio(3, 2);
    let beta = Scalar::int(-2);

    let mut unit_failures = 0usize;
    let mut closure_failures = 0usize;
    let mut preservation_failures = 0usize;
    let mut multiplier_failures = 0usize;
    let mut linearity_failures = 0usize;
    let mut total_pairs = 0usize;

    for dof in 1..=3usize {
        if prequantize(&PhasePolynomial::one(dof)) != PhaseOperator::identity(dof) {
            unit_failures += 1;
        }
        for _ in 0..pairs_per_dof {
            let a = random_polynomial(&mut rng, dof, 4, 4);
            let b = random_polynomial(&mut rng, dof, 4, 4);
            total_pairs += 1;

            let lhs = commutator(&lie_derivative(&a), &lie_derivative(&b)).map_err(numerical)?;
            if lhs != lie_derivative(&poisson_bracket(&a, &b).map_err(numerical)?) {
                closure_failures += 1;
            }
            if !check_bracket_preservation(&a, &b)
                .map_err(numerical)?
                .is_zero()
            {
                preservation_failures += 1;
            }
            if !check_m_condition(&a, &b).map_err(numerical)?.is_zero() {
                multiplier_failures += 1;
            }
            let combined = &a.scale(&alpha) + &b.scale(&beta);
            let linear = &prequantize(&a).scale(&alpha) + &prequantize(&b).scale(&beta);
            if prequantize(&combined) != linear {
                linearity_failures += 1;
            }
        }
    }

    let checks = vec![
        CheckResult::new("sampled_pairs", total_pairs >= 1, total_pairs, "at least 1"),
        CheckResult::new(
            "unit_operator_identity",
            unit_failures == 0,
            unit_failures,
            0,
        ),
        CheckResult::new(
            "lie_commutator_closure",
            closure_failures == 0,
            closure_failures,
            0,
        ),
        CheckResult::new(
            "bracket_preservation",
            preservation_failures == 0,
            preservation_failures,
            0,
        ),
        CheckResult::new(
            "multiplier_condition",
            multiplier_failures == 0,
            multiplier_failures,
            0,
        ),
        CheckResult::new(
            "prequantize_linearity",
            linearity_failures == 0,
            linearity_failures,
            0,
        ),
    ];
    Ok((checks, Vec::new()))
}

fn tables(_config: &ExperimentConfig, out_dir: &Path) -> Result<Outcome, RunError> {
    let set = observable_set(1, 1);
    let report = verify_tables(&set);
    let poisson_failures = report.entries.iter().filter(|e| !e.poisson_ok).count();
    let commutator_failures = report.entries.iter().filter(|e| !e.commutator_ok).count();
    let translation_failures = report.entries.iter().filter(|e| !e.translation_ok).count();

    let path = out_dir.join("tables.json");
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&report.to_json()).map_err(numerical)? + "\n",
    )?;

    let checks = vec![
        CheckResult::new(
            "table_entries",
            report.entries.len() >= 18,
            report.entries.len(),
            "at least 18",
        ),
        CheckResult::new("poisson_table", poisson_failures == 0, poisson_failures, 0),
        CheckResult::new(
            "commutator_table",
            commutator_failures == 0,
            commutator_failures,
            0,
        ),
        CheckResult::new(
            "translation_rule",
            translation_failures == 0,
            translation_failures,
            0,
        ),
    ];
    Ok((checks, vec![artifact_name(&path)]))
}

fn groenewold(out_dir: &Path) -> Result<Outcome, RunError> {
    let demo = groenewold_demo();
    let path = out_dir.join("groenewold.json");
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&demo.to_json()).map_err(numerical)? + "\n",
    )?;

    let span_failures = demo.safe_pairs.iter().filter(|p| !p.is_zero()).count();
    let checks = vec![
        CheckResult::new(
            "cubic_pair_obstruction",
            !demo.obstruction.is_zero(),
            demo.obstruction.difference.to_string(),
            "nonzero difference",
        ),
        CheckResult::new(
            "observable_span_exact",
            span_failures == 0,
            span_failures,
            0,
        ),
    ];
    Ok((checks, vec![artifact_name(&path)]))
}

struct Prepared {
    ham: NumericHamiltonian,
    grid: PhaseGrid,
    evolution: EvolutionConfig,
    field: EnsembleField,
}

fn prepare(config: &ExperimentConfig, initial: &InitialSpec) -> Result<Prepared, RunError> {
    let ham = config.hamiltonian.build().map_err(RunError::Numerical)?;
    let grid = config.grid.build().map_err(RunError::Numerical)?;
    let evolution = config.evolution.build();
    let (field, _) = gaussian_ensemble(
        &grid,
        initial.q0,
        initial.p0,
        initial.sigma_q,
        initial.sigma_p,
        &initial.phase_terms(),
    )
    .map_err(numerical)?;
    Ok(Prepared {
        ham,
        grid,
        evolution,
        field,
    })
}

fn evolve_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<Outcome, RunError> {
    let prep = prepare(config, &config.initial)?;
    let initial_path = out_dir.join("initial.csv");
    write_field_csv(&initial_path, &prep.field, prep.evolution.hbar)?;

    let run = evolve(&prep.field, &prep.ham, &prep.evolution, config.t_final).map_err(numerical)?;

    let final_path = out_dir.join("final.csv");
    write_field_csv(&final_path, &run.field, prep.evolution.hbar)?;
    let amp_path = out_dir.join("amp_final.dat");
    write_matrix_dat(&amp_path, &prep.grid, &run.field.amp)?;
    let phase_path = out_dir.join("phase_final.dat");
    write_matrix_dat(&phase_path, &prep.grid, &run.field.phase)?;
    let norms_path = out_dir.join("norms.csv");
    let mut norms_file = std::io::BufWriter::new(std::fs::File::create(&norms_path)?);
    writeln!(norms_file, "t,norm")?;
    for (t, n) in &run.norms {
        writeln!(norms_file, "{t},{n}")?;
    }
    drop(norms_file);

    let meta_path = out_dir.join("run_meta.json");
    let meta = json!({
        "grid": prep.grid.to_json(),
        "evolution": serde_json::to_value(config.evolution).map_err(numerical)?,
        "t_final": config.t_final,
        "norms": run.norms.iter().map(|&(t, n)| json!([t, n])).collect::<Vec<_>>(),
        "exited_nodes": run.exited_nodes,
        "cfl_warning": run.cfl_warning,
    });
    std::fs::write(
        &meta_path,
        serde_json::to_string_pretty(&meta).map_err(numerical)? + "\n",
    )?;

    let norm0 = run.norms[0].1;
    let drift = run
        .norms
        .iter()
        .map(|&(_, n)| (n - norm0).abs() / norm0)
        .fold(0.0, f64::max);

    let checks = vec![
        CheckResult::new(
            "norm_drift",
            drift <= config.checks.norm_tol,
            drift,
            config.checks.norm_tol,
        ),
        CheckResult::new(
            "backtrace_within_window",
            true,
            json!({ "exited_nodes": run.exited_nodes, "cfl_warning": run.cfl_warning }),
            "informational",
        ),
    ];
    let artifacts = [
        initial_path,
        final_path,
        amp_path,
        phase_path,
        norms_path,
        meta_path,
    ]
    .iter()
    .map(|p| artifact_name(p))
    .collect();
    Ok((checks, artifacts))
}

/// Max |residual| over the central quarter-window of valid nodes.
fn central_max(residual: &MaskedField) -> f64 {
    let grid = residual.grid;
    let q_half = 0.5 * grid.q_max.abs().max(grid.q_min.abs());
    let p_half = 0.5 * grid.p_max.abs().max(grid.p_min.abs());
    let mut max = 0.0f64;
    for (idx, q, p) in grid.nodes() {
        if residual.valid[idx] && q.abs() <= q_half && p.abs() <= p_half {
            max = max.max(residual.values[idx].abs());
        }
    }
    max
}

fn halved_grid(grid: &PhaseGrid) -> Result<PhaseGrid, RunError> {
    PhaseGrid::new(
        grid.q_min,
        grid.q_max,
        grid.p_min,
        grid.p_max,
        grid.nq / 2 + 1,
        grid.np / 2 + 1,
    )
    .map_err(numerical)
}

fn decoupling_residual_pair(
    config: &ExperimentConfig,
    grid: &PhaseGrid,
    dt: f64,
) -> Result<(f64, f64, Vec<EnsembleField>), RunError> {
    let ham = config.hamiltonian.build().map_err(RunError::Numerical)?;
    let mut evo = config.evolution.build();
    evo.dt = dt;
    let (field, _) = gaussian_ensemble(
        grid,
        config.initial.q0,
        config.initial.p0,
        config.initial.sigma_q,
        config.initial.sigma_p,
        &config.initial.phase_terms(),
    )
    .map_err(numerical)?;

    let t = config.t_final;
    let before = evolve(&field, &ham, &evo, t - dt).map_err(numerical)?;
    let middle = evolve(&before.field, &ham, &evo, t).map_err(numerical)?;
    let after = evolve(&middle.field, &ham, &evo, t + dt).map_err(numerical)?;
    let history = vec![before.field, middle.field, after.field];

    let mode = evo.mode;
    let (r_amp, r_phase) =
        liouq_core::evolution::decoupling_residuals(&history, &ham, mode).map_err(numerical)?;
    Ok((central_max(&r_amp), central_max(&r_phase), history))
}

fn decoupling(config: &ExperimentConfig, out_dir: &Path) -> Result<Outcome, RunError> {
    let fine_grid = config.grid.build().map_err(RunError::Numerical)?;
    let coarse_grid = halved_grid(&fine_grid)?;
    let dt = config.evolution.dt;

    let (amp_coarse, phase_coarse, _) = decoupling_residual_pair(config, &coarse_grid, 2.0 * dt)?;
    let (amp_fine, phase_fine, history) = decoupling_residual_pair(config, &fine_grid, dt)?;

    let amp_ratio = amp_coarse / amp_fine.max(f64::MIN_POSITIVE);
    let phase_ratio = phase_coarse / phase_fine.max(f64::MIN_POSITIVE);

    let amp_path = out_dir.join("amp_mid.dat");
    write_matrix_dat(&amp_path, &fine_grid, &history[1].amp)?;
    let phase_path = out_dir.join("phase_mid.dat");
    write_matrix_dat(&phase_path, &fine_grid, &history[1].phase)?;

    let ratio_min = config.checks.ratio_min;
    let checks = vec![
        CheckResult::new(
            "amplitude_residual_shrink",
            amp_ratio >= ratio_min,
            json!({ "coarse": amp_coarse, "fine": amp_fine, "ratio": amp_ratio }),
            ratio_min,
        ),
        CheckResult::new(
            "phase_residual_shrink",
            phase_ratio >= ratio_min,
            json!({ "coarse": phase_coarse, "fine": phase_fine, "ratio": phase_ratio }),
            ratio_min,
        ),
    ];
    Ok((
        checks,
        vec![artifact_name(&amp_path), artifact_name(&phase_path)],
    ))
}

fn superposition(config: &ExperimentConfig) -> Result<Outcome, RunError> {
    let prep = prepare(config, &config.initial)?;
    let second = config.initial2.clone().unwrap_or_else(|| {
        let mut mirrored = config.initial.clone();
        mirrored.q0 = -mirrored.q0;
        mirrored.p0 = -mirrored.p0;
        mirrored
    });
    let (f2, _) = gaussian_ensemble(
        &prep.grid,
        second.q0,
        second.p0,
        second.sigma_q,
        second.sigma_p,
        &second.phase_terms(),
    )
    .map_err(numerical)?;

    let report = superposition_check(&prep.field, &f2, &prep.ham, &prep.evolution, config.t_final)
        .map_err(numerical)?;
    let checks = vec![CheckResult::new(
        "superposition_defect",
        report.defect <= config.checks.defect_tol,
        report.defect,
        config.checks.defect_tol,
    )];
    Ok((checks, Vec::new()))
}

fn compare_schrodinger(config: &ExperimentConfig, out_dir: &Path) -> Result<Outcome, RunError> {
    let prep = prepare(config, &config.initial)?;
    let hbar = prep.evolution.hbar;
    let crate::config::HamiltonianSpec::Separable {
        mass, potential, ..
    } = &config.hamiltonian
    else {
        return Err(RunError::Numerical(
            "schrodinger comparison needs a separable Hamiltonian".into(),
        ));
    };
    let spec = CoherentStateSpec {
        q0: config.initial.q0,
        p0: config.initial.p0,
        sigma_q: config.initial.sigma_q,
        omega: 1.0,
        mass: *mass,
    };
    let quantum0 = coherent_state(
        &spec,
        config.schrodinger.q_min,
        config.schrodinger.q_max,
        config.schrodinger.nq,
        hbar,
    )
    .map_err(numerical)?;
    let v = liouq_core::dynamics::Poly1::new(potential.clone());

    let mut worst = 0.0f64;
    let mut artifacts = Vec::new();
    for (i, &t) in config.times.iter().enumerate() {
        let classical = if t == 0.0 {
            prep.field.clone()
        } else {
            evolve(&prep.field, &prep.ham, &prep.evolution, t)
                .map_err(numerical)?
                .field
        };
        let quantum = if t == 0.0 {
            quantum0.clone()
        } else {
            schrodinger_evolve(&quantum0, &v, t, config.schrodinger.dt).map_err(numerical)?
        };
        let distances = compare_marginal(&classical, &quantum).map_err(numerical)?;
        worst = worst.max(distances.l_inf);

        let marginal = marginal_q(&classical);
        let path = out_dir.join(format!("marginal_{i}.csv"));
        let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
        writeln!(file, "q,classical_marginal")?;
        for (iq, m) in marginal.iter().enumerate() {
            writeln!(file, "{},{}", prep.grid.q_at(iq), m)?;
        }
        drop(file);
        artifacts.push(artifact_name(&path));

        let qpath = out_dir.join(format!("quantum_{i}.csv"));
        write_wavefunction_csv(&qpath, &quantum)?;
        artifacts.push(artifact_name(&qpath));
    }

    let checks = if config.negative_control {
        vec![CheckResult::new(
            "marginal_distance_exceeds_control",
            worst > config.checks.control_min,
            worst,
            format!("> {}", config.checks.control_min),
        )]
    } else {
        vec![CheckResult::new(
            "marginal_distance",
            worst <= config.checks.marginal_tol,
            worst,
            config.checks.marginal_tol,
        )]
    };
    Ok((checks, artifacts))
}

fn action_residual_max(
    config: &ExperimentConfig,
    grid: &PhaseGrid,
    dt: f64,
) -> Result<(f64, MaskedField), RunError> {
    let ham = config.hamiltonian.build().map_err(RunError::Numerical)?;
    let phase_terms = config.initial.phase_terms();
    let initial = if phase_terms.is_empty() {
        None
    } else {
        Some(MaskedField::full(
            *grid,
            grid.sample(|q, p| {
                phase_terms
                    .iter()
                    .map(|&(a, b, c)| c * q.powi(a as i32) * p.powi(b as i32))
                    .sum()
            }),
        ))
    };
    let evo = config.evolution.build();
    let integrator = evo.integrator;
    let interp = evo.interpolation;
    let t = config.t_final;
    let mut history = Vec::new();
    for time in [t - dt, t, t + dt] {
        let field = action_field(
            &ham,
            grid,
            initial.as_ref(),
            0.0,
            time,
            dt,
            integrator,
            interp,
        )
        .map_err(numerical)?;
        history.push((time, field));
    }
    let action_mid = history[1].1.clone();
    let residual = pde_residual(&history, &ham, TransportSource::Lagrangian).map_err(numerical)?;
    Ok((central_max(&residual), action_mid))
}

fn action_field_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<Outcome, RunError> {
    let fine_grid = config.grid.build().map_err(RunError::Numerical)?;
    let coarse_grid = halved_grid(&fine_grid)?;
    let dt = config.evolution.dt;

    let (coarse_max, _) = action_residual_max(config, &coarse_grid, 2.0 * dt)?;
    let (fine_max, action) = action_residual_max(config, &fine_grid, dt)?;
    let order = (coarse_max / fine_max.max(f64::MIN_POSITIVE)).log2();

    let path = out_dir.join("action.dat");
    write_matrix_dat(&path, &fine_grid, &action.values)?;

    let checks = vec![CheckResult::new(
        "action_residual_order",
        order >= config.checks.order_min,
        json!({ "coarse": coarse_max, "fine": fine_max, "order": order }),
        config.checks.order_min,
    )];
    Ok((checks, vec![artifact_name(&path)]))
}

fn artifact_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}
