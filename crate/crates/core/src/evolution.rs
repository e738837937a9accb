//! Grid evolution of the classical wave function over phase space.
//!
//! The state is carried as two real fields (√ρ, S) on a rectangular (q, p)
//! window. Both obey transport along the canonical flow; in the extended mode
//! the phase additionally accumulates the Lagrangian Lbar = p·∂H/∂p − H along
//! each characteristic, while the plain transport mode leaves it homogeneous.
//! The complex field ψ = √ρ·exp(iS/ħ) is assembled only for comparisons; an
//! Eulerian finite-difference integrator on ψ itself serves as a cross-check
//! oracle for the semi-Lagrangian scheme.

use crate::dynamics::{
    pde_residual, step, DynamicsError, Integrator, NumericHamiltonian, TransportSource,
};
use crate::grid::{interpolate, Interpolation, MaskedField, PhaseGrid};
use num_complex::Complex64;
use rayon::prelude::*;
use std::io::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("hbar must be positive, got {0}")]
    BadHbar(f64),
    #[error("Gaussian widths must be positive, got sigma_q = {0}, sigma_p = {1}")]
    BadWidths(f64, f64),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("Eulerian integration unstable: norm ratio {ratio:.3} at t = {t:.6}")]
    Unstable { t: f64, ratio: f64 },
    #[error("need at least 3 stored snapshots, got {0}")]
    ShortHistory(usize),
}

/// Transport mode: plain two-field transport, or the extended equation whose
/// phase picks up the Lagrangian along characteristics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Kvn,
    Extended,
}

#[derive(Debug, Clone, Copy)]
pub struct EvolutionConfig {
    pub mode: Mode,
    pub hbar: f64,
    pub dt: f64,
    pub interpolation: Interpolation,
    pub integrator: Integrator,
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        if !(self.hbar > 0.0) {
            return Err(EvolutionError::BadHbar(self.hbar));
        }
        if !(self.dt > 0.0) {
            return Err(DynamicsError::BadTimeStep(self.dt).into());
        }
        Ok(())
    }
}

/// Paired real fields (√ρ, S) on a phase-space grid at one instant.
#[derive(Debug, Clone)]
pub struct EnsembleField {
    pub grid: PhaseGrid,
    pub amp: Vec<f64>,
    pub phase: Vec<f64>,
    pub time: f64,
}

impl EnsembleField {
    pub fn new(grid: PhaseGrid, amp: Vec<f64>, phase: Vec<f64>, time: f64) -> Self {
        assert_eq!(amp.len(), grid.len());
        assert_eq!(phase.len(), grid.len());
        debug_assert!(
            amp.iter().all(|&a| a >= 0.0),
            "amplitude must be nonnegative"
        );
        EnsembleField {
            grid,
            amp,
            phase,
            time,
        }
    }

    /// Total probability Σ amp²·Δq·Δp.
    pub fn norm(&self) -> f64 {
        let cell = self.grid.dq() * self.grid.dp();
        self.amp.iter().map(|a| a * a).sum::<f64>() * cell
    }
}

/// Complex field ψ(q, p) on a phase-space grid at one instant.
#[derive(Debug, Clone)]
pub struct ComplexField {
    pub grid: PhaseGrid,
    pub values: Vec<Complex64>,
    pub time: f64,
}

impl ComplexField {
    pub fn zero(grid: PhaseGrid) -> Self {
        ComplexField {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            time: 0.0,
        }
    }
}

/// Assemble ψ = amp·exp(i·phase/ħ) pointwise.
pub fn assemble_psi(f: &EnsembleField, hbar: f64) -> ComplexField {
    let values = f
        .amp
        .iter()
        .zip(&f.phase)
        .map(|(&a, &s)| {
            if a == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(a, s / hbar)
            }
        })
        .collect();
    ComplexField {
        grid: f.grid,
        values,
        time: f.time,
    }
}

/// Riemann-sum norm Σ|ψ|²·Δq·Δp.
pub fn norm(psi: &ComplexField) -> f64 {
    let cell = psi.grid.dq() * psi.grid.dp();
    psi.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell
}

/// Diagnostics from building an initial ensemble.
#[derive(Debug, Clone, Copy)]
pub struct InitDiagnostics {
    /// Largest boundary amplitude relative to the field maximum.
    pub boundary_ratio: f64,
    /// True when the Gaussian support is visibly clipped by the window.
    pub clipped: bool,
}

/// Normalized Gaussian ensemble: ρ = amp² has standard deviations (σq, σp)
/// around (q0, p0) and unit integral; the phase is an arbitrary initial action
/// polynomial S0(q, p) given as (q-power, p-power, coefficient) terms.
pub fn gaussian_ensemble(
    grid: &PhaseGrid,
    q0: f64,
    p0: f64,
    sigma_q: f64,
    sigma_p: f64,
    s0_terms: &[(u32, u32, f64)],
) -> Result<(EnsembleField, InitDiagnostics), EvolutionError> {
    if !(sigma_q > 0.0 && sigma_p > 0.0) {
        return Err(EvolutionError::BadWidths(sigma_q, sigma_p));
    }
    let prefactor = 1.0 / (2.0 * std::f64::consts::PI * sigma_q * sigma_p).sqrt();
    let amp = grid.sample(|q, p| {
        let dq = (q - q0) / sigma_q;
        let dp = (p - p0) / sigma_p;
        prefactor * (-(dq * dq) / 4.0 - (dp * dp) / 4.0).exp()
    });
    let phase = grid.sample(|q, p| {
        s0_terms
            .iter()
            .map(|&(a, b, c)| c * q.powi(a as i32) * p.powi(b as i32))
            .sum()
    });

    let mut boundary_max = 0.0f64;
    for iq in 0..grid.nq {
        boundary_max = boundary_max
            .max(amp[grid.index(iq, 0)])
            .max(amp[grid.index(iq, grid.np - 1)]);
    }
    for ip in 0..grid.np {
        boundary_max = boundary_max
            .max(amp[grid.index(0, ip)])
            .max(amp[grid.index(grid.nq - 1, ip)]);
    }
    let boundary_ratio = boundary_max / prefactor;
    let diag = InitDiagnostics {
        boundary_ratio,
        clipped: boundary_ratio > 1e-12,
    };
    Ok((EnsembleField::new(*grid, amp, phase, 0.0), diag))
}

/// Result of a semi-Lagrangian run.
#[derive(Debug, Clone)]
pub struct Evolved {
    pub field: EnsembleField,
    /// (time, norm) at every step, starting with the initial state.
    pub norms: Vec<(f64, f64)>,
    /// Nodes whose backtrace left the window at least once.
    pub exited_nodes: usize,
    /// True when a backtrace exceeded one cell per step under linear
    /// interpolation.
    pub cfl_warning: bool,
    /// Snapshots recorded every `stride` steps (including start and end) when
    /// requested.
    pub snapshots: Vec<EnsembleField>,
}

/// Evolve an ensemble to `t_final` by semi-Lagrangian steps: every node
/// backtraces one integrator step along the flow, pulls (√ρ, S) from the
/// departure point, and in extended mode adds the trapezoid of Lbar over the
/// step to the phase. Backtraces leaving the window set the amplitude to zero
/// and keep the previous phase.
pub fn evolve(
    f: &EnsembleField,
    ham: &NumericHamiltonian,
    cfg: &EvolutionConfig,
    t_final: f64,
) -> Result<Evolved, EvolutionError> {
    evolve_recording(f, ham, cfg, t_final, None)
}

/// As [`evolve`], recording snapshots every `stride` steps when given.
pub fn evolve_recording(
    f: &EnsembleField,
    ham: &NumericHamiltonian,
    cfg: &EvolutionConfig,
    t_final: f64,
    stride: Option<usize>,
) -> Result<Evolved, EvolutionError> {
    cfg.validate()?;
    if cfg.integrator == Integrator::Verlet && !ham.is_separable() {
        return Err(DynamicsError::VerletNeedsSeparable.into());
    }
    let grid = f.grid;
    let span = t_final - f.time;
    let n_steps = if span == 0.0 {
        0
    } else {
        (span.abs() / cfg.dt).round().max(1.0) as usize
    };
    let h = if n_steps == 0 {
        0.0
    } else {
        span / n_steps as f64
    };

    let mut amp = f.amp.clone();
    let mut phase = f.phase.clone();
    let mut exited = vec![false; grid.len()];
    let mut norms = Vec::with_capacity(n_steps + 1);
    let mut snapshots = Vec::new();
    let cell_scale = grid.dq().min(grid.dp());
    let mut max_cells = 0.0f64;
    let mut time = f.time;

    let current_norm =
        |amp: &[f64]| -> f64 { amp.iter().map(|a| a * a).sum::<f64>() * grid.dq() * grid.dp() };
    norms.push((time, current_norm(&amp)));
    if stride.is_some() {
        snapshots.push(EnsembleField {
            grid,
            amp: amp.clone(),
            phase: phase.clone(),
            time,
        });
    }

    for k in 0..n_steps {
        let results: Vec<(f64, f64, bool, f64)> = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let iq = idx / grid.np;
                let ip = idx % grid.np;
                let (q, p) = (grid.q_at(iq), grid.p_at(ip));
                let (q_d, p_d) = match step(ham, q, p, -h, cfg.integrator) {
                    Ok(v) => v,
                    Err(_) => return (0.0, phase[idx], false, 0.0),
                };
                let displacement = ((q - q_d).powi(2) + (p - p_d).powi(2)).sqrt() / cell_scale;
                let a = interpolate(&grid, &amp, q_d, p_d, cfg.interpolation);
                let s = interpolate(&grid, &phase, q_d, p_d, cfg.interpolation);
                match (a, s) {
                    (Some(a), Some(s)) => {
                        let s = match cfg.mode {
                            Mode::Kvn => s,
                            Mode::Extended => {
                                s + 0.5 * h * (ham.lagrangian(q_d, p_d) + ham.lagrangian(q, p))
                            }
                        };
                        // Interpolation can slightly undershoot zero near the
                        // support edge; amplitudes stay nonnegative.
                        (a.max(0.0), s, true, displacement)
                    }
                    _ => (0.0, phase[idx], false, displacement),
                }
            })
            .collect();

        let mut new_amp = Vec::with_capacity(grid.len());
        let mut new_phase = Vec::with_capacity(grid.len());
        for (idx, (a, s, inside, cells)) in results.into_iter().enumerate() {
            new_amp.push(a);
            new_phase.push(s);
            if !inside {
                exited[idx] = true;
            }
            max_cells = max_cells.max(cells);
        }
        amp = new_amp;
        phase = new_phase;
        time = f.time + (k + 1) as f64 * h;
        norms.push((time, current_norm(&amp)));
        if let Some(stride) = stride {
            if (k + 1) % stride.max(1) == 0 || k + 1 == n_steps {
                snapshots.push(EnsembleField {
                    grid,
                    amp: amp.clone(),
                    phase: phase.clone(),
                    time,
                });
            }
        }
    }

    let cfl_warning = cfg.interpolation == Interpolation::Linear && max_cells > 1.0;
    Ok(Evolved {
        field: EnsembleField {
            grid,
            amp,
            phase,
            time,
        },
        norms,
        exited_nodes: exited.iter().filter(|&&e| e).count(),
        cfl_warning,
        snapshots,
    })
}

/// Eulerian right-hand side variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EulerianRhs {
    /// ∂ψ/∂t = D_H ψ (homogeneous transport of the complex field).
    Transport,
    /// ∂ψ/∂t = D_H ψ + (i/ħ)·Lbar·ψ (extended equation).
    ExtendedTransport,
}

fn eulerian_rhs(
    grid: &PhaseGrid,
    psi: &[Complex64],
    ham: &NumericHamiltonian,
    hbar: f64,
    kind: EulerianRhs,
) -> Vec<Complex64> {
    let dq = grid.dq();
    let dp = grid.dp();
    let nq = grid.nq as isize;
    let np = grid.np as isize;
    let at = |iq: isize, ip: isize| -> Complex64 {
        // Fields are compactly supported; outside the window they vanish.
        if iq < 0 || ip < 0 || iq >= nq || ip >= np {
            Complex64::new(0.0, 0.0)
        } else {
            psi[(iq * np + ip) as usize]
        }
    };
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let iq = (idx / grid.np) as isize;
            let ip = (idx % grid.np) as isize;
            let (q, p) = (grid.q_at(iq as usize), grid.p_at(ip as usize));
            // 4th-order central differences.
            let psi_q = (at(iq - 2, ip) - at(iq + 2, ip) + (at(iq + 1, ip) - at(iq - 1, ip)) * 8.0)
                / (12.0 * dq);
            let psi_p = (at(iq, ip - 2) - at(iq, ip + 2) + (at(iq, ip + 1) - at(iq, ip - 1)) * 8.0)
                / (12.0 * dp);
            let advect = psi_p * ham.dh_dq(q, p) - psi_q * ham.dh_dp(q, p);
            match kind {
                EulerianRhs::Transport => advect,
                EulerianRhs::ExtendedTransport => {
                    advect + at(iq, ip) * Complex64::new(0.0, ham.lagrangian(q, p) / hbar)
                }
            }
        })
        .collect()
}

fn eulerian_run(
    psi0: &ComplexField,
    ham: &NumericHamiltonian,
    cfg: &EvolutionConfig,
    t_final: f64,
    kind: EulerianRhs,
) -> Result<ComplexField, EvolutionError> {
    cfg.validate()?;
    let grid = psi0.grid;
    let span = t_final - psi0.time;
    let n_steps = if span == 0.0 {
        0
    } else {
        (span.abs() / cfg.dt).round().max(1.0) as usize
    };
    let h = if n_steps == 0 {
        0.0
    } else {
        span / n_steps as f64
    };
    let norm0 = norm(psi0);
    let mut values = psi0.values.clone();
    let mut time = psi0.time;

    let axpy = |a: &[Complex64], b: &[Complex64], w: f64| -> Vec<Complex64> {
        a.par_iter().zip(b).map(|(x, y)| x + y * w).collect()
    };

    for k in 0..n_steps {
        let k1 = eulerian_rhs(&grid, &values, ham, cfg.hbar, kind);
        let k2 = eulerian_rhs(&grid, &axpy(&values, &k1, 0.5 * h), ham, cfg.hbar, kind);
        let k3 = eulerian_rhs(&grid, &axpy(&values, &k2, 0.5 * h), ham, cfg.hbar, kind);
        let k4 = eulerian_rhs(&grid, &axpy(&values, &k3, h), ham, cfg.hbar, kind);
        values = values
            .par_iter()
            .zip(
                k1.par_iter()
                    .zip(k2.par_iter().zip(k3.par_iter().zip(k4.par_iter()))),
            )
            .map(|(v, (a, (b, (c, d))))| v + (a + (b + c) * 2.0 + d) * (h / 6.0))
            .collect();
        time = psi0.time + (k + 1) as f64 * h;

        if k % 50 == 0 || k + 1 == n_steps {
            let current = ComplexField {
                grid,
                values: values.clone(),
                time,
            };
            let ratio = norm(&current) / norm0;
            if ratio > 1.1 {
                return Err(EvolutionError::Unstable { t: time, ratio });
            }
        }
    }
    Ok(ComplexField { grid, values, time })
}

/// Eulerian cross-check oracle: RK4 time stepping of the extended transport
/// equation for ψ with 4th-order central differences. Aborts when the norm
/// grows beyond 10%.
pub fn evolve_eulerian_oracle(
    psi0: &ComplexField,
    ham: &NumericHamiltonian,
    cfg: &EvolutionConfig,
    t_final: f64,
) -> Result<ComplexField, EvolutionError> {
    let kind = match cfg.mode {
        Mode::Kvn => EulerianRhs::Transport,
        Mode::Extended => EulerianRhs::ExtendedTransport,
    };
    eulerian_run(psi0, ham, cfg, t_final, kind)
}

/// Linearity check on the Eulerian oracle: evolve ψ1, ψ2, and ψ1+ψ2 and
/// report the maximum pointwise defect |evolved(ψ1+ψ2) − evolved(ψ1) −
/// evolved(ψ2)|.
#[derive(Debug, Clone, Copy)]
pub struct SuperpositionReport {
    pub defect: f64,
    pub t_final: f64,
}

pub fn superposition_check(
    f1: &EnsembleField,
    f2: &EnsembleField,
    ham: &NumericHamiltonian,
    cfg: &EvolutionConfig,
    t_final: f64,
) -> Result<SuperpositionReport, EvolutionError> {
    if f1.grid != f2.grid {
        return Err(EvolutionError::GridMismatch);
    }
    let psi1 = assemble_psi(f1, cfg.hbar);
    let psi2 = assemble_psi(f2, cfg.hbar);
    let mut psi12 = psi1.clone();
    for (v, w) in psi12.values.iter_mut().zip(&psi2.values) {
        *v += w;
    }
    let e1 = evolve_eulerian_oracle(&psi1, ham, cfg, t_final)?;
    let e2 = evolve_eulerian_oracle(&psi2, ham, cfg, t_final)?;
    let e12 = evolve_eulerian_oracle(&psi12, ham, cfg, t_final)?;
    let defect = e12
        .values
        .iter()
        .zip(e1.values.iter().zip(&e2.values))
        .map(|(s, (a, b))| (s - a - b).norm())
        .fold(0.0, f64::max);
    Ok(SuperpositionReport { defect, t_final })
}

/// Finite-difference residuals of the decoupled transport equations on a
/// recorded history: the amplitude is always homogeneous, the phase carries
/// the Lagrangian source in extended mode.
pub fn decoupling_residuals(
    history: &[EnsembleField],
    ham: &NumericHamiltonian,
    mode: Mode,
) -> Result<(MaskedField, MaskedField), EvolutionError> {
    if history.len() < 3 {
        return Err(EvolutionError::ShortHistory(history.len()));
    }
    let to_masked = |pick: fn(&EnsembleField) -> &Vec<f64>| -> Vec<(f64, MaskedField)> {
        history
            .iter()
            .map(|f| (f.time, MaskedField::full(f.grid, pick(f).clone())))
            .collect()
    };
    let amp_history = to_masked(|f| &f.amp);
    let phase_history = to_masked(|f| &f.phase);
    let r_amp = pde_residual(&amp_history, ham, TransportSource::Zero)?;
    let phase_source = match mode {
        Mode::Kvn => TransportSource::Zero,
        Mode::Extended => TransportSource::Lagrangian,
    };
    let r_phase = pde_residual(&phase_history, ham, phase_source)?;
    Ok((r_amp, r_phase))
}

/// Marginal position density ρ_q(q) = Σ_p amp²·Δp on the grid's q nodes.
pub fn marginal_q(f: &EnsembleField) -> Vec<f64> {
    let grid = f.grid;
    (0..grid.nq)
        .map(|iq| {
            (0..grid.np)
                .map(|ip| f.amp[grid.index(iq, ip)].powi(2))
                .sum::<f64>()
                * grid.dp()
        })
        .collect()
}

/// Write a field snapshot as CSV with columns q, p, amp, phase, re ψ, im ψ.
pub fn write_field_csv(path: &Path, f: &EnsembleField, hbar: f64) -> std::io::Result<()> {
    let psi = assemble_psi(f, hbar);
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "q,p,amp,phase,psi_re,psi_im")?;
    for (idx, q, p) in f.grid.nodes() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            q, p, f.amp[idx], f.phase[idx], psi.values[idx].re, psi.values[idx].im
        )?;
    }
    Ok(())
}

/// Write a real grid field as gnuplot-compatible matrix blocks: one `q p v`
/// line per node, blank line between rows of constant q.
pub fn write_matrix_dat(path: &Path, grid: &PhaseGrid, values: &[f64]) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for iq in 0..grid.nq {
        for ip in 0..grid.np {
            writeln!(
                out,
                "{} {} {}",
                grid.q_at(iq),
                grid.p_at(ip),
                values[grid.index(iq, ip)]
            )?;
        }
        writeln!(out)?;
    }
    Ok(())
}
