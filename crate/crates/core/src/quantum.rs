//! Configuration-space Schrödinger reference solver and the classical↔quantum
//! marginal comparison.
//!
//! The solver is a standard split-step (Strang) scheme: half a potential phase,
//! a spectral kinetic step, half a potential phase. The spectral step implies
//! periodic wrap, so states must stay negligible at the window edges; a
//! leakage guard aborts otherwise.

use crate::algebra::{self, ConfigOperator, PhasePolynomial, Scalar};
use crate::dynamics::Poly1;
use crate::evolution::{marginal_q, EnsembleField};
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rustfft::FftPlanner;
use std::io::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("time step must be positive, got {0}")]
    BadTimeStep(f64),
    #[error("state leaks at the window boundary: |ψ|/max = {ratio:.3e} at t = {t}")]
    BoundaryLeak { t: f64, ratio: f64 },
    #[error("grid too narrow for the requested state")]
    GridTooNarrow,
    #[error("coherent-state width must be positive, got {0}")]
    BadWidth(f64),
    #[error("classical and quantum windows do not overlap correctly")]
    WindowMismatch,
    #[error("configuration operator mismatch after projection:\n  got      {got}\n  expected {expected}")]
    ProjectionMismatch { got: String, expected: String },
}

/// Complex wave function on a uniform periodic q-grid.
#[derive(Debug, Clone)]
pub struct WaveFunction1D {
    pub q_min: f64,
    pub q_max: f64,
    pub values: Vec<Complex64>,
    pub time: f64,
    pub hbar: f64,
    pub mass: f64,
}

impl WaveFunction1D {
    pub fn nq(&self) -> usize {
        self.values.len()
    }

    /// Node spacing; the grid is periodic, so the last node sits one spacing
    /// before `q_max`.
    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / self.nq() as f64
    }

    pub fn q_at(&self, j: usize) -> f64 {
        self.q_min + j as f64 * self.dq()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dq()
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Discrete first moment ⟨q⟩.
    pub fn position_expectation(&self) -> f64 {
        let weighted: f64 = (0..self.nq())
            .map(|j| self.q_at(j) * self.values[j].norm_sqr())
            .sum();
        weighted * self.dq() / self.norm()
    }

    /// L² distance up to a global phase: min over φ of ‖ψ − e^{iφ}·other‖.
    pub fn distance_up_to_phase(&self, other: &WaveFunction1D) -> f64 {
        let overlap: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.dq();
        let phase = if overlap.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            overlap / overlap.norm()
        };
        let mut acc = 0.0;
        for (a, b) in self.values.iter().zip(&other.values) {
            acc += (a - b / phase).norm_sqr();
        }
        (acc * self.dq()).sqrt()
    }

    /// Energy expectation ⟨ψ| p̂²/2m + V(q) |ψ⟩ with a spectral kinetic term.
    pub fn energy_expectation(&self, potential: &Poly1) -> f64 {
        let n = self.nq();
        let length = self.q_max - self.q_min;
        let mut freq = self.values.clone();
        FftPlanner::new().plan_fft_forward(n).process(&mut freq);
        let mut kinetic = 0.0;
        for (j, v) in freq.iter().enumerate() {
            let j_signed = if j <= n / 2 {
                j as f64
            } else {
                j as f64 - n as f64
            };
            let k = 2.0 * std::f64::consts::PI * j_signed / length;
            kinetic += self.hbar * self.hbar * k * k / (2.0 * self.mass) * v.norm_sqr();
        }
        kinetic *= self.dq() / n as f64;
        let potential_energy = (0..n)
            .map(|j| potential.eval(self.q_at(j)) * self.values[j].norm_sqr())
            .sum::<f64>()
            * self.dq();
        kinetic + potential_energy
    }

    fn boundary_ratio(&self) -> f64 {
        let max = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        let edge = self.values[0].norm().max(self.values[self.nq() - 1].norm());
        edge / max
    }
}

/// Minimum-uncertainty Gaussian packet: σp = ħ/(2σq).
#[derive(Debug, Clone, Copy)]
pub struct CoherentStateSpec {
    pub q0: f64,
    pub p0: f64,
    pub sigma_q: f64,
    pub omega: f64,
    pub mass: f64,
}

impl CoherentStateSpec {
    pub fn sigma_p(&self, hbar: f64) -> f64 {
        hbar / (2.0 * self.sigma_q)
    }
}

/// Build the normalized packet exp(−(q−q0)²/(4σq²) + i·p0·q/ħ) on a grid.
pub fn coherent_state(
    spec: &CoherentStateSpec,
    q_min: f64,
    q_max: f64,
    nq: usize,
    hbar: f64,
) -> Result<WaveFunction1D, QuantumError> {
    if !(spec.sigma_q > 0.0) {
        return Err(QuantumError::BadWidth(spec.sigma_q));
    }
    let mut wf = WaveFunction1D {
        q_min,
        q_max,
        values: vec![Complex64::new(0.0, 0.0); nq],
        time: 0.0,
        hbar,
        mass: spec.mass,
    };
    for j in 0..nq {
        let q = wf.q_at(j);
        let envelope = (-(q - spec.q0).powi(2) / (4.0 * spec.sigma_q * spec.sigma_q)).exp();
        wf.values[j] = Complex64::from_polar(envelope, spec.p0 * q / hbar);
    }
    let n = wf.norm().sqrt();
    if !(n > 0.0) {
        return Err(QuantumError::GridTooNarrow);
    }
    for v in wf.values.iter_mut() {
        *v /= n;
    }
    if wf.boundary_ratio() > 1e-10 {
        return Err(QuantumError::GridTooNarrow);
    }
    Ok(wf)
}

/// Split-step evolution under H = p²/2m + V(q): half potential phase,
/// spectral kinetic step, half potential phase, second order in dt. Aborts
/// when probability leaks to the window boundary.
pub fn schrodinger_evolve(
    psi0: &WaveFunction1D,
    potential: &Poly1,
    t_final: f64,
    dt: f64,
) -> Result<WaveFunction1D, QuantumError> {
    if !(dt > 0.0) {
        return Err(QuantumError::BadTimeStep(dt));
    }
    let start_ratio = psi0.boundary_ratio();
    if start_ratio > 1e-10 {
        return Err(QuantumError::BoundaryLeak {
            t: psi0.time,
            ratio: start_ratio,
        });
    }
    let span = t_final - psi0.time;
    if span == 0.0 {
        return Ok(psi0.clone());
    }
    let n_steps = (span.abs() / dt).round().max(1.0) as usize;
    let h = span / n_steps as f64;
    let nq = psi0.nq();
    let length = psi0.q_max - psi0.q_min;

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(nq);
    let ifft = planner.plan_fft_inverse(nq);

    // Phase factors for one step.
    let half_potential: Vec<Complex64> = (0..nq)
        .map(|j| {
            let v = potential.eval(psi0.q_at(j));
            Complex64::from_polar(1.0, -0.5 * h * v / psi0.hbar)
        })
        .collect();
    let kinetic: Vec<Complex64> = (0..nq)
        .map(|j| {
            let j_signed = if j <= nq / 2 {
                j as f64
            } else {
                j as f64 - nq as f64
            };
            let k = 2.0 * std::f64::consts::PI * j_signed / length;
            Complex64::from_polar(1.0, -h * psi0.hbar * k * k / (2.0 * psi0.mass))
        })
        .collect();

    let mut wf = psi0.clone();
    let scale = 1.0 / nq as f64;
    for step in 0..n_steps {
        for (v, w) in wf.values.iter_mut().zip(&half_potential) {
            *v *= w;
        }
        fft.process(&mut wf.values);
        for (v, w) in wf.values.iter_mut().zip(&kinetic) {
            *v *= w;
        }
        ifft.process(&mut wf.values);
        for (v, w) in wf.values.iter_mut().zip(&half_potential) {
            *v = *v * scale * w;
        }
        wf.time = psi0.time + (step + 1) as f64 * h;

        if step % 256 == 255 || step + 1 == n_steps {
            let ratio = wf.boundary_ratio();
            if ratio > 1e-8 {
                return Err(QuantumError::BoundaryLeak { t: wf.time, ratio });
            }
        }
    }
    Ok(wf)
}

/// Distances between a classical marginal and a quantum position density.
#[derive(Debug, Clone, Copy)]
pub struct MarginalReport {
    pub l_inf: f64,
    pub l1: f64,
}

/// Local 1D cubic Lagrange interpolation on a uniform grid.
fn interp1_cubic(x0: f64, dx: f64, values: &[f64], x: f64) -> Option<f64> {
    let n = values.len();
    let u = (x - x0) / dx;
    if u < 0.0 || u > (n - 1) as f64 {
        return None;
    }
    let cell = (u.floor() as isize).clamp(0, n as isize - 2);
    let base = (cell - 1).clamp(0, n as isize - 4) as usize;
    let s = u - (base + 1) as f64;
    let w = [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ];
    Some((0..4).map(|i| w[i] * values[base + i]).sum())
}

/// Compare the classical position marginal against |ψ(q)|² on the classical
/// q nodes (the quantum density is interpolated there).
pub fn compare_marginal(
    classical: &EnsembleField,
    quantum: &WaveFunction1D,
) -> Result<MarginalReport, QuantumError> {
    let grid = classical.grid;
    if grid.q_min < quantum.q_min || grid.q_max > quantum.q_max - quantum.dq() {
        return Err(QuantumError::WindowMismatch);
    }
    let marginal = marginal_q(classical);
    let density = quantum.density();
    let mut l_inf = 0.0f64;
    let mut l1 = 0.0f64;
    for (iq, &m) in marginal.iter().enumerate() {
        let q = grid.q_at(iq);
        let d = interp1_cubic(quantum.q_min, quantum.dq(), &density, q)
            .ok_or(QuantumError::WindowMismatch)?;
        l_inf = l_inf.max((m - d).abs());
        l1 += (m - d).abs() * grid.dq();
    }
    Ok(MarginalReport { l_inf, l1 })
}

/// Outcome of checking the projected Hamiltonian against the solver generator.
#[derive(Debug, Clone)]
pub struct ProjectionReport {
    /// Projected operator equals −(ħ²/2m)∂²/∂q² + V(q) exactly.
    pub symbolic_ok: bool,
    /// The split-step kinetic coefficient matches the projected one.
    pub kinetic_ok: bool,
    /// The split-step potential matches the projected multiplication part.
    pub potential_ok: bool,
    pub rendered: String,
}

impl ProjectionReport {
    pub fn all_ok(&self) -> bool {
        self.symbolic_ok && self.kinetic_ok && self.potential_ok
    }
}

/// Build the symbolic Hamiltonian p²/2m + V(q), project its prequantization to
/// configuration space, and assert both that the result is exactly the
/// standard Hamiltonian operator and that the numeric split-step generator
/// uses the same kinetic coefficient and potential.
pub fn projected_hamiltonian_check(
    mass: f64,
    potential: &Poly1,
) -> Result<ProjectionReport, QuantumError> {
    let half_inv_mass = Scalar::from_f64_exact(1.0 / (2.0 * mass)).expect("finite mass");
    let p = PhasePolynomial::p_var(1, 0);
    let mut h = p.pow(2).scale(&half_inv_mass);
    let mut v_poly = PhasePolynomial::zero(1);
    for (k, &c) in potential.coeffs().iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let coeff = Scalar::from_f64_exact(c).expect("finite coefficient");
        let term = PhasePolynomial::monomial(1, vec![k as u32], vec![0], coeff);
        v_poly = &v_poly + &term;
        h = &h + &term;
    }

    let quantized = algebra::quantize(&h);
    // Expected: −(ħ²/2m)∂²/∂q² + V(q).
    let kinetic_scalar = &(-&(&Scalar::hbar() * &Scalar::hbar())) * &half_inv_mass;
    let mut expected = ConfigOperator::multiplication(&v_poly);
    expected.add_term(
        vec![2],
        PhasePolynomial::constant(1, kinetic_scalar.clone()),
    );
    let symbolic_ok = quantized == expected;
    if !symbolic_ok {
        return Err(QuantumError::ProjectionMismatch {
            got: quantized.to_string(),
            expected: expected.to_string(),
        });
    }

    // The split-step generator applies exp(−i·dt·ħk²/2m) and exp(−i·dt·V/ħ):
    // its kinetic weight is 1/2m and its potential is `potential` itself.
    let mut kinetic_ok = false;
    let mut projected_potential: Vec<f64> = Vec::new();
    for (idx, coeff) in quantized.terms() {
        if idx == &vec![2] {
            // Coefficient is a constant polynomial −(ħ²/2m); at ħ = 1 its
            // real value is −1/2m.
            let (re, im) = coeff
                .terms()
                .next()
                .map(|(_, c)| c.eval_f64(1.0))
                .unwrap_or((0.0, 0.0));
            kinetic_ok = im == 0.0 && (re + 1.0 / (2.0 * mass)).abs() == 0.0;
        } else if idx.iter().all(|&e| e == 0) {
            for (m, c) in coeff.terms() {
                let deg = m.q_exp[0] as usize;
                if projected_potential.len() <= deg {
                    projected_potential.resize(deg + 1, 0.0);
                }
                let rational = c.eval_f64(1.0);
                projected_potential[deg] = rational.0;
            }
        }
    }
    if potential.coeffs().iter().all(|&c| c == 0.0) {
        // Pure kinetic case: nothing to compare beyond emptiness.
        projected_potential.clear();
    }
    let mut numeric = potential.coeffs().to_vec();
    while numeric.last() == Some(&0.0) {
        numeric.pop();
    }
    let potential_ok = projected_potential == numeric;

    Ok(ProjectionReport {
        symbolic_ok,
        kinetic_ok,
        potential_ok,
        rendered: quantized.to_string(),
    })
}

/// Write a wave-function snapshot as CSV with columns q, re ψ, im ψ, |ψ|².
pub fn write_wavefunction_csv(path: &Path, wf: &WaveFunction1D) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "q,psi_re,psi_im,density")?;
    for (j, v) in wf.values.iter().enumerate() {
        writeln!(out, "{},{},{},{}", wf.q_at(j), v.re, v.im, v.norm_sqr())?;
    }
    Ok(())
}

// Used indirectly by kinetic_ok; keep the exact-to-float path in one place.
#[allow(dead_code)]
fn rational_to_f64(r: &num_rational::BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
