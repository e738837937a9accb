//! Canonical flows, inverse flows, and classical action along characteristics.
//!
//! The flow of H solves q̇ = ∂H/∂p, ṗ = −∂H/∂q from initial data (q_s, p_s).
//! Along each trajectory the accumulated action is the time integral of the
//! phase-space Lagrangian Lbar(q, p) = p·∂H/∂p − H, evaluated by trapezoid
//! quadrature on the integrator substeps so that action and state advance on
//! the same discrete path.

use crate::grid::{interpolate, Interpolation, MaskedField, PhaseGrid};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("time step must be positive, got {0}")]
    BadTimeStep(f64),
    #[error("mass must be positive, got {0}")]
    BadMass(f64),
    #[error("Verlet integration requires a separable Hamiltonian")]
    VerletNeedsSeparable,
    #[error("trajectory blew up: non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("need at least 3 stored times for a time derivative, got {0}")]
    ShortHistory(usize),
    #[error("field history is not on a uniform time ladder")]
    UnevenHistory,
}

/// One-dimensional real polynomial, V(q) = Σ c_k q^k.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly1 {
    coeffs: Vec<f64>,
}

impl Poly1 {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Poly1 { coeffs }
    }

    pub fn zero() -> Self {
        Poly1 { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly1 {
        Poly1 {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        }
    }
}

/// Real polynomial in (q, p) for one degree of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly2 {
    terms: Vec<(u32, u32, f64)>,
}

impl Poly2 {
    pub fn new(terms: Vec<(u32, u32, f64)>) -> Self {
        Poly2 { terms }
    }

    pub fn terms(&self) -> &[(u32, u32, f64)] {
        &self.terms
    }

    pub fn eval(&self, q: f64, p: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(a, b, c)| c * q.powi(a as i32) * p.powi(b as i32))
            .sum()
    }

    fn dq(&self) -> Poly2 {
        Poly2 {
            terms: self
                .terms
                .iter()
                .filter(|&&(a, _, _)| a > 0)
                .map(|&(a, b, c)| (a - 1, b, a as f64 * c))
                .collect(),
        }
    }

    fn dp(&self) -> Poly2 {
        Poly2 {
            terms: self
                .terms
                .iter()
                .filter(|&&(_, b, _)| b > 0)
                .map(|&(a, b, c)| (a, b - 1, b as f64 * c))
                .collect(),
        }
    }
}

/// A numeric Hamiltonian for one degree of freedom, either in the separable
/// form p²/2m + V(q) or as a general real polynomial in (q, p).
#[derive(Debug, Clone)]
pub enum NumericHamiltonian {
    Separable {
        mass: f64,
        potential: Poly1,
        potential_slope: Poly1,
    },
    Polynomial {
        h: Poly2,
        h_q: Poly2,
        h_p: Poly2,
    },
}

impl NumericHamiltonian {
    pub fn separable(mass: f64, potential: Poly1) -> Result<Self, DynamicsError> {
        if !(mass > 0.0) {
            return Err(DynamicsError::BadMass(mass));
        }
        let potential_slope = potential.derivative();
        Ok(NumericHamiltonian::Separable {
            mass,
            potential,
            potential_slope,
        })
    }

    pub fn polynomial(h: Poly2) -> Self {
        let h_q = h.dq();
        let h_p = h.dp();
        NumericHamiltonian::Polynomial { h, h_q, h_p }
    }

    /// Free particle p²/2m.
    pub fn free_particle(mass: f64) -> Result<Self, DynamicsError> {
        Self::separable(mass, Poly1::zero())
    }

    /// Harmonic oscillator p²/2 + q²/2 (unit mass and frequency).
    pub fn harmonic() -> Self {
        Self::separable(1.0, Poly1::new(vec![0.0, 0.0, 0.5])).expect("unit mass")
    }

    pub fn is_separable(&self) -> bool {
        matches!(self, NumericHamiltonian::Separable { .. })
    }

    pub fn eval(&self, q: f64, p: f64) -> f64 {
        match self {
            NumericHamiltonian::Separable {
                mass, potential, ..
            } => p * p / (2.0 * mass) + potential.eval(q),
            NumericHamiltonian::Polynomial { h, .. } => h.eval(q, p),
        }
    }

    pub fn dh_dq(&self, q: f64, _p: f64) -> f64 {
        match self {
            NumericHamiltonian::Separable {
                potential_slope, ..
            } => potential_slope.eval(q),
            NumericHamiltonian::Polynomial { h_q, .. } => h_q.eval(q, _p),
        }
    }

    pub fn dh_dp(&self, _q: f64, p: f64) -> f64 {
        match self {
            NumericHamiltonian::Separable { mass, .. } => p / mass,
            NumericHamiltonian::Polynomial { h_p, .. } => h_p.eval(_q, p),
        }
    }

    /// Phase-space Lagrangian Lbar(q, p) = p·∂H/∂p − H.
    pub fn lagrangian(&self, q: f64, p: f64) -> f64 {
        p * self.dh_dp(q, p) - self.eval(q, p)
    }
}

/// Right-hand side of the canonical equations: (q̇, ṗ) = (∂H/∂p, −∂H/∂q).
pub fn canonical_rhs(h: &NumericHamiltonian, q: f64, p: f64) -> Result<(f64, f64), DynamicsError> {
    let qd = h.dh_dp(q, p);
    let pd = -h.dh_dq(q, p);
    if qd.is_finite() && pd.is_finite() {
        Ok((qd, pd))
    } else {
        Err(DynamicsError::NonFiniteState { t: f64::NAN })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Verlet,
    Rk4,
}

/// One integrator step of signed size `h` (negative h steps backward).
pub fn step(
    ham: &NumericHamiltonian,
    q: f64,
    p: f64,
    h: f64,
    method: Integrator,
) -> Result<(f64, f64), DynamicsError> {
    match method {
        Integrator::Verlet => {
            let NumericHamiltonian::Separable {
                mass,
                potential_slope,
                ..
            } = ham
            else {
                return Err(DynamicsError::VerletNeedsSeparable);
            };
            // Kick–drift–kick; time-reversible for any sign of h.
            let p_half = p - 0.5 * h * potential_slope.eval(q);
            let q_new = q + h * p_half / mass;
            let p_new = p_half - 0.5 * h * potential_slope.eval(q_new);
            Ok((q_new, p_new))
        }
        Integrator::Rk4 => {
            let f = |q: f64, p: f64| (ham.dh_dp(q, p), -ham.dh_dq(q, p));
            let (k1q, k1p) = f(q, p);
            let (k2q, k2p) = f(q + 0.5 * h * k1q, p + 0.5 * h * k1p);
            let (k3q, k3p) = f(q + 0.5 * h * k2q, p + 0.5 * h * k2p);
            let (k4q, k4p) = f(q + h * k3q, p + h * k3p);
            Ok((
                q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q),
                p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
            ))
        }
    }
}

/// One sampled state along a characteristic: phase-space point, action
/// accumulated since the start time, and the time itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub q: f64,
    pub p: f64,
    pub s: f64,
    pub t: f64,
}

/// Endpoint of a characteristic with its accumulated action and diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct FlowResult {
    pub q: f64,
    pub p: f64,
    /// Accumulated action ∫ Lbar du from t_s to t along the trajectory.
    pub action: f64,
    pub steps: usize,
    /// |H(end) − H(start)| for autonomous H.
    pub energy_drift: f64,
}

fn plan_steps(t_start: f64, t_end: f64, dt: f64) -> Result<(usize, f64), DynamicsError> {
    if !(dt > 0.0) {
        return Err(DynamicsError::BadTimeStep(dt));
    }
    let span = t_end - t_start;
    if span == 0.0 {
        return Ok((0, 0.0));
    }
    let n = (span.abs() / dt).round().max(1.0) as usize;
    Ok((n, span / n as f64))
}

/// Integrate the flow of H from (q_s, p_s) at t_s to time t, accumulating the
/// classical action on the same substeps (trapezoid on Lbar).
pub fn integrate_flow(
    ham: &NumericHamiltonian,
    q_s: f64,
    p_s: f64,
    t_s: f64,
    t: f64,
    dt: f64,
    method: Integrator,
) -> Result<FlowResult, DynamicsError> {
    let (n, h) = plan_steps(t_s, t, dt)?;
    let e0 = ham.eval(q_s, p_s);
    let mut q = q_s;
    let mut p = p_s;
    let mut action = 0.0;
    let mut lag_prev = ham.lagrangian(q, p);
    for k in 0..n {
        let (q_new, p_new) = step(ham, q, p, h, method)?;
        if !(q_new.is_finite() && p_new.is_finite()) {
            return Err(DynamicsError::NonFiniteState {
                t: t_s + (k + 1) as f64 * h,
            });
        }
        let lag_new = ham.lagrangian(q_new, p_new);
        action += 0.5 * h * (lag_prev + lag_new);
        lag_prev = lag_new;
        q = q_new;
        p = p_new;
    }
    Ok(FlowResult {
        q,
        p,
        action,
        steps: n,
        energy_drift: (ham.eval(q, p) - e0).abs(),
    })
}

/// Integrate as [`integrate_flow`] but keep every substep, returning the
/// discrete trajectory with its running action.
pub fn sample_trajectory(
    ham: &NumericHamiltonian,
    q_s: f64,
    p_s: f64,
    t_s: f64,
    t: f64,
    dt: f64,
    method: Integrator,
) -> Result<Vec<TrajectoryPoint>, DynamicsError> {
    let (n, h) = plan_steps(t_s, t, dt)?;
    let mut points = Vec::with_capacity(n + 1);
    let mut current = TrajectoryPoint {
        q: q_s,
        p: p_s,
        s: 0.0,
        t: t_s,
    };
    points.push(current);
    let mut lag_prev = ham.lagrangian(q_s, p_s);
    for k in 0..n {
        let (q_new, p_new) = step(ham, current.q, current.p, h, method)?;
        if !(q_new.is_finite() && p_new.is_finite()) {
            return Err(DynamicsError::NonFiniteState {
                t: t_s + (k + 1) as f64 * h,
            });
        }
        let lag_new = ham.lagrangian(q_new, p_new);
        current = TrajectoryPoint {
            q: q_new,
            p: p_new,
            s: current.s + 0.5 * h * (lag_prev + lag_new),
            t: t_s + (k + 1) as f64 * h,
        };
        lag_prev = lag_new;
        points.push(current);
    }
    Ok(points)
}

/// Integrate the canonical equations backward from (q, p) at time t to the
/// start time t_s, recovering the initial values of the characteristic.
pub fn inverse_flow(
    ham: &NumericHamiltonian,
    q: f64,
    p: f64,
    t: f64,
    t_s: f64,
    dt: f64,
    method: Integrator,
) -> Result<(f64, f64), DynamicsError> {
    let result = integrate_flow(ham, q, p, t, t_s, dt, method)?;
    Ok((result.q, result.p))
}

/// Transport a sampled phase-space function along the flow: the value at each
/// node (q, p, t) is the start-time value at the backtraced point. Nodes whose
/// backtrace leaves the window are flagged invalid.
pub fn transported_function(
    g_start: &MaskedField,
    ham: &NumericHamiltonian,
    t_s: f64,
    t: f64,
    dt: f64,
    method: Integrator,
    interp: Interpolation,
) -> Result<MaskedField, DynamicsError> {
    if t == t_s {
        return Ok(g_start.clone());
    }
    plan_steps(t_s, t, dt)?;
    let grid = g_start.grid;
    let results: Vec<(f64, bool)> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let iq = idx / grid.np;
            let ip = idx % grid.np;
            let (q, p) = (grid.q_at(iq), grid.p_at(ip));
            match inverse_flow(ham, q, p, t, t_s, dt, method) {
                Ok((q_s, p_s)) => match interpolate(&grid, &g_start.values, q_s, p_s, interp) {
                    Some(v) => (v, true),
                    None => (0.0, false),
                },
                Err(_) => (0.0, false),
            }
        })
        .collect();
    let (values, valid) = results.into_iter().unzip();
    Ok(MaskedField {
        grid,
        values,
        valid,
    })
}

/// Action field S(q, p, t): backtrace each node to t_s, then accumulate the
/// Lagrangian along the recovered forward trajectory, plus the interpolated
/// initial action (`None` means S ≡ 0 at t_s).
#[allow(clippy::too_many_arguments)]
pub fn action_field(
    ham: &NumericHamiltonian,
    grid: &PhaseGrid,
    initial_action: Option<&MaskedField>,
    t_s: f64,
    t: f64,
    dt: f64,
    method: Integrator,
    interp: Interpolation,
) -> Result<MaskedField, DynamicsError> {
    plan_steps(t_s, t, dt)?;
    let results: Vec<(f64, bool)> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let iq = idx / grid.np;
            let ip = idx % grid.np;
            let (q, p) = (grid.q_at(iq), grid.p_at(ip));
            let back = match inverse_flow(ham, q, p, t, t_s, dt, method) {
                Ok(v) => v,
                Err(_) => return (0.0, false),
            };
            if !grid.contains(back.0, back.1) {
                return (0.0, false);
            }
            let s0 = match initial_action {
                None => 0.0,
                Some(field) => match interpolate(grid, &field.values, back.0, back.1, interp) {
                    Some(v) => v,
                    None => return (0.0, false),
                },
            };
            match integrate_flow(ham, back.0, back.1, t_s, t, dt, method) {
                Ok(flow) => (s0 + flow.action, true),
                Err(_) => (0.0, false),
            }
        })
        .collect();
    let (values, valid) = results.into_iter().unzip();
    Ok(MaskedField {
        grid: *grid,
        values,
        valid,
    })
}

/// Inhomogeneity of the transport equation being checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportSource {
    /// [∂/∂t − D_H] G = 0 (flow-invariant transported functions).
    Zero,
    /// [∂/∂t − D_H] S = Lbar_H (action transport).
    Lagrangian,
}

/// Central finite-difference residual of the transport equation on three
/// equally spaced field snapshots. The residual at an interior node is
///
/// ```text
/// (G(t+h) − G(t−h))/2h − (∂H/∂q·∂G/∂p − ∂H/∂p·∂G/∂q) − source
/// ```
///
/// evaluated on the middle snapshot; it converges at second order for smooth
/// solutions. Boundary nodes and nodes with invalid neighbors are masked out.
pub fn pde_residual(
    history: &[(f64, MaskedField)],
    ham: &NumericHamiltonian,
    source: TransportSource,
) -> Result<MaskedField, DynamicsError> {
    if history.len() < 3 {
        return Err(DynamicsError::ShortHistory(history.len()));
    }
    let k = history.len() / 2;
    let (t_prev, prev) = &history[k - 1];
    let (_, mid) = &history[k];
    let (t_next, next) = &history[k + 1];
    let ht = 0.5 * (t_next - t_prev);
    if !(ht > 0.0) || (t_next + t_prev - 2.0 * history[k].0).abs() > 1e-9 * ht {
        return Err(DynamicsError::UnevenHistory);
    }

    let grid = mid.grid;
    let (dq, dp) = (grid.dq(), grid.dp());
    let mut values = vec![0.0; grid.len()];
    let mut valid = vec![false; grid.len()];
    for iq in 1..grid.nq - 1 {
        for ip in 1..grid.np - 1 {
            let idx = grid.index(iq, ip);
            let stencil_ok = prev.valid[idx]
                && next.valid[idx]
                && mid.valid[grid.index(iq - 1, ip)]
                && mid.valid[grid.index(iq + 1, ip)]
                && mid.valid[grid.index(iq, ip - 1)]
                && mid.valid[grid.index(iq, ip + 1)];
            if !stencil_ok {
                continue;
            }
            let (q, p) = (grid.q_at(iq), grid.p_at(ip));
            let g_t = (next.values[idx] - prev.values[idx]) / (2.0 * ht);
            let g_q = (mid.values[grid.index(iq + 1, ip)] - mid.values[grid.index(iq - 1, ip)])
                / (2.0 * dq);
            let g_p = (mid.values[grid.index(iq, ip + 1)] - mid.values[grid.index(iq, ip - 1)])
                / (2.0 * dp);
            let advected = ham.dh_dq(q, p) * g_p - ham.dh_dp(q, p) * g_q;
            let rhs = match source {
                TransportSource::Zero => 0.0,
                TransportSource::Lagrangian => ham.lagrangian(q, p),
            };
            values[idx] = g_t - advected - rhs;
            valid[idx] = true;
        }
    }
    Ok(MaskedField {
        grid,
        values,
        valid,
    })
}

/// Finite-difference Jacobian determinant of the time-t flow map at a point.
#[allow(clippy::too_many_arguments)]
pub fn flow_jacobian_det(
    ham: &NumericHamiltonian,
    q_s: f64,
    p_s: f64,
    t_s: f64,
    t: f64,
    dt: f64,
    method: Integrator,
    eps: f64,
) -> Result<f64, DynamicsError> {
    let flow = |q0: f64, p0: f64| -> Result<(f64, f64), DynamicsError> {
        let r = integrate_flow(ham, q0, p0, t_s, t, dt, method)?;
        Ok((r.q, r.p))
    };
    let (qp, pp) = flow(q_s + eps, p_s)?;
    let (qm, pm) = flow(q_s - eps, p_s)?;
    let (qp2, pp2) = flow(q_s, p_s + eps)?;
    let (qm2, pm2) = flow(q_s, p_s - eps)?;
    let dq_dqs = (qp - qm) / (2.0 * eps);
    let dp_dqs = (pp - pm) / (2.0 * eps);
    let dq_dps = (qp2 - qm2) / (2.0 * eps);
    let dp_dps = (pp2 - pm2) / (2.0 * eps);
    Ok(dq_dqs * dp_dps - dq_dps * dp_dqs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Interpolation;

    #[test]
    fn canonical_rhs_hand_values() {
        let free = NumericHamiltonian::free_particle(1.0).unwrap();
        let (qd, pd) = canonical_rhs(&free, 0.0, 2.0).unwrap();
        assert_eq!((qd, pd), (2.0, 0.0));

        let harm = NumericHamiltonian::harmonic();
        let (qd, pd) = canonical_rhs(&harm, 1.0, 0.0).unwrap();
        assert_eq!((qd, pd), (0.0, -1.0));

        let constant = NumericHamiltonian::polynomial(Poly2::new(vec![(0, 0, 5.0)]));
        assert_eq!(canonical_rhs(&constant, 0.3, -0.7).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn free_particle_flow_and_action_are_exact() {
        let free = NumericHamiltonian::free_particle(1.0).unwrap();
        let r = integrate_flow(&free, 0.0, 1.0, 0.0, 2.0, 1e-3, Integrator::Verlet).unwrap();
        assert!((r.q - 2.0).abs() < 1e-12);
        assert!((r.p - 1.0).abs() < 1e-12);
        // S = p²t/2m exactly for the linear flow (trapezoid of a constant).
        assert!((r.action - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sampled_trajectory_matches_endpoint_and_energy() {
        let harm = NumericHamiltonian::harmonic();
        let points =
            sample_trajectory(&harm, 1.0, 0.0, 0.0, 1.5, 1e-3, Integrator::Verlet).unwrap();
        let end = integrate_flow(&harm, 1.0, 0.0, 0.0, 1.5, 1e-3, Integrator::Verlet).unwrap();
        let last = points.last().unwrap();
        assert_eq!((last.q, last.p, last.s), (end.q, end.p, end.action));
        assert_eq!(points.len(), end.steps + 1);
        let e0 = harm.eval(1.0, 0.0);
        for point in &points {
            assert!(point.q.is_finite() && point.p.is_finite() && point.s.is_finite());
            assert!((harm.eval(point.q, point.p) - e0).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_span_is_identity_with_zero_action() {
        let harm = NumericHamiltonian::harmonic();
        let r = integrate_flow(&harm, 0.4, -0.6, 1.5, 1.5, 1e-2, Integrator::Verlet).unwrap();
        assert_eq!((r.q, r.p, r.action, r.steps), (0.4, -0.6, 0.0, 0));
    }

    #[test]
    fn harmonic_period_returns_home() {
        let harm = NumericHamiltonian::harmonic();
        let t = 2.0 * std::f64::consts::PI;
        let r = integrate_flow(&harm, 1.0, 0.0, 0.0, t, 1e-3, Integrator::Verlet).unwrap();
        assert!((r.q - 1.0).abs() < 1e-5, "q = {}", r.q);
        assert!(r.p.abs() < 1e-5, "p = {}", r.p);
        assert!(r.energy_drift < 1e-6);
    }

    /// Closed-form harmonic action for unit mass and frequency.
    fn harmonic_action(q_s: f64, p_s: f64, t: f64) -> f64 {
        0.5 * (p_s * p_s - q_s * q_s) * t.sin() * t.cos() - q_s * p_s * t.sin().powi(2)
    }

    #[test]
    fn harmonic_action_matches_closed_form() {
        let harm = NumericHamiltonian::harmonic();
        for &(q_s, p_s, t) in &[(1.0, 0.0, 0.7), (0.3, -1.2, 2.0), (0.0, 1.0, 0.25)] {
            for method in [Integrator::Verlet, Integrator::Rk4] {
                let r = integrate_flow(&harm, q_s, p_s, 0.0, t, 1e-4, method).unwrap();
                let expect = harmonic_action(q_s, p_s, t);
                assert!(
                    (r.action - expect).abs() < 1e-6,
                    "({q_s}, {p_s}, {t}) {method:?}: {} vs {expect}",
                    r.action
                );
            }
        }
    }

    #[test]
    fn inverse_flow_recovers_start() {
        let free = NumericHamiltonian::free_particle(1.0).unwrap();
        let (q_s, p_s) = inverse_flow(&free, 2.0, 1.0, 2.0, 0.0, 1e-3, Integrator::Verlet).unwrap();
        assert!((q_s - 0.0).abs() < 1e-12 && (p_s - 1.0).abs() < 1e-12);

        let harm = NumericHamiltonian::harmonic();
        let (q0, p0) = (0.8, -0.5);
        let fwd = integrate_flow(&harm, q0, p0, 0.0, 1.0, 1e-3, Integrator::Verlet).unwrap();
        let (qb, pb) =
            inverse_flow(&harm, fwd.q, fwd.p, 1.0, 0.0, 1e-3, Integrator::Verlet).unwrap();
        assert!((qb - q0).abs() < 1e-8 && (pb - p0).abs() < 1e-8);
    }

    #[test]
    fn inverse_flow_at_start_time_is_identity() {
        let harm = NumericHamiltonian::harmonic();
        let (q, p) = inverse_flow(&harm, 0.3, 0.9, 1.0, 1.0, 1e-3, Integrator::Verlet).unwrap();
        assert_eq!((q, p), (0.3, 0.9));
    }

    #[test]
    fn round_trip_with_quartic_potential() {
        let quartic =
            NumericHamiltonian::separable(1.0, Poly1::new(vec![0.0, 0.0, 0.0, 0.0, 0.25])).unwrap();
        let (q0, p0) = (0.9, 0.2);
        let fwd = integrate_flow(&quartic, q0, p0, 0.0, 3.0, 1e-3, Integrator::Verlet).unwrap();
        let (qb, pb) =
            inverse_flow(&quartic, fwd.q, fwd.p, 3.0, 0.0, 1e-3, Integrator::Verlet).unwrap();
        assert!(
            (qb - q0).abs() < 1e-8 && (pb - p0).abs() < 1e-8,
            "({qb}, {pb})"
        );
    }

    #[test]
    fn verlet_rejects_general_polynomial() {
        let skew = NumericHamiltonian::polynomial(Poly2::new(vec![(1, 1, 1.0)]));
        let err = integrate_flow(&skew, 0.1, 0.1, 0.0, 1.0, 1e-2, Integrator::Verlet).unwrap_err();
        assert!(matches!(err, DynamicsError::VerletNeedsSeparable));
        assert!(integrate_flow(&skew, 0.1, 0.1, 0.0, 1.0, 1e-2, Integrator::Rk4).is_ok());
    }

    #[test]
    fn bad_dt_is_rejected() {
        let harm = NumericHamiltonian::harmonic();
        let err = integrate_flow(&harm, 0.0, 1.0, 0.0, 1.0, -1.0, Integrator::Verlet).unwrap_err();
        assert!(matches!(err, DynamicsError::BadTimeStep(_)));
    }

    #[test]
    fn transported_coordinate_for_free_particle() {
        // G_s = q transported under free flow gives G(q, p, t) = q − p·t/m.
        let free = NumericHamiltonian::free_particle(1.0).unwrap();
        let grid = PhaseGrid::square(4.0, 65).unwrap();
        let g0 = MaskedField::full(grid, grid.sample(|q, _| q));
        let t = 0.5;
        let g = transported_function(
            &g0,
            &free,
            0.0,
            t,
            1e-3,
            Integrator::Verlet,
            Interpolation::Cubic,
        )
        .unwrap();
        for (idx, q, p) in grid.nodes() {
            if !g.valid[idx] {
                continue;
            }
            assert!(
                (g.values[idx] - (q - p * t)).abs() < 1e-10,
                "node ({q}, {p})"
            );
        }
        // Interior nodes stay valid; those backtracing outside are flagged.
        assert!(g.count_valid() > grid.len() / 2);
        assert!(g.count_valid() < grid.len());
    }

    #[test]
    fn transport_at_start_time_is_identity() {
        let free = NumericHamiltonian::free_particle(1.0).unwrap();
        let grid = PhaseGrid::square(2.0, 33).unwrap();
        let g0 = MaskedField::full(grid, grid.sample(|q, p| q * p));
        let g = transported_function(
            &g0,
            &free,
            0.0,
            0.0,
            1e-3,
            Integrator::Verlet,
            Interpolation::Cubic,
        )
        .unwrap();
        assert_eq!(g.values, g0.values);
    }

    #[test]
    fn energy_is_flow_invariant_under_transport() {
        let harm = NumericHamiltonian::harmonic();
        let grid = PhaseGrid::square(3.0, 65).unwrap();
        let g0 = MaskedField::full(grid, grid.sample(|q, p| harm.eval(q, p)));
        let g = transported_function(
            &g0,
            &harm,
            0.0,
            0.8,
            1e-3,
            Integrator::Verlet,
            Interpolation::Cubic,
        )
        .unwrap();
        for (idx, q, p) in grid.nodes() {
            if g.valid[idx] {
                assert!(
                    (g.values[idx] - harm.eval(q, p)).abs() < 1e-6,
                    "node ({q}, {p})"
                );
            }
        }
    }

    #[test]
    fn free_particle_action_field_matches_analytic() {
        let free = NumericHamiltonian::free_particle(1.0).unwrap();
        let grid = PhaseGrid::square(4.0, 129).unwrap();
        let t = 0.5;
        let s = action_field(
            &free,
            &grid,
            None,
            0.0,
            t,
            1e-3,
            Integrator::Verlet,
            Interpolation::Cubic,
        )
        .unwrap();
        let mut max_rel = 0.0f64;
        for (idx, _, p) in grid.nodes() {
            if !s.valid[idx] {
                continue;
            }
            let expect = 0.5 * p * p * t;
            let scale = expect.abs().max(1.0);
            max_rel = max_rel.max((s.values[idx] - expect).abs() / scale);
        }
        assert!(max_rel < 1e-4, "max relative error {max_rel}");
    }

    #[test]
    fn action_field_at_start_time_returns_initial() {
        let harm = NumericHamiltonian::harmonic();
        let grid = PhaseGrid::square(2.0, 17).unwrap();
        let s0 = MaskedField::full(grid, grid.sample(|q, p| q + 2.0 * p));
        let s = action_field(
            &harm,
            &grid,
            Some(&s0),
            0.0,
            0.0,
            1e-3,
            Integrator::Verlet,
            Interpolation::Cubic,
        )
        .unwrap();
        for idx in 0..grid.len() {
            assert!((s.values[idx] - s0.values[idx]).abs() < 1e-12);
        }
    }

    #[test]
    fn harmonic_action_field_matches_trajectory_oracle() {
        // Fine-step RK4 re-integration from the backtraced start point.
        let harm = NumericHamiltonian::harmonic();
        let grid = PhaseGrid::square(3.0, 65).unwrap();
        let t = std::f64::consts::FRAC_PI_2;
        let dt = 1e-3;
        let s = action_field(
            &harm,
            &grid,
            None,
            0.0,
            t,
            dt,
            Integrator::Verlet,
            Interpolation::Cubic,
        )
        .unwrap();
        let mut checked = 0;
        for (idx, q, p) in grid.nodes() {
            if !s.valid[idx] || (q.abs() > 1.5 || p.abs() > 1.5) {
                continue;
            }
            let (q_s, p_s) =
                inverse_flow(&harm, q, p, t, 0.0, dt / 100.0, Integrator::Rk4).unwrap();
            let oracle =
                integrate_flow(&harm, q_s, p_s, 0.0, t, dt / 100.0, Integrator::Rk4).unwrap();
            assert!(
                (s.values[idx] - oracle.action).abs() < 1e-4,
                "node ({q}, {p}): {} vs {}",
                s.values[idx],
                oracle.action
            );
            checked += 1;
        }
        assert!(checked > 100);
    }

    #[test]
    fn transported_function_residual_converges() {
        // A flow-invariant transported field satisfies the homogeneous
        // transport equation; the finite-difference residual of the numerical
        // solution shrinks at second order when grid and step are halved.
        let free = NumericHamiltonian::free_particle(1.0).unwrap();
        let gauss = |q: f64, p: f64| (-(q * q + p * p) / 2.0).exp();
        let residual_at = |n: usize, dt: f64| -> f64 {
            let grid = PhaseGrid::square(4.0, n).unwrap();
            let g0 = MaskedField::full(grid, grid.sample(gauss));
            let t = 0.25;
            let mut history = Vec::new();
            for time in [t - dt, t, t + dt] {
                let g = transported_function(
                    &g0,
                    &free,
                    0.0,
                    time,
                    dt,
                    Integrator::Verlet,
                    Interpolation::Cubic,
                )
                .unwrap();
                history.push((time, g));
            }
            let r = pde_residual(&history, &free, TransportSource::Zero).unwrap();
            let mut max = 0.0f64;
            for (idx, q, p) in r.grid.nodes() {
                if r.valid[idx] && q.abs() <= 2.0 && p.abs() <= 2.0 {
                    max = max.max(r.values[idx].abs());
                }
            }
            max
        };
        let coarse = residual_at(65, 4e-3);
        let fine = residual_at(129, 2e-3);
        let order = (coarse / fine).log2();
        assert!(
            order >= 1.9,
            "observed order {order} ({coarse:e} -> {fine:e})"
        );
    }

    #[test]
    fn residual_insufficient_history_errors() {
        let harm = NumericHamiltonian::harmonic();
        let grid = PhaseGrid::square(2.0, 17).unwrap();
        let f = MaskedField::full(grid, vec![0.0; grid.len()]);
        let err =
            pde_residual(&[(0.0, f.clone()), (0.1, f)], &harm, TransportSource::Zero).unwrap_err();
        assert!(matches!(err, DynamicsError::ShortHistory(2)));
    }

    #[test]
    fn residual_of_static_zero_state_is_zero() {
        let zero_h = NumericHamiltonian::polynomial(Poly2::new(vec![]));
        let grid = PhaseGrid::square(2.0, 17).unwrap();
        let f = || MaskedField::full(grid, vec![0.0; grid.len()]);
        let r = pde_residual(
            &[(0.0, f()), (0.1, f()), (0.2, f())],
            &zero_h,
            TransportSource::Lagrangian,
        )
        .unwrap();
        assert_eq!(r.max_abs_valid(), 0.0);
    }

    #[test]
    fn flow_jacobian_is_symplectic() {
        let harm = NumericHamiltonian::harmonic();
        let det =
            flow_jacobian_det(&harm, 0.7, -0.3, 0.0, 1.0, 1e-3, Integrator::Verlet, 1e-5).unwrap();
        assert!((det - 1.0).abs() < 1e-6, "det = {det}");

        let quartic =
            NumericHamiltonian::separable(1.0, Poly1::new(vec![0.0, 0.0, 0.0, 0.0, 0.25])).unwrap();
        let det2 = flow_jacobian_det(&quartic, 0.5, 0.4, 0.0, 1.0, 1e-3, Integrator::Verlet, 1e-5)
            .unwrap();
        assert!((det2 - 1.0).abs() < 1e-6, "det = {det2}");
    }
}
