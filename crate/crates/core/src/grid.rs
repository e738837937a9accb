//! Rectangular (q, p) grids and local interpolation.
//!
//! Fields are stored row-major over q then p: `index = iq·np + ip`. Points
//! outside the window interpolate to `None`; callers decide how to treat the
//! exit (the ensemble solvers substitute a vanishing amplitude there).

use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("window is empty or reversed: [{q_min}, {q_max}] × [{p_min}, {p_max}]")]
    BadWindow {
        q_min: f64,
        q_max: f64,
        p_min: f64,
        p_max: f64,
    },
    #[error("node counts must be at least 8, got {nq} × {np}")]
    TooFewNodes { nq: usize, np: usize },
}

/// Uniform rectangular grid over a phase-space window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nq: usize,
    pub np: usize,
}

impl PhaseGrid {
    pub fn new(
        q_min: f64,
        q_max: f64,
        p_min: f64,
        p_max: f64,
        nq: usize,
        np: usize,
    ) -> Result<Self, GridError> {
        if !(q_max > q_min && p_max > p_min) {
            return Err(GridError::BadWindow {
                q_min,
                q_max,
                p_min,
                p_max,
            });
        }
        if nq < 8 || np < 8 {
            return Err(GridError::TooFewNodes { nq, np });
        }
        Ok(PhaseGrid {
            q_min,
            q_max,
            p_min,
            p_max,
            nq,
            np,
        })
    }

    /// Square window [−w, w]² with n nodes per axis.
    pub fn square(half_width: f64, n: usize) -> Result<Self, GridError> {
        Self::new(-half_width, half_width, -half_width, half_width, n, n)
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / (self.nq - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.np - 1) as f64
    }

    pub fn q_at(&self, iq: usize) -> f64 {
        self.q_min + iq as f64 * self.dq()
    }

    pub fn p_at(&self, ip: usize) -> f64 {
        self.p_min + ip as f64 * self.dp()
    }

    pub fn len(&self) -> usize {
        self.nq * self.np
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, iq: usize, ip: usize) -> usize {
        debug_assert!(iq < self.nq && ip < self.np);
        iq * self.np + ip
    }

    pub fn contains(&self, q: f64, p: f64) -> bool {
        q >= self.q_min && q <= self.q_max && p >= self.p_min && p <= self.p_max
    }

    /// Iterate node coordinates in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        (0..self.len()).map(move |idx| {
            let iq = idx / self.np;
            let ip = idx % self.np;
            (idx, self.q_at(iq), self.p_at(ip))
        })
    }

    /// Evaluate a function on every node.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.nodes().map(|(_, q, p)| f(q, p)).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "q_min": self.q_min, "q_max": self.q_max,
            "p_min": self.p_min, "p_max": self.p_max,
            "nq": self.nq, "np": self.np,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Linear,
    Cubic,
}

/// Cubic Lagrange weights on a 4-node stencil for local coordinate s ∈ [0, 1]
/// between nodes 1 and 2.
fn cubic_weights(s: f64) -> [f64; 4] {
    [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ]
}

/// Resolve the 4-node stencil along one axis: base index of the stencil and
/// the local coordinate relative to its second node. Clamps the stencil at
/// the window edges (the query point itself must be inside).
fn cubic_stencil(x: f64, x_min: f64, dx: f64, n: usize) -> (usize, f64) {
    let u = (x - x_min) / dx;
    let cell = (u.floor() as isize).clamp(0, n as isize - 2);
    let base = (cell - 1).clamp(0, n as isize - 4) as usize;
    let s = u - (base + 1) as f64;
    (base, s)
}

/// Interpolate a grid field at (q, p); `None` outside the window.
pub fn interpolate(
    grid: &PhaseGrid,
    values: &[f64],
    q: f64,
    p: f64,
    method: Interpolation,
) -> Option<f64> {
    if !grid.contains(q, p) {
        return None;
    }
    match method {
        Interpolation::Linear => {
            let u = (q - grid.q_min) / grid.dq();
            let v = (p - grid.p_min) / grid.dp();
            let iq = (u.floor() as usize).min(grid.nq - 2);
            let ip = (v.floor() as usize).min(grid.np - 2);
            let su = u - iq as f64;
            let sv = v - ip as f64;
            let f = |a: usize, b: usize| values[grid.index(a, b)];
            Some(
                f(iq, ip) * (1.0 - su) * (1.0 - sv)
                    + f(iq + 1, ip) * su * (1.0 - sv)
                    + f(iq, ip + 1) * (1.0 - su) * sv
                    + f(iq + 1, ip + 1) * su * sv,
            )
        }
        Interpolation::Cubic => {
            let (bq, sq) = cubic_stencil(q, grid.q_min, grid.dq(), grid.nq);
            let (bp, sp) = cubic_stencil(p, grid.p_min, grid.dp(), grid.np);
            let wq = cubic_weights(sq);
            let wp = cubic_weights(sp);
            let mut acc = 0.0;
            for (a, &wa) in wq.iter().enumerate() {
                let mut row = 0.0;
                for (b, &wb) in wp.iter().enumerate() {
                    row += wb * values[grid.index(bq + a, bp + b)];
                }
                acc += wa * row;
            }
            Some(acc)
        }
    }
}

/// A grid field together with a validity mask (nodes whose construction
/// required data from outside the window are invalid).
#[derive(Debug, Clone)]
pub struct MaskedField {
    pub grid: PhaseGrid,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl MaskedField {
    pub fn full(grid: PhaseGrid, values: Vec<f64>) -> Self {
        let valid = vec![true; values.len()];
        MaskedField {
            grid,
            values,
            valid,
        }
    }

    /// Maximum |value| over valid nodes.
    pub fn max_abs_valid(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.valid)
            .filter(|&(_, &ok)| ok)
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max)
    }

    pub fn count_valid(&self) -> usize {
        self.valid.iter().filter(|&&ok| ok).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PhaseGrid {
        PhaseGrid::new(-2.0, 2.0, -1.0, 3.0, 17, 9).unwrap()
    }

    #[test]
    fn construction_validates_window_and_counts() {
        assert!(PhaseGrid::new(1.0, -1.0, 0.0, 1.0, 16, 16).is_err());
        assert!(PhaseGrid::new(-1.0, 1.0, -1.0, 1.0, 4, 16).is_err());
        let g = grid();
        assert!((g.dq() - 0.25).abs() < 1e-15);
        assert!((g.dp() - 0.5).abs() < 1e-15);
        assert_eq!(g.q_at(16), 2.0);
        assert_eq!(g.p_at(8), 3.0);
    }

    #[test]
    fn linear_reproduces_affine_fields() {
        let g = grid();
        let field = g.sample(|q, p| 2.0 * q - 3.0 * p + 1.0);
        let v = interpolate(&g, &field, 0.13, 0.77, Interpolation::Linear).unwrap();
        assert!((v - (2.0 * 0.13 - 3.0 * 0.77 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn cubic_reproduces_cubic_fields() {
        let g = grid();
        let f = |q: f64, p: f64| q * q * q - 2.0 * q * p * p + 0.5 * p - 4.0;
        let field = g.sample(f);
        for &(q, p) in &[(0.13, 0.77), (-1.9, 2.9), (1.99, -0.99), (0.0, 0.0)] {
            let v = interpolate(&g, &field, q, p, Interpolation::Cubic).unwrap();
            assert!(
                (v - f(q, p)).abs() < 1e-10,
                "at ({q}, {p}): {v} vs {}",
                f(q, p)
            );
        }
    }

    #[test]
    fn outside_window_is_none() {
        let g = grid();
        let field = g.sample(|_, _| 1.0);
        assert!(interpolate(&g, &field, 2.01, 0.0, Interpolation::Linear).is_none());
        assert!(interpolate(&g, &field, 0.0, -1.01, Interpolation::Cubic).is_none());
    }

    #[test]
    fn node_values_are_reproduced_exactly() {
        let g = grid();
        let field = g.sample(|q, p| (q + 0.3).sin() * (p - 0.1).cos());
        for (idx, q, p) in g.nodes() {
            for method in [Interpolation::Linear, Interpolation::Cubic] {
                let v = interpolate(&g, &field, q, p, method).unwrap();
                assert!((v - field[idx]).abs() < 1e-12);
            }
        }
    }
}
