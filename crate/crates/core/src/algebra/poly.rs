//! Exact multivariate polynomials in the canonical variables (q₁..qₙ, p₁..pₙ).
//!
//! `PhasePolynomial` is a sparse map from exponent vectors to [`Scalar`]
//! coefficients, kept in canonical form (no zero coefficients). It carries the
//! observables of the theory: Hamiltonians, brackets, Lagrangian remainders.

use super::scalar::Scalar;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Exponent vector of one monomial: `q^q_exp · p^p_exp`, one entry per dof.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Monomial {
    pub q_exp: Vec<u32>,
    pub p_exp: Vec<u32>,
}

impl Monomial {
    fn constant(dof: usize) -> Self {
        Monomial {
            q_exp: vec![0; dof],
            p_exp: vec![0; dof],
        }
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            q_exp: self
                .q_exp
                .iter()
                .zip(&other.q_exp)
                .map(|(a, b)| a + b)
                .collect(),
            p_exp: self
                .p_exp
                .iter()
                .zip(&other.p_exp)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn total_degree(&self) -> u32 {
        self.q_exp.iter().sum::<u32>() + self.p_exp.iter().sum::<u32>()
    }
}

/// Sparse exact polynomial over phase space with `dof` degrees of freedom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhasePolynomial {
    dof: usize,
    terms: BTreeMap<Monomial, Scalar>,
}

impl PhasePolynomial {
    pub fn zero(dof: usize) -> Self {
        assert!(dof >= 1, "dof must be at least 1");
        PhasePolynomial {
            dof,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dof: usize, c: Scalar) -> Self {
        let mut poly = Self::zero(dof);
        poly.add_term(Monomial::constant(dof), c);
        poly
    }

    pub fn one(dof: usize) -> Self {
        Self::constant(dof, Scalar::one())
    }

    /// The coordinate observable q_k (0-based index).
    pub fn q_var(dof: usize, k: usize) -> Self {
        assert!(k < dof);
        let mut m = Monomial::constant(dof);
        m.q_exp[k] = 1;
        let mut poly = Self::zero(dof);
        poly.add_term(m, Scalar::one());
        poly
    }

    /// The momentum observable p_k (0-based index).
    pub fn p_var(dof: usize, k: usize) -> Self {
        assert!(k < dof);
        let mut m = Monomial::constant(dof);
        m.p_exp[k] = 1;
        let mut poly = Self::zero(dof);
        poly.add_term(m, Scalar::one());
        poly
    }

    /// Single monomial `c · q^q_exp · p^p_exp`.
    pub fn monomial(dof: usize, q_exp: Vec<u32>, p_exp: Vec<u32>, c: Scalar) -> Self {
        assert_eq!(q_exp.len(), dof);
        assert_eq!(p_exp.len(), dof);
        let mut poly = Self::zero(dof);
        poly.add_term(Monomial { q_exp, p_exp }, c);
        poly
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(Monomial::total_degree)
            .max()
            .unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get() + &c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        let mut out = Self::zero(self.dof);
        for (m, w) in &self.terms {
            out.add_term(m.clone(), w * c);
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::one(self.dof);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Partial derivative ∂/∂q_k.
    pub fn dq(&self, k: usize) -> Self {
        assert!(k < self.dof);
        let mut out = Self::zero(self.dof);
        for (m, c) in &self.terms {
            let e = m.q_exp[k];
            if e == 0 {
                continue;
            }
            let mut lowered = m.clone();
            lowered.q_exp[k] = e - 1;
            out.add_term(lowered, c * &Scalar::int(e as i64));
        }
        out
    }

    /// Partial derivative ∂/∂p_k.
    pub fn dp(&self, k: usize) -> Self {
        assert!(k < self.dof);
        let mut out = Self::zero(self.dof);
        for (m, c) in &self.terms {
            let e = m.p_exp[k];
            if e == 0 {
                continue;
            }
            let mut lowered = m.clone();
            lowered.p_exp[k] = e - 1;
            out.add_term(lowered, c * &Scalar::int(e as i64));
        }
        out
    }

    /// Iterated derivative ∂^{a}/∂q^{a} ∂^{b}/∂p^{b} for multi-indices a, b.
    pub fn deriv_multi(&self, q_orders: &[u32], p_orders: &[u32]) -> Self {
        let mut out = self.clone();
        for (k, &n) in q_orders.iter().enumerate() {
            for _ in 0..n {
                out = out.dq(k);
            }
        }
        for (k, &n) in p_orders.iter().enumerate() {
            for _ in 0..n {
                out = out.dp(k);
            }
        }
        out
    }

    /// True when no monomial contains a momentum factor.
    pub fn is_momentum_free(&self) -> bool {
        self.terms.keys().all(|m| m.p_exp.iter().all(|&e| e == 0))
    }

    /// Evaluate numerically at (q, p) with a numeric ħ; returns (re, im).
    pub fn eval_f64(&self, q: &[f64], p: &[f64], hbar: f64) -> (f64, f64) {
        assert_eq!(q.len(), self.dof);
        assert_eq!(p.len(), self.dof);
        let mut re = 0.0;
        let mut im = 0.0;
        for (m, c) in &self.terms {
            let mut w = 1.0;
            for (k, &e) in m.q_exp.iter().enumerate() {
                w *= q[k].powi(e as i32);
            }
            for (k, &e) in m.p_exp.iter().enumerate() {
                w *= p[k].powi(e as i32);
            }
            let (cr, ci) = c.eval_f64(hbar);
            re += w * cr;
            im += w * ci;
        }
        (re, im)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "dof": self.dof,
            "terms": self.terms.iter().map(|(m, c)| json!({
                "q": m.q_exp, "p": m.p_exp, "coeff": c.to_json(),
            })).collect::<Vec<_>>(),
        })
    }
}

fn assert_same_dof(a: &PhasePolynomial, b: &PhasePolynomial) {
    assert_eq!(
        a.dof, b.dof,
        "polynomial dof mismatch: {} vs {}",
        a.dof, b.dof
    );
}

impl Add for &PhasePolynomial {
    type Output = PhasePolynomial;
    fn add(self, rhs: &PhasePolynomial) -> PhasePolynomial {
        assert_same_dof(self, rhs);
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &PhasePolynomial {
    type Output = PhasePolynomial;
    fn sub(self, rhs: &PhasePolynomial) -> PhasePolynomial {
        self + &(-rhs)
    }
}

impl Neg for &PhasePolynomial {
    type Output = PhasePolynomial;
    fn neg(self) -> PhasePolynomial {
        PhasePolynomial {
            dof: self.dof,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Mul for &PhasePolynomial {
    type Output = PhasePolynomial;
    fn mul(self, rhs: &PhasePolynomial) -> PhasePolynomial {
        assert_same_dof(self, rhs);
        let mut out = PhasePolynomial::zero(self.dof);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

pub(crate) fn fmt_vars(prefix: &str, exps: &[u32]) -> Vec<String> {
    exps.iter()
        .enumerate()
        .filter(|&(_, &e)| e > 0)
        .map(|(k, &e)| {
            if e == 1 {
                format!("{}{}", prefix, k + 1)
            } else {
                format!("{}{}^{}", prefix, k + 1, e)
            }
        })
        .collect()
}

impl fmt::Display for PhasePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        for (m, c) in &self.terms {
            let mut factors = fmt_vars("q", &m.q_exp);
            factors.extend(fmt_vars("p", &m.p_exp));
            let coeff = c.to_string();
            let coeff = if coeff.contains('+') {
                format!("({coeff})")
            } else {
                coeff
            };
            if factors.is_empty() {
                parts.push(coeff);
            } else if coeff == "1" {
                parts.push(factors.join("*"));
            } else {
                parts.push(format!("{}*{}", coeff, factors.join("*")));
            }
        }
        write!(f, "{}", parts.join(" + "))
    }
}
