//! Differential operators on configuration space.
//!
//! `ConfigOperator` is the image of the projection rules ∂/∂p_k → 0,
//! p_k → (ħ/i)∂/∂q_k applied to a normal-ordered phase-space operator:
//! a sparse map from ∂/∂q multi-indices to polynomial-in-q coefficients,
//! in canonical q-left, ∂/∂q-right order.

use super::operator::{fmt_derivs, DerivIndex, PhaseOperator};
use super::poly::{Monomial, PhasePolynomial};
use super::scalar::Scalar;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

/// Normal-ordered operator in q only: Σ coeff(q) · ∂^{a}/∂q^{a}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigOperator {
    dof: usize,
    terms: BTreeMap<Vec<u32>, PhasePolynomial>,
}

impl ConfigOperator {
    pub fn zero(dof: usize) -> Self {
        assert!(dof >= 1);
        ConfigOperator {
            dof,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(dof: usize) -> Self {
        Self::multiplication(&PhasePolynomial::one(dof))
    }

    /// Multiplication by a polynomial in q (momentum-free by invariant).
    pub fn multiplication(f: &PhasePolynomial) -> Self {
        let mut op = Self::zero(f.dof());
        op.add_term(vec![0; f.dof()], f.clone());
        op
    }

    /// The derivative ∂/∂q_k.
    pub fn dq(dof: usize, k: usize) -> Self {
        assert!(k < dof);
        let mut idx = vec![0; dof];
        idx[k] = 1;
        let mut op = Self::zero(dof);
        op.add_term(idx, PhasePolynomial::one(dof));
        op
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &PhasePolynomial)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, q_ord: Vec<u32>, coeff: PhasePolynomial) {
        assert_eq!(q_ord.len(), self.dof);
        assert!(
            coeff.is_momentum_free(),
            "config-operator coefficient contains momentum"
        );
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(q_ord) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get() + &coeff;
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
        for (idx, coeff) in &self.terms {
            out.add_term(idx.clone(), coeff.scale(c));
        }
        out
    }

    /// Project a normal-ordered phase-space operator to configuration space.
    ///
    /// Terms carrying any ∂/∂p factor are dropped; in surviving terms each
    /// coefficient monomial q^α·p^β keeps q^α as left multiplication while p^β
    /// becomes ((ħ/i)∂/∂q)^β merged with the existing ∂/∂q factors.
    pub fn project(op: &PhaseOperator) -> Self {
        let dof = op.dof();
        let mut out = Self::zero(dof);
        for (idx, coeff) in op.terms() {
            if idx.has_p_derivative() {
                continue;
            }
            for (m, c) in coeff.terms() {
                let p_total: u32 = m.p_exp.iter().sum();
                let mut scalar = c.clone();
                for _ in 0..p_total {
                    scalar = &scalar * &Scalar::hbar_over_i();
                }
                let q_ord: Vec<u32> = idx.q_ord.iter().zip(&m.p_exp).map(|(a, b)| a + b).collect();
                let q_mono = Monomial {
                    q_exp: m.q_exp.clone(),
                    p_exp: vec![0; dof],
                };
                out.add_term(
                    q_ord,
                    PhasePolynomial::monomial(dof, q_mono.q_exp, q_mono.p_exp, scalar),
                );
            }
        }
        out
    }

    /// Apply to a polynomial in q.
    pub fn apply(&self, f: &PhasePolynomial) -> PhasePolynomial {
        assert_eq!(self.dof, f.dof());
        let zeros = vec![0u32; self.dof];
        let mut out = PhasePolynomial::zero(self.dof);
        for (idx, coeff) in &self.terms {
            let df = f.deriv_multi(idx, &zeros);
            out = &out + &(coeff * &df);
        }
        out
    }

    /// Normal-ordered composition U∘V via the Leibniz rule in q.
    pub fn compose(&self, rhs: &ConfigOperator) -> ConfigOperator {
        assert_eq!(self.dof, rhs.dof, "operator dof mismatch");
        let dof = self.dof;
        // Reuse the phase-space engine: embed with empty p-orders.
        let embed = |op: &ConfigOperator| {
            let mut ph = PhaseOperator::zero(dof);
            for (q_ord, coeff) in &op.terms {
                ph.add_term(
                    DerivIndex {
                        q_ord: q_ord.clone(),
                        p_ord: vec![0; dof],
                    },
                    coeff.clone(),
                );
            }
            ph
        };
        let composed = embed(self).compose(&embed(rhs));
        let mut out = ConfigOperator::zero(dof);
        for (idx, coeff) in composed.terms() {
            debug_assert!(!idx.has_p_derivative());
            out.add_term(idx.q_ord.clone(), coeff.clone());
        }
        out
    }

    /// Commutator [U, V] = U∘V − V∘U.
    pub fn commutator(&self, rhs: &ConfigOperator) -> ConfigOperator {
        &self.compose(rhs) - &rhs.compose(self)
    }

    /// Multiply every coefficient by −i/ħ; fails when a coefficient has no ħ
    /// factor to cancel.
    pub fn scale_neg_i_over_hbar(&self) -> Option<ConfigOperator> {
        let mut out = Self::zero(self.dof);
        for (idx, coeff) in &self.terms {
            let mut scaled = PhasePolynomial::zero(self.dof);
            for (m, c) in coeff.terms() {
                let c = c.div_hbar()?;
                let c = -&c.mul_i();
                scaled.add_term(m.clone(), c);
            }
            out.add_term(idx.clone(), scaled);
        }
        Some(out)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "dof": self.dof,
            "terms": self.terms.iter().map(|(idx, coeff)| json!({
                "dq": idx, "coeff": coeff.to_json(),
            })).collect::<Vec<_>>(),
        })
    }
}

fn assert_same_dof(a: &ConfigOperator, b: &ConfigOperator) {
    assert_eq!(
        a.dof, b.dof,
        "operator dof mismatch: {} vs {}",
        a.dof, b.dof
    );
}

impl Add for &ConfigOperator {
    type Output = ConfigOperator;
    fn add(self, rhs: &ConfigOperator) -> ConfigOperator {
        assert_same_dof(self, rhs);
        let mut out = self.clone();
        for (idx, coeff) in &rhs.terms {
            out.add_term(idx.clone(), coeff.clone());
        }
        out
    }
}

impl Sub for &ConfigOperator {
    type Output = ConfigOperator;
    fn sub(self, rhs: &ConfigOperator) -> ConfigOperator {
        self + &(-rhs)
    }
}

impl Neg for &ConfigOperator {
    type Output = ConfigOperator;
    fn neg(self) -> ConfigOperator {
        ConfigOperator {
            dof: self.dof,
            terms: self.terms.iter().map(|(i, c)| (i.clone(), -c)).collect(),
        }
    }
}

impl fmt::Display for ConfigOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        for (idx, coeff) in &self.terms {
            let derivs = fmt_derivs(
                "q",
                None,
                &DerivIndex {
                    q_ord: idx.clone(),
                    p_ord: vec![0; self.dof],
                },
            );
            let coeff_str = coeff.to_string();
            let coeff_str = if coeff_str.contains(" + ") {
                format!("({coeff_str})")
            } else {
                coeff_str
            };
            if derivs.is_empty() {
                parts.push(coeff_str);
            } else if coeff_str == "1" {
                parts.push(derivs.join("*"));
            } else {
                parts.push(format!("{}*{}", coeff_str, derivs.join("*")));
            }
        }
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn momentum_square_operator() -> ConfigOperator {
        // ((ħ/i)∂/∂q)² = −ħ²∂²/∂q²
        let minus_h2 = -&(&Scalar::hbar() * &Scalar::hbar());
        let mut op = ConfigOperator::zero(1);
        op.add_term(vec![2], PhasePolynomial::constant(1, minus_h2));
        op
    }

    #[test]
    fn projection_drops_p_derivatives() {
        // q − (ħ/i)∂/∂p projects to multiplication by q.
        let q = PhasePolynomial::q_var(1, 0);
        let mut op = PhaseOperator::multiplication(&q);
        let mut idx = DerivIndex::none(1);
        idx.p_ord[0] = 1;
        op.add_term(idx, PhasePolynomial::constant(1, -&Scalar::hbar_over_i()));
        let projected = ConfigOperator::project(&op);
        assert_eq!(projected, ConfigOperator::multiplication(&q));
    }

    #[test]
    fn projection_rewrites_momentum_powers() {
        // Multiplication by p² projects to ((ħ/i)∂/∂q)².
        let p = PhasePolynomial::p_var(1, 0);
        let projected = ConfigOperator::project(&PhaseOperator::multiplication(&p.pow(2)));
        assert_eq!(projected, momentum_square_operator());
    }

    #[test]
    fn projection_merges_with_existing_derivatives() {
        // p·∂/∂q projects to (ħ/i)∂²/∂q².
        let p = PhasePolynomial::p_var(1, 0);
        let mut op = PhaseOperator::zero(1);
        let mut idx = DerivIndex::none(1);
        idx.q_ord[0] = 1;
        op.add_term(idx, p);
        let projected = ConfigOperator::project(&op);
        let mut expect = ConfigOperator::zero(1);
        expect.add_term(vec![2], PhasePolynomial::constant(1, Scalar::hbar_over_i()));
        assert_eq!(projected, expect);
    }

    #[test]
    fn canonical_commutator_in_q_representation() {
        // [q, (ħ/i)∂/∂q] = −(ħ/i)
        let q_hat = ConfigOperator::multiplication(&PhasePolynomial::q_var(1, 0));
        let p_hat = ConfigOperator::dq(1, 0).scale(&Scalar::hbar_over_i());
        let commutator = q_hat.commutator(&p_hat);
        let expect = ConfigOperator::identity(1).scale(&-&Scalar::hbar_over_i());
        assert_eq!(commutator, expect);
    }

    #[test]
    fn neg_i_over_hbar_cancels_single_power() {
        // −(i/ħ)·(iħ·1̂) = 1̂, and the scaling refuses ħ-free coefficients.
        let op = ConfigOperator::identity(1).scale(&-&Scalar::hbar_over_i());
        let reduced = op.scale_neg_i_over_hbar().unwrap();
        assert_eq!(reduced, ConfigOperator::identity(1));
        assert!(ConfigOperator::identity(1)
            .scale_neg_i_over_hbar()
            .is_none());
    }
}
