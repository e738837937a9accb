//! Normal-ordered differential operators on phase space.
//!
//! A `PhaseOperator` is a sparse map from derivative multi-indices to
//! [`PhasePolynomial`] coefficients, with the convention that every
//! multiplication operator acts to the left of every derivative. Composition
//! uses the generalized Leibniz rule, so products and commutators stay in
//! canonical normal order and equality is decidable by map comparison.

use super::poly::PhasePolynomial;
use super::scalar::Scalar;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

/// Derivative multi-index: orders of ∂/∂q_k and ∂/∂p_k per dof.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct DerivIndex {
    pub q_ord: Vec<u32>,
    pub p_ord: Vec<u32>,
}

impl DerivIndex {
    pub fn none(dof: usize) -> Self {
        DerivIndex {
            q_ord: vec![0; dof],
            p_ord: vec![0; dof],
        }
    }

    pub fn is_multiplicative(&self) -> bool {
        self.q_ord.iter().all(|&e| e == 0) && self.p_ord.iter().all(|&e| e == 0)
    }

    pub fn has_p_derivative(&self) -> bool {
        self.p_ord.iter().any(|&e| e > 0)
    }

    fn add(&self, other: &DerivIndex) -> DerivIndex {
        DerivIndex {
            q_ord: self
                .q_ord
                .iter()
                .zip(&other.q_ord)
                .map(|(a, b)| a + b)
                .collect(),
            p_ord: self
                .p_ord
                .iter()
                .zip(&other.p_ord)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

/// Normal-ordered operator: Σ coeff(q,p) · ∂^{a}/∂q^{a} ∂^{b}/∂p^{b}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseOperator {
    dof: usize,
    terms: BTreeMap<DerivIndex, PhasePolynomial>,
}

fn binomial(n: u32, k: u32) -> i64 {
    let mut acc: i64 = 1;
    for j in 0..k {
        acc = acc * (n - j) as i64 / (j + 1) as i64;
    }
    acc
}

impl PhaseOperator {
    pub fn zero(dof: usize) -> Self {
        assert!(dof >= 1);
        PhaseOperator {
            dof,
            terms: BTreeMap::new(),
        }
    }

    /// The identity operator 1̂.
    pub fn identity(dof: usize) -> Self {
        Self::multiplication(&PhasePolynomial::one(dof))
    }

    /// Multiplication by a polynomial.
    pub fn multiplication(f: &PhasePolynomial) -> Self {
        let mut op = Self::zero(f.dof());
        op.add_term(DerivIndex::none(f.dof()), f.clone());
        op
    }

    /// The derivative ∂/∂q_k.
    pub fn dq(dof: usize, k: usize) -> Self {
        assert!(k < dof);
        let mut idx = DerivIndex::none(dof);
        idx.q_ord[k] = 1;
        let mut op = Self::zero(dof);
        op.add_term(idx, PhasePolynomial::one(dof));
        op
    }

    /// The derivative ∂/∂p_k.
    pub fn dp(dof: usize, k: usize) -> Self {
        assert!(k < dof);
        let mut idx = DerivIndex::none(dof);
        idx.p_ord[k] = 1;
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

    pub fn terms(&self) -> impl Iterator<Item = (&DerivIndex, &PhasePolynomial)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, idx: DerivIndex, coeff: PhasePolynomial) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(idx) {
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

    /// Apply the operator to a polynomial.
    pub fn apply(&self, f: &PhasePolynomial) -> PhasePolynomial {
        assert_eq!(self.dof, f.dof(), "operator/polynomial dof mismatch");
        let mut out = PhasePolynomial::zero(self.dof);
        for (idx, coeff) in &self.terms {
            let df = f.deriv_multi(&idx.q_ord, &idx.p_ord);
            out = &out + &(coeff * &df);
        }
        out
    }

    /// Normal-ordered composition U∘V.
    ///
    /// For each pair of terms c_U·∂^{a} and c_V·∂^{b}, the derivatives ∂^{a}
    /// distribute over c_V by the Leibniz rule: part of the order differentiates
    /// the coefficient, the rest passes through and joins ∂^{b}.
    pub fn compose(&self, rhs: &PhaseOperator) -> PhaseOperator {
        assert_eq!(self.dof, rhs.dof, "operator dof mismatch");
        let dof = self.dof;
        let mut out = PhaseOperator::zero(dof);
        for (du, cu) in &self.terms {
            for (dv, cv) in &rhs.terms {
                for (split, weight) in leibniz_splits(du) {
                    // `split` differentiates cv; the remainder passes through.
                    let dcv = cv.deriv_multi(&split.q_ord, &split.p_ord);
                    if dcv.is_zero() {
                        continue;
                    }
                    let passed = DerivIndex {
                        q_ord: du
                            .q_ord
                            .iter()
                            .zip(&split.q_ord)
                            .map(|(a, j)| a - j)
                            .collect(),
                        p_ord: du
                            .p_ord
                            .iter()
                            .zip(&split.p_ord)
                            .map(|(a, j)| a - j)
                            .collect(),
                    };
                    let coeff = (cu * &dcv).scale(&Scalar::int(weight));
                    out.add_term(passed.add(dv), coeff);
                }
            }
        }
        out
    }

    /// Commutator [U, V] = U∘V − V∘U.
    pub fn commutator(&self, rhs: &PhaseOperator) -> PhaseOperator {
        &self.compose(rhs) - &rhs.compose(self)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "dof": self.dof,
            "terms": self.terms.iter().map(|(idx, coeff)| json!({
                "dq": idx.q_ord, "dp": idx.p_ord, "coeff": coeff.to_json(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// All ways to split a derivative multi-index across the Leibniz rule,
/// together with the product of binomial weights.
fn leibniz_splits(idx: &DerivIndex) -> Vec<(DerivIndex, i64)> {
    let mut splits = vec![(
        DerivIndex {
            q_ord: Vec::new(),
            p_ord: Vec::new(),
        },
        1i64,
    )];
    for &order in &idx.q_ord {
        let mut next = Vec::with_capacity(splits.len() * (order as usize + 1));
        for (partial, w) in &splits {
            for j in 0..=order {
                let mut ext = partial.clone();
                ext.q_ord.push(j);
                next.push((ext, w * binomial(order, j)));
            }
        }
        splits = next;
    }
    for &order in &idx.p_ord {
        let mut next = Vec::with_capacity(splits.len() * (order as usize + 1));
        for (partial, w) in &splits {
            for j in 0..=order {
                let mut ext = partial.clone();
                ext.p_ord.push(j);
                next.push((ext, w * binomial(order, j)));
            }
        }
        splits = next;
    }
    splits
}

fn assert_same_dof(a: &PhaseOperator, b: &PhaseOperator) {
    assert_eq!(
        a.dof, b.dof,
        "operator dof mismatch: {} vs {}",
        a.dof, b.dof
    );
}

impl Add for &PhaseOperator {
    type Output = PhaseOperator;
    fn add(self, rhs: &PhaseOperator) -> PhaseOperator {
        assert_same_dof(self, rhs);
        let mut out = self.clone();
        for (idx, coeff) in &rhs.terms {
            out.add_term(idx.clone(), coeff.clone());
        }
        out
    }
}

impl Sub for &PhaseOperator {
    type Output = PhaseOperator;
    fn sub(self, rhs: &PhaseOperator) -> PhaseOperator {
        self + &(-rhs)
    }
}

impl Neg for &PhaseOperator {
    type Output = PhaseOperator;
    fn neg(self) -> PhaseOperator {
        PhaseOperator {
            dof: self.dof,
            terms: self.terms.iter().map(|(i, c)| (i.clone(), -c)).collect(),
        }
    }
}

pub(crate) fn fmt_derivs(q_names: &str, p_names: Option<&str>, idx: &DerivIndex) -> Vec<String> {
    let mut parts = Vec::new();
    let one_axis = |prefix: &str, orders: &[u32], parts: &mut Vec<String>| {
        for (k, &e) in orders.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(format!("d/d{}{}", prefix, k + 1)),
                _ => parts.push(format!("d{e}/d{}{}^{e}", prefix, k + 1)),
            }
        }
    };
    one_axis(q_names, &idx.q_ord, &mut parts);
    if let Some(p) = p_names {
        one_axis(p, &idx.p_ord, &mut parts);
    }
    parts
}

impl fmt::Display for PhaseOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        for (idx, coeff) in &self.terms {
            let derivs = fmt_derivs("q", Some("p"), idx);
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
