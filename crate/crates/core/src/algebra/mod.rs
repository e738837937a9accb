//! Exact symbolic engine for phase-space observables and their operators.
//!
//! The central construction assigns to every polynomial observable A(q,p) a
//! normal-ordered phase-space operator
//!
//! ```text
//! L_A = -(hbar/i)·D_A - Lbar_A,   D_A = Σ_k (∂A/∂q_k ∂/∂p_k − ∂A/∂p_k ∂/∂q_k),
//! Lbar_A = Σ_k p_k ∂A/∂p_k − A,
//! ```
//!
//! and then projects it to a configuration-space operator by the rules
//! ∂/∂p_k → 0 and p_k → (ħ/i)∂/∂q_k. All arithmetic is exact: coefficients
//! are complex rationals with formal ħ powers, so every identity checked here
//! is decided, not approximated.

mod config_op;
mod operator;
mod poly;
mod sample;
mod scalar;
mod tables;

pub use config_op::ConfigOperator;
pub use operator::{DerivIndex, PhaseOperator};
pub use poly::{Monomial, PhasePolynomial};
pub use sample::random_polynomial;
pub use scalar::{ComplexRatio, Scalar};
pub use tables::{
    groenewold_demo, observable_set, verify_tables, GroenewoldReport, PairOutcome, TableEntry,
    TablesReport,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("degrees of freedom mismatch: {left} vs {right}")]
    DofMismatch { left: usize, right: usize },
    #[error("coefficient has no ħ factor to cancel in −(i/ħ) scaling")]
    HbarDivision,
}

fn check_dof(a: usize, b: usize) -> Result<(), AlgebraError> {
    if a == b {
        Ok(())
    } else {
        Err(AlgebraError::DofMismatch { left: a, right: b })
    }
}

/// Poisson bracket {A, B} = Σ_k (∂A/∂q_k ∂B/∂p_k − ∂A/∂p_k ∂B/∂q_k).
pub fn poisson_bracket(
    a: &PhasePolynomial,
    b: &PhasePolynomial,
) -> Result<PhasePolynomial, AlgebraError> {
    check_dof(a.dof(), b.dof())?;
    let mut out = PhasePolynomial::zero(a.dof());
    for k in 0..a.dof() {
        out = &out + &(&(&a.dq(k) * &b.dp(k)) - &(&a.dp(k) * &b.dq(k)));
    }
    Ok(out)
}

/// Lie derivative D_A = Σ_k (∂A/∂q_k · ∂/∂p_k − ∂A/∂p_k · ∂/∂q_k), so that
/// D_A B = {A, B}.
pub fn lie_derivative(a: &PhasePolynomial) -> PhaseOperator {
    let dof = a.dof();
    let mut op = PhaseOperator::zero(dof);
    for k in 0..dof {
        let mut dp_idx = DerivIndex::none(dof);
        dp_idx.p_ord[k] = 1;
        op.add_term(dp_idx, a.dq(k));
        let mut dq_idx = DerivIndex::none(dof);
        dq_idx.q_ord[k] = 1;
        op.add_term(dq_idx, -&a.dp(k));
    }
    op
}

/// Lagrangian remainder Lbar_A = Σ_k p_k ∂A/∂p_k − A. For a Hamiltonian this
/// is the classical Lagrangian expressed in phase-space coordinates.
pub fn lagrangian_remainder(a: &PhasePolynomial) -> PhasePolynomial {
    let dof = a.dof();
    let mut out = -a;
    for k in 0..dof {
        out = &out + &(&PhasePolynomial::p_var(dof, k) * &a.dp(k));
    }
    out
}

/// Prequantization operator L_A = −(ħ/i)·D_A − Lbar_A, normal-ordered.
pub fn prequantize(a: &PhasePolynomial) -> PhaseOperator {
    let lie = lie_derivative(a).scale(&-&Scalar::hbar_over_i());
    let remainder = PhaseOperator::multiplication(&lagrangian_remainder(a));
    &lie - &remainder
}

/// Normal-ordered operator composition U∘V.
pub fn compose(u: &PhaseOperator, v: &PhaseOperator) -> Result<PhaseOperator, AlgebraError> {
    check_dof(u.dof(), v.dof())?;
    Ok(u.compose(v))
}

/// Operator commutator [U, V] = U∘V − V∘U.
pub fn commutator(u: &PhaseOperator, v: &PhaseOperator) -> Result<PhaseOperator, AlgebraError> {
    check_dof(u.dof(), v.dof())?;
    Ok(u.commutator(v))
}

/// Residual of the bracket-preservation law for prequantization:
/// [L_A, L_B] + (ħ/i)·L_{{A,B}}. Zero for every pair of polynomials.
pub fn check_bracket_preservation(
    a: &PhasePolynomial,
    b: &PhasePolynomial,
) -> Result<PhaseOperator, AlgebraError> {
    check_dof(a.dof(), b.dof())?;
    let lhs = prequantize(a).commutator(&prequantize(b));
    let bracket = poisson_bracket(a, b)?;
    let rhs = prequantize(&bracket).scale(&Scalar::hbar_over_i());
    Ok(&lhs + &rhs)
}

/// Residual of the multiplier condition with M[X] = −Lbar_X:
/// {A, M[B]} − {B, M[A]} − M[{A,B}]. Zero for every pair of polynomials.
pub fn check_m_condition(
    a: &PhasePolynomial,
    b: &PhasePolynomial,
) -> Result<PhasePolynomial, AlgebraError> {
    check_dof(a.dof(), b.dof())?;
    let m = |x: &PhasePolynomial| -&lagrangian_remainder(x);
    let term1 = poisson_bracket(a, &m(b))?;
    let term2 = poisson_bracket(b, &m(a))?;
    let term3 = m(&poisson_bracket(a, b)?);
    Ok(&(&term1 - &term2) - &term3)
}

/// Projection of a phase-space operator by ∂/∂p_k → 0, p_k → (ħ/i)∂/∂q_k.
pub fn project(op: &PhaseOperator) -> ConfigOperator {
    ConfigOperator::project(op)
}

/// Full assignment A ↦ project(L_A): the configuration-space operator of an
/// observable. For H = p²/2m + V(q) this is the standard Hamiltonian operator
/// −(ħ²/2m)∂²/∂q² + V(q).
pub fn quantize(a: &PhasePolynomial) -> ConfigOperator {
    project(&prequantize(a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(dof: usize, k: usize) -> PhasePolynomial {
        PhasePolynomial::q_var(dof, k)
    }

    fn p(dof: usize, k: usize) -> PhasePolynomial {
        PhasePolynomial::p_var(dof, k)
    }

    #[test]
    fn canonical_bracket_is_kronecker_delta() {
        for n in 1..=3 {
            for i in 0..n {
                for k in 0..n {
                    let bracket = poisson_bracket(&q(n, i), &p(n, k)).unwrap();
                    let expect = if i == k {
                        PhasePolynomial::one(n)
                    } else {
                        PhasePolynomial::zero(n)
                    };
                    assert_eq!(bracket, expect, "{{q_{i}, p_{k}}} at n={n}");
                }
            }
        }
    }

    #[test]
    fn bracket_with_self_vanishes() {
        let a = &(&q(2, 0).pow(2) * &p(2, 1)) + &p(2, 0);
        assert!(poisson_bracket(&a, &a).unwrap().is_zero());
    }

    #[test]
    fn bracket_of_cube_with_momentum() {
        // {q³, p} = 3q² by independent symbolic differentiation.
        let lhs = poisson_bracket(&q(1, 0).pow(3), &p(1, 0)).unwrap();
        let oracle = q(1, 0).pow(3).dq(0);
        assert_eq!(lhs, oracle);
        assert_eq!(lhs, q(1, 0).pow(2).scale(&Scalar::int(3)));
    }

    #[test]
    fn bracket_rejects_dof_mismatch() {
        let err = poisson_bracket(&q(1, 0), &q(2, 0)).unwrap_err();
        assert_eq!(err, AlgebraError::DofMismatch { left: 1, right: 2 });
    }

    #[test]
    fn operator_ops_reject_dof_mismatch() {
        let u = lie_derivative(&q(1, 0));
        let v = lie_derivative(&q(2, 1));
        assert_eq!(
            compose(&u, &v).unwrap_err(),
            AlgebraError::DofMismatch { left: 1, right: 2 }
        );
        assert_eq!(
            commutator(&u, &v).unwrap_err(),
            AlgebraError::DofMismatch { left: 1, right: 2 }
        );
    }

    #[test]
    fn rendering_is_stable_text_and_json() {
        // Kinetic observable t = p²/2 quantizes to −(ħ²/2)∂²/∂q²; both the
        // plain-text and JSON renderings are frozen golden values.
        let t = p(1, 0).pow(2).scale(&Scalar::ratio(1, 2));
        let t_hat = quantize(&t);
        assert_eq!(t_hat.to_string(), "-1/2*hbar^2*d2/dq1^2");
        let expected_json = serde_json::json!({
            "dof": 1,
            "terms": [{
                "dq": [2],
                "coeff": {
                    "dof": 1,
                    "terms": [{
                        "q": [0], "p": [0],
                        "coeff": [{ "hbar": 2, "re": "-1/2", "im": "0" }],
                    }],
                },
            }],
        });
        assert_eq!(t_hat.to_json(), expected_json);

        // L for l₃ = q₁p₂ − q₂p₁ is iħ(p₂∂/∂p₁ − p₁∂/∂p₂ + q₂∂/∂q₁ − q₁∂/∂q₂),
        // rendered in canonical term order.
        let l3 = &(&q(3, 0) * &p(3, 1)) - &(&q(3, 1) * &p(3, 0));
        let pre = prequantize(&l3);
        assert_eq!(
            pre.to_string(),
            "-i*hbar*p1*d/dp2 + i*hbar*p2*d/dp1 + -i*hbar*q1*d/dq2 + i*hbar*q2*d/dq1"
        );
    }

    #[test]
    fn lie_derivative_of_hamiltonian_form() {
        // For H with n=1: D_H = (∂H/∂q)∂/∂p − (∂H/∂p)∂/∂q.
        let h = &p(1, 0).pow(2).scale(&Scalar::ratio(1, 2)) + &q(1, 0).pow(4);
        let op = lie_derivative(&h);
        let mut expect = PhaseOperator::zero(1);
        let mut dp_idx = DerivIndex::none(1);
        dp_idx.p_ord[0] = 1;
        expect.add_term(dp_idx, h.dq(0));
        let mut dq_idx = DerivIndex::none(1);
        dq_idx.q_ord[0] = 1;
        expect.add_term(dq_idx, -&h.dp(0));
        assert_eq!(op, expect);
    }

    #[test]
    fn lie_derivative_applies_as_bracket() {
        // D_A B = {A, B} for a nontrivial pair.
        let a = &q(2, 0).pow(2) * &p(2, 1);
        let b = &(&q(2, 1) * &p(2, 0)) + &q(2, 0);
        assert_eq!(
            lie_derivative(&a).apply(&b),
            poisson_bracket(&a, &b).unwrap()
        );
    }

    #[test]
    fn lie_derivative_of_unit_is_zero_not_identity() {
        let one = PhasePolynomial::one(1);
        let d1 = lie_derivative(&one);
        assert!(d1.is_zero());
        assert_ne!(d1, PhaseOperator::identity(1));
    }

    #[test]
    fn lie_derivative_of_position_is_dp() {
        assert_eq!(lie_derivative(&q(1, 0)), PhaseOperator::dp(1, 0));
    }

    #[test]
    fn remainder_of_separable_hamiltonian_is_lagrangian() {
        // A = p²/2m + V(q) ⇒ Lbar_A = p²/2m − V(q), with m = 3, V = q⁴/4.
        let kinetic = p(1, 0).pow(2).scale(&Scalar::ratio(1, 6));
        let potential = q(1, 0).pow(4).scale(&Scalar::ratio(1, 4));
        let h = &kinetic + &potential;
        assert_eq!(lagrangian_remainder(&h), &kinetic - &potential);
    }

    #[test]
    fn remainder_edge_cases() {
        let one = PhasePolynomial::one(1);
        assert_eq!(lagrangian_remainder(&one), -&one);
        assert_eq!(lagrangian_remainder(&q(1, 0)), -&q(1, 0));
        assert!(lagrangian_remainder(&p(1, 0)).is_zero());
    }

    #[test]
    fn prequantized_unit_is_identity() {
        assert_eq!(
            prequantize(&PhasePolynomial::one(1)),
            PhaseOperator::identity(1)
        );
        assert_eq!(
            prequantize(&PhasePolynomial::one(3)),
            PhaseOperator::identity(3)
        );
    }

    #[test]
    fn prequantized_position_and_momentum() {
        // L_q = q − (ħ/i)∂/∂p and L_p = (ħ/i)∂/∂q.
        let expect_q = &PhaseOperator::multiplication(&q(1, 0))
            - &PhaseOperator::dp(1, 0).scale(&Scalar::hbar_over_i());
        assert_eq!(prequantize(&q(1, 0)), expect_q);

        let expect_p = PhaseOperator::dq(1, 0).scale(&Scalar::hbar_over_i());
        assert_eq!(prequantize(&p(1, 0)), expect_p);
    }

    #[test]
    fn commutator_of_lie_derivatives_closes_on_bracket() {
        // [D_A, D_B] = D_{{A,B}} for A = q², B = p².
        let a = q(1, 0).pow(2);
        let b = p(1, 0).pow(2);
        let lhs = commutator(&lie_derivative(&a), &lie_derivative(&b)).unwrap();
        let rhs = lie_derivative(&poisson_bracket(&a, &b).unwrap());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn canonical_pair_prequantized_commutator() {
        // [L_q, L_p] = −(ħ/i)·1̂.
        let lhs = commutator(&prequantize(&q(1, 0)), &prequantize(&p(1, 0))).unwrap();
        let expect = PhaseOperator::identity(1).scale(&-&Scalar::hbar_over_i());
        assert_eq!(lhs, expect);
    }

    #[test]
    fn bracket_preservation_residual_vanishes() {
        let pairs = [
            (q(1, 0), p(1, 0)),
            (q(1, 0).pow(2), q(1, 0).pow(2)),
            (&q(1, 0).pow(2) * &p(1, 0), &q(1, 0) * &p(1, 0).pow(2)),
        ];
        for (a, b) in &pairs {
            assert!(
                check_bracket_preservation(a, b).unwrap().is_zero(),
                "pair ({a}, {b})"
            );
        }
    }

    #[test]
    fn m_condition_residual_vanishes() {
        let pairs = [
            (q(1, 0), p(1, 0)),
            (p(1, 0).pow(3), p(1, 0).pow(3)),
            (&q(2, 0) * &p(2, 1), q(2, 1).pow(2)),
        ];
        for (a, b) in &pairs {
            assert!(
                check_m_condition(a, b).unwrap().is_zero(),
                "pair ({a}, {b})"
            );
        }
    }

    #[test]
    fn quantize_momentum_and_position() {
        // project(L_p) = (ħ/i)∂/∂q, project(L_q) = multiplication by q.
        assert_eq!(
            quantize(&p(1, 0)),
            ConfigOperator::dq(1, 0).scale(&Scalar::hbar_over_i())
        );
        assert_eq!(quantize(&q(1, 0)), ConfigOperator::multiplication(&q(1, 0)));
    }

    #[test]
    fn quantize_kinetic_energy() {
        // t = p²/2m projects to −(ħ²/2m)∂²/∂q², here with m = 1.
        let t = p(1, 0).pow(2).scale(&Scalar::ratio(1, 2));
        let coeff = &(-&(&Scalar::hbar() * &Scalar::hbar())) * &Scalar::ratio(1, 2);
        let mut expect = ConfigOperator::zero(1);
        expect.add_term(vec![2], PhasePolynomial::constant(1, coeff));
        assert_eq!(quantize(&t), expect);
    }

    #[test]
    fn quantize_separable_hamiltonian_is_schrodinger_operator() {
        // H = p²/2m + V(q), m = 2, V = q²/2 ⇒ −(ħ²/4)∂²/∂q² + q²/2.
        let h = &p(1, 0).pow(2).scale(&Scalar::ratio(1, 4))
            + &q(1, 0).pow(2).scale(&Scalar::ratio(1, 2));
        let quantized = quantize(&h);

        let kinetic_coeff = &(-&(&Scalar::hbar() * &Scalar::hbar())) * &Scalar::ratio(1, 4);
        let mut expect =
            ConfigOperator::multiplication(&q(1, 0).pow(2).scale(&Scalar::ratio(1, 2)));
        expect.add_term(vec![2], PhasePolynomial::constant(1, kinetic_coeff));
        assert_eq!(quantized, expect);
    }

    #[test]
    fn quantize_unit_is_identity() {
        assert_eq!(
            quantize(&PhasePolynomial::one(1)),
            ConfigOperator::identity(1)
        );
    }

    #[test]
    fn quantize_angular_momentum_component() {
        // l₃ = q₁p₂ − q₂p₁ at n=3 ⇒ (ħ/i)(q₁∂/∂q₂ − q₂∂/∂q₁).
        let l3 = &(&q(3, 0) * &p(3, 1)) - &(&q(3, 1) * &p(3, 0));
        let mut expect = ConfigOperator::zero(3);
        expect.add_term(vec![0, 1, 0], q(3, 0).scale(&Scalar::hbar_over_i()));
        expect.add_term(vec![1, 0, 0], q(3, 1).scale(&-&Scalar::hbar_over_i()));
        assert_eq!(quantize(&l3), expect);
    }

    #[test]
    fn quantize_powers_give_standard_operators() {
        // q^m ↦ multiplication, p^m ↦ ((ħ/i)∂/∂q)^m.
        for m in 1..=4u32 {
            let qm = q(1, 0).pow(m);
            assert_eq!(quantize(&qm), ConfigOperator::multiplication(&qm));

            let pm = p(1, 0).pow(m);
            let mut scalar = Scalar::one();
            for _ in 0..m {
                scalar = &scalar * &Scalar::hbar_over_i();
            }
            let mut expect = ConfigOperator::zero(1);
            expect.add_term(vec![m], PhasePolynomial::constant(1, scalar));
            assert_eq!(quantize(&pm), expect);
        }
    }
}
