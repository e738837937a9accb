//! Property tests for the exact operator algebra: bracket axioms, the
//! commutator correspondence at the phase-space level, and linearity of the
//! observable → operator assignments.

use liouq_core::algebra::{
    check_bracket_preservation, check_m_condition, commutator, lie_derivative, poisson_bracket,
    prequantize, project, quantize, PhasePolynomial, Scalar,
};
use proptest::prelude::*;

/// Random polynomial of total degree ≤ 4 with small rational coefficients.
fn poly(dof: usize) -> impl Strategy<Value = PhasePolynomial> {
    prop::collection::vec(
        (
            prop::collection::vec(0u32..=4, dof),
            prop::collection::vec(0u32..=4, dof),
            -9i64..=9,
            1i64..=4,
        ),
        1..=4,
    )
    .prop_map(move |terms| {
        let mut out = PhasePolynomial::zero(dof);
        for (q_exp, p_exp, num, den) in terms {
            let degree: u32 = q_exp.iter().sum::<u32>() + p_exp.iter().sum::<u32>();
            if degree > 4 || num == 0 {
                continue;
            }
            out = &out + &PhasePolynomial::monomial(dof, q_exp, p_exp, Scalar::ratio(num, den));
        }
        out
    })
}

/// A dof in 1..=3 together with polynomials over it.
fn poly_pair() -> impl Strategy<Value = (PhasePolynomial, PhasePolynomial)> {
    (1usize..=3).prop_flat_map(|dof| (poly(dof), poly(dof)))
}

fn poly_triple() -> impl Strategy<Value = (PhasePolynomial, PhasePolynomial, PhasePolynomial)> {
    (1usize..=3).prop_flat_map(|dof| (poly(dof), poly(dof), poly(dof)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn bracket_is_antisymmetric((a, b) in poly_pair()) {
        let ab = poisson_bracket(&a, &b).unwrap();
        let ba = poisson_bracket(&b, &a).unwrap();
        prop_assert!((&ab + &ba).is_zero());
    }

    #[test]
    fn bracket_satisfies_jacobi((a, b, c) in poly_triple()) {
        let cycle = |x: &PhasePolynomial, y: &PhasePolynomial, z: &PhasePolynomial| {
            poisson_bracket(x, &poisson_bracket(y, z).unwrap()).unwrap()
        };
        let total = &(&cycle(&a, &b, &c) + &cycle(&b, &c, &a)) + &cycle(&c, &a, &b);
        prop_assert!(total.is_zero());
    }

    #[test]
    fn bracket_satisfies_leibniz((a, b, c) in poly_triple()) {
        // {a, bc} = {a, b}c + b{a, c}
        let lhs = poisson_bracket(&a, &(&b * &c)).unwrap();
        let rhs = &(&poisson_bracket(&a, &b).unwrap() * &c)
            + &(&b * &poisson_bracket(&a, &c).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn lie_derivative_commutators_close_on_brackets((a, b) in poly_pair()) {
        let lhs = commutator(&lie_derivative(&a), &lie_derivative(&b)).unwrap();
        let rhs = lie_derivative(&poisson_bracket(&a, &b).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn prequantization_preserves_brackets((a, b) in poly_pair()) {
        prop_assert!(check_bracket_preservation(&a, &b).unwrap().is_zero());
    }

    #[test]
    fn multiplier_condition_holds((a, b) in poly_pair()) {
        prop_assert!(check_m_condition(&a, &b).unwrap().is_zero());
    }

    #[test]
    fn prequantize_is_linear((a, b) in poly_pair()) {
        let alpha = Scalar::ratio(3, 2);
        let beta = Scalar::int(-2);
        let combined = &a.scale(&alpha) + &b.scale(&beta);
        let lhs = prequantize(&combined);
        let rhs = &prequantize(&a).scale(&alpha) + &prequantize(&b).scale(&beta);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn projection_is_linear((a, b) in poly_pair()) {
        let u = prequantize(&a);
        let v = prequantize(&b);
        let lhs = project(&(&u + &v));
        let rhs = &project(&u) + &project(&v);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn projection_is_idempotent_on_its_image(a in (1usize..=3).prop_flat_map(poly)) {
        // Projecting, embedding the result back as a phase-space operator, and
        // projecting again changes nothing.
        let projected = quantize(&a);
        let mut embedded = liouq_core::algebra::PhaseOperator::zero(a.dof());
        for (q_ord, coeff) in projected.terms() {
            embedded.add_term(
                liouq_core::algebra::DerivIndex {
                    q_ord: q_ord.clone(),
                    p_ord: vec![0; a.dof()],
                },
                coeff.clone(),
            );
        }
        prop_assert_eq!(project(&embedded), projected);
    }

    #[test]
    fn quantization_of_momentum_free_observables_is_multiplication(dof in 1usize..=3) {
        // Idempotence of the projection on its image: a momentum-free
        // observable maps to plain multiplication, and projecting the
        // embedded result changes nothing.
        let q_poly = PhasePolynomial::q_var(dof, 0).pow(3);
        let quantized = quantize(&q_poly);
        prop_assert_eq!(quantized, liouq_core::algebra::ConfigOperator::multiplication(&q_poly));
    }
}
