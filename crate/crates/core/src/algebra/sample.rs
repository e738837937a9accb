//! Seeded random observables for the exact identity suites.

use super::poly::PhasePolynomial;
use super::scalar::Scalar;
use rand::Rng;

/// Draw a random polynomial observable: up to `max_terms` monomials of total
/// degree ≤ `max_degree` with small rational coefficients. Coefficients are
/// real (observables carry no ħ or imaginary part).
pub fn random_polynomial<R: Rng>(
    rng: &mut R,
    dof: usize,
    max_degree: u32,
    max_terms: usize,
) -> PhasePolynomial {
    let mut poly = PhasePolynomial::zero(dof);
    let n_terms = rng.gen_range(1..=max_terms);
    for _ in 0..n_terms {
        let mut budget = max_degree;
        let mut q_exp = vec![0u32; dof];
        let mut p_exp = vec![0u32; dof];
        // Spread the degree budget over the 2n axes in random order.
        let mut axes: Vec<usize> = (0..2 * dof).collect();
        for i in (1..axes.len()).rev() {
            axes.swap(i, rng.gen_range(0..=i));
        }
        for axis in axes {
            if budget == 0 {
                break;
            }
            let e = rng.gen_range(0..=budget);
            if axis < dof {
                q_exp[axis] = e;
            } else {
                p_exp[axis - dof] = e;
            }
            budget -= e;
        }
        let num = rng.gen_range(-9i64..=9);
        let den = rng.gen_range(1i64..=4);
        if num != 0 {
            poly = &poly + &PhasePolynomial::monomial(dof, q_exp, p_exp, Scalar::ratio(num, den));
        }
    }
    poly
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn respects_degree_bound_and_is_deterministic() {
        let mut rng_a = ChaCha8Rng::seed_from_u64(7);
        let mut rng_b = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = random_polynomial(&mut rng_a, 3, 4, 5);
            let b = random_polynomial(&mut rng_b, 3, 4, 5);
            assert_eq!(a, b);
            assert!(a.total_degree() <= 4);
            assert_eq!(a.dof(), 3);
        }
    }
}
