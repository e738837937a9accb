//! Bracket and commutator tables for the single-particle observable set.
//!
//! At n = 3 the observables are position q_k, momentum p_k, angular momentum
//! l_k = ε_kil q_i p_l, and kinetic energy t = p·p/2m. `verify_tables` checks
//! three layers mechanically and exactly:
//!
//! 1. the nine Poisson-bracket families against their closed forms,
//! 2. the commutators of the projected operators, [Â, B̂] = −(ħ/i)·Ĉ with
//!    C = {A, B},
//! 3. the translation rule Ĉ = −(i/ħ)[Â, B̂] for every entry.
//!
//! `groenewold_demo` exhibits the obstruction: the same correspondence fails
//! for the cubic pair (q³, p³).

#![allow(clippy::needless_range_loop)] // tensor-index loops mirror the formulas

use super::config_op::ConfigOperator;
use super::poly::PhasePolynomial;
use super::scalar::Scalar;
use super::{poisson_bracket, quantize};
use serde_json::{json, Value};

/// Levi-Civita symbol ε_{ijk} over indices 0..3.
fn epsilon(i: usize, j: usize, k: usize) -> i64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

/// The n = 3 observable set (q_k, p_k, l_k, t) with an exact rational mass.
pub struct ObservableSet {
    pub q: [PhasePolynomial; 3],
    pub p: [PhasePolynomial; 3],
    pub l: [PhasePolynomial; 3],
    pub t: PhasePolynomial,
    pub mass: (i64, i64),
}

/// Build the observable set for mass `mass_num/mass_den`.
pub fn observable_set(mass_num: i64, mass_den: i64) -> ObservableSet {
    assert!(mass_num > 0 && mass_den > 0, "mass must be positive");
    let n = 3;
    let q: [PhasePolynomial; 3] = std::array::from_fn(|k| PhasePolynomial::q_var(n, k));
    let p: [PhasePolynomial; 3] = std::array::from_fn(|k| PhasePolynomial::p_var(n, k));
    let l: [PhasePolynomial; 3] = std::array::from_fn(|k| {
        let mut out = PhasePolynomial::zero(n);
        for i in 0..3 {
            for j in 0..3 {
                let e = epsilon(k, i, j);
                if e != 0 {
                    out = &out + &(&q[i] * &p[j]).scale(&Scalar::int(e));
                }
            }
        }
        out
    });
    let mut t = PhasePolynomial::zero(n);
    for k in 0..3 {
        t = &t + &p[k].pow(2);
    }
    // p·p/2m with exact rational mass.
    let t = t.scale(&Scalar::ratio(mass_den, 2 * mass_num));
    ObservableSet {
        q,
        p,
        l,
        t,
        mass: (mass_num, mass_den),
    }
}

/// One verified table entry.
#[derive(Debug, Clone)]
pub struct TableEntry {
    pub name: String,
    pub poisson_ok: bool,
    pub commutator_ok: bool,
    pub translation_ok: bool,
}

impl TableEntry {
    pub fn ok(&self) -> bool {
        self.poisson_ok && self.commutator_ok && self.translation_ok
    }
}

#[derive(Debug, Clone)]
pub struct TablesReport {
    pub entries: Vec<TableEntry>,
}

impl TablesReport {
    pub fn all_ok(&self) -> bool {
        self.entries.iter().all(TableEntry::ok)
    }

    pub fn failures(&self) -> Vec<&TableEntry> {
        self.entries.iter().filter(|e| !e.ok()).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "all_ok": self.all_ok(),
            "entries": self.entries.iter().map(|e| json!({
                "name": e.name,
                "poisson_ok": e.poisson_ok,
                "commutator_ok": e.commutator_ok,
                "translation_ok": e.translation_ok,
            })).collect::<Vec<_>>(),
        })
    }
}

struct Pair<'a> {
    name: String,
    a: &'a PhasePolynomial,
    b: &'a PhasePolynomial,
    expected_bracket: PhasePolynomial,
}

fn table_pairs(set: &ObservableSet) -> Vec<Pair<'_>> {
    let n = 3;
    let zero = PhasePolynomial::zero(n);
    let (m_num, m_den) = set.mass;
    let inv_mass = Scalar::ratio(m_den, m_num);
    let mut pairs = Vec::new();

    let eps_combination = |family: &[PhasePolynomial; 3], i: usize, k: usize| {
        let mut out = PhasePolynomial::zero(n);
        for l in 0..3 {
            let e = epsilon(i, k, l);
            if e != 0 {
                out = &out + &family[l].scale(&Scalar::int(e));
            }
        }
        out
    };

    for i in 0..3 {
        for k in 0..3 {
            // {q_i, q_k} = 0
            pairs.push(Pair {
                name: format!("{{q{},q{}}}", i + 1, k + 1),
                a: &set.q[i],
                b: &set.q[k],
                expected_bracket: zero.clone(),
            });
            // {p_i, p_k} = 0
            pairs.push(Pair {
                name: format!("{{p{},p{}}}", i + 1, k + 1),
                a: &set.p[i],
                b: &set.p[k],
                expected_bracket: zero.clone(),
            });
            // {q_i, p_k} = δ_ik
            pairs.push(Pair {
                name: format!("{{q{},p{}}}", i + 1, k + 1),
                a: &set.q[i],
                b: &set.p[k],
                expected_bracket: if i == k {
                    PhasePolynomial::one(n)
                } else {
                    zero.clone()
                },
            });
            // {l_i, l_k} = ε_ikl l_l
            pairs.push(Pair {
                name: format!("{{l{},l{}}}", i + 1, k + 1),
                a: &set.l[i],
                b: &set.l[k],
                expected_bracket: eps_combination(&set.l, i, k),
            });
            // {q_i, l_k} = ε_ikl q_l
            pairs.push(Pair {
                name: format!("{{q{},l{}}}", i + 1, k + 1),
                a: &set.q[i],
                b: &set.l[k],
                expected_bracket: eps_combination(&set.q, i, k),
            });
            // {p_i, l_k} = ε_ikl p_l
            pairs.push(Pair {
                name: format!("{{p{},l{}}}", i + 1, k + 1),
                a: &set.p[i],
                b: &set.l[k],
                expected_bracket: eps_combination(&set.p, i, k),
            });
        }
        // {q_i, t} = p_i/m
        pairs.push(Pair {
            name: format!("{{q{},t}}", i + 1),
            a: &set.q[i],
            b: &set.t,
            expected_bracket: set.p[i].scale(&inv_mass),
        });
        // {p_i, t} = 0
        pairs.push(Pair {
            name: format!("{{p{},t}}", i + 1),
            a: &set.p[i],
            b: &set.t,
            expected_bracket: zero.clone(),
        });
        // {l_i, t} = 0
        pairs.push(Pair {
            name: format!("{{l{},t}}", i + 1),
            a: &set.l[i],
            b: &set.t,
            expected_bracket: zero.clone(),
        });
    }
    pairs
}

/// Verify all bracket and commutator families on the observable set, plus the
/// translation rule for every entry.
pub fn verify_tables(set: &ObservableSet) -> TablesReport {
    let mut entries = Vec::new();
    for pair in table_pairs(set) {
        let bracket = poisson_bracket(pair.a, pair.b).expect("shared dof");
        let poisson_ok = bracket == pair.expected_bracket;

        let a_hat = quantize(pair.a);
        let b_hat = quantize(pair.b);
        let c_hat = quantize(&pair.expected_bracket);
        let commutator = a_hat.commutator(&b_hat);
        // [Â, B̂] = −(ħ/i)·Ĉ
        let commutator_ok = commutator == c_hat.scale(&-&Scalar::hbar_over_i());

        // Ĉ = −(i/ħ)[Â, B̂]; the scaling fails when no ħ can cancel, which is
        // itself a mismatch unless both sides are zero.
        let translation_ok = match commutator.scale_neg_i_over_hbar() {
            Some(translated) => translated == c_hat,
            None => false,
        };

        entries.push(TableEntry {
            name: pair.name,
            poisson_ok,
            commutator_ok,
            translation_ok,
        });
    }
    TablesReport { entries }
}

/// Outcome of the correspondence test for one polynomial pair.
#[derive(Debug, Clone)]
pub struct PairOutcome {
    pub name: String,
    /// quantize({A, B})
    pub bracket_image: ConfigOperator,
    /// −(i/ħ)[quantize(A), quantize(B)], when the scaling is defined.
    pub commutator_image: Option<ConfigOperator>,
    /// bracket_image − commutator_image (bracket_image itself if undefined).
    pub difference: ConfigOperator,
}

impl PairOutcome {
    pub fn is_zero(&self) -> bool {
        self.difference.is_zero()
    }
}

#[derive(Debug, Clone)]
pub struct GroenewoldReport {
    /// The demonstrating cubic pair (q³, p³): nonzero difference.
    pub obstruction: PairOutcome,
    /// Pairs from the observable span {1, q_k, p_k, l_k, t}: zero difference.
    pub safe_pairs: Vec<PairOutcome>,
}

impl GroenewoldReport {
    /// True when the obstruction is visible and every span pair is exact.
    pub fn demonstrates_obstruction(&self) -> bool {
        !self.obstruction.is_zero() && self.safe_pairs.iter().all(PairOutcome::is_zero)
    }

    pub fn to_json(&self) -> Value {
        let pair_json = |p: &PairOutcome| {
            json!({
                "name": p.name,
                "bracket_image": p.bracket_image.to_string(),
                "commutator_image": p.commutator_image.as_ref().map(|c| c.to_string()),
                "difference": p.difference.to_string(),
                "zero": p.is_zero(),
            })
        };
        json!({
            "demonstrates_obstruction": self.demonstrates_obstruction(),
            "obstruction": pair_json(&self.obstruction),
            "safe_pairs": self.safe_pairs.iter().map(pair_json).collect::<Vec<_>>(),
        })
    }
}

fn correspondence_outcome(name: String, a: &PhasePolynomial, b: &PhasePolynomial) -> PairOutcome {
    let bracket = poisson_bracket(a, b).expect("shared dof");
    let bracket_image = quantize(&bracket);
    let commutator = quantize(a).commutator(&quantize(b));
    let commutator_image = commutator.scale_neg_i_over_hbar();
    let difference = match &commutator_image {
        Some(ci) => &bracket_image - ci,
        None => bracket_image.clone(),
    };
    PairOutcome {
        name,
        bracket_image,
        commutator_image,
        difference,
    }
}

/// Demonstrate that the projection does not preserve brackets for all
/// observables: (q³, p³) at n = 1 yields a nonzero difference, while every
/// pair from the observable span {1, q_k, p_k, l_k, t} at n = 3 is exact.
pub fn groenewold_demo() -> GroenewoldReport {
    let q = PhasePolynomial::q_var(1, 0);
    let p = PhasePolynomial::p_var(1, 0);
    let obstruction = correspondence_outcome("(q1^3, p1^3)".into(), &q.pow(3), &p.pow(3));

    let set = observable_set(1, 1);
    let mut span: Vec<(String, &PhasePolynomial)> = Vec::new();
    let one = PhasePolynomial::one(3);
    span.push(("1".into(), &one));
    for k in 0..3 {
        span.push((format!("q{}", k + 1), &set.q[k]));
        span.push((format!("p{}", k + 1), &set.p[k]));
        span.push((format!("l{}", k + 1), &set.l[k]));
    }
    span.push(("t".into(), &set.t));

    let mut safe_pairs = Vec::new();
    for (name_a, a) in &span {
        for (name_b, b) in &span {
            safe_pairs.push(correspondence_outcome(
                format!("({name_a}, {name_b})"),
                a,
                b,
            ));
        }
    }
    GroenewoldReport {
        obstruction,
        safe_pairs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::commutator;
    use crate::algebra::lie_derivative;

    #[test]
    fn all_table_entries_hold_exactly() {
        let report = verify_tables(&observable_set(1, 1));
        assert_eq!(report.entries.len(), 63);
        for entry in &report.entries {
            assert!(entry.ok(), "table entry {} failed", entry.name);
        }
        // Mass enters {q_i, t}; exercise a non-unit rational mass too.
        assert!(verify_tables(&observable_set(3, 2)).all_ok());
    }

    #[test]
    fn angular_momentum_bracket_structure() {
        // Direct spot check: {l1, l2} = l3.
        let set = observable_set(1, 1);
        let bracket = poisson_bracket(&set.l[0], &set.l[1]).unwrap();
        assert_eq!(bracket, set.l[2]);
    }

    #[test]
    fn lie_bracket_closure_on_angular_momentum() {
        // [D_l1, D_l2] = D_l3 also at the Lie-derivative level.
        let set = observable_set(1, 1);
        let lhs = commutator(&lie_derivative(&set.l[0]), &lie_derivative(&set.l[1])).unwrap();
        assert_eq!(lhs, lie_derivative(&set.l[2]));
    }

    #[test]
    fn obstruction_is_nonzero_for_cubic_pair_only() {
        let report = groenewold_demo();
        assert!(!report.obstruction.is_zero());
        assert!(report.safe_pairs.iter().all(PairOutcome::is_zero));
        assert!(report.demonstrates_obstruction());
    }

    #[test]
    fn cubic_pair_difference_matches_hand_computation() {
        // For A = q³, B = p³: quantize({A,B}) = 9(ħ/i)²q²∂² = −9ħ²q²∂², while
        // −(i/ħ)[q̂³, p̂³] = −ħ²(9q²∂² + 18q∂ + 6); difference = ħ²(18q∂ + 6).
        let report = groenewold_demo();
        let h2 = &Scalar::hbar() * &Scalar::hbar();
        let q = PhasePolynomial::q_var(1, 0);
        let mut expect =
            ConfigOperator::multiplication(&PhasePolynomial::constant(1, &h2 * &Scalar::int(6)));
        expect.add_term(vec![1], q.scale(&(&h2 * &Scalar::int(18))));
        assert_eq!(report.obstruction.difference, expect);
    }

    #[test]
    fn quadratic_pair_also_defects_under_this_ordering() {
        // The projection is a normal-ordering map, so even (q², p²) picks up a
        // constant defect: quantize({q²,p²}) = 4(ħ/i)q∂ but −(i/ħ)[q̂²,p̂²] =
        // (ħ/i)(4q∂ + 2). The difference is −2(ħ/i)·1̂.
        let q = PhasePolynomial::q_var(1, 0);
        let p = PhasePolynomial::p_var(1, 0);
        let outcome = correspondence_outcome("(q1^2, p1^2)".into(), &q.pow(2), &p.pow(2));
        let expect =
            ConfigOperator::identity(1).scale(&-&(&Scalar::hbar_over_i() * &Scalar::int(2)));
        assert_eq!(outcome.difference, expect);
    }
}
