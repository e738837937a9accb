//! Exact coefficients: finite sums of ħ-powers with complex rational weights.
//!
//! Every value in the symbolic layer is a `Scalar`: a canonical sum of
//! monomials `hbar^k · (a + b·i)` with `a`, `b` exact rationals. Addition and
//! multiplication are closed and exact; there is no floating point here.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Complex number with exact rational real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexRatio {
    pub re: BigRational,
    pub im: BigRational,
}

impl ComplexRatio {
    pub fn zero() -> Self {
        ComplexRatio {
            re: BigRational::zero(),
            im: BigRational::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn mul(&self, other: &ComplexRatio) -> ComplexRatio {
        ComplexRatio {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }
}

/// Canonical sum over ħ powers; at most one entry per power, no zero entries.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Scalar {
    terms: BTreeMap<u32, ComplexRatio>,
}

fn big_ratio(num: i64, den: i64) -> BigRational {
    assert!(den != 0, "zero denominator");
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::default()
    }

    pub fn one() -> Self {
        Scalar::int(1)
    }

    pub fn int(v: i64) -> Self {
        Scalar::ratio(v, 1)
    }

    /// Exact rational `num/den`.
    pub fn ratio(num: i64, den: i64) -> Self {
        Scalar::complex(big_ratio(num, den), BigRational::zero())
    }

    /// The imaginary unit i.
    pub fn imag_unit() -> Self {
        Scalar::complex(BigRational::zero(), BigRational::one())
    }

    pub fn complex(re: BigRational, im: BigRational) -> Self {
        Scalar::with_hbar_power(0, ComplexRatio { re, im })
    }

    /// `hbar^k · c`.
    pub fn with_hbar_power(k: u32, c: ComplexRatio) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(k, c);
        }
        Scalar { terms }
    }

    /// The formal symbol ħ.
    pub fn hbar() -> Self {
        Scalar::with_hbar_power(
            1,
            ComplexRatio {
                re: BigRational::one(),
                im: BigRational::zero(),
            },
        )
    }

    /// The combination ħ/i = −i·ħ.
    pub fn hbar_over_i() -> Self {
        Scalar::with_hbar_power(
            1,
            ComplexRatio {
                re: BigRational::zero(),
                im: -BigRational::one(),
            },
        )
    }

    /// Exact conversion of a finite float (every finite f64 is rational).
    pub fn from_f64_exact(v: f64) -> Option<Self> {
        BigRational::from_float(v).map(|r| Scalar::complex(r, BigRational::zero()))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self == &Scalar::one()
    }

    fn insert(&mut self, k: u32, c: ComplexRatio) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(k) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                e.get_mut().re += &c.re;
                e.get_mut().im += &c.im;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Multiply by i.
    pub fn mul_i(&self) -> Scalar {
        self * &Scalar::imag_unit()
    }

    /// Divide by ħ: shifts every power down by one. Fails when an ħ⁰ term is
    /// present (the quotient would leave the ring).
    pub fn div_hbar(&self) -> Option<Scalar> {
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            if *k == 0 {
                return None;
            }
            terms.insert(k - 1, c.clone());
        }
        Some(Scalar { terms })
    }

    /// Evaluate at a numeric ħ, returning (re, im).
    pub fn eval_f64(&self, hbar: f64) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (k, c) in &self.terms {
            let w = hbar.powi(*k as i32);
            re += w * c.re.to_f64().unwrap_or(f64::NAN);
            im += w * c.im.to_f64().unwrap_or(f64::NAN);
        }
        (re, im)
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|(k, c)| json!({ "hbar": k, "re": c.re.to_string(), "im": c.im.to_string() }))
                .collect(),
        )
    }
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.insert(*k, c.clone());
        }
        out
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        self + &(-rhs)
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| {
                    (
                        *k,
                        ComplexRatio {
                            re: -&c.re,
                            im: -&c.im,
                        },
                    )
                })
                .collect(),
        }
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    // Powers of the formal symbol add under multiplication.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: &Scalar) -> Scalar {
        let mut out = Scalar::zero();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &rhs.terms {
                out.insert(ka + kb, ca.mul(cb));
            }
        }
        out
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Format one complex weight, e.g. `1/2`, `-i`, `3*i`, `(1/2+3/4*i)`.
fn fmt_complex(c: &ComplexRatio) -> String {
    let re_zero = c.re.is_zero();
    let im_zero = c.im.is_zero();
    if im_zero {
        return fmt_rational(&c.re);
    }
    let im_part = if c.im.is_one() {
        "i".to_string()
    } else if (-&c.im).is_one() {
        "-i".to_string()
    } else {
        format!("{}*i", fmt_rational(&c.im))
    };
    if re_zero {
        return im_part;
    }
    let sign = if c.im.is_negative() { "" } else { "+" };
    format!("({}{}{})", fmt_rational(&c.re), sign, im_part)
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        for (k, c) in &self.terms {
            let coeff = fmt_complex(c);
            let piece = match k {
                0 => coeff,
                1 if coeff == "1" => "hbar".to_string(),
                1 => format!("{coeff}*hbar"),
                _ if coeff == "1" => format!("hbar^{k}"),
                _ => format!("{coeff}*hbar^{k}"),
            };
            parts.push(piece);
        }
        write!(f, "{}", parts.join(" + "))
    }
}
