//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! Activations arrive as `f32`, reports are usually produced in `f64`, and the
//! exact rescaling audits run on [`Rational64`], where multiplying by a factor
//! and summing commute without rounding. Euclidean lengths (needed by FPGM)
//! leave the rationals, so each scalar names its own [`Scalar::Length`] type:
//! itself for floats and [`SurdSum`] for rationals.

use std::collections::BTreeMap;
use std::fmt::{self, Debug};
use std::ops::Add;

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{Num, Signed, ToPrimitive, Zero};

/// Numeric type an activation grid can be expressed in.
pub trait Scalar: Num + Signed + PartialOrd + Clone + Debug + Send + Sync + 'static {
    /// Result type of a Euclidean norm over this scalar.
    type Length: Clone + Debug + PartialEq + Zero + Add<Output = Self::Length> + Send + Sync;

    /// Exact conversion from a stored `f32`, `None` when not representable.
    fn from_f32(v: f32) -> Option<Self>;

    /// Exact conversion from an `f64`, `None` when not representable.
    fn from_f64(v: f64) -> Option<Self>;

    fn to_f64(&self) -> f64;

    fn from_usize(n: usize) -> Self;

    /// False for NaN and infinities.
    fn is_finite_value(&self) -> bool;

    /// Square root of a non-negative value.
    fn sqrt_nonneg(self) -> Self::Length;

    /// `len * by` for a non-negative `by`.
    fn scale_length(len: &Self::Length, by: &Self) -> Self::Length;

    fn length_to_f64(len: &Self::Length) -> f64;
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            type Length = $t;

            fn from_f32(v: f32) -> Option<Self> {
                Some(v as $t)
            }

            fn from_f64(v: f64) -> Option<Self> {
                let out = v as $t;
                if (out as f64) == v || v.is_nan() {
                    Some(out)
                } else {
                    None
                }
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn from_usize(n: usize) -> Self {
                n as $t
            }

            fn is_finite_value(&self) -> bool {
                self.is_finite()
            }

            fn sqrt_nonneg(self) -> $t {
                self.sqrt()
            }

            fn scale_length(len: &$t, by: &$t) -> $t {
                len * by
            }

            fn length_to_f64(len: &$t) -> f64 {
                *len as f64
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

fn rational_from_parts(mantissa: u64, exponent: i16, sign: i8) -> Option<Rational64> {
    if mantissa == 0 {
        return Some(Rational64::zero());
    }
    // Strip trailing zero bits so the shifts below stay in range.
    let tz = mantissa.trailing_zeros();
    let mantissa = (mantissa >> tz) as i64;
    let exponent = exponent as i32 + tz as i32;
    let signed = if sign < 0 { -mantissa } else { mantissa };
    if exponent >= 0 {
        if exponent >= 62 {
            return None;
        }
        Some(Rational64::from_integer(signed.checked_mul(1i64 << exponent)?))
    } else {
        let e = (-exponent) as u32;
        if e >= 63 {
            return None;
        }
        Some(Rational64::new(signed, 1i64 << e))
    }
}

impl Scalar for Rational64 {
    type Length = SurdSum;

    fn from_f32(v: f32) -> Option<Self> {
        if !v.is_finite() {
            return None;
        }
        let (m, e, s) = num_traits::float::FloatCore::integer_decode(v);
        rational_from_parts(m, e, s)
    }

    fn from_f64(v: f64) -> Option<Self> {
        if !v.is_finite() {
            return None;
        }
        let (m, e, s) = num_traits::float::FloatCore::integer_decode(v);
        rational_from_parts(m, e, s)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_usize(n: usize) -> Self {
        Rational64::from_integer(n as i64)
    }

    fn is_finite_value(&self) -> bool {
        true
    }

    fn sqrt_nonneg(self) -> SurdSum {
        SurdSum::sqrt_of(&self)
    }

    fn scale_length(len: &SurdSum, by: &Rational64) -> SurdSum {
        len.scaled(by)
    }

    fn length_to_f64(len: &SurdSum) -> f64 {
        len.to_f64()
    }
}

/// Exact finite sum `Σ c_r · √r` with rational coefficients and distinct
/// square-free radicands.
///
/// Square roots of distinct square-free integers are linearly independent
/// over the rationals, so this representation is canonical: two values are
/// equal iff their term maps are equal.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct SurdSum {
    terms: BTreeMap<u128, Rational64>,
}

impl SurdSum {
    /// `√q` for a non-negative rational `q`.
    ///
    /// # Panics
    /// On negative input.
    pub fn sqrt_of(q: &Rational64) -> SurdSum {
        assert!(!q.is_negative(), "square root of negative rational");
        if q.is_zero() {
            return SurdSum::default();
        }
        let (a, r) = square_split(*q.numer() as u64);
        let (b, s) = square_split(*q.denom() as u64);
        // √(a²r / b²s) = a·g / (b·s) · √((r/g)(s/g)), g = gcd(r, s)
        let g = r.gcd(&s);
        let radicand = (r / g) as u128 * (s / g) as u128;
        let num = (a as i128) * (g as i128);
        let den = (b as i128) * (s as i128);
        let coeff = Rational64::new(
            i64::try_from(num).expect("surd coefficient overflow"),
            i64::try_from(den).expect("surd coefficient overflow"),
        );
        let mut terms = BTreeMap::new();
        terms.insert(radicand, coeff);
        SurdSum { terms }
    }

    pub fn from_rational(q: Rational64) -> SurdSum {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert(1, q);
        }
        SurdSum { terms }
    }

    pub fn scaled(&self, by: &Rational64) -> SurdSum {
        if by.is_zero() {
            return SurdSum::default();
        }
        SurdSum {
            terms: self.terms.iter().map(|(r, c)| (*r, c * by)).collect(),
        }
    }

    /// Terms as `(radicand, coefficient)` pairs, radicands ascending.
    pub fn terms(&self) -> impl Iterator<Item = (u128, Rational64)> + '_ {
        self.terms.iter().map(|(r, c)| (*r, *c))
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(r, c)| Scalar::to_f64(c) * (*r as f64).sqrt())
            .sum()
    }
}

impl Debug for SurdSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (r, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if *r == 1 {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}·√{r}")?;
            }
        }
        Ok(())
    }
}

impl Add for SurdSum {
    type Output = SurdSum;

    fn add(mut self, rhs: SurdSum) -> SurdSum {
        for (r, c) in rhs.terms {
            let entry = self.terms.entry(r).or_insert_with(Rational64::zero);
            *entry += c;
            if entry.is_zero() {
                self.terms.remove(&r);
            }
        }
        self
    }
}

impl Zero for SurdSum {
    fn zero() -> Self {
        SurdSum::default()
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Splits `n = a² · r` with `r` square-free.
fn square_split(n: u64) -> (u64, u64) {
    if n == 0 {
        return (0, 1);
    }
    let mut rest = n;
    let mut outside = 1u64;
    let mut inside = 1u64;
    let mut p = 2u64;
    // Every prime factor left after dividing out primes up to ∛n is larger
    // than ∛n, so at most two of them remain.
    while p.saturating_mul(p).saturating_mul(p) <= n {
        if rest % p == 0 {
            let mut e = 0u32;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            outside *= p.pow(e / 2);
            if e % 2 == 1 {
                inside *= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rest > 1 {
        let root = rest.isqrt();
        if root * root == rest {
            outside *= root;
        } else {
            inside *= rest;
        }
    }
    (outside, inside)
}
