//! Exact log-linear values: finite rational combinations Σ c_p · ln p over
//! prime p. Unique factorization makes the representation canonical, so
//! equality is syntactic and the sign of a nonzero value can be certified by
//! evaluating at increasing precision.

use crate::bigfloat::{cached_ln_biguint, Fixed};
use crate::exact::{factorize, Rational};
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Σ c_p · ln p with rational coefficients, canonical (no zero coefficients).
///
/// Values of the form `ln u` for rational `u` have integer coefficients; the
/// general rational-coefficient form appears in graph matrix derivatives and
/// density denominators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LogLinear {
    terms: BTreeMap<BigUint, Rational>,
}

impl LogLinear {
    pub fn zero() -> Self {
        LogLinear::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// ln(r) for a positive rational r, decomposed by prime factorization.
    pub fn ln_of(r: &Rational) -> Self {
        assert!(r.is_positive(), "ln of a non-positive rational");
        let mut terms = BTreeMap::new();
        for (p, e) in factorize(r.numer().magnitude()) {
            insert_term(&mut terms, p, Rational::from(BigInt::from(e)));
        }
        for (p, e) in factorize(r.denom().magnitude()) {
            insert_term(&mut terms, p, -Rational::from(BigInt::from(e)));
        }
        LogLinear { terms }
    }

    /// ln(1/r) = -ln(r); the length of a graph edge with scale r.
    pub fn ln_inverse_of(r: &Rational) -> Self {
        -Self::ln_of(r)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BigUint, &Rational)> {
        self.terms.iter()
    }

    /// If the value equals ln(u) for a rational u (all coefficients are
    /// integers), returns u.
    pub fn try_to_ln_rational(&self) -> Option<Rational> {
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        for (p, c) in &self.terms {
            if !c.denom().is_one() {
                return None;
            }
            let e = c.numer();
            let e_u32 = u32::try_from(e.magnitude().clone()).ok()?;
            let pk = BigInt::from(p.clone()).pow(e_u32);
            if e.is_positive() {
                num *= pk;
            } else {
                den *= pk;
            }
        }
        Some(Rational::new(num, den))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return LogLinear::zero();
        }
        let terms = self
            .terms
            .iter()
            .map(|(p, v)| (p.clone(), v * c))
            .collect();
        LogLinear { terms }
    }

    /// Evaluates at `prec` binary digits with a conservative error bound.
    pub fn eval_fixed(&self, prec: u64) -> Fixed {
        let mut acc = Fixed::zero(prec);
        for (p, c) in &self.terms {
            let lnp = cached_ln_biguint(p, prec);
            acc = acc.add(&lnp.mul_rational(c));
        }
        acc
    }

    pub fn to_f64(&self) -> f64 {
        self.eval_fixed(160).to_f64()
    }

    /// Decimal string with `digits` fractional digits.
    pub fn decimal(&self, digits: u32) -> String {
        let prec = decimal_digits_to_bits(digits);
        self.eval_fixed(prec).decimal(digits)
    }

    /// Certified sign: -1, 0 or +1. Zero only for the empty combination; a
    /// nonzero combination evaluates away from zero at some finite precision
    /// because {ln p} are linearly independent over the rationals.
    pub fn sign(&self) -> i8 {
        if self.is_zero() {
            return 0;
        }
        let mut prec = 128;
        loop {
            let v = self.eval_fixed(prec);
            if let Some(s) = v.sign_certain() {
                if s != 0 {
                    return s;
                }
            }
            prec *= 2;
            assert!(prec <= 1 << 22, "sign determination ran out of precision");
        }
    }

    pub fn is_positive(&self) -> bool {
        self.sign() > 0
    }
}

pub fn decimal_digits_to_bits(digits: u32) -> u64 {
    (digits as u64) * 4 + 96
}

fn insert_term(terms: &mut BTreeMap<BigUint, Rational>, p: BigUint, c: Rational) {
    use std::collections::btree_map::Entry;
    match terms.entry(p) {
        Entry::Vacant(v) => {
            if !c.is_zero() {
                v.insert(c);
            }
        }
        Entry::Occupied(mut o) => {
            let sum = o.get() + &c;
            if sum.is_zero() {
                o.remove();
            } else {
                *o.get_mut() = sum;
            }
        }
    }
}

impl Add for &LogLinear {
    type Output = LogLinear;
    fn add(self, rhs: &LogLinear) -> LogLinear {
        let mut terms = self.terms.clone();
        for (p, c) in &rhs.terms {
            insert_term(&mut terms, p.clone(), c.clone());
        }
        LogLinear { terms }
    }
}

impl Sub for &LogLinear {
    type Output = LogLinear;
    fn sub(self, rhs: &LogLinear) -> LogLinear {
        let mut terms = self.terms.clone();
        for (p, c) in &rhs.terms {
            insert_term(&mut terms, p.clone(), -c.clone());
        }
        LogLinear { terms }
    }
}

impl Neg for &LogLinear {
    type Output = LogLinear;
    fn neg(self) -> LogLinear {
        let terms = self
            .terms
            .iter()
            .map(|(p, c)| (p.clone(), -c.clone()))
            .collect();
        LogLinear { terms }
    }
}

impl Neg for LogLinear {
    type Output = LogLinear;
    fn neg(self) -> LogLinear {
        -&self
    }
}

impl Mul<&Rational> for &LogLinear {
    type Output = LogLinear;
    fn mul(self, rhs: &Rational) -> LogLinear {
        self.scale(rhs)
    }
}

impl PartialOrd for LogLinear {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LogLinear {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self - other).sign() {
            s if s < 0 => Ordering::Less,
            0 => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }
}

impl fmt::Display for LogLinear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (p, c) in &self.terms {
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mag = c.abs();
            if mag.is_one() {
                write!(f, "ln {p}")?;
            } else if mag.denom().is_one() {
                write!(f, "{}·ln {p}", mag.numer())?;
            } else {
                write!(f, "({}/{})·ln {p}", mag.numer(), mag.denom())?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational_from_ints;

    fn ll(p: i64, q: i64) -> LogLinear {
        LogLinear::ln_of(&rational_from_ints(p, q))
    }

    #[test]
    fn ln_factorization_is_canonical() {
        // ln(5/3) + ln(3/5) = 0
        assert!((&ll(5, 3) + &ll(3, 5)).is_zero());
        // ln(4/9) = 2 ln 2 - 2 ln 3
        let v = ll(4, 9);
        let terms: Vec<_> = v.terms().collect();
        assert_eq!(terms.len(), 2);
        assert_eq!(*terms[0].1, rational_from_ints(2, 1));
        assert_eq!(*terms[1].1, rational_from_ints(-2, 1));
    }

    #[test]
    fn ln_round_trip() {
        let v = ll(45, 8);
        assert_eq!(v.try_to_ln_rational(), Some(rational_from_ints(45, 8)));
        let half = v.scale(&rational_from_ints(1, 2));
        assert_eq!(half.try_to_ln_rational(), None);
    }

    #[test]
    fn ordering_matches_reals() {
        assert!(ll(3, 1) > ll(3, 2));
        assert!(ll(5, 3) < ll(2, 1));
        assert_eq!(ll(4, 1), ll(2, 1).scale(&rational_from_ints(2, 1)));
        assert!(ll(1, 2).sign() < 0);
    }

    #[test]
    fn triangle_denominator_value() {
        // (4/25)·ln 2 + (1/4)·ln 5
        let z = &ll(2, 1).scale(&rational_from_ints(4, 25))
            + &ll(5, 1).scale(&rational_from_ints(1, 4));
        assert!((z.to_f64() - 0.513_263_026_998_116_3).abs() < 1e-15);
        assert_eq!(z.decimal(12), "0.513263026998");
        assert_eq!(format!("{z}"), "(4/25)·ln 2 + (1/4)·ln 5");
    }

    #[test]
    fn display_forms() {
        assert_eq!(format!("{}", ll(5, 3)), "-ln 3 + ln 5");
        assert_eq!(format!("{}", LogLinear::zero()), "0");
    }
}
