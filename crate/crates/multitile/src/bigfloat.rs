//! Minimal fixed-point big-float arithmetic: values are `mantissa / 2^prec`.
//!
//! This is enough to evaluate natural logarithms of rationals to hundreds of
//! decimal digits with a conservative, explicitly tracked error bound in
//! units of the last place. No floating point is involved until the caller
//! converts a result.

use crate::exact::Rational;
use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::HashMap;
use std::sync::Mutex;

/// A fixed-point value together with a bound on its absolute error, both in
/// units of `2^-prec`.
#[derive(Debug, Clone)]
pub struct Fixed {
    pub mantissa: BigInt,
    pub err_ulps: BigUint,
    pub prec: u64,
}

impl Fixed {
    pub fn zero(prec: u64) -> Self {
        Fixed {
            mantissa: BigInt::zero(),
            err_ulps: BigUint::zero(),
            prec,
        }
    }

    pub fn add(&self, other: &Fixed) -> Fixed {
        assert_eq!(self.prec, other.prec);
        Fixed {
            mantissa: &self.mantissa + &other.mantissa,
            err_ulps: &self.err_ulps + &other.err_ulps,
            prec: self.prec,
        }
    }

    /// Multiplies by an exact rational, rounding to the nearest ulp.
    pub fn mul_rational(&self, r: &Rational) -> Fixed {
        let num = self.mantissa.clone() * r.numer();
        let mantissa = div_round_nearest(&num, r.denom());
        // |r| scales the inherited error; rounding adds one ulp.
        let scale = (r.numer().magnitude() / r.denom().magnitude()) + BigUint::one();
        Fixed {
            mantissa,
            err_ulps: &self.err_ulps * scale + BigUint::one(),
            prec: self.prec,
        }
    }

    /// True when the sign of the value is determined despite the error bound.
    pub fn sign_certain(&self) -> Option<i8> {
        let err = BigInt::from(self.err_ulps.clone());
        if self.mantissa > err {
            Some(1)
        } else if self.mantissa < -err {
            Some(-1)
        } else if self.err_ulps.is_zero() && self.mantissa.is_zero() {
            Some(0)
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> f64 {
        big_to_f64_scaled(&self.mantissa, self.prec)
    }

    /// Decimal rendering with `digits` fractional digits, rounded to nearest.
    pub fn decimal(&self, digits: u32) -> String {
        let pow10 = BigInt::from(10u8).pow(digits);
        let scaled = &self.mantissa * &pow10;
        let denom = BigInt::one() << self.prec;
        let q = div_round_nearest(&scaled, &denom);
        let neg = q.is_negative();
        let q_abs = q.magnitude().clone();
        let ten = BigUint::from(10u8).pow(digits);
        let (int_part, frac_part) = (&q_abs / &ten, &q_abs % &ten);
        let frac_str = format!("{:0>width$}", frac_part.to_string(), width = digits as usize);
        let sign = if neg { "-" } else { "" };
        if digits == 0 {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{frac_str}")
        }
    }
}

fn div_round_nearest(num: &BigInt, den: &BigInt) -> BigInt {
    debug_assert!(den.is_positive());
    let two_num: BigInt = num << 1;
    let q: BigInt = &two_num / den;
    // q = floor-ish(2num/den); round-half-away via (q ± 1)/2
    if q.is_negative() {
        (q - 1) / 2
    } else {
        (q + 1) / 2
    }
}

pub fn big_to_f64_scaled(mantissa: &BigInt, prec: u64) -> f64 {
    let bits = mantissa.bits() as i64;
    if bits <= 1000 {
        return mantissa.to_f64().unwrap_or(f64::NAN) * (-(prec as f64)).exp2();
    }
    let shift = bits - 64;
    let head = (mantissa >> shift).to_f64().unwrap_or(f64::NAN);
    head * ((shift as f64) - prec as f64).exp2()
}

/// ln 2 at the given precision, via 2·atanh(1/3).
fn ln2_fixed(prec: u64) -> Fixed {
    atanh_inv_fraction(1, 3, prec).mul_rational(&Rational::from(BigInt::from(2)))
}

/// atanh(p/q) for 0 < p/q < 1 as a fixed-point series sum.
fn atanh_inv_fraction(p: u64, q: u64, prec: u64) -> Fixed {
    let z = Rational::new(BigInt::from(p), BigInt::from(q));
    atanh_rational(&z, prec)
}

/// atanh(z) = Σ z^{2k+1}/(2k+1), |z| < 1. Error: one ulp per operation plus
/// the truncated tail, which is below one ulp at the stopping point.
fn atanh_rational(z: &Rational, prec: u64) -> Fixed {
    let one = BigInt::one() << prec;
    let z_fixed = div_round_nearest(&(&one * z.numer()), z.denom());
    let zz = div_round_nearest(&(&z_fixed * &z_fixed), &one);
    let mut term = z_fixed.clone();
    let mut sum = z_fixed;
    let mut k: u64 = 1;
    let mut ops: u64 = 2;
    while !term.is_zero() {
        term = div_round_nearest(&(&term * &zz), &one);
        if term.is_zero() {
            break;
        }
        let contrib = div_round_nearest(&term, &BigInt::from(2 * k + 1));
        sum += contrib;
        ops += 3;
        k += 1;
        if k > 4 * prec {
            break;
        }
    }
    Fixed {
        mantissa: sum,
        err_ulps: BigUint::from(ops + 4),
        prec,
    }
}

/// ln of a positive rational at the given binary precision.
///
/// Argument reduction: r·2^-e ∈ [3/4, 3/2), then 2·atanh((x-1)/(x+1)).
pub fn ln_rational(r: &Rational, prec: u64) -> Fixed {
    assert!(r.is_positive(), "ln of a non-positive rational");
    if r.is_one() {
        return Fixed::zero(prec);
    }
    // e = position of the leading bit of r, adjusted so x ∈ [3/4, 3/2)
    let mut e: i64 = r.numer().bits() as i64 - r.denom().bits() as i64;
    let three_halves = Rational::new(BigInt::from(3), BigInt::from(2));
    let three_quarters = Rational::new(BigInt::from(3), BigInt::from(4));
    let pow2 = |k: i64| -> Rational {
        if k >= 0 {
            Rational::from(BigInt::one() << k as u64)
        } else {
            Rational::new(BigInt::one(), BigInt::one() << (-k) as u64)
        }
    };
    let mut x = r * pow2(-e);
    while x >= three_halves {
        x /= Rational::from(BigInt::from(2));
        e += 1;
    }
    while x < three_quarters {
        x *= Rational::from(BigInt::from(2));
        e -= 1;
    }
    let z = (&x - Rational::one()) / (&x + Rational::one());
    let mut result = atanh_rational(&z, prec).mul_rational(&Rational::from(BigInt::from(2)));
    if e != 0 {
        let scaled_ln2 = cached_ln2(prec).mul_rational(&Rational::from(BigInt::from(e)));
        result = result.add(&scaled_ln2);
    }
    result
}

static LN_CACHE: Mutex<Option<HashMap<(Vec<u8>, u64), (BigInt, BigUint)>>> = Mutex::new(None);

fn cached_ln2(prec: u64) -> Fixed {
    cached_ln_biguint(&BigUint::from(2u8), prec)
}

/// ln of a positive integer with memoization; the primes of a scheme repeat
/// across every evaluation, so this is the hot entry point.
pub fn cached_ln_biguint(n: &BigUint, prec: u64) -> Fixed {
    let key = (n.to_bytes_le(), prec);
    {
        let guard = LN_CACHE.lock().unwrap();
        if let Some(map) = guard.as_ref() {
            if let Some((m, e)) = map.get(&key) {
                return Fixed {
                    mantissa: m.clone(),
                    err_ulps: e.clone(),
                    prec,
                };
            }
        }
    }
    let value = if *n == BigUint::from(2u8) {
        ln2_fixed(prec)
    } else {
        ln_rational(
            &Rational::from(BigInt::from_biguint(Sign::Plus, n.clone())),
            prec,
        )
    };
    let mut guard = LN_CACHE.lock().unwrap();
    guard
        .get_or_insert_with(HashMap::new)
        .insert(key, (value.mantissa.clone(), value.err_ulps.clone()));
    value
}

/// (a/b) / value, where `value` is a positive fixed-point number; used to
/// evaluate rationals over log-linear denominators.
pub fn div_rational_by_fixed(num: &Rational, den: &Fixed) -> Fixed {
    assert!(den.mantissa.is_positive());
    let scaled = (num.numer() << (2 * den.prec)) / num.denom();
    let mantissa = div_round_nearest(&scaled, &den.mantissa);
    // relative error of den propagates; bound crudely by err·|result|/|den| + 1
    let res_mag = mantissa.magnitude() + BigUint::one();
    let extra = (&den.err_ulps * &res_mag) / den.mantissa.magnitude() + BigUint::one();
    Fixed {
        mantissa,
        err_ulps: extra + BigUint::one(),
        prec: den.prec,
    }
}

/// a / b for two fixed-point numbers at the same precision (b > 0).
pub fn div_fixed(a: &Fixed, b: &Fixed) -> Fixed {
    assert_eq!(a.prec, b.prec);
    assert!(b.mantissa.is_positive());
    let mantissa = div_round_nearest(&(&a.mantissa << a.prec), &b.mantissa);
    let res_mag = mantissa.magnitude() + BigUint::one();
    let prop = (&a.err_ulps + (&b.err_ulps * &res_mag) / b.mantissa.magnitude()) << 1;
    Fixed {
        mantissa,
        err_ulps: prop + BigUint::from(2u8),
        prec: a.prec,
    }
}
