//! Exact rational arithmetic helpers: parsing, formatting, integer roots and
//! prime factorization of the rationals that appear in substitution schemes.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational, always kept in lowest terms by `num`.
pub type Rational = num_rational::BigRational;

/// Errors raised while reading rational literals.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RationalParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid integer in rational literal: {0:?}")]
    BadInteger(String),
    #[error("zero denominator in rational literal")]
    ZeroDenominator,
    #[error("rational literal {0:?} is not in lowest terms")]
    NotReduced(String),
}

/// Parses `"p/q"` or `"p"` into a rational. The literal must be in lowest
/// terms with a positive denominator, matching the scheme file format.
pub fn parse_rational(s: &str) -> Result<Rational, RationalParseError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(RationalParseError::Empty);
    }
    let (num_s, den_s) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let num: BigInt = num_s
        .parse()
        .map_err(|_| RationalParseError::BadInteger(num_s.to_string()))?;
    let den: BigInt = den_s
        .parse()
        .map_err(|_| RationalParseError::BadInteger(den_s.to_string()))?;
    if den.is_zero() {
        return Err(RationalParseError::ZeroDenominator);
    }
    if den.is_negative() || (num.gcd(&den) != BigInt::one() && !num.is_zero()) {
        return Err(RationalParseError::NotReduced(s.to_string()));
    }
    Ok(Rational::new(num, den))
}

/// Formats a rational as `"p/q"`, or `"p"` when the denominator is 1.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_from_ints(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// `r^k` for signed integer exponents.
pub fn pow_i32(r: &Rational, k: i32) -> Rational {
    if k >= 0 {
        r.pow(k)
    } else {
        r.pow(k).clone()
    }
}

/// Exact integer `n`-th root: returns `Some(r)` iff `r^n == x`.
pub fn nth_root_exact(x: &BigUint, n: u32) -> Option<BigUint> {
    if x.is_zero() || x.is_one() || n == 1 {
        return Some(x.clone());
    }
    let r = x.nth_root(n);
    if r.pow(n) == *x {
        Some(r)
    } else {
        None
    }
}

/// Exact rational `d`-th root, when one exists.
pub fn rational_nth_root(r: &Rational, n: u32) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let num = nth_root_exact(&r.numer().magnitude().clone(), n)?;
    let den = nth_root_exact(&r.denom().magnitude().clone(), n)?;
    Some(Rational::new(BigInt::from(num), BigInt::from(den)))
}

/// Prime factorization of a positive integer by trial division plus Pollard's
/// rho for the occasional large cofactor. Scheme scales are small rationals,
/// so trial division almost always finishes the job.
pub fn factorize(n: &BigUint) -> Vec<(BigUint, u32)> {
    assert!(!n.is_zero(), "cannot factorize zero");
    let mut factors: Vec<(BigUint, u32)> = Vec::new();
    let mut m = n.clone();
    let push = |p: BigUint, e: u32, factors: &mut Vec<(BigUint, u32)>| {
        if let Some(last) = factors.iter_mut().find(|(q, _)| *q == p) {
            last.1 += e;
        } else {
            factors.push((p, e));
        }
    };
    for small in 2u64..=4096 {
        let p = BigUint::from(small);
        if &p * &p > m {
            break;
        }
        let mut e = 0;
        while (&m % &p).is_zero() {
            m /= &p;
            e += 1;
        }
        if e > 0 {
            push(p, e, &mut factors);
        }
    }
    if !m.is_one() {
        let mut stack = vec![m];
        while let Some(c) = stack.pop() {
            if is_probable_prime(&c) {
                push(c, 1, &mut factors);
            } else {
                let d = pollard_rho(&c);
                stack.push(&c / &d);
                stack.push(d);
            }
        }
    }
    factors.sort_by(|a, b| a.0.cmp(&b.0));
    factors
}

/// Miller–Rabin with a deterministic witness set for < 2^64 and a fixed
/// random-free witness list above that (probabilistic but ample here).
pub fn is_probable_prime(n: &BigUint) -> bool {
    if *n < BigUint::from(2u8) {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let a = BigUint::from(a) % n;
        if a.is_zero() {
            continue;
        }
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_rho(n: &BigUint) -> BigUint {
    let two = BigUint::from(2u8);
    if (n % &two).is_zero() {
        return two;
    }
    let mut c = BigUint::one();
    loop {
        let mut x = BigUint::from(2u8);
        let mut y = BigUint::from(2u8);
        let mut d = BigUint::one();
        let f = |v: &BigUint| (v * v + &c) % n;
        while d.is_one() {
            x = f(&x);
            y = f(&f(&y));
            let diff = if x > y { &x - &y } else { &y - &x };
            if diff.is_zero() {
                break;
            }
            d = diff.gcd(n);
        }
        if !d.is_one() && d != *n {
            return d;
        }
        c += 1u8;
    }
}

/// Converts a rational to `f64` without an intermediate overflow for large
/// numerators/denominators.
pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let num_bits = r.numer().bits() as i64;
        let den_bits = r.denom().bits() as i64;
        let shift = (num_bits.max(den_bits) - 60).max(0);
        let num = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let den = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        num / den
    })
}
