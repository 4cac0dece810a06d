//! Closed-form asymptotic tile densities. For an irreducible incommensurable
//! scheme the number of type-j tiles with scale in [a,b] inside F_t(T_i)
//! grows like φ_{j,[a,b]}·e^{dt}, with
//!
//!   φ_{j,[a,b]} = Σ_h c_{hj,[a,b]} q_h,
//!   c_{hj,[a,b]} = (1/d) Σ_k α^d (η^{-d} - μ^{-d}),
//!   η = max(a, α),  μ = max(b, α),
//!
//! where q_h comes from the rank-one matrix Q. The covered-volume analogue ν
//! replaces the coefficient by Σ_k α^d ln(μ/η). Everything is assembled
//! exactly: numerators are rationals (or log-linear values for ν) over the
//! common log-linear denominator of Q.

use crate::bigfloat::{div_fixed, div_rational_by_fixed};
use crate::exact::{format_rational, Rational};
use crate::graph::{compute_q, GraphError, QMatrix};
use crate::loglin::{decimal_digits_to_bits, LogLinear};
use crate::scheme::Scheme;
use num_traits::{One, Signed, Zero};

#[derive(Debug, thiserror::Error)]
pub enum DensityError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("scheme must be normalized (unit prototile volumes)")]
    NotNormalized,
    #[error("invalid scale interval [{a}, {b}]: need 0 <= a < b <= 1")]
    BadInterval { a: String, b: String },
    #[error("prototile {0} is never produced by any rule")]
    TypeNeverProduced(usize),
    #[error("interval of length ln({len}) at offset ln({offset}) exceeds the edge length ln({edge})")]
    IntervalExceedsEdge {
        offset: String,
        len: String,
        edge: String,
    },
}

/// Which endpoints of a scale interval are included. The density formulas
/// coincide for every choice; censuses distinguish them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IntervalKind {
    #[default]
    Closed,
    LeftOpen,
    RightOpen,
}

/// A scale window 0 <= a < b <= 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaleInterval {
    pub a: Rational,
    pub b: Rational,
    pub kind: IntervalKind,
}

impl ScaleInterval {
    pub fn new(a: Rational, b: Rational) -> Result<Self, DensityError> {
        Self::with_kind(a, b, IntervalKind::Closed)
    }

    pub fn with_kind(a: Rational, b: Rational, kind: IntervalKind) -> Result<Self, DensityError> {
        if a.is_negative() || a >= b || b > Rational::one() {
            return Err(DensityError::BadInterval {
                a: format_rational(&a),
                b: format_rational(&b),
            });
        }
        Ok(ScaleInterval { a, b, kind })
    }

    /// Exact membership, honoring endpoint inclusion.
    pub fn contains(&self, scale: &Rational) -> bool {
        let lower = match self.kind {
            IntervalKind::LeftOpen => scale > &self.a,
            _ => scale >= &self.a,
        };
        let upper = match self.kind {
            IntervalKind::RightOpen => scale < &self.b,
            _ => scale <= &self.b,
        };
        lower && upper
    }
}

impl std::fmt::Display for ScaleInterval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (lo, hi) = match self.kind {
            IntervalKind::Closed => ("[", "]"),
            IntervalKind::LeftOpen => ("(", "]"),
            IntervalKind::RightOpen => ("[", ")"),
        };
        write!(
            f,
            "{lo}{}, {}{hi}",
            format_rational(&self.a),
            format_rational(&self.b)
        )
    }
}

/// Numerator of a [`FreqValue`]: rational for tile counts, log-linear for
/// covered volumes.
#[derive(Debug, Clone, PartialEq)]
pub enum FreqNumerator {
    Rational(Rational),
    LogLinear(LogLinear),
}

/// An exact asymptotic density: numerator over the log-linear denominator of
/// Q. Values sharing a scheme share the denominator, so equality and sums
/// are decided exactly on numerators.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqValue {
    pub numerator: FreqNumerator,
    pub denominator: LogLinear,
}

impl FreqValue {
    pub fn rational_numerator(&self) -> Option<&Rational> {
        match &self.numerator {
            FreqNumerator::Rational(r) => Some(r),
            FreqNumerator::LogLinear(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        let den = self.denominator.to_f64();
        match &self.numerator {
            FreqNumerator::Rational(r) => crate::exact::rational_to_f64(r) / den,
            FreqNumerator::LogLinear(l) => l.to_f64() / den,
        }
    }

    /// Decimal evaluation with `digits` fractional digits.
    pub fn decimal(&self, digits: u32) -> String {
        let prec = decimal_digits_to_bits(digits);
        let den = self.denominator.eval_fixed(prec);
        match &self.numerator {
            FreqNumerator::Rational(r) => div_rational_by_fixed(r, &den).decimal(digits),
            FreqNumerator::LogLinear(l) => {
                div_fixed(&l.eval_fixed(prec), &den).decimal(digits)
            }
        }
    }

    /// Exact sum of two values over the same denominator.
    pub fn add(&self, other: &FreqValue) -> Option<FreqValue> {
        if self.denominator != other.denominator {
            return None;
        }
        let numerator = match (&self.numerator, &other.numerator) {
            (FreqNumerator::Rational(x), FreqNumerator::Rational(y)) => {
                FreqNumerator::Rational(x + y)
            }
            (FreqNumerator::LogLinear(x), FreqNumerator::LogLinear(y)) => {
                FreqNumerator::LogLinear(x + y)
            }
            _ => return None,
        };
        Some(FreqValue {
            numerator,
            denominator: self.denominator.clone(),
        })
    }
}

impl std::fmt::Display for FreqValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.numerator {
            FreqNumerator::Rational(r) => {
                write!(f, "({}) / ({})", format_rational(r), self.denominator)
            }
            FreqNumerator::LogLinear(l) => write!(f, "({}) / ({})", l, self.denominator),
        }
    }
}

/// Smallest rule scale that produces a tile of type j, over all parents.
/// The interval of legal scales of type j is (β_j^min, 1].
pub fn beta_min(scheme: &Scheme, j: usize) -> Result<Rational, DensityError> {
    let mut best: Option<Rational> = None;
    for rule in &scheme.rules {
        for child in rule {
            if child.child_type == j && best.as_ref().map(|b| child.scale < *b).unwrap_or(true) {
                best = Some(child.scale.clone());
            }
        }
    }
    best.ok_or(DensityError::TypeNeverProduced(j))
}

/// Precomputed density context for one scheme: Q plus dimension data.
/// Construction fails on non-normalized, reducible or commensurable input,
/// with the commensurability generator attached to the refusal.
#[derive(Debug, Clone)]
pub struct DensityModel {
    pub q: QMatrix,
    dim: u32,
    scheme: Scheme,
}

impl DensityModel {
    pub fn new(scheme: &Scheme) -> Result<Self, DensityError> {
        if !scheme.is_normalized() {
            return Err(DensityError::NotNormalized);
        }
        let q = compute_q(scheme)?;
        Ok(DensityModel {
            q,
            dim: scheme.dim as u32,
            scheme: scheme.clone(),
        })
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    fn zero_freq(&self) -> FreqValue {
        FreqValue {
            numerator: FreqNumerator::Rational(Rational::zero()),
            denominator: self.q.denominator.clone(),
        }
    }

    /// The count coefficient c_{hj,I}; exact.
    pub fn count_coefficient(&self, h: usize, j: usize, interval: &ScaleInterval) -> Rational {
        let d = self.dim as i32;
        let inv_d = Rational::new(1.into(), (d as i64).into());
        let mut acc = Rational::zero();
        for child in self.scheme.rule(h) {
            if child.child_type != j {
                continue;
            }
            let alpha = &child.scale;
            let eta = if &interval.a > alpha {
                interval.a.clone()
            } else {
                alpha.clone()
            };
            let mu = if &interval.b > alpha {
                interval.b.clone()
            } else {
                alpha.clone()
            };
            acc += alpha.pow(d) * (eta.pow(-d) - mu.pow(-d));
        }
        acc * inv_d
    }

    /// The volume coefficient d_{hj,I} = Σ_k α^d ln(μ/η); exact log-linear.
    pub fn volume_coefficient(&self, h: usize, j: usize, interval: &ScaleInterval) -> LogLinear {
        let d = self.dim as i32;
        let mut acc = LogLinear::zero();
        for child in self.scheme.rule(h) {
            if child.child_type != j {
                continue;
            }
            let alpha = &child.scale;
            let eta = if &interval.a > alpha {
                interval.a.clone()
            } else {
                alpha.clone()
            };
            let mu = if &interval.b > alpha {
                interval.b.clone()
            } else {
                alpha.clone()
            };
            if eta == mu {
                continue;
            }
            let ratio = mu / eta;
            acc = &acc + &LogLinear::ln_of(&ratio).scale(&alpha.pow(d));
        }
        acc
    }

    /// φ_{j,I}: asymptotic count of type-j tiles with scale in I, per unit
    /// inflated volume.
    pub fn phi(&self, j: usize, interval: &ScaleInterval) -> FreqValue {
        let mut num = Rational::zero();
        for h in 1..=self.scheme.prototile_count() {
            num += self.count_coefficient(h, j, interval) * self.q.q_numerator(h);
        }
        FreqValue {
            numerator: FreqNumerator::Rational(num),
            denominator: self.q.denominator.clone(),
        }
    }

    /// φ over the whole legal interval (β_j^min, 1]: the total type-j rate.
    pub fn phi_total_type(&self, j: usize) -> Result<FreqValue, DensityError> {
        let beta = beta_min(&self.scheme, j)?;
        if beta == Rational::one() {
            return Ok(self.zero_freq());
        }
        Ok(self.phi(j, &ScaleInterval::with_kind(beta, Rational::one(), IntervalKind::LeftOpen)?))
    }

    /// ν_{j,I}: asymptotic fraction of volume covered by type-j tiles with
    /// scale in I. The numerator is itself log-linear; exact assertions live
    /// at the coefficient level and final values are numeric.
    pub fn nu(&self, j: usize, interval: &ScaleInterval) -> FreqValue {
        let mut num = LogLinear::zero();
        for h in 1..=self.scheme.prototile_count() {
            let coeff = self.volume_coefficient(h, j, interval);
            num = &num + &coeff.scale(self.q.q_numerator(h));
        }
        FreqValue {
            numerator: FreqNumerator::LogLinear(num),
            denominator: self.q.denominator.clone(),
        }
    }

    pub fn nu_total_type(&self, j: usize) -> Result<FreqValue, DensityError> {
        let beta = beta_min(&self.scheme, j)?;
        if beta == Rational::one() {
            return Ok(self.zero_freq());
        }
        Ok(self.nu(j, &ScaleInterval::with_kind(beta, Rational::one(), IntervalKind::LeftOpen)?))
    }

    /// φ_{j,I} / Σ_j φ_{j,total}: the denominators cancel, so the relative
    /// share of type-j tiles with scale in I is an exact rational.
    pub fn relative_fraction(
        &self,
        j: usize,
        interval: &ScaleInterval,
    ) -> Result<Rational, DensityError> {
        let part = self.phi(j, interval);
        let mut total = Rational::zero();
        for jj in 1..=self.scheme.prototile_count() {
            let t = self.phi_total_type(jj)?;
            total += t.rational_numerator().expect("phi numerators are rational");
        }
        Ok(part.rational_numerator().unwrap() / total)
    }

    /// Rate of metric paths terminating on a sub-interval of an edge: the
    /// interval starts ln(offset_x) from the edge's initial vertex and has
    /// length ln(length_y). For exact inputs the prefactor is rational:
    /// x^{-d}·(1 - y^{-d})/d · q_h.
    pub fn edge_interval_rate(
        &self,
        edge: &crate::graph::GraphEdge,
        offset_x: &Rational,
        length_y: &Rational,
    ) -> Result<FreqValue, DensityError> {
        // containment in the edge: x·y ≤ 1/α
        let end = offset_x * length_y;
        if &end * &edge.scale > Rational::one() {
            return Err(DensityError::IntervalExceedsEdge {
                offset: format_rational(offset_x),
                len: format_rational(length_y),
                edge: format_rational(&(Rational::one() / &edge.scale)),
            });
        }
        let d = self.dim as i32;
        let inv_d = Rational::new(1.into(), (d as i64).into());
        let factor =
            offset_x.pow(-d) * (Rational::one() - length_y.pow(-d)) * inv_d;
        let num = factor * self.q.q_numerator(edge.from);
        Ok(FreqValue {
            numerator: FreqNumerator::Rational(num),
            denominator: self.q.denominator.clone(),
        })
    }
}
