//! Finite discrete nonnegative random variables and their truncated /
//! exceptional moments.
//!
//! A value `x` is *truncated* with respect to a threshold `tau` when
//! `x < tau` and *exceptional* when `x >= tau`. The boundary always counts as
//! exceptional.
//!
//! Two arithmetic backends share one implementation through [`Scalar`]:
//! exact big rationals ([`Rational`]) for the adaptive oracle and tiny-instance
//! tests, and `f64` everywhere speed matters more than exactness.

use std::cmp::Ordering;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Scalar backend for distributions.
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn to_f64(&self) -> f64;

    /// Whether a sum of probabilities is one: exactly for rationals, within
    /// `1e-12` for floats.
    fn is_unit_total(total: &Self) -> bool;
}

impl Scalar for f64 {
    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_unit_total(total: &Self) -> bool {
        (total - 1.0).abs() <= 1e-12
    }
}

impl Scalar for Rational {
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_unit_total(total: &Self) -> bool {
        total.is_one()
    }
}

/// `numer / denom` as an exact rational.
pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Exact rational value of a finite float.
pub fn rational_from_f64(x: f64) -> Rational {
    Rational::from_float(x).expect("finite float")
}

/// Threshold separating truncated from exceptional parts. Always positive.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationThreshold<T = f64>(T);

impl<T: Scalar> TruncationThreshold<T> {
    pub fn new(tau: T) -> Result<Self> {
        if tau > T::zero() {
            Ok(Self(tau))
        } else {
            Err(Error::Validation(format!(
                "truncation threshold must be positive, got {tau:?}"
            )))
        }
    }

    pub fn value(&self) -> &T {
        &self.0
    }
}

/// A finite-support nonnegative random variable.
///
/// The support is kept sorted ascending by value with distinct values and
/// probabilities in `(0, 1]` summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDistribution<T = f64> {
    support: Vec<(T, T)>,
}

pub type ExactDist = DiscreteDistribution<Rational>;

impl<T: Scalar> DiscreteDistribution<T> {
    /// Builds a distribution from `(value, probability)` pairs. Pairs may come
    /// in any order; repeated values are merged.
    pub fn new(pairs: impl IntoIterator<Item = (T, T)>) -> Result<Self> {
        let mut support: Vec<(T, T)> = pairs.into_iter().collect();
        if support.is_empty() {
            return Err(Error::Validation("distribution has empty support".into()));
        }
        for (v, p) in &support {
            if v.partial_cmp(&T::zero()).is_none_or(|o| o == Ordering::Less) {
                return Err(Error::Validation(format!("negative or undefined value {v:?}")));
            }
            if !(p > &T::zero() && p <= &T::one()) {
                return Err(Error::Validation(format!("probability {p:?} outside (0, 1]")));
            }
        }
        support.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("values are comparable"));
        let mut merged: Vec<(T, T)> = Vec::with_capacity(support.len());
        for (v, p) in support {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 = last.1.clone() + p,
                _ => merged.push((v, p)),
            }
        }
        let total = merged
            .iter()
            .fold(T::zero(), |acc, (_, p)| acc + p.clone());
        if !T::is_unit_total(&total) {
            return Err(Error::Validation(format!(
                "probabilities sum to {total:?}, expected 1"
            )));
        }
        Ok(Self { support: merged })
    }

    /// Point mass at `value`.
    pub fn point(value: T) -> Self {
        Self {
            support: vec![(value, T::one())],
        }
    }

    pub fn support(&self) -> &[(T, T)] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn max_value(&self) -> &T {
        &self.support.last().expect("nonempty support").0
    }

    pub fn is_deterministic(&self) -> bool {
        self.support.len() == 1
    }

    pub fn mean(&self) -> T {
        self.support
            .iter()
            .fold(T::zero(), |acc, (v, p)| acc + v.clone() * p.clone())
    }

    /// `E[X * 1{X < tau}]`.
    pub fn truncated_mean(&self, tau: &TruncationThreshold<T>) -> T {
        self.scaled_truncated_mean(&T::one(), tau.value())
    }

    /// `E[X * 1{X >= tau}]`.
    pub fn exceptional_mean(&self, tau: &TruncationThreshold<T>) -> T {
        self.scaled_exceptional_mean(&T::one(), tau.value())
    }

    /// `E[fX * 1{fX < tau}]` for a nonnegative factor `f`, without building the
    /// scaled distribution.
    pub fn scaled_truncated_mean(&self, factor: &T, tau: &T) -> T {
        let mut acc = T::zero();
        for (v, p) in &self.support {
            let x = factor.clone() * v.clone();
            if &x < tau {
                acc = acc + x * p.clone();
            }
        }
        acc
    }

    /// `E[fX * 1{fX >= tau}]` for a nonnegative factor `f`.
    pub fn scaled_exceptional_mean(&self, factor: &T, tau: &T) -> T {
        let mut acc = T::zero();
        for (v, p) in &self.support {
            let x = factor.clone() * v.clone();
            if &x >= tau {
                acc = acc + x * p.clone();
            }
        }
        acc
    }

    /// Multiplies every support value by `factor`; probabilities unchanged.
    ///
    /// Panics if `factor` is not positive.
    pub fn scale(&self, factor: &T) -> Self {
        assert!(factor > &T::zero(), "scale factor must be positive");
        Self {
            support: self
                .support
                .iter()
                .map(|(v, p)| (factor.clone() * v.clone(), p.clone()))
                .collect(),
        }
    }

    /// Support value at cumulative probability `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> &T {
        let mut cum = 0.0;
        for (v, p) in &self.support {
            cum += p.to_f64();
            if u < cum {
                return v;
            }
        }
        self.max_value()
    }

    /// Draws one value using the caller's generator.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let u: f64 = rng.random();
        self.quantile(u).clone()
    }

    pub fn to_float(&self) -> DiscreteDistribution<f64> {
        DiscreteDistribution {
            support: self
                .support
                .iter()
                .map(|(v, p)| (v.to_f64(), p.to_f64()))
                .collect(),
        }
    }
}

impl ExactDist {
    /// `value * Ber(p)`, the two-point law `{(0, 1-p), (value, p)}`.
    pub fn scaled_bernoulli(value: Rational, p: Rational) -> Result<Self> {
        if p.is_one() {
            return Ok(Self::point(value));
        }
        Self::new([(Rational::zero(), Rational::one() - p.clone()), (value, p)])
    }

    pub fn is_nonnegative_rational(&self) -> bool {
        self.support.iter().all(|(v, _)| !v.is_negative())
    }
}
