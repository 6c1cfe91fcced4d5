//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All pressure, entropy and cycle-mean computations are written against
//! [`Scalar`] so they run unchanged on `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar used for potentials, Birkhoff sums and pressures.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    /// Lossy conversion from a count.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable in every Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance floor for iterative methods: requested tolerances below a
    /// few ulps of one are unreachable in this type.
    fn tolerance(requested: f64) -> Self {
        let floor = Self::epsilon() * Self::of(64.0);
        Self::of(requested).max(floor)
    }
}

impl<T> Scalar for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

/// Kahan–Babuška (Neumaier) compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum<S> {
    sum: S,
    carry: S,
}

impl<S: Scalar> CompensatedSum<S> {
    pub fn new() -> Self {
        Self { sum: S::zero(), carry: S::zero() }
    }

    pub fn add(&mut self, x: S) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> S {
        self.sum + self.carry
    }
}

impl<S: Scalar> FromIterator<S> for CompensatedSum<S> {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of a sequence.
pub fn kahan_sum<S: Scalar, I: IntoIterator<Item = S>>(xs: I) -> S {
    xs.into_iter().collect::<CompensatedSum<S>>().value()
}

/// Streaming `ln Σ exp(x_i)`. Order of insertion is the reduction order, so
/// callers that need reproducible results feed terms in a fixed order.
#[derive(Clone, Copy, Debug)]
pub struct LogSumExp<S> {
    max: S,
    scaled: CompensatedSum<S>,
}

impl<S: Scalar> Default for LogSumExp<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> LogSumExp<S> {
    pub fn new() -> Self {
        Self { max: S::neg_infinity(), scaled: CompensatedSum::new() }
    }

    pub fn add(&mut self, x: S) {
        if x == S::neg_infinity() {
            return;
        }
        if x <= self.max {
            self.scaled.add((x - self.max).exp());
        } else {
            let rescale = if self.max == S::neg_infinity() {
                S::zero()
            } else {
                (self.max - x).exp()
            };
            let prev = self.scaled.value();
            self.scaled = CompensatedSum::new();
            self.scaled.add(prev * rescale);
            self.scaled.add(S::one());
            self.max = x;
        }
    }

    pub fn merge(&mut self, other: &Self) {
        if other.max == S::neg_infinity() {
            return;
        }
        let v = other.value();
        self.add(v);
    }

    /// `ln Σ exp(x_i)`, or `-∞` for an empty sum.
    pub fn value(&self) -> S {
        if self.max == S::neg_infinity() {
            S::neg_infinity()
        } else {
            self.max + self.scaled.value().ln()
        }
    }
}

/// `ln Σ exp(x_i)` of a sequence.
pub fn log_sum_exp<S: Scalar, I: IntoIterator<Item = S>>(xs: I) -> S {
    let mut acc = LogSumExp::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// `ln(e^a + e^b)`.
pub fn log_add<S: Scalar>(a: S, b: S) -> S {
    if a == S::neg_infinity() {
        return b;
    }
    if b == S::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
