//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt;

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Real floating-point scalar (`f32` or `f64`).
///
/// Transcendental functions come from [`RealField`]; conversions come from
/// `num-traits`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + fmt::Display + Send + Sync + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Machine epsilon.
    fn epsilon() -> Self;

    /// One standard normal draw.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One draw from `Gamma(shape, 1)`; `shape > 0`.
    fn standard_gamma<R: Rng + ?Sized>(shape: Self, rng: &mut R) -> Self;
}

impl Real for f32 {
    fn epsilon() -> Self {
        f32::EPSILON
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn standard_gamma<R: Rng + ?Sized>(shape: Self, rng: &mut R) -> Self {
        Gamma::new(shape, 1.0)
            .expect("positive gamma shape")
            .sample(rng)
    }
}

impl Real for f64 {
    fn epsilon() -> Self {
        f64::EPSILON
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn standard_gamma<R: Rng + ?Sized>(shape: Self, rng: &mut R) -> Self {
        Gamma::new(shape, 1.0)
            .expect("positive gamma shape")
            .sample(rng)
    }
}

/// `exp(j x)`.
#[inline]
pub fn cis<T: Real>(x: T) -> Complex<T> {
    Complex::new(x.cos(), x.sin())
}

/// Circularly-symmetric complex Gaussian with unit variance, `E|z|^2 = 1`.
#[inline]
pub fn complex_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let s = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    Complex::new(T::standard_normal(rng) * s, T::standard_normal(rng) * s)
}

/// Pairwise summation in the order given. Reproducible for a fixed input order.
pub fn pairwise_sum<T: Real>(values: &[T]) -> T {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().fold(T::zero(), |acc, &v| acc + v);
    }
    let (lo, hi) = values.split_at(values.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}
