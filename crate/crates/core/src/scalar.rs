//! Floating point abstraction for the precision-generic parts of the crate.

use nalgebra as na;
use num_traits as nt;

/// f32 or f64.
pub trait Real:
    na::RealField + Copy + Default + nt::FromPrimitive + nt::ToPrimitive + Send + Sync + 'static
{
    /// Lossy conversion from an f64 literal.
    fn c(x: f64) -> Self;
    fn to_f64(self) -> f64;
    /// Machine epsilon as f64.
    fn eps() -> f64;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn c(x: f64) -> Self {
                x as $t
            }
            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }
            #[inline]
            fn eps() -> f64 {
                <$t>::EPSILON as f64
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// |z| without requiring `num_traits::Float`.
#[inline]
pub fn cabs<T: Real>(z: num_complex::Complex<T>) -> T {
    z.re.hypot(z.im)
}

/// |z|².
#[inline]
pub fn cabs2<T: Real>(z: num_complex::Complex<T>) -> T {
    z.re * z.re + z.im * z.im
}

/// e^{iθ}.
#[inline]
pub fn cis<T: Real>(theta: T) -> num_complex::Complex<T> {
    num_complex::Complex::new(theta.cos(), theta.sin())
}

/// arg z.
#[inline]
pub fn carg<T: Real>(z: num_complex::Complex<T>) -> T {
    z.im.atan2(z.re)
}
