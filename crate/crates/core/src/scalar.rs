//! Floating-point scalar abstraction shared by the network kernel, models and training.
//!
//! Everything numeric is generic over [`Scalar`]; `f64` is used for all correctness
//! checks, `f32` is available for faster training runs.

use std::fmt::{Debug, Display};
use std::io::{self, Read, Write};
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Width in bytes of the serialized value.
    const WIDTH: u8;
    /// Short name used in checkpoints and configs (`f32` / `f64`).
    const NAME: &'static str;

    fn write_le<W: Write>(self, w: &mut W) -> io::Result<()>;
    fn read_le<R: Read>(r: &mut R) -> io::Result<Self>;

    /// Lossy conversion from an `f64` literal or config value.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 converts to every Scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {
    const WIDTH: u8 = 4;
    const NAME: &'static str = "f32";

    fn write_le<W: Write>(self, w: &mut W) -> io::Result<()> {
        w.write_f32::<LittleEndian>(self)
    }

    fn read_le<R: Read>(r: &mut R) -> io::Result<Self> {
        r.read_f32::<LittleEndian>()
    }
}

impl Scalar for f64 {
    const WIDTH: u8 = 8;
    const NAME: &'static str = "f64";

    fn write_le<W: Write>(self, w: &mut W) -> io::Result<()> {
        w.write_f64::<LittleEndian>(self)
    }

    fn read_le<R: Read>(r: &mut R) -> io::Result<Self> {
        r.read_f64::<LittleEndian>()
    }
}

/// Dot product of two equally sized slices.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Euclidean norm.
#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
