use std::ops::Range;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A complex vector together with its block decomposition.
///
/// Serializes as `{"data": [[re, im], ...], "sizes": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BlockedVector<T> {
    data: Vec<Complex<T>>,
    sizes: Vec<usize>,
}

impl<T: Scalar> BlockedVector<T> {
    pub fn new(data: Vec<Complex<T>>, sizes: Vec<usize>) -> Result<Self> {
        let expected: usize = sizes.iter().sum();
        if expected != data.len() {
            return Err(Error::Dimension {
                expected,
                got: data.len(),
            });
        }
        Ok(BlockedVector { data, sizes })
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        let n = sizes.iter().sum();
        BlockedVector {
            data: vec![Complex::new(T::zero(), T::zero()); n],
            sizes: sizes.to_vec(),
        }
    }

    /// Builds a vector from real parts only.
    pub fn from_real(values: &[f64], sizes: &[usize]) -> Result<Self> {
        let data = values
            .iter()
            .map(|&x| Complex::new(T::lit(x), T::zero()))
            .collect();
        Self::new(data, sizes.to_vec())
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex<T>> {
        self.data
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn block_range(&self, k: usize) -> Range<usize> {
        let start: usize = self.sizes[..k].iter().sum();
        start..start + self.sizes[k]
    }

    pub fn block(&self, k: usize) -> &[Complex<T>] {
        &self.data[self.block_range(k)]
    }

    pub fn block_mut(&mut self, k: usize) -> &mut [Complex<T>] {
        let range = self.block_range(k);
        &mut self.data[range]
    }

    pub fn block_norm_sqr(&self, k: usize) -> T {
        norm_sqr(self.block(k))
    }

    pub fn norm_sqr(&self) -> T {
        norm_sqr(&self.data)
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|z| z * c)
    }

    pub fn scale_complex(&self, c: Complex<T>) -> Self {
        self.map(|z| z * c)
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        BlockedVector {
            data: self.data.iter().map(|&z| f(z)).collect(),
            sizes: self.sizes.clone(),
        }
    }

    /// `self − other`, panicking on layout mismatch.
    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    /// `(1 − t)·self + t·other`.
    pub fn lerp(&self, other: &Self, t: T) -> Self {
        let s = T::one() - t;
        self.zip(other, |a, b| a * s + b * t)
    }

    fn zip(&self, other: &Self, f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>) -> Self {
        assert_eq!(self.sizes, other.sizes, "block layouts differ");
        BlockedVector {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            sizes: self.sizes.clone(),
        }
    }

    /// Hermitian product `Σ a^γ conj(b^γ)`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        inner(&self.data, &other.data)
    }

    pub fn distance(&self, other: &Self) -> T {
        self.sub(other).norm()
    }

    pub fn cast<U: Scalar>(&self) -> BlockedVector<U> {
        BlockedVector {
            data: self
                .data
                .iter()
                .map(|z| Complex::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64())))
                .collect(),
            sizes: self.sizes.clone(),
        }
    }
}

pub fn norm_sqr<T: Scalar>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// Hermitian product `Σ a^γ conj(b^γ)` on raw slices.
pub fn inner<T: Scalar>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| {
            acc + x * y.conj()
        })
}
