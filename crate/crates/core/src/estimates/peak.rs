use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_boundary, gradient_unchecked, inner, BlockedVector, SourceSignature};
use crate::scalar::{Scalar, Tolerances};

/// `φ(Z) = exp(−ν ⟨W − Z, N̂(W)⟩)`, stored as `exp(−ν c + ν ⟨Z, N̂⟩)` with the
/// real constant `c = ⟨W, N̂⟩` precomputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PeakFunction<T> {
    pub w: BlockedVector<T>,
    pub unit_normal: BlockedVector<T>,
    pub nu: T,
    offset: T,
}

/// A peak value plus whether the exponent had to be clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakValue<T> {
    pub value: Complex<T>,
    pub clamped: bool,
}

impl<T: Scalar> PeakFunction<T> {
    pub fn new(
        sig: &SourceSignature,
        w: &BlockedVector<T>,
        nu: T,
        tol: &Tolerances<T>,
    ) -> Result<Self> {
        check_boundary(sig, w, tol.boundary)?;
        if !(nu > T::zero()) {
            return Err(Error::Precondition(format!("nu = {nu} must be positive")));
        }
        let n = gradient_unchecked(sig, w);
        let unit_normal = n.scale(T::one() / n.norm());
        let offset = w.inner(&unit_normal).re;
        Ok(PeakFunction {
            w: w.clone(),
            unit_normal,
            nu,
            offset,
        })
    }

    /// `⟨W − Z, N̂(W)⟩`.
    pub fn normalized_inner(&self, z: &[Complex<T>]) -> Complex<T> {
        Complex::new(self.offset, T::zero()) - inner(z, self.unit_normal.data())
    }

    pub fn eval(&self, z: &BlockedVector<T>) -> PeakValue<T> {
        self.eval_slice(z.data())
    }

    pub fn eval_slice(&self, z: &[Complex<T>]) -> PeakValue<T> {
        let mut e = -self.normalized_inner(z) * self.nu;
        let limit = T::lit(T::EXP_CLAMP);
        let clamped = e.re.abs() > limit;
        if clamped {
            e.re = e.re.max(-limit).min(limit);
        }
        PeakValue {
            value: e.exp(),
            clamped,
        }
    }
}
