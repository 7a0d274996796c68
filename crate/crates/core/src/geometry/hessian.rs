//! Real Hessian form `Q`, the Taylor mean-value point, and degenerate partners.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{check_boundary, inner, inner_wz_unchecked, rho_unchecked, BlockedVector, SourceSignature};
use crate::error::{Error, Result};
use crate::scalar::{Scalar, Tolerances};

/// `Q_Z(v) = Re Σ ρ_{z^γ z^δ} v^γ v^δ + Σ ρ_{z^γ z̄^δ} v^γ v̄^δ`, assembled
/// entry by entry from the complex second derivatives of `ρ`.
pub fn hessian_q<T: Scalar>(
    sig: &SourceSignature,
    z: &BlockedVector<T>,
    v: &BlockedVector<T>,
) -> Result<T> {
    sig.check_dim(z)?;
    sig.check_dim(v)?;
    let zero = Complex::new(T::zero(), T::zero());
    let mut total = T::zero();
    for k in 0..=sig.s() {
        let zb = z.block(k);
        let vb = v.block(k);
        let a = sig.exponent(k);
        let af = T::lit(a as f64);
        let sk = z.block_norm_sqr(k);
        let (c2, c1) = if a == 1 {
            (T::zero(), T::one())
        } else {
            (
                af * (af - T::one()) * sk.powi(a as i32 - 2),
                af * sk.powi(a as i32 - 1),
            )
        };
        let mut holo = zero;
        let mut mixed = zero;
        for g in 0..zb.len() {
            for d in 0..zb.len() {
                let zz = zb[g].conj() * zb[d].conj() * c2;
                let mut zzbar = zb[g].conj() * zb[d] * c2;
                if g == d {
                    zzbar = zzbar + Complex::new(c1, T::zero());
                }
                holo = holo + zz * vb[g] * vb[d];
                mixed = mixed + zzbar * vb[g] * vb[d].conj();
            }
        }
        total += holo.re + mixed.re;
    }
    Ok(total)
}

/// Block-wise closed form of `Q`:
/// `Σ_k [2α_k(α_k−1) S_k^{α_k−2} (Re⟨v_(k), z_(k)⟩)² + α_k S_k^{α_k−1} ‖v_(k)‖²] + ‖v_(s+1)‖²`.
pub fn hessian_q_closed<T: Scalar>(
    sig: &SourceSignature,
    z: &BlockedVector<T>,
    v: &BlockedVector<T>,
) -> Result<T> {
    sig.check_dim(z)?;
    sig.check_dim(v)?;
    Ok(q_closed_unchecked(sig, z, v))
}

fn q_closed_unchecked<T: Scalar>(
    sig: &SourceSignature,
    z: &BlockedVector<T>,
    v: &BlockedVector<T>,
) -> T {
    let mut total = v.block_norm_sqr(sig.s());
    for (k, &a) in sig.alpha().iter().enumerate() {
        let af = T::lit(a as f64);
        let sk = z.block_norm_sqr(k);
        let re = inner(v.block(k), z.block(k)).re;
        total += T::lit(2.0) * af * (af - T::one()) * sk.powi(a as i32 - 2) * re * re
            + af * sk.powi(a as i32 - 1) * v.block_norm_sqr(k);
    }
    total
}

/// `g(t) = 2 Re⟨W − Z, N(W)⟩ − Q_{(1−t)W + tZ}(W − Z)`.
pub fn mean_value_residual<T: Scalar>(
    sig: &SourceSignature,
    w: &BlockedVector<T>,
    z: &BlockedVector<T>,
    t: T,
) -> T {
    let lhs = T::lit(2.0) * inner_wz_unchecked(sig, w, z).re;
    lhs - q_closed_unchecked(sig, &w.lerp(z, t), &w.sub(z))
}

/// Finds `t0 ∈ (0,1)` with `2 Re⟨W − Z, N(W)⟩ = Q_{(1−t0)W + t0 Z}(W − Z)`.
///
/// The left side is a weighted average of `Q` along the chord, so `g` either
/// vanishes identically or changes sign; a grid scan brackets a sign change
/// and bisection refines it.
pub fn find_t0_mean_value<T: Scalar>(
    sig: &SourceSignature,
    w: &BlockedVector<T>,
    z: &BlockedVector<T>,
    tol: &Tolerances<T>,
) -> Result<T> {
    sig.check_dim(z)?;
    check_boundary(sig, w, tol.boundary)?;
    check_boundary(sig, z, tol.boundary)?;
    if w.distance(z) == T::zero() {
        return Err(Error::Precondition("W and Z must differ".into()));
    }
    let accept = T::lit(10.0) * tol.boundary;
    let g = |t: T| mean_value_residual(sig, w, z, t);
    let mut profile = Vec::new();
    for n in [64usize, 512, 4096] {
        profile.clear();
        let nf = T::count(n);
        let mut prev_t = T::count(1) / nf;
        let mut prev_g = g(prev_t);
        profile.push(prev_g.as_f64());
        if prev_g.abs() < accept {
            return Ok(prev_t);
        }
        for j in 2..n {
            let t = T::count(j) / nf;
            let gt = g(t);
            profile.push(gt.as_f64());
            if gt.abs() < accept {
                return Ok(t);
            }
            if (gt > T::zero()) != (prev_g > T::zero()) {
                let root = bisect(&g, prev_t, t, prev_g);
                if g(root).abs() < accept {
                    return Ok(root);
                }
            }
            prev_t = t;
            prev_g = gt;
        }
    }
    Err(Error::Numerical {
        message: "no mean-value root bracketed on (0, 1)".into(),
        residuals: profile,
    })
}

fn bisect<T: Scalar>(g: &impl Fn(T) -> T, mut lo: T, mut hi: T, g_lo: T) -> T {
    let lo_positive = g_lo > T::zero();
    let two = T::lit(2.0);
    for _ in 0..200 {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == T::zero() {
            return mid;
        }
        if (gm > T::zero()) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / two
}

/// A boundary point together with the blocks annihilated at the chord midpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DegenerateSpec<T> {
    pub w: BlockedVector<T>,
    /// 0-based indices of the annihilated weighted blocks.
    pub blocks: Vec<usize>,
    pub t0: T,
    /// Number of weighted blocks left untouched.
    pub ell: usize,
}

/// Builds the partner `Z` whose chord from `W` makes `Q` vanish.
///
/// Solves `Σ_{k∈S} [((1−t)/t)^{2α_k} − 1] ‖w_(k)‖^{2α_k} = 0` by bisection,
/// then flips the selected blocks by the factor `(t0 − 1)/t0`.
pub fn degenerate_partner<T: Scalar>(
    sig: &SourceSignature,
    w: &BlockedVector<T>,
    blocks: &[usize],
    tol: &Tolerances<T>,
) -> Result<(DegenerateSpec<T>, BlockedVector<T>)> {
    check_boundary(sig, w, tol.boundary)?;
    if blocks.is_empty() {
        return Err(Error::Precondition("degenerate block set is empty".into()));
    }
    let mut sorted = blocks.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != blocks.len() {
        return Err(Error::Precondition("degenerate block set has repeats".into()));
    }
    for &k in &sorted {
        if k >= sig.s() {
            return Err(Error::Precondition(format!(
                "block {k} is not a weighted block"
            )));
        }
        if w.block_norm_sqr(k) == T::zero() {
            return Err(Error::Precondition(format!("block {k} of W vanishes")));
        }
    }
    let weights: Vec<(u32, T)> = sorted
        .iter()
        .map(|&k| {
            let a = sig.exponent(k);
            (a, w.block_norm_sqr(k).powi(a as i32))
        })
        .collect();
    let residual = |t: T| -> T {
        let ratio = (T::one() - t) / t;
        weights
            .iter()
            .map(|&(a, x)| (ratio.powi(2 * a as i32) - T::one()) * x)
            .fold(T::zero(), |acc, v| acc + v)
    };
    let lo = T::lit(1e-3);
    let hi = T::one() - lo;
    let t0 = bisect(&residual, lo, hi, residual(lo));

    let factor = (t0 - T::one()) / t0;
    let mut z = w.clone();
    for &k in &sorted {
        for x in z.block_mut(k) {
            *x = *x * factor;
        }
    }
    let rho = rho_unchecked(sig, &z);
    if rho.abs() > tol.boundary {
        return Err(Error::Numerical {
            message: "degenerate partner left the boundary".into(),
            residuals: vec![rho.as_f64()],
        });
    }
    let q = q_closed_unchecked(sig, &w.lerp(&z, t0), &w.sub(&z));
    if q.abs() >= T::lit(10.0) * tol.boundary {
        return Err(Error::Numerical {
            message: "Hessian form does not vanish along the degenerate chord".into(),
            residuals: vec![q.as_f64()],
        });
    }
    let spec = DegenerateSpec {
        w: w.clone(),
        ell: sig.s() - sorted.len(),
        blocks: sorted,
        t0,
    };
    Ok((spec, z))
}
