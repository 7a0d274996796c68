//! Evaluation of `S(z) = Σ_{k≥2} b_k z^k` with a bound on the neglected tail.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::ConjugatePairConfig;
use crate::error::{Error, Result};

/// `b_k = 1/(k √ln k)`.
#[inline]
pub fn coefficient(k: usize) -> f64 {
    let kf = k as f64;
    1.0 / (kf * kf.ln().sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    /// Direct sum; tail bounded by a geometric series.
    Geometric,
    /// Direct sum plus the leading Abel-summation tail term.
    SummationByParts,
    /// Direct sum plus an Euler–Maclaurin tail (real positive `z` only).
    EulerMaclaurin,
    /// Capped direct sum; the reported bound is not below the tolerance.
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    /// `ũ = Im S`.
    pub u: f64,
    /// `ṽ = −Re S`.
    pub v: f64,
    pub terms: usize,
    pub tail_bound: f64,
    pub method: TailMethod,
    pub certified: bool,
}

/// `Σ_{k>K} b_k r^k ≤ b_{K+1} r^{K+1} / (1 − r)`.
fn geometric_bound(k: usize, r: f64) -> f64 {
    coefficient(k + 1) * r.powf((k + 1) as f64) / (1.0 - r)
}

/// Error of replacing `Σ_{k≥K} b_k z^k` by `b_K z^K / (1 − z)`.
///
/// Abel summation gives the remainder `(1 − z)^{-1} Σ_{k>K} (b_k − b_{k−1}) z^k`,
/// and because `b` is convex the differences decrease in size, so Abel's
/// inequality bounds the remaining sum by `2 |b_{K+1} − b_K| / |1 − z|`.
fn abel_bound(k: usize, one_minus_z: f64) -> f64 {
    2.0 * (coefficient(k) - coefficient(k + 1)) / (one_minus_z * one_minus_z)
}

/// Smallest `K ≥ 2` with `bound(K) < tol`, assuming `bound` decreases.
fn smallest_k(bound: impl Fn(usize) -> f64, tol: f64, cap: usize) -> Option<usize> {
    if bound(2) < tol {
        return Some(2);
    }
    let (mut lo, mut hi) = (2usize, 4usize.min(cap));
    while bound(hi) >= tol {
        if hi >= cap {
            return None;
        }
        lo = hi;
        hi = (hi * 2).min(cap);
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if bound(mid) < tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// `Σ_{k=2}^{K−1} b_k z^k` and `z^K`.
fn direct_sum(z: Complex<f64>, k_end: usize) -> (Complex<f64>, Complex<f64>) {
    let mut acc = Complex::new(0.0, 0.0);
    let mut zk = z * z;
    for k in 2..k_end {
        acc += zk * coefficient(k);
        zk *= z;
    }
    (acc, zk)
}

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for j in 1..n {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * j as f64);
    }
    acc * h / 3.0
}

/// `Σ_{k≥K} e^{−ck} / (k √ln k)` by Euler–Maclaurin with one Bernoulli term.
///
/// The integral is taken in the variable `u = ln t`, where it reads
/// `∫ e^{−c e^u} / √u du`, and is cut off once `c e^u ≥ 50`.
fn euler_maclaurin_tail(c: f64, k: usize) -> (f64, f64) {
    let kf = k as f64;
    let f = |t: f64| (-c * t).exp() / (t * t.ln().sqrt());
    let log_deriv = |t: f64| -c - 1.0 / t - 1.0 / (2.0 * t * t.ln());
    let fk = f(kf);
    let dfk = fk * log_deriv(kf);

    let a = kf.ln();
    let b = a.max((50.0 / c).ln());
    let integrand = |u: f64| (-c * u.exp()).exp() / u.sqrt();
    let mut n = 256;
    let mut prev = simpson(&integrand, a, b, n);
    let mut quad_err;
    loop {
        n *= 2;
        let next = simpson(&integrand, a, b, n);
        quad_err = (next - prev).abs() / 15.0;
        prev = next;
        if quad_err < 1e-14 || n >= 1 << 20 {
            break;
        }
    }
    let cutoff = (-c * b.exp()).exp() / (c * b.exp() * b.sqrt());
    let value = prev + fk / 2.0 - dfk / 12.0;
    // The one-term remainder is at most (1/12) ∫ |f''| = |f'(K)| / 12 for convex f.
    let bound = dfk.abs() / 12.0 + quad_err + cutoff;
    (value, bound)
}

/// Evaluates `S(z)` and returns `ũ = Im S`, `ṽ = −Re S`.
pub fn conjugate_series(z: Complex<f64>, cfg: &ConjugatePairConfig) -> Result<SeriesValue> {
    let r = z.norm();
    if r >= 1.0 {
        return Err(Error::Domain(format!("series needs |z| < 1, got {r}")));
    }
    if r == 0.0 {
        return Ok(SeriesValue {
            u: 0.0,
            v: 0.0,
            terms: 0,
            tail_bound: 0.0,
            method: TailMethod::Geometric,
            certified: true,
        });
    }
    let tol = cfg.tol;
    let cap = cfg.max_direct.max(4);
    let one_minus_z = (Complex::new(1.0, 0.0) - z).norm();
    let k_geo = smallest_k(|k| geometric_bound(k, r), tol, cap);
    let k_abel = smallest_k(|k| abel_bound(k, one_minus_z), tol, cap);

    let finish = |s: Complex<f64>, terms, tail_bound, method, certified| SeriesValue {
        u: s.im,
        v: -s.re,
        terms,
        tail_bound,
        method,
        certified,
    };

    match (k_geo, k_abel) {
        (Some(kg), ka) if ka.is_none_or(|ka| kg <= ka) => {
            let (s, _) = direct_sum(z, kg + 1);
            Ok(finish(s, kg, geometric_bound(kg, r), TailMethod::Geometric, true))
        }
        (_, Some(ka)) => {
            let (s, zk) = direct_sum(z, ka);
            let tail = zk * coefficient(ka) / (Complex::new(1.0, 0.0) - z);
            Ok(finish(
                s + tail,
                ka,
                abel_bound(ka, one_minus_z),
                TailMethod::SummationByParts,
                true,
            ))
        }
        _ if z.im == 0.0 && z.re > 0.0 => {
            let c = -z.re.ln();
            let mut k = 64usize;
            let mut tail = euler_maclaurin_tail(c, k);
            while tail.1 >= tol / 10.0 && k < cap {
                k *= 2;
                tail = euler_maclaurin_tail(c, k);
            }
            let (s, _) = direct_sum(z, k);
            let certified = tail.1 < tol;
            Ok(finish(
                s + Complex::new(tail.0, 0.0),
                k,
                tail.1,
                TailMethod::EulerMaclaurin,
                certified,
            ))
        }
        _ => {
            let (s, _) = direct_sum(z, cap + 1);
            let bound = geometric_bound(cap, r).min(abel_bound(cap, one_minus_z));
            log::warn!("series truncated at {cap} terms near z = {z}; tail bound {bound:e}");
            Ok(finish(s, cap, bound, TailMethod::Truncated, bound < tol))
        }
    }
}
