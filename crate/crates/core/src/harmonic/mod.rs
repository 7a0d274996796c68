//! A continuous circle function whose harmonic conjugate is unbounded near
//! `θ = 0`, and the map component `h` built from it.
//!
//! With `b_k = 1/(k √ln k)` for `k ≥ 2` and `S(z) = Σ b_k z^k`, the harmonic
//! extension is `ũ = Im S` and its conjugate is `ṽ = −Re S`, so that
//! `ũ + iṽ = −i S` is holomorphic on the unit disc.

mod series;

pub use series::{coefficient, conjugate_series, SeriesValue, TailMethod};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BlockedVector, SourceSignature};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugatePairConfig {
    /// Scale `ι` of the `h`-component.
    pub iota: f64,
    /// Target bound on the neglected tail of the series.
    pub tol: f64,
    /// Largest number of terms summed directly.
    pub max_direct: usize,
}

impl Default for ConjugatePairConfig {
    fn default() -> Self {
        ConjugatePairConfig {
            iota: 1e-3,
            tol: 1e-9,
            max_direct: 1 << 21,
        }
    }
}

/// `u(θ) = Σ_{k=2}^{K} b_k sin(kθ)`.
pub fn boundary_u<T: Scalar>(theta: T, k_max: usize) -> T {
    let th = theta.as_f64();
    let step = Complex::from_polar(1.0, th);
    let mut rot = step;
    let mut acc = 0.0;
    for k in 2..=k_max {
        rot *= step;
        // Re-anchor the rotation periodically to keep roundoff from drifting.
        if k % 4096 == 0 {
            rot = Complex::from_polar(1.0, th * k as f64);
        }
        acc += coefficient(k) * rot.im;
    }
    T::lit(acc)
}

/// Largest `|u|` over a grid that is log-spaced near 0 and uniform on `(0, π]`.
/// By oddness this is the supremum over the whole circle grid.
pub fn sup_abs_u(k_max: usize, n_theta: usize) -> f64 {
    let mut best = 0.0f64;
    let half = n_theta / 2;
    for j in 0..half {
        let log_theta = -12.0 + 12.0 * j as f64 / half as f64;
        best = best.max(boundary_u(log_theta.exp().min(std::f64::consts::PI), k_max).abs());
    }
    for j in 1..=n_theta - half {
        let theta = std::f64::consts::PI * j as f64 / (n_theta - half) as f64;
        best = best.max(boundary_u(theta, k_max).abs());
    }
    best
}

/// `(ũ(z), ṽ(z))` with the adaptive truncation details.
pub fn poisson_pair<T: Scalar>(z: Complex<T>, cfg: &ConjugatePairConfig) -> Result<SeriesValue> {
    conjugate_series(Complex::new(z.re.as_f64(), z.im.as_f64()), cfg)
}

/// `h(Z) = ι (z¹, …, z^{M_{s+1}}, exp(ũ(z¹) + i ṽ(z¹)))`.
pub fn eval_h<T: Scalar>(
    sig: &SourceSignature,
    z: &BlockedVector<T>,
    cfg: &ConjugatePairConfig,
) -> Result<Vec<Complex<T>>> {
    sig.check_dim(z)?;
    let first = z.data()[0];
    if first.norm() >= T::one() {
        return Err(Error::Domain(format!(
            "h needs |z1| < 1, got {}",
            first.norm()
        )));
    }
    let sv = poisson_pair(first, cfg)?;
    let iota = T::lit(cfg.iota);
    let mut out: Vec<Complex<T>> = z.data().iter().map(|&x| x * iota).collect();
    let last = Complex::new(sv.u, sv.v).exp() * cfg.iota;
    out.push(Complex::new(T::lit(last.re), T::lit(last.im)));
    Ok(out)
}

/// Upper bound `ι² (s + 1 + e^{2 sup u})` on `‖h‖²` over the closed domain,
/// using `‖z_(k)‖ ≤ 1` blockwise and the maximum principle for `ũ`.
pub fn h_sup_bound(sig: &SourceSignature, cfg: &ConjugatePairConfig, u_sup: f64) -> f64 {
    cfg.iota * cfg.iota * ((sig.m().len()) as f64 + (2.0 * u_sup).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub r: f64,
    pub v_tilde: f64,
    pub terms: usize,
    pub tail_bound: f64,
    pub method: TailMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub theta0: f64,
    pub rows: Vec<GrowthRow>,
    /// `|ṽ|` strictly increasing along the grid.
    pub monotone: bool,
    /// Every row's tail bound is certified and below the tolerance.
    pub certified: bool,
}

/// Tabulates `ṽ(r e^{iθ0})` along an increasing radial grid.
pub fn conjugate_growth_report(
    r_grid: &[f64],
    theta0: f64,
    cfg: &ConjugatePairConfig,
) -> Result<GrowthReport> {
    if r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("radial grid must be increasing".into()));
    }
    let mut rows = Vec::with_capacity(r_grid.len());
    let mut certified = true;
    for &r in r_grid {
        let sv = conjugate_series(Complex::from_polar(r, theta0), cfg)?;
        certified &= sv.certified && sv.tail_bound < cfg.tol;
        rows.push(GrowthRow {
            r,
            v_tilde: sv.v,
            terms: sv.terms,
            tail_bound: sv.tail_bound,
            method: sv.method,
        });
    }
    let monotone = rows
        .windows(2)
        .all(|w| w[1].v_tilde.abs() > w[0].v_tilde.abs());
    Ok(GrowthReport {
        theta0,
        rows,
        monotone,
        certified,
    })
}
