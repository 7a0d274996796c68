//! Peak functions and the constants that control them.

mod audit;
mod peak;

pub use audit::{
    audit_envelope, audit_lemma21, audit_lemma22, audit_lemma23, scalar_inequality, AuditReport,
    Violation,
};
pub use peak::{PeakFunction, PeakValue};

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::builder::TargetSignature;
use crate::error::{Error, Result};
use crate::geometry::{
    diameter_bound, gradient_unchecked, inner_wz_unchecked, random_boundary_point,
    SourceSignature,
};
use crate::scalar::{Scalar, Tolerances};

/// Relative margin applied to sampled extremes of the quadratic ratio.
pub const CALIBRATION_MARGIN: f64 = 0.1;

/// What to do when the `r`-independent inequality between the degenerate and
/// nondegenerate radii fails (possible only when `α_min = α_max`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaPolicy {
    /// Refuse with a configuration error.
    Strict,
    /// Take `λ` as the larger of the two radii, which keeps both far-field
    /// cases valid.
    Widen,
}

impl fmt::Display for LambdaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LambdaPolicy::Strict => "strict",
            LambdaPolicy::Widen => "widen",
        })
    }
}

impl FromStr for LambdaPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(LambdaPolicy::Strict),
            "widen" => Ok(LambdaPolicy::Widen),
            other => Err(Error::Config(format!("unknown lambda policy `{other}`"))),
        }
    }
}

/// Where the constants came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub calibration_samples: usize,
    pub calibration_seed: u64,
    pub q_min: f64,
    pub q_max: f64,
    pub q_quantiles: Vec<(f64, f64)>,
    pub margin: f64,
    pub lambda_policy: LambdaPolicy,
    pub aabb_lhs: f64,
    pub aabb_rhs: f64,
    pub aabb_holds: bool,
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EstimateConstants<T> {
    pub a1: T,
    pub a2: T,
    pub b1: T,
    pub b2: T,
    pub r: T,
    pub lambda: T,
    pub nu: T,
    pub eta: T,
    pub r0: T,
    pub t0: T,
    pub alpha_min: u32,
    pub alpha_max: u32,
    pub beta_t: u32,
    pub provenance: Provenance,
}

/// `(B1, B2)` for degenerate chords with `s − ell` annihilated blocks.
pub fn bounds_b<T: Scalar>(sig: &SourceSignature, t0: T, ell: usize) -> Result<(T, T)> {
    if !(t0 > T::zero() && t0 < T::one()) {
        return Err(Error::Precondition(format!("t0 = {t0} is not in (0, 1)")));
    }
    if ell >= sig.s() {
        return Err(Error::Precondition(format!(
            "ell = {ell} leaves no degenerate block (s = {})",
            sig.s()
        )));
    }
    let amin = sig.alpha_min().expect("s >= 1") as i32;
    let amax = sig.alpha_max().expect("s >= 1") as i32;
    let sum_sq: T = sig
        .alpha()
        .iter()
        .map(|&a| T::lit((a * a) as f64))
        .fold(T::zero(), |x, y| x + y);
    let b1 = t0.powi(2 * amax - 1) * T::lit(amin as f64)
        / (T::count(sig.s() - ell).powi(amax - 1) * (sum_sq + T::one()).sqrt());
    let b2 = T::SQRT_2() * T::lit(amax as f64) * t0.powi(2 * amin - 1);
    Ok((b1, b2))
}

/// Sampled distribution of `q(W, Z) = Re⟨W − Z, N̂(W)⟩ / ‖W − Z‖²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ACalibration<T> {
    pub a1: T,
    pub a2: T,
    pub q_min: T,
    pub q_max: T,
    pub quantiles: Vec<(f64, f64)>,
    pub n_samples: usize,
    pub seed: u64,
}

/// `q(W, Z)` for a boundary pair.
pub fn quadratic_ratio<T: Scalar>(
    sig: &SourceSignature,
    w: &crate::geometry::BlockedVector<T>,
    z: &crate::geometry::BlockedVector<T>,
) -> T {
    let n = gradient_unchecked(sig, w).norm();
    let d2 = w.sub(z).norm_sqr();
    inner_wz_unchecked(sig, w, z).re / n / d2
}

/// Empirical nondegenerate constants from random boundary pairs.
pub fn calibrate_a<T: Scalar>(
    sig: &SourceSignature,
    n_samples: usize,
    seed: u64,
    tol: &Tolerances<T>,
) -> Result<ACalibration<T>> {
    if n_samples < 1000 {
        return Err(Error::Precondition(format!(
            "calibration needs at least 1000 samples, got {n_samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut qs = Vec::with_capacity(n_samples);
    while qs.len() < n_samples {
        let w = random_boundary_point(sig, &mut rng, tol);
        let z = random_boundary_point(sig, &mut rng, tol);
        if w.distance(&z) < T::lit(1e-6) {
            continue;
        }
        let q = quadratic_ratio(sig, &w, &z);
        if !(q > T::zero()) {
            return Err(Error::Calibration(format!(
                "nonpositive ratio {q} at sample {}",
                qs.len()
            )));
        }
        qs.push(q.as_f64());
    }
    qs.sort_by(f64::total_cmp);
    let quantile = |p: f64| qs[((qs.len() - 1) as f64 * p).round() as usize];
    let quantiles = [0.0, 0.001, 0.01, 0.5, 0.99, 0.999, 1.0]
        .iter()
        .map(|&p| (p, quantile(p)))
        .collect();
    let q_min = T::lit(qs[0]);
    let q_max = T::lit(qs[qs.len() - 1]);
    Ok(ACalibration {
        a1: q_min * T::lit(1.0 - CALIBRATION_MARGIN),
        a2: q_max * T::lit(1.0 + CALIBRATION_MARGIN),
        q_min,
        q_max,
        quantiles,
        n_samples,
        seed,
    })
}

/// Outcome of the radius selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RadiusChoice<T> {
    pub r: T,
    pub lambda: T,
    pub lhs: T,
    pub rhs: T,
    pub holds: bool,
}

/// Chooses `r` and `λ` from
/// `(4β_t² B2 r^{2(α_min−α_max)} / B1)^{1/(2α_max)} ≥ (4β_t² A2 / A1)^{1/2}`.
#[allow(clippy::too_many_arguments)]
pub fn choose_r_lambda<T: Scalar>(
    a1: T,
    a2: T,
    b1: T,
    b2: T,
    alpha_min: u32,
    alpha_max: u32,
    beta_t: u32,
    policy: LambdaPolicy,
) -> Result<RadiusChoice<T>> {
    let four_b2 = T::lit(4.0 * (beta_t * beta_t) as f64);
    let rhs = (four_b2 * a2 / a1).sqrt();
    let lhs_at = |r: T| {
        (four_b2 * b2 * r.powi(2 * (alpha_min as i32 - alpha_max as i32)) / b1)
            .powf(T::one() / T::lit(2.0 * alpha_max as f64))
    };
    if alpha_min < alpha_max {
        for j in 1..=60 {
            let r = T::lit(0.5f64.powi(j));
            let lhs = lhs_at(r);
            if lhs >= rhs {
                return Ok(RadiusChoice {
                    r,
                    lambda: lhs,
                    lhs,
                    rhs,
                    holds: true,
                });
            }
        }
        return Err(Error::Config("no dyadic r satisfies the radius inequality".into()));
    }
    let r = T::lit(0.5);
    let lhs = lhs_at(r);
    if lhs >= rhs {
        return Ok(RadiusChoice {
            r,
            lambda: lhs,
            lhs,
            rhs,
            holds: true,
        });
    }
    match policy {
        LambdaPolicy::Strict => Err(Error::Config(format!(
            "radius inequality fails with equal exponents: {lhs} < {rhs}"
        ))),
        LambdaPolicy::Widen => {
            log::warn!("radius inequality fails ({lhs} < {rhs}); widening lambda");
            Ok(RadiusChoice {
                r,
                lambda: rhs,
                lhs,
                rhs,
                holds: false,
            })
        }
    }
}

/// `ν = 1.01 · log(1/η) / (4 · min{A2, B2} · β_t² · r^{2α_min})`.
pub fn choose_nu<T: Scalar>(eta: T, consts: &EstimateConstants<T>) -> Result<T> {
    nu_formula(eta, consts.a2, consts.b2, consts.beta_t, consts.r, consts.alpha_min)
}

fn nu_formula<T: Scalar>(eta: T, a2: T, b2: T, beta_t: u32, r: T, alpha_min: u32) -> Result<T> {
    if !(eta > T::zero() && eta < T::one()) {
        return Err(Error::Precondition(format!("eta = {eta} is not in (0, 1)")));
    }
    let beta = T::lit(beta_t as f64);
    Ok(T::lit(1.01) * (T::one() / eta).ln()
        / (T::lit(4.0) * a2.min(b2) * beta * beta * r.powi(2 * alpha_min as i32)))
}

/// Configuration for a full calibration pass.
#[derive(Debug, Clone)]
pub struct CalibrationSettings {
    pub samples: usize,
    pub seed: u64,
    pub eta: f64,
    pub policy: LambdaPolicy,
}

/// Manual replacements applied after calibration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstantOverrides {
    pub a1: Option<f64>,
    pub a2: Option<f64>,
    pub b1: Option<f64>,
    pub b2: Option<f64>,
}

impl<T: Scalar> EstimateConstants<T> {
    /// Calibrates `A1, A2`, evaluates `B1, B2` at the degenerate midpoint
    /// `t0 = 1/2` with every block annihilated, then fixes `r`, `λ` and `ν`.
    pub fn calibrate(
        sig: &SourceSignature,
        tsig: &TargetSignature,
        settings: &CalibrationSettings,
        overrides: &ConstantOverrides,
        tol: &Tolerances<T>,
    ) -> Result<Self> {
        if sig.s() == 0 {
            return Err(Error::Config("source needs at least one weighted block".into()));
        }
        let cal = calibrate_a(sig, settings.samples, settings.seed, tol)?;
        let t0 = T::lit(0.5);
        let (b1, b2) = bounds_b(sig, t0, 0)?;
        let mut applied = Vec::new();
        let mut pick = |name: &str, value: T, o: Option<f64>| match o {
            Some(x) => {
                applied.push(format!("{name}={x}"));
                T::lit(x)
            }
            None => value,
        };
        let a1 = pick("a1", cal.a1, overrides.a1);
        let a2 = pick("a2", cal.a2, overrides.a2);
        let b1 = pick("b1", b1, overrides.b1);
        let b2 = pick("b2", b2, overrides.b2);
        let alpha_min = sig.alpha_min().expect("s >= 1");
        let alpha_max = sig.alpha_max().expect("s >= 1");
        let beta_t = tsig.beta_t();
        let choice = choose_r_lambda(
            a1,
            a2,
            b1,
            b2,
            alpha_min,
            alpha_max,
            beta_t,
            settings.policy,
        )?;
        let eta = T::lit(settings.eta);
        let nu = nu_formula(eta, a2, b2, beta_t, choice.r, alpha_min)?;
        Ok(EstimateConstants {
            a1,
            a2,
            b1,
            b2,
            r: choice.r,
            lambda: choice.lambda,
            nu,
            eta,
            r0: T::lit(diameter_bound(sig)),
            t0,
            alpha_min,
            alpha_max,
            beta_t,
            provenance: Provenance {
                calibration_samples: cal.n_samples,
                calibration_seed: cal.seed,
                q_min: cal.q_min.as_f64(),
                q_max: cal.q_max.as_f64(),
                q_quantiles: cal.quantiles,
                margin: CALIBRATION_MARGIN,
                lambda_policy: settings.policy,
                aabb_lhs: choice.lhs.as_f64(),
                aabb_rhs: choice.rhs.as_f64(),
                aabb_holds: choice.holds,
                overrides: applied,
            },
        })
    }

    /// Same constants with `ν` recomputed for a new `η`.
    pub fn with_eta(&self, eta: T) -> Result<Self> {
        let mut out = self.clone();
        out.eta = eta;
        out.nu = choose_nu(eta, &out)?;
        Ok(out)
    }

    /// Same constants at a smaller radius `r`, with `λ` re-derived from the
    /// radius inequality and `ν` recomputed.
    pub fn with_radius(&self, r: T) -> Result<Self> {
        let four_b2 = T::lit(4.0 * (self.beta_t * self.beta_t) as f64);
        let lhs = (four_b2
            * self.b2
            * r.powi(2 * (self.alpha_min as i32 - self.alpha_max as i32))
            / self.b1)
            .powf(T::one() / T::lit(2.0 * self.alpha_max as f64));
        let rhs = (four_b2 * self.a2 / self.a1).sqrt();
        let mut out = self.clone();
        out.r = r;
        out.lambda = lhs.max(rhs);
        out.nu = choose_nu(self.eta, &out)?;
        Ok(out)
    }

    /// Margins `ν·A1·(λr)² − log(1/η)` and `ν·B1·(λr)^{2α_max} − log(1/η)`
    /// for the two far-field cases. Both are positive when `ν` is admissible.
    pub fn far_field_margins(&self) -> (T, T) {
        let lr = self.lambda * self.r;
        let log_eta = (T::one() / self.eta).ln();
        (
            self.nu * self.a1 * lr * lr - log_eta,
            self.nu * self.b1 * lr.powi(2 * self.alpha_max as i32) - log_eta,
        )
    }

    /// Envelope constants `(A, B)` with
    /// `e^{−νA‖W−Z‖²} ≤ |φ(Z)| ≤ e^{−νB‖W−Z‖^{2α_max}}` on the boundary.
    pub fn envelope(&self) -> (T, T) {
        let lower = self
            .a2
            .max(self.b2 * self.r0.powi(2 * self.alpha_min as i32 - 2));
        let upper = (self.a1 / self.r0.powi(2 * self.alpha_max as i32 - 2)).min(self.b1);
        (lower, upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> SourceSignature {
        SourceSignature::new(vec![1, 1], vec![2]).unwrap()
    }

    #[test]
    fn b_examples() {
        let (b1, b2) = bounds_b(&sig(), 0.5f64, 0).unwrap();
        assert!((b1 - 0.125 * 2.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!((b1 - 0.111803).abs() < 1e-6);
        assert!((b2 - 0.353553).abs() < 1e-6);
        let (b1, b2) = bounds_b(&sig(), 1.0 - 1e-12, 0).unwrap();
        assert!((b1 - 2.0 / 5f64.sqrt()).abs() < 1e-9);
        assert!((b2 - 2.0 * 2f64.sqrt()).abs() < 1e-9);
        assert!(bounds_b(&sig(), 0.5f64, 1).is_err());
        assert!(bounds_b(&sig(), 1.5f64, 0).is_err());
    }

    #[test]
    fn sphere_calibration() {
        let ball = SourceSignature::new(vec![3], vec![]).unwrap();
        let cal = calibrate_a::<f64>(&ball, 2000, 1, &Tolerances::default()).unwrap();
        assert!((cal.q_min - 0.5).abs() < 1e-9 && (cal.q_max - 0.5).abs() < 1e-9);
        assert!((cal.a1 - 0.45).abs() < 1e-9 && (cal.a2 - 0.55).abs() < 1e-9);
    }

    #[test]
    fn calibration_is_deterministic_and_positive() {
        let tol = Tolerances::default();
        let c1 = calibrate_a::<f64>(&sig(), 5000, 4, &tol).unwrap();
        let c2 = calibrate_a::<f64>(&sig(), 5000, 4, &tol).unwrap();
        assert_eq!(c1, c2);
        assert!(c1.q_min > 0.0);
        assert!(calibrate_a::<f64>(&sig(), 10, 4, &tol).is_err());
    }

    #[test]
    fn radius_choice() {
        // 4β_t²B2/B1 = 16 with β_t = 1 and A2/A1 = 1: λ = 2 ≥ 2.
        let c = choose_r_lambda(1.0f64, 1.0, 1.0, 4.0, 2, 2, 1, LambdaPolicy::Strict).unwrap();
        assert!((c.lambda - 2.0).abs() < 1e-15 && c.r == 0.5);
        let err = choose_r_lambda(1.0f64, 2.0, 1.0, 4.0, 2, 2, 1, LambdaPolicy::Strict);
        assert!(matches!(err, Err(Error::Config(_))));
        let c = choose_r_lambda(1.0f64, 2.0, 1.0, 4.0, 2, 2, 1, LambdaPolicy::Widen).unwrap();
        assert!(!c.holds && c.lambda >= c.rhs);
        // Unequal exponents: the left side grows as r shrinks.
        let c = choose_r_lambda(1.0f64, 50.0, 1.0, 0.1, 2, 3, 1, LambdaPolicy::Strict).unwrap();
        assert!(c.lambda >= c.rhs && c.r < 0.5);
        let prev = choose_r_lambda(1.0f64, 1e-3, 1.0, 0.1, 2, 3, 1, LambdaPolicy::Strict).unwrap();
        assert_eq!(prev.r, 0.5);
    }

    #[test]
    fn nu_examples() {
        let nu = nu_formula(std::f64::consts::E.recip(), 0.25, 0.3, 1, 1.0, 2).unwrap();
        assert!((nu - 1.01).abs() < 1e-14);
        let small = nu_formula(1.0 - 1e-12, 0.25, 0.3, 1, 1.0, 2).unwrap();
        assert!(small > 0.0 && small < 1e-10);
        let doubled = nu_formula(0.1f64, 0.25, 0.3, 2, 0.5, 2).unwrap();
        let single = nu_formula(0.1f64, 0.25, 0.3, 1, 0.5, 2).unwrap();
        assert!((single / doubled - 4.0).abs() < 1e-12);
        assert!(nu_formula(1.5, 0.25, 0.3, 1, 1.0, 2).is_err());
    }
}
