//! Sample-based audits of the peak-function estimates.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{quadratic_ratio, EstimateConstants, PeakFunction};
use crate::error::Result;
use crate::geometry::{
    degenerate_partner, gradient_unchecked, inner_wz_unchecked, random_boundary_point,
    BlockedVector, BoundaryNet, SourceSignature,
};
use crate::scalar::{Scalar, Tolerances};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: String,
    pub index: usize,
    pub value: f64,
    pub bound: f64,
}

/// Result of one audit, serialized as
/// `{lemma, n_samples, violations, extremes, seed}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub lemma: String,
    pub n_samples: usize,
    pub violations: Vec<Violation>,
    pub extremes: BTreeMap<String, f64>,
    pub seed: u64,
}

impl AuditReport {
    pub fn new(lemma: &str, n_samples: usize, seed: u64) -> Self {
        AuditReport {
            lemma: lemma.to_string(),
            n_samples,
            violations: Vec::new(),
            extremes: BTreeMap::new(),
            seed,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations_of(&self, kind: &str) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    pub fn extreme(&self, key: &str) -> f64 {
        self.extremes.get(key).copied().unwrap_or(f64::NAN)
    }

    fn check(&mut self, kind: &str, index: usize, ok: bool, value: f64, bound: f64) {
        if !ok {
            self.violations.push(Violation {
                kind: kind.to_string(),
                index,
                value,
                bound,
            });
        }
    }

    fn track_min(&mut self, key: &str, value: f64) {
        let e = self.extremes.entry(key.to_string()).or_insert(f64::INFINITY);
        *e = e.min(value);
    }

    fn track_max(&mut self, key: &str, value: f64) {
        let e = self.extremes.entry(key.to_string()).or_insert(f64::NEG_INFINITY);
        *e = e.max(value);
    }

    fn set(&mut self, key: &str, value: f64) {
        self.extremes.insert(key.to_string(), value);
    }
}

fn normalized_re<T: Scalar>(sig: &SourceSignature, w: &BlockedVector<T>, z: &BlockedVector<T>) -> T {
    inner_wz_unchecked(sig, w, z).re / gradient_unchecked(sig, w).norm()
}

/// Random nonempty subset of weighted blocks on which `w` is nonzero.
fn random_block_set<T: Scalar, R: Rng>(
    sig: &SourceSignature,
    w: &BlockedVector<T>,
    rng: &mut R,
) -> Vec<usize> {
    let live: Vec<usize> = (0..sig.s())
        .filter(|&k| w.block_norm_sqr(k) > T::zero())
        .collect();
    loop {
        let picked: Vec<usize> = live.iter().copied().filter(|_| rng.random::<bool>()).collect();
        if !picked.is_empty() {
            return picked;
        }
    }
}

/// Two-sided quadratic bounds on random pairs and power bounds on exact
/// degenerate partners.
pub fn audit_lemma21<T: Scalar>(
    sig: &SourceSignature,
    consts: &EstimateConstants<T>,
    n_samples: usize,
    seed: u64,
    tol: &Tolerances<T>,
) -> Result<AuditReport> {
    let mut report = AuditReport::new("lemma21", n_samples, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amin = 2 * consts.alpha_min as i32;
    let amax = 2 * consts.alpha_max as i32;
    for i in 0..n_samples {
        let w = random_boundary_point(sig, &mut rng, tol);
        let z = random_boundary_point(sig, &mut rng, tol);
        let d2 = w.sub(&z).norm_sqr();
        let re = normalized_re(sig, &w, &z);
        let (lo, hi) = (consts.a1 * d2, consts.a2 * d2);
        report.check("nondegenerate_lower", i, re >= lo, re.as_f64(), lo.as_f64());
        report.check("nondegenerate_upper", i, re <= hi, re.as_f64(), hi.as_f64());
        let q = quadratic_ratio(sig, &w, &z).as_f64();
        report.track_min("q_min", q);
        report.track_max("q_max", q);
    }
    for i in 0..n_samples {
        let w = random_boundary_point(sig, &mut rng, tol);
        let blocks = random_block_set(sig, &w, &mut rng);
        let (_, z) = degenerate_partner(sig, &w, &blocks, tol)?;
        let d = w.distance(&z);
        let re = normalized_re(sig, &w, &z);
        let (lo, hi) = (consts.b1 * d.powi(amax), consts.b2 * d.powi(amin));
        report.check("degenerate_lower", i, re >= lo, re.as_f64(), lo.as_f64());
        report.check("degenerate_upper", i, re <= hi, re.as_f64(), hi.as_f64());
        report.track_min("degenerate_lower_ratio", (re / d.powi(amax)).as_f64());
        report.track_max("degenerate_upper_ratio", (re / d.powi(amin)).as_f64());
    }
    for (key, value) in [
        ("a1", consts.a1),
        ("a2", consts.a2),
        ("b1", consts.b1),
        ("b2", consts.b2),
    ] {
        report.set(key, value.as_f64());
    }
    Ok(report)
}

/// Far-field smallness: for boundary `Z` with `‖W_i − Z‖ > λr`,
/// `|γ φ_i(Z)| < η` with the worst admissible `|γ| = 1`.
pub fn audit_lemma22<T: Scalar>(
    sig: &SourceSignature,
    consts: &EstimateConstants<T>,
    net: &BoundaryNet<T>,
    n_samples: usize,
    seed: u64,
    tol: &Tolerances<T>,
) -> Result<AuditReport> {
    let mut report = AuditReport::new("lemma22", n_samples, seed);
    let peaks = net
        .points
        .iter()
        .map(|w| PeakFunction::new(sig, w, consts.nu, tol))
        .collect::<Result<Vec<_>>>()?;
    let radius = consts.lambda * consts.r;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut far = 0usize;
    let mut clamps = 0usize;
    let mut max_g = 0.0f64;
    for i in 0..n_samples {
        let z = random_boundary_point(sig, &mut rng, tol);
        for peak in &peaks {
            if peak.w.distance(&z) <= radius {
                continue;
            }
            far += 1;
            let v = peak.eval(&z);
            clamps += v.clamped as usize;
            let g = v.value.norm();
            max_g = max_g.max(g.as_f64());
            report.check("far_field", i, g < consts.eta, g.as_f64(), consts.eta.as_f64());
        }
    }
    let (case1, case2) = consts.far_field_margins();
    report.set("far_pairs", far as f64);
    report.set("max_far_abs_g", max_g);
    report.set("lambda_r", radius.as_f64());
    report.set("nu", consts.nu.as_f64());
    report.set("eta", consts.eta.as_f64());
    report.set("exp_clamps", clamps as f64);
    report.set("nondegenerate_case_margin", case1.as_f64());
    report.set("degenerate_case_margin", case2.as_f64());
    report.check("nu_condition", 0, case1 > T::zero(), case1.as_f64(), 0.0);
    report.check("nu_condition", 1, case2 > T::zero(), case2.as_f64(), 0.0);
    Ok(report)
}

/// The scalar ratio `(Σ(α_k−1)x_k + 1) / sqrt(Σ α_k² x_k^{(2α_k−1)/α_k} − Σ x_k + 1)`,
/// which equals `⟨W, N̂(W)⟩` for `x_k = ‖w_(k)‖^{2α_k}`.
pub fn scalar_inequality(alpha: &[u32], x: &[f64]) -> f64 {
    let mut num = 1.0;
    let mut den = 1.0;
    for (&a, &xk) in alpha.iter().zip(x) {
        let af = a as f64;
        num += (af - 1.0) * xk;
        den += af * af * xk.powf((2.0 * af - 1.0) / af) - xk;
    }
    num / den.sqrt()
}

/// Lower bound `Re⟨W − Z, N̂(W)⟩ ≥ 1 − 1/T` for `Z` in the closure of `E_T`,
/// plus the scalar inequality on the simplex `Σ x_k ≤ 1`.
pub fn audit_lemma23<T: Scalar>(
    sig: &SourceSignature,
    t: T,
    n_samples: usize,
    seed: u64,
    tol: &Tolerances<T>,
) -> Result<AuditReport> {
    let mut report = AuditReport::new("lemma23", n_samples, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = T::one() - T::one() / t;
    let slack = T::lit(1e-9);
    for i in 0..n_samples {
        let w = random_boundary_point(sig, &mut rng, tol);
        let p = random_boundary_point(sig, &mut rng, tol);
        // Half of the samples sit on the boundary of E_T, where the bound is tight.
        let s = if i % 2 == 0 {
            T::one()
        } else {
            T::lit(rng.random::<f64>())
        };
        let z = p.scale(s / t);
        let re = normalized_re(sig, &w, &z);
        report.check("dilated_lower", i, re >= bound - slack, re.as_f64(), bound.as_f64());
        report.track_min("min_margin", (re - bound).as_f64());
    }
    let alpha = sig.alpha();
    let grid = simplex_points(alpha.len(), n_samples, &mut rng);
    for (i, x) in grid.iter().enumerate() {
        let v = scalar_inequality(alpha, x);
        report.check("scalar", i, v >= 1.0 - 1e-9, v, 1.0);
        report.track_min("scalar_min", v);
    }
    report.set("t", t.as_f64());
    report.set("bound", bound.as_f64());
    report.set("scalar_points", grid.len() as f64);
    Ok(report)
}

/// A regular grid on `[0, 1]` when there is one coordinate, otherwise
/// uniform samples from the simplex together with its vertices.
fn simplex_points<R: Rng>(dim: usize, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    if dim == 0 {
        return vec![vec![]];
    }
    if dim == 1 {
        return (0..n).map(|j| vec![j as f64 / (n - 1) as f64]).collect();
    }
    let mut out = vec![vec![0.0; dim]];
    for k in 0..dim {
        let mut e = vec![0.0; dim];
        e[k] = 1.0;
        out.push(e);
    }
    while out.len() < n {
        let e: Vec<f64> = (0..=dim).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
        let total: f64 = e.iter().sum();
        out.push(e[..dim].iter().map(|v| v / total).collect());
    }
    out
}

/// Envelope `e^{−νA‖W−Z‖²} ≤ |φ_i(Z)| ≤ e^{−νB‖W−Z‖^{2α_max}}` on boundary
/// samples, and `|φ_i| ≤ 1` on closed-domain samples.
pub fn audit_envelope<T: Scalar>(
    sig: &SourceSignature,
    consts: &EstimateConstants<T>,
    net: &BoundaryNet<T>,
    n_samples: usize,
    seed: u64,
    tol: &Tolerances<T>,
) -> Result<AuditReport> {
    let mut report = AuditReport::new("envelope", n_samples, seed);
    let (a, b) = consts.envelope();
    let nu = consts.nu;
    let peaks = net
        .points
        .iter()
        .map(|w| PeakFunction::new(sig, w, nu, tol))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amax = 2 * consts.alpha_max as i32;
    for i in 0..n_samples {
        let z = random_boundary_point(sig, &mut rng, tol);
        let inside = z.scale(T::lit(rng.random::<f64>()));
        for peak in &peaks {
            let d = peak.w.distance(&z);
            // Compare exponents to stay clear of underflow.
            let log_mod = -nu * peak.normalized_inner(z.data()).re;
            let lower = -nu * a * d * d;
            let upper = -nu * b * d.powi(amax);
            let slack = T::lit(1e-9);
            report.check("lower", i, log_mod >= lower - slack, log_mod.as_f64(), lower.as_f64());
            report.check("upper", i, log_mod <= upper + slack, log_mod.as_f64(), upper.as_f64());
            let m = peak.eval(&inside).value.norm();
            report.check("peak_modulus", i, m <= T::one() + slack, m.as_f64(), 1.0);
            report.track_max("max_interior_modulus", m.as_f64());
        }
    }
    report.set("a", a.as_f64());
    report.set("b", b.as_f64());
    report.set("r0", consts.r0.as_f64());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_inequality_examples() {
        assert_eq!(scalar_inequality(&[2], &[0.0]), 1.0);
        // For α = 2 the inequality reduces to (√x − 1)(√x − 3) ≥ 0 on [0, 1].
        for j in 0..=100 {
            let x = j as f64 / 100.0;
            let v = scalar_inequality(&[2], &[x]);
            let lhs = (x + 1.0).powi(2) - (4.0 * x.powf(1.5) - x + 1.0);
            assert!((v >= 1.0 - 1e-12) == (lhs >= -1e-12));
        }
    }

    #[test]
    fn simplex_sampling_stays_in_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for x in simplex_points(3, 200, &mut rng) {
            assert!(x.iter().all(|&v| v >= 0.0) && x.iter().sum::<f64>() <= 1.0 + 1e-12);
        }
        assert_eq!(simplex_points(1, 11, &mut rng)[10], vec![1.0]);
    }
}
