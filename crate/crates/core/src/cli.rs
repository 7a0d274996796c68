//! Drivers behind the `audit`, `build` and `trace` subcommands.
//!
//! Each `cmd_*` function returns the process exit code: 0 on success, 1 when
//! an audit or assertion fails and 2 when the configuration or an input file
//! cannot be used.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::analysis::{
    ellinfty_check, multinomial_bound_check, mu_sum, nonextend_witness, radial_trace,
    witness_grid, TailRow,
};
use crate::builder::{
    eta_from_eps, make_schedule, probe_points, run_construction, Checkpoint, ConstructionSetup,
    Diagnostics, Schedule, TargetSignature,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::estimates::{
    audit_envelope, audit_lemma21, audit_lemma22, audit_lemma23, AuditReport,
    CalibrationSettings, EstimateConstants,
};
use crate::geometry::{
    degenerate_partner, eval_rho, find_t0_mean_value, hessian_q_closed, inner_wz,
    gradient_n, mean_value_residual, project_to_boundary, random_boundary_point,
    random_direction, sample_boundary_net, BlockedVector, BoundaryNet, SourceSignature,
};
use crate::harmonic::{conjugate_growth_report, h_sup_bound, sup_abs_u, ConjugatePairConfig};
use crate::scalar::Tolerances;

/// Offsets added to the configured seed so that every consumer of randomness
/// draws from its own stream.
pub mod seeds {
    pub const NET: u64 = 0;
    pub const CALIBRATION: u64 = 101;
    pub const GEOMETRY: u64 = 201;
    pub const LEMMA21: u64 = 202;
    pub const LEMMA22: u64 = 203;
    pub const LEMMA23: u64 = 204;
    pub const ENVELOPE: u64 = 205;
    pub const MULTINOMIAL: u64 = 206;
    pub const PROBES: u64 = 303;
}

/// Terms and grid size for the sampled supremum of the boundary function.
const U_SUP_TERMS: usize = 4096;
const U_SUP_GRID: usize = 4096;
/// Added to the sampled supremum to cover the truncated series.
const U_SUP_MARGIN: f64 = 2.0;

/// Dilations exercised by the dilated-domain audit.
pub const AUDIT_DILATIONS: [f64; 4] = [1.0, 1.25, 2.0, 4.0];

/// Signatures, net, constants and schedule shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub source: SourceSignature,
    pub target: TargetSignature,
    pub tol: Tolerances<f64>,
    pub harmonic: ConjugatePairConfig,
    pub net: BoundaryNet<f64>,
    /// Constants with `ν` chosen for the audit `η`.
    pub constants: EstimateConstants<f64>,
    pub schedule: Schedule<f64>,
    pub sup_h_sq: f64,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    cfg.validate()?;
    let source = cfg.source()?;
    let target = cfg.target()?;
    let tol = cfg.tolerances();
    let harmonic = cfg.harmonic();
    let net = sample_boundary_net(&source, &target, cfg.seed + seeds::NET, cfg.net_density, &tol)?;
    let settings = CalibrationSettings {
        samples: cfg.calibration_samples,
        seed: cfg.seed + seeds::CALIBRATION,
        eta: cfg.audit_eta,
        policy: cfg.lambda_policy,
    };
    let constants =
        EstimateConstants::calibrate(&source, &target, &settings, &cfg.overrides(), &tol)?;
    let u_sup = sup_abs_u(U_SUP_TERMS, U_SUP_GRID) + U_SUP_MARGIN;
    let sup_h_sq = h_sup_bound(&source, &harmonic, u_sup);
    let schedule = make_schedule(&target, cfg.steps, sup_h_sq, cfg.eps0)?;
    Ok(Prepared {
        source,
        target,
        tol,
        harmonic,
        net,
        constants,
        schedule,
        sup_h_sq,
    })
}

impl Prepared {
    /// Constants for the construction: a single `ν` for every step, chosen
    /// for the `η` that belongs to the smallest `ε`.
    pub fn build_constants(&self) -> Result<EstimateConstants<f64>> {
        match self.schedule.eps.last() {
            Some(&eps) => self.constants.with_eta(eta_from_eps(&self.target, eps)),
            None => Ok(self.constants.clone()),
        }
    }

    /// Constants at a radius small enough that `λr` is a quarter of the
    /// diameter bound, so the far region is not empty.
    pub fn far_constants(&self) -> Result<EstimateConstants<f64>> {
        let c = &self.constants;
        let r = c.r * (0.25 * c.r0) / (c.lambda * c.r);
        c.with_radius(r)
    }

    pub fn construction_setup(&self, cfg: &RunConfig) -> Result<ConstructionSetup<f64>> {
        Ok(ConstructionSetup {
            source: self.source.clone(),
            target: self.target.clone(),
            harmonic: self.harmonic,
            net: self.net.clone(),
            constants: self.build_constants()?,
            schedule: self.schedule.clone(),
            probes: cfg.probes,
            shell_probes: cfg.shell_probes,
            probe_seed: cfg.seed + seeds::PROBES,
            tol: self.tol,
        })
    }
}

/// Projection residuals, mean-value roots on random pairs and exact
/// degenerate partners.
pub fn audit_geometry(
    sig: &SourceSignature,
    n_projections: usize,
    n_pairs: usize,
    seed: u64,
    tol: &Tolerances<f64>,
) -> Result<AuditReport> {
    let mut report = AuditReport::new("geometry", n_projections + 2 * n_pairs, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_rho = 0.0f64;
    for i in 0..n_projections {
        let d = random_direction::<f64, _>(sig, &mut rng);
        let rho = project_to_boundary(sig, &d, tol)
            .and_then(|p| eval_rho(sig, &p))
            .map(f64::abs)
            .unwrap_or(f64::INFINITY);
        worst_rho = worst_rho.max(rho);
        push(&mut report, "projection", i, rho < 1e-12, rho, 1e-12);
    }
    let mut worst_mv = 0.0f64;
    for i in 0..n_pairs {
        let w = random_boundary_point(sig, &mut rng, tol);
        let z = random_boundary_point(sig, &mut rng, tol);
        let residual = find_t0_mean_value(sig, &w, &z, tol)
            .map(|t0| mean_value_residual(sig, &w, &z, t0).abs())
            .unwrap_or(f64::INFINITY);
        worst_mv = worst_mv.max(residual);
        push(&mut report, "mean_value", i, residual < 1e-9, residual, 1e-9);
    }
    let mut worst_t0 = 0.0f64;
    let mut worst_q = 0.0f64;
    for i in 0..n_pairs {
        let w = random_boundary_point(sig, &mut rng, tol);
        let blocks: Vec<usize> = (0..sig.s()).filter(|&k| w.block_norm_sqr(k) > 0.0).collect();
        let (t0_dev, q) = match degenerate_partner(sig, &w, &blocks, tol) {
            Ok((spec, z)) => {
                let q = hessian_q_closed(sig, &w.lerp(&z, spec.t0), &w.sub(&z))?;
                ((spec.t0 - 0.5).abs(), q.abs())
            }
            Err(_) => (f64::INFINITY, f64::INFINITY),
        };
        worst_t0 = worst_t0.max(t0_dev);
        worst_q = worst_q.max(q);
        push(&mut report, "degenerate_t0", i, t0_dev <= 1e-12, t0_dev, 1e-12);
        push(&mut report, "degenerate_q", i, q < 1e-9, q, 1e-9);
    }
    report.extremes.insert("max_abs_rho".into(), worst_rho);
    report.extremes.insert("max_mean_value_residual".into(), worst_mv);
    report.extremes.insert("max_t0_deviation".into(), worst_t0);
    report.extremes.insert("max_degenerate_q".into(), worst_q);
    Ok(report)
}

fn push(report: &mut AuditReport, kind: &str, index: usize, ok: bool, value: f64, bound: f64) {
    if !ok {
        report.violations.push(crate::estimates::Violation {
            kind: kind.to_string(),
            index,
            value,
            bound,
        });
    }
}

/// Gaussian direction scaled to a uniformly drawn norm in `[0, 1)`.
fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Complex<f64>> {
    let norm: f64 = rng.random();
    let v: Vec<Complex<f64>> = (0..dim)
        .map(|_| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if n == 0.0 {
        return v;
    }
    v.into_iter().map(|c| c * (norm / n)).collect()
}

/// The multinomial bound on random triples with `‖F‖ ≤ 1`, the hand case and
/// the closed form of the correction sum.
pub fn audit_multinomial(n: usize, seed: u64) -> Result<AuditReport> {
    let mut report = AuditReport::new("multinomial", n, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_rel = 0.0f64;
    let mut worst_margin = f64::INFINITY;
    for i in 0..n {
        let dim = rng.random_range(1..=4);
        let alpha = (i % 3) as u32 + 1;
        let f = random_vector(&mut rng, dim);
        let g = random_vector(&mut rng, dim);
        let h = random_vector(&mut rng, dim);
        let check = multinomial_bound_check(&f, &g, &h, alpha)?;
        push(&mut report, "bound", i, check.pass, check.lhs, check.rhs);
        worst_margin = worst_margin.min(check.rhs - check.lhs);
        let (ng, nh) = (norm(&g), norm(&h));
        let closed = (1.0 + ng + nh).powi(2 * alpha as i32) - 1.0;
        let rel = (mu_sum(alpha, &ng, &nh) - closed).abs() / closed.max(1e-300);
        worst_rel = worst_rel.max(rel);
        push(&mut report, "closed_form", i, rel < 1e-12, rel, 1e-12);
    }
    let c = |x: f64| Complex::new(x, 0.0);
    let hand = multinomial_bound_check(&[c(0.5), c(0.0)], &[c(0.1), c(0.0)], &[c(0.0), c(0.2)], 1)?;
    let hand_ok = (hand.lhs - 0.40).abs() < 1e-12 && (hand.rhs - 0.94).abs() < 1e-12 && hand.pass;
    push(&mut report, "hand_case", 0, hand_ok, hand.lhs, hand.rhs);
    report.extremes.insert("min_margin".into(), worst_margin);
    report.extremes.insert("max_closed_form_rel_diff".into(), worst_rel);
    report.extremes.insert("hand_lhs".into(), hand.lhs);
    report.extremes.insert("hand_rhs".into(), hand.rhs);
    Ok(report)
}

fn norm(v: &[Complex<f64>]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `Re⟨W − Z, N̂(W)⟩` for `W = (0, …, 0, 1)` and `Z = W/τ`, which equals `1 − 1/τ`.
pub fn dilation_equality_case(sig: &SourceSignature, tau: f64, tol: &Tolerances<f64>) -> Result<f64> {
    let mut dir = sig.zeros::<f64>();
    let last = dir.len() - 1;
    dir.data_mut()[last] = Complex::new(1.0, 0.0);
    let w = project_to_boundary(sig, &dir, tol)?;
    let z = w.scale(1.0 / tau);
    Ok(inner_wz(sig, &w, &z, tol)?.re / gradient_n(sig, &w)?.norm())
}

/// Every audit run by `cmd_audit`, keyed by output file stem.
pub fn run_audits(cfg: &RunConfig, prepared: &Prepared) -> Result<Vec<(String, AuditReport)>> {
    let sig = &prepared.source;
    let tol = &prepared.tol;
    let n = cfg.audit_samples;
    let s = cfg.seed;
    let mut out = Vec::new();
    out.push((
        "geometry".to_string(),
        audit_geometry(sig, n, (n / 10).max(1), s + seeds::GEOMETRY, tol)?,
    ));
    out.push((
        "lemma21".to_string(),
        audit_lemma21(sig, &prepared.constants, n, s + seeds::LEMMA21, tol)?,
    ));
    out.push((
        "lemma22".to_string(),
        audit_lemma22(sig, &prepared.constants, &prepared.net, n, s + seeds::LEMMA22, tol)?,
    ));
    let far = prepared.far_constants()?;
    out.push((
        "lemma22_far".to_string(),
        audit_lemma22(sig, &far, &prepared.net, n, s + seeds::LEMMA22, tol)?,
    ));
    for (j, &t) in AUDIT_DILATIONS.iter().enumerate() {
        let mut report = audit_lemma23(sig, t, n, s + seeds::LEMMA23 + 1000 * j as u64, tol)?;
        let re = dilation_equality_case(sig, t, tol)?;
        let expected = 1.0 - 1.0 / t;
        let diff = (re - expected).abs();
        push(&mut report, "equality_case", 0, diff < 1e-12, re, expected);
        report.extremes.insert("equality_case_diff".into(), diff);
        out.push((format!("lemma23_t{}", t.to_string().replace('.', "_")), report));
    }
    out.push((
        "envelope".to_string(),
        audit_envelope(sig, &prepared.constants, &prepared.net, n / 10, s + seeds::ENVELOPE, tol)?,
    ));
    out.push((
        "multinomial".to_string(),
        audit_multinomial(n, s + seeds::MULTINOMIAL)?,
    ));
    Ok(out)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Signature(_) | Error::Json(_) => 2,
        _ => 1,
    }
}

fn write_json<V: Serialize>(path: &Path, value: &V) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out_dir)?;
    Ok(&cfg.out_dir)
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn cmd_audit(cfg: &RunConfig) -> i32 {
    let result = (|| -> Result<bool> {
        let prepared = prepare(cfg)?;
        let reports = run_audits(cfg, &prepared)?;
        let dir = out_dir(cfg)?;
        let mut all_passed = true;
        for (name, report) in &reports {
            write_json(&dir.join(format!("{name}.json")), report)?;
            if report.passed() {
                log::info!("{name}: pass");
            } else {
                log::warn!("{name}: {} violations", report.violations.len());
                all_passed = false;
            }
        }
        write_json(&dir.join("constants.json"), &prepared.constants)?;
        Ok(all_passed)
    })();
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            log::error!("{e}");
            exit_code(&e)
        }
    }
}

/// Runs the construction and returns the checkpoint and diagnostics.
pub fn run_build(cfg: &RunConfig) -> Result<(Checkpoint<f64>, Diagnostics<f64>)> {
    let prepared = prepare(cfg)?;
    let setup = prepared.construction_setup(cfg)?;
    let (state, diagnostics) = run_construction(&setup)?;
    let checkpoint = Checkpoint::new(&state, &setup.constants, &diagnostics.schedule);
    Ok((checkpoint, diagnostics))
}

/// Number of directions sampled by the tail diagnostic.
const TAIL_DIRECTIONS: usize = 512;

/// Tail diagnostic on a finished checkpoint: how much the layers after each
/// step change `|||F|||^{2β}` between consecutive dilation shells.
pub fn tail_report(cfg: &RunConfig, checkpoint: &Checkpoint<f64>) -> Result<Vec<TailRow>> {
    let tol = cfg.tolerances();
    let state = checkpoint.to_state(&tol)?;
    let (dirs, _) = probe_points(
        &state.source,
        TAIL_DIRECTIONS,
        cfg.seed + seeds::PROBES + 3,
        |_, _| 1.0,
        &tol,
    );
    Ok(ellinfty_check(&state, &checkpoint.schedule, &dirs))
}

/// Diagnostics table with columns `ell,T,boundary_min,boundary_max,sum_a2beta,clamps`.
pub fn diagnostics_csv(diagnostics: &Diagnostics<f64>) -> String {
    let mut out = String::from("ell,T,boundary_min,boundary_max,sum_a2beta,clamps\n");
    for s in &diagnostics.steps {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            s.ell,
            fmt_f(s.t),
            fmt_f(s.boundary_min),
            fmt_f(s.boundary_max),
            fmt_f(s.sum_a2beta),
            s.negative_clamps + s.capped_clamps
        );
    }
    out
}

pub fn cmd_build(cfg: &RunConfig) -> i32 {
    let result = (|| -> Result<bool> {
        let (checkpoint, diagnostics) = run_build(cfg)?;
        let dir = out_dir(cfg)?;
        fs::write(dir.join("checkpoint.json"), checkpoint.to_json()?)?;
        fs::write(dir.join("diagnostics.csv"), diagnostics_csv(&diagnostics))?;
        write_json(&dir.join("diagnostics.json"), &diagnostics)?;
        let tail = tail_report(cfg, &checkpoint)?;
        write_json(&dir.join("ellinfty.json"), &tail)?;
        let tail_violations: usize = tail.iter().map(|r| r.violations).sum();
        if tail_violations > 0 {
            log::warn!("{tail_violations} samples exceed the tail bound");
        }
        let violations = diagnostics.step_violations();
        if violations > 0 {
            log::warn!("{violations} step audit violations");
        }
        Ok(violations == 0 && diagnostics.schedule_check.passed())
    })();
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            log::error!("{e}");
            exit_code(&e)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TraceMode {
    Radial,
    Nonextend,
    Conjugate,
}

/// Radii for the radial trace: a coarse sweep, then the witness tail.
pub fn radial_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..10).map(|j| j as f64 / 10.0).collect();
    grid.extend(witness_grid());
    grid
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    Checkpoint::from_json(&text)
}

pub fn cmd_trace(cfg: &RunConfig, checkpoint: &Path, mode: TraceMode, theta0: Option<f64>) -> i32 {
    let theta0 = theta0.unwrap_or(cfg.trace_theta0);
    let result = (|| -> Result<bool> {
        let ck = load_checkpoint(checkpoint)?;
        let tol = cfg.tolerances();
        let state = ck.to_state(&tol)?;
        let dir = out_dir(cfg)?;
        match mode {
            TraceMode::Radial => {
                let mut d = state.source.zeros::<f64>();
                let last = d.len() - 1;
                d.data_mut()[last] = Complex::new(1.0, 0.0);
                let w: BlockedVector<f64> = project_to_boundary(&state.source, &d, &tol)?;
                let rows = radial_trace(&state, &w, &radial_grid(), &tol)?;
                let mut csv = String::from("r,norm_beta\n");
                for row in &rows {
                    let _ = writeln!(csv, "{},{}", fmt_f(row.r), fmt_f(row.norm_beta));
                }
                fs::write(dir.join("radial.csv"), csv)?;
                Ok(true)
            }
            TraceMode::Nonextend => {
                let report = nonextend_witness(&state, theta0, &witness_grid(), &tol)?;
                let mut csv = String::from("r,phase,modulus,h_sq\n");
                for row in &report.rows {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{}",
                        fmt_f(row.r),
                        fmt_f(row.phase),
                        fmt_f(row.modulus),
                        fmt_f(row.h_sq)
                    );
                }
                fs::write(dir.join("nonextend.csv"), csv)?;
                write_json(&dir.join("nonextend.json"), &report)?;
                log::info!(
                    "theta0 = {theta0}: oscillation {:.4}, h variation {:.3e}",
                    report.oscillation,
                    report.h_variation
                );
                Ok(report.passed())
            }
            TraceMode::Conjugate => {
                let report = conjugate_growth_report(&witness_grid(), theta0, &ck.harmonic)?;
                let mut csv = String::from("r,v_tilde,terms,tail_bound,method\n");
                for row in &report.rows {
                    let method = serde_json::to_value(row.method)?;
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{}",
                        fmt_f(row.r),
                        fmt_f(row.v_tilde),
                        row.terms,
                        fmt_f(row.tail_bound),
                        method.as_str().unwrap_or_default()
                    );
                }
                fs::write(dir.join("conjugate.csv"), csv)?;
                write_json(&dir.join("conjugate.json"), &report)?;
                let at_discontinuity = theta0.rem_euclid(std::f64::consts::TAU) < 1e-12;
                Ok(report.certified && (report.monotone || !at_discontinuity))
            }
        }
    })();
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            log::error!("{e}");
            exit_code(&e)
        }
    }
}
