//! Acceptance suite at the default configuration. Prints one PASS/FAIL line per
//! criterion and exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use pseudoellipsoid::analysis::{
    mu_sum_weighted, nonextend_witness, trinomial_closed, u_trend, witness_grid,
    WitnessExpectation,
};
use pseudoellipsoid::builder::{probe_points, Checkpoint, Diagnostics};
use pseudoellipsoid::cli::{
    audit_geometry, audit_multinomial, dilation_equality_case, prepare, run_build, Prepared,
    AUDIT_DILATIONS,
};
use pseudoellipsoid::config::RunConfig;
use pseudoellipsoid::estimates::{audit_lemma21, audit_lemma22, audit_lemma23};
use pseudoellipsoid::geometry::{gradient_n, inner_wz, BlockedVector};
use pseudoellipsoid::harmonic::conjugate_growth_report;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn(&Context) -> Outcome);

struct Context {
    cfg: RunConfig,
    prepared: Prepared,
    checkpoint: Checkpoint<f64>,
    diagnostics: Diagnostics<f64>,
}

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn timed<R>(f: impl FnOnce() -> R) -> (R, Duration) {
    let start = Instant::now();
    let r = f();
    (r, start.elapsed())
}

fn geometry_suite(ctx: &Context) -> Outcome {
    let (report, took) = timed(|| {
        audit_geometry(&ctx.prepared.source, 10_000, 1_000, 11, &ctx.prepared.tol)
    });
    let report = report.map_err(|e| e.to_string())?;
    ensure(
        report.passed() && took < Duration::from_secs(10),
        format!(
            "max |rho| {:.1e}, mean-value residual {:.1e}, t0 deviation {:.1e}, Q {:.1e}, {:.2?}",
            report.extreme("max_abs_rho"),
            report.extreme("max_mean_value_residual"),
            report.extreme("max_t0_deviation"),
            report.extreme("max_degenerate_q"),
            took
        ),
    )
}

fn quadratic_bounds(ctx: &Context) -> Outcome {
    let p = &ctx.prepared;
    let report = audit_lemma21(&p.source, &p.constants, 10_000, 12, &p.tol).map_err(|e| e.to_string())?;
    // Reflected pair W = (a, b), Z = (−a, b) with a⁴ = b² = 1/2.
    let a = 0.5f64.powf(0.25);
    let b = 0.5f64.sqrt();
    let w = BlockedVector::from_real(&[a, b], &[1, 1]).unwrap();
    let z = BlockedVector::from_real(&[-a, b], &[1, 1]).unwrap();
    let re = inner_wz(&p.source, &w, &z, &p.tol).unwrap().re
        / gradient_n(&p.source, &w).unwrap().norm();
    // ⟨W − Z, N⟩ = 2a · 2a³ = 2 and ‖N‖² = 4a⁶ + b² = √2 + 1/2.
    let oracle = 2.0 / (2f64.sqrt() + 0.5).sqrt();
    let d4 = w.distance(&z).powi(4);
    let (lo, hi) = (p.constants.b1 * d4, p.constants.b2 * d4);
    ensure(
        report.passed()
            && (re - oracle).abs() < 1e-5
            && (lo - 0.894).abs() < 1e-3
            && (hi - 2.828).abs() < 1e-3
            && lo <= re
            && re <= hi,
        format!(
            "{} violations; spot Re = {re:.7} (oracle {oracle:.7}), bounds [{lo:.4}, {hi:.4}]",
            report.violations.len()
        ),
    )
}

fn far_field(ctx: &Context) -> Outcome {
    let p = &ctx.prepared;
    let far = p.far_constants().map_err(|e| e.to_string())?;
    let ((default, shrunk), took) = timed(|| {
        (
            audit_lemma22(&p.source, &p.constants, &p.net, 10_000, 13, &p.tol),
            audit_lemma22(&p.source, &far, &p.net, 10_000, 13, &p.tol),
        )
    });
    let default = default.map_err(|e| e.to_string())?;
    let shrunk = shrunk.map_err(|e| e.to_string())?;
    let eta_ok = (p.constants.eta - 0.01).abs() < 1e-15;
    ensure(
        eta_ok
            && default.passed()
            && shrunk.passed()
            && shrunk.extreme("far_pairs") > 0.0
            && shrunk.extreme("max_far_abs_g") < 0.01
            && took < Duration::from_secs(10),
        format!(
            "calibrated radius: {} far pairs; shrunk radius (lambda r = {:.3}): {} far pairs, max |g| {:.1e}, {:.2?}",
            default.extreme("far_pairs"),
            shrunk.extreme("lambda_r"),
            shrunk.extreme("far_pairs"),
            shrunk.extreme("max_far_abs_g"),
            took
        ),
    )
}

fn dilation(ctx: &Context) -> Outcome {
    let p = &ctx.prepared;
    let mut details = Vec::new();
    let mut ok = true;
    for (j, &t) in AUDIT_DILATIONS.iter().enumerate() {
        let report = audit_lemma23(&p.source, t, 10_000, 14 + j as u64, &p.tol).map_err(|e| e.to_string())?;
        let re = dilation_equality_case(&p.source, t, &p.tol).map_err(|e| e.to_string())?;
        let eq = (re - (1.0 - 1.0 / t)).abs();
        ok &= report.passed() && eq < 1e-12;
        details.push(format!("T={t}: {} violations, equality {eq:.0e}", report.violations.len()));
    }
    ensure(ok, details.join("; "))
}

fn step_audit(ctx: &Context) -> Outcome {
    let d = &ctx.diagnostics;
    let steps = d.steps.len();
    let step = d.steps.iter().map(|s| s.step_violations).sum::<usize>();
    let half = d.steps.iter().map(|s| s.half_group_violations).sum::<usize>();
    let worst_half = d.steps.iter().map(|s| s.half_group_max / s.eps).fold(0.0, f64::max);
    ensure(
        steps == ctx.cfg.steps && step == 0 && half == 0,
        format!("{steps} steps, {step} bound violations, {half} half-group violations, max half-group/eps {worst_half:.1e}"),
    )
}

fn schedule(ctx: &Context) -> Outcome {
    let s = &ctx.diagnostics.schedule;
    let check = &ctx.diagnostics.schedule_check;
    let zeta3: f64 = 1.2020569031595942;
    let rhs = 1.0 - 2.0 * 0.01 * zeta3;
    let x = (-1.0 + (1.0 + 8.0 * rhs).sqrt()) / 4.0;
    let oracle = x.sqrt();
    let t_nonincreasing = s.t_shell.windows(2).all(|w| w[1] <= w[0]);
    ensure(
        check.passed() && (s.a[0] - oracle).abs() < 1e-6 && (oracle - 0.701386).abs() < 1e-6 && t_nonincreasing,
        format!("a0 = {:.7} (oracle {oracle:.7}), conditions {}", s.a[0], if check.passed() { "hold" } else { "fail" }),
    )
}

fn monotone_u(ctx: &Context) -> Outcome {
    let p = &ctx.prepared;
    let state = ctx.checkpoint.to_state(&p.tol).map_err(|e| e.to_string())?;
    // Fresh boundary probes, independent of the ones used during the build.
    let (probes, _) = probe_points(&p.source, 4096, 9_999, |_, _| 1.0, &p.tol);
    let trend = u_trend(&state, &ctx.checkpoint.schedule, &probes);
    let d = &ctx.diagnostics;
    let build_decreases: usize = d.steps.iter().map(|s| s.u_decreases).sum();
    let mut bmin = vec![d.initial.boundary_min];
    bmin.extend(d.steps.iter().map(|s| s.boundary_min));
    let bmin_ok = bmin.windows(2).all(|w| w[1] >= w[0]);
    ensure(
        trend.steps() == ctx.cfg.steps
            && trend.violations.is_empty()
            && build_decreases == 0
            && trend.gap_strictly_decreasing_from(5)
            && bmin_ok,
        format!(
            "{} u decreases, min u {:.3e} -> {:.3e} (strict from step 5: {}), boundary_min nondecreasing: {bmin_ok}",
            trend.violations.len() + build_decreases,
            trend.u_min[4],
            trend.u_min[trend.steps() - 1],
            trend.gap_strictly_decreasing_from(5)
        ),
    )
}

fn multinomial(_ctx: &Context) -> Outcome {
    let report = audit_multinomial(10_000, 16).map_err(|e| e.to_string())?;
    let grid = [Ratio::new(0i64, 1), Ratio::new(1, 7), Ratio::new(2, 3), Ratio::new(1, 1), Ratio::new(5, 4)];
    let mut exact = true;
    for alpha in 1..=3 {
        for f in &grid {
            for g in &grid {
                for h in &grid {
                    exact &= mu_sum_weighted(alpha, f, g, h) == trinomial_closed(alpha, f, g, h);
                }
            }
        }
    }
    ensure(
        report.passed() && exact,
        format!(
            "{} violations, exact enumeration {}, hand case {:.2} <= {:.2}",
            report.violations.len(),
            if exact { "matches" } else { "differs" },
            report.extreme("hand_lhs"),
            report.extreme("hand_rhs")
        ),
    )
}

fn witness(ctx: &Context) -> Outcome {
    let p = &ctx.prepared;
    let state = ctx.checkpoint.to_state(&p.tol).map_err(|e| e.to_string())?;
    let grid = witness_grid();
    let ray = nonextend_witness(&state, 0.0, &grid, &p.tol).map_err(|e| e.to_string())?;
    let control = nonextend_witness(&state, std::f64::consts::PI, &grid, &p.tol).map_err(|e| e.to_string())?;
    let growth = conjugate_growth_report(&grid, 0.0, &ctx.checkpoint.harmonic).map_err(|e| e.to_string())?;
    let tail_max = growth.rows.iter().map(|r| r.tail_bound).fold(0.0, f64::max);
    let last = grid.last().copied().unwrap_or_default();
    ensure(
        ray.expectation == WitnessExpectation::Oscillating
            && ray.oscillation > 1.0
            && ray.h_variation < 1e-2
            && control.oscillation < 0.1
            && growth.monotone
            && growth.certified
            && tail_max < 1e-9
            && (1.0 - last - 1e-8).abs() < 1e-15,
        format!(
            "ray oscillation {:.3} rad, h variation {:.1e}, control {:.4} rad, conjugate monotone {} with tail <= {tail_max:.1e}",
            ray.oscillation, ray.h_variation, control.oscillation, growth.monotone
        ),
    )
}

fn determinism(ctx: &Context) -> Outcome {
    let again = run_build(&ctx.cfg).map_err(|e| e.to_string())?.0;
    let a = ctx.checkpoint.to_json().map_err(|e| e.to_string())?;
    let b = again.to_json().map_err(|e| e.to_string())?;
    ensure(a == b, format!("checkpoint {} bytes, identical: {}", a.len(), a == b))
}

fn main() -> ExitCode {
    let cfg = RunConfig::default();
    let start = Instant::now();
    let prepared = match prepare(&cfg) {
        Ok(p) => p,
        Err(e) => {
            println!("FAIL setup: {e}");
            return ExitCode::FAILURE;
        }
    };
    let (checkpoint, diagnostics) = match run_build(&cfg) {
        Ok(r) => r,
        Err(e) => {
            println!("FAIL build: {e}");
            return ExitCode::FAILURE;
        }
    };
    let ctx = Context {
        cfg,
        prepared,
        checkpoint,
        diagnostics,
    };
    let criteria: [Criterion; 10] = [
        ("geometry oracles", geometry_suite),
        ("two-sided boundary estimates", quadratic_bounds),
        ("far-field peak smallness", far_field),
        ("dilated-domain lower bound", dilation),
        ("per-step perturbation bounds", step_audit),
        ("schedule conditions", schedule),
        ("monotone u functional", monotone_u),
        ("multinomial bound", multinomial),
        ("non-extendability witness", witness),
        ("deterministic checkpoints", determinism),
    ];
    let mut failures = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        match check(&ctx) {
            Ok(msg) => println!("PASS {:>2} {name}: {msg}", n + 1),
            Err(msg) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {msg}", n + 1);
            }
        }
    }
    println!("{} of {} criteria passed in {:.1?}", criteria.len() - failures, criteria.len(), start.elapsed());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
