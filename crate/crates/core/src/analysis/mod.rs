//! Diagnostics on a finished construction: the monotone functional, radial
//! traces, the boundary witness and the multinomial bound.

mod multinomial;

pub use multinomial::{
    multi_indices, mu_sum, mu_sum_weighted, multinomial_bound_check, trinomial_closed,
    BoundCheck, MultiIndex,
};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::builder::{u_cap, u_value, MapState, Schedule};
use crate::error::{Error, Result};
use crate::geometry::{
    check_boundary, norm_sqr, project_to_boundary, BlockedVector, SourceSignature,
};
use crate::scalar::{Scalar, Tolerances};

/// Slack for the per-probe monotonicity check.
pub const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UViolation {
    pub ell: usize,
    pub probe: usize,
    pub drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    /// `u_ℓ` per step (outer, `ℓ = 1..L`) and probe (inner).
    #[serde(skip)]
    pub values: Vec<Vec<f64>>,
    pub u_min: Vec<f64>,
    pub u_max: Vec<f64>,
    /// `1 − min_probe u_ℓ`.
    pub gap: Vec<f64>,
    /// Caps per target group and step.
    pub caps: Vec<Vec<f64>>,
    /// Smallest realized increment among probes that sit below every cap.
    pub increment_margins: Vec<f64>,
    pub violations: Vec<UViolation>,
}

impl MonotonicityReport {
    pub fn steps(&self) -> usize {
        self.u_min.len()
    }

    /// `min u_ℓ` strictly increasing for `ℓ ≥ from`, i.e. the gap strictly
    /// decreasing. The minimum is compared directly because `1 − min u` can
    /// round to the same value when `min u` is tiny.
    pub fn gap_strictly_decreasing_from(&self, from: usize) -> bool {
        let start = from.max(1) - 1;
        self.u_min
            .get(start..)
            .is_some_and(|tail| tail.windows(2).all(|w| w[1] > w[0]))
    }
}

/// `u_ℓ` at every probe for `ℓ = 1..L`, checked for monotonicity.
pub fn u_trend<T: Scalar>(
    state: &MapState<T>,
    schedule: &Schedule<T>,
    probes: &[BlockedVector<T>],
) -> MonotonicityReport {
    let tsig = &state.target;
    let steps = state.num_layers();
    let mut f: Vec<Vec<Complex<T>>> = vec![vec![Complex::new(T::zero(), T::zero()); tsig.num_indices()]; probes.len()];
    let inners: Vec<Vec<Complex<T>>> = probes.iter().map(|z| state.inners(z.data())).collect();
    let mut report = MonotonicityReport {
        values: Vec::with_capacity(steps),
        u_min: Vec::with_capacity(steps),
        u_max: Vec::with_capacity(steps),
        gap: Vec::with_capacity(steps),
        caps: Vec::with_capacity(steps),
        increment_margins: Vec::with_capacity(steps),
        violations: Vec::new(),
    };
    for (idx, layer) in state.layers.iter().enumerate() {
        let ell = idx + 1;
        let a_prev = schedule.a[ell - 1];
        let eps = schedule.eps_at(ell);
        let caps: Vec<T> = (0..=tsig.t()).map(|k| u_cap(tsig, k, a_prev, eps)).collect();
        let mut row = Vec::with_capacity(probes.len());
        let mut margin = f64::INFINITY;
        for (i, fi) in f.iter_mut().enumerate() {
            let (g, _) = state.layer_values(layer, &inners[i]);
            for (a, b) in fi.iter_mut().zip(g) {
                *a = *a + b;
            }
            let u = u_value(tsig, fi, a_prev, eps).as_f64();
            if let Some(prev) = report.values.last() {
                let drop = prev[i] - u;
                if drop > MONOTONE_SLACK {
                    report.violations.push(UViolation { ell, probe: i, drop });
                }
                let below = (0..2 * (tsig.t() + 1)).all(|j| {
                    let k = j / 2;
                    norm_sqr(&fi[tsig.twin_range(j)]).powi(tsig.beta_ext(k) as i32) < caps[k]
                });
                if below {
                    margin = margin.min(u - prev[i]);
                }
            }
            row.push(u);
        }
        let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        report.u_min.push(lo);
        report.u_max.push(hi);
        report.gap.push(1.0 - lo);
        report.caps.push(caps.iter().map(|c| c.as_f64()).collect());
        report.increment_margins.push(margin);
        report.values.push(row);
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialRow {
    pub r: f64,
    pub norm_beta: f64,
}

/// `(r, |||F(r W)|||^{2β})` along the ray through a boundary point.
pub fn radial_trace<T: Scalar>(
    state: &MapState<T>,
    boundary_point: &BlockedVector<T>,
    r_grid: &[f64],
    tol: &Tolerances<T>,
) -> Result<Vec<RadialRow>> {
    check_boundary(&state.source, boundary_point, tol.boundary)?;
    r_grid
        .iter()
        .map(|&r| {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::Precondition(format!("radius {r} is not in [0, 1)")));
            }
            let z = boundary_point.scale(T::lit(r));
            Ok(RadialRow {
                r,
                norm_beta: state.norm_beta_at(&z)?.as_f64(),
            })
        })
        .collect()
}

/// Radii `1 − 10^{−x}` for `x = 2, 2.5, …, 8`.
pub fn witness_grid() -> Vec<f64> {
    (0..=12).map(|j| 1.0 - 10f64.powf(-(2.0 + 0.5 * j as f64))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRow {
    pub r: f64,
    /// Argument of the final component of `F`.
    pub phase: f64,
    pub modulus: f64,
    pub h_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessExpectation {
    /// The ray ends at the discontinuity of the boundary conjugate.
    Oscillating,
    /// Any other ray, where the phase has a limit.
    Convergent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub theta0: f64,
    pub tail_start: f64,
    pub rows: Vec<WitnessRow>,
    /// Largest wrapped phase difference between two tail rows.
    pub oscillation: f64,
    /// Spread of `‖h‖²` over the tail rows.
    pub h_variation: f64,
    /// Oscillation above 1 radian with `‖h‖²` varying by less than `1e−2`.
    pub oscillates: bool,
    /// Oscillation below 0.1 radian.
    pub converges: bool,
    pub expectation: WitnessExpectation,
}

impl WitnessReport {
    /// The observed behavior is the one expected for this ray.
    pub fn passed(&self) -> bool {
        match self.expectation {
            WitnessExpectation::Oscillating => self.oscillates,
            WitnessExpectation::Convergent => self.converges,
        }
    }
}

fn wrapped(d: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let x = d.rem_euclid(two_pi);
    x.min(two_pi - x)
}

/// Follows `Z(r) = r · π(e^{iθ0} e_1)`, with `π` the radial projection to the
/// boundary, and records the phase of the last component of `F`.
pub fn nonextend_witness<T: Scalar>(
    state: &MapState<T>,
    theta0: f64,
    r_grid: &[f64],
    tol: &Tolerances<T>,
) -> Result<WitnessReport> {
    let sig: &SourceSignature = &state.source;
    let mut dir = sig.zeros::<T>();
    dir.data_mut()[0] = Complex::new(T::lit(theta0.cos()), T::lit(theta0.sin()));
    let w = project_to_boundary(sig, &dir, tol)?;
    let tail_start = 0.99;
    let mut rows = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let z = w.scale(T::lit(r));
        let h = state.eval_h(&z)?;
        let f = state.eval(&z)?;
        let last = *f.data().last().expect("target has an h-component");
        if last.norm() == T::zero() {
            return Err(Error::Precondition(format!("final component vanishes at r = {r}")));
        }
        rows.push(WitnessRow {
            r,
            phase: last.arg().as_f64(),
            modulus: last.norm().as_f64(),
            h_sq: norm_sqr(&h).as_f64(),
        });
    }
    let tail: Vec<&WitnessRow> = rows.iter().filter(|row| row.r >= tail_start).collect();
    let mut oscillation = 0.0f64;
    for (i, a) in tail.iter().enumerate() {
        for b in &tail[i + 1..] {
            oscillation = oscillation.max(wrapped(a.phase - b.phase));
        }
    }
    let h_lo = tail.iter().map(|r| r.h_sq).fold(f64::INFINITY, f64::min);
    let h_hi = tail.iter().map(|r| r.h_sq).fold(f64::NEG_INFINITY, f64::max);
    let h_variation = if tail.is_empty() { 0.0 } else { h_hi - h_lo };
    let expectation = if wrapped(theta0) < 1e-12 {
        WitnessExpectation::Oscillating
    } else {
        WitnessExpectation::Convergent
    };
    Ok(WitnessReport {
        theta0,
        tail_start,
        rows,
        oscillation,
        h_variation,
        oscillates: oscillation > 1.0 && h_variation < 1e-2,
        converges: oscillation < 0.1,
        expectation,
    })
}

/// `Σ_j [(1 + ε_ℓ + Σ_{i>ℓ} ε_i)^{2β_k} − 1]` over the `2t+2` twin blocks:
/// the multinomial bound on how much the layers from `ℓ` on can change
/// `|||·|||^{2β}` where each of them sums to less than its `ε`.
pub fn ellinfty_tail<T: Scalar>(
    tsig: &crate::builder::TargetSignature,
    schedule: &Schedule<T>,
    ell: usize,
) -> f64 {
    let later: f64 = schedule.eps[ell..].iter().map(|e| e.as_f64()).sum();
    let g = schedule.eps_at(ell).as_f64();
    (0..2 * (tsig.t() + 1))
        .map(|j| mu_sum(tsig.beta_ext(j / 2), &g, &later))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub ell: usize,
    pub tail: f64,
    /// Largest `|||F_{ℓ−1}|||^{2β} − |||F_L|||^{2β}` over the shell samples.
    pub max_excess: f64,
    pub violations: usize,
}

/// Checks `|||F_{ℓ−1}(Z)|||^{2β} ≤ |||F_L(Z)|||^{2β} + tail(ℓ)` for `Z` between
/// the dilated domains of steps `ℓ + 1` and `ℓ`. The `h`-component is the
/// same on both sides and is left out.
pub fn ellinfty_check<T: Scalar>(
    state: &MapState<T>,
    schedule: &Schedule<T>,
    directions: &[BlockedVector<T>],
) -> Vec<TailRow> {
    let tsig = &state.target;
    let steps = state.num_layers();
    let full = |f: &[Complex<T>]| -> f64 {
        (0..2 * (tsig.t() + 1))
            .map(|j| {
                norm_sqr(&f[tsig.twin_range(j)])
                    .powi(tsig.beta_ext(j / 2) as i32)
                    .as_f64()
            })
            .sum()
    };
    let mut rows = Vec::with_capacity(steps);
    for ell in 1..=steps {
        let t_now = schedule.t_shell[ell - 1].as_f64();
        let t_next = schedule
            .t_shell
            .get(ell)
            .map_or(t_now, |t| t.as_f64());
        let truncated = state.truncated(ell - 1);
        let mut max_excess = f64::NEG_INFINITY;
        let mut violations = 0;
        let tail = ellinfty_tail(tsig, schedule, ell);
        for (i, p) in directions.iter().enumerate() {
            // Radial factor spread over [1/T_ℓ, 1/T_{ℓ+1}].
            let frac = if directions.len() > 1 {
                i as f64 / (directions.len() - 1) as f64
            } else {
                0.0
            };
            let s = 1.0 / t_now + frac * (1.0 / t_next - 1.0 / t_now);
            let z = p.scale(T::lit(s));
            let before = full(&truncated.eval_f_part(z.data()));
            let after = full(&state.eval_f_part(z.data()));
            let excess = before - after;
            max_excess = max_excess.max(excess);
            if excess > tail {
                violations += 1;
            }
        }
        rows.push(TailRow {
            ell,
            tail,
            max_excess,
            violations,
        });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapped_distance() {
        assert!((wrapped(0.5) - 0.5).abs() < 1e-15);
        assert!((wrapped(-0.5) - 0.5).abs() < 1e-15);
        assert!((wrapped(std::f64::consts::TAU - 0.25) - 0.25).abs() < 1e-12);
        assert!(wrapped(std::f64::consts::TAU) < 1e-12);
    }

    #[test]
    fn witness_grid_spans_tail() {
        let g = witness_grid();
        assert_eq!(g.len(), 13);
        assert!((g[0] - 0.99).abs() < 1e-15);
        assert!((g[12] - (1.0 - 1e-8)).abs() < 1e-15);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
