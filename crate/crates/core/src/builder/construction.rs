use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    build_step, norm_beta_unchecked, select_t_from_samples, shell_grid, MapState, Schedule,
    ScheduleCheck, Step, TargetSignature,
};
use crate::error::{Error, Result};
use crate::estimates::EstimateConstants;
use crate::geometry::{norm_sqr, random_boundary_point, BlockedVector, BoundaryNet, SourceSignature};
use crate::harmonic::ConjugatePairConfig;
use crate::scalar::{Scalar, Tolerances};

/// Cap `½ max(0, a_{ℓ−1}²/2^{1/β} − ε_ℓ^{1/(2t+2)})^β` of the monotone functional.
pub fn u_cap<T: Scalar>(tsig: &TargetSignature, k: usize, a_prev: T, eps: T) -> T {
    let beta = tsig.beta_ext(k) as i32;
    let two = T::lit(2.0);
    let inner = a_prev * a_prev / two.powf(T::one() / T::lit(beta as f64))
        - eps.powf(T::one() / T::count(2 * tsig.t() + 2));
    inner.max(T::zero()).powi(beta) / two
}

/// `u_ℓ(Z) = Σ_j min{‖f_(j)(Z)‖^{2β_k}, cap_k}` over the `2t+2` twin blocks.
/// The `h`-component does not enter.
pub fn u_value<T: Scalar>(tsig: &TargetSignature, f: &[Complex<T>], a_prev: T, eps: T) -> T {
    (0..2 * (tsig.t() + 1))
        .map(|j| {
            let k = j / 2;
            let power = norm_sqr(&f[tsig.twin_range(j)]).powi(tsig.beta_ext(k) as i32);
            power.min(u_cap(tsig, k, a_prev, eps))
        })
        .fold(T::zero(), |acc, x| acc + x)
}

/// Probe points with cached peak inner products, `h`-values and the running
/// `f`-part of the map.
#[derive(Debug, Clone)]
pub struct ProbeSet<T> {
    pub points: Vec<BlockedVector<T>>,
    /// Radial factor `s` with the point equal to `s` times a boundary point.
    pub radial: Vec<T>,
    inners: Vec<Vec<Complex<T>>>,
    pub h_sq: Vec<T>,
    pub f: Vec<Vec<Complex<T>>>,
}

impl<T: Scalar> ProbeSet<T> {
    pub fn new(state: &MapState<T>, points: Vec<BlockedVector<T>>, radial: Vec<T>) -> Result<Self> {
        let inners = points.iter().map(|z| state.inners(z.data())).collect();
        let h_sq = points
            .iter()
            .map(|z| Ok(norm_sqr(&state.eval_h(z)?)))
            .collect::<Result<Vec<_>>>()?;
        let f = points.iter().map(|z| state.eval_f_part(z.data())).collect();
        Ok(ProbeSet {
            points,
            radial,
            inners,
            h_sq,
            f,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Values of a candidate layer at every probe.
    pub fn layer_values(&self, state: &MapState<T>, step: &Step<T>) -> (Vec<Vec<Complex<T>>>, usize) {
        let mut clamps = 0;
        let values = self
            .inners
            .iter()
            .map(|w| {
                let (g, c) = state.layer_values(step, w);
                clamps += c;
                g
            })
            .collect();
        (values, clamps)
    }

    pub fn apply(&mut self, values: &[Vec<Complex<T>>]) {
        for (f, g) in self.f.iter_mut().zip(values) {
            for (fi, gi) in f.iter_mut().zip(g) {
                *fi = *fi + *gi;
            }
        }
    }

    /// `|||F(Z)|||^{2β}` at probe `i`.
    pub fn norm_beta(&self, tsig: &TargetSignature, i: usize) -> T {
        self.f_norm_beta(tsig, i) + self.h_sq[i]
    }

    /// The same quantity without the `h`-component.
    pub fn f_norm_beta(&self, tsig: &TargetSignature, i: usize) -> T {
        let f = &self.f[i];
        (0..2 * (tsig.t() + 1)).fold(T::zero(), |acc, j| {
            acc + norm_sqr(&f[tsig.twin_range(j)]).powi(tsig.beta_ext(j / 2) as i32)
        })
    }

    fn norm_beta_with(&self, tsig: &TargetSignature, i: usize, g: &[Complex<T>]) -> T {
        let sum: Vec<Complex<T>> = self.f[i].iter().zip(g).map(|(a, b)| *a + *b).collect();
        let mut full = sum;
        full.extend(std::iter::repeat_n(Complex::new(T::zero(), T::zero()), tsig.p()));
        norm_beta_unchecked(tsig, &full) + self.h_sq[i]
    }
}

/// Everything the construction consumes.
#[derive(Debug, Clone)]
pub struct ConstructionSetup<T> {
    pub source: SourceSignature,
    pub target: TargetSignature,
    pub harmonic: ConjugatePairConfig,
    pub net: BoundaryNet<T>,
    pub constants: EstimateConstants<T>,
    pub schedule: Schedule<T>,
    pub probes: usize,
    pub shell_probes: usize,
    pub probe_seed: u64,
    pub tol: Tolerances<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialDiagnostics {
    pub boundary_min: f64,
    pub boundary_max: f64,
    pub boundary_min_f: f64,
    pub h_sq_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub ell: usize,
    pub t: f64,
    pub eps: f64,
    pub a_prev: f64,
    pub nu: f64,
    pub eta: f64,
    pub boundary_min: f64,
    pub boundary_max: f64,
    /// Boundary minimum of the `f`-part alone.
    pub boundary_min_f: f64,
    /// `Σ_k a_ℓ^{2β_k}`.
    pub sum_a2beta: f64,
    /// Bound `ε_ℓ + Σ_k a_{ℓ−1}^{2β_k}` for the boundary after the step.
    pub step_bound: f64,
    pub step_violations: usize,
    /// Largest half-group sum `Σ|g^i|` on closure(E_T) probes.
    pub half_group_max: f64,
    pub half_group_violations: usize,
    /// Largest full sum `Σ_i |g^i|` on the same probes.
    pub total_g_max: f64,
    pub total_g_violations: usize,
    /// Largest `|||F_ℓ|||^{2β}` over boundary and shell probes.
    pub closed_max: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub u_decreases: usize,
    /// Smallest realized `u_ℓ − u_{ℓ−1}` over probes below every cap.
    pub u_increment_min: f64,
    pub negative_clamps: usize,
    pub capped_clamps: usize,
    pub exp_clamps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Diagnostics<T> {
    pub initial: InitialDiagnostics,
    pub steps: Vec<StepDiagnostics>,
    /// Schedule with the chosen shells `T_ℓ` filled in.
    pub schedule: Schedule<T>,
    pub schedule_check: ScheduleCheck,
}

impl<T> Diagnostics<T> {
    pub fn step_violations(&self) -> usize {
        self.steps
            .iter()
            .map(|s| s.step_violations + s.half_group_violations)
            .sum()
    }
}

/// Boundary probe directions and shell samples, all derived from `seed`.
pub fn probe_points<T: Scalar>(
    sig: &SourceSignature,
    n: usize,
    seed: u64,
    radial: impl Fn(&mut ChaCha8Rng, usize) -> T,
    tol: &Tolerances<T>,
) -> (Vec<BlockedVector<T>>, Vec<T>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut factors = Vec::with_capacity(n);
    for i in 0..n {
        let p = random_boundary_point(sig, &mut rng, tol);
        let s = radial(&mut rng, i);
        points.push(p.scale(s));
        factors.push(s);
    }
    (points, factors)
}

fn extremes<T: Scalar>(values: impl Iterator<Item = T>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v.as_f64()), hi.max(v.as_f64()))
    })
}

/// Runs `L` steps of shell selection and layer construction with audits.
pub fn run_construction<T: Scalar>(
    setup: &ConstructionSetup<T>,
) -> Result<(MapState<T>, Diagnostics<T>)> {
    let tsig = &setup.target;
    let tol = &setup.tol;
    let mut state = MapState::new(
        setup.source.clone(),
        tsig.clone(),
        setup.harmonic,
        setup.net.clone(),
        tol,
    )?;
    let mut schedule = setup.schedule.clone();
    schedule.t_shell.clear();
    let t_max = T::lit(shell_grid().next().expect("nonempty grid"));

    let (pts, s) = probe_points(&setup.source, setup.probes, setup.probe_seed, |_, _| T::one(), tol);
    let mut boundary = ProbeSet::new(&state, pts, s)?;
    // Shell samples cover the widest shell on the grid.
    let (pts, s) = probe_points(
        &setup.source,
        setup.shell_probes,
        setup.probe_seed.wrapping_add(1),
        |rng, _| {
            let u = T::lit(rng.random::<f64>());
            T::one() - u * (T::one() - T::one() / t_max)
        },
        tol,
    );
    let mut shell = ProbeSet::new(&state, pts, s)?;
    // Directions for the closure(E_T) probes; the dilation is applied per step.
    let (dirs, _) = probe_points(
        &setup.source,
        setup.shell_probes,
        setup.probe_seed.wrapping_add(2),
        |rng, i| {
            if i % 2 == 0 {
                T::one()
            } else {
                T::lit(rng.random::<f64>())
            }
        },
        tol,
    );

    let (bmin, bmax) = extremes((0..boundary.len()).map(|i| boundary.norm_beta(tsig, i)));
    let initial = InitialDiagnostics {
        boundary_min: bmin,
        boundary_max: bmax,
        boundary_min_f: extremes((0..boundary.len()).map(|i| boundary.f_norm_beta(tsig, i))).0,
        h_sq_max: extremes(boundary.h_sq.iter().copied()).1,
    };

    let nu = setup.constants.nu;
    let mut t_prev = t_max;
    let mut u_prev: Vec<T> = vec![T::zero(); boundary.len()];
    let mut steps = Vec::with_capacity(schedule.steps);
    for ell in 1..=schedule.steps {
        let a_prev = schedule.a[ell - 1];
        let eps = schedule.eps_at(ell);

        let bvals: Vec<T> = (0..boundary.len()).map(|i| boundary.norm_beta(tsig, i)).collect();
        let svals: Vec<(T, T)> = (0..shell.len())
            .map(|i| (shell.radial[i], shell.norm_beta(tsig, i)))
            .collect();
        let t = select_t_from_samples(&bvals, &svals, ell, t_prev)?;
        t_prev = t;

        let step = build_step(&state, a_prev, eps, t, &setup.constants, nu, tol)?;
        let (b_layer, b_clamps) = boundary.layer_values(&state, &step);
        let (s_layer, s_clamps) = shell.layer_values(&state, &step);

        let step_bound = eps + tsig.sum_a2beta(a_prev);
        let mut step_violations = 0;
        for (i, g) in b_layer.iter().enumerate() {
            if !(boundary.norm_beta_with(tsig, i, g) < step_bound) {
                step_violations += 1;
            }
        }

        let mut half_group_max = T::zero();
        let mut half_group_violations = 0;
        let mut total_g_max = T::zero();
        let mut total_g_violations = 0;
        let mut i_clamps = 0;
        for dir in &dirs {
            let z = dir.scale(T::one() / t);
            let inners = state.inners(z.data());
            let (g, c) = state.layer_values(&step, &inners);
            i_clamps += c;
            let total = g.iter().fold(T::zero(), |acc, x| acc + x.norm());
            total_g_max = total_g_max.max(total);
            total_g_violations += !(total < eps) as usize;
            for j in 0..2 * (tsig.t() + 1) {
                let sum = g[tsig.twin_range(j)]
                    .iter()
                    .fold(T::zero(), |acc, x| acc + x.norm());
                half_group_max = half_group_max.max(sum);
                half_group_violations += !(sum < eps) as usize;
            }
        }

        boundary.apply(&b_layer);
        shell.apply(&s_layer);
        let clamps = step.clamps;
        state.push_layer(step)?;
        schedule.t_shell.push(t);

        let budget = tsig.sum_a2beta(schedule.a[ell]);
        let (bmin, bmax) = extremes((0..boundary.len()).map(|i| boundary.norm_beta(tsig, i)));
        let smax = extremes((0..shell.len()).map(|i| shell.norm_beta(tsig, i))).1;
        let closed_max = bmax.max(smax);
        if !(closed_max < budget.as_f64()) {
            return Err(Error::Aborted {
                step: ell,
                reason: format!(
                    "closed-domain maximum {closed_max:e} reached the budget {:e}",
                    budget.as_f64()
                ),
            });
        }

        let mut u_min = f64::INFINITY;
        let mut u_max = f64::NEG_INFINITY;
        let mut u_decreases = 0;
        let mut u_increment_min = f64::INFINITY;
        let caps: Vec<T> = (0..=tsig.t()).map(|k| u_cap(tsig, k, a_prev, eps)).collect();
        for (i, f) in boundary.f.iter().enumerate() {
            let u = u_value(tsig, f, a_prev, eps);
            if ell > 1 && u < u_prev[i] - T::lit(1e-9) {
                u_decreases += 1;
            }
            let below_caps = (0..2 * (tsig.t() + 1)).all(|j| {
                let k = j / 2;
                norm_sqr(&f[tsig.twin_range(j)]).powi(tsig.beta_ext(k) as i32) < caps[k]
            });
            if ell > 1 && below_caps {
                u_increment_min = u_increment_min.min((u - u_prev[i]).as_f64());
            }
            u_min = u_min.min(u.as_f64());
            u_max = u_max.max(u.as_f64());
            u_prev[i] = u;
        }

        let diag = StepDiagnostics {
            ell,
            t: t.as_f64(),
            eps: eps.as_f64(),
            a_prev: a_prev.as_f64(),
            nu: nu.as_f64(),
            eta: state.layers[ell - 1].eta.as_f64(),
            boundary_min: bmin,
            boundary_max: bmax,
            boundary_min_f: extremes((0..boundary.len()).map(|i| boundary.f_norm_beta(tsig, i))).0,
            sum_a2beta: budget.as_f64(),
            step_bound: step_bound.as_f64(),
            step_violations,
            half_group_max: half_group_max.as_f64(),
            half_group_violations,
            total_g_max: total_g_max.as_f64(),
            total_g_violations,
            closed_max,
            u_min,
            u_max,
            u_decreases,
            u_increment_min,
            negative_clamps: clamps.negative,
            capped_clamps: clamps.capped,
            exp_clamps: b_clamps + s_clamps + i_clamps,
        };
        log::info!(
            "step {ell}: T = {}, boundary [{:.6e}, {:.6e}], budget {:.6e}",
            diag.t,
            diag.boundary_min,
            diag.boundary_max,
            diag.sum_a2beta
        );
        steps.push(diag);
    }

    let sup_h_sq = T::lit(initial.h_sq_max.max(shell.h_sq.iter().fold(0.0, |m, v| m.max(v.as_f64()))));
    let schedule_check = schedule.check(tsig, sup_h_sq);
    Ok((
        state,
        Diagnostics {
            initial,
            steps,
            schedule,
            schedule_check,
        },
    ))
}
