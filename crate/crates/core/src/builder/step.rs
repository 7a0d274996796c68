use num_complex::Complex;

use super::{eta_from_eps, ClampCounts, MapState, Step};
use crate::error::{Error, Result};
use crate::estimates::EstimateConstants;
use crate::geometry::norm_sqr;
use crate::scalar::{Scalar, Tolerances};

/// Dilation grid `τ_j = 1 + 2^{−j}`, largest first.
pub fn shell_grid() -> impl Iterator<Item = f64> {
    (1..=40).map(|j| 1.0 + 0.5f64.powi(j))
}

/// Shells below this are treated as a hard failure.
pub const MIN_SHELL: f64 = 1.0 + 1e-6;

/// Number of same-group physical points `W_q` with `W_p ∈ B(W_q, λr)`.
pub fn count_i<T: Scalar>(state: &MapState<T>, p: usize, radius: T) -> usize {
    let net = &state.net;
    let w = &net.points[p];
    net.group_points(net.group_of_point(p))
        .filter(|&q| net.points[q].distance(w) < radius)
        .count()
}

/// Picks the dilation shell for step `ell`.
///
/// `boundary` holds `|||F_{ℓ−1}|||^{2β}` on boundary probes and `shell` holds
/// `(s, |||F_{ℓ−1}(sP)|||^{2β})` for shell probes at radial factor `s`. A value
/// `τ` qualifies when every shell sample with `s > 1/τ` stays within `2^{−ℓ}`
/// of the boundary minimum. The largest qualifying `τ ≤ t_prev` is returned;
/// qualification is monotone in `τ` so the scan stops at the first hit.
pub fn select_t_from_samples<T: Scalar>(
    boundary: &[T],
    shell: &[(T, T)],
    ell: usize,
    t_prev: T,
) -> Result<T> {
    let floor = boundary.iter().copied().fold(T::infinity(), T::min)
        - T::lit(0.5f64.powi(ell as i32));
    for tau in shell_grid().map(T::lit) {
        if tau > t_prev {
            continue;
        }
        if tau < T::lit(MIN_SHELL) {
            break;
        }
        let inv = T::one() / tau;
        if shell.iter().all(|&(s, v)| s <= inv || v >= floor) {
            return Ok(tau);
        }
    }
    Err(Error::Aborted {
        step: ell,
        reason: format!("no dilation shell above {MIN_SHELL} qualifies"),
    })
}

/// Evaluates `F_{ℓ−1}` on the given probes and calls [`select_t_from_samples`].
pub fn select_t<T: Scalar>(
    state: &MapState<T>,
    ell: usize,
    boundary_probes: &[crate::geometry::BlockedVector<T>],
    shell_probes: &[(T, crate::geometry::BlockedVector<T>)],
    t_prev: T,
) -> Result<T> {
    let boundary = boundary_probes
        .iter()
        .map(|z| state.norm_beta_at(z))
        .collect::<Result<Vec<_>>>()?;
    let shell = shell_probes
        .iter()
        .map(|(s, z)| Ok((*s, state.norm_beta_at(z)?)))
        .collect::<Result<Vec<_>>>()?;
    select_t_from_samples(&boundary, &shell, ell, t_prev)
}

/// One layer: coefficients chosen so that each twin block moves toward
/// `a²/2^{1/β_k}` at its own net point, with the new term orthogonal in phase
/// to the current value there.
pub fn build_step<T: Scalar>(
    state: &MapState<T>,
    a: T,
    eps: T,
    t: T,
    consts: &EstimateConstants<T>,
    nu: T,
    _tol: &Tolerances<T>,
) -> Result<Step<T>> {
    let tsig = &state.target;
    if !(eps + tsig.sum_a2beta(a) < T::one()) {
        return Err(Error::Precondition(format!(
            "eps + sum a^(2 beta) = {} is not below 1",
            eps + tsig.sum_a2beta(a)
        )));
    }
    let ell = state.num_layers() + 1;
    let radius = consts.lambda * consts.r;
    let values = state
        .net
        .points
        .iter()
        .map(|w| state.eval(w))
        .collect::<Result<Vec<_>>>()?;
    let h_range = tsig.h_range();
    let last = tsig.t();
    let two = T::lit(2.0);
    let mut clamps = ClampCounts::default();
    let mut gamma = Vec::with_capacity(tsig.num_indices());
    for i in 0..tsig.num_indices() {
        let p = state.net.index_map[i];
        let (k, second) = tsig.group_of_index(i);
        let j = 2 * k + second as usize;
        let v = values[p].data();
        let beta = T::lit(tsig.beta_ext(k) as f64);
        let mut bracket = a * a / two.powf(T::one() / beta) - norm_sqr(&v[tsig.twin_range(j)]);
        if k == last && second {
            bracket -= norm_sqr(&v[h_range.clone()]);
        }
        let mut modulus_sq = bracket / T::count(count_i(state, p, radius));
        if modulus_sq < T::zero() {
            log::warn!("step {ell}: index {i} has negative bracket {bracket}; set to 0");
            clamps.negative += 1;
            modulus_sq = T::zero();
        }
        let mut modulus = modulus_sq.sqrt();
        if modulus > T::one() {
            log::warn!("step {ell}: index {i} has |gamma| = {modulus}; scaled to 1");
            clamps.capped += 1;
            modulus = T::one();
        }
        let f = v[i];
        let r = f.norm();
        let g = if r > T::zero() {
            Complex::new(T::zero(), modulus) * (f / r)
        } else {
            Complex::new(modulus, T::zero())
        };
        gamma.push(g);
    }
    Ok(Step {
        ell,
        nu,
        eta: eta_from_eps(tsig, eps),
        eps,
        a,
        t,
        gamma,
        clamps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::TargetSignature;
    use crate::estimates::{CalibrationSettings, ConstantOverrides, LambdaPolicy};
    use crate::geometry::{sample_boundary_net, SourceSignature};
    use crate::harmonic::ConjugatePairConfig;

    fn setup(n: Vec<usize>) -> (MapState<f64>, EstimateConstants<f64>) {
        let sig = SourceSignature::new(vec![1, 1], vec![2]).unwrap();
        let tsig = TargetSignature::new(n, vec![2, 2], 3).unwrap();
        let tol = Tolerances::default();
        let net = sample_boundary_net(&sig, &tsig, 7, 2000, &tol).unwrap();
        let settings = CalibrationSettings {
            samples: 2000,
            seed: 3,
            eta: 0.01,
            policy: LambdaPolicy::Widen,
        };
        let consts =
            EstimateConstants::calibrate(&sig, &tsig, &settings, &ConstantOverrides::default(), &tol)
                .unwrap();
        let state = MapState::new(sig, tsig, ConjugatePairConfig::default(), net, &tol).unwrap();
        (state, consts)
    }

    #[test]
    fn first_step_modulus_from_zero_map() {
        let (state, consts) = setup(vec![4, 2, 2]);
        let tol = Tolerances::default();
        // λr is far larger than the boundary diameter, so #I = n_1 = 4.
        assert!(consts.lambda * consts.r > 4.0);
        assert_eq!(count_i(&state, 0, consts.lambda * consts.r), 4);
        let step = build_step(&state, 0.701386, 0.01, 1.5, &consts, 61.0, &tol).unwrap();
        let x = 0.701386f64 * 0.701386;
        let expected = (x / 2f64.sqrt() / 4.0).sqrt();
        assert!((expected - 0.294897).abs() < 1e-6);
        for g in &step.gamma[..8] {
            assert!((g.norm() - expected).abs() < 1e-12);
            assert_eq!(g.im, 0.0);
        }
        assert_eq!(step.clamps.total(), 0);
    }

    #[test]
    fn second_step_is_phase_orthogonal() {
        let (mut state, consts) = setup(vec![2, 2, 2]);
        let tol = Tolerances::default();
        let s1 = build_step(&state, 0.7, 0.01, 1.5, &consts, 61.0, &tol).unwrap();
        state.push_layer(s1).unwrap();
        let s2 = build_step(&state, 0.702, 0.001, 1.5, &consts, 61.0, &tol).unwrap();
        for (i, g) in s2.gamma.iter().enumerate() {
            let w = state.net.point_of_index(i).clone();
            let f = state.eval(&w).unwrap().data()[i];
            assert!((f * g.conj() + f.conj() * g).norm() < 1e-12);
            if f.im.abs() < 1e-14 && f.re > 0.0 {
                assert!(g.re.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn layer_reproduces_gamma_at_net_point() {
        let (mut state, consts) = setup(vec![2, 2, 2]);
        let tol = Tolerances::default();
        let s1 = build_step(&state, 0.7, 0.01, 1.5, &consts, 61.0, &tol).unwrap();
        let gamma = s1.gamma.clone();
        state.push_layer(s1).unwrap();
        for (i, g) in gamma.iter().enumerate() {
            let w = state.net.point_of_index(i).clone();
            let f = state.eval(&w).unwrap().data()[i];
            assert!((f - g).norm() < 1e-12);
        }
    }

    #[test]
    fn budget_precondition() {
        let (state, consts) = setup(vec![2, 2, 2]);
        let tol = Tolerances::default();
        assert!(build_step(&state, 0.75, 0.2, 1.5, &consts, 61.0, &tol).is_err());
    }

    #[test]
    fn shell_selection() {
        let boundary = [0.5, 0.6];
        // A shell sample at s = 0.7 that dips below the floor rules out τ = 1.5.
        let shell = [(0.7, 0.2), (0.9, 0.5)];
        let t = select_t_from_samples(&boundary, &shell, 3, 2.0).unwrap();
        assert_eq!(t, 1.25);
        let t = select_t_from_samples(&boundary, &[(0.9, 0.5)], 3, 2.0).unwrap();
        assert_eq!(t, 1.5);
        let t = select_t_from_samples(&boundary, &[(0.9, 0.5)], 3, 1.2).unwrap();
        assert_eq!(t, 1.125);
        assert!(select_t_from_samples(&boundary, &[(1.0, 0.0)], 3, 2.0).is_err());
    }
}
