use serde::{Deserialize, Serialize};

use super::TargetSignature;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Budgets `a_ℓ`, perturbation sizes `ε_ℓ` and dilation shells `T_ℓ`.
///
/// `a` holds `a_0..a_L`, `delta` holds `δ_0..δ_L`, `eps[ℓ−1]` is `ε_ℓ` and
/// `t_shell[ℓ−1]` is `T_ℓ` once the construction has chosen it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Schedule<T> {
    pub eps0: T,
    /// Decay exponent in `ε_ℓ = eps0 · ℓ^{−q}`.
    pub q: T,
    pub a: Vec<T>,
    pub eps: Vec<T>,
    pub delta: Vec<T>,
    pub t_shell: Vec<T>,
    pub steps: usize,
}

impl<T: Scalar> Schedule<T> {
    /// `ε_ℓ` for `ℓ ≥ 1`.
    pub fn eps_at(&self, ell: usize) -> T {
        self.eps[ell - 1]
    }

    /// `Σ_k a_ℓ^{2β_k}`.
    pub fn budget(&self, tsig: &TargetSignature, ell: usize) -> T {
        tsig.sum_a2beta(self.a[ell])
    }
}

/// `ζ(q, m) = Σ_{j≥m} j^{−q}` for `q > 1`: direct sum over a fixed window,
/// then an Euler–Maclaurin tail with two correction terms.
pub fn hurwitz_zeta(q: f64, m: usize) -> f64 {
    const WINDOW: usize = 2000;
    let end = m + WINDOW;
    let direct: f64 = (m..end).map(|j| (j as f64).powf(-q)).sum();
    let n = end as f64;
    direct + n.powf(1.0 - q) / (q - 1.0) + 0.5 * n.powf(-q) + q * n.powf(-q - 1.0) / 12.0
}

/// Largest admissible decay exponent: 3 when `(2t+2)/max β ≥ 3`, otherwise
/// `(2t+2)/max β`, which must still exceed 2.
pub fn decay_exponent(tsig: &TargetSignature) -> Result<f64> {
    let ceiling = (2 * tsig.t() + 2) as f64 / tsig.max_beta() as f64;
    let q = ceiling.min(3.0);
    if q <= 2.0 {
        return Err(Error::Config(format!(
            "no decay exponent in (2, {ceiling}] is available"
        )));
    }
    if q < 3.0 {
        log::warn!("decay exponent lowered to {q}; divergence margin is thin");
    }
    Ok(q)
}

/// Solves `Σ_k a^{2β_k} = target` on `[0, 1]` by bisection.
pub fn solve_budget<T: Scalar>(tsig: &TargetSignature, target: T) -> T {
    let (mut lo, mut hi) = (T::zero(), T::one());
    let two = T::lit(2.0);
    for _ in 0..200 {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if tsig.sum_a2beta(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / two
}

/// Builds `ε_ℓ = eps0 ℓ^{−q}`, `δ_ℓ = 2 Σ_{j>ℓ} ε_j` and `a_ℓ` with
/// `Σ_k a_ℓ^{2β_k} = 1 − δ_ℓ`.
pub fn make_schedule<T: Scalar>(
    tsig: &TargetSignature,
    steps: usize,
    sup_h_sq: T,
    eps0: T,
) -> Result<Schedule<T>> {
    if !(sup_h_sq < T::one()) {
        return Err(Error::Precondition(format!("sup |h|^2 = {sup_h_sq} must be below 1")));
    }
    if !(eps0 > T::zero()) {
        return Err(Error::Config(format!("eps0 = {eps0} must be positive")));
    }
    let q = decay_exponent(tsig)?;
    let e0 = eps0.as_f64();
    let eps: Vec<T> = (1..=steps)
        .map(|l| T::lit(e0 * (l as f64).powf(-q)))
        .collect();
    let delta: Vec<T> = (0..=steps)
        .map(|l| T::lit(2.0 * e0 * hurwitz_zeta(q, l + 1)))
        .collect();
    if !(T::one() - delta[0] > sup_h_sq) {
        return Err(Error::Config(format!(
            "eps0 = {eps0} leaves no room above sup |h|^2 = {sup_h_sq}"
        )));
    }
    let a = delta
        .iter()
        .map(|&d| solve_budget(tsig, T::one() - d))
        .collect();
    Ok(Schedule {
        eps0,
        q: T::lit(q),
        a,
        eps,
        delta,
        t_shell: Vec::new(),
        steps,
    })
}

/// Outcome of checking the four sequence conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleCheck {
    pub a_increasing: bool,
    pub budgets_increasing_below_one: bool,
    pub eps_decreasing: bool,
    /// Upper bound on `Σ_{ℓ>L} √ε_ℓ`, finite when `q > 2`.
    pub sqrt_tail: f64,
    pub sqrt_summable: bool,
    /// `q · max β / (2t+2)`; the power sum diverges when this is at most 1.
    pub divergence_exponent: f64,
    pub power_sum_diverges: bool,
    pub power_partial_sum: f64,
    /// `min_ℓ (Σ a_ℓ^{2β} − Σ a_{ℓ−1}^{2β} − ε_ℓ)`.
    pub increment_margin: f64,
    /// `Σ a_0^{2β} − sup ‖h‖²`.
    pub h_margin: f64,
    pub shells_nonincreasing: bool,
    pub shells_above_one: bool,
}

impl ScheduleCheck {
    pub fn passed(&self) -> bool {
        self.a_increasing
            && self.budgets_increasing_below_one
            && self.eps_decreasing
            && self.sqrt_summable
            && self.power_sum_diverges
            && self.increment_margin > 0.0
            && self.h_margin > 0.0
            && self.shells_nonincreasing
            && self.shells_above_one
    }
}

impl<T: Scalar> Schedule<T> {
    pub fn check(&self, tsig: &TargetSignature, sup_h_sq: T) -> ScheduleCheck {
        let budgets: Vec<T> = self.a.iter().map(|&a| tsig.sum_a2beta(a)).collect();
        let q = self.q.as_f64();
        let e0 = self.eps0.as_f64();
        let power = tsig.max_beta() as f64 / (2 * tsig.t() + 2) as f64;
        let increment_margin = (1..=self.steps)
            .map(|l| (budgets[l] - budgets[l - 1] - self.eps_at(l)).as_f64())
            .fold(f64::INFINITY, f64::min);
        ScheduleCheck {
            a_increasing: self.a.windows(2).all(|w| w[1] > w[0]),
            budgets_increasing_below_one: budgets.windows(2).all(|w| w[1] > w[0])
                && budgets.iter().all(|&b| b < T::one()),
            eps_decreasing: self.eps.windows(2).all(|w| w[1] < w[0])
                && self.eps.iter().all(|&e| e > T::zero()),
            sqrt_tail: e0.sqrt() * hurwitz_zeta(q / 2.0, self.steps + 1),
            sqrt_summable: q > 2.0,
            divergence_exponent: q * power,
            power_sum_diverges: q * power <= 1.0,
            power_partial_sum: self.eps.iter().map(|e| e.as_f64().powf(power)).sum(),
            increment_margin,
            h_margin: (budgets[0] - sup_h_sq).as_f64(),
            shells_nonincreasing: self.t_shell.windows(2).all(|w| w[1] <= w[0]),
            shells_above_one: self.t_shell.iter().all(|&t| t > T::one()),
        }
    }
}

/// `η = ε / (1 + Σ_k Σ_{j=1}^{β_k} C(β_k, j) · 2 · (1 + 11 n_k)^j)`.
pub fn eta_from_eps<T: Scalar>(tsig: &TargetSignature, eps: T) -> T {
    let mut denom = 1.0;
    for k in 0..=tsig.t() {
        let b = tsig.beta_ext(k) as u64;
        let base = 1.0 + 11.0 * tsig.n()[k] as f64;
        let mut binom = 1.0;
        for j in 1..=b {
            binom = binom * (b - j + 1) as f64 / j as f64;
            denom += binom * 2.0 * base.powi(j as i32);
        }
    }
    eps / T::lit(denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tsig() -> TargetSignature {
        TargetSignature::new(vec![2, 2, 2], vec![2, 2], 3).unwrap()
    }

    #[test]
    fn hurwitz_against_known_values() {
        // ζ(3) (Apéry's constant) and ζ(2) = π²/6.
        assert!((hurwitz_zeta(3.0, 1) - 1.202_056_903_159_594_3).abs() < 1e-14);
        assert!((hurwitz_zeta(2.0, 1) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-13);
        let direct: f64 = (5..200_000).map(|j| (j as f64).powi(-3)).sum();
        assert!((hurwitz_zeta(3.0, 5) - direct).abs() < 1e-10);
    }

    #[test]
    fn schedule_values() {
        let s = make_schedule::<f64>(&tsig(), 20, 1e-4, 0.01).unwrap();
        assert!((s.delta[0] - 0.02 * 1.202_056_903_159_594).abs() < 1e-14);
        assert!((s.delta[0] - 0.0240411).abs() < 1e-7);
        // Oracle: 2x² + x = 1 − δ_0 has the positive root x = (−1 + √(1 + 8(1 − δ_0)))/4.
        let x = (-1.0 + (1.0 + 8.0 * (1.0 - s.delta[0])).sqrt()) / 4.0;
        assert!((s.a[0] - x.sqrt()).abs() < 1e-14);
        assert!((x - 0.491943).abs() < 1e-6);
        assert!((s.a[0] - 0.701386).abs() < 1e-6);
        let limit = solve_budget(&tsig(), 1.0f64);
        assert!((limit - 0.5f64.sqrt()).abs() < 1e-15);
        for l in 1..=20 {
            assert!((s.delta[l - 1] - s.delta[l] - 2.0 * s.eps_at(l)).abs() < 1e-15);
        }
    }

    #[test]
    fn schedule_conditions_hold() {
        let mut s = make_schedule::<f64>(&tsig(), 20, 1e-4, 0.01).unwrap();
        s.t_shell = vec![1.5; 20];
        let c = s.check(&tsig(), 1e-4);
        assert!(c.passed(), "{c:?}");
        assert!((c.divergence_exponent - 1.0).abs() < 1e-15);
        assert!(make_schedule::<f64>(&tsig(), 5, 0.99, 0.3).is_err());
        assert!(make_schedule::<f64>(&tsig(), 5, 1.0, 0.01).is_err());
    }

    #[test]
    fn exponent_regimes() {
        assert_eq!(decay_exponent(&tsig()).unwrap(), 3.0);
        let narrow = TargetSignature::new(vec![2, 2, 2, 2], vec![3, 1, 1], 1).unwrap();
        assert!((decay_exponent(&narrow).unwrap() - 8.0 / 3.0).abs() < 1e-15);
        let flat = TargetSignature::new(vec![2, 2], vec![1], 1).unwrap();
        assert_eq!(decay_exponent(&flat).unwrap(), 3.0);
    }

    #[test]
    fn eta_denominator() {
        let eta = eta_from_eps(&tsig(), 2347.0f64);
        assert!((eta - 1.0).abs() < 1e-12);
    }
}
