use num_complex::Complex;
use num_traits::{FromPrimitive, NumOps, One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::norm_sqr;
use crate::scalar::Scalar;

/// Multi-index `μ = (μ1, μ2, μ3)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiIndex {
    pub mu: [u32; 3],
}

fn factorial(n: u32) -> u64 {
    (1..=n as u64).product()
}

impl MultiIndex {
    pub fn order(&self) -> u32 {
        self.mu.iter().sum()
    }

    /// `μ! = μ1! μ2! μ3!`.
    pub fn factorial(&self) -> u64 {
        self.mu.iter().map(|&m| factorial(m)).product()
    }

    /// `|μ|! / μ!`.
    pub fn coefficient(&self) -> u64 {
        factorial(self.order()) / self.factorial()
    }
}

/// All multi-indices of the given order, `μ1` outermost.
pub fn multi_indices(order: u32) -> impl Iterator<Item = MultiIndex> {
    (0..=order).flat_map(move |m1| {
        (0..=order - m1).map(move |m2| MultiIndex {
            mu: [m1, m2, order - m1 - m2],
        })
    })
}

fn pow<R: Clone + One + NumOps>(x: &R, n: u32) -> R {
    (0..n).fold(R::one(), |acc, _| acc * x.clone())
}

/// `Σ_{|μ|=2α, μ1≠2α} (2α)!/μ! · f^{μ1} g^{μ2} h^{μ3}` by explicit enumeration.
pub fn mu_sum_weighted<R>(alpha: u32, f: &R, g: &R, h: &R) -> R
where
    R: Clone + Zero + One + NumOps + FromPrimitive,
{
    let order = 2 * alpha;
    multi_indices(order)
        .filter(|m| m.mu[0] != order)
        .fold(R::zero(), |acc, m| {
            let c = R::from_u64(m.coefficient()).expect("coefficient fits");
            acc + c * pow(f, m.mu[0]) * pow(g, m.mu[1]) * pow(h, m.mu[2])
        })
}

/// The bound's correction term: the weighted sum with `f = 1`, which is what
/// remains once `‖F‖^{μ1} ≤ 1` has been dropped.
pub fn mu_sum<R>(alpha: u32, g: &R, h: &R) -> R
where
    R: Clone + Zero + One + NumOps + FromPrimitive,
{
    mu_sum_weighted(alpha, &R::one(), g, h)
}

/// Closed form `(f + g + h)^{2α} − f^{2α}` of [`mu_sum_weighted`].
pub fn trinomial_closed<R>(alpha: u32, f: &R, g: &R, h: &R) -> R
where
    R: Clone + Zero + One + NumOps,
{
    let total = f.clone() + g.clone() + h.clone();
    pow(&total, 2 * alpha) - pow(f, 2 * alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `‖F+G+H‖^{2α} ≤ ‖F‖^{2α} + Σ_{μ1≠2α} (2α)!/μ! ‖G‖^{μ2} ‖H‖^{μ3}` for `‖F‖ ≤ 1`.
pub fn multinomial_bound_check<T: Scalar>(
    f: &[Complex<T>],
    g: &[Complex<T>],
    h: &[Complex<T>],
    alpha: u32,
) -> Result<BoundCheck> {
    if g.len() != f.len() || h.len() != f.len() {
        return Err(Error::Dimension {
            expected: f.len(),
            got: if g.len() != f.len() { g.len() } else { h.len() },
        });
    }
    if !(1..=3).contains(&alpha) {
        return Err(Error::Precondition(format!("alpha = {alpha} is not in 1..=3")));
    }
    let nf = norm_sqr(f).as_f64().sqrt();
    if nf > 1.0 {
        return Err(Error::Precondition(format!("|F| = {nf} exceeds 1")));
    }
    let ng = norm_sqr(g).as_f64().sqrt();
    let nh = norm_sqr(h).as_f64().sqrt();
    let total: Vec<Complex<T>> = f
        .iter()
        .zip(g)
        .zip(h)
        .map(|((a, b), c)| *a + *b + *c)
        .collect();
    let lhs = norm_sqr(&total).as_f64().powi(alpha as i32);
    let rhs = nf.powi(2 * alpha as i32) + mu_sum(alpha, &ng, &nh);
    Ok(BoundCheck {
        lhs,
        rhs,
        pass: lhs <= rhs + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn counts_and_coefficients() {
        assert_eq!(multi_indices(2).count(), 6);
        assert_eq!(multi_indices(6).count(), 28);
        let m = MultiIndex { mu: [1, 2, 3] };
        assert_eq!(m.factorial(), 12);
        assert_eq!(m.coefficient(), 60);
        // Coefficients of a trinomial expansion sum to 3^n.
        let total: u64 = multi_indices(4).map(|m| m.coefficient()).sum();
        assert_eq!(total, 81);
    }

    #[test]
    fn hand_case() {
        let c = |x: f64| Complex::new(x, 0.0);
        let r = multinomial_bound_check(&[c(0.5), c(0.0)], &[c(0.1), c(0.0)], &[c(0.0), c(0.2)], 1)
            .unwrap();
        assert!((r.lhs - 0.40).abs() < 1e-15);
        assert!((r.rhs - 0.94).abs() < 1e-15);
        assert!(r.pass);
    }

    #[test]
    fn zero_perturbation() {
        let f = [Complex::new(0.3f64, 0.4)];
        let z = [Complex::new(0.0f64, 0.0)];
        for alpha in 1..=3 {
            let r = multinomial_bound_check(&f, &z, &z, alpha).unwrap();
            assert_eq!(r.lhs, r.rhs);
        }
    }

    #[test]
    fn enumeration_matches_closed_form_exactly() {
        let vals = [Ratio::new(0i64, 1), Ratio::new(1, 3), Ratio::new(2, 5), Ratio::new(1, 1)];
        for alpha in 1..=3 {
            for f in &vals {
                for g in &vals {
                    for h in &vals {
                        assert_eq!(
                            mu_sum_weighted(alpha, f, g, h),
                            trinomial_closed(alpha, f, g, h)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn preconditions() {
        let c = |x: f64| Complex::new(x, 0.0);
        assert!(multinomial_bound_check(&[c(1.1)], &[c(0.0)], &[c(0.0)], 1).is_err());
        assert!(multinomial_bound_check(&[c(0.1)], &[c(0.0)], &[c(0.0)], 4).is_err());
        assert!(multinomial_bound_check(&[c(0.1)], &[c(0.0), c(0.0)], &[c(0.0)], 1).is_err());
    }
}
