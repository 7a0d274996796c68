use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::norm_sqr;
use crate::scalar::Scalar;

/// Target block dimensions `n_1..n_{t+1}`, exponents `β_1..β_t` and the
/// trailing width `p` of the `h`-component.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTarget")]
pub struct TargetSignature {
    n: Vec<usize>,
    beta: Vec<u32>,
    p: usize,
}

#[derive(Deserialize)]
struct RawTarget {
    n: Vec<usize>,
    beta: Vec<u32>,
    p: usize,
}

impl TryFrom<RawTarget> for TargetSignature {
    type Error = Error;
    fn try_from(raw: RawTarget) -> Result<Self> {
        TargetSignature::new(raw.n, raw.beta, raw.p)
    }
}

impl TargetSignature {
    pub fn new(n: Vec<usize>, beta: Vec<u32>, p: usize) -> Result<Self> {
        let t = beta.len();
        if t == 0 {
            return Err(Error::Signature("at least one target exponent is required".into()));
        }
        if n.len() != t + 1 {
            return Err(Error::Signature(format!(
                "expected {} group sizes for {t} exponents, got {}",
                t + 1,
                n.len()
            )));
        }
        if n.iter().any(|&nk| nk < 2) {
            return Err(Error::Signature("group sizes must be at least 2".into()));
        }
        if beta.iter().any(|&b| b < 1) {
            return Err(Error::Signature("target exponents must be positive".into()));
        }
        if beta.iter().any(|&b| b as usize > t) {
            return Err(Error::Signature(format!(
                "largest target exponent must be below t + 1 = {}",
                t + 1
            )));
        }
        Ok(TargetSignature { n, beta, p })
    }

    pub fn n(&self) -> &[usize] {
        &self.n
    }

    pub fn beta(&self) -> &[u32] {
        &self.beta
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn t(&self) -> usize {
        self.beta.len()
    }

    /// Exponent of group `k` (0-based) with the convention `β_{t+1} = 1`.
    pub fn beta_ext(&self, k: usize) -> u32 {
        self.beta.get(k).copied().unwrap_or(1)
    }

    /// `β_t`, the last exponent before the unit one.
    pub fn beta_t(&self) -> u32 {
        *self.beta.last().expect("validated nonempty")
    }

    pub fn max_beta(&self) -> u32 {
        self.beta.iter().copied().max().expect("validated nonempty")
    }

    /// `N_k = n_1 + … + n_k`.
    pub fn partial_sum(&self, k: usize) -> usize {
        self.n[..k].iter().sum()
    }

    /// Number of peak indices `2N_{t+1}`.
    pub fn num_indices(&self) -> usize {
        2 * self.partial_sum(self.n.len())
    }

    pub fn total_components(&self) -> usize {
        self.num_indices() + self.p
    }

    /// Layout `[n_1, n_1, n_2, n_2, …, n_{t+1}, n_{t+1}, p]`.
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.n.iter().flat_map(|&nk| [nk, nk]).collect();
        sizes.push(self.p);
        sizes
    }

    /// Group owning peak index `i`, and whether it sits in the second twin.
    pub fn group_of_index(&self, i: usize) -> (usize, bool) {
        let mut start = 0;
        for (k, &nk) in self.n.iter().enumerate() {
            if i < start + 2 * nk {
                return (k, i >= start + nk);
            }
            start += 2 * nk;
        }
        panic!("index {i} out of range");
    }

    /// Component range of twin block `j` in `0..2t+2`.
    pub fn twin_range(&self, j: usize) -> std::ops::Range<usize> {
        let k = j / 2;
        let start = 2 * self.partial_sum(k) + (j % 2) * self.n[k];
        start..start + self.n[k]
    }

    pub fn h_range(&self) -> std::ops::Range<usize> {
        self.num_indices()..self.total_components()
    }

    /// `Σ_k a^{2β_k}` over `k = 1..t+1`.
    pub fn sum_a2beta<T: Scalar>(&self, a: T) -> T {
        (0..=self.t()).fold(T::zero(), |acc, k| acc + a.powi(2 * self.beta_ext(k) as i32))
    }
}

/// `Σ_k (‖v_(2k−1)‖^{2β_k} + ‖v_(2k)‖^{2β_k}) + ‖v_h‖²`.
pub fn norm_beta<T: Scalar>(tsig: &TargetSignature, v: &[Complex<T>]) -> Result<T> {
    if v.len() != tsig.total_components() {
        return Err(Error::Dimension {
            expected: tsig.total_components(),
            got: v.len(),
        });
    }
    Ok(norm_beta_unchecked(tsig, v))
}

pub(crate) fn norm_beta_unchecked<T: Scalar>(tsig: &TargetSignature, v: &[Complex<T>]) -> T {
    let mut acc = norm_sqr(&v[tsig.h_range()]);
    for j in 0..2 * (tsig.t() + 1) {
        let b = tsig.beta_ext(j / 2);
        acc += norm_sqr(&v[tsig.twin_range(j)]).powi(b as i32);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn validation() {
        assert!(TargetSignature::new(vec![2, 2, 2], vec![2, 2], 3).is_ok());
        assert!(TargetSignature::new(vec![2, 2, 2], vec![3, 2], 3).is_err());
        assert!(TargetSignature::new(vec![2, 1, 2], vec![2, 2], 3).is_err());
        assert!(TargetSignature::new(vec![2, 2], vec![2, 2], 3).is_err());
        assert!(TargetSignature::new(vec![2], vec![], 3).is_err());
    }

    #[test]
    fn layout() {
        let t = TargetSignature::new(vec![2, 3, 2], vec![2, 1], 3).unwrap();
        assert_eq!(t.num_indices(), 14);
        assert_eq!(t.total_components(), 17);
        assert_eq!(t.block_sizes(), vec![2, 2, 3, 3, 2, 2, 3]);
        assert_eq!(t.twin_range(3), 7..10);
        assert_eq!(t.group_of_index(6), (1, false));
        assert_eq!(t.group_of_index(7), (1, true));
        assert_eq!(t.group_of_index(13), (2, true));
        assert_eq!(t.beta_ext(2), 1);
        assert_eq!(t.beta_t(), 1);
    }

    #[test]
    fn norm_examples() {
        let t = TargetSignature::new(vec![2, 2, 2], vec![2, 2], 3).unwrap();
        let mut v = vec![c(0.0); 15];
        assert_eq!(norm_beta(&t, &v).unwrap(), 0.0);
        v[13] = c(1.0);
        assert_eq!(norm_beta(&t, &v).unwrap(), 1.0);
        assert!(norm_beta(&t, &v[..14]).is_err());

        let t = TargetSignature::new(vec![2, 2], vec![1], 0).unwrap();
        let x = 2f64.powf(-0.25);
        let v = vec![c(x), c(0.0), c(0.0), c(0.0), c(0.0), c(0.0), c(x), c(0.0)];
        // β_1 = 1 here, so each occupied twin contributes |x|².
        assert!((norm_beta(&t, &v).unwrap() - 2.0 * x * x).abs() < 1e-15);
    }

    #[test]
    fn squared_exponent_twins() {
        let t = TargetSignature::new(vec![2, 2, 2], vec![2, 2], 0).unwrap();
        let x = 2f64.powf(-0.25);
        let mut v = vec![c(0.0); 12];
        v[0] = c(x);
        v[2] = c(x);
        assert!((norm_beta(&t, &v).unwrap() - 1.0).abs() < 1e-15);
        assert!((t.sum_a2beta(0.5f64.sqrt()) - 1.0).abs() < 1e-15);
    }
}
