//! Geometry of the source domain `{Σ ‖z_(k)‖^{2α_k} + ‖z_(s+1)‖² < 1}`.

mod blocked;
mod hessian;
mod net;

pub use blocked::{inner, norm_sqr, BlockedVector};
pub use hessian::{
    degenerate_partner, find_t0_mean_value, hessian_q, hessian_q_closed, mean_value_residual,
    DegenerateSpec,
};
pub use net::{sample_boundary_net, BoundaryNet};

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Scalar, Tolerances};

/// Block dimensions `m_1..m_{s+1}` and exponents `α_1..α_s`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSignature")]
pub struct SourceSignature {
    m: Vec<usize>,
    alpha: Vec<u32>,
}

#[derive(Deserialize)]
struct RawSignature {
    m: Vec<usize>,
    alpha: Vec<u32>,
}

impl TryFrom<RawSignature> for SourceSignature {
    type Error = Error;
    fn try_from(raw: RawSignature) -> Result<Self> {
        SourceSignature::new(raw.m, raw.alpha)
    }
}

impl SourceSignature {
    pub fn new(m: Vec<usize>, alpha: Vec<u32>) -> Result<Self> {
        if m.is_empty() {
            return Err(Error::Signature("at least one block is required".into()));
        }
        if alpha.len() + 1 != m.len() {
            return Err(Error::Signature(format!(
                "expected {} exponents for {} blocks, got {}",
                m.len() - 1,
                m.len(),
                alpha.len()
            )));
        }
        if m.contains(&0) {
            return Err(Error::Signature("block dimensions must be positive".into()));
        }
        if alpha.iter().any(|&a| a < 2) {
            return Err(Error::Signature("exponents must be at least 2".into()));
        }
        Ok(SourceSignature { m, alpha })
    }

    pub fn m(&self) -> &[usize] {
        &self.m
    }

    pub fn alpha(&self) -> &[u32] {
        &self.alpha
    }

    /// Number of weighted blocks.
    pub fn s(&self) -> usize {
        self.alpha.len()
    }

    /// Total complex dimension `M_{s+1}`.
    pub fn dim(&self) -> usize {
        self.m.iter().sum()
    }

    /// Partial sum `M_k = m_1 + … + m_k`.
    pub fn partial_sum(&self, k: usize) -> usize {
        self.m[..k].iter().sum()
    }

    /// Exponent of block `k` (0-based), with 1 for the last block.
    pub fn exponent(&self, k: usize) -> u32 {
        self.alpha.get(k).copied().unwrap_or(1)
    }

    pub fn alpha_min(&self) -> Option<u32> {
        self.alpha.iter().copied().min()
    }

    pub fn alpha_max(&self) -> Option<u32> {
        self.alpha.iter().copied().max()
    }

    pub fn check_dim<T: Scalar>(&self, z: &BlockedVector<T>) -> Result<()> {
        if z.sizes() != self.m.as_slice() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(())
    }

    /// Builds a point from a flat slice of complex coordinates.
    pub fn point<T: Scalar>(&self, data: Vec<Complex<T>>) -> Result<BlockedVector<T>> {
        BlockedVector::new(data, self.m.clone())
    }

    pub fn zeros<T: Scalar>(&self) -> BlockedVector<T> {
        BlockedVector::zeros(&self.m)
    }
}

/// Dilation factor of the shrunken domain `E_τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DilationParam {
    tau: f64,
}

impl DilationParam {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau >= 1.0) {
            return Err(Error::Precondition(format!("dilation must be >= 1, got {tau}")));
        }
        Ok(DilationParam { tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// `‖v‖^{2e}` for a block with squared norm `s`.
#[inline]
fn block_power<T: Scalar>(s: T, e: u32) -> T {
    s.powi(e as i32)
}

/// Defining function `ρ(Z) = Σ ‖z_(k)‖^{2α_k} + ‖z_(s+1)‖² − 1`.
pub fn eval_rho<T: Scalar>(sig: &SourceSignature, z: &BlockedVector<T>) -> Result<T> {
    sig.check_dim(z)?;
    Ok(rho_unchecked(sig, z))
}

pub(crate) fn rho_unchecked<T: Scalar>(sig: &SourceSignature, z: &BlockedVector<T>) -> T {
    let mut acc = T::zero();
    for k in 0..sig.m.len() {
        acc += block_power(z.block_norm_sqr(k), sig.exponent(k));
    }
    acc - T::one()
}

/// Gradient `N` with `⟨W − Z, N(W)⟩ = Σ (w − z)^γ conj(N^γ)`.
///
/// On block `k` the entries are `α_k ‖w_(k)‖^{2(α_k−1)} w^γ`; on the last
/// block they are `w^γ`.
pub fn gradient_n<T: Scalar>(
    sig: &SourceSignature,
    w: &BlockedVector<T>,
) -> Result<BlockedVector<T>> {
    sig.check_dim(w)?;
    Ok(gradient_unchecked(sig, w))
}

pub(crate) fn gradient_unchecked<T: Scalar>(
    sig: &SourceSignature,
    w: &BlockedVector<T>,
) -> BlockedVector<T> {
    let mut n = w.clone();
    for (k, &a) in sig.alpha.iter().enumerate() {
        let factor = T::lit(a as f64) * block_power(w.block_norm_sqr(k), a - 1);
        for x in n.block_mut(k) {
            *x = *x * factor;
        }
    }
    n
}

/// Closed-form `‖N(W)‖² = Σ α_k² ‖w_(k)‖^{4α_k−2} + ‖w_(s+1)‖²`.
pub fn gradient_norm_sqr_closed<T: Scalar>(sig: &SourceSignature, w: &BlockedVector<T>) -> T {
    let mut acc = w.block_norm_sqr(sig.s());
    for (k, &a) in sig.alpha.iter().enumerate() {
        let af = T::lit(a as f64);
        acc += af * af * block_power(w.block_norm_sqr(k), 2 * a - 1);
    }
    acc
}

pub fn check_boundary<T: Scalar>(
    sig: &SourceSignature,
    w: &BlockedVector<T>,
    tol: T,
) -> Result<()> {
    let rho = eval_rho(sig, w)?;
    if rho.abs() > tol {
        return Err(Error::Precondition(format!(
            "point is off the boundary: rho = {rho}"
        )));
    }
    Ok(())
}

/// `⟨W − Z, N(W)⟩`, written in the expanded form that is affine in `Z`.
pub fn inner_wz<T: Scalar>(
    sig: &SourceSignature,
    w: &BlockedVector<T>,
    z: &BlockedVector<T>,
    tol: &Tolerances<T>,
) -> Result<Complex<T>> {
    sig.check_dim(z)?;
    check_boundary(sig, w, tol.boundary)?;
    Ok(inner_wz_unchecked(sig, w, z))
}

pub(crate) fn inner_wz_unchecked<T: Scalar>(
    sig: &SourceSignature,
    w: &BlockedVector<T>,
    z: &BlockedVector<T>,
) -> Complex<T> {
    let s = sig.s();
    let mut constant = w.block_norm_sqr(s);
    let mut linear = inner(z.block(s), w.block(s));
    for (k, &a) in sig.alpha.iter().enumerate() {
        let af = T::lit(a as f64);
        let wk = w.block_norm_sqr(k);
        constant += af * block_power(wk, a);
        linear = linear + inner(z.block(k), w.block(k)) * (af * block_power(wk, a - 1));
    }
    Complex::new(constant, T::zero()) - linear
}

/// Scales `direction` onto the boundary.
///
/// With `u = c²` the equation `Σ u^{α_k} ‖d_k‖^{2α_k} + u ‖d_{s+1}‖² = 1` is
/// increasing and convex in `u`, so Newton started to the right of the root
/// converges monotonically.
pub fn project_to_boundary<T: Scalar>(
    sig: &SourceSignature,
    direction: &BlockedVector<T>,
    tol: &Tolerances<T>,
) -> Result<BlockedVector<T>> {
    sig.check_dim(direction)?;
    let norms: Vec<T> = (0..sig.m.len())
        .map(|k| direction.block_norm_sqr(k))
        .collect();
    if norms.iter().all(|&x| x == T::zero()) {
        return Err(Error::Precondition("direction must be nonzero".into()));
    }
    let f = |u: T| -> (T, T) {
        let mut val = -T::one();
        let mut der = T::zero();
        for (k, &nk) in norms.iter().enumerate() {
            if nk == T::zero() {
                continue;
            }
            let e = sig.exponent(k);
            let ef = T::lit(e as f64);
            val += block_power(u * nk, e);
            der += ef * nk * block_power(u * nk, e - 1);
        }
        (val, der)
    };
    let mut hi = norms
        .iter()
        .filter(|&&x| x > T::zero())
        .map(|&x| T::one() / x)
        .fold(T::infinity(), T::min);
    let mut lo = T::zero();
    let mut u = hi;
    for _ in 0..200 {
        let (val, der) = f(u);
        if val.abs() <= T::epsilon() {
            break;
        }
        if val > T::zero() {
            hi = hi.min(u);
        } else {
            lo = lo.max(u);
        }
        let mut next = u - val / der;
        if !(next > lo && next < hi) {
            next = (lo + hi) / T::lit(2.0);
        }
        if (next - u).abs() <= T::epsilon() * u {
            u = next;
            break;
        }
        u = next;
    }
    let out = direction.scale(u.sqrt());
    let rho = rho_unchecked(sig, &out);
    if rho.abs() >= tol.root {
        return Err(Error::Numerical {
            message: format!("projection residual {rho} exceeds tolerance"),
            residuals: vec![rho.as_f64()],
        });
    }
    Ok(out)
}

/// Membership in the closure of the dilated domain `E_τ`.
pub fn in_dilated_closure<T: Scalar>(
    sig: &SourceSignature,
    tau: DilationParam,
    z: &BlockedVector<T>,
) -> Result<bool> {
    let rho = eval_rho(sig, &z.scale(T::lit(tau.tau())))?;
    Ok(rho <= T::lit(1e-12))
}

/// Standard Gaussian vector in `C^{M_{s+1}} = R^{2M_{s+1}}`.
pub fn random_direction<T: Scalar, R: Rng + ?Sized>(
    sig: &SourceSignature,
    rng: &mut R,
) -> BlockedVector<T> {
    let data = (0..sig.dim())
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(T::lit(re), T::lit(im))
        })
        .collect();
    BlockedVector::new(data, sig.m.clone()).expect("layout matches signature")
}

/// Radial projection of a Gaussian direction.
pub fn random_boundary_point<T: Scalar, R: Rng + ?Sized>(
    sig: &SourceSignature,
    rng: &mut R,
    tol: &Tolerances<T>,
) -> BlockedVector<T> {
    loop {
        let d = random_direction(sig, rng);
        if let Ok(p) = project_to_boundary(sig, &d, tol) {
            return p;
        }
    }
}

/// Upper bound on the boundary diameter, from `‖z_(k)‖ ≤ 1` in every block.
pub fn diameter_bound(sig: &SourceSignature) -> f64 {
    2.0 * ((sig.m.len()) as f64).sqrt()
}
