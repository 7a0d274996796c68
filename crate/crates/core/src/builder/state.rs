use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{norm_beta_unchecked, Schedule, TargetSignature};
use crate::error::{Error, Result};
use crate::estimates::{EstimateConstants, PeakFunction};
use crate::geometry::{norm_sqr, BlockedVector, BoundaryNet, SourceSignature};
use crate::harmonic::{eval_h, ConjugatePairConfig};
use crate::scalar::{Scalar, Tolerances};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClampCounts {
    /// Coefficients whose squared modulus came out negative and was set to 0.
    pub negative: usize,
    /// Coefficients scaled down to modulus 1.
    pub capped: usize,
}

impl ClampCounts {
    pub fn total(&self) -> usize {
        self.negative + self.capped
    }
}

/// One layer `G_ℓ`: coefficients `γ_i` for every duplicated index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Step<T> {
    pub ell: usize,
    pub nu: T,
    pub eta: T,
    pub eps: T,
    pub a: T,
    pub t: T,
    pub gamma: Vec<Complex<T>>,
    pub clamps: ClampCounts,
}

/// `F_ℓ = F_0 + G_1 + … + G_ℓ` with `F_0 = (0, …, 0, h)`.
#[derive(Debug, Clone)]
pub struct MapState<T> {
    pub source: SourceSignature,
    pub target: TargetSignature,
    pub harmonic: ConjugatePairConfig,
    pub net: BoundaryNet<T>,
    pub layers: Vec<Step<T>>,
    /// Unit-rate peak functions at the physical net points.
    peaks: Vec<PeakFunction<T>>,
}

/// `exp(−ν w)` with the real part of the exponent clamped.
#[inline]
pub fn peak_exp<T: Scalar>(nu: T, w: Complex<T>) -> (Complex<T>, bool) {
    let mut e = -w * nu;
    let limit = T::lit(T::EXP_CLAMP);
    let clamped = e.re.abs() > limit;
    if clamped {
        e.re = e.re.max(-limit).min(limit);
    }
    (e.exp(), clamped)
}

impl<T: Scalar> MapState<T> {
    pub fn new(
        source: SourceSignature,
        target: TargetSignature,
        harmonic: ConjugatePairConfig,
        net: BoundaryNet<T>,
        tol: &Tolerances<T>,
    ) -> Result<Self> {
        if net.group_sizes != target.n() {
            return Err(Error::Config("net groups do not match the target".into()));
        }
        if target.p() != source.dim() + 1 {
            return Err(Error::Config(format!(
                "h has {} components but p = {}",
                source.dim() + 1,
                target.p()
            )));
        }
        let peaks = net
            .points
            .iter()
            .map(|w| PeakFunction::new(&source, w, T::one(), tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(MapState {
            source,
            target,
            harmonic,
            net,
            layers: Vec::new(),
            peaks,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// `F_ℓ` as its own state.
    pub fn truncated(&self, ell: usize) -> Self {
        let mut out = self.clone();
        out.layers.truncate(ell);
        out
    }

    pub fn push_layer(&mut self, step: Step<T>) -> Result<()> {
        if step.gamma.len() != self.target.num_indices() {
            return Err(Error::Dimension {
                expected: self.target.num_indices(),
                got: step.gamma.len(),
            });
        }
        self.layers.push(step);
        Ok(())
    }

    /// `⟨W_p − Z, N̂(W_p)⟩` for every physical net point.
    pub fn inners(&self, z: &[Complex<T>]) -> Vec<Complex<T>> {
        self.peaks.iter().map(|p| p.normalized_inner(z)).collect()
    }

    /// Values `g^i(Z)` of one layer from precomputed inner products.
    pub fn layer_values(&self, step: &Step<T>, inners: &[Complex<T>]) -> (Vec<Complex<T>>, usize) {
        let mut clamps = 0;
        let phis: Vec<Complex<T>> = inners
            .iter()
            .map(|&w| {
                let (v, c) = peak_exp(step.nu, w);
                clamps += c as usize;
                v
            })
            .collect();
        let values = step
            .gamma
            .iter()
            .zip(&self.net.index_map)
            .map(|(&g, &p)| g * phis[p])
            .collect();
        (values, clamps)
    }

    /// The `f`-components of `F_ℓ(Z)` without `h`.
    pub fn eval_f_part(&self, z: &[Complex<T>]) -> Vec<Complex<T>> {
        let inners = self.inners(z);
        let mut f = vec![Complex::new(T::zero(), T::zero()); self.target.num_indices()];
        for step in &self.layers {
            let (g, _) = self.layer_values(step, &inners);
            for (fi, gi) in f.iter_mut().zip(g) {
                *fi = *fi + gi;
            }
        }
        f
    }

    pub fn eval_h(&self, z: &BlockedVector<T>) -> Result<Vec<Complex<T>>> {
        eval_h(&self.source, z, &self.harmonic)
    }

    /// Full target vector `(f_(1), …, f_(2t+2), h)`.
    pub fn eval(&self, z: &BlockedVector<T>) -> Result<BlockedVector<T>> {
        self.source.check_dim(z)?;
        let mut data = self.eval_f_part(z.data());
        data.extend(self.eval_h(z)?);
        BlockedVector::new(data, self.target.block_sizes())
    }

    pub fn norm_beta_at(&self, z: &BlockedVector<T>) -> Result<T> {
        Ok(norm_beta_unchecked(&self.target, self.eval(z)?.data()))
    }
}

/// `F_ℓ(Z)` on the target layout.
#[allow(non_snake_case)]
pub fn eval_F<T: Scalar>(state: &MapState<T>, z: &BlockedVector<T>) -> Result<BlockedVector<T>> {
    state.eval(z)
}

/// `‖h‖²` without the full evaluation.
pub fn h_norm_sqr<T: Scalar>(h: &[Complex<T>]) -> T {
    norm_sqr(h)
}

/// Everything needed to reload `F_L` for evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Checkpoint<T> {
    pub source: SourceSignature,
    pub target: TargetSignature,
    pub harmonic: ConjugatePairConfig,
    pub net: BoundaryNet<T>,
    pub constants: EstimateConstants<T>,
    pub schedule: Schedule<T>,
    pub layers: Vec<Step<T>>,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn new(state: &MapState<T>, constants: &EstimateConstants<T>, schedule: &Schedule<T>) -> Self {
        Checkpoint {
            source: state.source.clone(),
            target: state.target.clone(),
            harmonic: state.harmonic,
            net: state.net.clone(),
            constants: constants.clone(),
            schedule: schedule.clone(),
            layers: state.layers.clone(),
        }
    }

    pub fn to_state(&self, tol: &Tolerances<T>) -> Result<MapState<T>> {
        let mut state = MapState::new(
            self.source.clone(),
            self.target.clone(),
            self.harmonic,
            self.net.clone(),
            tol,
        )?;
        for step in &self.layers {
            state.push_layer(step.clone())?;
        }
        Ok(state)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
