//! Per-realization Gibbs quantities.
//!
//! For a fixed realization `x` and inverse temperature `β >= 0` the Gibbs
//! measure is `ν_β(t) = exp(β x_t - Λ(β))` with `Λ(β) = log Σ_t exp(β x_t)`.
//! Every exponential below goes through [`shifted_log_sum`], which subtracts
//! `max x` before exponentiating, so `β x_t` in the hundreds of thousands is
//! harmless. `β = 0` is an ordinary value: the uniform measure.

use alloc::vec::Vec;
use core::fmt;

use crate::ensemble::IndexedEnsemble;
use crate::error::{Error, Result};

/// `|α - 1|` below which Rényi divergences switch to the KL formula.
pub const ALPHA_ONE_SWITCH: f64 = 1e-8;

/// `log Σ exp(v_i)` with the usual max shift. Empty input gives `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = values.iter().map(|v| libm::exp(v - m)).sum();
    m + libm::log(s)
}

/// `(max x, log Σ_t exp(β (x_t - max x)))`, so `Λ(β) = β max + second`.
///
/// At `β = 0` the sum is exactly `|x|`.
#[inline]
pub(crate) fn shifted_log_sum(x: &[f64], beta: f64) -> (f64, f64) {
    let m = max_of(x);
    let s: f64 = x.iter().map(|&v| libm::exp(beta * (v - m))).sum();
    (m, libm::log(s))
}

#[inline]
pub(crate) fn max_of(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn check_x(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::InvalidInput("empty realization"));
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("realization contains NaN"));
    }
    if x.iter().any(|v| v.is_infinite()) {
        return Err(Error::InvalidInput("realization contains infinite entries"));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            reason: "inverse temperature must be finite and >= 0",
        });
    }
    Ok(())
}

fn check(x: &[f64], beta: f64) -> Result<()> {
    check_x(x)?;
    check_beta(beta)
}

/// The Gibbs measure of one realization at one inverse temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    pub beta: f64,
    /// `β x_t - Λ(β)`.
    pub log_weights: Vec<f64>,
    /// `ν_β(t)`.
    pub weights: Vec<f64>,
    /// `Λ(β) = log Z(β)`.
    pub log_z: f64,
}

impl GibbsState {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `⟨f⟩_β = Σ_t ν_β(t) f_t`.
    pub fn average(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: f.len(),
            });
        }
        Ok(self.weights.iter().zip(f).map(|(w, v)| w * v).sum())
    }
}

/// `Λ(β) = log Σ_t exp(β x_t)`; `Λ(0) = log |T|`.
pub fn log_partition(x: &[f64], beta: f64) -> Result<f64> {
    check(x, beta)?;
    Ok(log_partition_raw(x, beta))
}

#[inline]
pub(crate) fn log_partition_raw(x: &[f64], beta: f64) -> f64 {
    if beta == 0.0 {
        return libm::log(x.len() as f64);
    }
    let (m, ls) = shifted_log_sum(x, beta);
    beta * m + ls
}

pub fn gibbs_measure(x: &[f64], beta: f64) -> Result<GibbsState> {
    check(x, beta)?;
    let (m, ls) = shifted_log_sum(x, beta);
    let log_weights: Vec<f64> = x.iter().map(|&v| beta * (v - m) - ls).collect();
    let weights = log_weights.iter().map(|&l| libm::exp(l)).collect();
    Ok(GibbsState {
        beta,
        log_weights,
        weights,
        log_z: if beta == 0.0 { ls } else { beta * m + ls },
    })
}

/// Gibbs weights written into `out`; returns `(max x, shifted log-sum)`.
#[inline]
pub(crate) fn weights_into(x: &[f64], beta: f64, out: &mut [f64]) -> (f64, f64) {
    let m = max_of(x);
    let mut s = 0.0;
    for (o, &v) in out.iter_mut().zip(x) {
        *o = libm::exp(beta * (v - m));
        s += *o;
    }
    for o in out.iter_mut() {
        *o /= s;
    }
    (m, libm::log(s))
}

/// The quenched-disorder Gibbs average `⟨X⟩_β = Λ'(β)`.
pub fn gibbs_average(state: &GibbsState, x: &[f64]) -> Result<f64> {
    state.average(x)
}

#[inline]
pub(crate) fn gibbs_average_raw(x: &[f64], beta: f64) -> f64 {
    let m = max_of(x);
    let mut s = 0.0;
    let mut acc = 0.0;
    for &v in x {
        let e = libm::exp(beta * (v - m));
        s += e;
        acc += e * (v - m);
    }
    m + acc / s
}

/// `Φ_β(x; A) = β⁻¹ log Σ_{t in A} exp(β x_t)`.
pub fn soft_max(x: &[f64], beta: f64, subset: &[usize]) -> Result<f64> {
    check_x(x)?;
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            reason: "soft max needs a finite beta > 0",
        });
    }
    check_subset(subset, x.len())?;
    Ok(soft_max_raw(x, beta, subset))
}

pub(crate) fn check_subset(subset: &[usize], n: usize) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::InvalidInput("soft max over an empty subset"));
    }
    if let Some(&bad) = subset.iter().find(|&&t| t >= n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad + 1,
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn soft_max_raw(x: &[f64], beta: f64, subset: &[usize]) -> f64 {
    let m = subset.iter().map(|&t| x[t]).fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = subset.iter().map(|&t| libm::exp(beta * (x[t] - m))).sum();
    m + libm::log(s) / beta
}

/// `‖ν_β‖²₂ = Z(2β) / Z(β)²`, in `[1/|T|, 1]`.
pub fn participation_ratio(x: &[f64], beta: f64) -> Result<f64> {
    check(x, beta)?;
    Ok(participation_ratio_raw(x, beta))
}

#[inline]
pub(crate) fn participation_ratio_raw(x: &[f64], beta: f64) -> f64 {
    let n = x.len() as f64;
    if beta == 0.0 {
        return 1.0 / n;
    }
    let (_, ls2) = shifted_log_sum(x, 2.0 * beta);
    let (_, ls1) = shifted_log_sum(x, beta);
    libm::exp(ls2 - 2.0 * ls1).clamp(1.0 / n, 1.0)
}

/// `d/dβ ‖ν_β‖²₂ = 2 ‖ν_β‖²₂ (⟨X⟩_{2β} - ⟨X⟩_β)`.
pub fn participation_derivative(x: &[f64], beta: f64) -> Result<f64> {
    check(x, beta)?;
    let r = participation_ratio_raw(x, beta);
    Ok(2.0 * r * (gibbs_average_raw(x, 2.0 * beta) - gibbs_average_raw(x, beta)))
}

/// `D(ν_β ‖ ν_0) = log |T| + β ⟨X⟩_β - Λ(β)`.
pub fn kl_to_uniform(x: &[f64], beta: f64) -> Result<f64> {
    check(x, beta)?;
    Ok(kl_to_uniform_raw(x, beta))
}

#[inline]
pub(crate) fn kl_to_uniform_raw(x: &[f64], beta: f64) -> f64 {
    // β⟨X⟩ - Λ with the common β·max removed from both terms
    let m = max_of(x);
    let mut s = 0.0;
    let mut acc = 0.0;
    for &v in x {
        let e = libm::exp(beta * (v - m));
        s += e;
        acc += e * (v - m);
    }
    libm::log(x.len() as f64) + beta * (acc / s) - libm::log(s)
}

/// `D_α(ν_β ‖ ν_0) = log |T| + (Λ(αβ) - αΛ(β)) / (α - 1)`, continued by the
/// KL divergence at `α = 1`.
pub fn renyi_to_uniform(x: &[f64], beta: f64, alpha: f64) -> Result<f64> {
    check(x, beta)?;
    check_alpha(alpha)?;
    Ok(renyi_to_uniform_raw(x, beta, alpha))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "Renyi order must be finite and > 0",
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn renyi_to_uniform_raw(x: &[f64], beta: f64, alpha: f64) -> f64 {
    if (alpha - 1.0).abs() < ALPHA_ONE_SWITCH {
        return kl_to_uniform_raw(x, beta);
    }
    if beta == 0.0 {
        return 0.0;
    }
    let (_, ls_a) = shifted_log_sum(x, alpha * beta);
    let (_, ls_1) = shifted_log_sum(x, beta);
    libm::log(x.len() as f64) + (ls_a - alpha * ls_1) / (alpha - 1.0)
}

/// `D_{1/2}(ν_β ‖ ν_0) = log |T| + log ‖ν_{β/2}‖²₂`.
pub fn renyi_half_via_participation(x: &[f64], beta: f64) -> Result<f64> {
    check(x, beta)?;
    Ok(renyi_half_raw(x, beta))
}

#[inline]
pub(crate) fn renyi_half_raw(x: &[f64], beta: f64) -> f64 {
    libm::log(x.len() as f64) + libm::log(participation_ratio_raw(x, 0.5 * beta))
}

/// `H(ν_β) = -Σ ν log ν` with `0 log 0 = 0`.
pub fn shannon_entropy(state: &GibbsState) -> f64 {
    let h: f64 = state
        .weights
        .iter()
        .zip(&state.log_weights)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, l)| -w * l)
        .sum();
    h.clamp(0.0, libm::log(state.len() as f64))
}

#[inline]
pub(crate) fn shannon_entropy_raw(x: &[f64], beta: f64) -> f64 {
    let m = max_of(x);
    let (_, ls) = shifted_log_sum(x, beta);
    let mut h = 0.0;
    for &v in x {
        let lw = beta * (v - m) - ls;
        let w = libm::exp(lw);
        if w > 0.0 {
            h -= w * lw;
        }
    }
    h.clamp(0.0, libm::log(x.len() as f64))
}

/// A per-realization functional whose disorder average is estimated by
/// `quench`.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    /// `⟨X⟩_β`.
    GibbsAverage,
    /// `β⁻¹ (Λ(β) - log |T|)`, defined as 0 at `β = 0`.
    FreeEnergy,
    /// `Φ_β(x; A)` on a nonempty subset of indices.
    SoftMax(Vec<usize>),
    /// `‖ν_β‖²₂`.
    ParticipationRatio,
    KlToUniform,
    /// `D_α(ν_β ‖ ν_0)`, `α > 0`.
    RenyiToUniform(f64),
    ShannonEntropy,
    /// `max_t x_t`; ignores `β`.
    ExpectedMax,
    /// `(β/2) Σ_{s,t} d²(s,t) ν_β(s) ν_β(t)`, collapsed to
    /// `β σ² (1 - ‖ν_β‖²₂)` for scalar covariances.
    ReplicaGibbs,
    /// `Λ(β)`.
    LogPartition,
    /// `Λ(β) / N` for an index set of size `2^N`; exactly `log 2` at `β = 0`.
    Pressure,
}

impl Observable {
    /// Short machine-friendly name.
    pub fn name(&self) -> &'static str {
        match self {
            Observable::GibbsAverage => "gibbs_average",
            Observable::FreeEnergy => "free_energy",
            Observable::SoftMax(_) => "soft_max",
            Observable::ParticipationRatio => "participation_ratio",
            Observable::KlToUniform => "kl_to_uniform",
            Observable::RenyiToUniform(_) => "renyi_to_uniform",
            Observable::ShannonEntropy => "shannon_entropy",
            Observable::ExpectedMax => "expected_max",
            Observable::ReplicaGibbs => "replica_gibbs",
            Observable::LogPartition => "log_partition",
            Observable::Pressure => "pressure",
        }
    }

    /// Checks parameters against an index set of size `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Observable::SoftMax(subset) => check_subset(subset, n),
            Observable::RenyiToUniform(alpha) => check_alpha(*alpha),
            _ => Ok(()),
        }
    }

    /// Evaluates the functional on one realization of `ens`.
    pub fn evaluate(&self, ens: &IndexedEnsemble, x: &[f64], beta: f64) -> Result<f64> {
        check_x(x)?;
        if x.len() != ens.len() {
            return Err(Error::DimensionMismatch {
                expected: ens.len(),
                found: x.len(),
            });
        }
        if *self != Observable::ExpectedMax {
            check_beta(beta)?;
        }
        if let Observable::SoftMax(_) = self {
            if beta == 0.0 {
                return Err(Error::InvalidParameter {
                    name: "beta",
                    value: beta,
                    reason: "soft max needs beta > 0",
                });
            }
        }
        self.validate(ens.len())?;
        Ok(self.evaluate_raw(ens, x, beta))
    }

    /// Evaluation without input checks; callers guarantee finite `x` of the
    /// right length and a valid `β`.
    pub(crate) fn evaluate_raw(&self, ens: &IndexedEnsemble, x: &[f64], beta: f64) -> f64 {
        match self {
            Observable::GibbsAverage => gibbs_average_raw(x, beta),
            Observable::FreeEnergy => {
                if beta == 0.0 {
                    0.0
                } else {
                    let (m, ls) = shifted_log_sum(x, beta);
                    m + (ls - libm::log(x.len() as f64)) / beta
                }
            }
            Observable::SoftMax(subset) => soft_max_raw(x, beta, subset),
            Observable::ParticipationRatio => participation_ratio_raw(x, beta),
            Observable::KlToUniform => kl_to_uniform_raw(x, beta),
            Observable::RenyiToUniform(alpha) => renyi_to_uniform_raw(x, beta, *alpha),
            Observable::ShannonEntropy => shannon_entropy_raw(x, beta),
            Observable::ExpectedMax => max_of(x),
            Observable::ReplicaGibbs => replica_raw(ens, x, beta),
            Observable::LogPartition => log_partition_raw(x, beta),
            Observable::Pressure => {
                if beta == 0.0 {
                    core::f64::consts::LN_2
                } else {
                    log_partition_raw(x, beta) / libm::log2(x.len() as f64)
                }
            }
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::RenyiToUniform(alpha) => write!(f, "renyi_to_uniform({alpha})"),
            Observable::SoftMax(subset) => write!(f, "soft_max({} indices)", subset.len()),
            other => f.write_str(other.name()),
        }
    }
}

fn replica_raw(ens: &IndexedEnsemble, x: &[f64], beta: f64) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    if let Some(variance) = ens.iid_variance() {
        return beta * variance * (1.0 - participation_ratio_raw(x, beta));
    }
    let mut w = alloc::vec![0.0; x.len()];
    weights_into(x, beta, &mut w);
    let geo = ens.geometry();
    let mut acc = 0.0;
    for s in 0..x.len() {
        let row: f64 = w.iter().enumerate().map(|(t, wt)| geo.dist2(s, t) * wt).sum();
        acc += w[s] * row;
    }
    0.5 * beta * acc
}
