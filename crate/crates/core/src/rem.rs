//! The Random Energy Model: `2^N` spin configurations with i.i.d.
//! `N(0, N/2)` energies, its quenched pressure `P_N(β) = N⁻¹ E log Z_N(β)`
//! and the finite-`N` sandwich `Q̲_N(β; β*) <= P_N(β) <= inf Q̄_N(β; β_0)`.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

use crate::bounds::{fmt_f64, Verdict};
use crate::ensemble::IndexedEnsemble;
use crate::error::{Error, Result};
use crate::gibbs::{gibbs_average_raw, kl_to_uniform_raw, log_partition_raw, Observable};
use crate::quench::{
    beta_star, sample_matrix, Estimate, McConfig, QuenchedEstimate, ThresholdResult, DEFAULT_RESOLUTION,
};

/// Largest supported number of spins.
pub const MAX_SPINS: usize = 16;

/// Sandwich checks allow this many standard errors of `P̂`.
pub const SANDWICH_Z: f64 = 3.0;

/// Largest accepted gap between `P̂_N(β) - P̂_N(0)` and the trapezoid
/// integral of `N⁻¹ ĝ_N`.
pub const INTEGRAL_TOLERANCE: f64 = 0.01;

const NUMERICAL_TOLERANCE: f64 = 1e-12;

/// `β_c = 2 sqrt(log 2)`.
pub fn beta_c() -> f64 {
    2.0 * libm::sqrt(LN_2)
}

/// The REM with `N` spins.
#[derive(Debug, Clone)]
pub struct RemModel {
    n_spins: usize,
    ensemble: IndexedEnsemble,
}

impl RemModel {
    /// Builds the model; `N` must lie in `1..=16`.
    pub fn new(n_spins: usize) -> Result<Self> {
        if !(1..=MAX_SPINS).contains(&n_spins) {
            return Err(Error::Scale(n_spins));
        }
        let labels = (0..1usize << n_spins).map(|t| spin_label(t, n_spins)).collect();
        let ensemble = IndexedEnsemble::build_iid_with_labels(labels, n_spins as f64 / 2.0)?;
        Ok(RemModel { n_spins, ensemble })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    /// `|T| = 2^N`.
    pub fn size(&self) -> usize {
        1 << self.n_spins
    }

    /// `σ² = N / 2`.
    pub fn variance(&self) -> f64 {
        self.n_spins as f64 / 2.0
    }

    pub fn beta_c(&self) -> f64 {
        beta_c()
    }

    pub fn ensemble(&self) -> &IndexedEnsemble {
        &self.ensemble
    }

    fn check_threshold(&self, threshold: &ThresholdResult) -> Result<()> {
        if threshold.ensemble_size != self.size() {
            return Err(Error::InvalidInput("threshold was computed on a different model"));
        }
        Ok(())
    }
}

/// Spin configuration `t` as an `N`-character string, most significant spin
/// first, `1` for up and `0` for down.
fn spin_label(t: usize, n: usize) -> String {
    (0..n)
        .rev()
        .map(|k| if (t >> k) & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn check_beta(name: &'static str, beta: f64) -> Result<()> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter {
            name,
            value: beta,
            reason: "inverse temperature must be finite and >= 0",
        });
    }
    Ok(())
}

/// `P̂_N(β)`; exactly `log 2` with zero error at `β = 0`.
pub fn pressure_estimate(model: &RemModel, beta: f64, mc: &McConfig<'_>) -> Result<QuenchedEstimate> {
    check_beta("beta", beta)?;
    mc.check()?;
    let e = if beta == 0.0 {
        Estimate::exact(LN_2)
    } else {
        let n = model.n_spins as f64;
        sample_matrix(&model.ensemble, mc, 1, |x, _, row| {
            row[0] = log_partition_raw(x, beta) / n
        })?
        .estimate(0)
    };
    Ok(QuenchedEstimate {
        observable: Observable::Pressure,
        beta,
        mean: e.mean,
        std_error: e.std_error,
        n_samples: mc.n,
        seed: mc.seed,
    })
}

/// `lim_N P_N(β)`: `log 2 + β²/4` below `β_c`, `β sqrt(log 2)` above.
pub fn limit_pressure(beta: f64) -> f64 {
    if beta < beta_c() {
        LN_2 + 0.25 * beta * beta
    } else {
        beta * libm::sqrt(LN_2)
    }
}

/// `Ê D(ν_{N,β} ‖ ν_{N,0})`.
fn divergence(model: &RemModel, beta: f64, mc: &McConfig<'_>) -> Result<Estimate> {
    if beta == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    Ok(sample_matrix(&model.ensemble, mc, 1, |x, _, row| row[0] = kl_to_uniform_raw(x, beta))?.estimate(0))
}

/// `Q̲_N(β; β_0)` given `E D(ν_{N,β_0} ‖ ν_{N,0})`.
pub fn q_lower_with(n_spins: usize, beta: f64, beta0: f64, c: f64, divergence_at_beta0: f64) -> f64 {
    let quad = |b: f64| LN_2 + c * c * b * b / 8.0;
    if beta <= beta0 {
        quad(beta)
    } else {
        quad(beta0) + c * (beta - beta0) * libm::sqrt(divergence_at_beta0.max(0.0) / (2.0 * n_spins as f64))
    }
}

/// `Q̄_N(β; β_0)` given `E D(ν_{N,β} ‖ ν_{N,0})` (at `β`, not `β_0`).
pub fn q_upper_with(n_spins: usize, beta: f64, beta0: f64, divergence_at_beta: f64) -> f64 {
    if beta <= beta0 {
        LN_2 + 0.25 * beta * beta
    } else {
        LN_2 + 0.25 * beta0 * beta0 + (beta - beta0) * libm::sqrt(divergence_at_beta.max(0.0) / n_spins as f64)
    }
}

/// `Q̲_N(β; β*)` with `E D` at `β*` estimated on `mc`.
pub fn q_lower(model: &RemModel, beta: f64, threshold: &ThresholdResult, c: f64, mc: &McConfig<'_>) -> Result<f64> {
    check_beta("beta", beta)?;
    model.check_threshold(threshold)?;
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidParameter {
            name: "c",
            value: c,
            reason: "Sudakov constant must lie in (0, 1)",
        });
    }
    let beta0 = threshold.beta_star;
    let d = if beta > beta0 {
        divergence(model, beta0, mc)?.mean
    } else {
        0.0
    };
    Ok(q_lower_with(model.n_spins, beta, beta0, c, d))
}

/// `Q̄_N(β; β_0)` with `E D` at `β` estimated on `mc`.
pub fn q_upper(model: &RemModel, beta: f64, beta0: f64, mc: &McConfig<'_>) -> Result<f64> {
    check_beta("beta", beta)?;
    check_beta("beta0", beta0)?;
    let d = if beta > beta0 {
        divergence(model, beta, mc)?.mean
    } else {
        0.0
    };
    Ok(q_upper_with(model.n_spins, beta, beta0, d))
}

/// `min_{β_0 in grid} Q̄_N(β; β_0)`.
pub fn q_upper_min(model: &RemModel, beta: f64, beta0_grid: &[f64], mc: &McConfig<'_>) -> Result<f64> {
    check_beta("beta", beta)?;
    if beta0_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for &b in beta0_grid {
        check_beta("beta0", b)?;
    }
    let d = divergence(model, beta, mc)?.mean;
    Ok(min_over(model.n_spins, beta, beta0_grid, d))
}

fn min_over(n_spins: usize, beta: f64, grid: &[f64], d: f64) -> f64 {
    grid.iter()
        .map(|&b0| q_upper_with(n_spins, beta, b0, d))
        .fold(f64::INFINITY, f64::min)
}

/// `Q̄_N(β; β_0)` with `E D` replaced by its cap `N log 2`; independent of
/// `N`, and at most `β sqrt(log 2)` for `β >= β_0 = β_c`.
pub fn q_upper_cap(beta: f64, beta0: f64) -> f64 {
    if beta <= beta0 {
        LN_2 + 0.25 * beta * beta
    } else {
        LN_2 + 0.25 * beta0 * beta0 + (beta - beta0) * libm::sqrt(LN_2)
    }
}

/// One `β` of a pressure sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureRow {
    pub beta: f64,
    pub p_hat: QuenchedEstimate,
    pub q_lower: f64,
    pub q_upper_min: f64,
    /// `Q̄_N(β; β_c)` under the `N log 2` cap.
    pub q_upper_cap: f64,
    pub limit: f64,
    pub verdict: Verdict,
}

impl PressureRow {
    pub const CSV_HEADER: [&'static str; 8] = [
        "beta",
        "p_hat",
        "p_se",
        "q_lower",
        "q_upper_min",
        "q_upper_cap",
        "limit",
        "sandwich_verdict",
    ];

    pub fn csv_fields(&self) -> [String; 8] {
        [
            fmt_f64(self.beta),
            fmt_f64(self.p_hat.mean),
            fmt_f64(self.p_hat.std_error),
            fmt_f64(self.q_lower),
            fmt_f64(self.q_upper_min),
            fmt_f64(self.q_upper_cap),
            fmt_f64(self.limit),
            String::from(self.verdict.as_str()),
        ]
    }
}

/// Consistency of `P̂_N(β_k) - P̂_N(β_0)` with the trapezoid integral of
/// `N⁻¹ ĝ_N` over the grid, per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralCheck {
    /// Mean and error of the per-sample residual at each grid point.
    pub residuals: Vec<Estimate>,
    /// Trapezoid error estimate from second differences of `ĝ`; diagnostic only.
    pub trapezoid_bound: Vec<f64>,
    /// Largest `|residual mean|`.
    pub max_abs_residual: f64,
    /// Every `|residual mean|` is at most [`INTEGRAL_TOLERANCE`].
    pub holds: bool,
}

/// The sandwich on a grid of `β`, all estimated on one set of realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureCurve {
    pub n_spins: usize,
    pub threshold: ThresholdResult,
    /// `β_0` values minimized over: the sweep grid plus `β_c`.
    pub beta0_grid: Vec<f64>,
    pub rows: Vec<PressureRow>,
    pub integral: IntegralCheck,
}

impl PressureCurve {
    /// Every row holds.
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.verdict == Verdict::Holds)
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for &b in grid {
        check_beta("beta", b)?;
    }
    if let Some(i) = grid.windows(2).position(|w| !(w[0] < w[1])) {
        return Err(Error::UnsortedGrid(i + 1));
    }
    Ok(())
}

/// Holds when both sides are within `3 se` of `P̂`.
fn sandwich_verdict(p: Estimate, lower: f64, upper: f64) -> Verdict {
    let margin = SANDWICH_Z * p.std_error + NUMERICAL_TOLERANCE;
    if p.mean - lower < -margin || upper - p.mean < -margin {
        Verdict::Violated
    } else {
        Verdict::Holds
    }
}

/// Pressure, sandwich and integral check on a strictly increasing grid.
///
/// `β*` comes from the participation-ratio bisection on the REM ensemble
/// with the same seed, and every per-`β` quantity is a column of one sample
/// matrix, so rows share their realizations.
pub fn pressure_sweep(model: &RemModel, grid: &[f64], mc: &McConfig<'_>, c: f64) -> Result<PressureCurve> {
    check_grid(grid)?;
    let threshold = beta_star(&model.ensemble, c, mc, DEFAULT_RESOLUTION)?;
    pressure_sweep_with_threshold(model, grid, &threshold, mc, c)
}

/// As [`pressure_sweep`] with a precomputed threshold.
pub fn pressure_sweep_with_threshold(
    model: &RemModel,
    grid: &[f64],
    threshold: &ThresholdResult,
    mc: &McConfig<'_>,
    c: f64,
) -> Result<PressureCurve> {
    check_grid(grid)?;
    model.check_threshold(threshold)?;
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidParameter {
            name: "c",
            value: c,
            reason: "Sudakov constant must lie in (0, 1)",
        });
    }
    let n = model.n_spins as f64;
    let m = grid.len();
    let beta_star = threshold.beta_star;

    // columns: pressure (m), divergence (m), Gibbs average (m), divergence at β*
    let mat = sample_matrix(&model.ensemble, mc, 3 * m + 1, |x, _, row| {
        for (k, &b) in grid.iter().enumerate() {
            row[k] = if b == 0.0 { LN_2 } else { log_partition_raw(x, b) / n };
            row[m + k] = kl_to_uniform_raw(x, b);
            row[2 * m + k] = gibbs_average_raw(x, b);
        }
        row[3 * m] = kl_to_uniform_raw(x, beta_star);
    })?;

    let mut beta0_grid: Vec<f64> = grid.to_vec();
    beta0_grid.push(beta_c());
    beta0_grid.sort_by(f64::total_cmp);
    beta0_grid.dedup();

    let d_star = mat.estimate(3 * m).mean;
    let rows = grid
        .iter()
        .enumerate()
        .map(|(k, &b)| {
            let p = if b == 0.0 {
                Estimate::exact(LN_2)
            } else {
                mat.estimate(k)
            };
            let d = mat.estimate(m + k).mean;
            let q_lower = q_lower_with(model.n_spins, b, beta_star, c, d_star);
            let q_upper_min = min_over(model.n_spins, b, &beta0_grid, d);
            PressureRow {
                beta: b,
                p_hat: QuenchedEstimate {
                    observable: Observable::Pressure,
                    beta: b,
                    mean: p.mean,
                    std_error: p.std_error,
                    n_samples: mc.n,
                    seed: mc.seed,
                },
                q_lower,
                q_upper_min,
                q_upper_cap: q_upper_cap(b, beta_c()),
                limit: limit_pressure(b),
                verdict: sandwich_verdict(p, q_lower, q_upper_min),
            }
        })
        .collect();

    let integral = integral_check(grid, &mat, m, n);
    Ok(PressureCurve {
        n_spins: model.n_spins,
        threshold: threshold.clone(),
        beta0_grid,
        rows,
        integral,
    })
}

fn integral_check(grid: &[f64], mat: &crate::quench::SampleMatrix, m: usize, n: f64) -> IntegralCheck {
    let g_means: Vec<f64> = (0..m).map(|k| mat.estimate(2 * m + k).mean).collect();

    // |g''| on each interval from second differences of ĝ on the grid
    let curvature = |k: usize| -> f64 {
        if m < 3 {
            return 0.0;
        }
        let j = k.clamp(1, m - 2);
        let (h0, h1) = (grid[j] - grid[j - 1], grid[j + 1] - grid[j]);
        let d0 = (g_means[j] - g_means[j - 1]) / h0;
        let d1 = (g_means[j + 1] - g_means[j]) / h1;
        (2.0 * (d1 - d0) / (h0 + h1)).abs()
    };

    let mut residuals = Vec::with_capacity(m);
    let mut trapezoid_bound = Vec::with_capacity(m);
    let mut bound = 0.0;
    let mut holds = true;
    let mut max_abs = 0.0f64;
    for k in 0..m {
        if k > 0 {
            let h = grid[k] - grid[k - 1];
            let kappa = curvature(k - 1).max(curvature(k));
            bound += h * h * h / 12.0 * kappa / n;
        }
        let r = mat.estimate_with(|col| {
            let mut integral = 0.0;
            for j in 1..=k {
                let h = grid[j] - grid[j - 1];
                integral += 0.5 * h * (col(2 * m + j - 1) + col(2 * m + j));
            }
            col(k) - col(0) - integral / n
        });
        if !(r.mean.abs() <= INTEGRAL_TOLERANCE) {
            holds = false;
        }
        max_abs = max_abs.max(r.mean.abs());
        residuals.push(r);
        trapezoid_bound.push(bound);
    }
    IntegralCheck {
        residuals,
        trapezoid_bound,
        max_abs_residual: max_abs,
        holds,
    }
}
