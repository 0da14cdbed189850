//! Statistical checks of the bounds relating quenched Gibbs quantities to
//! the geometry of the index set.
//!
//! Each check estimates both sides of one inequality on common random
//! numbers and turns the difference into a verdict at a fixed number of
//! standard errors. Sides are kept in the order the inequality is written;
//! [`Direction`] records which side is the larger one, and `slack` is always
//! signed so that a positive value means the inequality holds.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_distr::{Distribution, StandardNormal};

use crate::ensemble::IndexedEnsemble;
use crate::error::{Error, Result};
use crate::gibbs::{
    gibbs_average_raw, kl_to_uniform_raw, log_partition_raw, max_of, renyi_half_raw, shannon_entropy_raw, soft_max_raw,
};
use crate::quench::{beta_star, sample_matrix, Estimate, McConfig, ThresholdResult, DEFAULT_RESOLUTION};

/// Per-realization sandwiches are checked to this tolerance.
pub const SANDWICH_TOLERANCE: f64 = 1e-9;

/// Constants and verdict thresholds shared by all checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConfig {
    /// Sudakov constant `c`, in `(0, 1)`.
    pub c: f64,
    /// Verdict margin in standard errors.
    pub z_threshold: f64,
    /// Constant used by the i.i.d. lower bound below the threshold `β*`.
    pub iid_high_temp_constant: f64,
    /// Slack down to `-numerical_tolerance` still counts as holding.
    pub numerical_tolerance: f64,
    /// Scale `σ` of the packing and balls in the soft super-Sudakov check;
    /// `None` uses the largest standard deviation.
    pub packing_scale: Option<f64>,
}

impl BoundConfig {
    pub fn with_c(c: f64) -> Self {
        BoundConfig {
            c,
            iid_high_temp_constant: c / core::f64::consts::SQRT_2,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::InvalidParameter {
                name: "c",
                value: self.c,
                reason: "Sudakov constant must lie in (0, 1)",
            });
        }
        if !(self.z_threshold > 0.0) || !self.z_threshold.is_finite() {
            return Err(Error::InvalidParameter {
                name: "z_threshold",
                value: self.z_threshold,
                reason: "must be positive and finite",
            });
        }
        if !(self.iid_high_temp_constant > 0.0) || !self.iid_high_temp_constant.is_finite() {
            return Err(Error::InvalidParameter {
                name: "iid_high_temp_constant",
                value: self.iid_high_temp_constant,
                reason: "must be positive and finite",
            });
        }
        if !(self.numerical_tolerance >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "numerical_tolerance",
                value: self.numerical_tolerance,
                reason: "must be >= 0",
            });
        }
        if let Some(s) = self.packing_scale {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "packing_scale",
                    value: s,
                    reason: "must be positive and finite",
                });
            }
        }
        Ok(())
    }
}

impl Default for BoundConfig {
    fn default() -> Self {
        let c = 1.0 / 17.0;
        BoundConfig {
            c,
            z_threshold: 3.0,
            iid_high_temp_constant: c / core::f64::consts::SQRT_2,
            numerical_tolerance: 1e-9,
            packing_scale: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which side of the inequality is claimed to be larger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `lhs <= rhs`; slack is `rhs - lhs`.
    LhsAtMost,
    /// `lhs >= rhs`; slack is `lhs - rhs`.
    LhsAtLeast,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::LhsAtMost => "<=",
            Direction::LhsAtLeast => ">=",
        }
    }
}

/// Both sides of one inequality at one `β`, with a verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub name: &'static str,
    /// `+inf` for the zero-temperature baselines.
    pub beta: f64,
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub direction: Direction,
    pub slack: f64,
    pub z: f64,
    pub verdict: Verdict,
    /// Set when `β` lies outside the range the inequality is proved for.
    pub out_of_regime: bool,
    /// Short free-form remark (empty when there is nothing to say).
    pub note: String,
}

impl BoundReport {
    /// Column names of [`BoundReport::csv_fields`].
    pub const CSV_HEADER: [&'static str; 9] = [
        "name", "beta", "lhs_mean", "lhs_se", "rhs_mean", "rhs_se", "slack", "z", "verdict",
    ];

    /// The report as one CSV record.
    pub fn csv_fields(&self) -> [String; 9] {
        use alloc::string::ToString;
        [
            self.name.to_string(),
            fmt_f64(self.beta),
            fmt_f64(self.lhs.mean),
            fmt_f64(self.lhs.std_error),
            fmt_f64(self.rhs.mean),
            fmt_f64(self.rhs.std_error),
            fmt_f64(self.slack),
            fmt_f64(self.z),
            self.verdict.as_str().to_string(),
        ]
    }
}

/// Shortest round-trip decimal form; `inf`, `-inf` and `nan` spelled out.
pub fn fmt_f64(v: f64) -> String {
    use alloc::string::ToString;
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        alloc::format!("{v:?}")
    }
}

/// `k sqrt(D)` with delta-method error, and whether the delta method is
/// trustworthy (`D >= 4 se`).
fn sqrt_side(k: f64, d: Estimate) -> (Estimate, bool) {
    let mean = d.mean.max(0.0);
    let reliable = !(d.mean < 4.0 * d.std_error);
    let se = if mean > 0.0 {
        k * d.std_error / (2.0 * libm::sqrt(mean))
    } else {
        k * libm::sqrt(d.std_error)
    };
    (
        Estimate {
            mean: k * libm::sqrt(mean),
            std_error: se,
        },
        reliable,
    )
}

struct Sides {
    name: &'static str,
    beta: f64,
    lhs: Estimate,
    rhs: Estimate,
    direction: Direction,
    force_inconclusive: bool,
    out_of_regime: bool,
    note: String,
}

fn assemble(s: Sides, cfg: &BoundConfig) -> BoundReport {
    let slack = match s.direction {
        Direction::LhsAtMost => s.rhs.mean - s.lhs.mean,
        Direction::LhsAtLeast => s.lhs.mean - s.rhs.mean,
    };
    let se = libm::sqrt(s.lhs.std_error * s.lhs.std_error + s.rhs.std_error * s.rhs.std_error);
    let tol = cfg.numerical_tolerance;
    let z = if se > 0.0 {
        slack / se
    } else if slack.abs() <= tol {
        0.0
    } else if slack > 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    let verdict = if s.out_of_regime || s.force_inconclusive {
        Verdict::Inconclusive
    } else if z < -cfg.z_threshold {
        Verdict::Violated
    } else if slack >= -tol {
        Verdict::Holds
    } else {
        Verdict::Inconclusive
    };
    BoundReport {
        name: s.name,
        beta: s.beta,
        lhs: s.lhs,
        rhs: s.rhs,
        direction: s.direction,
        slack,
        z,
        verdict,
        out_of_regime: s.out_of_regime,
        note: s.note,
    }
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

fn iid_sigma(ens: &IndexedEnsemble) -> Result<f64> {
    ens.iid_variance()
        .map(libm::sqrt)
        .ok_or(Error::Regime("bound is proved for i.i.d. coordinates only"))
}

fn sigma2(ens: &IndexedEnsemble) -> f64 {
    let s = ens.geometry().sigma;
    s * s
}

/// `(ĝ, D̂)` on common random numbers; `ĝ(0) = 0` exactly for a centered
/// process.
fn gibbs_and_kl(ens: &IndexedEnsemble, beta: f64, mc: &McConfig<'_>) -> Result<(Estimate, Estimate)> {
    let m = sample_matrix(ens, mc, 2, |x, _, row| {
        row[0] = gibbs_average_raw(x, beta);
        row[1] = kl_to_uniform_raw(x, beta);
    })?;
    let g = if beta == 0.0 {
        Estimate::exact(0.0)
    } else {
        m.estimate(0)
    };
    Ok((g, m.estimate(1)))
}

/// `(φ̂, Ê D_{1/2})` on common random numbers.
fn free_energy_and_renyi_half(ens: &IndexedEnsemble, beta: f64, mc: &McConfig<'_>) -> Result<(Estimate, Estimate)> {
    let ln_n = libm::log(ens.len() as f64);
    let m = sample_matrix(ens, mc, 2, |x, _, row| {
        row[0] = if beta == 0.0 {
            0.0
        } else {
            (log_partition_raw(x, beta) - ln_n) / beta
        };
        row[1] = renyi_half_raw(x, beta);
    })?;
    Ok((m.estimate(0), m.estimate(1)))
}

fn zero_note(beta: f64) -> String {
    if beta == 0.0 {
        String::from("g(0) = 0 exactly for a centered process")
    } else {
        String::new()
    }
}

/// `g(β) <= sqrt(2 σ² E D(ν_β ‖ ν_0))`.
pub fn g_upper(ens: &IndexedEnsemble, beta: f64, mc: &McConfig<'_>, cfg: &BoundConfig) -> Result<BoundReport> {
    cfg.validate()?;
    check_beta(beta)?;
    let (g, d) = gibbs_and_kl(ens, beta, mc)?;
    let (rhs, reliable) = sqrt_side(libm::sqrt(2.0 * sigma2(ens)), d);
    Ok(assemble(
        Sides {
            name: "g_upper",
            beta,
            lhs: g,
            rhs,
            direction: Direction::LhsAtMost,
            force_inconclusive: !reliable,
            out_of_regime: false,
            note: zero_note(beta),
        },
        cfg,
    ))
}

/// `g(β) <= sqrt(2 σ² (log |T| - E H(ν_β)))`.
pub fn g_upper_entropy_form(
    ens: &IndexedEnsemble,
    beta: f64,
    mc: &McConfig<'_>,
    cfg: &BoundConfig,
) -> Result<BoundReport> {
    cfg.validate()?;
    check_beta(beta)?;
    let ln_n = libm::log(ens.len() as f64);
    let m = sample_matrix(ens, mc, 2, |x, _, row| {
        row[0] = gibbs_average_raw(x, beta);
        row[1] = shannon_entropy_raw(x, beta);
    })?;
    let g = if beta == 0.0 {
        Estimate::exact(0.0)
    } else {
        m.estimate(0)
    };
    let d = m.estimate(1).affine(-1.0, ln_n);
    let (rhs, reliable) = sqrt_side(libm::sqrt(2.0 * sigma2(ens)), d);
    Ok(assemble(
        Sides {
            name: "g_upper_entropy_form",
            beta,
            lhs: g,
            rhs,
            direction: Direction::LhsAtMost,
            force_inconclusive: !reliable,
            out_of_regime: false,
            note: zero_note(beta),
        },
        cfg,
    ))
}

fn check_threshold(ens: &IndexedEnsemble, threshold: &ThresholdResult) -> Result<()> {
    if threshold.ensemble_size != ens.len() {
        return Err(Error::InvalidInput("threshold was computed on a different index set"));
    }
    Ok(())
}

/// `g(β) >= c a sqrt(E D(ν_β ‖ ν_0))` for `β >= β*`.
///
/// Below the threshold the report is flagged out of regime and carries no
/// verdict.
pub fn g_lower_lowtemp(
    ens: &IndexedEnsemble,
    beta: f64,
    threshold: &ThresholdResult,
    mc: &McConfig<'_>,
    cfg: &BoundConfig,
) -> Result<BoundReport> {
    cfg.validate()?;
    check_beta(beta)?;
    check_threshold(ens, threshold)?;
    let (g, d) = gibbs_and_kl(ens, beta, mc)?;
    let (rhs, reliable) = sqrt_side(cfg.c * ens.geometry().min_sep, d);
    let out_of_regime = beta < threshold.beta_star;
    let note = if out_of_regime {
        alloc::format!("beta below beta_star = {}", threshold.beta_star)
    } else {
        zero_note(beta)
    };
    Ok(assemble(
        Sides {
            name: "g_lower_lowtemp",
            beta,
            lhs: g,
            rhs,
            direction: Direction::LhsAtLeast,
            force_inconclusive: !reliable,
            out_of_regime,
            note,
        },
        cfg,
    ))
}

/// `g(β) >= κ σ sqrt(E D(ν_β ‖ ν_0))` for i.i.d. coordinates, computing the
/// threshold `β*` first.
pub fn g_lower_iid(ens: &IndexedEnsemble, beta: f64, mc: &McConfig<'_>, cfg: &BoundConfig) -> Result<BoundReport> {
    cfg.validate()?;
    iid_sigma(ens)?;
    let threshold = beta_star(ens, cfg.c, mc, DEFAULT_RESOLUTION)?;
    g_lower_iid_with_threshold(ens, beta, &threshold, mc, cfg)
}

/// As [`g_lower_iid`] with a precomputed threshold. `κ` is
/// `cfg.iid_high_temp_constant` below `β*` and `c` from `β*` on.
pub fn g_lower_iid_with_threshold(
    ens: &IndexedEnsemble,
    beta: f64,
    threshold: &ThresholdResult,
    mc: &McConfig<'_>,
    cfg: &BoundConfig,
) -> Result<BoundReport> {
    cfg.validate()?;
    check_beta(beta)?;
    let sigma = iid_sigma(ens)?;
    check_threshold(ens, threshold)?;
    let kappa = if beta < threshold.beta_star {
        cfg.iid_high_temp_constant
    } else {
        cfg.c
    };
    let (g, d) = gibbs_and_kl(ens, beta, mc)?;
    let (rhs, reliable) = sqrt_side(kappa * sigma, d);
    let mut note = alloc::format!("kappa = {kappa}");
    if beta == 0.0 {
        note.push_str("; ");
        note.push_str(&zero_note(beta));
    }
    Ok(assemble(
        Sides {
            name: "g_lower_iid",
            beta,
            lhs: g,
            rhs,
            direction: Direction::LhsAtLeast,
            force_inconclusive: !reliable,
            out_of_regime: false,
            note,
        },
        cfg,
    ))
}

/// `φ(β) <= sqrt(2 σ² E D_{1/2}(ν_β ‖ ν_0))`.
pub fn phi_upper(ens: &IndexedEnsemble, beta: f64, mc: &McConfig<'_>, cfg: &BoundConfig) -> Result<BoundReport> {
    cfg.validate()?;
    check_beta(beta)?;
    let (phi, d) = free_energy_and_renyi_half(ens, beta, mc)?;
    let (rhs, reliable) = sqrt_side(libm::sqrt(2.0 * sigma2(ens)), d);
    Ok(assemble(
        Sides {
            name: "phi_upper",
            beta,
            lhs: phi,
            rhs,
            direction: Direction::LhsAtMost,
            force_inconclusive: !reliable,
            out_of_regime: false,
            note: String::new(),
        },
        cfg,
    ))
}

/// `φ(β) >= (c σ / 2) sqrt(E D_{1/2}(ν_β ‖ ν_0))` for i.i.d. coordinates.
pub fn phi_lower_iid(ens: &IndexedEnsemble, beta: f64, mc: &McConfig<'_>, cfg: &BoundConfig) -> Result<BoundReport> {
    cfg.validate()?;
    check_beta(beta)?;
    let sigma = iid_sigma(ens)?;
    let (phi, d) = free_energy_and_renyi_half(ens, beta, mc)?;
    let (rhs, reliable) = sqrt_side(0.5 * cfg.c * sigma, d);
    Ok(assemble(
        Sides {
            name: "phi_lower_iid",
            beta,
            lhs: phi,
            rhs,
            direction: Direction::LhsAtLeast,
            force_inconclusive: !reliable,
            out_of_regime: false,
            note: String::new(),
        },
        cfg,
    ))
}

/// The zero-temperature baselines `c a sqrt(log |T|) <= E max X <=
/// sqrt(2 σ² log |T|)`, as `(upper, lower)`.
pub fn max_bounds(ens: &IndexedEnsemble, mc: &McConfig<'_>, cfg: &BoundConfig) -> Result<(BoundReport, BoundReport)> {
    cfg.validate()?;
    let m = sample_matrix(ens, mc, 1, |x, _, row| row[0] = max_of(x))?;
    let emax = m.estimate(0);
    let ln_n = libm::log(ens.len() as f64);
    let upper = assemble(
        Sides {
            name: "max_upper",
            beta: f64::INFINITY,
            lhs: emax,
            rhs: Estimate::exact(libm::sqrt(2.0 * sigma2(ens) * ln_n)),
            direction: Direction::LhsAtMost,
            force_inconclusive: false,
            out_of_regime: false,
            note: String::new(),
        },
        cfg,
    );
    let lower = assemble(
        Sides {
            name: "max_lower",
            beta: f64::INFINITY,
            lhs: emax,
            rhs: Estimate::exact(cfg.c * ens.geometry().min_sep * libm::sqrt(ln_n)),
            direction: Direction::LhsAtLeast,
            force_inconclusive: false,
            out_of_regime: false,
            note: String::new(),
        },
        cfg,
    );
    Ok((upper, lower))
}

/// The soft super-Sudakov check with the sets it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperSudakovReport {
    pub report: BoundReport,
    /// Scale `σ` of the packing (`4σ`) and of the balls (`σ`).
    pub scale: f64,
    /// Greedy `4σ`-packing `S`, in label order.
    pub packing: Vec<usize>,
    /// `B(s, σ)` for each `s` in the packing.
    pub balls: Vec<Vec<usize>>,
    /// `E Φ_β(X; T)` on the same realizations.
    pub full_set: Estimate,
    /// `E Φ_β(X; T) - lhs`, nonnegative by set-inclusion monotonicity.
    pub monotonicity_slack: f64,
    /// `monotonicity_slack` over the combined standard error.
    pub monotonicity_z: f64,
}

/// `E Φ_β(X; ∪_s B(s,σ)) >= σ E Φ_{βσ}(G; S) + |S|⁻¹ Σ_s E Φ_β(X; B(s,σ))`
/// for a `4σ`-packing `S`, with `G` i.i.d. standard normal on `S`.
///
/// `G` is drawn from each sample's stream right after `X`, so the check is
/// reproducible and shares `X` with every other estimator on the same seed.
pub fn soft_super_sudakov(
    ens: &IndexedEnsemble,
    beta: f64,
    mc: &McConfig<'_>,
    cfg: &BoundConfig,
) -> Result<SuperSudakovReport> {
    cfg.validate()?;
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            reason: "soft maxima need finite beta > 0",
        });
    }
    let scale = cfg.packing_scale.unwrap_or(ens.geometry().sigma);
    let packing = ens.greedy_packing(4.0 * scale);
    let balls: Vec<Vec<usize>> = packing.iter().map(|&s| ens.ball_at(s, scale)).collect();
    let mut union: Vec<usize> = balls.iter().flatten().copied().collect();
    union.sort_unstable();
    union.dedup();
    let all: Vec<usize> = (0..ens.len()).collect();
    let k = packing.len();

    // columns: Φ(X; ∪B), σ Φ_{βσ}(G; S), mean_s Φ(X; B_s), Φ(X; T)
    let m = sample_matrix(ens, mc, 4, |x, rng, row| {
        let mut g = vec![0.0; k];
        for v in g.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        let idx: Vec<usize> = (0..k).collect();
        row[0] = soft_max_raw(x, beta, &union);
        row[1] = scale * soft_max_raw(&g, beta * scale, &idx);
        row[2] = balls.iter().map(|b| soft_max_raw(x, beta, b)).sum::<f64>() / k as f64;
        row[3] = soft_max_raw(x, beta, &all);
    })?;
    let lhs = m.estimate(0);
    // with a single packing point the G term is σ G_s, whose mean is exactly 0
    let rhs = if k == 1 {
        m.estimate(2)
    } else {
        m.estimate_with(|c| c(1) + c(2))
    };
    let full_set = m.estimate(3);

    let monotonicity_slack = full_set.mean - lhs.mean;
    let se = libm::sqrt(full_set.std_error * full_set.std_error + lhs.std_error * lhs.std_error);
    let monotonicity_z = if se > 0.0 { monotonicity_slack / se } else { 0.0 };

    let report = assemble(
        Sides {
            name: "soft_super_sudakov",
            beta,
            lhs,
            rhs,
            direction: Direction::LhsAtLeast,
            force_inconclusive: false,
            out_of_regime: false,
            note: alloc::format!("|S| = {k}, |union| = {}, scale = {scale}", union.len()),
        },
        cfg,
    );
    Ok(SuperSudakovReport {
        report,
        scale,
        packing,
        balls,
        full_set,
        monotonicity_slack,
        monotonicity_z,
    })
}

/// Slacks of the per-realization sandwiches; each is `>= 0` when the
/// inequality holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichSlacks {
    /// `Φ_β - max x`.
    pub softmax_lower: f64,
    /// `max x + log|T|/β - Φ_β`.
    pub softmax_upper: f64,
    /// `⟨x⟩_β - (max x - log|T|/β)`.
    pub gibbs_lower: f64,
    /// `max x - ⟨x⟩_β`.
    pub gibbs_upper: f64,
}

impl SandwichSlacks {
    pub fn as_array(&self) -> [f64; 4] {
        [
            self.softmax_lower,
            self.softmax_upper,
            self.gibbs_lower,
            self.gibbs_upper,
        ]
    }

    /// Every slack is at least `-tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.as_array().iter().all(|&s| s >= -tol)
    }
}

/// Both per-realization sandwiches of the maximum by the soft maximum and
/// by the Gibbs average, for `β > 0`.
pub fn sandwich_suite(x: &[f64], beta: f64) -> Result<SandwichSlacks> {
    if x.is_empty() {
        return Err(Error::InvalidInput("empty realization"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("realization has non-finite entries"));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            reason: "sandwiches need finite beta > 0",
        });
    }
    let max = max_of(x);
    let ln_n = libm::log(x.len() as f64);
    let soft = log_partition_raw(x, beta) / beta;
    let g = gibbs_average_raw(x, beta);
    Ok(SandwichSlacks {
        softmax_lower: soft - max,
        softmax_upper: max + ln_n / beta - soft,
        gibbs_lower: g - (max - ln_n / beta),
        gibbs_upper: max - g,
    })
}
