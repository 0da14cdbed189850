//! Disorder-averaged ("quenched") observables.
//!
//! Every estimator draws realization `i` from the stream `(seed, i)`, so two
//! estimates sharing a seed see the same disorder sample by sample (common
//! random numbers) and results are bit-identical for any executor.

mod exec;
pub mod quadrature;

use alloc::vec::Vec;

pub use exec::{pairwise_sum, sample_matrix, Estimate, McConfig, SampleExecutor, SampleMatrix, Sequential};
pub use quadrature::{gauss_hermite, half_normal_expectation, normal_expectation, quadrature_oracle};

use crate::ensemble::IndexedEnsemble;
use crate::error::{Error, Result};
use crate::gibbs::{participation_ratio_raw, Observable};

/// Monte Carlo estimate of one quenched observable.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchedEstimate {
    pub observable: Observable,
    /// `+inf` for [`Observable::ExpectedMax`].
    pub beta: f64,
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl QuenchedEstimate {
    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean,
            std_error: self.std_error,
        }
    }
}

fn check_probe(ens: &IndexedEnsemble, obs: &Observable, beta: f64) -> Result<()> {
    obs.validate(ens.len())?;
    if *obs == Observable::ExpectedMax {
        return Ok(());
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            reason: "inverse temperature must be finite and >= 0",
        });
    }
    if matches!(obs, Observable::SoftMax(_)) && beta == 0.0 {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            reason: "soft max needs beta > 0",
        });
    }
    Ok(())
}

/// `E f(X)` for one observable at one `β`.
pub fn mc_estimate(ens: &IndexedEnsemble, obs: &Observable, beta: f64, mc: &McConfig<'_>) -> Result<QuenchedEstimate> {
    let probe = [(obs.clone(), beta)];
    Ok(mc_estimate_many(ens, &probe, mc)?.remove(0))
}

/// Several `(observable, β)` probes evaluated on the same realizations.
pub fn mc_estimate_many(
    ens: &IndexedEnsemble,
    probes: &[(Observable, f64)],
    mc: &McConfig<'_>,
) -> Result<Vec<QuenchedEstimate>> {
    for (obs, beta) in probes {
        check_probe(ens, obs, *beta)?;
    }
    if probes.is_empty() {
        return Ok(Vec::new());
    }
    let m = sample_matrix(ens, mc, probes.len(), |x, _, row| {
        for (out, (obs, beta)) in row.iter_mut().zip(probes) {
            *out = obs.evaluate_raw(ens, x, *beta);
        }
    })?;
    Ok(probes
        .iter()
        .enumerate()
        .map(|(j, (obs, beta))| {
            let e = m.estimate(j);
            QuenchedEstimate {
                observable: obs.clone(),
                beta: if *obs == Observable::ExpectedMax {
                    f64::INFINITY
                } else {
                    *beta
                },
                mean: e.mean,
                std_error: e.std_error,
                n_samples: mc.n,
                seed: mc.seed,
            }
        })
        .collect())
}

/// `g(β)` through the replica form `(β/2) Σ d²(s,t) E[ν(s) ν(t)]`.
pub fn replica_gibbs_estimate(ens: &IndexedEnsemble, beta: f64, mc: &McConfig<'_>) -> Result<QuenchedEstimate> {
    mc_estimate(ens, &Observable::ReplicaGibbs, beta, mc)
}

/// `E max_t X_t`.
pub fn expected_max_estimate(ens: &IndexedEnsemble, mc: &McConfig<'_>) -> Result<QuenchedEstimate> {
    mc_estimate(ens, &Observable::ExpectedMax, f64::INFINITY, mc)
}

/// Default bisection resolution, in units of `β σ`.
pub const DEFAULT_RESOLUTION: f64 = 1e-3;

/// Search cap for the threshold, in units of `β σ`.
pub const BETA_MAX_SIGMA: f64 = 1e4;

/// The low-temperature threshold: the smallest `β` (to the bisection
/// resolution) with `1 - r̂(β) <= c² a² / (2 Δ²)`, `r = E ‖ν_β‖²₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    pub beta_star: f64,
    /// Final bisection interval `(lo, hi)`; `beta_star == hi`.
    pub bracket: (f64, f64),
    pub target: f64,
    pub r_at_star: QuenchedEstimate,
    /// The condition already held at `β = 0`.
    pub immediate: bool,
    /// Size of the index set the threshold was computed on.
    pub ensemble_size: usize,
}

/// `c² a² / (2 Δ²)`.
pub fn threshold_target(ens: &IndexedEnsemble, c: f64) -> f64 {
    let g = ens.geometry();
    c * c * g.min_sep * g.min_sep / (2.0 * g.diameter * g.diameter)
}

/// Bisection for the threshold `β*` under common random numbers.
///
/// `r̂(β)` is a sample mean of per-realization participation ratios, each
/// nondecreasing in `β`, so with a shared seed the probes are monotone and
/// the bracket is consistent. `resolution` is in units of `β σ`.
pub fn beta_star(ens: &IndexedEnsemble, c: f64, mc: &McConfig<'_>, resolution: f64) -> Result<ThresholdResult> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidParameter {
            name: "c",
            value: c,
            reason: "Sudakov constant must lie in (0, 1)",
        });
    }
    beta_star_for_target(ens, threshold_target(ens, c), mc, resolution)
}

/// Bisection for the smallest `β` with `1 - r̂(β) <= target`.
pub fn beta_star_for_target(
    ens: &IndexedEnsemble,
    target: f64,
    mc: &McConfig<'_>,
    resolution: f64,
) -> Result<ThresholdResult> {
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(Error::InvalidParameter {
            name: "resolution",
            value: resolution,
            reason: "must be positive",
        });
    }
    if !(target > 0.0) {
        return Err(Error::InvalidParameter {
            name: "target",
            value: target,
            reason: "must be positive",
        });
    }
    mc.check()?;
    let n = ens.len();
    let sigma = ens.geometry().sigma;

    let r_hat = |beta: f64| -> Result<QuenchedEstimate> {
        let m = sample_matrix(ens, mc, 1, |x, _, row| row[0] = participation_ratio_raw(x, beta))?;
        let e = m.estimate(0);
        Ok(QuenchedEstimate {
            observable: Observable::ParticipationRatio,
            beta,
            mean: e.mean,
            std_error: e.std_error,
            n_samples: mc.n,
            seed: mc.seed,
        })
    };

    if target >= 1.0 - 1.0 / n as f64 {
        return Ok(ThresholdResult {
            beta_star: 0.0,
            bracket: (0.0, 0.0),
            target,
            r_at_star: r_hat(0.0)?,
            immediate: true,
            ensemble_size: n,
        });
    }

    let beta_max = BETA_MAX_SIGMA / sigma;
    let mut lo = 0.0;
    let mut hi = 1.0 / sigma;
    let mut at_hi = r_hat(hi)?;
    while 1.0 - at_hi.mean > target {
        if hi >= beta_max {
            return Err(Error::UnboundedThreshold {
                beta_max,
                gap: 1.0 - at_hi.mean,
                target,
            });
        }
        lo = hi;
        hi = (2.0 * hi).min(beta_max);
        at_hi = r_hat(hi)?;
    }

    let width = resolution / sigma;
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        let at_mid = r_hat(mid)?;
        if 1.0 - at_mid.mean <= target {
            hi = mid;
            at_hi = at_mid;
        } else {
            lo = mid;
        }
    }

    Ok(ThresholdResult {
        beta_star: hi,
        bracket: (lo, hi),
        target,
        r_at_star: at_hi,
        immediate: false,
        ensemble_size: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn correlated3() -> IndexedEnsemble {
        IndexedEnsemble::build_from_covariance(
            vec!["a".to_string(), "b".to_string(), "c".to_string()],
            &[vec![1.0, 0.4, 0.1], vec![0.4, 1.5, 0.3], vec![0.1, 0.3, 0.8]],
        )
        .unwrap()
    }

    #[test]
    fn needs_two_samples() {
        let e = IndexedEnsemble::build_iid(2, 1.0).unwrap();
        assert!(matches!(
            mc_estimate(&e, &Observable::GibbsAverage, 1.0, &McConfig::new(1, 0)),
            Err(Error::InvalidParameter { name: "n", .. })
        ));
    }

    #[test]
    fn beta_zero_values() {
        let e = correlated3();
        let mc = McConfig::new(20_000, 3);
        let g = mc_estimate(&e, &Observable::GibbsAverage, 0.0, &mc).unwrap();
        assert!(g.mean.abs() <= 3.0 * g.std_error);
        let kl = mc_estimate(&e, &Observable::KlToUniform, 0.0, &mc).unwrap();
        assert_eq!((kl.mean, kl.std_error), (0.0, 0.0));
        let fe = mc_estimate(&e, &Observable::FreeEnergy, 0.0, &mc).unwrap();
        assert_eq!((fe.mean, fe.std_error), (0.0, 0.0));
        let rep = replica_gibbs_estimate(&e, 0.0, &mc).unwrap();
        assert_eq!(rep.mean, 0.0);
    }

    #[test]
    fn estimates_are_reproducible() {
        let e = correlated3();
        let mc = McConfig::new(5_000, 99);
        let a = mc_estimate(&e, &Observable::KlToUniform, 1.5, &mc).unwrap();
        let b = mc_estimate(&e, &Observable::KlToUniform, 1.5, &mc).unwrap();
        assert_eq!(a, b);
        let c = mc_estimate(&e, &Observable::KlToUniform, 1.5, &mc.with_seed(100)).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn standard_error_definition() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let e = Estimate::from_samples(&xs);
        assert_eq!(e.mean, 2.5);
        let sd = libm::sqrt((2.25 + 0.25 + 0.25 + 2.25) / 3.0);
        assert!((e.std_error - sd / 2.0).abs() < 1e-15);
    }

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
    }

    #[test]
    fn empirical_covariance_of_iid_pair() {
        let e = IndexedEnsemble::build_iid(2, 1.0).unwrap();
        let mc = McConfig::new(100_000, 1);
        let m = sample_matrix(&e, &mc, 5, |x, _, row| {
            row[0] = x[0];
            row[1] = x[1];
            row[2] = x[0] * x[0];
            row[3] = x[1] * x[1];
            row[4] = x[0] * x[1];
        })
        .unwrap();
        for (j, expected) in [(0, 0.0), (1, 0.0), (2, 1.0), (3, 1.0), (4, 0.0)] {
            assert!((m.estimate(j).mean - expected).abs() < 0.02, "column {j}");
        }
    }

    #[test]
    fn difference_variance_matches_canonical_metric() {
        let e = correlated3();
        let mc = McConfig::new(100_000, 8);
        let m = sample_matrix(&e, &mc, 3, |x, _, row| {
            row[0] = (x[0] - x[1]).powi(2);
            row[1] = (x[0] - x[2]).powi(2);
            row[2] = (x[1] - x[2]).powi(2);
        })
        .unwrap();
        for (j, (s, t)) in [(0, 1), (0, 2), (1, 2)].into_iter().enumerate() {
            let est = m.estimate(j);
            let d2 = e.geometry().dist2(s, t);
            assert!((est.mean - d2).abs() <= 5.0 * est.std_error, "pair ({s},{t})");
        }
    }

    #[test]
    fn participation_estimates_monotone_under_common_numbers() {
        let e = correlated3();
        let mc = McConfig::new(2_000, 5);
        let mut prev = 0.0;
        for k in 0..30 {
            let beta = 0.3 * k as f64;
            let r = mc_estimate(&e, &Observable::ParticipationRatio, beta, &mc)
                .unwrap()
                .mean;
            assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn threshold_immediate_when_target_is_loose() {
        let e = IndexedEnsemble::build_iid(2, 1.0).unwrap();
        let t = beta_star_for_target(&e, 0.5, &McConfig::new(100, 1), 1e-3).unwrap();
        assert!(t.immediate);
        assert_eq!(t.beta_star, 0.0);
        assert_eq!(t.r_at_star.mean, 0.5);
        assert!(beta_star(&e, 1.5, &McConfig::new(100, 1), 1e-3).is_err());
    }

    #[test]
    fn threshold_bracket_contract() {
        let e = IndexedEnsemble::build_iid(2, 1.0).unwrap();
        let c = 1.0 / 17.0;
        let mc = McConfig::new(4_000, 21);
        let t = beta_star(&e, c, &mc, 1e-3).unwrap();
        assert!((t.target - 1.0 / 578.0).abs() < 1e-15);
        assert!(t.bracket.1 - t.bracket.0 <= 1e-3);
        assert!(1.0 - t.r_at_star.mean <= t.target);
        let below = mc_estimate(&e, &Observable::ParticipationRatio, t.bracket.0, &mc).unwrap();
        assert!(1.0 - below.mean > t.target);
        assert_eq!(t.beta_star, t.bracket.1);
        assert!(t.beta_star > 0.0);
    }
}
