use std::f64::consts::{LN_2, PI};

use gibbsmax_core::bounds::{self, BoundConfig};
use gibbsmax_core::quench::{
    self, beta_star, gauss_hermite, mc_estimate, mc_estimate_many, quadrature_oracle, DEFAULT_RESOLUTION,
};
use gibbsmax_core::rem::{self, RemModel};
use gibbsmax_core::{IndexedEnsemble, McConfig, Observable, Verdict};

fn corr3() -> IndexedEnsemble {
    let labels = ["a", "b", "c"].map(String::from).to_vec();
    IndexedEnsemble::build_from_covariance(labels, &[vec![1.0, 0.5, 0.2], vec![0.5, 1.5, 0.3], vec![0.2, 0.3, 0.8]])
        .unwrap()
}

/// `E f(D)` for `D ~ N(0, var)` with a plain Gauss–Hermite rule.
fn normal_1d(f: impl Fn(f64) -> f64, var: f64, nodes: usize) -> f64 {
    let (x, w) = gauss_hermite(nodes);
    let s = (2.0 * var).sqrt();
    x.iter().zip(&w).map(|(&xi, &wi)| wi * f(s * xi)).sum::<f64>() / PI.sqrt()
}

#[test]
fn two_point_gibbs_average_matches_tanh_integral() {
    let ens = IndexedEnsemble::build_iid(2, 1.0).unwrap();
    let beta = 1.0;
    let oracle = normal_1d(|d| 0.5 * d * (0.5 * beta * d).tanh(), 2.0, 120);
    let q = mc_estimate(&ens, &Observable::GibbsAverage, beta, &McConfig::new(1_000_000, 17)).unwrap();
    assert!((q.mean - oracle).abs() <= 3.0 * q.std_error, "{} vs {oracle}", q.mean);
}

#[test]
fn replica_form_agrees_with_direct_form() {
    let ens = IndexedEnsemble::build_iid(2, 1.0).unwrap();
    let mc = McConfig::new(200_000, 4);
    let direct = mc_estimate(&ens, &Observable::GibbsAverage, 1.0, &mc).unwrap();
    let replica = quench::replica_gibbs_estimate(&ens, 1.0, &mc.with_seed(5)).unwrap();
    let se = direct.std_error.hypot(replica.std_error);
    assert!((direct.mean - replica.mean).abs() <= 3.0 * se);

    let a = quadrature_oracle(&ens, &Observable::GibbsAverage, 1.0, 64).unwrap();
    let b = quadrature_oracle(&ens, &Observable::ReplicaGibbs, 1.0, 64).unwrap();
    assert!((a - b).abs() <= 1e-10);

    let c3 = corr3();
    let a = quadrature_oracle(&c3, &Observable::GibbsAverage, 1.0, 64).unwrap();
    let b = quadrature_oracle(&c3, &Observable::ReplicaGibbs, 1.0, 64).unwrap();
    assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
}

#[test]
fn quenched_values_at_infinite_temperature() {
    let ens = corr3();
    let mc = McConfig::new(5_000, 8);
    let q = mc_estimate_many(
        &ens,
        &[(Observable::GibbsAverage, 0.0), (Observable::KlToUniform, 0.0)],
        &mc,
    )
    .unwrap();
    assert!(q[0].mean.abs() <= 3.0 * q[0].std_error);
    assert_eq!((q[1].mean, q[1].std_error), (0.0, 0.0));
    assert!(
        quadrature_oracle(&ens, &Observable::GibbsAverage, 0.0, 32)
            .unwrap()
            .abs()
            < 1e-10
    );
    let two = IndexedEnsemble::build_iid(2, 1.0).unwrap();
    assert!(
        quadrature_oracle(&two, &Observable::KlToUniform, 0.0, 32)
            .unwrap()
            .abs()
            < 1e-12
    );
}

#[test]
fn threshold_postcondition_on_fresh_seed() {
    let ens = IndexedEnsemble::build_iid(2, 1.0).unwrap();
    let c = 1.0 / 17.0;
    let mc = McConfig::new(20_000, 1);
    let t = beta_star(&ens, c, &mc, DEFAULT_RESOLUTION).unwrap();
    assert!((t.target - 1.0 / 578.0).abs() < 1e-15);
    assert!(t.bracket.1 - t.bracket.0 <= DEFAULT_RESOLUTION * ens.geometry().sigma);
    let fresh = mc_estimate(&ens, &Observable::ParticipationRatio, t.beta_star, &mc.with_seed(99)).unwrap();
    assert!(1.0 - fresh.mean <= t.target + 3.0 * fresh.std_error);
}

#[test]
fn expected_max_of_two_points() {
    let ens = IndexedEnsemble::build_iid(2, 1.0).unwrap();
    let q = quench::expected_max_estimate(&ens, &McConfig::new(200_000, 2)).unwrap();
    let oracle = quench::half_normal_expectation(|z| z * 2f64.sqrt() / 2.0, 4000);
    assert!((oracle - 1.0 / PI.sqrt()).abs() < 1e-10);
    assert!((q.mean - oracle).abs() <= 3.0 * q.std_error);
}

#[test]
fn soft_max_approaches_expected_max() {
    let ens = corr3();
    let all: Vec<usize> = (0..3).collect();
    let beta = 1e3;
    let q = mc_estimate_many(
        &ens,
        &[(Observable::SoftMax(all), beta), (Observable::ExpectedMax, 0.0)],
        &McConfig::new(20_000, 3),
    )
    .unwrap();
    let diff = q[0].mean - q[1].mean;
    let se = q[0].std_error.hypot(q[1].std_error);
    assert!(diff >= -3.0 * se);
    assert!(diff <= 3f64.ln() / beta + 3.0 * se);
}

#[test]
fn relabeling_does_not_change_estimates() {
    let a = IndexedEnsemble::build_iid(4, 1.0).unwrap();
    let b = IndexedEnsemble::build_iid_with_labels(["w", "x", "y", "z"].map(String::from).to_vec(), 1.0).unwrap();
    let mc = McConfig::new(3_000, 12);
    let qa = quench::expected_max_estimate(&a, &mc).unwrap();
    let qb = quench::expected_max_estimate(&b, &mc).unwrap();
    assert_eq!(qa.mean.to_bits(), qb.mean.to_bits());
}

#[test]
fn entropy_form_at_low_temperature() {
    let ens = IndexedEnsemble::build_iid(16, 1.0).unwrap();
    let r = bounds::g_upper_entropy_form(&ens, 200.0, &McConfig::new(20_000, 6), &BoundConfig::default()).unwrap();
    assert!((r.rhs.mean - (2.0 * 16f64.ln()).sqrt()).abs() <= 0.01, "{}", r.rhs.mean);
    assert_ne!(r.verdict, Verdict::Violated);
}

#[test]
fn rem_pressure_checks() {
    let model = RemModel::new(10).unwrap();
    let mc = McConfig::new(2_000, 42);
    let p1 = rem::pressure_estimate(&model, 1.0, &mc).unwrap();
    assert!((p1.mean - (LN_2 + 0.25)).abs() <= 0.05, "{}", p1.mean);

    let c = 1.0 / 17.0;
    let t = beta_star(model.ensemble(), c, &mc, DEFAULT_RESOLUTION).unwrap();
    let p4 = rem::pressure_estimate(&model, 4.0, &mc).unwrap();
    assert!(p4.mean <= LN_2 + 4.0 + 3.0 * p4.std_error);
    assert!(rem::q_lower(&model, 4.0, &t, c, &mc).unwrap() <= p4.mean + 3.0 * p4.std_error);

    let far = 2.0 * t.beta_star;
    let p_far = rem::pressure_estimate(&model, far, &mc).unwrap();
    assert!(rem::q_lower(&model, far, &t, c, &mc).unwrap() <= p_far.mean + 3.0 * p_far.std_error);

    let grid: Vec<f64> = (0..=6).map(|k| 0.5 * k as f64).collect();
    let p3 = rem::pressure_estimate(&model, 3.0, &mc).unwrap();
    assert!(rem::q_upper_min(&model, 3.0, &grid, &mc).unwrap() >= p3.mean - 3.0 * p3.std_error);
}

#[test]
fn rem_sweep_trapezoid_consistency() {
    let model = RemModel::new(10).unwrap();
    let grid: Vec<f64> = (0..=16).map(|k| 0.25 * k as f64).collect();
    let curve = rem::pressure_sweep(&model, &grid, &McConfig::new(2_000, 42), 1.0 / 17.0).unwrap();
    assert_eq!(curve.rows[0].p_hat.mean, LN_2);
    assert!(curve.all_hold());
    assert!(curve.integral.max_abs_residual <= rem::INTEGRAL_TOLERANCE);
}
