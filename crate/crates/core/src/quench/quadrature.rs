//! Tensor-product Gauss–Hermite quadrature over `X = F g`.
//!
//! This is the brute-force reference for small index sets: it shares the
//! per-realization functionals with the Monte Carlo estimators but nothing
//! else (no random streams, no reduction tree).

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::ensemble::IndexedEnsemble;
use crate::error::{Error, Result};
use crate::gibbs::Observable;

/// Largest index set the oracle accepts.
pub const ORACLE_MAX_SIZE: usize = 4;
/// Fewest nodes per dimension the oracle accepts.
pub const ORACLE_MIN_NODES: usize = 32;

/// Nodes and weights of the `n`-point Gauss–Hermite rule for the weight
/// `exp(-x²)`, nodes in decreasing order.
///
/// Starting points come from the eigenvalues of the Jacobi matrix; each is
/// then polished by Newton steps on the orthonormal recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const EPS: f64 = 1e-15;
    const PI_M4: f64 = 0.751_125_544_464_942_5; // π^(-1/4)
    const MAX_ITER: usize = 50;

    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            libm::sqrt(i.max(j) as f64 / 2.0)
        } else {
            0.0
        }
    });
    let mut guesses: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    guesses.sort_by(|a, b| b.total_cmp(a));

    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = guesses[i];
        let mut pp = 0.0;
        for _ in 0..MAX_ITER {
            // orthonormal Hermite recurrence
            let mut p1 = PI_M4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * libm::sqrt(2.0 / (jf + 1.0)) * p2 - libm::sqrt(jf / (jf + 1.0)) * p3;
            }
            pp = libm::sqrt(2.0 * nf) * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= EPS * z.abs().max(1.0) {
                break;
            }
        }
        if n % 2 == 1 && i == n / 2 {
            z = 0.0;
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `E f(Z)` for `Z ~ N(0, 1)` with an `nodes`-point rule.
pub fn normal_expectation(f: impl Fn(f64) -> f64, nodes: usize) -> f64 {
    let (x, w) = gauss_hermite(nodes);
    let norm = 1.0 / libm::sqrt(core::f64::consts::PI);
    x.iter()
        .zip(&w)
        .map(|(&xi, &wi)| wi * norm * f(core::f64::consts::SQRT_2 * xi))
        .sum()
}

/// `E f(|Z|)` for `Z ~ N(0, 1)` by composite Simpson on `[0, 12]` with
/// `intervals` (rounded up to even) panels. Suited to integrands with a kink
/// at the origin, where Gauss–Hermite converges slowly.
pub fn half_normal_expectation(f: impl Fn(f64) -> f64, intervals: usize) -> f64 {
    const UPPER: f64 = 12.0;
    let m = intervals.max(2).next_multiple_of(2);
    let h = UPPER / m as f64;
    let dens = |z: f64| 2.0 * libm::exp(-0.5 * z * z) / libm::sqrt(2.0 * core::f64::consts::PI);
    let mut acc = f(0.0) * dens(0.0) + f(UPPER) * dens(UPPER);
    for i in 1..m {
        let z = i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(z) * dens(z);
    }
    acc * h / 3.0
}

/// `E f(X)` for an observable on a small ensemble, by tensor-product
/// Gauss–Hermite quadrature in the standard normal coordinates `g`.
pub fn quadrature_oracle(ens: &IndexedEnsemble, obs: &Observable, beta: f64, nodes_per_dim: usize) -> Result<f64> {
    let dim = ens.len();
    if dim > ORACLE_MAX_SIZE {
        return Err(Error::OracleScale {
            size: dim,
            max: ORACLE_MAX_SIZE,
        });
    }
    if nodes_per_dim < ORACLE_MIN_NODES {
        return Err(Error::TooFewNodes {
            nodes: nodes_per_dim,
            min: ORACLE_MIN_NODES,
        });
    }
    // validates beta and observable parameters against a zero realization
    obs.evaluate(ens, &vec![0.0; dim], beta)?;
    Ok(tensor_expectation(ens, nodes_per_dim, |x| {
        obs.evaluate_raw(ens, x, beta)
    }))
}

/// `E f(X)` for an arbitrary per-realization function (no size checks).
pub(crate) fn tensor_expectation(ens: &IndexedEnsemble, nodes: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let dim = ens.len();
    let (z, w) = gauss_hermite(nodes);
    let norm = 1.0 / libm::sqrt(core::f64::consts::PI);
    let pts: Vec<f64> = z.iter().map(|v| core::f64::consts::SQRT_2 * v).collect();
    let wts: Vec<f64> = w.iter().map(|v| v * norm).collect();

    let mut idx = vec![0usize; dim];
    let mut g = vec![0.0; dim];
    let mut x = vec![0.0; dim];
    let mut acc = 0.0;
    'outer: loop {
        let mut weight = 1.0;
        for (k, &i) in idx.iter().enumerate() {
            g[k] = pts[i];
            weight *= wts[i];
        }
        ens.transform(&g, &mut x);
        acc += weight * f(&x);

        for i in idx.iter_mut() {
            *i += 1;
            if *i < nodes {
                continue 'outer;
            }
            *i = 0;
        }
        break;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn rule_integrates_moments() {
        for n in [5, 32, 64, 128, 200] {
            let (x, w) = gauss_hermite(n);
            let s0: f64 = w.iter().sum();
            assert!((s0 - libm::sqrt(PI)).abs() < 1e-13, "n={n} s0={s0}");
            let s2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
            assert!((s2 - libm::sqrt(PI) / 2.0).abs() < 1e-13);
            assert!(x.windows(2).all(|p| p[0] > p[1]));
        }
        let m4 = normal_expectation(|z| z.powi(4), 32);
        assert!((m4 - 3.0).abs() < 1e-12);
        let m6 = normal_expectation(|z| z.powi(6), 32);
        assert!((m6 - 15.0).abs() < 1e-11);
    }

    #[test]
    fn half_line_rule_moments() {
        let abs = half_normal_expectation(|z| z, 20_000);
        assert!((abs - libm::sqrt(2.0 / PI)).abs() < 1e-12);
        let m2 = half_normal_expectation(|z| z * z, 20_000);
        assert!((m2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_rejects_large_sets_and_few_nodes() {
        let e = IndexedEnsemble::build_iid(5, 1.0).unwrap();
        assert_eq!(
            quadrature_oracle(&e, &Observable::GibbsAverage, 1.0, 32).unwrap_err(),
            Error::OracleScale { size: 5, max: 4 }
        );
        let e = IndexedEnsemble::build_iid(2, 1.0).unwrap();
        assert!(matches!(
            quadrature_oracle(&e, &Observable::GibbsAverage, 1.0, 16),
            Err(Error::TooFewNodes { .. })
        ));
    }

    #[test]
    fn oracle_trivial_values() {
        let e = IndexedEnsemble::build_iid(2, 1.0).unwrap();
        let g0 = quadrature_oracle(&e, &Observable::GibbsAverage, 0.0, 32).unwrap();
        assert!(g0.abs() < 1e-10);
        let kl0 = quadrature_oracle(&e, &Observable::KlToUniform, 0.0, 32).unwrap();
        assert!(kl0.abs() < 1e-12);
    }

    #[test]
    fn two_dimensional_route_matches_tanh_integral() {
        // g(β) for two i.i.d. N(0,1): E[(D/2) tanh(βD/2)], D ~ N(0, 2)
        let e = IndexedEnsemble::build_iid(2, 1.0).unwrap();
        let beta = 1.0;
        let one_d = normal_expectation(
            |z| {
                let d = core::f64::consts::SQRT_2 * z;
                0.5 * d * libm::tanh(0.5 * beta * d)
            },
            200,
        );
        let two_d = quadrature_oracle(&e, &Observable::GibbsAverage, beta, 64).unwrap();
        assert!((one_d - two_d).abs() < 1e-8, "{one_d} vs {two_d}");
    }
}
