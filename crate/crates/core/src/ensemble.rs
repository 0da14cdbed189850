//! Centered Gaussian processes on a finite index set.
//!
//! An [`IndexedEnsemble`] is the law of `X = (X_t)_{t in T}`: a label per
//! index, the covariance `Σ[s][t] = E[X_s X_t]`, and a cached factor `F`
//! with `F Fᵀ = Σ` used for exact sampling `x = F g`, `g ~ N(0, I)`.
//! Scalar covariances (`Σ = v I`) are stored in collapsed form and never
//! materialize an `|T| x |T|` matrix, which keeps 2^16-state ensembles cheap.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Numerical tolerances used when validating a covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed asymmetry, relative to the largest absolute entry.
    pub symmetry: f64,
    /// Eigenvalues down to `-eigenvalue * ‖Σ‖` are clamped to zero.
    pub eigenvalue: f64,
    /// Slack allowed in triangle-inequality checks on the canonical metric.
    pub triangle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            symmetry: 1e-12,
            eigenvalue: 1e-10,
            triangle: 1e-9,
        }
    }
}

/// How the sampling factor was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    /// `Σ = v I`, sampled as `sqrt(v) g`.
    Scalar,
    /// Lower-triangular Cholesky factor.
    Cholesky,
    /// `V diag(sqrt(max(λ, 0)))` from a symmetric eigendecomposition, used
    /// when `Σ` is only positive semidefinite.
    Eigen,
}

#[derive(Debug, Clone)]
enum Law {
    Scalar {
        variance: f64,
        std_dev: f64,
    },
    Dense {
        covariance: Vec<f64>,
        // row-major, x_i = sum_j factor[i * n + j] g_j
        factor: Vec<f64>,
        kind: FactorKind,
    },
}

/// Canonical-metric geometry of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    size: usize,
    // Row-major distance matrix; `None` for scalar covariances, where every
    // off-diagonal distance equals `min_sep`.
    dist: Option<Vec<f64>>,
    /// Minimum separation `a = min_{s != t} d(s, t)`.
    pub min_sep: f64,
    /// Diameter `Δ = max d(s, t)`.
    pub diameter: f64,
    /// Largest standard deviation `σ = max_t sqrt(Σ[t][t])`.
    pub sigma: f64,
}

impl Geometry {
    pub fn size(&self) -> usize {
        self.size
    }

    /// Canonical distance `d(s, t) = sqrt(E|X_s - X_t|²)`.
    pub fn dist(&self, s: usize, t: usize) -> f64 {
        match &self.dist {
            Some(d) => d[s * self.size + t],
            None if s == t => 0.0,
            None => self.min_sep,
        }
    }

    pub fn dist2(&self, s: usize, t: usize) -> f64 {
        let d = self.dist(s, t);
        d * d
    }

    /// Materializes the full `|T| x |T|` distance matrix.
    pub fn distance_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |s, t| self.dist(s, t))
    }
}

/// One sample of the process, one coordinate per label.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization(Vec<f64>);

impl Realization {
    /// Wraps a vector of energies, rejecting non-finite entries.
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("realization has non-finite entries"));
        }
        Ok(Realization(x))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Realization {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// The law of a centered Gaussian process on a finite index set.
#[derive(Debug, Clone)]
pub struct IndexedEnsemble {
    labels: Vec<String>,
    law: Law,
    geometry: Geometry,
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("t{i}")).collect()
}

impl IndexedEnsemble {
    /// `n` i.i.d. `N(0, variance)` coordinates labelled `t0 .. t{n-1}`.
    pub fn build_iid(n: usize, variance: f64) -> Result<Self> {
        Self::build_iid_with_labels(default_labels(n), variance)
    }

    pub fn build_iid_with_labels(labels: Vec<String>, variance: f64) -> Result<Self> {
        let n = labels.len();
        if n < 2 {
            return Err(Error::InvalidSize(n));
        }
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::InvalidParameter {
                name: "variance",
                value: variance,
                reason: "must be positive and finite",
            });
        }
        let std_dev = libm::sqrt(variance);
        let sep = libm::sqrt(2.0 * variance);
        Ok(IndexedEnsemble {
            labels,
            law: Law::Scalar { variance, std_dev },
            geometry: Geometry {
                size: n,
                dist: None,
                min_sep: sep,
                diameter: sep,
                sigma: std_dev,
            },
        })
    }

    /// Builds an ensemble from a covariance given as rows.
    pub fn build_from_covariance(labels: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        Self::build_from_covariance_with(labels, rows, Tolerances::default())
    }

    pub fn build_from_covariance_with(labels: Vec<String>, rows: &[Vec<f64>], tol: Tolerances) -> Result<Self> {
        let n = labels.len();
        if n < 2 {
            return Err(Error::InvalidSize(n));
        }
        if rows.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rows.len(),
            });
        }
        let mut cov = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            cov.extend_from_slice(row);
        }
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("covariance has non-finite entries"));
        }

        let scale = cov.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in (i + 1)..n {
                let (upper, lower) = (cov[i * n + j], cov[j * n + i]);
                if (upper - lower).abs() > tol.symmetry * scale {
                    return Err(Error::Asymmetric {
                        row: i,
                        col: j,
                        upper,
                        lower,
                    });
                }
                let avg = 0.5 * (upper + lower);
                cov[i * n + j] = avg;
                cov[j * n + i] = avg;
            }
        }

        let geometry = dense_geometry(&labels, &cov, scale, tol)?;

        if let Some(variance) = scalar_variance(&cov, n) {
            return Ok(IndexedEnsemble {
                labels,
                law: Law::Scalar {
                    variance,
                    std_dev: libm::sqrt(variance),
                },
                geometry,
            });
        }

        let (factor, kind) = factorize(&cov, n, tol)?;
        Ok(IndexedEnsemble {
            labels,
            law: Law::Dense {
                covariance: cov,
                factor,
                kind,
            },
            geometry,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(String::from(label)))
    }

    /// `E[X_s X_t]`.
    pub fn covariance(&self, s: usize, t: usize) -> f64 {
        match &self.law {
            Law::Scalar { variance, .. } => {
                if s == t {
                    *variance
                } else {
                    0.0
                }
            }
            Law::Dense { covariance, .. } => covariance[s * self.len() + t],
        }
    }

    /// The common variance when `Σ` is a scalar matrix.
    pub fn iid_variance(&self) -> Option<f64> {
        match self.law {
            Law::Scalar { variance, .. } => Some(variance),
            Law::Dense { .. } => None,
        }
    }

    pub fn factor_kind(&self) -> FactorKind {
        match &self.law {
            Law::Scalar { .. } => FactorKind::Scalar,
            Law::Dense { kind, .. } => *kind,
        }
    }

    /// Entry `(i, j)` of the sampling factor `F`, `F Fᵀ = Σ`.
    pub fn factor_entry(&self, i: usize, j: usize) -> f64 {
        match &self.law {
            Law::Scalar { std_dev, .. } => {
                if i == j {
                    *std_dev
                } else {
                    0.0
                }
            }
            Law::Dense { factor, .. } => factor[i * self.len() + j],
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    /// Maps standard normal coordinates `g` to `x = F g`.
    pub fn transform(&self, g: &[f64], out: &mut [f64]) {
        let n = self.len();
        match &self.law {
            Law::Scalar { std_dev, .. } => {
                for (o, gi) in out.iter_mut().zip(g) {
                    *o = std_dev * gi;
                }
            }
            Law::Dense { factor, kind, .. } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let row = &factor[i * n..(i + 1) * n];
                    let upto = if *kind == FactorKind::Cholesky { i + 1 } else { n };
                    *o = row[..upto].iter().zip(&g[..upto]).map(|(f, g)| f * g).sum();
                }
            }
        }
    }

    /// Draws one realization into `out`, using `scratch` for the standard
    /// normal coordinates.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut Vec<f64>, out: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(out.len(), n);
        match &self.law {
            Law::Scalar { std_dev, .. } => {
                for o in out.iter_mut() {
                    let g: f64 = rng.sample(StandardNormal);
                    *o = std_dev * g;
                }
            }
            Law::Dense { .. } => {
                scratch.clear();
                scratch.extend((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
                self.transform(scratch, out);
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Realization {
        let mut out = vec![0.0; self.len()];
        let mut scratch = Vec::new();
        self.sample_into(rng, &mut scratch, &mut out);
        Realization(out)
    }

    /// Greedy packing: scans labels in order and keeps each one that is at
    /// distance `>= radius` from everything kept so far. The result is
    /// pairwise `radius`-separated and maximal.
    pub fn greedy_packing(&self, radius: f64) -> Vec<usize> {
        let mut kept: Vec<usize> = Vec::new();
        for t in 0..self.len() {
            if kept.iter().all(|&s| self.geometry.dist(s, t) >= radius) {
                kept.push(t);
            }
        }
        kept
    }

    /// Closed ball `{t : d(center, t) <= radius}` around a label.
    pub fn ball(&self, center: &str, radius: f64) -> Result<Vec<usize>> {
        let c = self.label_index(center)?;
        Ok(self.ball_at(c, radius))
    }

    pub fn ball_at(&self, center: usize, radius: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&t| t == center || self.geometry.dist(center, t) <= radius)
            .collect()
    }
}

fn scalar_variance(cov: &[f64], n: usize) -> Option<f64> {
    let v = cov[0];
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j { v } else { 0.0 };
            if cov[i * n + j] != expected {
                return None;
            }
        }
    }
    Some(v)
}

fn dense_geometry(labels: &[String], cov: &[f64], scale: f64, tol: Tolerances) -> Result<Geometry> {
    let n = labels.len();
    let mut dist = vec![0.0; n * n];
    let mut min_sep = f64::INFINITY;
    let mut diameter = 0.0f64;
    let mut sigma = 0.0f64;
    for s in 0..n {
        sigma = sigma.max(libm::sqrt(cov[s * n + s].max(0.0)));
        for t in (s + 1)..n {
            let d2 = cov[s * n + s] + cov[t * n + t] - 2.0 * cov[s * n + t];
            if d2 <= tol.symmetry * scale {
                return Err(Error::DegeneratePair(labels[s].clone(), labels[t].clone()));
            }
            let d = libm::sqrt(d2);
            dist[s * n + t] = d;
            dist[t * n + s] = d;
            min_sep = min_sep.min(d);
            diameter = diameter.max(d);
        }
    }
    Ok(Geometry {
        size: n,
        dist: Some(dist),
        min_sep,
        diameter,
        sigma,
    })
}

fn factorize(cov: &[f64], n: usize, tol: Tolerances) -> Result<(Vec<f64>, FactorKind)> {
    let m = DMatrix::from_row_slice(n, n, cov);
    if let Some(chol) = m.clone().cholesky() {
        let l = chol.l();
        let factor = (0..n * n).map(|k| l[(k / n, k % n)]).collect();
        return Ok((factor, FactorKind::Cholesky));
    }
    let eig = m.symmetric_eigen();
    let norm = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let threshold = -tol.eigenvalue * norm;
    if let Some(&worst) = eig
        .eigenvalues
        .iter()
        .filter(|&&l| l < threshold)
        .min_by(|a, b| a.total_cmp(b))
    {
        return Err(Error::NegativeEigenvalue {
            eigenvalue: worst,
            threshold,
        });
    }
    let roots: Vec<f64> = eig.eigenvalues.iter().map(|&l| libm::sqrt(l.max(0.0))).collect();
    let factor = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            eig.eigenvectors[(i, j)] * roots[j]
        })
        .collect();
    Ok((factor, FactorKind::Eigen))
}
