//! Sample evaluation and deterministic reduction.

use alloc::vec;
use alloc::vec::Vec;

use crate::ensemble::IndexedEnsemble;
use crate::error::{Error, Result};
use crate::stream::{sample_stream, SampleRng};

/// Runs a per-sample kernel over every row of an output buffer.
///
/// Implementations may evaluate rows in any order or in parallel; the kernel
/// for row `i` only ever sees sample index `i`, so results do not depend on
/// the schedule.
pub trait SampleExecutor: Sync {
    fn for_each_row(&self, out: &mut [f64], width: usize, kernel: &(dyn Fn(u64, &mut [f64]) + Sync));
}

/// Evaluates rows one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl SampleExecutor for Sequential {
    fn for_each_row(&self, out: &mut [f64], width: usize, kernel: &(dyn Fn(u64, &mut [f64]) + Sync)) {
        for (i, row) in out.chunks_mut(width).enumerate() {
            kernel(i as u64, row);
        }
    }
}

/// Sample count, seed and executor for one Monte Carlo run.
#[derive(Clone, Copy)]
pub struct McConfig<'a> {
    pub n: usize,
    pub seed: u64,
    pub exec: &'a dyn SampleExecutor,
}

impl McConfig<'static> {
    pub fn new(n: usize, seed: u64) -> Self {
        McConfig {
            n,
            seed,
            exec: &Sequential,
        }
    }
}

impl<'a> McConfig<'a> {
    pub fn with_executor<'b>(self, exec: &'b dyn SampleExecutor) -> McConfig<'b> {
        McConfig {
            n: self.n,
            seed: self.seed,
            exec,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        McConfig { seed, ..self }
    }

    pub fn with_n(self, n: usize) -> Self {
        McConfig { n, ..self }
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: self.n as f64,
                reason: "at least 2 samples are needed for a standard error",
            });
        }
        Ok(())
    }
}

impl core::fmt::Debug for McConfig<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("McConfig")
            .field("n", &self.n)
            .field("seed", &self.seed)
            .finish_non_exhaustive()
    }
}

/// A mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    pub const fn exact(value: f64) -> Self {
        Estimate {
            mean: value,
            std_error: 0.0,
        }
    }

    /// Mean and `sd / sqrt(n)` with pairwise-tree summation.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = pairwise_sum(xs) / n;
        if xs.len() < 2 {
            return Estimate::exact(mean);
        }
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&dev) / (n - 1.0);
        Estimate {
            mean,
            std_error: libm::sqrt(var / n),
        }
    }

    /// `a x + b` for a constant affine map.
    pub fn affine(self, a: f64, b: f64) -> Self {
        Estimate {
            mean: a * self.mean + b,
            std_error: a.abs() * self.std_error,
        }
    }
}

/// Fixed-shape pairwise summation; the tree depends only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Per-sample statistics, one column per statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    n: usize,
    width: usize,
    columns: Vec<f64>,
}

impl SampleMatrix {
    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j * self.n..(j + 1) * self.n]
    }

    pub fn estimate(&self, j: usize) -> Estimate {
        Estimate::from_samples(self.column(j))
    }

    /// Estimate of a per-sample combination of columns.
    pub fn estimate_with(&self, f: impl Fn(&dyn Fn(usize) -> f64) -> f64) -> Estimate {
        let xs: Vec<f64> = (0..self.n)
            .map(|i| f(&|j: usize| self.columns[j * self.n + i]))
            .collect();
        Estimate::from_samples(&xs)
    }
}

/// Draws `mc.n` realizations of `ens` from the counter-based streams of
/// `mc.seed` and records `width` statistics per realization.
///
/// The kernel receives the realization and the sample's stream positioned
/// right after the draw of `X`, for statistics that need extra randomness.
pub fn sample_matrix<F>(ens: &IndexedEnsemble, mc: &McConfig<'_>, width: usize, stat: F) -> Result<SampleMatrix>
where
    F: Fn(&[f64], &mut SampleRng, &mut [f64]) + Sync,
{
    mc.check()?;
    if width == 0 {
        return Err(Error::InvalidInput("sample matrix needs at least one column"));
    }
    let n = mc.n;
    let seed = mc.seed;
    let mut rows = vec![0.0; n * width];
    let kernel = |i: u64, row: &mut [f64]| {
        let mut rng = sample_stream(seed, i);
        let mut scratch = Vec::new();
        let mut x = vec![0.0; ens.len()];
        ens.sample_into(&mut rng, &mut scratch, &mut x);
        stat(&x, &mut rng, row);
    };
    mc.exec.for_each_row(&mut rows, width, &kernel);

    let mut columns = vec![0.0; n * width];
    for i in 0..n {
        for j in 0..width {
            columns[j * n + i] = rows[i * width + j];
        }
    }
    Ok(SampleMatrix { n, width, columns })
}
