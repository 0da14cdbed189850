use gibbsmax_core::quench::SampleExecutor;
use rayon::prelude::*;
use rayon::ThreadPool;

/// Evaluates sample rows on a rayon pool.
///
/// Rows are independent and reduced afterwards in a fixed order, so the
/// thread count never changes a result.
pub struct RayonExecutor {
    pool: Option<ThreadPool>,
}

impl RayonExecutor {
    /// Uses the global rayon pool.
    pub fn global() -> Self {
        RayonExecutor { pool: None }
    }

    /// Uses a dedicated pool with `threads` workers.
    pub fn with_threads(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(RayonExecutor { pool: Some(pool) })
    }
}

impl SampleExecutor for RayonExecutor {
    fn for_each_row(&self, out: &mut [f64], width: usize, kernel: &(dyn Fn(u64, &mut [f64]) + Sync)) {
        let run = |out: &mut [f64]| {
            out.par_chunks_mut(width)
                .enumerate()
                .for_each(|(i, row)| kernel(i as u64, row));
        };
        match &self.pool {
            Some(pool) => pool.install(|| run(out)),
            None => run(out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gibbsmax_core::quench::{mc_estimate, McConfig};
    use gibbsmax_core::{IndexedEnsemble, Observable};

    #[test]
    fn matches_sequential_bit_for_bit() {
        let e = IndexedEnsemble::build_iid(16, 1.5).unwrap();
        let seq = McConfig::new(3000, 11);
        let a = mc_estimate(&e, &Observable::KlToUniform, 1.3, &seq).unwrap();
        for threads in [1, 3, 8] {
            let ex = RayonExecutor::with_threads(threads).unwrap();
            let par = seq.with_executor(&ex);
            let b = mc_estimate(&e, &Observable::KlToUniform, 1.3, &par).unwrap();
            assert_eq!(a.mean.to_bits(), b.mean.to_bits());
            assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        }
    }
}
