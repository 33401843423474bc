//! Thread-pool executor.

use std::time::Instant;

use rayon::prelude::*;
use symfd_core::assembly::Executor;
use symfd_core::error::{Error, Result};

/// Runs per-node work and matrix rows on a rayon pool. Results come back in
/// index order, so assembled systems and solver iterates are bitwise equal to
/// the sequential ones.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
    start: Instant,
    timing: bool,
}

impl RayonExecutor {
    /// `threads == 0` lets rayon pick the worker count.
    pub fn new(threads: usize, timing: bool) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start thread pool: {e}")))?;
        Ok(Self {
            pool,
            start: Instant::now(),
            timing,
        })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn map<T: Send>(&self, n: usize, f: &(dyn Fn(usize) -> T + Sync)) -> Vec<T> {
        self.pool
            .install(|| (0..n).into_par_iter().map(f).collect())
    }

    fn fill(&self, out: &mut [f64], f: &(dyn Fn(usize) -> f64 + Sync)) {
        self.pool.install(|| {
            out.par_iter_mut()
                .with_min_len(256)
                .enumerate()
                .for_each(|(i, o)| *o = f(i))
        })
    }

    fn now(&self) -> f64 {
        if self.timing {
            self.start.elapsed().as_secs_f64()
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use symfd_core::assembly::{assemble, assemble_with, Grid};
    use symfd_core::fields::builtin_problem;
    use symfd_core::scheme::Scheme;

    #[test]
    fn parallel_assembly_is_bitwise_sequential() {
        let p = builtin_problem("example2").unwrap();
        let g = Grid::for_problem(&p, 16).unwrap();
        let seq = assemble(&p, Scheme::TwoDO4, &g).unwrap();
        let par = assemble_with(
            &p,
            Scheme::TwoDO4,
            &g,
            &RayonExecutor::new(4, false).unwrap(),
        )
        .unwrap();
        assert_eq!(seq.matrix, par.matrix);
        assert_eq!(
            seq.rhs.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            par.rhs.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}
