//! Parallel trial execution.

use fcm_core::evaluation::{EvalError, TrialRunner};
use rayon::prelude::*;

/// Environment variable holding the number of worker threads.
pub const WORKERS_ENV: &str = "FCM_WORKERS";

/// Runs trials on a rayon pool. Results come back in trial order and the
/// lowest failing trial's error wins, so output matches [`Sequential`].
///
/// [`Sequential`]: fcm_core::evaluation::Sequential
pub struct RayonRunner {
    pool: rayon::ThreadPool,
}

impl RayonRunner {
    pub fn new(workers: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

/// Worker count from [`WORKERS_ENV`], or the machine's parallelism when
/// unset.
pub fn workers_from_env() -> Result<usize, String> {
    match std::env::var(WORKERS_ENV) {
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!("{WORKERS_ENV} must be a positive integer, got `{raw}`")),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

impl TrialRunner for RayonRunner {
    fn run<T, F>(&self, trials: usize, f: F) -> Result<Vec<T>, EvalError>
    where
        T: Send,
        F: Fn(usize) -> Result<T, EvalError> + Sync + Send,
    {
        let results: Vec<Result<T, EvalError>> = self.pool.install(|| (0..trials).into_par_iter().map(&f).collect());
        results.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fcm_core::evaluation::Sequential;

    #[test]
    fn ordered_results_and_lowest_error() {
        let runner = RayonRunner::new(4).unwrap();
        let ok = runner.run(50, |i| Ok(i * 2)).unwrap();
        assert_eq!(ok, (0..50).map(|i| i * 2).collect::<Vec<_>>());

        let failing = |i: usize| if i % 7 == 3 { Err(EvalError::InvalidPlan(if i == 3 { "first" } else { "later" })) } else { Ok(i) };
        assert_eq!(runner.run(50, failing), Err(EvalError::InvalidPlan("first")));
        assert_eq!(Sequential.run(50, failing), Err(EvalError::InvalidPlan("first")));
    }
}
