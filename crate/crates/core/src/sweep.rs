//! Batch execution of independent runs.
//!
//! With the `parallel` feature (on by default) batches fan out over the rayon
//! pool; without it everything runs on the calling thread. Results always
//! come back in input order, so both paths give identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Result;
use crate::instances::ProblemSpec;
use crate::problem::{ConstantsPack, ConvexProgram};
use crate::solvers::{self, AlgorithmId, RunConfig, RunSummary, Step};

/// Applies `f` to every item on the calling thread.
pub fn map_seq<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Applies `f` to every item on the rayon pool.
#[cfg(feature = "parallel")]
pub fn map_par<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// Parallel when the `parallel` feature is enabled, sequential otherwise.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_par(items, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_seq(items, f)
    }
}

/// One independent solve.
#[derive(Debug, Clone)]
pub struct BatchJob {
    pub algorithm: AlgorithmId,
    pub spec: ProblemSpec,
    pub config: RunConfig,
}

impl BatchJob {
    /// Builds the program, attaches a multiplier bound when one is needed and
    /// can be derived from a Slater point, and runs without keeping history.
    pub fn run(&self) -> Result<RunSummary> {
        let (program, constants) = self.spec.build()?;
        let constants = with_slater_bound(&self.spec, &program, constants);
        solvers::run_summary(self.algorithm, &program, &constants, &self.config)
    }
}

/// Adds the Slater multiplier bound if the constants do not carry one yet.
pub fn with_slater_bound(spec: &ProblemSpec, program: &ConvexProgram, constants: ConstantsPack) -> ConstantsPack {
    if constants.lambda_bound.is_some() {
        return constants;
    }
    match spec.slater_multiplier_bound(program) {
        Some(b) => constants.with_lambda_bound(b),
        None => constants,
    }
}

pub fn run_batch_seq(jobs: &[BatchJob]) -> Vec<Result<RunSummary>> {
    map_seq(jobs, BatchJob::run)
}

#[cfg(feature = "parallel")]
pub fn run_batch_par(jobs: &[BatchJob]) -> Vec<Result<RunSummary>> {
    map_par(jobs, BatchJob::run)
}

pub fn run_batch(jobs: &[BatchJob]) -> Vec<Result<RunSummary>> {
    map(jobs, BatchJob::run)
}

/// Runs the queue-gradient method once per multiple of the automatic step.
pub fn gamma_sweep(
    program: &ConvexProgram,
    constants: &ConstantsPack,
    config: &RunConfig,
    multiples: &[f64],
) -> Result<Vec<(f64, Result<RunSummary>)>> {
    let base = solvers::select_gamma(constants)?;
    Ok(map(multiples, |&k| {
        let gamma = k * base;
        let cfg = config.clone().with_step(Step::Explicit(gamma));
        (gamma, solvers::run_summary(AlgorithmId::New, program, constants, &cfg))
    }))
}
