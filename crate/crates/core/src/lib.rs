//! Constrained convex optimization with virtual-queue primal-dual methods.
//!
//! Solves `min f(x)` subject to `g_k(x) <= 0` over a box with a projected
//! gradient step on a queue-weighted Lagrangian, reaching `O(1/t)` objective
//! error and constraint violation at the running average. Two baselines, a
//! trace checker for the method's provable invariants, reference solvers and
//! seeded instance generators are included.
//!
//! ```
//! use queuegrad::{instances, oracle, solvers};
//!
//! let spec = instances::example_lp_instance();
//! let (program, constants) = instances::build_lp(&spec).unwrap();
//! let config = solvers::RunConfig::new(20_000, vec![10.0; 4]);
//! let summary = solvers::run_summary(solvers::AlgorithmId::New, &program, &constants, &config).unwrap();
//! let exact = oracle::lp_vertex_solve(&spec).unwrap();
//! assert!((summary.last.f_avg - exact.f_star).abs() < 0.05);
//! ```

// `!(a <= b)` style tests are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod instances;
pub mod linalg;
pub mod oracle;
pub mod problem;
pub mod solvers;
pub mod sweep;

pub use error::{Error, Result};
pub use problem::{BoxSet, ConstantsPack, ConvexProgram, SmoothFunction};
pub use solvers::{AlgorithmId, RunConfig, SolverTrace, Step};
