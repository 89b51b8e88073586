//! Generalized-Poisson positive linear operators.
//!
//! The operator family evaluated here is
//!
//! ```text
//! P_n(f, x) = sum_{k>=0} (1 - b) (n x + b k)^k e^{-(n x + b k)} / k!  f(k / n),   0 <= b < 1,
//! ```
//!
//! which reduces to the Szász–Mirakyan operator at `b = 0`. Next to it sits the
//! Jain operator (weights `n x (n x + b k)^{k-1} e^{-(n x + b k)} / k!`) as a
//! comparison baseline.
//!
//! Modules:
//! * [`weights`]: log-space weights and certified truncation of the series.
//! * [`operators`]: `P_n`, Jain and Szász–Mirakyan applied to [`ScalarFunction`]s.
//! * [`moments`]: closed-form moments up to order four with series oracles.
//! * [`analysis`]: moduli of continuity, weighted norm and error bounds.
//! * [`experiments`]: convergence/asymptotic runners producing [`ExperimentReport`]s.
//! * [`report`]: CSV and JSON serialization of reports.
//! * [`cli`]: argument parsing for the `approxop` binary.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod functions;
pub mod moments;
pub mod operators;
pub mod report;
pub mod special;
pub mod weights;

pub use analysis::{BoundInputs, Domain};
pub use error::{Error, Result};
pub use experiments::{BetaSchedule, ExperimentReport};
pub use functions::{GrowthClass, ScalarFunction};
pub use moments::{MomentOrder, MomentReport};
pub use operators::OperatorParams;
pub use weights::{BetaParam, TruncationPolicy, WeightKind};
