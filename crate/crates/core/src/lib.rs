//! Approximate metric facility location, k-center, k-median and k-means,
//! built on a small set of deterministic data-parallel matrix primitives.

pub mod centers;
pub mod dominator;
pub mod error;
pub mod greedy;
pub mod instance;
pub mod io;
pub mod lp_rounding;
pub mod oracle;
pub mod primal_dual;
pub mod primitives;
pub mod runner;
pub mod tol;

pub use error::{Error, Result};
pub use instance::{FLInstance, Solution};
pub use primitives::Ctx;
