//! Black-Scholes implied volatility with guaranteed convergence.
//!
//! Quotes are reduced to a [`StandardizedOption`] `(c, k)`. The [`bounds`]
//! module brackets the implied volatility in closed form and the [`solver`]
//! runs Newton-Raphson on the log price from a lower bound, which converges
//! monotonically from below.

pub mod bounds;
pub mod bs;
pub mod error;
pub mod harness;
pub mod solver;
pub mod specfun;

pub use bounds::{all_bounds, BoundSet};
pub use bs::{OptionKind, RawQuote, StandardizedOption, Vol};
pub use error::{BandSide, Error, Result};
pub use solver::{solve, solve_log_nr, InitialGuess, SolverConfig, SolverResult};
