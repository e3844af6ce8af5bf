//! Benchmark strategy: a deterministic arbitrage LP solved with an in-crate simplex.

mod arb;
mod simplex;

pub use arb::{
    arbitrage_lp, arbitrage_problem, predicted_gain, predicted_gain_coefficients, unit_carry, LpOutcome,
};
pub use simplex::{kkt, simplex_solve, Kkt, LpProblem, LpSolution, LpStatus, FEAS_TOL};
