//! Social-distancing safety filter.
//!
//! Every pair of agents carries the barrier `h = |x_i - x_j|^2 - d_social^2`.
//! Under single-integrator dynamics the filtered velocities are the
//! minimum-deviation solution of
//!
//! ```text
//! minimize   sum_i |u_i - u_nominal_i|^2
//! subject to 2 (x_i - x_j) . (u_i - u_j) >= -gamma * h(x_i, x_j)   for all i < j
//! ```

mod barrier;
mod qp;

pub use barrier::{barrier_value, constraint_row, BarrierSpec};
pub use qp::{
    assemble_qp, safe_velocities, solve_or_fallback, solve_qp, ConstraintRow, QpOptions, QpProblem, QpSolution,
    QpStatus, DEFAULT_MAX_SWEEPS, DEFAULT_TOLERANCE,
};
