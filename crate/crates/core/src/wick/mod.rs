//! The Wick-ordered cubic nonlinearity and its time integration.

pub mod gauge;
pub mod nonlinearity;
pub mod picard;
pub mod solver;

pub use gauge::{gauge_equivalence_gap, gauge_transform, wick_residual, GaugeSign};
pub use nonlinearity::{
    cubic_nonlinearity, cubic_nonlinearity_with, wick_nonlinearity_direct, wick_nonlinearity_with, wick_trilinear,
    WickSplit,
};
pub use picard::{convolution_from_path, picard_iterate, PicardReport, PicardStatus};
pub use solver::{
    observed_orders, single_mode_exact, solve, step_exponential_euler, step_strang_midpoint, Integrator, Nonlinearity,
    Solution, SolveStatus, SolverConfig,
};
