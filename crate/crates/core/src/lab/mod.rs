//! Numerical checks of the quantitative lemmas at truncated scale.

pub mod arith;
pub mod criticality;
pub mod multiplier;
pub mod stats;
pub mod tail;
pub mod trilinear;
pub mod variance;

pub use arith::{
    convolution_sum_check, convolution_sum_regression, divisor_bound_scan, divisor_count, lemma_alpha,
    resonance_sides, ModulationPoint,
};
pub use criticality::{classify, criticality_report, Classification, CriticalityReport, Family};
pub use multiplier::{geometric_sigma_grid, multiplier_at, multiplier_supremum, MultiplierReport};
pub use tail::{tail_estimate_mc, tail_scaling, TailReport, TailScaling};
pub use trilinear::{trilinear_ratio, TrilinearStats};
pub use variance::{variance_invariance_test, VarianceConfig, VarianceReport};
