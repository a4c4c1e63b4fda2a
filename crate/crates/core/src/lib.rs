//! Sequential importance sampling for contingency-table fibers
//! `{n in Z_+^k : A n = b}`.
//!
//! * [`model`]: tables, design matrices, the built-in log-linear / logistic models.
//! * [`bounds`]: exact-IP and LP bounds on the next cell of a partial table.
//! * [`enumerate`]: exact fiber counts and cell supports by search.
//! * [`sis`]: the interval sampler, the rejection-free sampler, the size estimator.
//! * [`semigroup`]: semigroup, saturation and hole membership.
//! * [`genexp`]: random table generators and the rejection-count experiment.
//!
//! With the default `parallel` feature, draws, tables and box points are spread
//! over a rayon pool. Every random draw reads its own `(seed, index)` substream,
//! so output does not depend on the worker count.

pub mod bounds;
pub mod enumerate;
pub mod error;
pub mod genexp;
pub mod lp;
pub mod model;
pub mod par;
pub mod rng;
pub mod search;
pub mod semigroup;
pub mod sis;

pub use bounds::{
    bounds_exact_ip, bounds_lp, cell_bounds, BoundMethod, CellBounds, PartialAssignment,
};
pub use enumerate::{cell_support, count_fiber, count_fiber_with_budget, FiberCount};
pub use error::{Error, Result};
pub use genexp::{
    generate_table, run_experiment, ExperimentConfig, ExperimentRow, GeneratorConfig, GeneratorKind,
};
pub use model::{
    build_design_matrix, in_fiber, margin_of, DesignMatrix, FiberSpec, ModelSpec, TableVector,
};
pub use semigroup::{holes_in_box, in_saturation, in_semigroup, SemigroupAnalysis};
pub use sis::{
    estimate_count, rejection_rate, sample_classical, sample_rejection_free, CountEstimate,
    SampleDraw, Sampler, SisConfig,
};
