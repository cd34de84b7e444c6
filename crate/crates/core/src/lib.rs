//! Lorenz curves, Gini and Hoover indices, and Wasserstein-1 diagnostics for
//! probability measures on the nonnegative reals.

// Negated comparisons such as `!(x >= 0.0)` are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod indices;
pub mod kernel;
pub mod lorenz;
pub mod measure;
pub mod numfmt;
pub mod quadrature;
pub mod spec_text;
pub mod tolerances;
pub mod wasserstein;

pub use error::{Error, Result};
pub use kernel::KernelSpec;
pub use measure::{fsd_dominates, Component, Distribution, QuantileTable, TableMode};
pub use spec_text::parse_distribution;
