//! Numeric tolerances shared across the crate.

/// Mixture weights must sum to one within this slack.
pub const WEIGHT_SUM: f64 = 1e-12;

/// Cross-route agreement for exact (finite-discrete) computations.
pub const CROSS_ROUTE_EXACT: f64 = 1e-8;

/// Cross-route agreement when at least one route uses quadrature.
pub const CROSS_ROUTE_QUADRATURE: f64 = 1e-4;

/// Absolute target of the adaptive integrator.
pub const QUADRATURE_ABS: f64 = 1e-10;

/// Tails beyond the point where the survival mass drops below this are dropped.
pub const SURVIVAL_CUTOFF: f64 = 1e-12;

/// Slack used when comparing Lorenz curves pointwise.
pub const LORENZ_COMPARE: f64 = 1e-10;
