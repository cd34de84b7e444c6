//! A fixed set of reference measures used for cross-checks and smoke tests.
//!
//! Members cover pure atoms, pure densities and mixtures of the two. Every
//! member has a finite, positive mean.

use crate::error::Result;
use crate::estimators::{kde, SampleSet};
use crate::kernel::KernelSpec;
use crate::measure::{Component, Distribution, TableMode};

/// One reference measure.
#[derive(Debug, Clone)]
pub struct Member {
    pub name: &'static str,
    pub distribution: Distribution,
    /// Finite discrete with every cumulative mass a multiple of 1/4096.
    pub dyadic: bool,
}

fn mix(parts: Vec<(f64, Component)>) -> Result<Distribution> {
    Distribution::new(parts)
}

/// The 20 reference measures.
pub fn battery() -> Result<Vec<Member>> {
    use Component::*;
    let m = |name, distribution, dyadic| Member { name, distribution, dyadic };
    let kde_sample = SampleSet::from_values(vec![0.2, 0.5, 0.9, 1.4])?;
    Ok(vec![
        m("two_point", Distribution::from_atoms(&[(0.0, 0.25), (1.0, 0.75)])?, true),
        m("dirac", Distribution::atom(1.0)?, true),
        m("four_atoms", Distribution::from_atoms(&[(0.5, 0.125), (1.0, 0.375), (2.0, 0.25), (4.0, 0.25)])?, true),
        m("equal_hoover_mu", Distribution::from_atoms(&[(0.0, 0.5), (1.0, 0.25), (3.0, 0.25)])?, true),
        m("equal_hoover_nu", Distribution::from_atoms(&[(0.0, 0.5), (2.0, 0.5)])?, true),
        m(
            "eight_atoms",
            Distribution::from_atoms(&[
                (0.1, 0.125),
                (0.3, 0.125),
                (0.35, 0.25),
                (0.8, 0.125),
                (1.2, 0.125),
                (1.7, 0.125),
                (2.9, 0.0625),
                (6.0, 0.0625),
            ])?,
            true,
        ),
        m("uniform_unit", Distribution::uniform(0.0, 1.0)?, false),
        m("uniform_shifted", Distribution::uniform(0.5, 1.5)?, false),
        m("exponential", Distribution::exponential(2.0)?, false),
        m("lognormal", Distribution::lognormal(-0.125, 0.5)?, false),
        m("gamma", Distribution::gamma(3.0, 1.0 / 3.0)?, false),
        m("uniform_plus_atom", mix(vec![(0.5, Uniform { a: 0.0, b: 1.0 }), (0.5, Atom(0.5))])?, false),
        m("zero_plus_uniform", mix(vec![(0.3, Atom(0.0)), (0.7, Uniform { a: 0.0, b: 2.0 })])?, false),
        m(
            "atom_plus_lognormal",
            mix(vec![(0.25, Atom(1.0)), (0.75, Lognormal { log_mean: 0.0, log_sd: 0.3 })])?,
            false,
        ),
        m("zero_plus_gamma", mix(vec![(0.5, Atom(0.0)), (0.5, Gamma { shape: 2.0, scale: 0.5 })])?, false),
        m("two_uniforms", mix(vec![(0.5, Uniform { a: 0.0, b: 1.0 }), (0.5, Uniform { a: 2.0, b: 3.0 })])?, false),
        m(
            "linear_table",
            Distribution::quantile_table(vec![0.0, 0.25, 0.5, 0.75], vec![0.0, 0.5, 0.5, 2.0], TableMode::Linear)?,
            false,
        ),
        m(
            "atoms_plus_exponential",
            mix(vec![(0.2, Atom(0.0)), (0.3, Atom(2.0)), (0.5, Exponential { rate: 1.0 })])?,
            false,
        ),
        m("three_atoms", Distribution::from_atoms(&[(0.0, 0.3), (1.0, 0.4), (2.5, 0.3)])?, false),
        m("gaussian_kde", kde(&kde_sample, KernelSpec::Gaussian, 0.3)?, false),
    ])
}
