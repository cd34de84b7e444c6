//! Approximation schemes and the built-in counterexample sequences.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::estimators::{empirical, kde, quantile_approx, quantile_of_sample, SampleSet};
use crate::kernel::KernelSpec;
use crate::measure::Distribution;
use crate::spec_text::parse_distribution;
use crate::wasserstein::{sequence_diagnostics, ConvergenceReport, DiagnosticOptions, DiagnosticTolerances};

/// Step parameters. Which arrays are read depends on the scheme.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub l: Vec<usize>,
    #[serde(default)]
    pub h: Vec<f64>,
    #[serde(default)]
    pub eps: Vec<f64>,
}

/// A convergence experiment, usually read from JSON.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// One of `noise`, `sampling`, `quantile`, `quantile_of_sample`, `kde`.
    pub scheme: String,
    /// The source distribution in the text grammar.
    pub source: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub schedule: Schedule,
    /// Size of the base sample for the noise scheme.
    #[serde(default)]
    pub base_n: Option<usize>,
    #[serde(default)]
    pub probes: Option<Vec<f64>>,
    #[serde(default)]
    pub alpha_grid: Option<Vec<f64>>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("experiment spec: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scheme {
    Noise,
    Sampling,
    Quantile,
    QuantileOfSample,
    Kde,
}

impl Scheme {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "noise" => Scheme::Noise,
            "sampling" => Scheme::Sampling,
            "quantile" => Scheme::Quantile,
            "quantile_of_sample" => Scheme::QuantileOfSample,
            "kde" => Scheme::Kde,
            other => return Err(Error::Validation(format!("unknown scheme `{other}`"))),
        })
    }
}

/// A sequence, its declared limit, and per-step labels.
pub struct BuiltSequence {
    pub steps: Vec<Distribution>,
    pub limit: Distribution,
    pub parameters: Vec<BTreeMap<String, f64>>,
}

fn label(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn nonempty<T>(v: &[T], what: &str) -> Result<()> {
    if v.is_empty() {
        Err(Error::Validation(format!("schedule.{what} must not be empty")))
    } else {
        Ok(())
    }
}

fn zipped(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::Validation(format!("schedule arrays for {what} must have equal lengths, got {a} and {b}")));
    }
    Ok(())
}

/// Builds the approximating sequence of an experiment without running diagnostics.
///
/// All randomness comes from one ChaCha stream seeded by `spec.seed`: a single
/// sample is drawn and each step uses a prefix of it, so schedules of
/// different lengths share their draws.
pub fn build_sequence(spec: &ExperimentSpec) -> Result<BuiltSequence> {
    let scheme = Scheme::parse(&spec.scheme)?;
    let source = parse_distribution(&spec.source)?;
    source.mean()?;
    let sch = &spec.schedule;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let draw = |rng: &mut ChaCha8Rng, n: usize| -> Result<SampleSet> {
        SampleSet::new(
            source.sample_with(rng, n),
            crate::estimators::Provenance::Synthetic { seed: spec.seed, source: spec.source.clone() },
        )
    };
    let max_n = |ns: &[usize]| -> Result<usize> {
        match ns.iter().max() {
            Some(&0) | None => Err(Error::Validation("sample sizes must be positive".into())),
            Some(&m) if ns.contains(&0) => Err(Error::Validation(format!("sample sizes must be positive (max {m})"))),
            Some(&m) => Ok(m),
        }
    };

    let mut steps = Vec::new();
    let mut parameters = Vec::new();
    let limit = match scheme {
        Scheme::Sampling => {
            nonempty(&sch.n, "n")?;
            let base = draw(&mut rng, max_n(&sch.n)?)?;
            for &n in &sch.n {
                steps.push(empirical(&base.prefix(n)?)?);
                parameters.push(label(&[("n", n as f64)]));
            }
            source
        }
        Scheme::Quantile => {
            nonempty(&sch.l, "l")?;
            for &l in &sch.l {
                steps.push(quantile_approx(&source, l)?);
                parameters.push(label(&[("l", l as f64)]));
            }
            source
        }
        Scheme::QuantileOfSample => {
            nonempty(&sch.n, "n")?;
            zipped(sch.n.len(), sch.l.len(), "n and l")?;
            let base = draw(&mut rng, max_n(&sch.n)?)?;
            for (&n, &l) in sch.n.iter().zip(&sch.l) {
                steps.push(quantile_of_sample(&base.prefix(n)?, l)?);
                parameters.push(label(&[("n", n as f64), ("l", l as f64)]));
            }
            source
        }
        Scheme::Kde => {
            nonempty(&sch.n, "n")?;
            zipped(sch.n.len(), sch.h.len(), "n and h")?;
            let kernel = spec.kernel.unwrap_or(KernelSpec::Gaussian);
            let base = draw(&mut rng, max_n(&sch.n)?)?;
            for (&n, &h) in sch.n.iter().zip(&sch.h) {
                steps.push(kde(&base.prefix(n)?, kernel, h)?);
                parameters.push(label(&[("n", n as f64), ("h", h)]));
            }
            source
        }
        Scheme::Noise => {
            let n = spec.base_n.or_else(|| sch.n.first().copied()).unwrap_or(2000);
            if n == 0 {
                return Err(Error::Validation("base sample size must be positive".into()));
            }
            let eps: Vec<f64> =
                if sch.eps.is_empty() { (1..=10).map(|k| 0.5f64.powi(k)).collect() } else { sch.eps.clone() };
            if eps.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
                return Err(Error::Validation("noise scales must be finite and nonnegative".into()));
            }
            let base = draw(&mut rng, n)?;
            let noise: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            for &e in &eps {
                let values = base.values().iter().zip(&noise).map(|(x, y)| (x + e * y).max(0.0)).collect();
                steps.push(empirical(&SampleSet::new(values, base.provenance().clone())?)?);
                parameters.push(label(&[("eps", e)]));
            }
            empirical(&base)?
        }
    };
    Ok(BuiltSequence { steps, limit, parameters })
}

/// Builds the sequence of an experiment and runs the convergence diagnostics.
pub fn run_experiment(spec: &ExperimentSpec, tolerances: DiagnosticTolerances) -> Result<ConvergenceReport> {
    let built = build_sequence(spec)?;
    let options = DiagnosticOptions {
        probes: spec.probes.clone().unwrap_or_default(),
        alpha_grid: spec.alpha_grid.clone().unwrap_or_default(),
        tolerances,
        parameters: built.parameters,
    };
    sequence_diagnostics(&built.steps, &built.limit, &options)
}

/// `P(X = 1) = 1 - 1/n²`, `P(X = n²) = 1/n²`: converges weakly to `δ₁`
/// while the mean stays near 2.
pub fn counterexample1(n: u32) -> Result<Distribution> {
    if n == 0 {
        return Err(Error::Domain("sequence index starts at 1".into()));
    }
    if n == 1 {
        return Distribution::atom(1.0);
    }
    let n2 = f64::from(n) * f64::from(n);
    Distribution::from_atoms(&[(1.0, 1.0 - 1.0 / n2), (n2, 1.0 / n2)])
}

/// `½δ₀ + (½ - 1/n²)δ₁ + (1/n²)δ_{n²}`: converges weakly to `½δ₀ + ½δ₁`
/// while the mean tends to 3/2.
pub fn counterexample2(n: u32) -> Result<Distribution> {
    if n == 0 {
        return Err(Error::Domain("sequence index starts at 1".into()));
    }
    if n == 1 {
        return Distribution::from_atoms(&[(0.0, 0.5), (1.0, 0.5)]);
    }
    let n2 = f64::from(n) * f64::from(n);
    Distribution::from_atoms(&[(0.0, 0.5), (1.0, 0.5 - 1.0 / n2), (n2, 1.0 / n2)])
}

/// A named built-in sequence with `steps` terms, `n = 1..=steps`.
pub fn scenario(name: &str, steps: u32) -> Result<BuiltSequence> {
    if steps == 0 {
        return Err(Error::Validation("a scenario needs at least one step".into()));
    }
    let (make, limit): (fn(u32) -> Result<Distribution>, Distribution) = match name {
        "counterexample1" => (counterexample1, Distribution::atom(1.0)?),
        "counterexample2" => (counterexample2, Distribution::from_atoms(&[(0.0, 0.5), (1.0, 0.5)])?),
        other => return Err(Error::Validation(format!("unknown scenario `{other}`"))),
    };
    let steps_vec = (1..=steps).map(make).collect::<Result<Vec<_>>>()?;
    let parameters = (1..=steps).map(|n| label(&[("n", f64::from(n))])).collect();
    Ok(BuiltSequence { steps: steps_vec, limit, parameters })
}

/// Runs the diagnostics on a built-in scenario.
pub fn run_scenario(name: &str, steps: u32, tolerances: DiagnosticTolerances) -> Result<ConvergenceReport> {
    let built = scenario(name, steps)?;
    let options = DiagnosticOptions { tolerances, parameters: built.parameters, ..DiagnosticOptions::default() };
    sequence_diagnostics(&built.steps, &built.limit, &options)
}
