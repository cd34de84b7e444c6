//! Measures and index estimates built from samples.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::measure::{Component, CutKde, Distribution};

/// Where a sample came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    File { path: String },
    Synthetic { seed: u64, source: String },
    Inline,
}

/// A nonempty list of nonnegative observations.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    values: Vec<f64>,
    provenance: Provenance,
}

impl SampleSet {
    pub fn new(values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation("sample is empty".into()));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Validation(format!("sample values must be finite and nonnegative, got {bad}")));
        }
        Ok(SampleSet { values, provenance })
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Provenance::Inline)
    }

    /// `n` draws from `d`.
    pub fn synthetic(d: &Distribution, seed: u64, n: usize) -> Result<Self> {
        Self::new(d.sample(seed, n), Provenance::Synthetic { seed, source: d.to_string() })
    }

    /// Parses one value per line. Blank lines and `#` comments are skipped and
    /// only the first comma-separated field of a line is read.
    pub fn parse(text: &str, provenance: Provenance) -> Result<Self> {
        let mut values = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let field = line.split(',').next().unwrap_or("").trim();
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Input { line: i + 1, message: format!("`{field}` is not a number") })?;
            if v.is_nan() || v.is_infinite() {
                return Err(Error::Input { line: i + 1, message: format!("`{field}` is not a finite number") });
            }
            if v < 0.0 {
                return Err(Error::Input { line: i + 1, message: format!("negative value {field}") });
            }
            values.push(v);
        }
        if values.is_empty() {
            return Err(Error::Validation("sample file contains no values".into()));
        }
        Self::new(values, provenance)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, Provenance::File { path: path.display().to_string() })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The first `n` observations.
    pub fn prefix(&self, n: usize) -> Result<SampleSet> {
        if n == 0 || n > self.values.len() {
            return Err(Error::Domain(format!("prefix length {n} outside 1..={}", self.values.len())));
        }
        Ok(SampleSet { values: self.values[..n].to_vec(), provenance: self.provenance.clone() })
    }

    fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    fn total(&self) -> Result<f64> {
        let s: f64 = self.values.iter().sum();
        if s > 0.0 {
            Ok(s)
        } else {
            Err(Error::OutsideM("every sample value is zero".into()))
        }
    }
}

/// `(1/n) Σ δ_{x_i}` with repeated values merged.
pub fn empirical(s: &SampleSet) -> Result<Distribution> {
    Distribution::from_counts(s.values.iter().map(|&x| (x, 1)).collect())
}

/// `(1/ℓ) Σ_{k=0}^{ℓ-1} δ_{Q(k/ℓ)}`, first-order dominated by `d` with CDF gap at most `1/ℓ`.
pub fn quantile_approx(d: &Distribution, l: usize) -> Result<Distribution> {
    if l == 0 {
        return Err(Error::Domain("the number of quantile atoms must be positive".into()));
    }
    Distribution::from_counts((0..l).map(|k| (d.q(k as f64 / l as f64), 1)).collect())
}

/// The `ℓ`-quantile approximation of the empirical measure of `s`.
pub fn quantile_of_sample(s: &SampleSet, l: usize) -> Result<Distribution> {
    quantile_approx(&empirical(s)?, l)
}

/// The law of `max(X + hY, 0)` with `X` uniform over the sample and `Y ~ K`.
pub fn kde(s: &SampleSet, kernel: KernelSpec, h: f64) -> Result<Distribution> {
    let smooth = CutKde::new(s.values.clone(), kernel, h)?;
    Distribution::new(vec![(1.0, Component::CutKde(smooth))])
}

/// `Σ_i Σ_j |X_i - X_j| / (2n Σ X_i)`, evaluated through the sorted-sample identity.
pub fn estimate_gini(s: &SampleSet) -> Result<f64> {
    let total = s.total()?;
    let sorted = s.sorted();
    let n = sorted.len() as f64;
    let weighted: f64 = sorted.iter().enumerate().map(|(i, &x)| (2.0 * (i as f64 + 1.0) - n - 1.0) * x).sum();
    Ok(weighted / (n * total))
}

/// `Σ |X_i - X̄| / (2 Σ X_i)`.
pub fn estimate_hoover(s: &SampleSet) -> Result<f64> {
    let total = s.total()?;
    let mean = total / s.len() as f64;
    let dev: f64 = s.values.iter().map(|x| (x - mean).abs()).sum();
    Ok(dev / (2.0 * total))
}

/// The sample Lorenz curve at `x`, interpolating between order statistics:
/// with `nx = k + f`, `[f S_{k+1} + (1-f) S_k] / S_n` where `S_k` sums the `k` smallest.
pub fn estimate_lorenz_at(s: &SampleSet, x: f64) -> Result<f64> {
    let total = s.total()?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("Lorenz abscissa must lie in [0,1], got {x}")));
    }
    let sorted = s.sorted();
    let n = sorted.len();
    let nx = n as f64 * x;
    let k = (nx.floor() as usize).min(n);
    let f = nx - k as f64;
    let s_k: f64 = sorted[..k].iter().sum();
    let value = if f > 0.0 && k < n { s_k + f * sorted[k] } else { s_k };
    Ok((value / total).min(1.0))
}
