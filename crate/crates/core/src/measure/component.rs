use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Regularized lower incomplete gamma with the edge cases statrs rejects.
fn reg_gamma_lower(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else {
        gamma_lr(a, x)
    }
}

/// How a [`QuantileTable`] fills the gaps between grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableMode {
    /// `Q(p) = v_k` on `(g_k, g_{k+1}]`: a finite-discrete measure.
    Step,
    /// Linear interpolation between grid points, constant after the last one.
    Linear,
}

/// A quantile function given by its values on a probability grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    grid: Vec<f64>,
    values: Vec<f64>,
    mode: TableMode,
    // seg[k] = ∫_0^{g_k} Q for the linear mode.
    seg: Vec<f64>,
}

impl QuantileTable {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, mode: TableMode) -> Result<Self> {
        if grid.is_empty() || grid.len() != values.len() {
            return Err(Error::Validation(
                "quantile table needs equal, nonzero numbers of grid points and values".into(),
            ));
        }
        if grid[0] != 0.0 {
            return Err(Error::Validation("quantile table grid must start at 0".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || *grid.last().unwrap() >= 1.0 {
            return Err(Error::Validation("quantile table grid must be strictly increasing inside [0,1)".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Validation("quantile table values must be finite and nonnegative".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Validation("quantile table values must be nondecreasing".into()));
        }
        let mut seg = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        seg.push(0.0);
        for k in 0..grid.len() - 1 {
            acc += (grid[k + 1] - grid[k]) * 0.5 * (values[k] + values[k + 1]);
            seg.push(acc);
        }
        Ok(QuantileTable { grid, values, mode, seg })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mode(&self) -> TableMode {
        self.mode
    }

    /// Atoms `(location, mass)` of a step table.
    pub(crate) fn step_atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.grid.len();
        (0..n).map(move |k| {
            let next = if k + 1 < n { self.grid[k + 1] } else { 1.0 };
            (self.values[k], next - self.grid[k])
        })
    }

    fn n(&self) -> usize {
        self.grid.len()
    }

    // Largest k with v_k <= x, if any.
    fn last_at_or_below(&self, x: f64) -> Option<usize> {
        self.values.partition_point(|&v| v <= x).checked_sub(1)
    }

    fn linear_cdf(&self, x: f64) -> f64 {
        match self.last_at_or_below(x) {
            None => 0.0,
            Some(k) if k == self.n() - 1 => 1.0,
            Some(k) => {
                let (g0, g1) = (self.grid[k], self.grid[k + 1]);
                let (v0, v1) = (self.values[k], self.values[k + 1]);
                g0 + (g1 - g0) * (x - v0) / (v1 - v0)
            }
        }
    }

    fn linear_mass_at(&self, x: f64) -> f64 {
        let lo = self.values.partition_point(|&v| v < x);
        let hi = self.values.partition_point(|&v| v <= x);
        if hi == lo {
            return 0.0;
        }
        let end = if hi == self.n() { 1.0 } else { self.grid[hi - 1] };
        end - self.grid[lo]
    }

    fn linear_partial_mean(&self, x: f64) -> f64 {
        let n = self.n();
        match self.last_at_or_below(x) {
            None => 0.0,
            Some(k) if k == n - 1 => self.seg[n - 1] + (1.0 - self.grid[n - 1]) * self.values[n - 1],
            Some(k) => {
                let f = self.linear_cdf(x);
                self.seg[k] + (f - self.grid[k]) * 0.5 * (self.values[k] + x)
            }
        }
    }

    fn linear_mean(&self) -> f64 {
        let n = self.n();
        self.seg[n - 1] + (1.0 - self.grid[n - 1]) * self.values[n - 1]
    }
}

/// The cut-in-zero kernel smoothing of an equally weighted sample:
/// the law of `max(X + hY, 0)` with `X` drawn from the sample and `Y ~ K`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutKde {
    centers: Vec<f64>,
    prefix: Vec<f64>,
    kernel: KernelSpec,
    h: f64,
}

impl CutKde {
    pub fn new(mut centers: Vec<f64>, kernel: KernelSpec, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("bandwidth must be positive, got {h}")));
        }
        if centers.is_empty() {
            return Err(Error::Validation("kernel smoothing needs at least one sample point".into()));
        }
        if centers.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Validation("sample points must be finite and nonnegative".into()));
        }
        centers.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(centers.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for &c in &centers {
            acc += c;
            prefix.push(acc);
        }
        Ok(CutKde { centers, prefix, kernel, h })
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    fn reach(&self) -> f64 {
        self.kernel.radius() * self.h
    }

    fn count(&self) -> f64 {
        self.centers.len() as f64
    }

    /// `(1/n) Σ G((t - x_i)/h)` for `t >= 0`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let r = self.reach();
        let lo = self.centers.partition_point(|&x| x <= t - r);
        let hi = self.centers.partition_point(|&x| x < t + r);
        let window: f64 = self.centers[lo..hi].iter().map(|&x| self.kernel.cdf((t - x) / self.h)).sum();
        (lo as f64 + window) / self.count()
    }

    fn mass_at(&self, t: f64) -> f64 {
        if t == 0.0 {
            self.cdf(0.0)
        } else {
            0.0
        }
    }

    // ∫_{[0,t]} u d(law of max(x + hY, 0)) for a single center x.
    fn center_partial_mean(&self, x: f64, t: f64) -> f64 {
        let a = -x / self.h;
        let b = (t - x) / self.h;
        if b <= a {
            return 0.0;
        }
        let k = self.kernel;
        x * (k.cdf(b) - k.cdf(a)) + self.h * (k.partial_first_moment(b) - k.partial_first_moment(a))
    }

    fn center_mean(&self, x: f64) -> f64 {
        let a = -x / self.h;
        let k = self.kernel;
        x * (1.0 - k.cdf(a)) - self.h * k.partial_first_moment(a)
    }

    fn partial_mean(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let r = self.reach();
        // Centers at least r from both 0 and t contribute either x or nothing.
        let near_zero = self.centers.partition_point(|&x| x < r);
        let lo = self.centers.partition_point(|&x| x <= t - r);
        let hi = self.centers.partition_point(|&x| x < t + r);
        let mut acc = 0.0;
        if near_zero < lo {
            acc += self.prefix[lo] - self.prefix[near_zero];
        }
        let explicit_end = near_zero.min(hi);
        for &x in &self.centers[..explicit_end] {
            acc += self.center_partial_mean(x, t);
        }
        for &x in &self.centers[lo.max(near_zero)..hi] {
            acc += self.center_partial_mean(x, t);
        }
        acc / self.count()
    }

    fn mean(&self) -> f64 {
        let near_zero = self.centers.partition_point(|&x| x < self.reach());
        let n = self.centers.len();
        let far = self.prefix[n] - self.prefix[near_zero];
        let near: f64 = self.centers[..near_zero].iter().map(|&x| self.center_mean(x)).sum();
        (far + near) / self.count()
    }

    fn support_upper(&self) -> Option<f64> {
        self.kernel.is_compact().then(|| self.centers.last().copied().unwrap_or(0.0) + self.h)
    }

    fn rescaled(&self, alpha: f64) -> CutKde {
        let centers = self.centers.iter().map(|x| x * alpha).collect();
        CutKde::new(centers, self.kernel, self.h * alpha).expect("rescaling keeps a valid smoothing")
    }
}

/// A primitive probability measure on the nonnegative reals.
#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    Atom(f64),
    Uniform { a: f64, b: f64 },
    Lognormal { log_mean: f64, log_sd: f64 },
    Gamma { shape: f64, scale: f64 },
    Exponential { rate: f64 },
    QuantileTable(QuantileTable),
    CutKde(CutKde),
}

fn finite(x: f64) -> bool {
    x.is_finite()
}

impl Component {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Component::Atom(x) => finite(x) && x >= 0.0,
            Component::Uniform { a, b } => finite(a) && finite(b) && a >= 0.0 && b > a,
            Component::Lognormal { log_mean, log_sd } => finite(log_mean) && finite(log_sd) && log_sd > 0.0,
            Component::Gamma { shape, scale } => finite(shape) && finite(scale) && shape > 0.0 && scale > 0.0,
            Component::Exponential { rate } => finite(rate) && rate > 0.0,
            // Validated at construction.
            Component::QuantileTable(_) | Component::CutKde(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("invalid component parameters: {self:?}")))
        }
    }

    /// Whether the component is a finite set of atoms.
    pub fn is_discrete(&self) -> bool {
        match self {
            Component::Atom(_) => true,
            Component::QuantileTable(t) => t.mode == TableMode::Step,
            _ => false,
        }
    }

    pub(crate) fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            Component::Atom(a) => f64::from(u8::from(x >= *a)),
            Component::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Component::Lognormal { log_mean, log_sd } => {
                if x == 0.0 {
                    0.0
                } else {
                    std_normal_cdf((x.ln() - log_mean) / log_sd)
                }
            }
            Component::Gamma { shape, scale } => reg_gamma_lower(*shape, x / scale),
            Component::Exponential { rate } => -(-rate * x).exp_m1(),
            Component::QuantileTable(t) => match t.mode {
                TableMode::Linear => t.linear_cdf(x),
                TableMode::Step => t.step_atoms().filter(|(v, _)| *v <= x).map(|(_, w)| w).sum(),
            },
            Component::CutKde(k) => k.cdf(x),
        }
    }

    pub(crate) fn mass_at(&self, x: f64) -> f64 {
        match self {
            Component::Atom(a) => f64::from(u8::from(x == *a)),
            Component::QuantileTable(t) => match t.mode {
                TableMode::Linear => t.linear_mass_at(x),
                TableMode::Step => t.step_atoms().filter(|(v, _)| *v == x).map(|(_, w)| w).sum(),
            },
            Component::CutKde(k) => k.mass_at(x),
            _ => 0.0,
        }
    }

    /// `∫_{[0,x]} u dμ(u)`.
    pub(crate) fn partial_mean(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            Component::Atom(a) => {
                if x >= *a {
                    *a
                } else {
                    0.0
                }
            }
            Component::Uniform { a, b } => {
                let top = x.min(*b);
                if top <= *a {
                    0.0
                } else {
                    (top - a) * (top + a) / (2.0 * (b - a))
                }
            }
            Component::Lognormal { log_mean, log_sd } => {
                if x == 0.0 {
                    0.0
                } else {
                    let scale = (log_mean + 0.5 * log_sd * log_sd).exp();
                    scale * std_normal_cdf((x.ln() - log_mean - log_sd * log_sd) / log_sd)
                }
            }
            Component::Gamma { shape, scale } => shape * scale * reg_gamma_lower(shape + 1.0, x / scale),
            Component::Exponential { rate } => {
                let y = rate * x;
                if y.is_infinite() {
                    return 1.0 / rate;
                }
                (-(-y).exp_m1() - y * (-y).exp()) / rate
            }
            Component::QuantileTable(t) => match t.mode {
                TableMode::Linear => t.linear_partial_mean(x),
                TableMode::Step => t.step_atoms().filter(|(v, _)| *v <= x).map(|(v, w)| v * w).sum(),
            },
            Component::CutKde(k) => k.partial_mean(x),
        }
    }

    pub(crate) fn mean(&self) -> f64 {
        match self {
            Component::Atom(a) => *a,
            Component::Uniform { a, b } => 0.5 * (a + b),
            Component::Lognormal { log_mean, log_sd } => (log_mean + 0.5 * log_sd * log_sd).exp(),
            Component::Gamma { shape, scale } => shape * scale,
            Component::Exponential { rate } => 1.0 / rate,
            Component::QuantileTable(t) => match t.mode {
                TableMode::Linear => t.linear_mean(),
                TableMode::Step => t.step_atoms().map(|(v, w)| v * w).sum(),
            },
            Component::CutKde(k) => k.mean(),
        }
    }

    /// Abscissae where the CDF jumps or changes analytic form.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        match self {
            Component::Atom(a) => vec![*a],
            Component::Uniform { a, b } => vec![*a, *b],
            Component::QuantileTable(t) => t.values.clone(),
            Component::CutKde(_) => vec![0.0],
            _ => Vec::new(),
        }
    }

    pub(crate) fn support_upper(&self) -> Option<f64> {
        match self {
            Component::Atom(a) => Some(*a),
            Component::Uniform { b, .. } => Some(*b),
            Component::QuantileTable(t) => t.values.last().copied(),
            Component::CutKde(k) => k.support_upper(),
            _ => None,
        }
    }

    /// Pushforward under `x ↦ αx`.
    pub(crate) fn rescaled(&self, alpha: f64) -> Component {
        match self {
            Component::Atom(a) => Component::Atom(a * alpha),
            Component::Uniform { a, b } => Component::Uniform { a: a * alpha, b: b * alpha },
            Component::Lognormal { log_mean, log_sd } => {
                Component::Lognormal { log_mean: log_mean + alpha.ln(), log_sd: *log_sd }
            }
            Component::Gamma { shape, scale } => Component::Gamma { shape: *shape, scale: scale * alpha },
            Component::Exponential { rate } => Component::Exponential { rate: rate / alpha },
            Component::QuantileTable(t) => {
                let values = t.values.iter().map(|v| v * alpha).collect();
                Component::QuantileTable(
                    QuantileTable::new(t.grid.clone(), values, t.mode).expect("scaled table stays valid"),
                )
            }
            Component::CutKde(k) => Component::CutKde(k.rescaled(alpha)),
        }
    }

    /// Text form in the distribution grammar, when one exists.
    pub(crate) fn spec_text(&self) -> Option<String> {
        match self {
            Component::Atom(a) => Some(format!("atom({a})")),
            Component::Uniform { a, b } => Some(format!("uniform({a},{b})")),
            Component::Lognormal { log_mean, log_sd } => Some(format!("lognormal({log_mean},{log_sd})")),
            Component::Gamma { shape, scale } => Some(format!("gamma({shape},{scale})")),
            Component::Exponential { rate } => Some(format!("exp({rate})")),
            Component::QuantileTable(_) | Component::CutKde(_) => None,
        }
    }
}
