//! Probability measures on the nonnegative reals.

mod component;

use std::fmt;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use component::{Component, CutKde, QuantileTable, TableMode};

use crate::error::{Error, Result};
use crate::tolerances;

/// Merged atoms of all discrete components.
#[derive(Debug, Clone, Default)]
struct AtomSet {
    locs: Vec<f64>,
    masses: Vec<f64>,
    // Running sums of masses and of location * mass.
    cum: Vec<f64>,
    cum_moment: Vec<f64>,
}

impl AtomSet {
    fn build(mut raw: Vec<(f64, f64)>) -> AtomSet {
        raw.retain(|&(_, w)| w > 0.0);
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut set = AtomSet::default();
        for (x, w) in raw {
            if set.locs.last() == Some(&x) {
                *set.masses.last_mut().unwrap() += w;
            } else {
                set.locs.push(x);
                set.masses.push(w);
            }
        }
        let (mut c, mut m) = (0.0, 0.0);
        for (&x, &w) in set.locs.iter().zip(&set.masses) {
            c += w;
            m += x * w;
            set.cum.push(c);
            set.cum_moment.push(m);
        }
        set
    }

    fn total(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0)
    }

    // Number of atoms at or below x.
    fn count_le(&self, x: f64) -> usize {
        self.locs.partition_point(|&a| a <= x)
    }

    fn cum_le(&self, x: f64) -> f64 {
        match self.count_le(x) {
            0 => 0.0,
            k => self.cum[k - 1],
        }
    }

    fn moment_le(&self, x: f64) -> f64 {
        match self.count_le(x) {
            0 => 0.0,
            k => self.cum_moment[k - 1],
        }
    }

    fn mass_at(&self, x: f64) -> f64 {
        match self.locs.binary_search_by(|a| a.total_cmp(&x)) {
            Ok(i) => self.masses[i],
            Err(_) => 0.0,
        }
    }
}

/// A probability measure on `[0, ∞)` built as a finite mixture of [`Component`]s.
///
/// Distributions are immutable; the mean is computed lazily once.
#[derive(Debug, Clone)]
pub struct Distribution {
    parts: Vec<(f64, Component)>,
    atoms: AtomSet,
    smooth: Vec<(f64, Component)>,
    total: f64,
    // For finite-discrete measures: cum / total with the last entry exactly 1.
    normalized_cum: Vec<f64>,
    mean: OnceLock<f64>,
}

impl PartialEq for Distribution {
    fn eq(&self, other: &Self) -> bool {
        self.parts == other.parts
    }
}

impl Distribution {
    /// Builds a mixture; weights must be positive and sum to one within 1e-12.
    pub fn new(parts: Vec<(f64, Component)>) -> Result<Self> {
        Self::with_weight_tolerance(parts, tolerances::WEIGHT_SUM)
    }

    pub(crate) fn with_weight_tolerance(parts: Vec<(f64, Component)>, tol: f64) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Validation("a distribution needs at least one component".into()));
        }
        let mut sum = 0.0;
        for (w, c) in &parts {
            if !(*w > 0.0 && *w <= 1.0 + tol) {
                return Err(Error::Validation(format!("component weight {w} is outside (0,1]")));
            }
            c.validate()?;
            sum += w;
        }
        if (sum - 1.0).abs() > tol {
            return Err(Error::Validation(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self::assemble(parts))
    }

    fn assemble(parts: Vec<(f64, Component)>) -> Self {
        let mut raw = Vec::new();
        let mut smooth = Vec::new();
        for (w, c) in &parts {
            match c {
                Component::Atom(x) => raw.push((*x, *w)),
                Component::QuantileTable(t) if t.mode() == TableMode::Step => {
                    raw.extend(t.step_atoms().map(|(x, m)| (x, m * w)));
                }
                _ => smooth.push((*w, c.clone())),
            }
        }
        let atoms = AtomSet::build(raw);
        let total = smooth.iter().fold(atoms.total(), |acc, (w, _)| acc + w);
        let normalized_cum = if smooth.is_empty() {
            let mut v: Vec<f64> = atoms.cum.iter().map(|c| c / total).collect();
            if let Some(last) = v.last_mut() {
                *last = 1.0;
            }
            v
        } else {
            Vec::new()
        };
        Distribution { parts, atoms, smooth, total, normalized_cum, mean: OnceLock::new() }
    }

    /// Atoms with integer multiplicities. Cumulative masses are formed as
    /// `count / total` in one rounding, so two such measures compare exactly
    /// whenever their rational CDFs do.
    pub(crate) fn from_counts(mut counts: Vec<(f64, u64)>) -> Result<Self> {
        counts.retain(|c| c.1 > 0);
        counts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, u64)> = Vec::with_capacity(counts.len());
        for (x, c) in counts {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += c,
                _ => merged.push((x, c)),
            }
        }
        let n: u64 = merged.iter().map(|c| c.1).sum();
        let parts = merged.iter().map(|&(x, c)| (c as f64 / n as f64, Component::Atom(x))).collect();
        let mut d = Self::with_weight_tolerance(parts, 1e-9)?;
        let mut running = 0u64;
        for (i, &(_, c)) in merged.iter().enumerate() {
            running += c;
            d.atoms.cum[i] = running as f64 / n as f64;
        }
        d.normalized_cum = d.atoms.cum.clone();
        Ok(d)
    }

    pub fn atom(x: f64) -> Result<Self> {
        Self::new(vec![(1.0, Component::Atom(x))])
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![(1.0, Component::Uniform { a, b })])
    }

    pub fn lognormal(log_mean: f64, log_sd: f64) -> Result<Self> {
        Self::new(vec![(1.0, Component::Lognormal { log_mean, log_sd })])
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        Self::new(vec![(1.0, Component::Gamma { shape, scale })])
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(vec![(1.0, Component::Exponential { rate })])
    }

    /// A finite-discrete measure from `(location, mass)` pairs.
    pub fn from_atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        Self::new(atoms.iter().map(|&(x, w)| (w, Component::Atom(x))).collect())
    }

    pub fn quantile_table(grid: Vec<f64>, values: Vec<f64>, mode: TableMode) -> Result<Self> {
        Ok(Self::assemble(vec![(1.0, Component::QuantileTable(QuantileTable::new(grid, values, mode)?))]))
    }

    /// Mixture of distributions; the component lists are flattened.
    pub fn mixture(parts: &[(f64, Distribution)]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Validation("empty mixture".into()));
        }
        let sum: f64 = parts.iter().map(|(w, _)| w).sum();
        if parts.iter().any(|(w, _)| !(*w > 0.0)) || (sum - 1.0).abs() > tolerances::WEIGHT_SUM {
            return Err(Error::Validation(format!("mixture weights must be positive and sum to 1, got {sum}")));
        }
        let flat = parts.iter().flat_map(|(w, d)| d.parts.iter().map(move |(v, c)| (w * v, c.clone()))).collect();
        // Products of valid weights can drift a few ulps from 1.
        Self::with_weight_tolerance(flat, 1e-9)
    }

    pub fn components(&self) -> &[(f64, Component)] {
        &self.parts
    }

    /// True when the measure is a finite set of atoms.
    pub fn is_finite_discrete(&self) -> bool {
        self.smooth.is_empty()
    }

    /// Sorted atom locations and their masses (only the discrete components).
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        self.atoms.locs.iter().zip(&self.atoms.masses).map(|(&x, &w)| (x, w / self.total)).collect()
    }

    /// Vertices `(p_k, L(p_k))` of the Lorenz polygon of a finite-discrete
    /// measure with positive mean, starting at `(0, 0)` and ending at `(1, 1)`.
    pub(crate) fn lorenz_vertices(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let total_moment = self.atoms.total_moment();
        if !self.smooth.is_empty() || !(total_moment > 0.0) {
            return None;
        }
        let mut p = Vec::with_capacity(self.normalized_cum.len() + 1);
        let mut l = Vec::with_capacity(self.normalized_cum.len() + 1);
        p.push(0.0);
        l.push(0.0);
        p.extend_from_slice(&self.normalized_cum);
        l.extend(self.atoms.cum_moment.iter().map(|c| c / total_moment));
        *l.last_mut().unwrap() = 1.0;
        Some((p, l))
    }

    /// `F(x) = μ([0, x])`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("cdf needs x >= 0, got {x}")));
        }
        Ok(self.f(x))
    }

    pub(crate) fn f(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if self.smooth.is_empty() {
            return match self.atoms.count_le(x) {
                0 => 0.0,
                k => self.normalized_cum[k - 1],
            };
        }
        let s = self.smooth.iter().fold(self.atoms.cum_le(x), |acc, (w, c)| acc + w * c.cdf(x));
        (s / self.total).min(1.0)
    }

    /// `F(x⁻) = μ([0, x))`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if self.smooth.is_empty() {
            let k = self.atoms.locs.partition_point(|&a| a < x);
            return if k == 0 { 0.0 } else { self.normalized_cum[k - 1] };
        }
        (self.f(x) - self.mass_at(x)).max(0.0)
    }

    /// `μ({x})`.
    pub fn mass_at(&self, x: f64) -> f64 {
        let s = self.smooth.iter().fold(self.atoms.mass_at(x), |acc, (w, c)| acc + w * c.mass_at(x));
        s / self.total
    }

    /// `∫_{[0,x]} u dμ(u)`.
    pub fn partial_mean(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let s = self.smooth.iter().fold(self.atoms.moment_le(x), |acc, (w, c)| acc + w * c.partial_mean(x));
        s / self.total
    }

    /// `∫_{[0,x)} u dμ(u)`.
    pub fn partial_mean_open(&self, x: f64) -> f64 {
        (self.partial_mean(x) - x * self.mass_at(x)).max(0.0)
    }

    /// The mean, possibly zero (for δ₀).
    pub fn raw_mean(&self) -> f64 {
        *self.mean.get_or_init(|| {
            let s = self.smooth.iter().fold(self.atoms.total_moment(), |acc, (w, c)| acc + w * c.mean());
            s / self.total
        })
    }

    /// The mean of a measure in the admissible class.
    pub fn mean(&self) -> Result<f64> {
        let m = self.raw_mean();
        if !m.is_finite() {
            Err(Error::Divergent(format!("mean is {m}")))
        } else if m <= 0.0 {
            Err(Error::OutsideM("the measure is the point mass at 0".into()))
        } else {
            Ok(m)
        }
    }

    /// `Q(p) = min{q >= 0 : F(q) >= p}` for `p` in `[0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Domain(format!("quantile needs p in [0,1), got {p}")));
        }
        Ok(self.q(p))
    }

    pub(crate) fn q(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if self.smooth.is_empty() {
            let k = self.normalized_cum.partition_point(|&c| c < p);
            return self.atoms.locs[k.min(self.atoms.locs.len() - 1)];
        }
        if self.f(0.0) >= p {
            return 0.0;
        }
        let hi = match self.support_upper() {
            Some(u) => u,
            None => {
                let mut hi = (self.raw_mean() / (1.0 - p)).max(f64::MIN_POSITIVE);
                while self.f(hi) < p {
                    hi *= 2.0;
                    if hi.is_infinite() {
                        return f64::MAX;
                    }
                }
                hi
            }
        };
        self.invert(p, 0.0, hi)
    }

    // Smallest float q with F(q) = 1, or infinity when F stays below 1.
    // This is the quantile at p = 1 that is consistent with the float CDF.
    pub(crate) fn q_top(&self) -> f64 {
        if self.smooth.is_empty() {
            return self.atoms.locs.last().copied().unwrap_or(0.0);
        }
        if self.f(0.0) >= 1.0 {
            return 0.0;
        }
        let mut hi = self.tail_cutoff().max(1.0);
        while self.f(hi) < 1.0 {
            hi *= 2.0;
            if hi.is_infinite() {
                return f64::INFINITY;
            }
        }
        self.invert(1.0, 0.0, hi)
    }

    // Smallest float q in (lo, hi] with F(q) >= p, given F(lo) < p <= F(hi).
    //
    // Illinois false position, with a bisection on the bit pattern whenever an
    // interpolation step fails to halve the bracket. Both ends are nonnegative
    // floats, so their bit patterns are ordered like the values.
    fn invert(&self, p: f64, mut lo: f64, mut hi: f64) -> f64 {
        let mut g_lo = self.f(lo) - p;
        let mut g_hi = self.f(hi) - p;
        let mut interpolate = true;
        let mut last_side = 0i8;
        while hi.to_bits() - lo.to_bits() > 1 {
            let width = hi.to_bits() - lo.to_bits();
            let by_bits = f64::from_bits(lo.to_bits() + width / 2);
            let mut mid = by_bits;
            if interpolate && g_hi > g_lo {
                let c = hi - g_hi * (hi - lo) / (g_hi - g_lo);
                if c > lo && c < hi {
                    mid = c;
                }
            }
            let g = self.f(mid) - p;
            if g >= 0.0 {
                hi = mid;
                g_hi = g;
                if last_side == 1 {
                    g_lo *= 0.5;
                }
                last_side = 1;
            } else {
                lo = mid;
                g_lo = g;
                if last_side == -1 {
                    g_hi *= 0.5;
                }
                last_side = -1;
            }
            interpolate = hi.to_bits() - lo.to_bits() <= width / 2;
        }
        hi
    }

    /// `∫_0^p Q(t) dt` for `p` in `[0, 1]`.
    pub fn integral_quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("integral_quantile needs p in [0,1], got {p}")));
        }
        Ok(self.iq(p))
    }

    pub(crate) fn iq(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return self.raw_mean();
        }
        let q = self.q(p);
        let below = self.cdf_left(q);
        self.partial_mean_open(q) + q * (p - below).max(0.0)
    }

    /// Pushforward under `x ↦ αx`.
    pub fn rescale(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("rescale needs a positive factor, got {alpha}")));
        }
        Ok(Self::assemble(self.parts.iter().map(|(w, c)| (*w, c.rescaled(alpha))).collect()))
    }

    /// `n` inverse-transform draws `Q(U_i)` from a ChaCha stream seeded by `seed`.
    pub fn sample(&self, seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, n)
    }

    pub fn sample_with<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.q(rng.random::<f64>())).collect()
    }

    /// Sorted abscissae where the CDF jumps or changes form.
    pub fn x_breakpoints(&self) -> Vec<f64> {
        let mut v = self.atoms.locs.clone();
        for (_, c) in &self.smooth {
            v.extend(c.breakpoints());
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Sorted probabilities in `(0, 1)` where `Q` jumps, plateaus or changes form.
    pub fn p_breakpoints(&self) -> Vec<f64> {
        if self.smooth.is_empty() {
            let mut v = self.normalized_cum.clone();
            v.pop();
            return v;
        }
        let mut v = Vec::new();
        for x in self.x_breakpoints() {
            v.push(self.cdf_left(x));
            v.push(self.f(x));
        }
        v.retain(|&p| p > 0.0 && p < 1.0);
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Right end of the support when bounded.
    pub fn support_upper(&self) -> Option<f64> {
        let mut hi = self.atoms.locs.last().copied().unwrap_or(0.0);
        for (_, c) in &self.smooth {
            hi = hi.max(c.support_upper()?);
        }
        Some(hi)
    }

    /// Abscissa past which the remaining mass is negligible.
    pub fn tail_cutoff(&self) -> f64 {
        match self.support_upper() {
            Some(u) => u,
            None => self.q(1.0 - tolerances::SURVIVAL_CUTOFF),
        }
    }

    /// Text in the distribution grammar, when every component has one.
    pub fn spec_text(&self) -> Option<String> {
        if let [(_, c)] = self.parts.as_slice() {
            return c.spec_text();
        }
        let terms: Option<Vec<String>> =
            self.parts.iter().map(|(w, c)| c.spec_text().map(|s| format!("{w}*{s}"))).collect();
        terms.map(|t| format!("mix({})", t.join(",")))
    }
}

impl AtomSet {
    fn total_moment(&self) -> f64 {
        self.cum_moment.last().copied().unwrap_or(0.0)
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.spec_text() {
            Some(s) => f.write_str(&s),
            None => {
                let kinds: Vec<&str> = self
                    .parts
                    .iter()
                    .map(|(_, c)| match c {
                        Component::QuantileTable(_) => "table",
                        Component::CutKde(_) => "kde",
                        _ => "parametric",
                    })
                    .collect();
                write!(f, "<mixture of {} components: {}>", kinds.len(), kinds.join(","))
            }
        }
    }
}

/// First-order stochastic dominance of `d1` over `d2` (`F1 <= F2` everywhere).
///
/// Both the CDF route and the quantile route are evaluated on probe sets
/// closed under the Galois maps; disagreement is reported as an error.
pub fn fsd_dominates(d1: &Distribution, d2: &Distribution, grid: usize) -> Result<bool> {
    let (by_cdf, by_quantile) = fsd_routes(d1, d2, grid)?;
    if by_cdf != by_quantile {
        return Err(Error::RouteMismatch(format!("dominance by cdf is {by_cdf} but by quantile is {by_quantile}")));
    }
    Ok(by_cdf)
}

/// The `(cdf route, quantile route)` verdicts of [`fsd_dominates`].
pub fn fsd_routes(d1: &Distribution, d2: &Distribution, grid: usize) -> Result<(bool, bool)> {
    if grid < 2 {
        return Err(Error::Domain("dominance grid needs at least 2 points".into()));
    }
    let top = d1.tail_cutoff().max(d2.tail_cutoff());
    let mut xs: Vec<f64> = d1.x_breakpoints();
    xs.extend(d2.x_breakpoints());
    xs.extend((0..=grid).map(|i| top * i as f64 / grid as f64));
    let mut ps: Vec<f64> = d1.p_breakpoints();
    ps.extend(d2.p_breakpoints());
    ps.extend((1..grid).map(|i| i as f64 / grid as f64));

    let q1 = |p: f64| if p < 1.0 { d1.q(p) } else { d1.q_top() };
    let q2 = |p: f64| if p < 1.0 { d2.q(p) } else { d2.q_top() };

    let mut x_probe = xs.clone();
    for &p in &ps {
        x_probe.push(d1.q(p));
        x_probe.push(d2.q(p));
    }
    // A CDF gap at x shows up in quantile space at p = F(x) or just above it.
    let mut p_probe = ps;
    p_probe.push(1.0);
    for &x in &xs {
        for f in [d1.f(x), d2.f(x)] {
            p_probe.push(f);
            p_probe.push(f64::from_bits(f.to_bits() + 1));
        }
    }
    p_probe.retain(|&p| p > 0.0 && p <= 1.0);

    // Translate every witness into the other space: a quantile witness p
    // gives x = Q1(p) with F1(x) >= p > F2(x), and a CDF witness x gives
    // p = F1(x) with Q1(p) <= x < Q2(p).
    let p_witnesses: Vec<f64> = p_probe.iter().copied().filter(|&p| q1(p) < q2(p)).collect();
    let x_witnesses: Vec<f64> = x_probe.iter().copied().filter(|&x| d1.f(x) > d2.f(x)).collect();
    x_probe.extend(p_witnesses.into_iter().map(q1).filter(|x| x.is_finite()));
    p_probe.extend(x_witnesses.into_iter().map(|x| d1.f(x)));

    let by_cdf = x_probe.iter().all(|&x| d1.f(x) <= d2.f(x));
    let by_quantile = p_probe.iter().all(|&p| q1(p) >= q2(p));
    Ok((by_cdf, by_quantile))
}
