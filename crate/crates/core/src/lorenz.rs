//! Lorenz curves, the pseudo-Lorenz functional, Kendall points, Lorenz
//! dominance and reconstruction of a measure from a curve and a mean.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{Distribution, TableMode};
use crate::numfmt;
use crate::tolerances;

/// How a [`LorenzCurve`] is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// Polygon through exact vertices (finite-discrete source).
    ExactPiecewiseAffine,
    /// `∫_0^p Q / m` through closed-form partial moments and quantile inversion.
    QuadratureBacked,
}

/// `L(p) = ∫_0^p Q / m` of a measure with finite, nonzero mean.
#[derive(Debug, Clone)]
pub struct LorenzCurve {
    source: Distribution,
    mean: f64,
    vertices: Option<(Vec<f64>, Vec<f64>)>,
}

impl LorenzCurve {
    pub fn eval(&self, p: f64) -> f64 {
        if !(p > 0.0) {
            return 0.0;
        }
        if p >= 1.0 {
            return 1.0;
        }
        match &self.vertices {
            Some((ps, ls)) => {
                let k = ps.partition_point(|&v| v <= p);
                // ps[0] = 0 < p < 1 = ps[last], so 1 <= k < len.
                let (p0, p1, l0, l1) = (ps[k - 1], ps[k], ls[k - 1], ls[k]);
                if p == p0 {
                    l0
                } else {
                    l0 + (l1 - l0) * (p - p0) / (p1 - p0)
                }
            }
            None => (self.source.iq(p) / self.mean).clamp(0.0, 1.0),
        }
    }

    /// `∂₋L(p) = Q(p)/m` on `(0, 1]`; at 1 this is the top of the support over the mean.
    pub fn left_derivative(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Domain(format!("left derivative needs p in (0,1], got {p}")));
        }
        if p == 1.0 {
            return Ok(self.source.support_upper().map_or(f64::INFINITY, |u| u / self.mean));
        }
        Ok(self.source.q(p) / self.mean)
    }

    pub fn source_mean(&self) -> f64 {
        self.mean
    }

    pub fn source(&self) -> &Distribution {
        &self.source
    }

    pub fn representation(&self) -> Representation {
        if self.vertices.is_some() {
            Representation::ExactPiecewiseAffine
        } else {
            Representation::QuadratureBacked
        }
    }

    /// Polygon vertices, for exact curves.
    pub fn vertices(&self) -> Option<(&[f64], &[f64])> {
        self.vertices.as_ref().map(|(p, l)| (p.as_slice(), l.as_slice()))
    }

    /// Probabilities where the curve has a kink or changes form.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.source.p_breakpoints()
    }

    /// Probe points: kinks, 64 uniform points, and dyadic ladders towards 0 and 1.
    pub fn probe_ladder(&self) -> Vec<f64> {
        let mut v = self.breakpoints();
        v.extend((0..=64).map(|i| i as f64 / 64.0));
        for j in 1..=30 {
            let e = 0.5f64.powi(j);
            v.push(e);
            v.push(1.0 - e);
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Values on the uniform grid `k / resolution`, `k = 0..=resolution`.
    pub fn grid(&self, resolution: usize) -> CurveGrid {
        let p: Vec<f64> = (0..=resolution).map(|k| k as f64 / resolution as f64).collect();
        let values = p.iter().map(|&x| self.eval(x)).collect();
        CurveGrid { p, values }
    }

    /// Two-column TSV `(p, L(p))` with a header row.
    pub fn to_tsv(&self, resolution: usize) -> String {
        let g = self.grid(resolution.max(1));
        let mut out = String::from("p\tL\n");
        for (p, l) in g.p.iter().zip(&g.values) {
            out.push_str(&format!("{}\t{}\n", numfmt::tsv(*p), numfmt::tsv(*l)));
        }
        out
    }

    /// `∫_0^1 L`, exact on polygons.
    pub fn area(&self) -> f64 {
        match &self.vertices {
            Some((ps, ls)) => ps.windows(2).zip(ls.windows(2)).map(|(p, l)| 0.5 * (p[1] - p[0]) * (l[0] + l[1])).sum(),
            None => {
                let q = crate::quadrature::Quadrature::default();
                q.integrate(|p| self.eval(p), 0.0, 1.0, &self.breakpoints()).value
            }
        }
    }
}

/// A curve sampled on a probability grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveGrid {
    pub p: Vec<f64>,
    pub values: Vec<f64>,
}

impl CurveGrid {
    pub fn new(p: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if p.len() != values.len() || p.len() < 2 {
            return Err(Error::Validation("a curve grid needs at least two (p, value) pairs".into()));
        }
        if p[0] != 0.0 || p.windows(2).any(|w| !(w[1] > w[0])) || *p.last().unwrap() > 1.0 {
            return Err(Error::Validation("grid probabilities must increase strictly from 0 inside [0,1]".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("curve values must be finite".into()));
        }
        Ok(CurveGrid { p, values })
    }

    /// Reads `(p, value)` rows from TSV text, skipping a non-numeric header.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut p = Vec::new();
        let mut v = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let a = cols.next().unwrap_or("").trim().parse::<f64>();
            let b = cols.next().unwrap_or("").trim().parse::<f64>();
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    p.push(a);
                    v.push(b);
                }
                _ if p.is_empty() => continue,
                _ => return Err(Error::Input { line: i + 1, message: format!("expected two numbers, got `{line}`") }),
            }
        }
        CurveGrid::new(p, v)
    }
}

/// The Lorenz curve of `d`.
pub fn lorenz(d: &Distribution) -> Result<LorenzCurve> {
    let mean = d.mean()?;
    Ok(LorenzCurve { source: d.clone(), mean, vertices: d.lorenz_vertices() })
}

/// `Λ(p) = ∫_{[0, Q(p)]} u dμ / m` for `p < 1`, and `Λ(1) = 1`.
///
/// The upper limit is closed, so an atom sitting at `Q(p)` is included.
pub fn pseudo_lorenz(d: &Distribution, p: f64) -> Result<f64> {
    let m = d.mean()?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("pseudo-Lorenz needs p in [0,1], got {p}")));
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    Ok((d.partial_mean(d.q(p)) / m).min(1.0))
}

/// Points `(F(t), ∫_{[0,t]} u dμ / m)` for the sorted grid, with repeats removed.
pub fn kendall_points(d: &Distribution, t_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let m = d.mean()?;
    if t_grid.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::Domain("Kendall abscissae must be nonnegative".into()));
    }
    let mut ts = t_grid.to_vec();
    ts.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(ts.len());
    for t in ts {
        let pt = (d.f(t), (d.partial_mean(t) / m).min(1.0));
        if out.last() != Some(&pt) {
            out.push(pt);
        }
    }
    Ok(out)
}

/// `L_{d1} <= L_{d2}` at every kink of either curve and on a uniform grid.
pub fn lorenz_dominates(d1: &Distribution, d2: &Distribution, grid: usize) -> Result<bool> {
    let l1 = lorenz(d1)?;
    let l2 = lorenz(d2)?;
    let mut probes = l1.breakpoints();
    probes.extend(l2.breakpoints());
    probes.extend((0..=grid.max(1)).map(|i| i as f64 / grid.max(1) as f64));
    Ok(probes.iter().all(|&p| l1.eval(p) <= l2.eval(p) + tolerances::LORENZ_COMPARE))
}

/// Slack allowed when checking monotonicity and convexity of grid values.
const SHAPE_SLACK: f64 = 1e-9;

/// Relative gap below which neighbouring slopes are treated as equal.
const SNAP: f64 = 1e-9;

/// Rebuilds the measure whose quantile is `target_mean` times the left
/// derivative of the curve, as a step quantile table of divided differences.
///
/// The grid must start at `(0, 0)` and end at `(1, 1)`.
pub fn reconstruct(curve: &CurveGrid, target_mean: f64) -> Result<Distribution> {
    if !(target_mean > 0.0 && target_mean.is_finite()) {
        return Err(Error::Domain(format!("target mean must be positive, got {target_mean}")));
    }
    let (p, l) = (&curve.p, &curve.values);
    if p.len() < 2 || p[0] != 0.0 || *p.last().unwrap() != 1.0 {
        return Err(Error::Validation("reconstruction needs a grid spanning [0,1]".into()));
    }
    if l[0].abs() > SHAPE_SLACK {
        return Err(Error::Validation(format!("curve must vanish at 0, got {}", l[0])));
    }
    if (l[l.len() - 1] - 1.0).abs() > SHAPE_SLACK {
        return Err(Error::Validation(format!("curve must equal 1 at 1, got {}", l[l.len() - 1])));
    }
    let mut slopes = convex_slopes(p, l)?;
    // Divided differences along one affine piece differ only by rounding;
    // snap them to the first slope of the run so the piece becomes one atom.
    let mut anchor = slopes[0];
    for s in slopes.iter_mut().skip(1) {
        if (*s - anchor).abs() <= SNAP * anchor.abs().max(1.0) {
            *s = anchor;
        } else {
            anchor = *s;
        }
    }
    let values = slopes.iter().map(|s| s * target_mean).collect();
    Distribution::quantile_table(p[..p.len() - 1].to_vec(), values, TableMode::Step)
}

/// Divided differences of a convex, nondecreasing grid function.
pub(crate) fn convex_slopes(p: &[f64], l: &[f64]) -> Result<Vec<f64>> {
    let mut slopes: Vec<f64> = p.windows(2).zip(l.windows(2)).map(|(p, l)| (l[1] - l[0]) / (p[1] - p[0])).collect();
    let scale = slopes.iter().fold(1.0f64, |a, s| a.max(s.abs()));
    let slack = SHAPE_SLACK * scale;
    for (k, s) in slopes.iter_mut().enumerate() {
        if *s < -slack {
            return Err(Error::Validation(format!("curve decreases on segment {k}")));
        }
        *s = s.max(0.0);
    }
    for k in 1..slopes.len() {
        if slopes[k] < slopes[k - 1] - slack {
            return Err(Error::Validation(format!("curve is not convex at grid point {k}")));
        }
        // Rounding can leave tiny inversions; keep the quantile monotone.
        slopes[k] = slopes[k].max(slopes[k - 1]);
    }
    Ok(slopes)
}
