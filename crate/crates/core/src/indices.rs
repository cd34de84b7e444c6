//! Gini and Hoover indices by several independent routes, the Robin Hood
//! decomposition, and extremal Gini values under a Hoover constraint.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lorenz::lorenz;
use crate::measure::Distribution;
use crate::quadrature::{kronrod_unit_rule, Quadrature};
use crate::tolerances;

fn quad() -> Quadrature {
    Quadrature::default()
}

/// Mean absolute difference `E|X - X'|` of a finite-discrete measure.
fn discrete_mean_difference(atoms: &[(f64, f64)]) -> f64 {
    let (mut mass, mut moment, mut acc) = (0.0, 0.0, 0.0);
    for &(x, w) in atoms {
        acc += w * (x * mass - moment);
        mass += w;
        moment += w * x;
    }
    2.0 * acc
}

/// Gini as `E|X - X'| / 2m`.
///
/// Finite-discrete measures use the exact pairwise sum. Otherwise the unit
/// square of quantile levels is split into panels: off-diagonal blocks are
/// exact given the panel integrals of `Q`, and diagonal blocks use a
/// Duffy-transformed 15x15 Kronrod tensor rule.
pub fn gini_mean_difference(d: &Distribution) -> Result<f64> {
    let m = d.mean()?;
    if d.is_finite_discrete() {
        return Ok(discrete_mean_difference(&d.atoms()) / (2.0 * m));
    }
    let (est, panels) = quad().integrate_panels(|p| d.q(p), 0.0, 1.0, &d.p_breakpoints());
    let rule = kronrod_unit_rule();
    let (mut width_below, mut integral_below) = (0.0, 0.0);
    let mut off = 0.0;
    let mut diag = 0.0;
    for panel in &panels {
        let w = panel.b - panel.a;
        off += panel.value * width_below - w * integral_below;
        width_below += w;
        integral_below += panel.value;
        // 2 ∫∫_{u<v} (Q(v) - Q(u)) over the panel square, with u = a + w s t, v = a + w s.
        let mut inner = 0.0;
        for &(s, ws) in &rule {
            let qv = d.q(panel.a + w * s);
            let mut row = 0.0;
            for &(t, wt) in &rule {
                row += wt * (qv - d.q(panel.a + w * s * t));
            }
            inner += ws * s * row;
        }
        diag += 2.0 * w * w * inner;
    }
    let mean_difference = 2.0 * off + diag;
    Ok(mean_difference / (2.0 * est.value))
}

/// Gini as `1 - ∫(1-F)² / ∫(1-F)`.
pub fn gini_dorfman(d: &Distribution) -> Result<f64> {
    d.mean()?;
    let (num, den) = if d.is_finite_discrete() {
        let mut prev = 0.0;
        let mut survival = 1.0;
        let (mut num, mut den) = (0.0, 0.0);
        let atoms = d.atoms();
        for (k, &(x, _)) in atoms.iter().enumerate() {
            let dx = x - prev;
            num += dx * survival * survival;
            den += dx * survival;
            prev = x;
            survival = 1.0 - d.f(x);
            if k + 1 == atoms.len() {
                survival = 0.0;
            }
        }
        (num, den)
    } else {
        let top = d.tail_cutoff();
        let breaks = d.x_breakpoints();
        let num = quad().integrate(|x| (1.0 - d.f(x)).powi(2), 0.0, top, &breaks).value;
        let den = quad().integrate(|x| 1.0 - d.f(x), 0.0, top, &breaks).value;
        (num, den)
    };
    Ok(1.0 - num / den)
}

/// Gini as `1 - 2 ∫_0^1 L`.
pub fn gini_lorenz(d: &Distribution) -> Result<f64> {
    Ok(1.0 - 2.0 * lorenz(d)?.area())
}

/// Hoover as `E|X - m| / 2m`.
pub fn hoover_mean_deviation(d: &Distribution) -> Result<f64> {
    let m = d.mean()?;
    if d.is_finite_discrete() {
        let dev: f64 = d.atoms().iter().map(|&(x, w)| w * (x - m).abs()).sum();
        return Ok(dev / (2.0 * m));
    }
    let mut breaks = d.p_breakpoints();
    breaks.push(d.cdf_left(m));
    breaks.push(d.f(m));
    let dev = quad().integrate(|p| (d.q(p) - m).abs(), 0.0, 1.0, &breaks).value;
    Ok(dev / (2.0 * m))
}

/// Hoover as `F(m) - L(F(m))`.
pub fn hoover_cdf(d: &Distribution) -> Result<f64> {
    let l = lorenz(d)?;
    let p = d.f(l.source_mean());
    Ok((p - l.eval(p)).max(0.0))
}

/// Hoover as the largest vertical gap `max_p (p - L(p))`.
///
/// Exact over the polygon vertices for finite-discrete measures. Otherwise a
/// 1024-point sweep refined by golden-section search, with `F(m)` among the
/// candidates.
pub fn hoover_max(d: &Distribution) -> Result<f64> {
    let l = lorenz(d)?;
    if let Some((ps, ls)) = l.vertices() {
        return Ok(ps.iter().zip(ls).map(|(p, v)| p - v).fold(0.0, f64::max));
    }
    let gap = |p: f64| p - l.eval(p);
    let n = 1024;
    let mut best_p = 0.0;
    let mut best = 0.0;
    for i in 1..n {
        let p = i as f64 / n as f64;
        let g = gap(p);
        if g > best {
            best = g;
            best_p = p;
        }
    }
    // The gap is concave, so golden-section around the best sweep point converges.
    let (mut a, mut b) = ((best_p - 1.0 / n as f64).max(0.0), (best_p + 1.0 / n as f64).min(1.0));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - phi * (b - a);
        let e = a + phi * (b - a);
        if gap(c) >= gap(e) {
            b = e;
        } else {
            a = c;
        }
    }
    let refined = gap(0.5 * (a + b));
    let at_mean = gap(d.f(l.source_mean()));
    Ok(best.max(refined).max(at_mean).max(0.0))
}

/// The Robin Hood shares `R = ∫_{(m,∞)} (x - m) dμ` and `P = ∫_{[0,m)} (m - x) dμ`.
///
/// An atom located exactly at the mean belongs to neither.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobinHood {
    pub r_share: f64,
    pub p_share: f64,
}

pub fn robin_hood_shares(d: &Distribution) -> Result<RobinHood> {
    let m = d.mean()?;
    let above = (m - d.partial_mean(m)) - m * (1.0 - d.f(m));
    let below = m * d.cdf_left(m) - d.partial_mean_open(m);
    Ok(RobinHood { r_share: above.max(0.0), p_share: below.max(0.0) })
}

/// Pairwise differences between routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    pub gini_mean_difference_vs_dorfman: f64,
    pub gini_dorfman_vs_lorenz: f64,
    pub gini_mean_difference_vs_lorenz: f64,
    pub hoover_mean_deviation_vs_cdf: f64,
    pub hoover_cdf_vs_max: f64,
    pub hoover_mean_deviation_vs_max: f64,
    /// `|R - P| / m`.
    pub robin_hood_balance: f64,
}

/// Every Gini and Hoover route with their disagreements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexReport {
    pub mean: f64,
    pub gini_mean_difference: f64,
    pub gini_dorfman: f64,
    pub gini_lorenz: f64,
    pub hoover_mean_deviation: f64,
    pub hoover_cdf: f64,
    pub hoover_max: f64,
    pub r_share: f64,
    pub p_share: f64,
    pub max_cross_route_residual: f64,
    /// Whether every route is an exact finite computation.
    pub exact: bool,
    /// The agreement the routes are expected to reach.
    pub tolerance: f64,
    pub residuals: Residuals,
}

impl IndexReport {
    pub fn within_tolerance(&self) -> bool {
        self.max_cross_route_residual <= self.tolerance
    }
}

pub fn index_report(d: &Distribution) -> Result<IndexReport> {
    let mean = d.mean()?;
    let g_md = gini_mean_difference(d)?;
    let g_df = gini_dorfman(d)?;
    let g_lz = gini_lorenz(d)?;
    let h_md = hoover_mean_deviation(d)?;
    let h_cdf = hoover_cdf(d)?;
    let h_max = hoover_max(d)?;
    let rh = robin_hood_shares(d)?;
    let residuals = Residuals {
        gini_mean_difference_vs_dorfman: (g_md - g_df).abs(),
        gini_dorfman_vs_lorenz: (g_df - g_lz).abs(),
        gini_mean_difference_vs_lorenz: (g_md - g_lz).abs(),
        hoover_mean_deviation_vs_cdf: (h_md - h_cdf).abs(),
        hoover_cdf_vs_max: (h_cdf - h_max).abs(),
        hoover_mean_deviation_vs_max: (h_md - h_max).abs(),
        robin_hood_balance: (rh.r_share - rh.p_share).abs() / mean,
    };
    let max_cross_route_residual = [
        residuals.gini_mean_difference_vs_dorfman,
        residuals.gini_dorfman_vs_lorenz,
        residuals.gini_mean_difference_vs_lorenz,
        residuals.hoover_mean_deviation_vs_cdf,
        residuals.hoover_cdf_vs_max,
        residuals.hoover_mean_deviation_vs_max,
        residuals.robin_hood_balance,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let exact = d.is_finite_discrete();
    Ok(IndexReport {
        mean,
        gini_mean_difference: g_md,
        gini_dorfman: g_df,
        gini_lorenz: g_lz,
        hoover_mean_deviation: h_md,
        hoover_cdf: h_cdf,
        hoover_max: h_max,
        r_share: rh.r_share,
        p_share: rh.p_share,
        max_cross_route_residual,
        exact,
        tolerance: if exact { tolerances::CROSS_ROUTE_EXACT } else { tolerances::CROSS_ROUTE_QUADRATURE },
        residuals,
    })
}

/// The cheapest accurate Gini route: exact pairs for discrete measures,
/// the survival-function integral otherwise.
pub fn gini(d: &Distribution) -> Result<f64> {
    if d.is_finite_discrete() {
        gini_mean_difference(d)
    } else {
        gini_dorfman(d)
    }
}

/// The cheapest accurate Hoover route, `R / m` in closed form.
pub fn hoover(d: &Distribution) -> Result<f64> {
    let m = d.mean()?;
    if d.is_finite_discrete() {
        return hoover_mean_deviation(d);
    }
    Ok(robin_hood_shares(d)?.r_share / m)
}

/// Attainable Gini values for a given Hoover index: `[low, high)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GiniRange {
    pub low: f64,
    pub high: f64,
    /// The upper end is never attained.
    pub high_exclusive: bool,
}

pub fn gini_range_given_hoover(h: f64) -> Result<GiniRange> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Domain(format!("Hoover value must lie in (0,1), got {h}")));
    }
    Ok(GiniRange { low: h, high: 2.0 * h - h * h, high_exclusive: true })
}

fn check_h(h: f64) -> Result<()> {
    gini_range_given_hoover(h).map(|_| ())
}

/// `α δ_{m(1-h/α)} + (1-α) δ_{m(1+h/(1-α))}`: the measures with `G = H = h` and mean `m`.
pub fn extremal_bimodal(h: f64, m: f64, alpha: f64) -> Result<Distribution> {
    check_h(h)?;
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::Domain(format!("mean must be positive, got {m}")));
    }
    if !(alpha >= h && alpha < 1.0) {
        return Err(Error::Validation(format!("alpha must lie in [h, 1) = [{h}, 1), got {alpha}")));
    }
    let low = m * (1.0 - h / alpha);
    let high = m * (1.0 + h / (1.0 - alpha));
    Distribution::from_atoms(&[(low, alpha), (high, 1.0 - alpha)])
}

/// The measure whose Lorenz polygon runs through `(0,0)`, `(h,0)`,
/// `(α, α-h)` and `(1,1)`, scaled to mean `m`. Its Gini index is `h + αh - h²`.
pub fn three_group(h: f64, alpha: f64, m: f64) -> Result<Distribution> {
    check_h(h)?;
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::Domain(format!("mean must be positive, got {m}")));
    }
    if !(alpha >= h && alpha < 1.0) {
        return Err(Error::Validation(format!("alpha must lie in [h, 1), got {alpha}")));
    }
    let top = m * (1.0 + h / (1.0 - alpha));
    let mut atoms = vec![(0.0, h), (top, 1.0 - alpha)];
    if alpha > h {
        atoms.push((m, alpha - h));
    }
    Distribution::from_atoms(&atoms)
}
