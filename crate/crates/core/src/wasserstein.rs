//! The Wasserstein-1 metric and convergence diagnostics along sequences.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::indices;
use crate::lorenz::{convex_slopes, lorenz, reconstruct, CurveGrid, LorenzCurve};
use crate::measure::Distribution;
use crate::numfmt;
use crate::quadrature::Quadrature;

/// Both evaluations of `W₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct W1Routes {
    /// `∫_0^1 |Q_1 - Q_2|`.
    pub quantile: f64,
    /// `∫_0^∞ |F_1 - F_2|`.
    pub cdf: f64,
    /// Both operands are finite-discrete and the sums are exact.
    pub exact: bool,
}

impl W1Routes {
    pub fn residual(&self) -> f64 {
        (self.quantile - self.cdf).abs()
    }
}

fn finite_mean(d: &Distribution) -> Result<f64> {
    let m = d.raw_mean();
    if m.is_finite() {
        Ok(m)
    } else {
        Err(Error::Divergent(format!("mean is {m}")))
    }
}

/// `W₁(d1, d2)` by the quantile route.
pub fn w1(d1: &Distribution, d2: &Distribution) -> Result<f64> {
    Ok(w1_routes(d1, d2)?.quantile)
}

/// `W₁` by the quantile route and by the CDF route.
pub fn w1_routes(d1: &Distribution, d2: &Distribution) -> Result<W1Routes> {
    finite_mean(d1)?;
    finite_mean(d2)?;
    // A canonical operand order makes the result exactly symmetric.
    let (d1, d2) =
        if format!("{:?}", d1.components()) <= format!("{:?}", d2.components()) { (d1, d2) } else { (d2, d1) };
    if d1.is_finite_discrete() && d2.is_finite_discrete() {
        return Ok(discrete_routes(d1, d2));
    }

    let xb1 = d1.x_breakpoints();
    let xb2 = d2.x_breakpoints();
    let pb1 = d1.p_breakpoints();
    let pb2 = d2.p_breakpoints();

    // |Q1 - Q2| and |F1 - F2| change sign where one function meets a kink
    // or plateau of the other; map every kink into the other space.
    let mut xs: Vec<f64> = xb1.iter().chain(&xb2).copied().collect();
    xs.extend(pb1.iter().chain(&pb2).flat_map(|&p| [d1.q(p), d2.q(p)]));
    let mut ps: Vec<f64> = pb1.iter().chain(&pb2).copied().collect();
    ps.extend(xb1.iter().chain(&xb2).flat_map(|&x| [d1.f(x), d2.f(x), d1.cdf_left(x), d2.cdf_left(x)]));

    let top = d1.tail_cutoff().max(d2.tail_cutoff());
    if !d1.is_finite_discrete() && !d2.is_finite_discrete() {
        for x in crossings(d1, d2, top) {
            xs.push(x);
            ps.push(d1.f(x));
        }
    }
    ps.retain(|&p| p > 0.0 && p < 1.0);

    let quad = Quadrature::default();
    let quantile = quad.integrate(|p| (d1.q(p) - d2.q(p)).abs(), 0.0, 1.0, &ps).value;
    let cdf = quad.integrate(|x| (d1.f(x) - d2.f(x)).abs(), 0.0, top, &xs).value;
    Ok(W1Routes { quantile, cdf, exact: false })
}

fn discrete_routes(d1: &Distribution, d2: &Distribution) -> W1Routes {
    let a1 = d1.atoms();
    let a2 = d2.atoms();

    let mut levels: Vec<f64> = d1.p_breakpoints().into_iter().chain(d2.p_breakpoints()).collect();
    levels.push(1.0);
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut quantile = 0.0;
    let mut prev = 0.0;
    let (mut i, mut j) = (0, 0);
    let (mut c1, mut c2) = (d1.f(a1[0].0), d2.f(a2[0].0));
    for &p in &levels {
        // Q is constant on (prev, p]; advance to the atom whose cumulative mass reaches p.
        while c1 < p && i + 1 < a1.len() {
            i += 1;
            c1 = d1.f(a1[i].0);
        }
        while c2 < p && j + 1 < a2.len() {
            j += 1;
            c2 = d2.f(a2[j].0);
        }
        quantile += (p - prev) * (a1[i].0 - a2[j].0).abs();
        prev = p;
    }

    let mut xs: Vec<f64> = a1.iter().chain(&a2).map(|a| a.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let cdf = xs.windows(2).map(|w| (w[1] - w[0]) * (d1.f(w[0]) - d2.f(w[0])).abs()).sum();
    W1Routes { quantile, cdf, exact: true }
}

/// Sign changes of `F1 - F2` located by a scan and bisection.
fn crossings(d1: &Distribution, d2: &Distribution, top: f64) -> Vec<f64> {
    const SCAN: usize = 1024;
    let diff = |x: f64| d1.f(x) - d2.f(x);
    let mut out = Vec::new();
    let mut prev_x = 0.0;
    let mut prev_d = diff(0.0);
    for i in 1..=SCAN {
        let x = top * i as f64 / SCAN as f64;
        let dx = diff(x);
        if (prev_d < 0.0 && dx > 0.0) || (prev_d > 0.0 && dx < 0.0) {
            let (mut a, mut b) = (prev_x, x);
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if (diff(mid) > 0.0) == (prev_d > 0.0) {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            out.push(0.5 * (a + b));
        }
        if dx != 0.0 {
            prev_d = dx;
            prev_x = x;
        }
    }
    out
}

/// `∫ x 1{x > α} dμ`: the first moment above `α`.
pub fn tail_moment(d: &Distribution, alpha: f64) -> f64 {
    (d.raw_mean() - d.partial_mean(alpha)).max(0.0)
}

/// `sup_i ∫ x 1{x > α} dμ_i` over a finite family.
pub fn ui_tail(family: &[Distribution], alpha: f64) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::Validation("uniform-integrability tail needs a nonempty family".into()));
    }
    if !(alpha >= 0.0) {
        return Err(Error::Domain(format!("tail level must be nonnegative, got {alpha}")));
    }
    let mut sup = 0.0f64;
    for d in family {
        finite_mean(d)?;
        sup = sup.max(tail_moment(d, alpha));
    }
    Ok(sup)
}

/// `1 - inf_i L_i(x)` over a finite family.
pub fn lorenz_tail_gap(family: &[Distribution], x: f64) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::Validation("Lorenz tail gap needs a nonempty family".into()));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("probe must lie in [0,1], got {x}")));
    }
    let mut low = f64::INFINITY;
    for d in family {
        low = low.min(lorenz(d)?.eval(x));
    }
    Ok(1.0 - low)
}

/// Classification of a sequence against its declared limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    W1Convergent,
    WeakOnly,
    Divergent,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::W1Convergent => "w1_convergent",
            Verdict::WeakOnly => "weak_only",
            Verdict::Divergent => "divergent",
        }
    }
}

/// Thresholds applied over the final quarter of a sequence, relative to the
/// limit mean (or absolute when the limit mean is 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticTolerances {
    pub w1: f64,
    pub mean: f64,
    pub weak: f64,
    pub ui: f64,
}

impl DiagnosticTolerances {
    /// The same threshold for every check.
    pub fn uniform(tol: f64) -> Self {
        DiagnosticTolerances { w1: tol, mean: tol, weak: tol, ui: tol }
    }
}

impl Default for DiagnosticTolerances {
    fn default() -> Self {
        Self::uniform(0.05)
    }
}

/// Options for [`sequence_diagnostics`]; empty vectors select the defaults.
#[derive(Debug, Clone, Default)]
pub struct DiagnosticOptions {
    /// Probability ladder for the Lorenz error (kinks of both curves are always added).
    pub probes: Vec<f64>,
    /// Tail levels for the uniform-integrability check.
    pub alpha_grid: Vec<f64>,
    pub tolerances: DiagnosticTolerances,
    /// Labels attached to each step, e.g. the sample size.
    pub parameters: Vec<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub index: usize,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, f64>,
    pub w1_to_limit: f64,
    pub w1_cdf_route: f64,
    pub mean: f64,
    pub gini: f64,
    pub hoover: f64,
    pub gini_error: f64,
    pub hoover_error: f64,
    pub lorenz_sup_error: f64,
    /// Largest relative quantile gap at the weak-convergence probes.
    pub weak_error: f64,
    /// Tail moments above each level of the alpha grid.
    pub ui_tail_at_alpha: Vec<f64>,
    /// Largest gap between the tail moments of this step and of the limit.
    pub ui_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitSummary {
    pub mean: f64,
    pub gini: f64,
    pub hoover: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Checks {
    pub w1_small: bool,
    pub weak_probes_pass: bool,
    pub means_converge: bool,
    pub tails_converge: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub steps: Vec<StepRecord>,
    pub limit_summary: LimitSummary,
    pub alpha_grid: Vec<f64>,
    pub weak_probes: Vec<f64>,
    /// `sup_n ∫ x 1{x > α} dμ_n` over the whole sequence, per level.
    pub family_ui_tail: Vec<f64>,
    pub tolerances: DiagnosticTolerances,
    pub checks: Checks,
    pub verdict: Verdict,
    pub decided_by: String,
    /// Verdict from the weak probes together with the means.
    pub verdict_from_means: Verdict,
    /// Verdict from the weak probes together with the tail moments.
    pub verdict_from_tails: Verdict,
    pub consistent: bool,
}

impl ConvergenceReport {
    pub fn final_step(&self) -> Option<&StepRecord> {
        self.steps.last()
    }

    /// One row per step, tab-separated, 12 significant digits.
    pub fn to_tsv(&self) -> String {
        let keys: Vec<&String> = self.steps.first().map(|s| s.parameters.keys().collect()).unwrap_or_default();
        let mut out = String::from("index");
        for k in &keys {
            out.push('\t');
            out.push_str(k);
        }
        out.push_str("\tw1_to_limit\tmean\tgini\thoover\tlorenz_sup_error\tweak_error\tui_error\n");
        for s in &self.steps {
            out.push_str(&s.index.to_string());
            for k in &keys {
                out.push('\t');
                out.push_str(&s.parameters.get(*k).map_or_else(String::new, |v| numfmt::tsv(*v)));
            }
            for v in [s.w1_to_limit, s.mean, s.gini, s.hoover, s.lorenz_sup_error, s.weak_error, s.ui_error] {
                out.push('\t');
                out.push_str(&numfmt::tsv(v));
            }
            out.push('\n');
        }
        out
    }
}

/// Default weak-convergence probes `k/64`.
pub fn default_weak_probes() -> Vec<f64> {
    (1..64).map(|k| k as f64 / 64.0).collect()
}

/// Default Lorenz probe ladder: 64 uniform points plus dyadic ladders at both ends.
pub fn default_lorenz_probes() -> Vec<f64> {
    let mut v: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
    for j in 1..=30 {
        let e = 0.5f64.powi(j);
        v.push(e);
        v.push(1.0 - e);
    }
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

struct LimitData<'a> {
    dist: &'a Distribution,
    curve: LorenzCurve,
    summary: LimitSummary,
    weak_probes: Vec<f64>,
    weak_values: Vec<f64>,
    lorenz_probes: Vec<f64>,
    alpha_grid: Vec<f64>,
    tails: Vec<f64>,
}

fn step_record(
    index: usize,
    d: &Distribution,
    lim: &LimitData<'_>,
    parameters: BTreeMap<String, f64>,
) -> Result<StepRecord> {
    let mean = d.mean()?;
    let routes = w1_routes(d, lim.dist)?;
    let gini = indices::gini(d)?;
    let hoover = indices::hoover(d)?;
    let curve = lorenz(d)?;
    let mut sup = 0.0f64;
    for &p in lim.lorenz_probes.iter().chain(&curve.breakpoints()) {
        sup = sup.max((curve.eval(p) - lim.curve.eval(p)).abs());
    }
    let mut weak = 0.0f64;
    for (&p, &q_lim) in lim.weak_probes.iter().zip(&lim.weak_values) {
        weak = weak.max((d.q(p) - q_lim).abs() / (q_lim + lim.summary.mean));
    }
    let ui: Vec<f64> = lim.alpha_grid.iter().map(|&a| tail_moment(d, a)).collect();
    let ui_error = ui.iter().zip(&lim.tails).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(StepRecord {
        index,
        parameters,
        w1_to_limit: routes.quantile,
        w1_cdf_route: routes.cdf,
        mean,
        gini,
        hoover,
        gini_error: (gini - lim.summary.gini).abs(),
        hoover_error: (hoover - lim.summary.hoover).abs(),
        lorenz_sup_error: sup,
        weak_error: weak,
        ui_tail_at_alpha: ui,
        ui_error,
    })
}

/// Per-step `W₁`, moments, indices, Lorenz and tail errors of `seq` against
/// `limit`, and a verdict from the final quarter of the sequence.
///
/// Weak convergence is only semi-decidable from finitely many probes: it is
/// declared when quantiles at the probe ladder (skipping jumps of the limit
/// quantile) are within tolerance over the final quarter.
pub fn sequence_diagnostics(
    seq: &[Distribution],
    limit: &Distribution,
    options: &DiagnosticOptions,
) -> Result<ConvergenceReport> {
    if seq.is_empty() {
        return Err(Error::Validation("sequence diagnostics need at least one step".into()));
    }
    let limit_mean = limit.mean()?;
    let curve = lorenz(limit)?;
    let summary = LimitSummary { mean: limit_mean, gini: indices::gini(limit)?, hoover: indices::hoover(limit)? };

    let jumps = limit.p_breakpoints();
    let weak_probes: Vec<f64> =
        default_weak_probes().into_iter().filter(|p| jumps.iter().all(|b| (b - p).abs() > 1e-12)).collect();
    let weak_values = weak_probes.iter().map(|&p| limit.q(p)).collect();
    let mut lorenz_probes = if options.probes.is_empty() { default_lorenz_probes() } else { options.probes.clone() };
    lorenz_probes.extend(curve.breakpoints());
    let alpha_grid = if options.alpha_grid.is_empty() {
        (0..=10).map(|j| limit_mean * 2f64.powi(j)).collect()
    } else {
        options.alpha_grid.clone()
    };
    let tails = alpha_grid.iter().map(|&a| tail_moment(limit, a)).collect();
    let lim = LimitData {
        dist: limit,
        curve,
        summary,
        weak_probes: weak_probes.clone(),
        weak_values,
        lorenz_probes,
        alpha_grid: alpha_grid.clone(),
        tails,
    };

    let steps = run_steps(seq, &lim, &options.parameters)?;

    let family_ui_tail = alpha_grid.iter().map(|&a| ui_tail(seq, a)).collect::<Result<Vec<_>>>()?;
    let tol = options.tolerances;
    let scale = limit_mean;
    let tail_start = steps.len() - steps.len().div_ceil(4);
    let last = &steps[tail_start..];
    let checks = Checks {
        w1_small: last.iter().all(|s| s.w1_to_limit <= tol.w1 * scale),
        weak_probes_pass: last.iter().all(|s| s.weak_error <= tol.weak),
        means_converge: last.iter().all(|s| (s.mean - limit_mean).abs() <= tol.mean * scale),
        tails_converge: last.iter().all(|s| s.ui_error <= tol.ui * scale),
    };
    let from = |moment_check: bool| match (checks.weak_probes_pass, moment_check) {
        (true, true) => Verdict::W1Convergent,
        (true, false) => Verdict::WeakOnly,
        (false, _) => Verdict::Divergent,
    };
    let verdict_from_means = from(checks.means_converge);
    let verdict_from_tails = from(checks.tails_converge);
    let (verdict, decided_by) = if checks.w1_small && checks.means_converge {
        (Verdict::W1Convergent, "w1 distance and means within tolerance")
    } else if checks.weak_probes_pass {
        (Verdict::WeakOnly, "quantile probes converge but w1 or means do not")
    } else {
        (Verdict::Divergent, "quantile probes do not converge")
    };
    Ok(ConvergenceReport {
        steps,
        limit_summary: summary,
        alpha_grid,
        weak_probes,
        family_ui_tail,
        tolerances: tol,
        checks,
        verdict,
        decided_by: decided_by.to_string(),
        verdict_from_means,
        verdict_from_tails,
        consistent: verdict == verdict_from_means && verdict == verdict_from_tails,
    })
}

// Steps are independent; evaluate them on scoped threads and keep index order.
fn run_steps(seq: &[Distribution], lim: &LimitData<'_>, params: &[BTreeMap<String, f64>]) -> Result<Vec<StepRecord>> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(seq.len()).max(1);
    let label = |i: usize| params.get(i).cloned().unwrap_or_default();
    if workers == 1 {
        return seq.iter().enumerate().map(|(i, d)| step_record(i + 1, d, lim, label(i))).collect();
    }
    let mut slots: Vec<Option<Result<StepRecord>>> = (0..seq.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunks: Vec<_> = slots
            .chunks_mut(seq.len().div_ceil(workers))
            .enumerate()
            .map(|(c, chunk)| {
                let start = c * seq.len().div_ceil(workers);
                let label = &label;
                scope.spawn(move || {
                    for (k, slot) in chunk.iter_mut().enumerate() {
                        let i = start + k;
                        *slot = Some(step_record(i + 1, &seq[i], lim, label(i)));
                    }
                })
            })
            .collect();
        for h in chunks {
            h.join().expect("diagnostic worker panicked");
        }
    });
    slots.into_iter().map(|s| s.expect("every step is evaluated")).collect()
}

/// Rebuilds the limit of a sequence from the pointwise limit `ℓ` of its
/// Lorenz curves and the limit `α` of its means.
///
/// The limit mean is `ℓ(1⁻)·α`. When the last grid point is `p = 1` its value
/// is read as `ℓ(1⁻)`; otherwise `ℓ(1⁻)` is extrapolated from the last segment.
/// A zero limit mean yields the point mass at 0.
pub fn limit_from_lorenz(grid: &CurveGrid, alpha: f64) -> Result<(Distribution, f64)> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("mean limit must be finite and nonnegative, got {alpha}")));
    }
    let (p, l) = (&grid.p, &grid.values);
    convex_slopes(p, l)?;
    let n = p.len();
    let left_limit = if p[n - 1] == 1.0 {
        l[n - 1]
    } else {
        let slope = (l[n - 1] - l[n - 2]) / (p[n - 1] - p[n - 2]);
        l[n - 1] + slope * (1.0 - p[n - 1])
    };
    let limit_mean = left_limit * alpha;
    if !(limit_mean > 0.0) || !(left_limit > 0.0) {
        return Ok((Distribution::atom(0.0)?, 0.0));
    }
    let mut ps = p.clone();
    let mut vs: Vec<f64> = l.iter().map(|v| v / left_limit).collect();
    if ps[n - 1] == 1.0 {
        vs[n - 1] = 1.0;
    } else {
        ps.push(1.0);
        vs.push(1.0);
    }
    vs[0] = 0.0;
    let shrunk = CurveGrid::new(ps, vs)?;
    Ok((reconstruct(&shrunk, limit_mean)?, limit_mean))
}
