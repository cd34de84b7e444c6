//! Globally adaptive Gauss-Kronrod (7/15) integration with forced breakpoints.
//!
//! The integrand is only ever sampled at interior Kronrod nodes, so jumps
//! placed exactly on a breakpoint are never evaluated.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::tolerances;

// Kronrod abscissae on [-1, 1], nonnegative half, outermost first.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights attached to XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// The 15 Kronrod nodes and weights mapped onto [0, 1].
pub fn kronrod_unit_rule() -> [(f64, f64); 15] {
    let mut out = [(0.0, 0.0); 15];
    for j in 0..7 {
        out[j] = (0.5 * (1.0 - XGK[j]), 0.5 * WGK[j]);
        out[14 - j] = (0.5 * (1.0 + XGK[j]), 0.5 * WGK[j]);
    }
    out[7] = (0.5, 0.5 * WGK[7]);
    out
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
    pub converged: bool,
}

/// One final subinterval with its local integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub value: f64,
    pub error: f64,
}

/// Integrator settings.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Subdivisions allowed on top of the ones forced by breakpoints.
    pub max_subdivisions: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { abs_tol: tolerances::QUADRATURE_ABS, rel_tol: 1e-12, max_subdivisions: 2000 }
    }
}

struct Pending(Panel);

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.0.error == other.0.error
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.error.total_cmp(&other.0.error)
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let value = resk * half;
    resabs *= half.abs();
    resasc *= half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Panel { a, b, value, error: err }
}

fn splittable(a: f64, b: f64) -> bool {
    let mid = 0.5 * (a + b);
    mid > a && mid < b && (b - a) > 64.0 * f64::EPSILON * a.abs().max(b.abs())
}

impl Quadrature {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        Quadrature { abs_tol, ..Quadrature::default() }
    }

    /// Integrates `f` over `[a, b]`, splitting at every breakpoint inside.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, f: F, a: f64, b: f64, breakpoints: &[f64]) -> QuadEstimate {
        self.integrate_panels(f, a, b, breakpoints).0
    }

    /// Like [`Quadrature::integrate`] but also returns the final partition,
    /// sorted by left endpoint.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(
        &self,
        mut f: F,
        a: f64,
        b: f64,
        breakpoints: &[f64],
    ) -> (QuadEstimate, Vec<Panel>) {
        if !(b > a) {
            let est = QuadEstimate { value: 0.0, error: 0.0, intervals: 0, converged: true };
            return (est, Vec::new());
        }
        let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&x| x > a && x < b).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut edges = Vec::with_capacity(cuts.len() + 2);
        edges.push(a);
        edges.extend(cuts);
        edges.push(b);

        let mut heap = BinaryHeap::new();
        let mut frozen = Vec::new();
        let mut total = 0.0;
        let mut total_err = 0.0;
        for w in edges.windows(2) {
            if w[1] > w[0] {
                let p = gk15(&mut f, w[0], w[1]);
                total += p.value;
                total_err += p.error;
                heap.push(Pending(p));
            }
        }

        let mut splits = 0;
        loop {
            let target = self.abs_tol.max(self.rel_tol * total.abs());
            if total_err <= target || splits >= self.max_subdivisions {
                break;
            }
            let Some(Pending(worst)) = heap.pop() else { break };
            if !splittable(worst.a, worst.b) {
                frozen.push(worst);
                continue;
            }
            let mid = 0.5 * (worst.a + worst.b);
            let left = gk15(&mut f, worst.a, mid);
            let right = gk15(&mut f, mid, worst.b);
            total += left.value + right.value - worst.value;
            total_err += left.error + right.error - worst.error;
            heap.push(Pending(left));
            heap.push(Pending(right));
            splits += 1;
        }

        let mut panels: Vec<Panel> = heap.into_iter().map(|p| p.0).chain(frozen).collect();
        panels.sort_by(|x, y| x.a.total_cmp(&y.a));
        // Re-sum in order so the result does not depend on the refinement history.
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        let converged = error <= self.abs_tol.max(self.rel_tol * value.abs()) * 1.000_001;
        let est = QuadEstimate { value, error, intervals: panels.len(), converged };
        (est, panels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let q = Quadrature::default();
        let est = q.integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, &[]);
        assert!((est.value - 0.0).abs() < 1e-14);
        assert!(est.converged);
    }

    #[test]
    fn step_function_with_breakpoint_is_exact() {
        let q = Quadrature::default();
        let est = q.integrate(|x| if x <= 0.3 { 1.0 } else { 5.0 }, 0.0, 1.0, &[0.3]);
        assert!((est.value - (0.3 + 3.5)).abs() < 1e-13);
    }

    #[test]
    fn kink_without_breakpoint_still_converges() {
        let q = Quadrature::default();
        let est = q.integrate(|x: f64| (x - 0.3137).abs(), 0.0, 1.0, &[]);
        let exact = 0.5 * 0.3137f64.powi(2) + 0.5 * (1.0 - 0.3137f64).powi(2);
        assert!((est.value - exact).abs() < 1e-10, "{est:?}");
    }

    #[test]
    fn smooth_transcendental() {
        let q = Quadrature::default();
        let est = q.integrate(|x: f64| (-x).exp(), 0.0, 40.0, &[]);
        assert!((est.value - (1.0 - (-40.0f64).exp())).abs() < 1e-10);
    }

    #[test]
    fn unit_rule_weights_sum_to_one() {
        let s: f64 = kronrod_unit_rule().iter().map(|&(_, w)| w).sum();
        assert!((s - 1.0).abs() < 1e-15);
        let m: f64 = kronrod_unit_rule().iter().map(|&(x, w)| x * w).sum();
        assert!((m - 0.5).abs() < 1e-15);
    }

    #[test]
    fn panels_partition_the_domain() {
        let q = Quadrature::default();
        let (_, panels) = q.integrate_panels(|x: f64| x.sqrt(), 0.0, 1.0, &[0.5]);
        assert_eq!(panels.first().unwrap().a, 0.0);
        assert_eq!(panels.last().unwrap().b, 1.0);
        for w in panels.windows(2) {
            assert_eq!(w[0].b, w[1].a);
        }
    }
}
