//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::time::{Duration, Instant};

use lorenz_core::battery::battery;
use lorenz_core::estimators::{
    empirical, estimate_gini, estimate_hoover, estimate_lorenz_at, quantile_approx, SampleSet,
};
use lorenz_core::experiment::{build_sequence, counterexample2, run_scenario, ExperimentSpec};
use lorenz_core::indices::{
    extremal_bimodal, gini, gini_dorfman, gini_lorenz, gini_mean_difference, hoover, hoover_cdf, hoover_max,
    hoover_mean_deviation, index_report, three_group,
};
use lorenz_core::lorenz::{lorenz, lorenz_dominates, pseudo_lorenz, reconstruct};
use lorenz_core::wasserstein::{w1, w1_routes, Verdict};
use lorenz_core::{Component, Distribution};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(start: Instant, budget: Duration) -> Outcome {
    let spent = start.elapsed();
    check(spent < budget, || format!("took {spent:?}, budget {budget:?}"))
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn fig1() -> Distribution {
    Distribution::new(vec![(0.5, Component::Uniform { a: 0.0, b: 1.0 }), (0.5, Component::Atom(0.5))]).unwrap()
}

fn ac1() -> Outcome {
    let start = Instant::now();
    for alpha in [0.1, 0.25, 0.5, 0.9] {
        let d = Distribution::from_atoms(&[(0.0, alpha), (1.0, 1.0 - alpha)]).map_err(err)?;
        let routes = [
            ("gini_mean_difference", gini_mean_difference(&d)),
            ("gini_dorfman", gini_dorfman(&d)),
            ("gini_lorenz", gini_lorenz(&d)),
            ("hoover_mean_deviation", hoover_mean_deviation(&d)),
            ("hoover_cdf", hoover_cdf(&d)),
            ("hoover_max", hoover_max(&d)),
        ];
        for (name, v) in routes {
            let v = v.map_err(err)?;
            check((v - alpha).abs() <= 1e-10, || format!("{name} at alpha={alpha}: {v}"))?;
        }
    }
    within_time(start, Duration::from_secs(1))
}

fn ac2() -> Outcome {
    let start = Instant::now();
    let members = battery().map_err(err)?;
    check(members.len() == 20, || format!("battery has {} members", members.len()))?;
    let mut worst = (0.0f64, "");
    for m in &members {
        let r = index_report(&m.distribution).map_err(err)?;
        let tol = if r.exact { 1e-8 } else { 1e-4 };
        let g = [r.gini_mean_difference, r.gini_dorfman, r.gini_lorenz];
        let h = [r.hoover_mean_deviation, r.hoover_cdf, r.hoover_max];
        for set in [g, h] {
            for i in 0..3 {
                for j in i + 1..3 {
                    let res = (set[i] - set[j]).abs();
                    if res > worst.0 {
                        worst = (res, m.name);
                    }
                    check(res <= tol, || format!("{}: residual {res:e} above {tol:e}", m.name))?;
                }
            }
        }
    }
    println!("    worst route residual {:.3e} ({})", worst.0, worst.1);
    within_time(start, Duration::from_secs(30))
}

fn ac3() -> Outcome {
    let start = Instant::now();
    let d = fig1();
    let l = lorenz(&d).map_err(err)?;
    let values = [
        ("F(0.5)", d.cdf(0.5).map_err(err)?, 0.75),
        ("F(0.5-)", d.cdf_left(0.5), 0.25),
        ("Q(0.5)", d.quantile(0.5).map_err(err)?, 0.5),
        ("L(0.25)", l.eval(0.25), 0.125),
        ("L(0.75)", l.eval(0.75), 0.625),
        ("Lambda(0.25)", pseudo_lorenz(&d, 0.25).map_err(err)?, 0.625),
    ];
    for (name, got, want) in values {
        check((got - want).abs() <= 1e-9, || format!("{name} = {got}, expected {want}"))?;
    }
    within_time(start, Duration::from_secs(1))
}

fn ac4() -> Outcome {
    let start = Instant::now();
    for h in [0.1, 0.3, 0.5, 0.7] {
        for alpha in [h, (h + 1.0) / 2.0, 0.95] {
            let d = extremal_bimodal(h, 1.0, alpha).map_err(err)?;
            let (g, hv) = (gini(&d).map_err(err)?, hoover(&d).map_err(err)?);
            check((g - h).abs() <= 1e-8 && (hv - h).abs() <= 1e-8, || {
                format!("bimodal h={h} alpha={alpha}: G={g} H={hv}")
            })?;
            let t = three_group(h, alpha, 1.0).map_err(err)?;
            let want = h + alpha * h - h * h;
            let g3 = gini(&t).map_err(err)?;
            check((g3 - want).abs() <= 1e-8, || format!("three-group h={h} alpha={alpha}: G={g3}, want {want}"))?;
            let h3 = hoover(&t).map_err(err)?;
            check((h3 - h).abs() <= 1e-8, || format!("three-group h={h} alpha={alpha}: H={h3}"))?;
        }
    }
    // G stays strictly below the upper bound 2H - H² for every member.
    for m in battery().map_err(err)? {
        let (g, h) = (gini(&m.distribution).map_err(err)?, hoover(&m.distribution).map_err(err)?);
        check(g < 2.0 * h - h * h || h == 0.0 && g == 0.0, || format!("{}: G={g} reaches 2H-H² at H={h}", m.name))?;
        check(g >= h - 1e-8, || format!("{}: G={g} below H={h}", m.name))?;
    }
    within_time(start, Duration::from_secs(5))
}

/// Gini and Hoover of a finite atom list by direct double sum.
fn double_sum_oracle(atoms: &[(f64, f64)]) -> (f64, f64) {
    let m: f64 = atoms.iter().map(|(x, w)| x * w).sum();
    let mut md = 0.0;
    for (x, w) in atoms {
        for (y, v) in atoms {
            md += w * v * (x - y).abs();
        }
    }
    let dev: f64 = atoms.iter().map(|(x, w)| w * (x - m).abs()).sum();
    (md / (2.0 * m), dev / (2.0 * m))
}

/// The same values from the closed forms in `ε = 1/n²`, `N = n²`.
fn closed_form_oracle(n: u32) -> (f64, f64) {
    if n == 1 {
        return (0.5, 0.5);
    }
    let big = f64::from(n) * f64::from(n);
    let eps = 1.0 / big;
    let m = 1.5 - eps;
    let mean_diff = 2.0 * (0.5 * (0.5 - eps) + 0.5 * eps * big + (0.5 - eps) * eps * (big - 1.0));
    let mean_dev = 0.5 * m + (0.5 - eps) * (m - 1.0) + eps * (big - m);
    (mean_diff / (2.0 * m), mean_dev / (2.0 * m))
}

fn ac5() -> Outcome {
    let start = Instant::now();
    for n in 1..=200u32 {
        let big = f64::from(n) * f64::from(n);
        let atoms: Vec<(f64, f64)> = if n == 1 {
            vec![(0.0, 0.5), (1.0, 0.5)]
        } else {
            vec![(0.0, 0.5), (1.0, 0.5 - 1.0 / big), (big, 1.0 / big)]
        };
        let (gd, hd) = double_sum_oracle(&atoms);
        let (gc, hc) = closed_form_oracle(n);
        check((gd - gc).abs() <= 1e-12 && (hd - hc).abs() <= 1e-12, || format!("oracles disagree at n={n}"))?;
        let d = counterexample2(n).map_err(err)?;
        let (g, h) = (gini(&d).map_err(err)?, hoover(&d).map_err(err)?);
        check((g - gc).abs() <= 1e-10 && (h - hc).abs() <= 1e-10, || {
            format!("n={n}: G={g} H={h}, oracle G={gc} H={hc}")
        })?;
    }
    let report = run_scenario("counterexample2", 200, Default::default()).map_err(err)?;
    let last = report.final_step().ok_or("empty report")?;
    check((last.gini - 5.0 / 6.0).abs() <= 5e-3, || format!("G(200) = {}", last.gini))?;
    check((last.hoover - 2.0 / 3.0).abs() <= 5e-3, || format!("H(200) = {}", last.hoover))?;
    check(report.verdict == Verdict::WeakOnly, || format!("verdict {}", report.verdict.as_str()))?;
    within_time(start, Duration::from_secs(5))
}

fn ac6() -> Outcome {
    let start = Instant::now();
    for m in battery().map_err(err)? {
        let d = &m.distribution;
        let top = d.tail_cutoff().max(1e-3) * 1.05;
        let probes: Vec<f64> = (0..1024).map(|k| top * k as f64 / 1023.0).collect();
        for j in 0..=8 {
            let l = 1usize << j;
            let approx = quantile_approx(d, l).map_err(err)?;
            for &x in &probes {
                let gap = approx.cdf(x).map_err(err)? - d.cdf(x).map_err(err)?;
                check((0.0..=1.0 / l as f64).contains(&gap), || format!("{} l={l} x={x}: gap {gap:e}", m.name))?;
            }
        }
    }
    within_time(start, Duration::from_secs(10))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn ac7() -> Outcome {
    let start = Instant::now();
    // Monte Carlo confirmation of the uniform oracle values 1/3 and 1/4.
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let pairs = 1_000_000;
    let (mut diff, mut dev) = (0.0, 0.0);
    for _ in 0..pairs {
        let (u, v): (f64, f64) = (rng.random(), rng.random());
        diff += (u - v).abs();
        dev += (u - 0.5).abs();
    }
    let (g_mc, h_mc) = (diff / pairs as f64, dev / pairs as f64);
    check((g_mc - 1.0 / 3.0).abs() < 2e-3 && (h_mc - 0.25).abs() < 2e-3, || {
        format!("Monte Carlo oracle G={g_mc} H={h_mc}")
    })?;

    let u = Distribution::uniform(0.0, 1.0).map_err(err)?;
    let mut g_err = Vec::new();
    let mut h_err = Vec::new();
    for seed in 0..20u64 {
        let s = SampleSet::synthetic(&u, seed, 10_000).map_err(err)?;
        g_err.push((estimate_gini(&s).map_err(err)? - 1.0 / 3.0).abs());
        h_err.push((estimate_hoover(&s).map_err(err)? - 0.25).abs());
    }
    let (gm, hm) = (median(g_err), median(h_err));
    check(gm < 0.01 && hm < 0.01, || format!("median errors G {gm} H {hm}"))?;

    let spec = ExperimentSpec::from_json(
        r#"{"scheme":"kde","source":"uniform(0,1)","kernel":"gaussian","seed":7,
            "schedule":{"n":[100,1000,10000],"h":[0.2,0.05,0.01]}}"#,
    )
    .map_err(err)?;
    let built = build_sequence(&spec).map_err(err)?;
    let dists = built.steps.iter().map(|s| w1(s, &built.limit)).collect::<Result<Vec<_>, _>>().map_err(err)?;
    println!("    kde W1 trace {:?}", dists.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>());
    check(dists.windows(2).all(|w| w[1] < w[0]), || format!("W1 not strictly decreasing: {dists:?}"))?;
    within_time(start, Duration::from_secs(60))
}

fn ac8() -> Outcome {
    let start = Instant::now();
    for m in battery().map_err(err)? {
        let d = &m.distribution;
        let mean = d.mean().map_err(err)?;
        let grid = lorenz(d).map_err(err)?.grid(4096);
        let back = reconstruct(&grid, mean).map_err(err)?;
        let dist = w1(&back, d).map_err(err)?;
        let bound = if m.dyadic { 1e-12 } else { 1e-3 };
        check(dist <= bound, || format!("{}: W1 {dist:e} above {bound:e}", m.name))?;
    }
    within_time(start, Duration::from_secs(30))
}

fn arb_atoms() -> impl Strategy<Value = Distribution> {
    prop::collection::vec((0.0f64..10.0, 0.05f64..1.0), 1..8).prop_map(|raw| {
        let total: f64 = raw.iter().map(|r| r.1).sum();
        let atoms: Vec<(f64, f64)> = raw.iter().map(|(x, w)| (*x, w / total)).collect();
        let d = Distribution::from_atoms(&atoms).unwrap();
        if d.mean().is_ok() {
            d
        } else {
            Distribution::atom(1.0).unwrap()
        }
    })
}

fn arb_smooth() -> impl Strategy<Value = Component> {
    prop_oneof![
        (0.0f64..3.0, 0.1f64..3.0).prop_map(|(a, w)| Component::Uniform { a, b: a + w }),
        (0.2f64..4.0).prop_map(|rate| Component::Exponential { rate }),
        (0.5f64..4.0, 0.2f64..2.0).prop_map(|(shape, scale)| Component::Gamma { shape, scale }),
        (-1.0f64..1.0, 0.1f64..0.8).prop_map(|(log_mean, log_sd)| Component::Lognormal { log_mean, log_sd }),
    ]
}

fn arb_mixed() -> impl Strategy<Value = Distribution> {
    (arb_smooth(), prop::collection::vec((0.0f64..5.0, 0.05f64..1.0), 0..3), 0.2f64..1.0).prop_map(
        |(smooth, atoms, share)| {
            let total: f64 = atoms.iter().map(|a| a.1).sum();
            let share = if atoms.is_empty() { 1.0 } else { share };
            let mut parts = vec![(share, smooth)];
            parts.extend(atoms.iter().map(|(x, w)| ((1.0 - share) * w / total, Component::Atom(*x))));
            Distribution::new(parts).unwrap()
        },
    )
}

/// Atoms and uniform pieces: every CDF evaluation is monotone in floating point.
fn arb_piecewise_linear() -> impl Strategy<Value = Distribution> {
    (prop::collection::vec((0.0f64..4.0, 0.01f64..3.0, 0.05f64..1.0), 1..4), arb_atoms(), 0.0f64..1.0).prop_map(
        |(pieces, atoms, share)| {
            let total: f64 = pieces.iter().map(|p| p.2).sum();
            let mut parts: Vec<(f64, Component)> =
                pieces.iter().map(|(a, w, m)| (share * m / total, Component::Uniform { a: *a, b: a + w })).collect();
            parts.extend(atoms.atoms().into_iter().map(|(x, w)| ((1.0 - share) * w, Component::Atom(x))));
            parts.retain(|(w, _)| *w > 0.0);
            Distribution::new(parts).unwrap()
        },
    )
}

fn float_monotone(d: &Distribution) -> bool {
    d.components().iter().all(|(_, c)| matches!(c, Component::Atom(_) | Component::Uniform { .. }))
}

const GALOIS_SLACK: f64 = 1e-14;

fn arb_dist() -> impl Strategy<Value = Distribution> {
    prop_oneof![arb_atoms(), arb_mixed()]
}

fn tol_for(d: &Distribution) -> f64 {
    if d.is_finite_discrete() {
        1e-8
    } else {
        1e-4
    }
}

fn run_suite<S: Strategy>(name: &str, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Outcome {
    let mut runner = TestRunner::new(Config { cases: 256, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

fn ac9() -> Outcome {
    let start = Instant::now();
    let p = |e: lorenz_core::Error| TestCaseError::fail(e.to_string());

    // Exact for CDFs built from float-monotone arithmetic (atoms, uniforms).
    // Special-function CDFs wobble by a few ulps, so there the level is
    // moved off the crossing by GALOIS_SLACK.
    run_suite(
        "galois",
        (prop_oneof![arb_atoms(), arb_piecewise_linear(), arb_mixed()], 0.0f64..1.0, 0.0f64..12.0),
        |(d, u, x)| {
            let slack = if float_monotone(&d) { 0.0 } else { GALOIS_SLACK };
            let q = d.quantile(u).map_err(p)?;
            let f = d.cdf(x).map_err(p)?;
            if q <= x {
                prop_assert!(u <= f + slack, "Q({}) = {} <= {} but F = {}", u, q, x, f);
            }
            if u + slack <= f {
                prop_assert!(q <= x, "{} <= F({}) = {} but Q = {}", u, x, f, q);
            }
            prop_assert!(d.cdf(q).map_err(p)? >= u);
            if f - slack >= 0.0 && f < 1.0 {
                prop_assert!(d.quantile(f - slack).map_err(p)? <= x);
            }
            Ok(())
        },
    )?;

    run_suite("hoover_below_gini", arb_dist(), |d| {
        let (g, h) = (gini(&d).map_err(p)?, hoover(&d).map_err(p)?);
        prop_assert!(h <= g + 1e-8, "H={} G={}", h, g);
        Ok(())
    })?;

    run_suite("scale_invariance", (arb_dist(), 0.01f64..100.0), |(d, a)| {
        let s = d.rescale(a).map_err(p)?;
        let tol = tol_for(&d);
        prop_assert!((gini(&d).map_err(p)? - gini(&s).map_err(p)?).abs() <= tol);
        prop_assert!((hoover(&d).map_err(p)? - hoover(&s).map_err(p)?).abs() <= tol);
        let (l1, l2) = (lorenz(&d).map_err(p)?, lorenz(&s).map_err(p)?);
        for k in 0..=16 {
            let t = k as f64 / 16.0;
            prop_assert!((l1.eval(t) - l2.eval(t)).abs() <= tol);
        }
        Ok(())
    })?;

    // Shrinking atoms toward the mean, x -> (1-t)m + t x, gives a pointwise higher Lorenz curve.
    run_suite("lorenz_domination_monotone", (arb_atoms(), 0.0f64..1.0, arb_dist()), |(d, t, other)| {
        let m = d.mean().map_err(p)?;
        let shrunk: Vec<(f64, f64)> = d.atoms().iter().map(|(x, w)| ((1.0 - t) * m + t * x, *w)).collect();
        let e = Distribution::from_atoms(&shrunk).map_err(p)?;
        prop_assert!(lorenz_dominates(&d, &e, 256).map_err(p)?);
        prop_assert!(gini(&e).map_err(p)? <= gini(&d).map_err(p)? + 1e-12);
        prop_assert!(hoover(&e).map_err(p)? <= hoover(&d).map_err(p)? + 1e-12);
        if lorenz_dominates(&d, &other, 256).map_err(p)? {
            let tol = tol_for(&other);
            prop_assert!(gini(&other).map_err(p)? <= gini(&d).map_err(p)? + tol);
            prop_assert!(hoover(&other).map_err(p)? <= hoover(&d).map_err(p)? + tol);
        }
        Ok(())
    })?;

    run_suite("w1_triangle", (arb_dist(), arb_dist(), arb_dist()), |(a, b, c)| {
        let ab = w1(&a, &b).map_err(p)?;
        let bc = w1(&b, &c).map_err(p)?;
        let ac = w1(&a, &c).map_err(p)?;
        let slack = if [&a, &b, &c].iter().all(|d| d.is_finite_discrete()) { 1e-10 } else { 1e-6 };
        prop_assert!(ac <= ab + bc + slack, "{} > {} + {}", ac, ab, bc);
        prop_assert_eq!(ab, w1(&b, &a).map_err(p)?);
        Ok(())
    })?;

    run_suite("w1_dual_routes", (arb_dist(), arb_dist()), |(a, b)| {
        let r = w1_routes(&a, &b).map_err(p)?;
        let tol = if r.exact { 1e-8 } else { 1e-4 };
        prop_assert!(r.residual() <= tol, "quantile {} cdf {}", r.quantile, r.cdf);
        Ok(())
    })?;

    run_suite("estimator_coherence", (prop::collection::vec(0.0f64..50.0, 1..60), 0.0f64..=1.0), |(values, x)| {
        let s = SampleSet::from_values(values).map_err(p)?;
        if s.values().iter().sum::<f64>() <= 0.0 {
            return Ok(());
        }
        let d = empirical(&s).map_err(p)?;
        let (ge, gm) = (estimate_gini(&s).map_err(p)?, gini(&d).map_err(p)?);
        let (he, hm) = (estimate_hoover(&s).map_err(p)?, hoover(&d).map_err(p)?);
        prop_assert!((ge - gm).abs() <= 1e-12, "gini {} vs {}", ge, gm);
        prop_assert!((he - hm).abs() <= 1e-12, "hoover {} vs {}", he, hm);
        let (le, lm) = (estimate_lorenz_at(&s, x).map_err(p)?, lorenz(&d).map_err(p)?.eval(x));
        prop_assert!((le - lm).abs() <= 1e-12, "lorenz at {}: {} vs {}", x, le, lm);
        Ok(())
    })?;

    within_time(start, Duration::from_secs(120))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 two-point family exactness", ac1),
        ("2 cross-route equivalence battery", ac2),
        ("3 atom-plus-uniform golden values", ac3),
        ("4 extremal sweep", ac4),
        ("5 counterexample limits", ac5),
        ("6 quantile-approximation bound", ac6),
        ("7 sampling and kde consistency", ac7),
        ("8 bijection round trip", ac8),
        ("9 property suites", ac9),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("[PASS] criterion {name} ({secs:.2}s)"),
            Err(e) => {
                failed += 1;
                println!("[FAIL] criterion {name} ({secs:.2}s): {e}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
