//! `lorenz`: inequality indices, Lorenz curves and W₁ diagnostics from the command line.
//!
//! Exit codes: 0 on success, 1 on usage, parse or input errors, 2 when a
//! measure lies outside the finite-mean class or its mean diverges.

mod json;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lorenz_core::experiment::{run_experiment, run_scenario, ExperimentSpec};
use lorenz_core::indices::{extremal_bimodal, gini, gini_range_given_hoover, hoover, index_report};
use lorenz_core::lorenz::{kendall_points, lorenz, pseudo_lorenz};
use lorenz_core::numfmt::tsv;
use lorenz_core::wasserstein::{w1_routes, DiagnosticTolerances};
use lorenz_core::{parse_distribution, Distribution, Error};
use serde_json::json;

const AFTER_HELP: &str = "\
Distribution specs are either `file:<path>` (one nonnegative value per line,
first CSV field, `#` comments) or an expression:
  atom(x) | uniform(a,b) | lognormal(m,s) | gamma(k,theta) | exp(rate)
  | mix(w1*expr1, ..., wk*exprk)     weights sum to 1

Exit codes: 0 success, 1 usage or parse error, 2 infinite or undefined mean.";

#[derive(Parser, Debug)]
#[command(name = "lorenz", version, about = "Lorenz curves, Gini and Hoover indices, and W1 convergence diagnostics")]
#[command(after_help = AFTER_HELP)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Seed for experiments that draw samples (overrides the experiment file)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance for index cross-route checks and convergence diagnostics
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Emit JSON
    #[arg(long, global = true, conflicts_with = "tsv")]
    json: bool,
    /// Emit TSV
    #[arg(long, global = true)]
    tsv: bool,
    /// Write output to this path; `converge` writes `<path>.json` and `<path>.tsv`
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// All Gini and Hoover routes with their residuals (JSON by default)
    Index {
        /// Distribution spec
        spec: String,
    },
    /// Lorenz and pseudo-Lorenz values on a uniform grid (TSV by default)
    Lorenz {
        /// Distribution spec
        spec: String,
        /// Number of grid intervals
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(2..))]
        res: u32,
        /// Append the Kendall parametric points (F(t), share below t)
        #[arg(long)]
        kendall: bool,
    },
    /// Wasserstein-1 distance between two distributions
    W1 {
        /// First distribution spec
        a: String,
        /// Second distribution spec
        b: String,
        /// Print both integration routes
        #[arg(long)]
        verbose: bool,
    },
    /// Run convergence diagnostics from an experiment JSON file or a built-in scenario
    Converge {
        /// Experiment JSON path, or `counterexample1` / `counterexample2`
        target: String,
        /// Number of terms for built-in scenarios
        #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u32).range(1..))]
        steps: u32,
    },
    /// Attainable Gini range for a Hoover value, and the extremal measure
    Extremal {
        /// Hoover value in (0,1)
        #[arg(allow_negative_numbers = true)]
        h: f64,
        /// Mass of the lower atom of the extremal measure, in [h, 1)
        #[arg(long)]
        alpha: Option<f64>,
        /// Mean of the extremal measure
        #[arg(long, default_value_t = 1.0)]
        mean: f64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Format {
    Text,
    Json,
    Tsv,
}

impl Global {
    fn format(&self, default: Format) -> Format {
        if self.json {
            Format::Json
        } else if self.tsv {
            Format::Tsv
        } else {
            default
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(if e.is_mathematical() { 2 } else { 1 })
        }
    }
}

fn describe(e: &Error) -> String {
    match e {
        Error::Parse { position, message } => format!("parse error at position {position}: {message}"),
        other => other.to_string(),
    }
}

fn parse_spec(text: &str) -> Result<Distribution, Error> {
    parse_distribution(text).map_err(|e| match e {
        Error::Parse { position, message } => {
            Error::Parse { position, message: format!("{message}\n  {text}\n  {}^", " ".repeat(position)) }
        }
        other => other,
    })
}

fn emit(global: &Global, text: &str) -> Result<(), Error> {
    match &global.out {
        Some(path) => fs::write(path, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let g = &cli.global;
    if let Some(t) = g.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Validation(format!("--tol must be positive, got {t}")));
        }
    }
    match &cli.command {
        Command::Index { spec } => cmd_index(g, spec),
        Command::Lorenz { spec, res, kendall } => cmd_lorenz(g, spec, *res as usize, *kendall),
        Command::W1 { a, b, verbose } => cmd_w1(g, a, b, *verbose),
        Command::Converge { target, steps } => cmd_converge(g, target, *steps),
        Command::Extremal { h, alpha, mean } => cmd_extremal(g, *h, *alpha, *mean),
    }
}

fn cmd_index(g: &Global, spec: &str) -> Result<(), Error> {
    let d = parse_spec(spec)?;
    let mut report = index_report(&d)?;
    if let Some(t) = g.tol {
        report.tolerance = t;
    }
    if !report.within_tolerance() {
        eprintln!(
            "warning: cross-route residual {} exceeds tolerance {}",
            tsv(report.max_cross_route_residual),
            tsv(report.tolerance)
        );
    }
    let text = match g.format(Format::Json) {
        Format::Json => json::to_string(&report),
        _ => {
            let r = &report;
            let rows = [
                ("mean", r.mean),
                ("gini_mean_difference", r.gini_mean_difference),
                ("gini_dorfman", r.gini_dorfman),
                ("gini_lorenz", r.gini_lorenz),
                ("hoover_mean_deviation", r.hoover_mean_deviation),
                ("hoover_cdf", r.hoover_cdf),
                ("hoover_max", r.hoover_max),
                ("r_share", r.r_share),
                ("p_share", r.p_share),
                ("max_cross_route_residual", r.max_cross_route_residual),
                ("tolerance", r.tolerance),
            ];
            let mut out = String::from("key\tvalue\n");
            for (k, v) in rows {
                out.push_str(&format!("{k}\t{}\n", tsv(v)));
            }
            out.push_str(&format!("exact\t{}\n", r.exact));
            out
        }
    };
    emit(g, &text)
}

fn kendall_grid(d: &Distribution, res: usize) -> Vec<f64> {
    let top = d.tail_cutoff();
    let mut t: Vec<f64> = (0..=res).map(|k| top * k as f64 / res as f64).collect();
    t.extend(d.x_breakpoints().into_iter().filter(|x| *x <= top));
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

fn cmd_lorenz(g: &Global, spec: &str, res: usize, kendall: bool) -> Result<(), Error> {
    let d = parse_spec(spec)?;
    let curve = lorenz(&d)?;
    let grid = curve.grid(res);
    let lambda = grid.p.iter().map(|&p| pseudo_lorenz(&d, p)).collect::<Result<Vec<_>, _>>()?;
    let points = if kendall { Some(kendall_points(&d, &kendall_grid(&d, res))?) } else { None };
    let text = match g.format(Format::Tsv) {
        Format::Json => {
            let mut v = json!({
                "mean": curve.source_mean(),
                "p": grid.p,
                "L": grid.values,
                "Lambda": lambda,
            });
            if let Some(pts) = &points {
                v["kendall"] = json!(pts.iter().map(|(f, s)| json!({ "F": f, "share": s })).collect::<Vec<_>>());
            }
            json::to_string(&v)
        }
        _ => {
            let mut out = String::from("p\tL\tLambda\n");
            for ((p, l), lam) in grid.p.iter().zip(&grid.values).zip(&lambda) {
                out.push_str(&format!("{}\t{}\t{}\n", tsv(*p), tsv(*l), tsv(*lam)));
            }
            if let Some(pts) = &points {
                out.push_str("\nF\tshare\n");
                for (f, s) in pts {
                    out.push_str(&format!("{}\t{}\n", tsv(*f), tsv(*s)));
                }
            }
            out
        }
    };
    emit(g, &text)
}

fn cmd_w1(g: &Global, a: &str, b: &str, verbose: bool) -> Result<(), Error> {
    let da = parse_spec(a)?;
    let db = parse_spec(b)?;
    let routes = w1_routes(&da, &db)?;
    let text = match g.format(Format::Text) {
        Format::Json => json::to_string(&json!({
            "w1": routes.quantile,
            "quantile_route": routes.quantile,
            "cdf_route": routes.cdf,
            "exact": routes.exact,
        })),
        _ if verbose => format!(
            "w1\t{}\nquantile_route\t{}\ncdf_route\t{}\nexact\t{}\n",
            tsv(routes.quantile),
            tsv(routes.quantile),
            tsv(routes.cdf),
            routes.exact
        ),
        _ => format!("{}\n", tsv(routes.quantile)),
    };
    emit(g, &text)
}

fn cmd_converge(g: &Global, target: &str, steps: u32) -> Result<(), Error> {
    let tolerances = g.tol.map(DiagnosticTolerances::uniform).unwrap_or_default();
    let path = Path::new(target);
    let report = if path.is_file() {
        let mut spec = ExperimentSpec::from_json(&fs::read_to_string(path)?)?;
        if let Some(seed) = g.seed {
            spec.seed = seed;
        }
        run_experiment(&spec, tolerances)?
    } else if matches!(target, "counterexample1" | "counterexample2") {
        run_scenario(target, steps, tolerances)?
    } else {
        return Err(Error::Validation(format!("`{target}` is neither an experiment file nor a built-in scenario")));
    };

    let verdict = format!("verdict: {}\n", report.verdict.as_str());
    match &g.out {
        Some(out) => {
            let stem = match out.extension().and_then(|e| e.to_str()) {
                Some("json" | "tsv") => out.with_extension(""),
                _ => out.clone(),
            };
            fs::write(append_ext(&stem, "json"), json::to_string(&report))?;
            fs::write(append_ext(&stem, "tsv"), report.to_tsv())?;
            print!("{verdict}");
        }
        None => match g.format(Format::Tsv) {
            Format::Json => print!("{}", json::to_string(&report)),
            _ => print!("{}{verdict}", report.to_tsv()),
        },
    }
    Ok(())
}

fn append_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn cmd_extremal(g: &Global, h: f64, alpha: Option<f64>, mean: f64) -> Result<(), Error> {
    let range = gini_range_given_hoover(h)?;
    let extremal = match alpha {
        Some(a) => {
            let d = extremal_bimodal(h, mean, a)?;
            let (gv, hv) = (gini(&d)?, hoover(&d)?);
            Some((d, gv, hv))
        }
        None => None,
    };
    let bracket = if range.high_exclusive { ')' } else { ']' };
    let text = match g.format(Format::Text) {
        Format::Json => {
            let mut v = json!({ "low": range.low, "high": range.high, "high_exclusive": range.high_exclusive });
            if let Some((d, gv, hv)) = &extremal {
                v["extremal"] = json!({ "spec": d.to_string(), "gini": gv, "hoover": hv });
            }
            json::to_string(&v)
        }
        _ => {
            let mut out = format!("[{}, {}{bracket}\n", tsv(range.low), tsv(range.high));
            if let Some((d, gv, hv)) = &extremal {
                out.push_str(&format!("{d}\nG\t{}\nH\t{}\n", tsv(*gv), tsv(*hv)));
            }
            out
        }
    };
    emit(g, &text)
}
