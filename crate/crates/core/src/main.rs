use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use warpcheck::cli::report::{diff, RunReport};
use warpcheck::cli::specfile::{load_spec, LoadedSpec};
use warpcheck::cli::suite::{exit_code, parse_tolerance, run_suite, Suite, SuiteOptions};
use warpcheck::cli::fixtures;
use warpcheck::geodesic::{integrate, GeodesicState};
use warpcheck::product::{build_contactization, ContactizationSpec};
use warpcheck::tensor::ChartedManifold;

#[derive(Parser)]
#[command(name = "warpcheck", version, about = "Numerical verification of contact, Sasakian and warped-product structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a check suite and write the JSON report.
    Verify {
        /// Spec files or bundled fixture names; all bundled fixtures when omitted.
        #[arg(long = "spec")]
        specs: Vec<String>,
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Tolerance override `name=value`; `name` is a check name or a prefix of one.
        #[arg(long = "tol", value_parser = parse_tolerance)]
        tolerances: Vec<(String, f64)>,
        #[arg(long, allow_negative_numbers = true)]
        alpha: Option<f64>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the nonzero Christoffel symbols at a point.
    Christoffel {
        spec: String,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        point: Vec<f64>,
        /// Use the contactization of the (Kaehler) spec instead.
        #[arg(long)]
        contactization: bool,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        alpha: f64,
    },
    /// Integrate a geodesic with RK4.
    Geodesic {
        spec: String,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        p0: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        v0: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// SVG of the projection to the first two coordinates.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Compare two run reports.
    Report {
        #[arg(long, num_args = 2, value_names = ["A", "B"], required = true)]
        diff: Vec<PathBuf>,
    },
}

const USAGE: u8 = 2;

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(USAGE)
}

/// A path if it exists, otherwise a bundled fixture name.
fn resolve_spec(arg: &str) -> Result<LoadedSpec, String> {
    if Path::new(arg).exists() {
        load_spec(arg).map_err(|e| e.to_string())
    } else if fixtures::source(arg).is_some() {
        fixtures::load(arg).map_err(|e| e.to_string())
    } else {
        Err(format!("{arg}: no such file or bundled fixture"))
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify { specs, suite, seed, samples, tolerances, alpha, jobs, out } => {
            let specs = match specs.iter().map(|s| resolve_spec(s)).collect::<Result<Vec<_>, _>>() {
                Ok(s) => s,
                Err(e) => return usage(e),
            };
            let opts = SuiteOptions {
                suite,
                seed,
                samples,
                tolerances: tolerances.into_iter().collect(),
                alpha,
                jobs,
                specs,
            };
            let report = match run_suite(&opts) {
                Ok(r) => r,
                Err(e) => return usage(e),
            };
            if let Err(e) = write_or_print(out.as_deref(), &report.to_json()) {
                return usage(e);
            }
            let s = &report.summary;
            eprintln!(
                "{} checks: {} pass, {} fail, {} erratum candidates, {} hard failures; {} errata entries",
                s.total,
                s.pass,
                s.fail,
                s.erratum_candidates,
                s.hard_failures,
                report.errata.len()
            );
            for c in report.hard_failures() {
                eprintln!("hard failure: {} (max residual {:e}, tolerance {:e})", c.name, c.max_residual, c.tolerance);
            }
            ExitCode::from(exit_code(&report) as u8)
        }
        Command::Christoffel { spec, point, contactization, alpha } => {
            let spec = match resolve_spec(&spec) {
                Ok(s) => s,
                Err(e) => return usage(e),
            };
            let built;
            let m: &ChartedManifold = if contactization {
                let Some(base) = spec.complex() else {
                    return usage("--contactization needs a spec with an almost complex structure");
                };
                let c = &spec.file.constants;
                let coord = c.fiber_coord.clone().unwrap_or_else(|| "t".into());
                let cs = match ContactizationSpec::new(base.clone(), alpha, &coord, c.fiber_box.unwrap_or([0.0, std::f64::consts::TAU])) {
                    Ok(cs) => cs,
                    Err(e) => return usage(e),
                };
                built = match build_contactization(&cs) {
                    Ok(p) => p,
                    Err(e) => return usage(e),
                };
                built.manifold()
            } else {
                &spec.manifold
            };
            if point.len() != m.dim() {
                return usage(format!("--point has {} components, chart {} has dimension {}", point.len(), m.name(), m.dim()));
            }
            let gamma = match m.christoffel(&point) {
                Ok(g) => g,
                Err(e) => return usage(e),
            };
            let c = m.coords();
            println!("chart {} at {:?}", m.name(), point);
            for k in 0..m.dim() {
                for i in 0..m.dim() {
                    for j in i..m.dim() {
                        let v = gamma.get(k, i, j);
                        if v.abs() > 1e-14 {
                            println!("Gamma^{}_{{{} {}}} = {v:.15e}", c[k], c[i], c[j]);
                        }
                    }
                }
            }
            ExitCode::SUCCESS
        }
        Command::Geodesic { spec, p0, v0, t, step, csv, plot } => {
            let spec = match resolve_spec(&spec) {
                Ok(s) => s,
                Err(e) => return usage(e),
            };
            let m = &spec.manifold;
            let traj = match integrate(m, &GeodesicState::new(p0, v0), t, step) {
                Ok(tr) => tr,
                Err(e) => return usage(e),
            };
            let drift = match traj.max_speed_drift(m) {
                Ok(d) => d,
                Err(e) => return usage(e),
            };
            let last = traj.last();
            println!("integrator rk4, step {step}, {} states", traj.len());
            println!("final t = {}", traj.times.last().unwrap());
            println!("final point = {:?}", last.point);
            println!("final velocity = {:?}", last.velocity);
            println!("max relative speed drift = {drift:e}");
            if let Some(l) = &traj.left_domain {
                println!("left the chart box at t = {} near {:?}", l.time, l.point);
            }
            if let Some(p) = csv {
                let text = match traj.to_csv(m) {
                    Ok(s) => s,
                    Err(e) => return usage(e),
                };
                if let Err(e) = write_or_print(Some(&p), &text) {
                    return usage(e);
                }
            }
            if let Some(p) = plot {
                if m.dim() < 2 {
                    return usage("--plot needs at least two coordinates");
                }
                if let Err(e) = write_or_print(Some(&p), &traj.to_svg(m, 0, 1)) {
                    return usage(e);
                }
            }
            ExitCode::SUCCESS
        }
        Command::Report { diff: paths } => {
            let mut reports = Vec::new();
            for p in &paths {
                let text = match std::fs::read_to_string(p) {
                    Ok(t) => t,
                    Err(e) => return usage(format!("{}: {e}", p.display())),
                };
                match RunReport::from_json(&text) {
                    Ok(r) => reports.push(r),
                    Err(e) => return usage(format!("{}: {e}", p.display())),
                }
            }
            let entries = diff(&reports[0], &reports[1]);
            if entries.is_empty() {
                println!("reports are identical in every check");
            }
            for e in &entries {
                println!("{e}");
            }
            if entries.iter().any(|e| e.is_outcome()) {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
