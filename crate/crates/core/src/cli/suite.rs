//! Suite composition: which checks run on which fixtures, with what seeds,
//! sample counts and expectations.

use super::fixtures;
use super::report::{build_run_report, RunReport};
use super::specfile::{LoadedSpec, SpecError};
use crate::geodesic::{
    integrate, product_geodesic_check, GeodesicError, GeodesicState, ProductGeodesicReport,
};
use crate::product::{
    alpha_sasakian_probe, base_connection_check, build_contactization, christoffel_table_check,
    example_metric_matrix, fiber_parse_check, frame_connection_check, fundamental_form_lift_check,
    mixed_connection_check, printed_metric_inverse, printed_metric_matrix, split_identity_check,
    ContactizationSpec, ProductError, WarpedProduct, WarpedProductSpec,
};
use crate::structures::samples::{mix_seed, name_hash};
use crate::structures::{
    check_almost_contact, check_alpha_sasakian, check_coefficient_pdes, check_connection_oracle,
    check_contact_metric, check_contact_proportionality, check_exact_potential, check_hermitian,
    check_k_contact, check_kaehler, check_metric_compatibility, AlmostComplexStructure,
    AlmostContactStructure, CheckReport, Expectation, JConvention, Residuals, Samples, StructureError,
    ALGEBRAIC_TOL, CONNECTION_TOL, INTEGRATED_TOL,
};
use crate::expr::{parse, Expr};
use crate::tensor::{ChartedManifold, DConvention, EndoField, GeometryError, OneFormField, ScalarField, VectorField};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum Suite {
    Axioms,
    Contactization,
    Warped,
    Geodesic,
    All,
}

impl Suite {
    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Axioms => "axioms",
            Suite::Contactization => "contactization",
            Suite::Warped => "warped",
            Suite::Geodesic => "geodesic",
            Suite::All => "all",
        }
    }

    fn includes(self, part: Suite) -> bool {
        self == Suite::All || self == part
    }
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("cannot build thread pool: {0}")]
    Pool(String),
}

/// Any failure inside a check; reported as a failed check, never aborting.
#[derive(Debug, Error)]
enum CheckError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Product(#[from] ProductError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub suite: Suite,
    pub seed: u64,
    /// Sample points for pointwise checks; closed-form product checks use a
    /// fifth of this (at least 4).
    pub samples: usize,
    /// Per-check tolerance overrides, keyed by full check name or by a
    /// name prefix ending at a `/`.
    pub tolerances: BTreeMap<String, f64>,
    /// Restricts the contactization to this α and sets `a` of the warped
    /// product and product geodesics.
    pub alpha: Option<f64>,
    pub jobs: Option<usize>,
    /// User specs; the bundled fixtures are used when empty.
    pub specs: Vec<LoadedSpec>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            suite: Suite::All,
            seed: 42,
            samples: 100,
            tolerances: BTreeMap::new(),
            alpha: None,
            jobs: None,
            specs: Vec::new(),
        }
    }
}

/// Parses `name=value`.
pub fn parse_tolerance(arg: &str) -> Result<(String, f64), String> {
    let (name, value) = arg.split_once('=').ok_or_else(|| format!("expected name=value, got {arg:?}"))?;
    let v: f64 = value.trim().parse().map_err(|_| format!("not a number: {value:?}"))?;
    if !(v >= 0.0 && v.is_finite()) {
        return Err(format!("tolerance must be finite and nonnegative, got {v}"));
    }
    Ok((name.trim().to_string(), v))
}

type Job = Box<dyn FnOnce() -> Result<Vec<CheckReport>, CheckError> + Send>;

struct Plan {
    seed: u64,
    jobs: Vec<(String, Job)>,
}

impl Plan {
    fn seed_for(&self, name: &str) -> u64 {
        mix_seed(self.seed, name_hash(name))
    }

    fn add<F>(&mut self, name: String, f: F)
    where
        F: FnOnce(u64) -> Result<Vec<CheckReport>, CheckError> + Send + 'static,
    {
        let seed = self.seed_for(&name);
        self.jobs.push((name, Box::new(move || f(seed))));
    }
}

fn renamed(r: CheckReport, name: impl Into<String>) -> CheckReport {
    CheckReport { name: name.into(), ..r }
}

/// Replaces the leading path component `from` of a check name with `to`.
fn reprefix(r: CheckReport, from: &str, to: &str) -> CheckReport {
    let name = match r.name.strip_prefix(from) {
        Some(rest) => format!("{to}{rest}"),
        None => format!("{to}/{}", r.name),
    };
    renamed(r, name)
}

fn error_report(job: &str, e: &dyn std::fmt::Display, seed: u64) -> CheckReport {
    let mut r = Residuals::new();
    r.push(f64::INFINITY);
    CheckReport::new(format!("{job}/error"), &r, 0.0, seed).with_note(e.to_string())
}

fn small(samples: usize) -> usize {
    (samples / 5).max(4)
}

fn apply_tolerances(mut reports: Vec<CheckReport>, tols: &BTreeMap<String, f64>) -> Vec<CheckReport> {
    if tols.is_empty() {
        return reports;
    }
    for r in reports.iter_mut() {
        // the longest matching key wins
        let best = tols
            .iter()
            .filter(|(k, _)| r.name == **k || r.name.starts_with(&format!("{}/", k.trim_end_matches('/'))))
            .max_by_key(|(k, _)| k.len());
        if let Some((k, v)) = best {
            *r = r.clone().with_tolerance(*v).with_note(format!("tolerance overridden by {k}={v}"));
        }
    }
    reports
}

/// Runs the selected suite and assembles the report. Individual check errors
/// become failed reports; only invalid options are returned as errors.
pub fn run_suite(opts: &SuiteOptions) -> Result<RunReport, SuiteError> {
    if let Some(a) = opts.alpha {
        if a == 0.0 || !a.is_finite() {
            return Err(SuiteError::InvalidOption(format!("alpha must be finite and nonzero, got {a}")));
        }
    }
    if opts.samples == 0 {
        return Err(SuiteError::InvalidOption("samples must be positive".into()));
    }
    let specs: Vec<LoadedSpec> = if opts.specs.is_empty() {
        fixtures::ALL.iter().map(|(n, _)| fixtures::load(n)).collect::<Result<_, _>>()?
    } else {
        opts.specs.clone()
    };
    let mut plan = Plan { seed: opts.seed, jobs: Vec::new() };
    if opts.suite.includes(Suite::Axioms) {
        plan_axioms(&mut plan, &specs, opts.samples);
    }
    if opts.suite.includes(Suite::Contactization) {
        plan_contactization(&mut plan, &specs, opts);
    }
    if opts.suite.includes(Suite::Warped) {
        plan_warped(&mut plan, &specs, opts)?;
    }
    if opts.suite.includes(Suite::Geodesic) {
        plan_geodesic(&mut plan, opts);
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| SuiteError::Pool(e.to_string()))?;
    let jobs = std::mem::take(&mut plan.jobs);
    let seeds: Vec<u64> = jobs.iter().map(|(n, _)| plan.seed_for(n)).collect();
    let results: Vec<Vec<CheckReport>> = pool.install(|| {
        jobs.into_par_iter()
            .zip(seeds)
            .map(|((name, job), seed)| match job() {
                Ok(r) => r,
                Err(e) => vec![error_report(&name, &e, seed)],
            })
            .collect()
    });
    let reports = apply_tolerances(results.into_iter().flatten().collect(), &opts.tolerances);
    Ok(build_run_report(opts, &specs, reports))
}

fn expectation_for(spec: &LoadedSpec, check: &str) -> Expectation {
    if spec.expected_failures.iter().any(|c| c == check) {
        Expectation::Fail
    } else if spec.file.expect_fail {
        Expectation::Probe
    } else {
        Expectation::Pass
    }
}

fn plan_axioms(plan: &mut Plan, specs: &[LoadedSpec], samples: usize) {
    for spec in specs {
        let name = spec.file.name.clone();
        let m = spec.manifold.clone();
        plan.add(format!("oracle/{name}"), move |seed| {
            Ok(check_connection_oracle(&m, &Samples::generate(&m, seed, samples))?.to_vec())
        });
        if let Some(s) = spec.contact() {
            let (s, spec_c) = (s.clone(), spec.clone());
            let prefix = format!("axioms/{name}");
            plan.add(prefix.clone(), move |seed| contact_axioms(&spec_c, &s, &prefix, seed, samples));
            if !spec.file.expect_fail {
                let s = spec.contact().unwrap().clone();
                let (prefix, alpha) = (format!("axioms/{name}/negative"), spec.alpha());
                let conv = spec.file.conventions.d;
                plan.add(prefix.clone(), move |seed| contact_negatives(&s, alpha, conv, &prefix, seed, samples));
            }
        }
        if let Some(a) = spec.complex() {
            let (a, spec_c) = (a.clone(), spec.clone());
            let prefix = format!("axioms/{name}");
            plan.add(prefix.clone(), move |seed| complex_axioms(&spec_c, &a, &prefix, seed, samples));
        }
    }
}

fn contact_axioms(
    spec: &LoadedSpec,
    s: &AlmostContactStructure,
    prefix: &str,
    seed: u64,
    samples: usize,
) -> Result<Vec<CheckReport>, CheckError> {
    let smp = Samples::generate(&s.manifold, seed, samples);
    let conv = spec.file.conventions.d;
    let reports = vec![
        check_almost_contact(s, &smp, ALGEBRAIC_TOL)?,
        check_metric_compatibility(s, &smp, ALGEBRAIC_TOL)?,
        check_contact_metric(s, conv, &smp, ALGEBRAIC_TOL)?,
        renamed(check_alpha_sasakian(s, spec.alpha(), &smp, CONNECTION_TOL)?, "alpha_sasakian"),
        check_k_contact(s, &smp, CONNECTION_TOL)?,
    ];
    Ok(reports
        .into_iter()
        .map(|r| {
            let e = expectation_for(spec, &r.name);
            let name = format!("{prefix}/{}", r.name);
            renamed(r, name).expecting(e)
        })
        .collect())
}

/// Each axiom on a mutated copy of the structure, expected to fail.
fn contact_negatives(
    s: &AlmostContactStructure,
    alpha: f64,
    conv: DConvention,
    prefix: &str,
    seed: u64,
    samples: usize,
) -> Result<Vec<CheckReport>, CheckError> {
    let smp = Samples::generate(&s.manifold, seed, samples.min(20));
    let two = Expr::Const(2.0);
    let mut doubled_phi = s.clone();
    doubled_phi.phi = s.phi.scale(&two);
    let mut doubled_eta = s.clone();
    doubled_eta.eta = s.eta.scale(&two);
    let mut negated_phi = s.clone();
    negated_phi.phi = s.phi.scale(&Expr::Const(-1.0));
    let mut doubled_xi = s.clone();
    doubled_xi.xi = s.xi.scale(&two);
    let out = [
        (check_almost_contact(&doubled_phi, &smp, ALGEBRAIC_TOL)?, "doubled phi"),
        (check_metric_compatibility(&doubled_eta, &smp, ALGEBRAIC_TOL)?, "doubled eta"),
        (check_contact_metric(&negated_phi, conv, &smp, ALGEBRAIC_TOL)?, "negated phi"),
        (
            renamed(check_alpha_sasakian(s, 2.0 * alpha, &smp, CONNECTION_TOL)?, "alpha_sasakian"),
            "doubled alpha",
        ),
        (check_k_contact(&doubled_xi, &smp, CONNECTION_TOL)?, "doubled xi"),
    ];
    Ok(out
        .into_iter()
        .map(|(r, m)| {
            let name = format!("{prefix}/{}", r.name);
            renamed(r, name).expecting(Expectation::Fail).with_note(format!("mutation: {m}"))
        })
        .collect())
}

fn complex_axioms(
    spec: &LoadedSpec,
    a: &AlmostComplexStructure,
    prefix: &str,
    seed: u64,
    samples: usize,
) -> Result<Vec<CheckReport>, CheckError> {
    let smp = Samples::generate(&a.manifold, seed, samples);
    let conv = spec.file.conventions.d;
    let mut reports = vec![
        check_hermitian(a, &smp, ALGEBRAIC_TOL)?,
        check_kaehler(a, &smp, CONNECTION_TOL)?,
        check_exact_potential(a, conv, &smp, ALGEBRAIC_TOL)?,
    ];
    if a.convention == JConvention::DyToDx {
        reports.push(check_coefficient_pdes(a, &smp, ALGEBRAIC_TOL)?);
    }
    let mut out: Vec<CheckReport> = reports
        .into_iter()
        .map(|r| {
            let e = expectation_for(spec, &r.name);
            let name = format!("{prefix}/{}", r.name);
            renamed(r, name).expecting(e)
        })
        .collect();
    if !spec.file.expect_fail {
        let neg = Samples::generate(&a.manifold, seed, samples.min(20));
        let mut doubled_j = a.clone();
        doubled_j.j = a.j.scale(&Expr::Const(2.0));
        let mut no_potential = a.clone();
        no_potential.omega = OneFormField::zero(a.manifold.dim());
        for (r, m) in [
            (check_hermitian(&doubled_j, &neg, ALGEBRAIC_TOL)?, "doubled J"),
            (check_exact_potential(&no_potential, conv, &neg, ALGEBRAIC_TOL)?, "omega = 0"),
        ] {
            let name = format!("{prefix}/negative/{}", r.name);
            out.push(renamed(r, name).expecting(Expectation::Fail).with_note(format!("mutation: {m}")));
        }
    }
    Ok(out)
}

fn contactization_spec(spec: &LoadedSpec, alpha: f64) -> Result<ContactizationSpec, CheckError> {
    let base = spec.complex().ok_or_else(|| CheckError::Other("not an almost complex spec".into()))?;
    let c = &spec.file.constants;
    let coord = c.fiber_coord.clone().unwrap_or_else(|| "t".into());
    Ok(ContactizationSpec::new(base.clone(), alpha, &coord, c.fiber_box.unwrap_or([0.0, TAU]))?)
}

fn fmt_alpha(a: f64) -> String {
    format!("alpha={a}")
}

fn plan_contactization(plan: &mut Plan, specs: &[LoadedSpec], opts: &SuiteOptions) {
    let alphas: Vec<f64> = match opts.alpha {
        Some(a) => vec![a],
        None => vec![0.5, 1.0, 2.0],
    };
    let main_alpha = opts.alpha.unwrap_or(1.0);
    let samples = opts.samples;
    for spec in specs.iter().filter(|s| s.complex().is_some() && !s.file.expect_fail) {
        let name = spec.file.name.clone();
        for &alpha in &alphas {
            let prefix = format!("contactization/{name}/{}", fmt_alpha(alpha));
            let spec = spec.clone();
            let p = prefix.clone();
            plan.add(prefix, move |seed| contactization_checks(&spec, alpha, &p, seed, samples));
        }
        let base = spec.clone();
        plan.add(format!("oracle/{name}-contactization"), move |seed| {
            let prod = build_contactization(&contactization_spec(&base, main_alpha)?)?;
            let m = prod.manifold();
            Ok(check_connection_oracle(m, &Samples::generate(m, seed, samples))?.to_vec())
        });
        let base = spec.clone();
        let prefix = format!("contactization/{name}");
        plan.add(format!("{prefix}/christoffel_table"), move |seed| {
            let cs = contactization_spec(&base, main_alpha)?;
            let prod = build_contactization(&cs)?;
            let smp = Samples::generate(prod.manifold(), seed, small(samples));
            let (r, _) = christoffel_table_check(&cs, &smp, CONNECTION_TOL)?;
            Ok(vec![renamed(r, format!("{prefix}/christoffel_table"))])
        });
        let base = spec.clone();
        let prefix = format!("contactization/{name}");
        plan.add(format!("{prefix}/frame"), move |seed| {
            let cs = contactization_spec(&base, main_alpha)?;
            let prod = build_contactization(&cs)?;
            let smp = Samples::generate(prod.manifold(), seed, small(samples));
            Ok(frame_connection_check(&cs, &smp, CONNECTION_TOL)?
                .into_iter()
                .map(|r| {
                    let n = format!("{prefix}/{}", r.name);
                    renamed(r, n)
                })
                .collect())
        });
    }
}

fn contactization_checks(
    spec: &LoadedSpec,
    alpha: f64,
    prefix: &str,
    seed: u64,
    samples: usize,
) -> Result<Vec<CheckReport>, CheckError> {
    let cs = contactization_spec(spec, alpha)?;
    let prod = build_contactization(&cs)?;
    let s = &prod.structure;
    let m = prod.manifold();
    let smp = Samples::generate(m, seed, samples);
    let half = DConvention::Half;
    let is_one = alpha == 1.0;
    // contact metric, Sasakian and K-contact hold exactly when α = 1
    let known_only_at_one = if is_one { Expectation::Pass } else { Expectation::Fail };
    let mut out = vec![
        check_almost_contact(s, &smp, ALGEBRAIC_TOL)?,
        check_metric_compatibility(s, &smp, ALGEBRAIC_TOL)?,
        check_contact_metric(s, half, &smp, ALGEBRAIC_TOL)?.expecting(known_only_at_one),
        check_contact_proportionality(s, alpha, half, &smp, 1e-8)?,
        renamed(check_k_contact(s, &smp, CONNECTION_TOL)?, "k_contact").expecting(known_only_at_one),
        fundamental_form_lift_check(&cs, &smp, ALGEBRAIC_TOL)?,
    ];
    for r in alpha_sasakian_probe(&cs, &[alpha], samples, seed)? {
        let base = r.name.split('/').next().unwrap_or("").to_string();
        let r = if base == "sasakian" {
            // re-judged so that a failure reads as an expected fail
            let tol = r.tolerance;
            r.expecting(known_only_at_one).with_tolerance(tol)
        } else {
            r
        };
        out.push(renamed(r, base));
    }

    let mut matrix = Residuals::new();
    let mut inverse = Residuals::new();
    let mut example = Residuals::new();
    let mut half_norm = Residuals::new();
    let is_example = spec.file.name == "worked-example";
    let d = m.dim();
    let n1 = prod.base_dim();
    for x in smp.iter() {
        let g = m.metric_at(&x.point)?;
        let printed = printed_metric_matrix(&cs, &x.point)?;
        matrix.push((&g - &printed).abs().max());
        let pinv = printed_metric_inverse(&cs, &x.point)?;
        inverse.push((&pinv * &printed - DMatrix::<f64>::identity(d, d)).abs().max());
        if is_example {
            let ex = example_metric_matrix(alpha, &x.point);
            example.push((&g - &ex).abs().max());
            // base metric ½δ instead of ¼δ
            let mut alt = g.clone();
            for i in 0..n1 {
                alt[(i, i)] += 0.25;
            }
            half_norm.push((&alt - &ex).abs().max());
        }
    }
    out.push(CheckReport::new("metric_matrix", &matrix, 1e-12, seed).with_samples(smp.len()));
    out.push(CheckReport::new("metric_inverse", &inverse, 1e-12, seed).with_samples(smp.len()));
    if is_example {
        out.push(CheckReport::new("example_matrix", &example, 1e-12, seed).with_samples(smp.len()));
        out.push(
            CheckReport::new("normalization_half", &half_norm, 1e-12, seed)
                .with_samples(smp.len())
                .expecting(Expectation::Probe)
                .with_note("base metric ½δ in place of ¼δ, compared with the printed 5×5 matrix"),
        );
    }
    Ok(out
        .into_iter()
        .map(|r| {
            let n = format!("{prefix}/{}", r.name);
            renamed(r, n).with_convention("alpha", &alpha.to_string())
        })
        .collect())
}

fn bundled_fiber() -> AlmostContactStructure {
    fixtures::bundled("sasakian-r3").contact().expect("bundled contact fixture").clone()
}

fn plan_warped(plan: &mut Plan, specs: &[LoadedSpec], opts: &SuiteOptions) -> Result<(), SuiteError> {
    let samples = opts.samples;
    for spec in specs.iter().filter(|s| s.complex().is_some() && !s.file.expect_fail) {
        // the warped product family is only run on bases with a potential in
        // the example's convention or with a declared warp
        let declared = spec.warp()?;
        if declared.is_none() && spec.file.name != "worked-example" {
            continue;
        }
        let a = opts.alpha.or(spec.file.constants.a).unwrap_or(1.0);
        let warps: Vec<(String, ScalarField)> = match declared {
            Some(w) => vec![("spec-warp".to_string(), w)],
            None => [("f1", "1"), ("exp-x1", "exp(x1/4)"), ("exp-y1", "exp(y1/4)")]
                .into_iter()
                .map(|(l, e)| (l.to_string(), ScalarField::new(parse(e).expect("literal warp"))))
                .collect(),
        };
        let multi = specs.iter().filter(|s| s.complex().is_some()).count() > 1 && !opts.specs.is_empty();
        for (label, warp) in warps {
            let label = if multi { format!("{}-{label}", spec.file.name) } else { label };
            let base = spec.complex().unwrap().clone();
            let wspec = move || -> Result<WarpedProduct, CheckError> {
                Ok(WarpedProduct::build(WarpedProductSpec::new(base, bundled_fiber(), a, warp)?)?)
            };
            let prefix = format!("warped/{label}");
            let p = prefix.clone();
            plan.add(prefix, move |seed| {
                let w = wspec()?;
                let mut out = warped_checks(&w, &p, seed, samples)?;
                let m = w.product.manifold();
                for r in check_connection_oracle(m, &Samples::generate(m, mix_seed(seed, 3), samples))? {
                    let from = format!("oracle/{}", m.name());
                    out.push(reprefix(r, &from, &format!("oracle/warped-{}", &p["warped/".len()..])));
                }
                Ok(out)
            });
        }
    }
    Ok(())
}

fn warped_checks(w: &WarpedProduct, prefix: &str, seed: u64, samples: usize) -> Result<Vec<CheckReport>, CheckError> {
    let s = &w.product.structure;
    let m = w.product.manifold();
    let smp = Samples::generate(m, seed, samples);
    let mut out = vec![
        check_almost_contact(s, &smp, ALGEBRAIC_TOL)?,
        check_metric_compatibility(s, &smp, ALGEBRAIC_TOL)?,
        printed_metric_sign(w, &smp, seed)?,
    ];
    let n = small(samples);
    let tol = CONNECTION_TOL;
    out.push(base_connection_check(w, seed, n, tol)?);
    out.extend(mixed_connection_check(w, seed, n, tol)?);
    out.extend(fiber_parse_check(w, seed, n, tol)?);
    out.extend(split_identity_check(w, seed, n, tol)?);
    Ok(out
        .into_iter()
        .map(|r| {
            let r = reprefix(r, "warped", prefix);
            r.with_convention("a", &w.spec.a().to_string())
                .with_convention("warp", &w.spec.warp().expr().to_string())
        })
        .collect())
}

/// `|g(ξ̄,ξ̄) − 1|` for the metric as printed, `g₁ + f²(g₂ − η⊗η − η̄⊗η̄)`,
/// where it equals `−f²`.
fn printed_metric_sign(w: &WarpedProduct, smp: &Samples, seed: u64) -> Result<CheckReport, CheckError> {
    let fiber = w.spec.fiber();
    let n1 = w.product.base_dim();
    let mut r = Residuals::new();
    for x in smp.iter() {
        let (p1, p2) = x.point.split_at(n1);
        let f = w.spec.warp().eval(&w.spec.base().manifold, p1)?;
        let xi = fiber.xi.eval(&fiber.manifold, p2)?;
        let eta = fiber.eta.eval(&fiber.manifold, p2)?;
        let g2 = fiber.manifold.metric_at(p2)?;
        let e = eta.dot(&xi);
        // η̄(ξ̄) = η(ξ) since ξ̄ has no base part
        let value = f * f * (xi.dot(&(&g2 * &xi)) - e * e - e * e);
        r.push((value - 1.0).abs());
    }
    Ok(CheckReport::new("warped/printed_metric_sign", &r, ALGEBRAIC_TOL, seed)
        .with_samples(smp.len())
        .expecting(Expectation::Probe)
        .with_note("g(ξ̄,ξ̄) under the printed sign; the adopted metric gives 1"))
}

fn tall_fiber() -> Result<AlmostContactStructure, CheckError> {
    let mut s = bundled_fiber();
    let mut b = s.manifold.bounds().to_vec();
    b[2] = [-1.5, 1.5];
    s.manifold = s.manifold.with_bounds(b)?;
    Ok(s)
}

/// A seeded initial state well inside the box with a velocity small enough
/// to stay inside it for unit time.
fn inner_state(m: &ChartedManifold, seed: u64) -> GeodesicState {
    let mut rng = crate::product::rng_for(seed, 7);
    let b = m.bounds();
    let point: Vec<f64> = b
        .iter()
        .map(|[lo, hi]| {
            let (c, r) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
            c + rng.gen_range(-0.25..0.25) * r
        })
        .collect();
    let reach = b.iter().map(|[lo, hi]| (hi - lo) / 2.0).fold(f64::INFINITY, f64::min);
    let velocity: Vec<f64> = (0..m.dim()).map(|_| rng.gen_range(-1.0..1.0) * 0.3 * reach / (m.dim() as f64).sqrt()).collect();
    GeodesicState::new(point, velocity)
}

fn single(name: &str, r: &Residuals, tol: f64, seed: u64) -> CheckReport {
    CheckReport::new(name, r, tol, seed)
}

fn plan_geodesic(plan: &mut Plan, opts: &SuiteOptions) {
    const STEP: f64 = 1e-3;
    plan.add("geodesic/euclidean-r3/straight_line".into(), |seed| {
        let m = fixtures::bundled("euclidean-r3").manifold;
        let v = [0.3, -0.4, 0.5];
        let t = integrate(&m, &GeodesicState::new(vec![0.0; 3], v.to_vec()), 1.0, STEP)?;
        let mut r = Residuals::new();
        for (time, s) in t.times.iter().zip(&t.states) {
            r.extend((0..3).map(|k| (s.point[k] - time * v[k]).abs()));
        }
        Ok(vec![single("geodesic/euclidean-r3/straight_line", &r, 1e-12, seed).with_samples(t.len())])
    });
    plan.add("geodesic/sphere".into(), |seed| {
        let m = fixtures::bundled("sphere").manifold;
        let eq = integrate(&m, &GeodesicState::new(vec![FRAC_PI_2, 0.0], vec![0.0, 1.0]), 1.0, STEP)?;
        let r: Residuals = eq.states.iter().map(|s| (s.point[0] - FRAC_PI_2).abs()).collect();
        let acc = crate::geodesic::geodesic_rhs(&m, &GeodesicState::new(vec![FRAC_PI_4, 0.0], vec![0.0, 1.0]))?;
        let mut quarter = Residuals::new();
        quarter.push((acc[0] - 0.5).abs());
        quarter.push(acc[1].abs());

        let s0 = GeodesicState::new(vec![1.0, 0.0], vec![0.7, 1.1]);
        let h = 0.05;
        let runs = [h, h / 2.0, h / 4.0].map(|h| integrate(&m, &s0, 1.0, h));
        let [t1, t2, t4] = runs;
        let (t1, t2, t4) = (t1?, t2?, t4?);
        let gap = |c: &crate::geodesic::Trajectory| {
            let k = (c.step / t4.step).round() as usize;
            c.states
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let f = &t4.states[i * k];
                    s.point.iter().zip(&f.point).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
                })
                .fold(0.0, f64::max)
        };
        let ratio = gap(&t1) / gap(&t2);
        let mut conv = Residuals::new();
        conv.push((12.0 - ratio).max(ratio - 20.0).max(0.0));
        Ok(vec![
            single("geodesic/sphere/equator", &r, 1e-8, seed).with_samples(eq.len()),
            single("geodesic/sphere/rhs_quarter", &quarter, 1e-12, seed),
            single("geodesic/sphere/convergence", &conv, 0.0, seed)
                .with_note(format!("error ratio under step halving: {ratio:.6} (accepted range [12, 20])"))
                .with_note(format!("steps {h}, {}, reference {}", h / 2.0, h / 4.0)),
        ])
    });
    let speed_cases: [&'static str; 4] = ["euclidean-r3", "sphere", "sasakian-r3", "worked-example"];
    for fx in speed_cases {
        plan.add(format!("geodesic/{fx}/speed_drift"), move |seed| {
            let m = fixtures::bundled(fx).manifold;
            speed_drift(&m, fx, seed)
        });
    }
    plan.add("geodesic/worked-example-contactization/speed_drift".into(), |seed| {
        let base = fixtures::bundled("worked-example");
        let prod = build_contactization(&contactization_spec(&base, 1.0)?)?;
        speed_drift(prod.manifold(), "worked-example-contactization", seed)
    });
    plan.add("geodesic/sasakian-r3/reeb_momentum".into(), |seed| {
        let s = bundled_fiber();
        let m = &s.manifold;
        let t = integrate(m, &GeodesicState::new(vec![0.1, 0.2, 0.0], vec![0.5, 0.3, 0.4]), 1.0, STEP)?;
        let eta_v = |st: &GeodesicState| -> Result<f64, GeometryError> {
            Ok(s.eta.eval(m, &st.point)?.dot(&DVector::from_column_slice(&st.velocity)))
        };
        let e0 = eta_v(&t.states[0])?;
        let r: Residuals = t.states.iter().map(|st| eta_v(st).map(|e| (e - e0).abs())).collect::<Result<_, _>>()?;
        Ok(vec![single("geodesic/sasakian-r3/reeb_momentum", &r, 1e-6, seed)
            .with_samples(t.len())
            .with_note(format!("η(β′(0)) = {e0}"))])
    });

    let a = opts.alpha.unwrap_or(1.0);
    let horizontal = (
        "horizontal",
        GeodesicState::new(vec![0.1, 0.2, 0.0], vec![0.5, 0.3, 0.1]),
    );
    let reeb = ("reeb", GeodesicState::new(vec![0.1, 0.2, -1.0], vec![0.0, 0.0, 2.0]));
    for (label, beta0) in [horizontal, reeb] {
        plan.add(format!("geodesic/{label}"), move |seed| {
            let base = fixtures::bundled("worked-example").complex().unwrap().clone();
            let w = WarpedProduct::build(WarpedProductSpec::new(base, tall_fiber()?, a, ScalarField::constant(1.0))?)?;
            let gamma0 = GeodesicState::new(vec![0.1, 0.2, -0.3, 0.4], vec![0.0; 4]);
            let r = product_geodesic_check(&w, label, &gamma0, &beta0, 1.0, STEP, 11, INTEGRATED_TOL, Expectation::Pass, seed)?;
            let mut out = r.reports().to_vec();
            if label == "reeb" {
                out.push(reeb_ratio(&r, a, seed));
            }
            Ok(out)
        });
    }
    plan.add("geodesic/flat".into(), |seed| {
        let w = flat_product()?;
        let r = product_geodesic_check(
            &w,
            "flat",
            &GeodesicState::new(vec![-0.5, 0.2], vec![0.6, -0.3]),
            &GeodesicState::new(vec![0.1], vec![0.9]),
            1.0,
            STEP,
            11,
            1e-10,
            Expectation::Pass,
            seed,
        )?;
        Ok(r.reports().to_vec())
    });
}

/// `|max|res_ii| / (2a²) − 1|` on the Reeb instance.
fn reeb_ratio(r: &ProductGeodesicReport, a: f64, seed: u64) -> CheckReport {
    let expected = 2.0 * a * a;
    let mut res = Residuals::new();
    res.push((r.printed.max_residual / expected - 1.0).abs());
    CheckReport::new("geodesic/reeb/res_ii_magnitude", &res, 1e-3, seed)
        .with_convention("a", &a.to_string())
        .with_note(format!("|res_ii| = {:e}, 2a² = {expected}", r.printed.max_residual))
}

fn speed_drift(m: &ChartedManifold, label: &str, seed: u64) -> Result<Vec<CheckReport>, CheckError> {
    let s0 = inner_state(m, seed);
    let t = integrate(m, &s0, 1.0, 1e-3)?;
    let drift = t.max_speed_drift(m)?;
    let mut r = Residuals::new();
    r.push(drift);
    let mut rep = single(&format!("geodesic/{label}/speed_drift"), &r, 1e-6, seed)
        .with_samples(t.len())
        .with_note(format!("p0 = {:?}, v0 = {:?}", s0.point, s0.velocity));
    if t.truncated() {
        rep = rep.with_note(format!("left the chart box at t = {}", t.times.last().unwrap()));
    }
    Ok(vec![rep])
}

/// `ℝ² × ℝ` with `a = 0`, `f ≡ 1` and trivial structures: a flat block metric.
fn flat_product() -> Result<WarpedProduct, CheckError> {
    let plane = ChartedManifold::euclidean("plane", &["u", "v"], vec![[-2.0, 2.0]; 2])?;
    let base = AlmostComplexStructure::new(
        plane,
        EndoField::from_constants(&[vec![0.0, -1.0], vec![1.0, 0.0]]),
        OneFormField::zero(2),
        JConvention::Unspecified,
    )?;
    let line = ChartedManifold::euclidean("line", &["s"], vec![[-2.0, 2.0]])?;
    let fiber = AlmostContactStructure::new(
        line,
        EndoField::zero(1),
        VectorField::constant(&[1.0]),
        OneFormField::new(vec![Expr::one()]),
    )?;
    Ok(WarpedProduct::build(WarpedProductSpec::new(base, fiber, 0.0, ScalarField::constant(1.0))?)?)
}

/// 1 when any check is a hard failure, else 0.
pub fn exit_code(report: &RunReport) -> i32 {
    if report.checks.iter().any(|c| c.is_hard_failure()) {
        1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_arguments() {
        assert_eq!(parse_tolerance("a/b=1e-3").unwrap(), ("a/b".to_string(), 1e-3));
        assert!(parse_tolerance("a").is_err());
        assert!(parse_tolerance("a=x").is_err());
        assert!(parse_tolerance("a=-1").is_err());
        assert!(parse_tolerance("a=inf").is_err());
    }

    #[test]
    fn overrides_match_names_and_prefixes() {
        let mut r = Residuals::new();
        r.push(1e-4);
        let reports = vec![
            CheckReport::new("geodesic/sphere/equator", &r, 1e-8, 0),
            CheckReport::new("geodesic/sphere_x/equator", &r, 1e-8, 0),
            CheckReport::new("oracle/x/koszul", &r, 1e-8, 0),
        ];
        let mut tols = BTreeMap::new();
        tols.insert("geodesic/sphere".to_string(), 1e-3);
        tols.insert("oracle/x/koszul".to_string(), 1e-5);
        let out = apply_tolerances(reports, &tols);
        assert!(out[0].passed());
        assert!(!out[1].passed());
        assert_eq!(out[2].tolerance, 1e-5);
        assert!(!out[2].passed());
    }

    #[test]
    fn longest_override_wins() {
        let mut r = Residuals::new();
        r.push(1e-4);
        let mut tols = BTreeMap::new();
        tols.insert("a".to_string(), 1.0);
        tols.insert("a/b".to_string(), 1e-6);
        let out = apply_tolerances(vec![CheckReport::new("a/b/c", &r, 0.0, 0)], &tols);
        assert_eq!(out[0].tolerance, 1e-6);
    }

    #[test]
    fn invalid_options_are_rejected() {
        let opts = SuiteOptions { alpha: Some(0.0), ..SuiteOptions::default() };
        assert!(matches!(run_suite(&opts), Err(SuiteError::InvalidOption(_))));
        let opts = SuiteOptions { samples: 0, ..SuiteOptions::default() };
        assert!(matches!(run_suite(&opts), Err(SuiteError::InvalidOption(_))));
    }

    #[test]
    fn job_errors_become_failed_reports() {
        let r = error_report("warped/x", &"boom", 7);
        assert_eq!(r.name, "warped/x/error");
        assert!(r.is_hard_failure());
        assert_eq!(r.notes.last().unwrap(), "boom");
    }

    #[test]
    fn geodesic_suite_is_clean() {
        let opts = SuiteOptions { suite: Suite::Geodesic, samples: 5, ..SuiteOptions::default() };
        let r = run_suite(&opts).unwrap();
        assert_eq!(exit_code(&r), 0);
        assert!(r.checks.iter().all(|c| c.name.starts_with("geodesic/")));
        assert!(r.check("geodesic/reeb/res_ii_magnitude").unwrap().passed());
    }
}
