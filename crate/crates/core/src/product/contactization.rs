use super::{build_contactization, rng_for, ContactizationSpec, ProductError, ProductManifold};
use crate::expr::Expr;
use crate::structures::{
    check_alpha_sasakian, AlmostComplexStructure, CheckReport, Expectation, Residuals, Samples,
    ALGEBRAIC_TOL, CONNECTION_TOL,
};
use crate::tensor::{seeded, GeometryError, VectorField};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// `fᵢ = ω(2∂xᵢ)`, `f_{n+i} = ω(2∂yᵢ)` at a base point.
pub fn potential_coefficients(base: &AlmostComplexStructure, p: &[f64]) -> Result<Vec<f64>, GeometryError> {
    let m = &base.manifold;
    let w = base.omega.eval(m, &p[..m.dim()])?;
    Ok(w.iter().map(|v| 2.0 * v).collect())
}

/// `df[c][k] = ∂f_c/∂(coordinate k)` at a base point.
fn potential_derivatives(base: &AlmostComplexStructure, p: &[f64]) -> Result<Vec<Vec<f64>>, GeometryError> {
    let m = &base.manifold;
    let d = m.dim();
    let mut out = vec![vec![0.0; d]; d];
    for k in 0..d {
        let q = seeded(&p[..d], k);
        for (c, row) in out.iter_mut().enumerate() {
            row[k] = 2.0 * base.omega.components()[c].eval_at(m.coords(), &q)?.deriv;
        }
    }
    Ok(out)
}

/// The printed block matrix `¼[[δᵢⱼ + α²fᵢfⱼ, αfᵢ], [αfⱼ, 1]]` in the basis
/// `(∂x₁..∂xₙ, ∂y₁..∂yₙ, ∂z̄)`, where `∂z̄` is the chart's `∂t`.
pub fn printed_metric_matrix(spec: &ContactizationSpec, p: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
    let f = potential_coefficients(spec.base(), p)?;
    let a = spec.alpha();
    let m = f.len();
    Ok(DMatrix::from_fn(m + 1, m + 1, |i, j| {
        let v = match (i < m, j < m) {
            (true, true) => (if i == j { 1.0 } else { 0.0 }) + a * a * f[i] * f[j],
            (true, false) => a * f[i],
            (false, true) => a * f[j],
            (false, false) => 1.0,
        };
        0.25 * v
    }))
}

/// The printed inverse `4[[δᵢⱼ, −αfᵢ], [−αfⱼ, 1 + α²Σfᵢ²]]`.
pub fn printed_metric_inverse(spec: &ContactizationSpec, p: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
    let f = potential_coefficients(spec.base(), p)?;
    let a = spec.alpha();
    let m = f.len();
    let norm2: f64 = f.iter().map(|v| v * v).sum();
    Ok(DMatrix::from_fn(m + 1, m + 1, |i, j| {
        let v = match (i < m, j < m) {
            (true, true) => {
                if i == j {
                    1.0
                } else {
                    0.0
                }
            }
            (true, false) => -a * f[i],
            (false, true) => -a * f[j],
            (false, false) => 1.0 + a * a * norm2,
        };
        4.0 * v
    }))
}

/// The 5×5 metric printed for the worked ℝ⁴ example, in the coordinates
/// `(x₁, x₂, y₁, y₂, t)`.
pub fn example_metric_matrix(a: f64, p: &[f64]) -> DMatrix<f64> {
    let (x1, x2) = (p[0], p[1]);
    #[rustfmt::skip]
    let m = [
        1.0, 0.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 1.0 + a * a * x1 * x1, a * a * x1 * x2, -a * x1,
        0.0, 0.0, a * a * x1 * x2, 1.0 + a * a * x2 * x2, -a * x2,
        0.0, 0.0, -a * x1, -a * x2, 1.0,
    ];
    DMatrix::from_row_slice(5, 5, &m) * 0.25
}

/// Sparse Christoffel symbols keyed by `(k, i, j)` with `i ≤ j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelTable {
    dim: usize,
    entries: BTreeMap<(usize, usize, usize), f64>,
}

impl ChristoffelTable {
    fn new(dim: usize) -> Self {
        ChristoffelTable { dim, entries: BTreeMap::new() }
    }

    fn key(k: usize, i: usize, j: usize) -> (usize, usize, usize) {
        (k, i.min(j), i.max(j))
    }

    fn add(&mut self, k: usize, i: usize, j: usize, v: f64) {
        *self.entries.entry(Self::key(k, i, j)).or_insert(0.0) += v;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Γᵏᵢⱼ`; zero when the table lists no formula for the entry.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.entries.get(&Self::key(k, i, j)).copied().unwrap_or(0.0)
    }

    pub fn is_listed(&self, k: usize, i: usize, j: usize) -> bool {
        self.entries.contains_key(&Self::key(k, i, j))
    }
}

/// Evaluates every printed Christoffel formula at `p`, indices in chart order
/// `(x₁..xₙ, y₁..yₙ, t)`. Two symmetric formulas that land on the same
/// diagonal entry (`Γ^{n+i}_{ii}`, `Γ^i_{(n+i)(n+i)}`) are summed, which is
/// what the separately printed `Γ^{n+i}_{ii} = α²fᵢ` states.
pub fn printed_christoffel_table(spec: &ContactizationSpec, p: &[f64]) -> Result<ChristoffelTable, GeometryError> {
    let base = spec.base();
    let f = potential_coefficients(base, p)?;
    let df = potential_derivatives(base, p)?;
    let a = spec.alpha();
    let (a2, a3) = (a * a, a * a * a);
    let n = base.half_dim();
    let t = 2 * n;
    let mut g = ChristoffelTable::new(2 * n + 1);
    for i in 0..n {
        for j in i..n {
            g.add(n + i, i, j, 0.5 * a2 * f[j]);
            g.add(n + j, i, j, 0.5 * a2 * f[i]);
            g.add(t, i, j, a * df[j][i] - 0.5 * a3 * (f[i] * f[n + j] + f[j] * f[n + i]));
            g.add(i, n + i, n + j, -0.5 * a2 * f[n + j]);
            g.add(j, n + i, n + j, -0.5 * a2 * f[n + i]);
            g.add(t, n + i, n + j, a * df[n + j][n + i] + 0.5 * a3 * (f[i] * f[n + j] + f[j] * f[n + i]));
        }
    }
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            g.add(j, i, n + j, -0.5 * a2 * f[i]);
            g.add(n + i, i, n + j, 0.5 * a2 * f[n + j]);
            g.add(t, i, n + j, a * df[i][n + j] + 0.5 * a * delta + 0.5 * a3 * (f[i] * f[j] - f[n + i] * f[n + j]));
        }
    }
    for i in 0..n {
        g.add(n + i, i, t, 0.5 * a);
        g.add(t, i, t, -0.5 * a2 * f[n + i]);
        g.add(i, n + i, t, -0.5 * a);
        g.add(t, n + i, t, 0.5 * a2 * f[i]);
    }
    Ok(g)
}

/// Printed value, oracle value and residual of one Christoffel entry, taken
/// at the sample point where the residual is largest.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelEntry {
    pub k: usize,
    pub i: usize,
    pub j: usize,
    pub label: String,
    pub listed: bool,
    pub printed: f64,
    pub oracle: f64,
    pub residual: f64,
}

/// Compares the printed table with the oracle symbols entry by entry over
/// all `(k, i ≤ j)`. The report is a probe: entries above `tol` make it an
/// erratum candidate, and every entry is listed in the notes.
pub fn christoffel_table_check(
    spec: &ContactizationSpec,
    samples: &Samples,
    tol: f64,
) -> Result<(CheckReport, Vec<ChristoffelEntry>), ProductError> {
    let prod = build_contactization(spec)?;
    let m = prod.manifold();
    let d = m.dim();
    let per: Vec<Vec<(f64, f64, bool)>> = samples
        .items()
        .par_iter()
        .map(|s| {
            let table = printed_christoffel_table(spec, &s.point)?;
            let gamma = m.christoffel(&s.point)?;
            let mut out = Vec::new();
            for k in 0..d {
                for i in 0..d {
                    for j in i..d {
                        out.push((table.get(k, i, j), gamma.get(k, i, j), table.is_listed(k, i, j)));
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_, GeometryError>>()?;
    let coords = m.coords();
    let mut entries = Vec::new();
    let mut idx = 0;
    for k in 0..d {
        for i in 0..d {
            for j in i..d {
                let mut worst = ChristoffelEntry {
                    k,
                    i,
                    j,
                    label: format!("Γ^{}_{{{} {}}}", coords[k], coords[i], coords[j]),
                    listed: false,
                    printed: 0.0,
                    oracle: 0.0,
                    residual: -1.0,
                };
                for row in &per {
                    let (printed, oracle, listed) = row[idx];
                    worst.listed |= listed;
                    let r = (printed - oracle).abs();
                    if r > worst.residual {
                        worst.printed = printed;
                        worst.oracle = oracle;
                        worst.residual = r;
                    }
                }
                worst.residual = worst.residual.max(0.0);
                entries.push(worst);
                idx += 1;
            }
        }
    }
    let r: Residuals = entries.iter().map(|e| e.residual).collect();
    let mut report = CheckReport::new("christoffel_table", &r, tol, samples.seed())
        .with_samples(samples.len())
        .expecting(Expectation::Probe)
        .with_convention("alpha", &spec.alpha().to_string());
    let bad = entries.iter().filter(|e| e.residual > tol).count();
    report = report.with_note(format!("{} entries compared, {} above tolerance", entries.len(), bad));
    for e in &entries {
        let status = if e.residual <= tol { "pass" } else { "erratum-candidate" };
        let origin = if e.listed { "printed" } else { "unlisted (0)" };
        report = report.with_note(format!(
            "{} {origin}: printed={:.12e} oracle={:.12e} residual={:.3e} {status}",
            e.label, e.printed, e.oracle, e.residual
        ));
    }
    Ok((report, entries))
}

/// Frame fields `eᵢ = 2∂yᵢ − αf_{n+i}ξ̄`, their images `φ̄eᵢ` and `ξ̄`, as
/// expression fields on the contactization chart.
pub fn frame_fields(
    spec: &ContactizationSpec,
    prod: &ProductManifold,
) -> (Vec<VectorField>, Vec<VectorField>, VectorField) {
    let n = spec.base().half_dim();
    let d = prod.dim();
    let xi = prod.structure.xi.clone();
    let a = spec.alpha();
    let e: Vec<VectorField> = (0..n)
        .map(|i| {
            let f = 2.0 * spec.base().omega.components()[n + i].clone();
            VectorField::coordinate(d, n + i).scale(&Expr::Const(2.0)).sub(&xi.scale(&(a * f)))
        })
        .collect();
    let phi_e = e.iter().map(|v| prod.structure.phi.apply(v)).collect();
    (e, phi_e, xi)
}

/// The frame `(e₁..eₙ, φ̄e₁..φ̄eₙ, ξ̄)` at `p`, as matrix columns.
pub fn adapted_frame(spec: &ContactizationSpec, p: &[f64]) -> Result<DMatrix<f64>, ProductError> {
    let prod = build_contactization(spec)?;
    let (e, phi_e, xi) = frame_fields(spec, &prod);
    let m = prod.manifold();
    let cols: Vec<DVector<f64>> = e
        .iter()
        .chain(&phi_e)
        .chain(std::iter::once(&xi))
        .map(|v| v.eval(m, p))
        .collect::<Result<_, _>>()?;
    Ok(DMatrix::from_columns(&cols))
}

/// The covariant-derivative relations claimed for the adapted frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameRelation {
    /// `∇_{eᵢ}eⱼ = 0`
    EE,
    /// `∇_{φ̄eᵢ}φ̄eⱼ = 0`
    PhiEPhiE,
    /// `∇_ξ̄ ξ̄ = 0`
    XiXi,
    /// `∇_{eᵢ}φ̄eⱼ = αδᵢⱼξ̄`
    EPhiE,
    /// `∇_{φ̄eᵢ}eⱼ = −αδᵢⱼξ̄`
    PhiEE,
    /// `∇_ξ̄ eᵢ = −αφ̄eᵢ`
    XiE,
    /// `∇_{eᵢ}ξ̄ = −αφ̄eᵢ`
    EXi,
    /// `∇_ξ̄ φ̄eᵢ = αeᵢ`
    XiPhiE,
    /// `∇_{φ̄eᵢ}ξ̄ = αeᵢ`
    PhiEXi,
}

impl FrameRelation {
    pub const ALL: [FrameRelation; 9] = [
        FrameRelation::EE,
        FrameRelation::PhiEPhiE,
        FrameRelation::XiXi,
        FrameRelation::EPhiE,
        FrameRelation::PhiEE,
        FrameRelation::XiE,
        FrameRelation::EXi,
        FrameRelation::XiPhiE,
        FrameRelation::PhiEXi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FrameRelation::EE => "nabla_e_e",
            FrameRelation::PhiEPhiE => "nabla_phie_phie",
            FrameRelation::XiXi => "nabla_xi_xi",
            FrameRelation::EPhiE => "nabla_e_phie",
            FrameRelation::PhiEE => "nabla_phie_e",
            FrameRelation::XiE => "nabla_xi_e",
            FrameRelation::EXi => "nabla_e_xi",
            FrameRelation::XiPhiE => "nabla_xi_phie",
            FrameRelation::PhiEXi => "nabla_phie_xi",
        }
    }

    /// `(X, Y, expected ∇_X Y)` instances for the frame at one point.
    fn instances(
        self,
        alpha: f64,
        e: &[VectorField],
        pe: &[VectorField],
        xi: &VectorField,
        val: &dyn Fn(&VectorField) -> Result<DVector<f64>, GeometryError>,
    ) -> Result<Vec<(VectorField, VectorField, DVector<f64>)>, GeometryError> {
        let n = e.len();
        let xv = val(xi)?;
        let zero = DVector::zeros(xv.len());
        let mut out = Vec::new();
        let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        match self {
            FrameRelation::XiXi => out.push((xi.clone(), xi.clone(), zero)),
            FrameRelation::EE | FrameRelation::PhiEPhiE | FrameRelation::EPhiE | FrameRelation::PhiEE => {
                for i in 0..n {
                    for j in 0..n {
                        let (x, y, exp) = match self {
                            FrameRelation::EE => (&e[i], &e[j], zero.clone()),
                            FrameRelation::PhiEPhiE => (&pe[i], &pe[j], zero.clone()),
                            FrameRelation::EPhiE => (&e[i], &pe[j], &xv * (alpha * delta(i, j))),
                            _ => (&pe[i], &e[j], &xv * (-alpha * delta(i, j))),
                        };
                        out.push((x.clone(), y.clone(), exp));
                    }
                }
            }
            _ => {
                for i in 0..n {
                    let (x, y, exp) = match self {
                        FrameRelation::XiE => (xi, &e[i], val(&pe[i])? * -alpha),
                        FrameRelation::EXi => (&e[i], xi, val(&pe[i])? * -alpha),
                        FrameRelation::XiPhiE => (xi, &pe[i], val(&e[i])? * alpha),
                        _ => (&pe[i], xi, val(&e[i])? * alpha),
                    };
                    out.push((x.clone(), y.clone(), exp));
                }
            }
        }
        Ok(out)
    }
}

/// One probe report per frame relation, `‖∇_X Y − expected‖` with the Koszul
/// connection, plus the orthonormality of the frame (a hard check) and the
/// printed form `φ̄(eᵢ) = 2∂xᵢ − αfᵢξ̄` (a probe).
pub fn frame_connection_check(
    spec: &ContactizationSpec,
    samples: &Samples,
    tol: f64,
) -> Result<Vec<CheckReport>, ProductError> {
    let prod = build_contactization(spec)?;
    let (e, pe, xi) = frame_fields(spec, &prod);
    let m = prod.manifold();
    let n = e.len();
    let d = m.dim();
    let alpha = spec.alpha();
    let rels = FrameRelation::ALL;
    // per sample: [relations..., orthonormality, printed φ̄e]
    let per: Vec<Vec<Vec<f64>>> = samples
        .items()
        .par_iter()
        .map(|s| {
            let local = m.local(&s.point)?;
            let val = |v: &VectorField| v.eval(m, &s.point);
            let mut out = Vec::new();
            for rel in rels {
                let mut r = Vec::new();
                for (x, y, exp) in rel.instances(alpha, &e, &pe, &xi, &val)? {
                    r.push((local.koszul_connection(&x, &y)? - exp).norm());
                }
                out.push(r);
            }
            let frame = adapted_frame_from(&e, &pe, &xi, m, &s.point)?;
            let gram = frame.transpose() * local.metric() * &frame;
            out.push(vec![(gram - DMatrix::<f64>::identity(d, d)).abs().max()]);
            let f = potential_coefficients(spec.base(), &s.point)?;
            let xiv = val(&xi)?;
            let mut printed = Vec::new();
            for i in 0..n {
                let claim = DVector::from_fn(d, |k, _| if k == i { 2.0 } else { 0.0 }) - &xiv * (alpha * f[i]);
                printed.push((val(&pe[i])? - claim).norm());
            }
            out.push(printed);
            Ok(out)
        })
        .collect::<Result<_, GeometryError>>()?;
    let gather = |k: usize| -> Residuals { per.iter().flat_map(|s| s[k].iter().copied()).collect() };
    let mut reports = Vec::new();
    for (k, rel) in rels.iter().enumerate() {
        reports.push(
            CheckReport::new(format!("frame_connection/{}", rel.name()), &gather(k), tol, samples.seed())
                .with_samples(samples.len())
                .expecting(Expectation::Probe)
                .with_convention("alpha", &alpha.to_string()),
        );
    }
    reports.push(
        CheckReport::new("frame/orthonormal", &gather(rels.len()), 1e-10, samples.seed())
            .with_samples(samples.len()),
    );
    reports.push(
        CheckReport::new("frame/phi_e_printed", &gather(rels.len() + 1), ALGEBRAIC_TOL, samples.seed())
            .with_samples(samples.len())
            .expecting(Expectation::Probe)
            .with_convention("J", jconv(spec.base())),
    );
    Ok(reports)
}

fn jconv(base: &AlmostComplexStructure) -> &'static str {
    match base.convention {
        crate::structures::JConvention::DyToDx => "dy-to-dx",
        crate::structures::JConvention::DxToDy => "dx-to-dy",
        crate::structures::JConvention::Unspecified => "unspecified",
    }
}

fn adapted_frame_from(
    e: &[VectorField],
    pe: &[VectorField],
    xi: &VectorField,
    m: &crate::tensor::ChartedManifold,
    p: &[f64],
) -> Result<DMatrix<f64>, GeometryError> {
    let cols: Vec<DVector<f64>> =
        e.iter().chain(pe).chain(std::iter::once(xi)).map(|v| v.eval(m, p)).collect::<Result<_, _>>()?;
    Ok(DMatrix::from_columns(&cols))
}

/// The scalar that the α-Sasakian argument requires to vanish,
/// `−a²·a·ω(Y₁)h₁ + η̄(Y)h₁ − a·h₁h₂` with `η̄(Y) = aω(Y₁) + h₂`, where `hᵢ`
/// are the multiples of the unit tangent `T` in `X` and `Y`.
pub fn scalar_identity_residual(a: f64, omega_y1: f64, h1: f64, h2: f64) -> f64 {
    let eta_bar_y = a * omega_y1 + h2;
    -a * a * a * omega_y1 * h1 + eta_bar_y * h1 - a * h1 * h2
}

/// For each α: the α-Sasakian check on the contactization built with that α
/// (expected to pass), the Sasakian check (α = 1 form; a probe for α ≠ 1)
/// and the scalar identity at the sample fields (a probe for α ≠ 1).
pub fn alpha_sasakian_probe(
    spec: &ContactizationSpec,
    alphas: &[f64],
    count: usize,
    seed: u64,
) -> Result<Vec<CheckReport>, ProductError> {
    let mut out = Vec::new();
    for &alpha in alphas {
        let s = spec.with_alpha(alpha)?;
        let prod = build_contactization(&s)?;
        let smp = Samples::generate(prod.manifold(), seed, count);
        let expect = if alpha == 1.0 { Expectation::Pass } else { Expectation::Probe };
        let r = check_alpha_sasakian(&prod.structure, alpha, &smp, CONNECTION_TOL)?;
        out.push(CheckReport { name: format!("alpha_sasakian/alpha={alpha}"), ..r });
        let r = check_alpha_sasakian(&prod.structure, 1.0, &smp, CONNECTION_TOL)?;
        out.push(CheckReport { name: format!("sasakian/alpha={alpha}"), ..r }.expecting(expect));

        let n1 = prod.base_dim();
        let t = n1;
        let mut rng = rng_for(seed, 0xa1fa);
        let mut res = Residuals::new();
        for smp in smp.iter() {
            let w = s.base().omega.eval(&s.base().manifold, &smp.point[..n1])?;
            for x in &smp.fields {
                for y in &smp.fields {
                    let xv = x.eval(prod.manifold(), &smp.point)?;
                    let yv = y.eval(prod.manifold(), &smp.point)?;
                    let wy = (0..n1).map(|k| w[k] * yv[k]).sum::<f64>();
                    res.push(scalar_identity_residual(alpha, wy, xv[t] / 2.0, yv[t] / 2.0));
                }
            }
            let (h1, h2, wy): (f64, f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            res.push(scalar_identity_residual(alpha, wy, h1, h2));
        }
        out.push(
            CheckReport::new(format!("scalar_identity/alpha={alpha}"), &res, ALGEBRAIC_TOL, seed)
                .with_samples(smp.len())
                .expecting(expect),
        );
    }
    Ok(out)
}

/// `|Φ̄(X,Y) − Φ₁(X₁,Y₁)|` for product fields and their base projections.
pub fn fundamental_form_lift_check(
    spec: &ContactizationSpec,
    samples: &Samples,
    tol: f64,
) -> Result<CheckReport, ProductError> {
    let prod = build_contactization(spec)?;
    let m = prod.manifold();
    let base = spec.base();
    let n1 = prod.base_dim();
    let mut r = Residuals::new();
    for s in samples.iter() {
        let g = m.metric_at(&s.point)?;
        let phi = prod.structure.phi.eval(m, &s.point)?;
        let g1 = base.manifold.metric_at(&s.point[..n1])?;
        let j = base.j.eval(&base.manifold, &s.point[..n1])?;
        for x in &s.fields {
            for y in &s.fields {
                let xv = x.eval(m, &s.point)?;
                let yv = y.eval(m, &s.point)?;
                let lhs = xv.dot(&(&g * (&phi * &yv)));
                let x1 = xv.rows(0, n1).into_owned();
                let y1 = yv.rows(0, n1).into_owned();
                r.push(lhs - x1.dot(&(&g1 * (&j * y1))));
            }
        }
    }
    Ok(CheckReport::new("fundamental_form_lift", &r, tol, samples.seed()).with_samples(samples.len()))
}
