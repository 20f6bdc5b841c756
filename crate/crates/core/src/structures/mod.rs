//! Almost contact and almost Hermitian structures and their axiom checkers.
//!
//! Each checker evaluates an identity that is supposed to hold "for all
//! vector fields" on every sample point, using the coordinate fields
//! (exhaustively) together with the random polynomial fields of the sample.

mod report;
pub mod samples;

pub use report::{
    CheckReport, Expectation, Residuals, Verdict, ALGEBRAIC_TOL, CONNECTION_TOL, INTEGRATED_TOL,
};
pub use samples::{Sample, Samples};

use crate::tensor::{
    ChartedManifold, DConvention, EndoField, GeometryError, LocalGeometry, OneFormField, VectorField,
};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StructureError {
    #[error("{what}: expected dimension {expected}, found {found}")]
    DimensionMismatch { what: String, expected: usize, found: usize },
    #[error("alpha must be nonzero")]
    InvalidAlpha,
    #[error("coefficient equations need the J(∂y) = ∂x convention, structure declares {0:?}")]
    ConventionMismatch(JConvention),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Orientation of an almost complex structure in `(x₁..xₙ, y₁..yₙ)` charts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JConvention {
    /// `J∂yᵢ = ∂xᵢ`, `J∂xᵢ = −∂yᵢ`.
    DyToDx,
    /// `J∂xᵢ = ∂yᵢ`, `J∂yᵢ = −∂xᵢ`.
    DxToDy,
    #[default]
    Unspecified,
}

/// `(φ, ξ, η)` on a chart, with the chart's metric.
#[derive(Debug, Clone)]
pub struct AlmostContactStructure {
    pub manifold: ChartedManifold,
    pub phi: EndoField,
    pub xi: VectorField,
    pub eta: OneFormField,
}

/// `(J, ω)` on an even-dimensional chart; `ω` is the exact potential.
#[derive(Debug, Clone)]
pub struct AlmostComplexStructure {
    pub manifold: ChartedManifold,
    pub j: EndoField,
    pub omega: OneFormField,
    pub convention: JConvention,
}

fn check_dim(m: &ChartedManifold, found: usize, what: &str) -> Result<(), StructureError> {
    if found != m.dim() {
        return Err(StructureError::DimensionMismatch {
            what: what.into(),
            expected: m.dim(),
            found,
        });
    }
    Ok(())
}

fn check_endo(m: &ChartedManifold, e: &EndoField, what: &str) -> Result<(), StructureError> {
    check_dim(m, e.dim(), what)?;
    for row in e.rows() {
        check_dim(m, row.len(), what)?;
        for x in row {
            m.check_expr(x, what)?;
        }
    }
    Ok(())
}

fn check_exprs<'a>(
    m: &ChartedManifold,
    exprs: impl ExactSizeIterator<Item = &'a crate::expr::Expr>,
    what: &str,
) -> Result<(), StructureError> {
    check_dim(m, exprs.len(), what)?;
    for x in exprs {
        m.check_expr(x, what)?;
    }
    Ok(())
}

impl AlmostContactStructure {
    pub fn new(
        manifold: ChartedManifold,
        phi: EndoField,
        xi: VectorField,
        eta: OneFormField,
    ) -> Result<Self, StructureError> {
        check_endo(&manifold, &phi, "phi")?;
        check_exprs(&manifold, xi.components().iter(), "xi")?;
        check_exprs(&manifold, eta.components().iter(), "eta")?;
        Ok(AlmostContactStructure { manifold, phi, xi, eta })
    }

    /// `Φ(X,Y) = g(X, φY)`.
    pub fn fundamental_form(&self, x: &VectorField, y: &VectorField, p: &[f64]) -> Result<f64, StructureError> {
        let g = self.manifold.metric_at(p)?;
        let phi = self.phi.eval(&self.manifold, p)?;
        let xv = x.eval(&self.manifold, p)?;
        let yv = y.eval(&self.manifold, p)?;
        Ok(xv.dot(&(&g * (phi * yv))))
    }
}

impl AlmostComplexStructure {
    pub fn new(
        manifold: ChartedManifold,
        j: EndoField,
        omega: OneFormField,
        convention: JConvention,
    ) -> Result<Self, StructureError> {
        check_endo(&manifold, &j, "J")?;
        check_exprs(&manifold, omega.components().iter(), "omega")?;
        if !manifold.dim().is_multiple_of(2) {
            return Err(StructureError::DimensionMismatch {
                what: "almost complex chart must be even-dimensional".into(),
                expected: manifold.dim() + 1,
                found: manifold.dim(),
            });
        }
        Ok(AlmostComplexStructure { manifold, j, omega, convention })
    }

    pub fn half_dim(&self) -> usize {
        self.manifold.dim() / 2
    }

    /// `Φ₁(X,Y) = g₁(X, JY)`.
    pub fn fundamental_form(&self, x: &VectorField, y: &VectorField, p: &[f64]) -> Result<f64, StructureError> {
        let g = self.manifold.metric_at(p)?;
        let j = self.j.eval(&self.manifold, p)?;
        let xv = x.eval(&self.manifold, p)?;
        let yv = y.eval(&self.manifold, p)?;
        Ok(xv.dot(&(&g * (j * yv))))
    }
}

/// Pointwise values of a structure's tensors.
struct ContactValues {
    phi: DMatrix<f64>,
    xi: DVector<f64>,
    eta: DVector<f64>,
}

impl ContactValues {
    fn at(s: &AlmostContactStructure, p: &[f64]) -> Result<Self, StructureError> {
        Ok(ContactValues {
            phi: s.phi.eval(&s.manifold, p)?,
            xi: s.xi.eval(&s.manifold, p)?,
            eta: s.eta.eval(&s.manifold, p)?,
        })
    }
}

/// Evaluates `f` on every sample (in parallel) and gathers residuals in
/// sample order.
fn gather<F>(samples: &Samples, f: F) -> Result<Residuals, StructureError>
where
    F: Fn(&Sample) -> Result<Vec<f64>, StructureError> + Sync + Send,
{
    let per_sample: Vec<Vec<f64>> = samples.items().par_iter().map(f).collect::<Result<_, _>>()?;
    Ok(per_sample.into_iter().flatten().collect())
}

fn finish(name: &str, r: Residuals, tol: f64, samples: &Samples) -> CheckReport {
    CheckReport::new(name, &r, tol, samples.seed())
        .with_samples(samples.len())
        .with_note(format!("{} evaluations", r.count()))
}

/// `‖φ²X + X − η(X)ξ‖ + |η(ξ) − 1| + ‖φξ‖ + |η(φX)|`.
pub fn check_almost_contact(
    s: &AlmostContactStructure,
    samples: &Samples,
    tol: f64,
) -> Result<CheckReport, StructureError> {
    let d = s.manifold.dim();
    let r = gather(samples, |smp| {
        let v = ContactValues::at(s, &smp.point)?;
        let phi2 = &v.phi * &v.phi;
        let fixed = (v.eta.dot(&v.xi) - 1.0).abs() + (&v.phi * &v.xi).norm();
        samples::test_fields(d, smp, 1)
            .iter()
            .map(|x| {
                let xv = x.eval(&s.manifold, &smp.point)?;
                let a = (&phi2 * &xv + &xv - &v.xi * v.eta.dot(&xv)).norm();
                Ok(a + fixed + v.eta.dot(&(&v.phi * &xv)).abs())
            })
            .collect()
    })?;
    Ok(finish("almost_contact", r, tol, samples))
}

/// Compatibility `g(φX,φY) = g(X,Y) − η(X)η(Y)` together with `g(X,ξ) = η(X)`,
/// `g(φX,ξ) = 0` and antisymmetry of `g(φ·,·)`.
pub fn check_metric_compatibility(
    s: &AlmostContactStructure,
    samples: &Samples,
    tol: f64,
) -> Result<CheckReport, StructureError> {
    let d = s.manifold.dim();
    let r = gather(samples, |smp| {
        let p = &smp.point;
        let g = s.manifold.metric_at(p)?;
        let v = ContactValues::at(s, p)?;
        let inner = |a: &DVector<f64>, b: &DVector<f64>| a.dot(&(&g * b));
        samples::test_pairs(d, smp)
            .iter()
            .map(|(x, y)| {
                let xv = x.eval(&s.manifold, p)?;
                let yv = y.eval(&s.manifold, p)?;
                let px = &v.phi * &xv;
                let py = &v.phi * &yv;
                let compat = inner(&px, &py) - inner(&xv, &yv) + v.eta.dot(&xv) * v.eta.dot(&yv);
                let reeb = inner(&xv, &v.xi) - v.eta.dot(&xv);
                let orth = inner(&px, &v.xi);
                let skew = inner(&px, &yv) + inner(&py, &xv);
                Ok(compat.abs() + reeb.abs() + orth.abs() + skew.abs())
            })
            .collect()
    })?;
    Ok(finish("metric_compatibility", r, tol, samples))
}

/// `|dη(X,Y) − c·g(X,φY)|` per test pair at one point.
fn contact_residuals(
    s: &AlmostContactStructure,
    local: &LocalGeometry<'_>,
    pairs: &[(VectorField, VectorField)],
    convention: DConvention,
    factor: f64,
) -> Result<Vec<f64>, StructureError> {
    let phi = s.phi.eval(&s.manifold, local.point())?;
    pairs
        .iter()
        .map(|(x, y)| {
            let de = local.d_oneform(&s.eta, x, y, convention)?;
            let xv = local.value(x)?;
            let yv = local.value(y)?;
            Ok((de - factor * local.inner(&xv, &(&phi * yv))).abs())
        })
        .collect()
}

/// `|dη(X,Y) − g(X,φY)|` under the given exterior-derivative convention.
pub fn check_contact_metric(
    s: &AlmostContactStructure,
    convention: DConvention,
    samples: &Samples,
    tol: f64,
) -> Result<CheckReport, StructureError> {
    let r = scaled_contact_residuals(s, convention, 1.0, samples)?;
    Ok(finish("contact_metric", r, tol, samples).with_convention("d", convention.as_str()))
}

/// `|dη(X,Y) − c·Φ(X,Y)|`: the structure is contact up to the constant `c`.
pub fn check_contact_proportionality(
    s: &AlmostContactStructure,
    factor: f64,
    convention: DConvention,
    samples: &Samples,
    tol: f64,
) -> Result<CheckReport, StructureError> {
    let r = scaled_contact_residuals(s, convention, factor, samples)?;
    Ok(finish("contact_proportionality", r, tol, samples)
        .with_convention("d", convention.as_str())
        .with_note(format!("factor = {factor}")))
}

fn scaled_contact_residuals(
    s: &AlmostContactStructure,
    convention: DConvention,
    factor: f64,
    samples: &Samples,
) -> Result<Residuals, StructureError> {
    let d = s.manifold.dim();
    gather(samples, |smp| {
        let local = s.manifold.local(&smp.point)?;
        contact_residuals(s, &local, &samples::test_pairs(d, smp), convention, factor)
    })
}

/// `‖(∇_X φ)Y − α(g(X,Y)ξ − η(Y)X)‖`.
pub fn check_alpha_sasakian(
    s: &AlmostContactStructure,
    alpha: f64,
    samples: &Samples,
    tol: f64,
) -> Result<CheckReport, StructureError> {
    if alpha == 0.0 {
        return Err(StructureError::InvalidAlpha);
    }
    let d = s.manifold.dim();
    let r = gather(samples, |smp| {
        let local = s.manifold.local(&smp.point)?;
        let v = ContactValues::at(s, &smp.point)?;
        samples::test_pairs(d, smp)
            .iter()
            .map(|(x, y)| {
                let lhs = local.nabla_endo(&s.phi, x, y)?;
                let xv = local.value(x)?;
                let yv = local.value(y)?;
                let rhs = (&v.xi * local.inner(&xv, &yv) - &xv * v.eta.dot(&yv)) * alpha;
                Ok((lhs - rhs).norm())
            })
            .collect()
    })?;
    Ok(finish("alpha_sasakian", r, tol, samples).with_note(format!("alpha = {alpha}")))
}

/// K-contact: contact metric with `∇_X ξ = −φX`. The residual per pair is
/// `‖∇_X ξ + φX‖ + |dη(X,Y) − Φ(X,Y)|` (half convention).
pub fn check_k_contact(
    s: &AlmostContactStructure,
    samples: &Samples,
    tol: f64,
) -> Result<CheckReport, StructureError> {
    let d = s.manifold.dim();
    let r = gather(samples, |smp| {
        let local = s.manifold.local(&smp.point)?;
        let phi = s.phi.eval(&s.manifold, &smp.point)?;
        let pairs = samples::test_pairs(d, smp);
        let contact = contact_residuals(s, &local, &pairs, DConvention::Half, 1.0)?;
        pairs
            .iter()
            .zip(contact)
            .map(|((x, _), c)| {
                let killing = local.nabla(x, &s.xi)? + &phi * local.value(x)?;
                Ok(killing.norm() + c)
            })
            .collect()
    })?;
    Ok(finish("k_contact", r, tol, samples).with_convention("d", "half"))
}

/// Self-consistency of the connection oracle on a chart, as three reports:
/// symmetry of `Γᵏᵢⱼ` in `i, j` (absolute) together with
/// `∇_X Y − ∇_Y X − [X,Y]` (relative to the sizes of the three terms),
/// metric compatibility `X g(Y,Z) − g(∇_X Y, Z) − g(Y, ∇_X Z)`, and agreement
/// of `2g(∇_X Y, Z)` with the Koszul right-hand side. Each sample contributes
/// its random triple and every coordinate triple.
pub fn check_connection_oracle(
    m: &ChartedManifold,
    samples: &Samples,
) -> Result<[CheckReport; 3], StructureError> {
    let d = m.dim();
    let per: Vec<[Vec<f64>; 3]> = samples
        .items()
        .par_iter()
        .map(|smp| {
            let local = m.local(&smp.point)?;
            let gamma = local.christoffel();
            let mut torsion = Vec::new();
            for k in 0..d {
                for i in 0..d {
                    for j in 0..d {
                        torsion.push((gamma.get(k, i, j) - gamma.get(k, j, i)).abs());
                    }
                }
            }
            let mut triples = vec![smp.fields.clone()];
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        triples.push([
                            VectorField::coordinate(d, i),
                            VectorField::coordinate(d, j),
                            VectorField::coordinate(d, k),
                        ]);
                    }
                }
            }
            let mut compat = Vec::new();
            let mut koszul = Vec::new();
            for [x, y, z] in &triples {
                let xv = local.value(x)?;
                let yv = local.value(y)?;
                let zv = local.value(z)?;
                let nxy = local.nabla(x, y)?;
                let nxz = local.nabla(x, z)?;
                let lhs = local.derive_inner(&xv, y, z)?;
                compat.push((lhs - local.inner(&nxy, &zv) - local.inner(&yv, &nxz)).abs());
                koszul.push((2.0 * local.inner(&nxy, &zv) - local.koszul(x, y, z)?).abs());
                let nyx = local.nabla(y, x)?;
                let bracket = local.lie_bracket(x, y)?;
                let scale = 1.0 + nxy.norm() + nyx.norm() + bracket.norm();
                torsion.push((&nxy - nyx - bracket).norm() / scale);
            }
            Ok([torsion, compat, koszul])
        })
        .collect::<Result<_, StructureError>>()?;
    let name = m.name();
    let mk = |k: usize, what: &str, tol: f64| {
        let r: Residuals = per.iter().flat_map(|r| r[k].iter().copied()).collect();
        CheckReport::new(format!("oracle/{name}/{what}"), &r, tol, samples.seed())
            .with_samples(samples.len())
            .with_note(format!("{} evaluations", r.count()))
    };
    Ok([mk(0, "torsion", 1e-12), mk(1, "metric_compatibility", 1e-7), mk(2, "koszul", 1e-8)])
}

/// `‖J²X + X‖ + |g(JX,JY) − g(X,Y)|`.
pub fn check_hermitian(
    a: &AlmostComplexStructure,
    samples: &Samples,
    tol: f64,
) -> Result<CheckReport, StructureError> {
    let d = a.manifold.dim();
    let r = gather(samples, |smp| {
        let p = &smp.point;
        let g = a.manifold.metric_at(p)?;
        let j = a.j.eval(&a.manifold, p)?;
        let j2 = &j * &j;
        samples::test_pairs(d, smp)
            .iter()
            .map(|(x, y)| {
                let xv = x.eval(&a.manifold, p)?;
                let yv = y.eval(&a.manifold, p)?;
                let square = (&j2 * &xv + &xv).norm();
                let jx = &j * &xv;
                let jy = &j * &yv;
                let isometry = jx.dot(&(&g * jy)) - xv.dot(&(&g * yv));
                Ok(square + isometry.abs())
            })
            .collect()
    })?;
    Ok(finish("hermitian", r, tol, samples))
}

/// `‖(∇_X J)Y‖`.
pub fn check_kaehler(
    a: &AlmostComplexStructure,
    samples: &Samples,
    tol: f64,
) -> Result<CheckReport, StructureError> {
    let d = a.manifold.dim();
    let r = gather(samples, |smp| {
        let local = a.manifold.local(&smp.point)?;
        samples::test_pairs(d, smp)
            .iter()
            .map(|(x, y)| Ok(local.nabla_endo(&a.j, x, y)?.norm()))
            .collect()
    })?;
    Ok(finish("kaehler", r, tol, samples))
}

/// `|dω(X,Y) − g(X,JY)|`.
pub fn check_exact_potential(
    a: &AlmostComplexStructure,
    convention: DConvention,
    samples: &Samples,
    tol: f64,
) -> Result<CheckReport, StructureError> {
    let d = a.manifold.dim();
    let r = gather(samples, |smp| {
        let local = a.manifold.local(&smp.point)?;
        let j = a.j.eval(&a.manifold, &smp.point)?;
        samples::test_pairs(d, smp)
            .iter()
            .map(|(x, y)| {
                let dw = local.d_oneform(&a.omega, x, y, convention)?;
                let xv = local.value(x)?;
                let yv = local.value(y)?;
                Ok((dw - local.inner(&xv, &(&j * yv))).abs())
            })
            .collect()
    })?;
    Ok(finish("exact_potential", r, tol, samples).with_convention("d", convention.as_str()))
}

/// Largest residual of each coefficient-equation family at `p`, where
/// `fᵢ = ω(2∂xᵢ)` and `f_{n+i} = ω(2∂yᵢ)`:
///
/// 0. `∂fⱼ/∂xᵢ − ∂fᵢ/∂xⱼ = 0` (i ≠ j)
/// 1. `∂f_{n+i}/∂yⱼ − ∂f_{n+j}/∂yᵢ = 0` (i ≠ j)
/// 2. `∂f_{n+j}/∂xᵢ − ∂fᵢ/∂yⱼ = 0` (i ≠ j)
/// 3. `∂f_{n+i}/∂xᵢ − ∂fᵢ/∂yᵢ = 1`
pub fn coefficient_pde_residuals(
    a: &AlmostComplexStructure,
    p: &[f64],
) -> Result<[f64; 4], StructureError> {
    if a.convention != JConvention::DyToDx {
        return Err(StructureError::ConventionMismatch(a.convention));
    }
    let n = a.half_dim();
    let d = 2 * n;
    // partial[k][c] = ∂f_c/∂(coordinate k)
    let mut partial = vec![vec![0.0; d]; d];
    for (k, row) in partial.iter_mut().enumerate() {
        let q = crate::tensor::seeded(p, k);
        for (c, slot) in row.iter_mut().enumerate() {
            *slot = 2.0 * a.omega.components()[c].eval_at(a.manifold.coords(), &q).map_err(GeometryError::from)?.deriv;
        }
    }
    let dx = |i: usize, c: usize| partial[i][c];
    let dy = |i: usize, c: usize| partial[n + i][c];
    let mut out = [0.0f64; 4];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out[0] = out[0].max((dx(i, j) - dx(j, i)).abs());
                out[1] = out[1].max((dy(j, n + i) - dy(i, n + j)).abs());
                out[2] = out[2].max((dx(i, n + j) - dy(j, i)).abs());
            }
        }
        out[3] = out[3].max((dx(i, n + i) - dy(i, i) - 1.0).abs());
    }
    Ok(out)
}

pub fn check_coefficient_pdes(
    a: &AlmostComplexStructure,
    samples: &Samples,
    tol: f64,
) -> Result<CheckReport, StructureError> {
    if a.convention != JConvention::DyToDx {
        return Err(StructureError::ConventionMismatch(a.convention));
    }
    let per: Vec<[f64; 4]> = samples
        .items()
        .par_iter()
        .map(|s| coefficient_pde_residuals(a, &s.point))
        .collect::<Result<_, _>>()?;
    let r: Residuals = per.iter().map(|f| f.iter().copied().fold(0.0, f64::max)).collect();
    let mut family = [0.0f64; 4];
    for f in &per {
        for k in 0..4 {
            family[k] = family[k].max(f[k]);
        }
    }
    Ok(CheckReport::new("coefficient_pdes", &r, tol, samples.seed())
        .with_convention("J", "dy-to-dx")
        .with_note(format!(
            "family maxima: xx={:e} yy={:e} xy={:e} diagonal={:e}",
            family[0], family[1], family[2], family[3]
        )))
}

#[cfg(test)]
mod tests;
