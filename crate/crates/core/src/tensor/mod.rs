//! Charted manifolds and the pointwise connection oracle.
//!
//! All derivatives are exact: fields and metric entries are [`Expr`] trees
//! evaluated over [`Dual`] numbers seeded along a coordinate or a direction.
//! The Levi-Civita connection is available two ways: from Christoffel symbols
//! ([`LocalGeometry::nabla`]) and from the Koszul formula
//! ([`LocalGeometry::koszul`]), which only uses metric values, directional
//! derivatives and Lie brackets.

mod fields;
mod linalg;

pub use fields::{EndoField, OneFormField, ScalarField, VectorField};
pub use linalg::{cholesky, spd_inverse};

use crate::expr::{Dual, EvalError, Expr, Scalar};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("{what}: expected dimension {expected}, found {found}")]
    DimensionMismatch { what: String, expected: usize, found: usize },
    #[error("unknown coordinate `{name}` in {context}")]
    UnknownCoordinate { name: String, context: String },
    #[error("duplicate coordinate `{0}`")]
    DuplicateCoordinate(String),
    #[error("invalid sampling interval for `{coord}`: [{lo}, {hi}]")]
    InvalidBox { coord: String, lo: f64, hi: f64 },
    #[error("metric entries ({i},{j}) and ({j},{i}) differ")]
    AsymmetricMetric { i: usize, j: usize },
    #[error("metric is not positive definite at {point:?} (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { point: Vec<f64>, min_eigenvalue: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Exterior derivative normalization for one-forms.
///
/// `Half`: `dη(X,Y) = ½(Xη(Y) − Yη(X) − η([X,Y]))`; `Plain` drops the ½.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DConvention {
    #[default]
    Half,
    Plain,
}

impl DConvention {
    pub fn factor(self) -> f64 {
        match self {
            DConvention::Half => 0.5,
            DConvention::Plain => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DConvention::Half => "half",
            DConvention::Plain => "plain",
        }
    }
}

/// How partial derivatives of the metric are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    Dual,
    /// Central differences with step `h`, one Richardson extrapolation.
    FiniteDifference { h: f64 },
}

/// A single coordinate patch with a metric given by expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartedManifold {
    name: String,
    coords: Vec<String>,
    bounds: Vec<[f64; 2]>,
    metric: Vec<Vec<Expr>>,
}

impl ChartedManifold {
    pub fn new(
        name: impl Into<String>,
        coords: Vec<String>,
        bounds: Vec<[f64; 2]>,
        metric: Vec<Vec<Expr>>,
    ) -> Result<Self, GeometryError> {
        let d = coords.len();
        for (i, c) in coords.iter().enumerate() {
            if coords[..i].contains(c) {
                return Err(GeometryError::DuplicateCoordinate(c.clone()));
            }
        }
        if bounds.len() != d {
            return Err(GeometryError::DimensionMismatch {
                what: "sampling box".into(),
                expected: d,
                found: bounds.len(),
            });
        }
        for (c, b) in coords.iter().zip(&bounds) {
            if !(b[0].is_finite() && b[1].is_finite() && b[0] <= b[1]) {
                return Err(GeometryError::InvalidBox { coord: c.clone(), lo: b[0], hi: b[1] });
            }
        }
        if metric.len() != d {
            return Err(GeometryError::DimensionMismatch {
                what: "metric rows".into(),
                expected: d,
                found: metric.len(),
            });
        }
        for row in &metric {
            if row.len() != d {
                return Err(GeometryError::DimensionMismatch {
                    what: "metric columns".into(),
                    expected: d,
                    found: row.len(),
                });
            }
        }
        let m = ChartedManifold { name: name.into(), coords, bounds, metric };
        for i in 0..d {
            for j in 0..d {
                m.check_expr(&m.metric[i][j], "metric")?;
                if j > i && m.metric[i][j] != m.metric[j][i] {
                    return Err(GeometryError::AsymmetricMetric { i, j });
                }
            }
        }
        Ok(m)
    }

    /// Euclidean chart `ℝᵈ` with the identity metric.
    pub fn euclidean(name: &str, coords: &[&str], bounds: Vec<[f64; 2]>) -> Result<Self, GeometryError> {
        let d = coords.len();
        let metric = (0..d)
            .map(|i| (0..d).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect())
            .collect();
        Self::new(name, coords.iter().map(|s| s.to_string()).collect(), bounds, metric)
    }

    /// The same chart with a different sampling box.
    pub fn with_bounds(&self, bounds: Vec<[f64; 2]>) -> Result<Self, GeometryError> {
        Self::new(self.name.clone(), self.coords.clone(), bounds, self.metric.clone())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    pub fn metric_exprs(&self) -> &[Vec<Expr>] {
        &self.metric
    }

    pub fn coord_index(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(&self.bounds).all(|(x, b)| *x >= b[0] && *x <= b[1])
    }

    /// Fails if the expression references an undeclared coordinate.
    pub fn check_expr(&self, e: &Expr, context: &str) -> Result<(), GeometryError> {
        for v in e.variables() {
            if !self.coords.contains(&v) {
                return Err(GeometryError::UnknownCoordinate { name: v, context: context.into() });
            }
        }
        Ok(())
    }

    pub(crate) fn check_len(&self, n: usize, what: &str) -> Result<(), GeometryError> {
        if n != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                what: what.into(),
                expected: self.dim(),
                found: n,
            });
        }
        Ok(())
    }

    /// Row-major metric entries over any scalar type. Only the upper triangle
    /// is evaluated; the lower triangle is mirrored, so the result is exactly
    /// symmetric.
    pub fn metric_generic<T: Scalar>(&self, p: &[T]) -> Result<Vec<T>, GeometryError> {
        let d = self.dim();
        let mut out = vec![T::from_f64(0.0); d * d];
        for i in 0..d {
            for j in i..d {
                let v = self.metric[i][j].eval_at(&self.coords, p)?;
                out[i * d + j] = v;
                out[j * d + i] = v;
            }
        }
        Ok(out)
    }

    /// Metric matrix at `p`, verified positive definite by Cholesky.
    pub fn metric_at(&self, p: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        self.check_len(p.len(), "point")?;
        let d = self.dim();
        let g = DMatrix::from_row_slice(d, d, &self.metric_generic(p)?);
        cholesky(&g).map_err(|min_eigenvalue| GeometryError::NotPositiveDefinite {
            point: p.to_vec(),
            min_eigenvalue,
        })?;
        Ok(g)
    }

    pub fn metric_inverse_at(&self, p: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        let g = self.metric_at(p)?;
        spd_inverse(&g).map_err(|min_eigenvalue| GeometryError::NotPositiveDefinite {
            point: p.to_vec(),
            min_eigenvalue,
        })
    }

    /// `∂ₕg` for every coordinate `h`.
    pub fn metric_derivatives(
        &self,
        p: &[f64],
        mode: DerivativeMode,
    ) -> Result<Vec<DMatrix<f64>>, GeometryError> {
        self.check_len(p.len(), "point")?;
        let d = self.dim();
        let mut out = Vec::with_capacity(d);
        for h in 0..d {
            let dg = match mode {
                DerivativeMode::Dual => {
                    let q = seeded(p, h);
                    let vals = self.metric_generic::<Dual>(&q)?;
                    DMatrix::from_iterator(d, d, vals.iter().map(|v| v.deriv)).transpose()
                }
                DerivativeMode::FiniteDifference { h: step } => {
                    let central = |s: f64| -> Result<DMatrix<f64>, GeometryError> {
                        let mut plus = p.to_vec();
                        let mut minus = p.to_vec();
                        plus[h] += s;
                        minus[h] -= s;
                        let a = DMatrix::from_row_slice(d, d, &self.metric_generic(&plus)?);
                        let b = DMatrix::from_row_slice(d, d, &self.metric_generic(&minus)?);
                        Ok((a - b) / (2.0 * s))
                    };
                    let coarse = central(step)?;
                    let fine = central(step / 2.0)?;
                    (fine * 4.0 - coarse) / 3.0
                }
            };
            out.push(dg);
        }
        Ok(out)
    }

    pub fn christoffel(&self, p: &[f64]) -> Result<Christoffel, GeometryError> {
        self.christoffel_with(p, DerivativeMode::Dual)
    }

    pub fn christoffel_with(
        &self,
        p: &[f64],
        mode: DerivativeMode,
    ) -> Result<Christoffel, GeometryError> {
        let ginv = self.metric_inverse_at(p)?;
        let dg = self.metric_derivatives(p, mode)?;
        Ok(Christoffel::from_parts(&ginv, &dg))
    }

    /// Caches metric, inverse and Christoffel symbols at `p`.
    pub fn local(&self, p: &[f64]) -> Result<LocalGeometry<'_>, GeometryError> {
        self.check_len(p.len(), "point")?;
        let g = self.metric_at(p)?;
        let ginv = spd_inverse(&g).map_err(|min_eigenvalue| GeometryError::NotPositiveDefinite {
            point: p.to_vec(),
            min_eigenvalue,
        })?;
        let dg = self.metric_derivatives(p, DerivativeMode::Dual)?;
        let gamma = Christoffel::from_parts(&ginv, &dg);
        Ok(LocalGeometry { manifold: self, point: p.to_vec(), g, ginv, gamma })
    }

    pub fn nabla(&self, x: &VectorField, y: &VectorField, p: &[f64]) -> Result<DVector<f64>, GeometryError> {
        self.local(p)?.nabla(x, y)
    }

    pub fn koszul(
        &self,
        x: &VectorField,
        y: &VectorField,
        z: &VectorField,
        p: &[f64],
    ) -> Result<f64, GeometryError> {
        self.local(p)?.koszul(x, y, z)
    }

    pub fn lie_bracket(&self, x: &VectorField, y: &VectorField, p: &[f64]) -> Result<DVector<f64>, GeometryError> {
        self.local(p)?.lie_bracket(x, y)
    }

    pub fn d_oneform(
        &self,
        eta: &OneFormField,
        x: &VectorField,
        y: &VectorField,
        p: &[f64],
        convention: DConvention,
    ) -> Result<f64, GeometryError> {
        self.local(p)?.d_oneform(eta, x, y, convention)
    }

    pub fn grad(&self, f: &ScalarField, p: &[f64]) -> Result<DVector<f64>, GeometryError> {
        self.local(p)?.grad(f)
    }

    pub fn nabla_endo(
        &self,
        phi: &EndoField,
        x: &VectorField,
        y: &VectorField,
        p: &[f64],
    ) -> Result<DVector<f64>, GeometryError> {
        self.local(p)?.nabla_endo(phi, x, y)
    }
}

/// `p` with coordinate `i` seeded as the dual variable.
pub(crate) fn seeded(p: &[f64], i: usize) -> Vec<Dual> {
    p.iter()
        .enumerate()
        .map(|(k, &v)| if k == i { Dual::variable(v) } else { Dual::constant(v) })
        .collect()
}

/// `p + ε·dir` as dual numbers.
pub(crate) fn along(p: &[f64], dir: &DVector<f64>) -> Vec<Dual> {
    p.iter().zip(dir.iter()).map(|(&v, &d)| Dual::new(v, d)).collect()
}

/// Christoffel symbols of the second kind, `Γᵏᵢⱼ`, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    /// `Γᵏᵢⱼ = ½ gᵏʰ (∂ⱼgᵢₕ + ∂ᵢgₕⱼ − ∂ₕgᵢⱼ)`, computed for `i ≤ j` and
    /// mirrored.
    pub fn from_parts(ginv: &DMatrix<f64>, dg: &[DMatrix<f64>]) -> Self {
        let d = ginv.nrows();
        let mut data = vec![0.0; d * d * d];
        let mut lowered = vec![0.0; d];
        for i in 0..d {
            for j in i..d {
                for (h, l) in lowered.iter_mut().enumerate() {
                    *l = 0.5 * (dg[j][(i, h)] + dg[i][(h, j)] - dg[h][(i, j)]);
                }
                for k in 0..d {
                    let v: f64 = (0..d).map(|h| ginv[(k, h)] * lowered[h]).sum();
                    data[k * d * d + i * d + j] = v;
                    data[k * d * d + j * d + i] = v;
                }
            }
        }
        Christoffel { dim: d, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Γᵏᵢⱼ`.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[k * self.dim * self.dim + i * self.dim + j]
    }

    /// `Γᵏᵢⱼ uⁱ vʲ`.
    pub fn contract(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let d = self.dim;
        DVector::from_fn(d, |k, _| {
            let mut s = 0.0;
            for i in 0..d {
                if u[i] == 0.0 {
                    continue;
                }
                for j in 0..d {
                    s += self.get(k, i, j) * u[i] * v[j];
                }
            }
            s
        })
    }
}

/// Metric data cached at one point, with the pointwise differential operators.
#[derive(Debug, Clone)]
pub struct LocalGeometry<'a> {
    manifold: &'a ChartedManifold,
    point: Vec<f64>,
    g: DMatrix<f64>,
    ginv: DMatrix<f64>,
    gamma: Christoffel,
}

impl<'a> LocalGeometry<'a> {
    pub fn manifold(&self) -> &'a ChartedManifold {
        self.manifold
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn metric_inverse(&self) -> &DMatrix<f64> {
        &self.ginv
    }

    pub fn christoffel(&self) -> &Christoffel {
        &self.gamma
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&(&self.g * v))
    }

    pub fn value(&self, x: &VectorField) -> Result<DVector<f64>, GeometryError> {
        x.eval(self.manifold, &self.point)
    }

    pub fn scalar(&self, e: &Expr) -> Result<f64, GeometryError> {
        Ok(e.eval_at(self.manifold.coords(), &self.point)?)
    }

    /// Derivative along `dir` of a quantity evaluated at a dual point.
    pub fn derivative_along<F>(&self, dir: &DVector<f64>, f: F) -> Result<f64, GeometryError>
    where
        F: FnOnce(&[Dual]) -> Result<Dual, GeometryError>,
    {
        let q = along(&self.point, dir);
        Ok(f(&q)?.deriv)
    }

    /// `X[Yᵏ]` for every `k`.
    pub fn directional(&self, dir: &DVector<f64>, y: &VectorField) -> Result<DVector<f64>, GeometryError> {
        let q = along(&self.point, dir);
        let vals = y.eval_generic::<Dual>(self.manifold, &q)?;
        Ok(DVector::from_iterator(vals.len(), vals.iter().map(|v| v.deriv)))
    }

    /// `X[g(Y,Z)]`, differentiating the metric and both fields.
    pub fn derive_inner(
        &self,
        x: &DVector<f64>,
        y: &VectorField,
        z: &VectorField,
    ) -> Result<f64, GeometryError> {
        let m = self.manifold;
        self.derivative_along(x, |q| {
            let d = m.dim();
            let g = m.metric_generic(q)?;
            let yv = y.eval_generic(m, q)?;
            let zv = z.eval_generic(m, q)?;
            let mut s = Dual::constant(0.0);
            for i in 0..d {
                for j in 0..d {
                    s = s + g[i * d + j] * yv[i] * zv[j];
                }
            }
            Ok(s)
        })
    }

    /// `∇_X Y` from Christoffel symbols.
    pub fn nabla(&self, x: &VectorField, y: &VectorField) -> Result<DVector<f64>, GeometryError> {
        self.manifold.check_len(x.dim(), "vector field")?;
        self.manifold.check_len(y.dim(), "vector field")?;
        let xv = self.value(x)?;
        let yv = self.value(y)?;
        Ok(self.directional(&xv, y)? + self.gamma.contract(&xv, &yv))
    }

    /// `∇_X Y` where `Y` is supplied through its components at a dual point.
    pub fn nabla_with<F>(&self, x: &DVector<f64>, y: F) -> Result<DVector<f64>, GeometryError>
    where
        F: Fn(&[Dual]) -> Result<Vec<Dual>, GeometryError>,
    {
        let q = along(&self.point, x);
        let vals = y(&q)?;
        let deriv = DVector::from_iterator(vals.len(), vals.iter().map(|v| v.deriv));
        let value = DVector::from_iterator(vals.len(), vals.iter().map(|v| v.value));
        Ok(deriv + self.gamma.contract(x, &value))
    }

    /// `[X,Y]ᵏ = X[Yᵏ] − Y[Xᵏ]`.
    pub fn lie_bracket(&self, x: &VectorField, y: &VectorField) -> Result<DVector<f64>, GeometryError> {
        self.manifold.check_len(x.dim(), "vector field")?;
        self.manifold.check_len(y.dim(), "vector field")?;
        let xv = self.value(x)?;
        let yv = self.value(y)?;
        Ok(self.directional(&xv, y)? - self.directional(&yv, x)?)
    }

    /// Right-hand side of the Koszul formula, i.e. `2g(∇_X Y, Z)`, computed
    /// without Christoffel symbols.
    pub fn koszul(&self, x: &VectorField, y: &VectorField, z: &VectorField) -> Result<f64, GeometryError> {
        let xv = self.value(x)?;
        let yv = self.value(y)?;
        let zv = self.value(z)?;
        let yz = self.lie_bracket(y, z)?;
        let zx = self.lie_bracket(z, x)?;
        let xy = self.lie_bracket(x, y)?;
        Ok(self.derive_inner(&xv, y, z)? + self.derive_inner(&yv, x, z)?
            - self.derive_inner(&zv, x, y)?
            - self.inner(&xv, &yz)
            + self.inner(&yv, &zx)
            + self.inner(&zv, &xy))
    }

    /// `∇_X Y` recovered from the Koszul formula: solves `g(w, ∂ₖ) = ½K(X,Y,∂ₖ)`.
    pub fn koszul_connection(&self, x: &VectorField, y: &VectorField) -> Result<DVector<f64>, GeometryError> {
        let d = self.manifold.dim();
        let mut rhs = DVector::zeros(d);
        for k in 0..d {
            rhs[k] = 0.5 * self.koszul(x, y, &VectorField::coordinate(d, k))?;
        }
        Ok(&self.ginv * rhs)
    }

    /// `η(Y)` differentiated along `X`.
    pub fn derive_pairing(&self, x: &DVector<f64>, eta: &OneFormField, y: &VectorField) -> Result<f64, GeometryError> {
        let m = self.manifold;
        self.derivative_along(x, |q| {
            let e = eta.eval_generic(m, q)?;
            let yv = y.eval_generic(m, q)?;
            Ok(e.iter().zip(&yv).fold(Dual::constant(0.0), |s, (a, b)| s + *a * *b))
        })
    }

    pub fn d_oneform(
        &self,
        eta: &OneFormField,
        x: &VectorField,
        y: &VectorField,
        convention: DConvention,
    ) -> Result<f64, GeometryError> {
        self.manifold.check_len(eta.dim(), "one-form")?;
        let xv = self.value(x)?;
        let yv = self.value(y)?;
        let e = eta.eval(self.manifold, &self.point)?;
        let bracket = self.lie_bracket(x, y)?;
        let raw = self.derive_pairing(&xv, eta, y)? - self.derive_pairing(&yv, eta, x)? - e.dot(&bracket);
        Ok(convention.factor() * raw)
    }

    /// `(grad f)ⁱ = gⁱʲ ∂ⱼf`.
    pub fn grad(&self, f: &ScalarField) -> Result<DVector<f64>, GeometryError> {
        Ok(&self.ginv * f.differential(self.manifold, &self.point)?)
    }

    /// `(∇_X φ)Y = ∇_X(φY) − φ(∇_X Y)`.
    pub fn nabla_endo(&self, phi: &EndoField, x: &VectorField, y: &VectorField) -> Result<DVector<f64>, GeometryError> {
        let m = self.manifold;
        let d = m.dim();
        let phi_p = phi.eval(m, &self.point)?;
        let xv = self.value(x)?;
        let nabla_phi_y = self.nabla_with(&xv, |q| {
            let ph = phi.eval_generic(m, q)?;
            let yv = y.eval_generic(m, q)?;
            Ok((0..d)
                .map(|k| (0..d).fold(Dual::constant(0.0), |s, j| s + ph[k * d + j] * yv[j]))
                .collect())
        })?;
        Ok(nabla_phi_y - phi_p * self.nabla(x, y)?)
    }
}
