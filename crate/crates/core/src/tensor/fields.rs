use super::{ChartedManifold, GeometryError};
use crate::expr::{Dual, Expr, Scalar};
use nalgebra::{DMatrix, DVector};

/// Vector field with one expression per coordinate direction.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<Expr>,
}

/// One-form given by its coordinate components `η = Σ ηᵢ dxᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormField {
    components: Vec<Expr>,
}

/// (1,1)-tensor; `rows[k][j]` is the `∂ₖ` component of the image of `∂ⱼ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EndoField {
    rows: Vec<Vec<Expr>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    expr: Expr,
}

impl VectorField {
    pub fn new(components: Vec<Expr>) -> Self {
        VectorField { components }
    }

    pub fn zero(dim: usize) -> Self {
        VectorField { components: vec![Expr::zero(); dim] }
    }

    /// The coordinate field `∂ᵢ`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut v = Self::zero(dim);
        v.components[i] = Expr::one();
        v
    }

    pub fn constant(values: &[f64]) -> Self {
        VectorField { components: values.iter().map(|&v| Expr::Const(v)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Expr {
        &self.components[i]
    }

    pub fn eval(&self, m: &ChartedManifold, p: &[f64]) -> Result<DVector<f64>, GeometryError> {
        m.check_len(self.dim(), "vector field")?;
        Ok(DVector::from_vec(self.eval_generic(m, p)?))
    }

    pub fn eval_generic<T: Scalar>(
        &self,
        m: &ChartedManifold,
        p: &[T],
    ) -> Result<Vec<T>, GeometryError> {
        self.components.iter().map(|e| Ok(e.eval_at(m.coords(), p)?)).collect()
    }

    pub fn scale(&self, s: &Expr) -> VectorField {
        VectorField::new(self.components.iter().map(|c| s.clone() * c.clone()).collect())
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField::new(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        )
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        VectorField::new(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        )
    }

    /// Embeds the field into a larger chart, placing its components starting at
    /// `offset` and zero elsewhere.
    pub fn lift(&self, dim: usize, offset: usize) -> VectorField {
        let mut v = VectorField::zero(dim);
        for (i, c) in self.components.iter().enumerate() {
            v.components[offset + i] = c.clone();
        }
        v
    }

    /// Components `offset..offset+len`.
    pub fn project(&self, offset: usize, len: usize) -> VectorField {
        VectorField::new(self.components[offset..offset + len].to_vec())
    }
}

impl OneFormField {
    pub fn new(components: Vec<Expr>) -> Self {
        OneFormField { components }
    }

    pub fn zero(dim: usize) -> Self {
        OneFormField { components: vec![Expr::zero(); dim] }
    }

    /// The exact form `dxᵢ`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut v = Self::zero(dim);
        v.components[i] = Expr::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn scale(&self, s: &Expr) -> OneFormField {
        OneFormField::new(self.components.iter().map(|c| s.clone() * c.clone()).collect())
    }

    /// `η(X)` as a scalar expression.
    pub fn apply(&self, x: &VectorField) -> Expr {
        self.components
            .iter()
            .zip(x.components())
            .fold(Expr::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
    }

    pub fn eval(&self, m: &ChartedManifold, p: &[f64]) -> Result<DVector<f64>, GeometryError> {
        m.check_len(self.dim(), "one-form")?;
        Ok(DVector::from_vec(self.eval_generic(m, p)?))
    }

    pub fn eval_generic<T: Scalar>(
        &self,
        m: &ChartedManifold,
        p: &[T],
    ) -> Result<Vec<T>, GeometryError> {
        self.components.iter().map(|e| Ok(e.eval_at(m.coords(), p)?)).collect()
    }

    pub fn lift(&self, dim: usize, offset: usize) -> OneFormField {
        let mut v = OneFormField::zero(dim);
        for (i, c) in self.components.iter().enumerate() {
            v.components[offset + i] = c.clone();
        }
        v
    }
}

impl EndoField {
    pub fn new(rows: Vec<Vec<Expr>>) -> Self {
        EndoField { rows }
    }

    pub fn zero(dim: usize) -> Self {
        EndoField { rows: vec![vec![Expr::zero(); dim]; dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut e = Self::zero(dim);
        for i in 0..dim {
            e.rows[i][i] = Expr::one();
        }
        e
    }

    pub fn from_constants(rows: &[Vec<f64>]) -> Self {
        EndoField {
            rows: rows.iter().map(|r| r.iter().map(|&v| Expr::Const(v)).collect()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn is_square(&self) -> bool {
        self.rows.iter().all(|r| r.len() == self.rows.len())
    }

    pub fn rows(&self) -> &[Vec<Expr>] {
        &self.rows
    }

    pub fn entry(&self, k: usize, j: usize) -> &Expr {
        &self.rows[k][j]
    }

    pub fn set(&mut self, k: usize, j: usize, e: Expr) {
        self.rows[k][j] = e;
    }

    pub fn scale(&self, s: &Expr) -> EndoField {
        EndoField::new(
            self.rows
                .iter()
                .map(|r| r.iter().map(|c| s.clone() * c.clone()).collect())
                .collect(),
        )
    }

    /// `φX` as a vector field.
    pub fn apply(&self, x: &VectorField) -> VectorField {
        VectorField::new(
            self.rows
                .iter()
                .map(|r| {
                    r.iter()
                        .zip(x.components())
                        .fold(Expr::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
                })
                .collect(),
        )
    }

    pub fn eval(&self, m: &ChartedManifold, p: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        if !self.is_square() {
            return Err(GeometryError::DimensionMismatch {
                what: "endomorphism field (not square)".into(),
                expected: self.dim(),
                found: self.rows.first().map_or(0, |r| r.len()),
            });
        }
        m.check_len(self.dim(), "endomorphism field")?;
        let d = self.dim();
        let vals = self.eval_generic(m, p)?;
        Ok(DMatrix::from_row_slice(d, d, &vals))
    }

    /// Row-major entries.
    pub fn eval_generic<T: Scalar>(
        &self,
        m: &ChartedManifold,
        p: &[T],
    ) -> Result<Vec<T>, GeometryError> {
        let mut out = Vec::with_capacity(self.dim() * self.dim());
        for r in &self.rows {
            for e in r {
                out.push(e.eval_at(m.coords(), p)?);
            }
        }
        Ok(out)
    }
}

impl ScalarField {
    pub fn new(expr: Expr) -> Self {
        ScalarField { expr }
    }

    pub fn constant(v: f64) -> Self {
        ScalarField { expr: Expr::Const(v) }
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn eval(&self, m: &ChartedManifold, p: &[f64]) -> Result<f64, GeometryError> {
        Ok(self.expr.eval_at(m.coords(), p)?)
    }

    /// Partial derivatives `∂ᵢf` at `p`, one dual pass per coordinate.
    pub fn differential(&self, m: &ChartedManifold, p: &[f64]) -> Result<DVector<f64>, GeometryError> {
        let d = m.dim();
        let mut out = DVector::zeros(d);
        for i in 0..d {
            let q = super::seeded(p, i);
            out[i] = self.expr.eval_at::<Dual>(m.coords(), &q)?.deriv;
        }
        Ok(out)
    }
}

impl From<Expr> for ScalarField {
    fn from(expr: Expr) -> Self {
        ScalarField { expr }
    }
}
