//! Product constructions over a Kaehler base with exact potential: the
//! contactization `M₁ × β(I)` and the warped product `M₁ × M₂`, with the
//! closed-form formulas that are compared against the connection oracle.

mod contactization;
mod warped;

#[cfg(test)]
mod tests;

pub use contactization::{
    adapted_frame, alpha_sasakian_probe, christoffel_table_check, example_metric_matrix,
    frame_connection_check, frame_fields, fundamental_form_lift_check, printed_christoffel_table,
    printed_metric_inverse, printed_metric_matrix, potential_coefficients, scalar_identity_residual,
    ChristoffelEntry, ChristoffelTable, FrameRelation,
};
pub use warped::{
    base_connection_check, connection_base, connection_fiber, connection_mixed,
    fiber_parse_check, koszul_split_identity, mixed_connection_check, split_identity_check,
    AuxForms, ClosedForm, FiberParses, MixedForm, ParseWinner, SplitIdentity, SplitValues, WarpedProduct,
};

use crate::expr::Expr;
use crate::structures::samples::{mix_seed, Sample};
use crate::structures::{
    check_exact_potential, check_hermitian, check_kaehler, check_metric_compatibility,
    AlmostComplexStructure, AlmostContactStructure, Samples, StructureError, ALGEBRAIC_TOL,
};
use crate::tensor::{
    ChartedManifold, DConvention, EndoField, GeometryError, OneFormField, ScalarField, VectorField,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProductError {
    #[error("alpha must be nonzero")]
    InvalidAlpha,
    #[error("warp function is not positive at {point:?} (value {value})")]
    NonPositiveWarp { point: Vec<f64>, value: f64 },
    #[error("warp function must depend on base coordinates only: {0}")]
    WarpDomain(String),
    #[error("base fails {check} (max residual {residual:e})")]
    BaseCheck { check: String, residual: f64 },
    #[error("fiber fails {check} (max residual {residual:e})")]
    FiberCheck { check: String, residual: f64 },
    #[error("fiber interval for {coord} is empty or invalid")]
    InvalidInterval { coord: String },
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Number of seeded points used to validate builder inputs.
const VALIDATION_SAMPLES: usize = 16;
const VALIDATION_SEED: u64 = 0x5eed;

/// Kaehler base with exact potential, a nonzero constant `alpha` and the name
/// and range of the curve parameter.
#[derive(Debug, Clone)]
pub struct ContactizationSpec {
    base: AlmostComplexStructure,
    alpha: f64,
    fiber_coord: String,
    fiber_box: [f64; 2],
}

impl ContactizationSpec {
    /// Validates the base (Hermitian, Kaehler, `dω = Φ₁` under the half
    /// convention) on seeded points.
    pub fn new(
        base: AlmostComplexStructure,
        alpha: f64,
        fiber_coord: &str,
        fiber_box: [f64; 2],
    ) -> Result<Self, ProductError> {
        let spec = Self::new_unchecked(base, alpha, fiber_coord, fiber_box)?;
        let smp = Samples::generate(&spec.base.manifold, VALIDATION_SEED, VALIDATION_SAMPLES);
        let b = &spec.base;
        for r in [
            check_hermitian(b, &smp, ALGEBRAIC_TOL)?,
            check_kaehler(b, &smp, 1e-7)?,
            check_exact_potential(b, DConvention::Half, &smp, ALGEBRAIC_TOL)?,
        ] {
            if !r.passed() {
                return Err(ProductError::BaseCheck { check: r.name, residual: r.max_residual });
            }
        }
        Ok(spec)
    }

    /// Skips the base checks; used for degenerate experiments such as a
    /// vanishing potential.
    pub fn new_unchecked(
        base: AlmostComplexStructure,
        alpha: f64,
        fiber_coord: &str,
        fiber_box: [f64; 2],
    ) -> Result<Self, ProductError> {
        if alpha == 0.0 || !alpha.is_finite() {
            return Err(ProductError::InvalidAlpha);
        }
        if !(fiber_box[0] < fiber_box[1]) || !fiber_box.iter().all(|v| v.is_finite()) {
            return Err(ProductError::InvalidInterval { coord: fiber_coord.into() });
        }
        Ok(ContactizationSpec { base, alpha, fiber_coord: fiber_coord.into(), fiber_box })
    }

    pub fn base(&self) -> &AlmostComplexStructure {
        &self.base
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn fiber_coord(&self) -> &str {
        &self.fiber_coord
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self, ProductError> {
        if alpha == 0.0 || !alpha.is_finite() {
            return Err(ProductError::InvalidAlpha);
        }
        Ok(ContactizationSpec { alpha, ..self.clone() })
    }

    /// The unit-speed curve as a one-dimensional almost contact manifold:
    /// `g₂ = ¼dt²`, `ξ = 2∂t`, `η = ½dt`, `φ = 0`.
    pub fn curve(&self) -> Result<AlmostContactStructure, ProductError> {
        let m = ChartedManifold::new(
            "beta",
            vec![self.fiber_coord.clone()],
            vec![self.fiber_box],
            vec![vec![Expr::Const(0.25)]],
        )?;
        Ok(AlmostContactStructure::new(
            m,
            EndoField::zero(1),
            VectorField::constant(&[2.0]),
            OneFormField::new(vec![Expr::Const(0.5)]),
        )?)
    }
}

/// Warped product data. The warp is a positive function of the base
/// coordinates.
#[derive(Debug, Clone)]
pub struct WarpedProductSpec {
    base: AlmostComplexStructure,
    fiber: AlmostContactStructure,
    a: f64,
    warp: ScalarField,
}

impl WarpedProductSpec {
    pub fn new(
        base: AlmostComplexStructure,
        fiber: AlmostContactStructure,
        a: f64,
        warp: ScalarField,
    ) -> Result<Self, ProductError> {
        if !a.is_finite() {
            return Err(ProductError::InvalidAlpha);
        }
        if let Err(e) = base.manifold.check_expr(warp.expr(), "warp") {
            return Err(ProductError::WarpDomain(e.to_string()));
        }
        let smp = Samples::generate(&base.manifold, VALIDATION_SEED, VALIDATION_SAMPLES);
        let mut probe: Vec<Vec<f64>> = smp.iter().map(|s| s.point.clone()).collect();
        probe.extend(box_corners(base.manifold.bounds()));
        for p in probe {
            let v = warp.eval(&base.manifold, &p)?;
            if !(v > 0.0) {
                return Err(ProductError::NonPositiveWarp { point: p, value: v });
            }
        }
        let fs = Samples::generate(&fiber.manifold, VALIDATION_SEED, VALIDATION_SAMPLES);
        let r = check_metric_compatibility(&fiber, &fs, ALGEBRAIC_TOL)?;
        if !r.passed() {
            return Err(ProductError::FiberCheck { check: r.name, residual: r.max_residual });
        }
        Ok(WarpedProductSpec { base, fiber, a, warp })
    }

    pub fn base(&self) -> &AlmostComplexStructure {
        &self.base
    }

    pub fn fiber(&self) -> &AlmostContactStructure {
        &self.fiber
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn warp(&self) -> &ScalarField {
        &self.warp
    }
}

fn box_corners(bounds: &[[f64; 2]]) -> Vec<Vec<f64>> {
    let d = bounds.len();
    if d > 10 {
        return Vec::new();
    }
    (0..1usize << d)
        .map(|mask| (0..d).map(|i| bounds[i][(mask >> i) & 1]).collect())
        .collect()
}

/// A built product chart with its structure and the block layout
/// `(base coordinates, fiber coordinates)`.
#[derive(Debug, Clone)]
pub struct ProductManifold {
    pub structure: AlmostContactStructure,
    base_dim: usize,
    fiber_dim: usize,
}

impl ProductManifold {
    pub fn manifold(&self) -> &ChartedManifold {
        &self.structure.manifold
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn dim(&self) -> usize {
        self.base_dim + self.fiber_dim
    }

    pub fn split<'p>(&self, p: &'p [f64]) -> (&'p [f64], &'p [f64]) {
        p.split_at(self.base_dim)
    }

    /// `(X, 0)`.
    pub fn lift_base(&self, x: &VectorField) -> VectorField {
        x.lift(self.dim(), 0)
    }

    /// `(0, U)`.
    pub fn lift_fiber(&self, u: &VectorField) -> VectorField {
        u.lift(self.dim(), self.base_dim)
    }

    /// `(X, U)`.
    pub fn pair(&self, x: &VectorField, u: &VectorField) -> VectorField {
        self.lift_base(x).add(&self.lift_fiber(u))
    }
}

/// Assembles `g = g₁ + f²(g₂ − η⊗η) + η̄⊗η̄` with `η̄ = aω ⊕ η`,
/// `φ̄ = (JX, φU − aω(JX)ξ)` and `ξ̄ = (0, ξ)`. A warp of `None` means `f ≡ 1`.
fn assemble(
    base: &AlmostComplexStructure,
    fiber: &AlmostContactStructure,
    a: f64,
    warp: Option<&Expr>,
    name: String,
) -> Result<ProductManifold, ProductError> {
    let n1 = base.manifold.dim();
    let n2 = fiber.manifold.dim();
    let d = n1 + n2;
    let mut coords = base.manifold.coords().to_vec();
    coords.extend_from_slice(fiber.manifold.coords());
    let mut bounds = base.manifold.bounds().to_vec();
    bounds.extend_from_slice(fiber.manifold.bounds());

    let eta_bar: Vec<Expr> = base
        .omega
        .components()
        .iter()
        .map(|w| a * w.clone())
        .chain(fiber.eta.components().iter().cloned())
        .collect();
    let f2 = warp.map(|f| f.clone().pow(2.0));
    let g1 = base.manifold.metric_exprs();
    let g2 = fiber.manifold.metric_exprs();
    let eta = fiber.eta.components();
    let mut metric = vec![vec![Expr::zero(); d]; d];
    for i in 0..d {
        for j in i..d {
            let sq = eta_bar[i].clone() * eta_bar[j].clone();
            metric[i][j] = match (i < n1, j < n1) {
                (true, true) => g1[i][j].clone() + sq,
                (false, false) => {
                    let (u, v) = (i - n1, j - n1);
                    let horizontal = g2[u][v].clone() - eta[u].clone() * eta[v].clone();
                    let warped = match &f2 {
                        Some(f2) => f2.clone() * horizontal,
                        None => horizontal,
                    };
                    warped + sq
                }
                _ => sq,
            };
            metric[j][i] = metric[i][j].clone();
        }
    }
    let manifold = ChartedManifold::new(name, coords, bounds, metric)?;

    let mut phi = EndoField::zero(d);
    for k in 0..n1 {
        for j in 0..n1 {
            phi.set(k, j, base.j.entry(k, j).clone());
        }
    }
    // ω(J∂ⱼ) = Σₘ ωₘ Jᵐⱼ
    let omega_j: Vec<Expr> = (0..n1)
        .map(|j| {
            (0..n1).fold(Expr::zero(), |s, m| {
                s + base.omega.components()[m].clone() * base.j.entry(m, j).clone()
            })
        })
        .collect();
    for mu in 0..n2 {
        for j in 0..n1 {
            let e = -(a * fiber.xi.components()[mu].clone()) * omega_j[j].clone();
            phi.set(n1 + mu, j, e);
        }
        for nu in 0..n2 {
            phi.set(n1 + mu, n1 + nu, fiber.phi.entry(mu, nu).clone());
        }
    }
    let xi = fiber.xi.lift(d, n1);
    let structure = AlmostContactStructure::new(manifold, phi, xi, OneFormField::new(eta_bar))?;
    Ok(ProductManifold { structure, base_dim: n1, fiber_dim: n2 })
}

/// The contactization: chart `(base coordinates, t)` with `ξ̄ = 2∂t`,
/// `η̄ = αω + ½dt` and `g = g₁ + η̄⊗η̄`.
pub fn build_contactization(spec: &ContactizationSpec) -> Result<ProductManifold, ProductError> {
    let curve = spec.curve()?;
    let name = format!("{}-contactization", spec.base.manifold.name());
    assemble(&spec.base, &curve, spec.alpha, None, name)
}

/// The warped product with the metric `g₁ + f²(g₂ − η⊗η) + η̄⊗η̄`.
pub fn build_warped_product(spec: &WarpedProductSpec) -> Result<ProductManifold, ProductError> {
    let name = format!("{}-x-{}", spec.base.manifold.name(), spec.fiber.manifold.name());
    let warp = match spec.warp.expr().constant_value() {
        Some(v) if v == 1.0 => None,
        _ => Some(spec.warp.expr()),
    };
    assemble(&spec.base, &spec.fiber, spec.a, warp, name)
}

/// One sample on a product: a point together with random fields living on
/// each factor (depending on that factor's coordinates only).
#[derive(Debug, Clone)]
pub struct ProductSample {
    pub point: Vec<f64>,
    pub base: Sample,
    pub fiber: Sample,
}

/// Seeded product samples; sample `i` depends only on `(seed, i)`.
pub fn product_samples(
    base: &ChartedManifold,
    fiber: &ChartedManifold,
    seed: u64,
    count: usize,
) -> Vec<ProductSample> {
    let bs = Samples::generate(base, mix_seed(seed, 1), count);
    let fs = Samples::generate(fiber, mix_seed(seed, 2), count);
    bs.items()
        .iter()
        .zip(fs.items())
        .map(|(b, f)| {
            let mut point = b.point.clone();
            point.extend_from_slice(&f.point);
            ProductSample { point, base: b.clone(), fiber: f.clone() }
        })
        .collect()
}

/// Uniform random constants, used for probes that take plain numbers.
pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, stream))
}

