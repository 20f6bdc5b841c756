use super::{certified_geodesic, GeodesicError, GeodesicState, Trajectory};
use crate::expr::Dual;
use crate::product::WarpedProduct;
use crate::structures::{CheckReport, Expectation, Residuals};
use nalgebra::DVector;
use rayon::prelude::*;

/// The two printed product-geodesic conditions at one point, with the
/// vector assembled from them for `∇_{(X,V)}(X,V)`, namely `(−res_i, res_ii)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductConditions {
    pub res_i: DVector<f64>,
    pub res_ii: DVector<f64>,
    /// `|res_i|` in `g₁`.
    pub norm_i: f64,
    /// `|res_ii|` in `g₂`.
    pub norm_ii: f64,
    pub assembled: DVector<f64>,
}

impl ProductConditions {
    pub fn max_norm(&self) -> f64 {
        self.norm_i.max(self.norm_ii)
    }
}

/// Evaluates, verbatim,
/// `res_i = 2αη̄(X,V)JX + f g₂(φV,φV) grad f` and
/// `res_ii = −(2X[f]/f)φ²V + 2(−η̄(X,V)/f² + η(V))φV
///   + α(2αη̄(X,V) + X[ω(JX)] + X[ω(X)] + f g₂(φV,φV)ω(grad f))ξ`
/// at the product point `p`. `X[·]` differentiates along the base geodesic
/// through `(p₁, X)`, so its acceleration `−Γ₁(X,X)` enters.
pub fn product_geodesic_conditions(
    w: &WarpedProduct,
    x: &DVector<f64>,
    v: &DVector<f64>,
    p: &[f64],
) -> Result<ProductConditions, GeodesicError> {
    let (p1, p2) = w.product.split(p);
    let base = w.spec.base();
    let fiber = w.spec.fiber();
    let (m1, m2) = (&base.manifold, &fiber.manifold);
    let l1 = m1.local(p1)?;
    let l2 = m2.local(p2)?;
    let a = w.spec.a();
    let warp = w.spec.warp();

    let omega = base.omega.eval(m1, p1)?;
    let j = base.j.eval(m1, p1)?;
    let phi = fiber.phi.eval(m2, p2)?;
    let xi = fiber.xi.eval(m2, p2)?;
    let eta = fiber.eta.eval(m2, p2)?;
    let f = warp.eval(m1, p1)?;
    let grad_f = l1.grad(warp)?;
    let xf = warp.differential(m1, p1)?.dot(x);

    let eta_bar = a * omega.dot(x) + eta.dot(v);
    let phi_v = &phi * v;
    let gpp = l2.inner(&phi_v, &phi_v);
    let accel = -l1.christoffel().contract(x, x);

    let dn = m1.dim();
    let xd: Vec<Dual> = x.iter().map(|c| Dual::constant(*c)).collect();
    let x_omega_x = l1.derivative_along(x, |q| {
        let w = base.omega.eval_generic(m1, q)?;
        Ok((0..dn).fold(Dual::constant(0.0), |s, i| s + w[i] * xd[i]))
    })? + omega.dot(&accel);
    let x_omega_jx = l1.derivative_along(x, |q| {
        let w = base.omega.eval_generic(m1, q)?;
        let jq = base.j.eval_generic(m1, q)?;
        let mut s = Dual::constant(0.0);
        for mi in 0..dn {
            for k in 0..dn {
                s = s + w[mi] * jq[mi * dn + k] * xd[k];
            }
        }
        Ok(s)
    })? + omega.dot(&(&j * &accel));

    let res_i = (&j * x) * (2.0 * a * eta_bar) + &grad_f * (f * gpp);
    let res_ii = (&phi * &phi_v) * (-2.0 * xf / f)
        + &phi_v * (2.0 * (-eta_bar / (f * f) + eta.dot(v)))
        + &xi * (a * (2.0 * a * eta_bar + x_omega_jx + x_omega_x + f * gpp * omega.dot(&grad_f)));
    let norm_i = l1.inner(&res_i, &res_i).max(0.0).sqrt();
    let norm_ii = l2.inner(&res_ii, &res_ii).max(0.0).sqrt();
    let mut assembled = DVector::zeros(dn + m2.dim());
    assembled.rows_mut(0, dn).copy_from(&(-&res_i));
    assembled.rows_mut(dn, m2.dim()).copy_from(&res_ii);
    Ok(ProductConditions { res_i, res_ii, norm_i, norm_ii, assembled })
}

/// The three reports of one product-geodesic instance plus the factor
/// trajectories that generated it.
#[derive(Debug, Clone)]
pub struct ProductGeodesicReport {
    /// `|∇_{c′}c′|` of the product curve from the product chart's own
    /// Christoffel symbols.
    pub oracle: CheckReport,
    /// `max(|res_i|, |res_ii|)`.
    pub printed: CheckReport,
    /// Whether "oracle ≈ 0" and "printed conditions ≈ 0" agree.
    pub agreement: CheckReport,
    pub base: Trajectory,
    pub fiber: Trajectory,
}

impl ProductGeodesicReport {
    pub fn reports(&self) -> [CheckReport; 3] {
        [self.oracle.clone(), self.printed.clone(), self.agreement.clone()]
    }
}

/// Integrates geodesics of both factors from `gamma0` and `beta0` (each
/// certified as a geodesic), forms the product curve and compares its
/// acceleration `c″ + Γ(c′,c′)` with the printed conditions at `times`
/// evenly spaced states. The oracle report carries `expect`; the other two
/// are probes.
#[allow(clippy::too_many_arguments)]
pub fn product_geodesic_check(
    w: &WarpedProduct,
    label: &str,
    gamma0: &GeodesicState,
    beta0: &GeodesicState,
    duration: f64,
    step: f64,
    times: usize,
    tol: f64,
    expect: Expectation,
    seed: u64,
) -> Result<ProductGeodesicReport, GeodesicError> {
    let base = &w.spec.base().manifold;
    let fiber = &w.spec.fiber().manifold;
    let gamma = certified_geodesic(base, gamma0, duration, step)?;
    let beta = certified_geodesic(fiber, beta0, duration, step)?;
    let n = gamma.len().min(beta.len());
    let picks: Vec<usize> = if times <= 1 || n == 1 {
        vec![0]
    } else {
        (0..times).map(|k| (k * (n - 1) + (times - 1) / 2) / (times - 1)).collect()
    };
    let total = w.product.manifold();
    let rows: Vec<(f64, f64, f64, f64)> = picks
        .par_iter()
        .map(|&k| {
            let (g, b) = (&gamma.states[k], &beta.states[k]);
            let mut point = g.point.clone();
            point.extend_from_slice(&b.point);
            let x = DVector::from_column_slice(&g.velocity);
            let v = DVector::from_column_slice(&b.velocity);
            let mut vel = x.as_slice().to_vec();
            vel.extend_from_slice(v.as_slice());
            let vel = DVector::from_vec(vel);
            let mut acc = super::geodesic_rhs(base, g)?.as_slice().to_vec();
            acc.extend_from_slice(super::geodesic_rhs(fiber, b)?.as_slice());
            let local = total.local(&point)?;
            let nabla = DVector::from_vec(acc) + local.christoffel().contract(&vel, &vel);
            let oracle = local.inner(&nabla, &nabla).max(0.0).sqrt();
            let c = product_geodesic_conditions(w, &x, &v, &point)?;
            let diff = &c.assembled - &nabla;
            Ok((oracle, c.norm_i, c.norm_ii, local.inner(&diff, &diff).max(0.0).sqrt()))
        })
        .collect::<Result<_, GeodesicError>>()?;
    let oracle: Residuals = rows.iter().map(|r| r.0).collect();
    let printed: Residuals = rows.iter().map(|r| r.1.max(r.2)).collect();
    let max_i = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let max_ii = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let agree: Residuals = rows
        .iter()
        .map(|&(o, ni, nii, _)| {
            let q = ni.max(nii);
            if (o <= tol) == (q <= tol) {
                0.0
            } else {
                o.max(q)
            }
        })
        .collect();
    let assembled_gap = rows.iter().map(|r| r.3).fold(0.0, f64::max);
    let oracle_geodesic = oracle.max() <= tol;
    let printed_holds = printed.max() <= tol;
    let name = |s: &str| format!("geodesic/{label}/{s}");
    let a = w.spec.a().to_string();
    let finish = |r: CheckReport| {
        r.with_samples(picks.len())
            .with_convention("a", &a)
            .with_note(format!("duration {duration}, step {step}, rk4"))
    };
    Ok(ProductGeodesicReport {
        oracle: finish(CheckReport::new(name("oracle"), &oracle, tol, seed)).expecting(expect),
        printed: finish(CheckReport::new(name("printed"), &printed, tol, seed))
            .expecting(Expectation::Probe)
            .with_note(format!("max |res_i| = {:e}, max |res_ii| = {:e}", max_i, max_ii)),
        agreement: finish(CheckReport::new(name("agreement"), &agree, tol, seed))
            .expecting(Expectation::Probe)
            .with_note(format!("oracle geodesic: {oracle_geodesic}; printed conditions hold: {printed_holds}"))
            .with_note(format!("max |(−res_i, res_ii) − ∇_c′c′| = {assembled_gap:e}")),
        base: gamma,
        fiber: beta,
    })
}
