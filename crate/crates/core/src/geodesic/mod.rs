//! Geodesic integration on charted manifolds (fixed-step RK4) and the
//! product-geodesic conditions of the warped product.

mod product;

pub use product::{
    product_geodesic_check, product_geodesic_conditions, ProductConditions, ProductGeodesicReport,
};

use crate::product::ProductError;
use crate::tensor::{ChartedManifold, GeometryError};
use nalgebra::DVector;
use std::fmt::Write as _;
use thiserror::Error;

/// Maximum finite-difference defect for a trajectory to count as a geodesic.
pub const CERTIFY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeodesicError {
    #[error("step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("duration must be positive and finite, got {0}")]
    InvalidDuration(f64),
    #[error("state has {got} components, manifold dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("initial point {0:?} lies outside the chart box")]
    OutsideChart(Vec<f64>),
    #[error("velocity is not finite")]
    NonFiniteVelocity,
    #[error("trajectory too short to certify ({0} states, need 5)")]
    TooShort(usize),
    #[error("curve is not a geodesic: defect {defect:e} exceeds {tol:e}")]
    NotGeodesic { defect: f64, tol: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Product(#[from] ProductError),
}

/// A point together with a tangent vector at it.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicState {
    pub point: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl GeodesicState {
    pub fn new(point: Vec<f64>, velocity: Vec<f64>) -> Self {
        GeodesicState { point, velocity }
    }

    fn validate(&self, m: &ChartedManifold) -> Result<(), GeodesicError> {
        for n in [self.point.len(), self.velocity.len()] {
            if n != m.dim() {
                return Err(GeodesicError::DimensionMismatch { expected: m.dim(), got: n });
            }
        }
        if !m.contains(&self.point) {
            return Err(GeodesicError::OutsideChart(self.point.clone()));
        }
        if !self.velocity.iter().all(|v| v.is_finite()) {
            return Err(GeodesicError::NonFiniteVelocity);
        }
        Ok(())
    }

    /// `g(v, v)` at the state's point.
    pub fn speed2(&self, m: &ChartedManifold) -> Result<f64, GeometryError> {
        let v = DVector::from_column_slice(&self.velocity);
        Ok(v.dot(&(m.metric_at(&self.point)? * &v)))
    }
}

/// Where an integration stopped because a stage left the chart box.
#[derive(Debug, Clone, PartialEq)]
pub struct LeftChartDomain {
    pub time: f64,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GeodesicState>,
    pub step: f64,
    pub integrator: &'static str,
    pub left_domain: Option<LeftChartDomain>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn truncated(&self) -> bool {
        self.left_domain.is_some()
    }

    pub fn last(&self) -> &GeodesicState {
        self.states.last().expect("trajectory has an initial state")
    }

    pub fn speed2(&self, m: &ChartedManifold) -> Result<Vec<f64>, GeometryError> {
        self.states.iter().map(|s| s.speed2(m)).collect()
    }

    /// `max |g(v,v)(t) − g(v,v)(0)| / g(v,v)(0)`; absolute when the initial
    /// speed is zero.
    pub fn max_speed_drift(&self, m: &ChartedManifold) -> Result<f64, GeometryError> {
        let s = self.speed2(m)?;
        let s0 = s[0];
        let scale = if s0 > 0.0 { s0 } else { 1.0 };
        Ok(s.iter().map(|v| (v - s0).abs() / scale).fold(0.0, f64::max))
    }

    /// Columns `t, coords…, v_coords…, speed2`.
    pub fn to_csv(&self, m: &ChartedManifold) -> Result<String, GeometryError> {
        let mut out = String::from("t");
        for c in m.coords() {
            write!(out, ",{c}").unwrap();
        }
        for c in m.coords() {
            write!(out, ",v_{c}").unwrap();
        }
        out.push_str(",speed2\n");
        for (t, s) in self.times.iter().zip(&self.states) {
            write!(out, "{t:.17e}").unwrap();
            for v in s.point.iter().chain(&s.velocity) {
                write!(out, ",{v:.17e}").unwrap();
            }
            writeln!(out, ",{:.17e}", s.speed2(m)?).unwrap();
        }
        Ok(out)
    }

    /// The projection to coordinates `(i, j)` as an SVG polyline, framed by
    /// the chart box.
    pub fn to_svg(&self, m: &ChartedManifold, i: usize, j: usize) -> String {
        const SIZE: f64 = 400.0;
        const PAD: f64 = 20.0;
        let b = m.bounds();
        let sx = |x: f64| PAD + (x - b[i][0]) / (b[i][1] - b[i][0]) * (SIZE - 2.0 * PAD);
        let sy = |y: f64| SIZE - PAD - (y - b[j][0]) / (b[j][1] - b[j][0]) * (SIZE - 2.0 * PAD);
        let pts: Vec<String> = self
            .states
            .iter()
            .map(|s| format!("{:.3},{:.3}", sx(s.point[i]), sy(s.point[j])))
            .collect();
        let coords = m.coords();
        format!(
            concat!(
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">\n",
                "<rect x=\"{p}\" y=\"{p}\" width=\"{w}\" height=\"{w}\" fill=\"none\" stroke=\"#999\"/>\n",
                "<text x=\"{p}\" y=\"{t}\" font-size=\"12\">{name}: {ci} → / {cj} ↑</text>\n",
                "<polyline fill=\"none\" stroke=\"#c33\" stroke-width=\"1.5\" points=\"{pts}\"/>\n",
                "</svg>\n"
            ),
            s = SIZE,
            p = PAD,
            w = SIZE - 2.0 * PAD,
            t = PAD - 6.0,
            name = m.name(),
            ci = coords[i],
            cj = coords[j],
            pts = pts.join(" ")
        )
    }
}

/// `aᵏ = −Γᵏᵢⱼ vⁱ vʲ`.
pub fn geodesic_rhs(m: &ChartedManifold, s: &GeodesicState) -> Result<DVector<f64>, GeometryError> {
    let v = DVector::from_column_slice(&s.velocity);
    Ok(-m.christoffel(&s.point)?.contract(&v, &v))
}

fn acceleration(m: &ChartedManifold, p: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
    Ok(-m.christoffel(p.as_slice())?.contract(v, v))
}

/// Classical RK4 on `(point, velocity)` with a fixed step; the last step is
/// shortened to land on `duration`. Stops early, flagging `left_domain`, when
/// any stage point leaves the chart box.
pub fn integrate(
    m: &ChartedManifold,
    s0: &GeodesicState,
    duration: f64,
    step: f64,
) -> Result<Trajectory, GeodesicError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(GeodesicError::InvalidStep(step));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(GeodesicError::InvalidDuration(duration));
    }
    s0.validate(m)?;
    let steps = (duration / step - 1e-9).ceil().max(1.0) as usize;
    let mut times = vec![0.0];
    let mut states = vec![s0.clone()];
    let mut p = DVector::from_column_slice(&s0.point);
    let mut v = DVector::from_column_slice(&s0.velocity);
    let mut left_domain = None;
    for n in 0..steps {
        let t = n as f64 * step;
        let h = if n + 1 == steps { duration - t } else { step };
        let inside = |q: &DVector<f64>| m.contains(q.as_slice());
        let k1p = v.clone();
        let k1v = acceleration(m, &p, &v)?;
        let p2 = &p + &k1p * (h / 2.0);
        let v2 = &v + &k1v * (h / 2.0);
        let p3;
        let p4;
        let stage = 'stage: {
            if !inside(&p2) {
                break 'stage Some(p2);
            }
            let k2v = acceleration(m, &p2, &v2)?;
            p3 = &p + &v2 * (h / 2.0);
            let v3 = &v + &k2v * (h / 2.0);
            if !inside(&p3) {
                break 'stage Some(p3);
            }
            let k3v = acceleration(m, &p3, &v3)?;
            p4 = &p + &v3 * h;
            let v4 = &v + &k3v * h;
            if !inside(&p4) {
                break 'stage Some(p4);
            }
            let k4v = acceleration(m, &p4, &v4)?;
            let np = &p + (&k1p + &v2 * 2.0 + &v3 * 2.0 + &v4) * (h / 6.0);
            let nv = &v + (&k1v + &k2v * 2.0 + &k3v * 2.0 + &k4v) * (h / 6.0);
            if !inside(&np) {
                break 'stage Some(np);
            }
            p = np;
            v = nv;
            None
        };
        if let Some(q) = stage {
            left_domain = Some(LeftChartDomain { time: t, point: q.as_slice().to_vec() });
            break;
        }
        times.push(if n + 1 == steps { duration } else { (n + 1) as f64 * step });
        states.push(GeodesicState::new(p.as_slice().to_vec(), v.as_slice().to_vec()));
    }
    Ok(Trajectory { times, states, step, integrator: "rk4", left_domain })
}

/// Largest defect of the geodesic equation along a trajectory, using
/// fourth-order central differences of position and velocity on the
/// uniformly spaced states.
pub fn geodesic_defect(m: &ChartedManifold, traj: &Trajectory) -> Result<f64, GeodesicError> {
    let h = traj.step;
    let uniform = traj
        .times
        .iter()
        .enumerate()
        .take_while(|(i, t)| (**t - *i as f64 * h).abs() <= 1e-12 * (1.0 + **t))
        .count();
    if uniform < 5 {
        return Err(GeodesicError::TooShort(uniform));
    }
    let col = |k: usize, vel: bool| {
        let s = &traj.states[k];
        DVector::from_column_slice(if vel { &s.velocity } else { &s.point })
    };
    let central = |k: usize, vel: bool| {
        (col(k - 2, vel) - col(k - 1, vel) * 8.0 + col(k + 1, vel) * 8.0 - col(k + 2, vel)) / (12.0 * h)
    };
    let mut worst: f64 = 0.0;
    for k in 2..uniform - 2 {
        let a = geodesic_rhs(m, &traj.states[k])?;
        worst = worst.max((central(k, true) - a).norm());
        worst = worst.max((central(k, false) - col(k, true)).norm());
    }
    Ok(worst)
}

/// Integrates and checks that the result is a geodesic to `CERTIFY_TOL`.
pub fn certified_geodesic(
    m: &ChartedManifold,
    s0: &GeodesicState,
    duration: f64,
    step: f64,
) -> Result<Trajectory, GeodesicError> {
    let traj = integrate(m, s0, duration, step)?;
    let defect = geodesic_defect(m, &traj)?;
    if defect > CERTIFY_TOL {
        return Err(GeodesicError::NotGeodesic { defect, tol: CERTIFY_TOL });
    }
    Ok(traj)
}

#[cfg(test)]
mod tests;
