use super::*;
use crate::cli::fixtures::bundled;
use crate::expr::{parse, Expr};
use crate::product::{WarpedProduct, WarpedProductSpec};
use crate::structures::{AlmostComplexStructure, AlmostContactStructure, Expectation, JConvention};
use crate::tensor::{EndoField, OneFormField, ScalarField, VectorField};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

fn euclid() -> ChartedManifold {
    bundled("euclidean-r3").manifold.clone()
}

fn sphere() -> ChartedManifold {
    bundled("sphere").manifold.clone()
}

fn tall_sasakian() -> AlmostContactStructure {
    let mut s = bundled("sasakian-r3").contact().unwrap().clone();
    s.manifold = s.manifold.with_bounds(vec![[-1.0, 1.0], [-1.0, 1.0], [-1.5, 1.5]]).unwrap();
    s
}

fn warped(a: f64, fiber: AlmostContactStructure) -> WarpedProduct {
    let base = bundled("worked-example").complex().unwrap().clone();
    let spec = WarpedProductSpec::new(base, fiber, a, ScalarField::constant(1.0)).unwrap();
    WarpedProduct::build(spec).unwrap()
}

#[test]
fn rhs_examples() {
    let e = geodesic_rhs(&euclid(), &GeodesicState::new(vec![0.1, 0.2, 0.3], vec![1.0, -2.0, 0.5])).unwrap();
    assert_eq!(e.norm(), 0.0);
    let eq = geodesic_rhs(&sphere(), &GeodesicState::new(vec![FRAC_PI_2, 0.0], vec![0.0, 1.0])).unwrap();
    assert!(eq.norm() < 1e-15);
    let q = geodesic_rhs(&sphere(), &GeodesicState::new(vec![FRAC_PI_4, 0.0], vec![0.0, 1.0])).unwrap();
    assert!((q[0] - 0.5).abs() < 1e-15);
    assert!(q[1].abs() < 1e-15);
}

#[test]
fn euclidean_straight_line() {
    let v = [0.3, -0.4, 0.5];
    let t = integrate(&euclid(), &GeodesicState::new(vec![0.0; 3], v.to_vec()), 1.0, 1e-3).unwrap();
    assert!(!t.truncated());
    assert_eq!(t.len(), 1001);
    for (time, s) in t.times.iter().zip(&t.states) {
        for k in 0..3 {
            assert!((s.point[k] - time * v[k]).abs() < 1e-12);
        }
    }
    assert_eq!(*t.times.last().unwrap(), 1.0);
}

#[test]
fn equator_is_geodesic() {
    let t = integrate(&sphere(), &GeodesicState::new(vec![FRAC_PI_2, 0.0], vec![0.0, 1.0]), 1.0, 1e-3).unwrap();
    for s in &t.states {
        assert!((s.point[0] - FRAC_PI_2).abs() < 1e-8);
    }
    assert!((t.last().point[1] - 1.0).abs() < 1e-10);
}

fn max_gap(coarse: &Trajectory, fine: &Trajectory) -> f64 {
    let ratio = (coarse.step / fine.step).round() as usize;
    coarse
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let f = &fine.states[i * ratio];
            s.point.iter().zip(&f.point).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

#[test]
fn rk4_converges_at_fourth_order() {
    let m = sphere();
    let s0 = GeodesicState::new(vec![1.0, 0.0], vec![0.7, 1.1]);
    let h = 0.05;
    let run = |h: f64| integrate(&m, &s0, 1.0, h).unwrap();
    let (t1, t2, t4) = (run(h), run(h / 2.0), run(h / 4.0));
    let ratio = max_gap(&t1, &t4) / max_gap(&t2, &t4);
    assert!((12.0..=20.0).contains(&ratio), "{ratio}");
}

#[test]
fn speed_is_conserved_on_fixtures() {
    let sas = bundled("sasakian-r3");
    let cases: Vec<(ChartedManifold, GeodesicState)> = vec![
        (euclid(), GeodesicState::new(vec![0.0; 3], vec![0.2, 0.3, -0.1])),
        (sphere(), GeodesicState::new(vec![1.2, 0.0], vec![0.3, 0.8])),
        (sas.manifold.clone(), GeodesicState::new(vec![0.1, 0.2, 0.0], vec![0.5, 0.3, 0.4])),
        (
            bundled("worked-example").manifold.clone(),
            GeodesicState::new(vec![0.1, -0.2, 0.3, 0.0], vec![0.3, 0.2, -0.4, 0.1]),
        ),
    ];
    for (m, s0) in cases {
        let t = integrate(&m, &s0, 1.0, 1e-3).unwrap();
        assert!(!t.truncated(), "{}", m.name());
        assert!(t.max_speed_drift(&m).unwrap() <= 1e-6, "{}", m.name());
    }
}

#[test]
fn reeb_momentum_is_conserved() {
    let s = bundled("sasakian-r3").contact().unwrap().clone();
    let m = &s.manifold;
    let t = integrate(m, &GeodesicState::new(vec![0.1, 0.2, 0.0], vec![0.5, 0.3, 0.4]), 1.0, 1e-3).unwrap();
    let eta_v = |st: &GeodesicState| {
        s.eta.eval(m, &st.point).unwrap().dot(&DVector::from_column_slice(&st.velocity))
    };
    let e0 = eta_v(&t.states[0]);
    assert!(e0.abs() > 0.01);
    for st in &t.states {
        assert!((eta_v(st) - e0).abs() <= 1e-6);
    }
}

#[test]
fn leaving_the_box_truncates() {
    let t = integrate(&euclid(), &GeodesicState::new(vec![0.9, 0.0, 0.0], vec![1.0, 0.0, 0.0]), 1.0, 1e-2).unwrap();
    assert!(t.truncated());
    let exit = t.left_domain.as_ref().unwrap();
    assert!(exit.point[0] > 1.0);
    assert!(t.last().point[0] <= 1.0);
    assert!((t.last().point[0] - 1.0).abs() < 0.011);
}

#[test]
fn invalid_inputs() {
    let m = euclid();
    let s = GeodesicState::new(vec![0.0; 3], vec![1.0, 0.0, 0.0]);
    assert_eq!(integrate(&m, &s, 1.0, 0.0).unwrap_err(), GeodesicError::InvalidStep(0.0));
    assert_eq!(integrate(&m, &s, -1.0, 0.1).unwrap_err(), GeodesicError::InvalidDuration(-1.0));
    let out = GeodesicState::new(vec![2.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]);
    assert!(matches!(integrate(&m, &out, 1.0, 0.1), Err(GeodesicError::OutsideChart(_))));
    let short = GeodesicState::new(vec![0.0; 2], vec![1.0, 0.0]);
    assert!(matches!(integrate(&m, &short, 1.0, 0.1), Err(GeodesicError::DimensionMismatch { .. })));
    let nan = GeodesicState::new(vec![0.0; 3], vec![f64::NAN, 0.0, 0.0]);
    assert_eq!(integrate(&m, &nan, 1.0, 0.1).unwrap_err(), GeodesicError::NonFiniteVelocity);
}

#[test]
fn non_multiple_duration_lands_exactly() {
    let t = integrate(&euclid(), &GeodesicState::new(vec![0.0; 3], vec![0.1, 0.0, 0.0]), 0.25, 0.1).unwrap();
    assert_eq!(t.times, vec![0.0, 0.1, 0.2, 0.25]);
    assert!((t.last().point[0] - 0.025).abs() < 1e-15);
}

#[test]
fn certification_accepts_geodesics_and_rejects_other_curves() {
    let m = sphere();
    let t = integrate(&m, &GeodesicState::new(vec![1.0, 0.0], vec![0.4, 0.9]), 1.0, 1e-3).unwrap();
    assert!(geodesic_defect(&m, &t).unwrap() <= CERTIFY_TOL);
    // A latitude circle away from the equator is not a geodesic.
    let mut fake = t.clone();
    for (time, s) in fake.times.iter().zip(fake.states.iter_mut()) {
        s.point = vec![1.0, *time];
        s.velocity = vec![0.0, 1.0];
    }
    assert!(geodesic_defect(&m, &fake).unwrap() > 0.1);
    let tiny = integrate(&m, &GeodesicState::new(vec![1.0, 0.0], vec![0.0, 1.0]), 0.2, 0.1).unwrap();
    assert_eq!(geodesic_defect(&m, &tiny).unwrap_err(), GeodesicError::TooShort(3));
}

#[test]
fn csv_and_svg_export() {
    let m = sphere();
    let t = integrate(&m, &GeodesicState::new(vec![1.0, 0.0], vec![0.0, 1.0]), 0.3, 0.1).unwrap();
    let csv = t.to_csv(&m).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,th,ph,v_th,v_ph,speed2");
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[1].split(',').count(), 6);
    let svg = t.to_svg(&m, 1, 0);
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("<polyline"));
    assert_eq!(svg, t.to_svg(&m, 1, 0));
}

#[test]
fn conditions_vanish_for_horizontal_fiber_velocity() {
    let w = warped(1.0, tall_sasakian());
    let p = [0.1, 0.2, -0.3, 0.4, 0.1, 0.2, 0.0];
    let x = DVector::zeros(4);
    let v = DVector::from_vec(vec![0.5, 0.3, 0.1]);
    let c = product_geodesic_conditions(&w, &x, &v, &p).unwrap();
    assert!(c.norm_i < 1e-15 && c.norm_ii < 1e-12, "{c:?}");
}

#[test]
fn conditions_along_reeb_field_give_two_alpha_squared() {
    for a in [0.5, 1.0, 2.0] {
        let w = warped(a, tall_sasakian());
        let p = [0.1, 0.2, -0.3, 0.4, 0.1, 0.2, 0.0];
        let c = product_geodesic_conditions(&w, &DVector::zeros(4), &DVector::from_vec(vec![0.0, 0.0, 2.0]), &p)
            .unwrap();
        assert!((c.norm_ii - 2.0 * a * a).abs() < 1e-12);
        assert!((c.res_ii[2] - 4.0 * a * a).abs() < 1e-12);
        assert_eq!(c.norm_i, 0.0);
    }
}

#[test]
fn untwisted_conditions_have_no_base_part() {
    let w = warped(0.0, tall_sasakian());
    let p = [0.1, 0.2, -0.3, 0.4, 0.1, 0.2, 0.0];
    let x = DVector::from_vec(vec![0.3, -0.1, 0.2, 0.5]);
    let v = DVector::from_vec(vec![0.2, 0.7, -0.4]);
    assert_eq!(product_geodesic_conditions(&w, &x, &v, &p).unwrap().norm_i, 0.0);
}

#[test]
fn product_geodesic_positive_instance() {
    let w = warped(1.0, tall_sasakian());
    let gamma0 = GeodesicState::new(vec![0.1, 0.2, -0.3, 0.4], vec![0.0; 4]);
    let beta0 = GeodesicState::new(vec![0.1, 0.2, 0.0], vec![0.5, 0.3, 0.1]);
    let r = product_geodesic_check(&w, "horizontal", &gamma0, &beta0, 1.0, 1e-3, 11, 1e-5, Expectation::Pass, 0)
        .unwrap();
    assert!(r.oracle.passed(), "{:?}", r.oracle);
    assert!(r.printed.max_residual < 1e-5, "{:?}", r.printed);
    assert!(r.agreement.passed());
    assert_eq!(r.oracle.samples, 11);
}

#[test]
fn product_geodesic_reeb_instance_disagrees() {
    for a in [1.0, 2.0] {
        let w = warped(a, tall_sasakian());
        let gamma0 = GeodesicState::new(vec![0.1, 0.2, -0.3, 0.4], vec![0.0; 4]);
        let beta0 = GeodesicState::new(vec![0.1, 0.2, -1.0], vec![0.0, 0.0, 2.0]);
        let r = product_geodesic_check(&w, "reeb", &gamma0, &beta0, 1.0, 1e-3, 11, 1e-5, Expectation::Pass, 0)
            .unwrap();
        assert!(r.oracle.passed(), "{:?}", r.oracle);
        assert!((r.printed.max_residual - 2.0 * a * a).abs() <= 1e-3 * 2.0 * a * a);
        assert!(!r.agreement.passed());
        assert_eq!(r.agreement.verdict, crate::structures::Verdict::ErratumCandidate);
    }
}

#[test]
fn flat_product_of_lines() {
    let plane = ChartedManifold::euclidean("plane", &["u", "v"], vec![[-2.0, 2.0]; 2]).unwrap();
    let base = AlmostComplexStructure::new(
        plane,
        EndoField::from_constants(&[vec![0.0, -1.0], vec![1.0, 0.0]]),
        OneFormField::zero(2),
        JConvention::Unspecified,
    )
    .unwrap();
    let line = ChartedManifold::euclidean("line", &["s"], vec![[-2.0, 2.0]]).unwrap();
    let fiber = AlmostContactStructure::new(
        line,
        EndoField::zero(1),
        VectorField::constant(&[1.0]),
        OneFormField::new(vec![Expr::one()]),
    )
    .unwrap();
    let spec = WarpedProductSpec::new(base, fiber, 0.0, ScalarField::new(parse("1").unwrap())).unwrap();
    let w = WarpedProduct::build(spec).unwrap();
    let r = product_geodesic_check(
        &w,
        "flat",
        &GeodesicState::new(vec![-0.5, 0.2], vec![0.6, -0.3]),
        &GeodesicState::new(vec![0.1], vec![0.9]),
        1.0,
        1e-3,
        11,
        1e-10,
        Expectation::Pass,
        0,
    )
    .unwrap();
    assert!(r.oracle.passed(), "{:?}", r.oracle);
    assert!(r.base.last().point[0] - 0.1 < 1e-12);
}

#[test]
fn non_geodesic_input_is_rejected() {
    let w = warped(1.0, tall_sasakian());
    let gamma0 = GeodesicState::new(vec![0.1, 0.2, -0.3, 0.4], vec![0.0; 4]);
    let beta0 = GeodesicState::new(vec![0.1, 0.2, 0.0], vec![0.5, 0.3, 0.4]);
    // a coarse step leaves a finite-difference defect above the certification bound
    let err = product_geodesic_check(&w, "coarse", &gamma0, &beta0, 1.0, 0.1, 5, 1e-5, Expectation::Pass, 0);
    assert!(matches!(err, Err(GeodesicError::NotGeodesic { .. })), "{err:?}");
}
