use super::*;
use crate::cli::fixtures::bundled;
use crate::expr::{parse, Expr};
use crate::tensor::{ChartedManifold, DConvention, EndoField, OneFormField, VectorField};

fn sasakian() -> AlmostContactStructure {
    bundled("sasakian-r3").contact().unwrap().clone()
}

fn base() -> AlmostComplexStructure {
    bundled("worked-example").complex().unwrap().clone()
}

fn samples(m: &ChartedManifold, n: usize) -> Samples {
    Samples::generate(m, 42, n)
}

#[test]
fn sasakian_r3_is_almost_contact() {
    let s = sasakian();
    let r = check_almost_contact(&s, &samples(&s.manifold, 50), 1e-12).unwrap();
    assert!(r.passed(), "{r:?}");
}

#[test]
fn doubled_phi_breaks_almost_contact() {
    let mut s = sasakian();
    s.phi = s.phi.scale(&Expr::Const(2.0));
    let r = check_almost_contact(&s, &samples(&s.manifold, 20), ALGEBRAIC_TOL).unwrap();
    assert!(!r.passed());
    assert!(r.max_residual >= 1.0, "{}", r.max_residual);
}

#[test]
fn sasakian_r3_metric_compatible() {
    let s = sasakian();
    let r = check_metric_compatibility(&s, &samples(&s.manifold, 50), 1e-10).unwrap();
    assert!(r.passed(), "{r:?}");
}

#[test]
fn doubled_eta_breaks_compatibility() {
    let mut s = sasakian();
    s.eta = s.eta.scale(&Expr::Const(2.0));
    let r = check_metric_compatibility(&s, &samples(&s.manifold, 20), ALGEBRAIC_TOL).unwrap();
    assert!(r.max_residual >= 0.1, "{}", r.max_residual);
}

#[test]
fn fundamental_form_examples() {
    let s = sasakian();
    let smp = samples(&s.manifold, 10);
    for x in smp.iter() {
        let [a, b, _] = &x.fields;
        assert!(s.fundamental_form(&s.xi, a, &x.point).unwrap().abs() < 1e-12);
        let ab = s.fundamental_form(a, b, &x.point).unwrap();
        let ba = s.fundamental_form(b, a, &x.point).unwrap();
        assert!((ab + ba).abs() < 1e-12);
    }
    let a = base();
    let dx1 = VectorField::coordinate(4, 0);
    let dy1 = VectorField::coordinate(4, 2);
    assert_eq!(a.fundamental_form(&dx1, &dy1, &[0.3, -0.2, 0.5, 0.1]).unwrap(), -0.25);
}

#[test]
fn sasakian_r3_contact_metric_half_convention() {
    let s = sasakian();
    let smp = samples(&s.manifold, 50);
    assert!(check_contact_metric(&s, DConvention::Half, &smp, 1e-9).unwrap().passed());
    let plain = check_contact_metric(&s, DConvention::Plain, &smp, 1e-9).unwrap();
    assert!(!plain.passed());
}

#[test]
fn exact_eta_is_not_contact() {
    let mut s = sasakian();
    s.eta = OneFormField::coordinate(3, 2);
    let r = check_contact_metric(&s, DConvention::Half, &samples(&s.manifold, 10), 1e-9).unwrap();
    assert!(r.max_residual >= 0.1);
}

#[test]
fn negated_phi_is_not_contact() {
    let mut s = sasakian();
    s.phi = s.phi.scale(&Expr::Const(-1.0));
    let r = check_contact_metric(&s, DConvention::Half, &samples(&s.manifold, 10), 1e-9).unwrap();
    assert!(r.max_residual >= 0.1);
}

#[test]
fn sasakian_r3_is_sasakian() {
    let s = sasakian();
    let r = check_alpha_sasakian(&s, 1.0, &samples(&s.manifold, 50), 1e-6).unwrap();
    assert!(r.passed(), "{r:?}");
    assert!(r.max_residual < 1e-12);
    let wrong = check_alpha_sasakian(&s, 2.0, &samples(&s.manifold, 10), 1e-6).unwrap();
    assert!(wrong.max_residual >= 0.1);
}

#[test]
fn zero_alpha_rejected() {
    let s = sasakian();
    assert_eq!(
        check_alpha_sasakian(&s, 0.0, &samples(&s.manifold, 1), 1e-6).unwrap_err(),
        StructureError::InvalidAlpha
    );
}

#[test]
fn sasakian_r3_is_k_contact() {
    let s = sasakian();
    assert!(check_k_contact(&s, &samples(&s.manifold, 50), 1e-6).unwrap().passed());
}

#[test]
fn trivial_euclidean_structure_passes_k_contact_vacuously() {
    let e = bundled("euclidean-r3");
    let s = e.contact().unwrap();
    assert!(check_k_contact(s, &samples(&s.manifold, 20), 1e-12).unwrap().passed());
}

#[test]
fn doubled_xi_is_not_k_contact() {
    let mut s = sasakian();
    s.xi = s.xi.scale(&Expr::Const(2.0));
    let r = check_k_contact(&s, &samples(&s.manifold, 10), 1e-6).unwrap();
    assert!(r.max_residual >= 0.1);
}

#[test]
fn base_is_hermitian_kaehler_with_exact_potential() {
    let a = base();
    let smp = samples(&a.manifold, 50);
    assert!(check_hermitian(&a, &smp, 1e-12).unwrap().passed());
    assert!(check_kaehler(&a, &smp, 1e-10).unwrap().passed());
    assert!(check_exact_potential(&a, DConvention::Half, &smp, 1e-12).unwrap().passed());
}

#[test]
fn doubled_j_not_hermitian() {
    let mut a = base();
    a.j = a.j.scale(&Expr::Const(2.0));
    assert!(!check_hermitian(&a, &samples(&a.manifold, 5), 1e-9).unwrap().passed());
}

#[test]
fn curved_plane_not_kaehler() {
    let m = ChartedManifold::new(
        "curved",
        vec!["x".into(), "y".into()],
        vec![[-1.0, 1.0]; 2],
        vec![vec![Expr::one(), Expr::zero()], vec![Expr::zero(), parse("x^2+1").unwrap()]],
    )
    .unwrap();
    let a = AlmostComplexStructure::new(
        m,
        EndoField::from_constants(&[vec![0.0, -1.0], vec![1.0, 0.0]]),
        OneFormField::zero(2),
        JConvention::Unspecified,
    )
    .unwrap();
    let r = check_kaehler(&a, &samples(&a.manifold, 20), 1e-10).unwrap();
    assert!(r.max_residual >= 0.1, "{}", r.max_residual);
}

#[test]
fn zero_potential_fails_and_scaling_is_linear() {
    let mut a = base();
    let smp = samples(&a.manifold, 10);
    let omega = a.omega.clone();
    a.omega = OneFormField::zero(4);
    let zero = check_exact_potential(&a, DConvention::Half, &smp, 1e-9).unwrap();
    assert!(!zero.passed());
    // dω = Φ₁ exactly, so with ω → cω the residual is |c − 1|·|Φ₁|.
    let mut maxima = Vec::new();
    for c in [2.0, 3.0] {
        a.omega = omega.scale(&Expr::Const(c));
        maxima.push(check_exact_potential(&a, DConvention::Half, &smp, 1e-9).unwrap().max_residual);
    }
    assert!((maxima[1] - 2.0 * maxima[0]).abs() < 1e-12);
    assert!((zero.max_residual - maxima[0]).abs() < 1e-12);
}

#[test]
fn coefficient_pdes_on_dy_to_dx_potential() {
    let p = bundled("potential-dy-to-dx");
    let a = p.complex().unwrap();
    let smp = samples(&a.manifold, 20);
    assert!(check_coefficient_pdes(a, &smp, 1e-12).unwrap().passed());
    assert!(check_exact_potential(a, DConvention::Half, &smp, 1e-12).unwrap().passed());
    assert!(check_hermitian(a, &smp, 1e-12).unwrap().passed());

    let mut zero = a.clone();
    zero.omega = OneFormField::zero(4);
    let r = coefficient_pde_residuals(&zero, &[0.1, 0.2, 0.3, 0.4]).unwrap();
    assert_eq!(r, [0.0, 0.0, 0.0, 1.0]);

    // ω depending only on x: f₁ = x₁², f₂ = x₂² → off-diagonal families vanish.
    let mut xonly = a.clone();
    xonly.omega = OneFormField::new(vec![
        parse("x1^2/2").unwrap(),
        parse("x2^2/2").unwrap(),
        Expr::zero(),
        Expr::zero(),
    ]);
    let r = coefficient_pde_residuals(&xonly, &[0.1, 0.2, 0.3, 0.4]).unwrap();
    assert_eq!(&r[..3], &[0.0, 0.0, 0.0]);
}

#[test]
fn coefficient_pdes_are_convention_gated() {
    let a = base();
    assert_eq!(
        check_coefficient_pdes(&a, &samples(&a.manifold, 1), 1e-9).unwrap_err(),
        StructureError::ConventionMismatch(JConvention::DxToDy)
    );
}

#[test]
fn residual_is_monotone_in_sample_count() {
    let mut s = sasakian();
    s.phi = s.phi.scale(&Expr::Const(1.1));
    let mut last = 0.0;
    for n in [1, 5, 20, 40] {
        let r = check_alpha_sasakian(&s, 1.0, &samples(&s.manifold, n), 1e-6).unwrap();
        assert!(r.max_residual >= last);
        last = r.max_residual;
    }
}

#[test]
fn sasakian_implies_k_contact() {
    let s = sasakian();
    let smp = samples(&s.manifold, 30);
    let tau = 1e-9;
    assert!(check_alpha_sasakian(&s, 1.0, &smp, tau).unwrap().passed());
    assert!(check_k_contact(&s, &smp, 10.0 * tau).unwrap().passed());
}
