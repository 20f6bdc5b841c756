use super::*;
use crate::cli::fixtures::bundled;
use crate::expr::parse;
use crate::structures::{check_almost_contact, check_metric_compatibility, JConvention};
use crate::tensor::spd_inverse;
use nalgebra::DMatrix;

const TWO_PI: f64 = std::f64::consts::TAU;

fn example_base() -> AlmostComplexStructure {
    bundled("worked-example").complex().unwrap().clone()
}

fn contactization(name: &str, alpha: f64) -> ContactizationSpec {
    let base = bundled(name).complex().unwrap().clone();
    ContactizationSpec::new(base, alpha, "t", [0.0, TWO_PI]).unwrap()
}

fn warped(a: f64, warp: &str) -> WarpedProduct {
    let fiber = bundled("sasakian-r3").contact().unwrap().clone();
    let spec = WarpedProductSpec::new(example_base(), fiber, a, ScalarField::new(parse(warp).unwrap())).unwrap();
    WarpedProduct::build(spec).unwrap()
}

fn close(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

#[test]
fn example_metric_matches_built_chart() {
    for a in [0.5, 1.0, 2.0] {
        let spec = contactization("worked-example", a);
        let prod = build_contactization(&spec).unwrap();
        for s in Samples::generate(prod.manifold(), 7, 100).iter() {
            let g = prod.manifold().metric_at(&s.point).unwrap();
            assert!(close(&g, &example_metric_matrix(a, &s.point)) <= 1e-12);
            assert!(close(&g, &printed_metric_matrix(&spec, &s.point).unwrap()) <= 1e-12);
        }
    }
}

#[test]
fn printed_inverse_is_inverse() {
    let spec = contactization("worked-example", 1.5);
    for s in Samples::generate(&spec.base().manifold, 3, 20).iter() {
        let mut p = s.point.clone();
        p.push(1.0);
        let g = printed_metric_matrix(&spec, &p).unwrap();
        let gi = printed_metric_inverse(&spec, &p).unwrap();
        assert!(close(&(g * gi), &DMatrix::identity(5, 5)) <= 1e-12);
    }
}

#[test]
fn vanishing_potential_gives_scaled_identity() {
    let mut base = example_base();
    base.omega = crate::tensor::OneFormField::zero(4);
    let spec = ContactizationSpec::new_unchecked(base, 1.0, "t", [0.0, 1.0]).unwrap();
    let prod = build_contactization(&spec).unwrap();
    let p = [0.3, -0.1, 0.7, 0.2, 0.5];
    let g = prod.manifold().metric_at(&p).unwrap();
    assert!(close(&g, &(DMatrix::identity(5, 5) * 0.25)) == 0.0);
    assert!(close(&spd_inverse(&g).unwrap(), &(DMatrix::identity(5, 5) * 4.0)) <= 1e-14);
    // e_i = 2∂y_i when f vanishes
    let frame = adapted_frame(&spec, &p).unwrap();
    assert_eq!(frame[(2, 0)], 2.0);
    assert_eq!(frame[(3, 1)], 2.0);
    assert_eq!(frame[(4, 0)], 0.0);
}

#[test]
fn builders_reject_bad_input() {
    let base = example_base();
    assert_eq!(
        ContactizationSpec::new(base.clone(), 0.0, "t", [0.0, 1.0]).unwrap_err(),
        ProductError::InvalidAlpha
    );
    assert!(matches!(
        ContactizationSpec::new(base.clone(), 1.0, "t", [1.0, 0.0]),
        Err(ProductError::InvalidInterval { .. })
    ));
    let mut flat = base.clone();
    flat.omega = crate::tensor::OneFormField::zero(4);
    assert!(matches!(
        ContactizationSpec::new(flat, 1.0, "t", [0.0, 1.0]),
        Err(ProductError::BaseCheck { .. })
    ));
    let fiber = bundled("sasakian-r3").contact().unwrap().clone();
    let neg = ScalarField::new(parse("x1").unwrap());
    assert!(matches!(
        WarpedProductSpec::new(base.clone(), fiber.clone(), 1.0, neg),
        Err(ProductError::NonPositiveWarp { .. })
    ));
    let foreign = ScalarField::new(parse("exp(q)").unwrap());
    assert!(matches!(
        WarpedProductSpec::new(base, fiber, 1.0, foreign),
        Err(ProductError::WarpDomain(_))
    ));
}

#[test]
fn contactization_is_almost_contact_metric() {
    let spec = contactization("worked-example", 2.0);
    let prod = build_contactization(&spec).unwrap();
    let s = &prod.structure;
    let smp = Samples::generate(prod.manifold(), 11, 30);
    assert!(check_almost_contact(s, &smp, 1e-12).unwrap().passed());
    assert!(check_metric_compatibility(s, &smp, 1e-12).unwrap().passed());
    for x in smp.iter() {
        let eta_xi = s.eta.apply(&s.xi).eval_at(prod.manifold().coords(), &x.point).unwrap();
        assert!((eta_xi - 1.0).abs() < 1e-15);
    }
    let r = fundamental_form_lift_check(&spec, &smp, 1e-12).unwrap();
    assert!(r.passed(), "{r:?}");
}

#[test]
fn reeb_column_of_christoffel_table() {
    let spec = contactization("worked-example", 1.7);
    let p = [0.2, -0.4, 0.1, 0.6, 1.0];
    let table = printed_christoffel_table(&spec, &p).unwrap();
    assert_eq!(table.dim(), 5);
    assert!((table.get(2, 0, 4) - 0.85).abs() < 1e-15);
    assert!((table.get(2, 4, 0) - 0.85).abs() < 1e-15);
    assert!(!table.is_listed(4, 4, 4));
    assert_eq!(table.get(4, 4, 4), 0.0);
}

#[test]
fn christoffel_table_matches_oracle_under_dy_to_dx() {
    for a in [1.0, 2.0] {
        let spec = contactization("potential-dy-to-dx", a);
        let prod = build_contactization(&spec).unwrap();
        let smp = Samples::generate(prod.manifold(), 5, 10);
        let (r, entries) = christoffel_table_check(&spec, &smp, 1e-9).unwrap();
        assert_eq!(entries.len(), 5 * 15);
        assert!(r.max_residual <= 1e-12, "{r:?}");
    }
}

#[test]
fn christoffel_table_flips_sign_under_dx_to_dy() {
    let spec = contactization("worked-example", 1.0);
    let prod = build_contactization(&spec).unwrap();
    let smp = Samples::generate(prod.manifold(), 5, 10);
    let (r, entries) = christoffel_table_check(&spec, &smp, 1e-9).unwrap();
    assert!(!r.passed());
    for e in &entries {
        if e.residual > 1e-9 {
            assert!((e.printed + e.oracle).abs() < 1e-12, "{e:?}");
        }
    }
}

#[test]
fn frame_is_orthonormal_and_relations_hold() {
    for (name, conv) in [("worked-example", JConvention::DxToDy), ("potential-dy-to-dx", JConvention::DyToDx)] {
        let spec = contactization(name, 2.0);
        assert_eq!(spec.base().convention, conv);
        let prod = build_contactization(&spec).unwrap();
        let smp = Samples::generate(prod.manifold(), 9, 8);
        let reports = frame_connection_check(&spec, &smp, 1e-9).unwrap();
        for r in &reports[..FrameRelation::ALL.len()] {
            assert!(r.passed(), "{name} {r:?}");
        }
        let ortho = reports.iter().find(|r| r.name == "frame/orthonormal").unwrap();
        assert!(ortho.passed());
        let printed = reports.iter().find(|r| r.name == "frame/phi_e_printed").unwrap();
        assert_eq!(printed.passed(), conv == JConvention::DyToDx, "{name}");
    }
}

#[test]
fn reeb_derivative_of_frame_is_linear_in_alpha() {
    let p = [0.3, 0.1, -0.2, 0.4, 2.0];
    let mut values = Vec::new();
    for a in [1.0, 2.0, 3.0] {
        let spec = contactization("worked-example", a);
        let prod = build_contactization(&spec).unwrap();
        let (e, pe, xi) = frame_fields(&spec, &prod);
        let local = prod.manifold().local(&p).unwrap();
        let nabla = local.koszul_connection(&xi, &e[0]).unwrap();
        let phie = pe[0].eval(prod.manifold(), &p).unwrap();
        values.push((nabla + phie * a).norm());
    }
    assert!(values.iter().all(|v| *v < 1e-12), "{values:?}");
}

#[test]
fn scalar_identity_cases() {
    assert_eq!(scalar_identity_residual(2.0, 0.7, 0.0, 0.3), 0.0);
    assert!(scalar_identity_residual(1.0, 0.7, 0.5, 0.3).abs() < 1e-15);
    assert!(scalar_identity_residual(2.0, 0.5, 1.0, 0.0).abs() > 1.0);
}

#[test]
fn alpha_sasakian_holds_beyond_alpha_one() {
    let spec = contactization("worked-example", 1.0);
    let reports = alpha_sasakian_probe(&spec, &[0.5, 1.0, 2.0], 10, 3).unwrap();
    let get = |n: &str| reports.iter().find(|r| r.name == n).unwrap();
    for a in ["0.5", "1", "2"] {
        assert!(get(&format!("alpha_sasakian/alpha={a}")).max_residual < 1e-9);
    }
    assert!(get("sasakian/alpha=1").passed());
    assert!(get("sasakian/alpha=2").max_residual >= 0.1);
    assert!(get("scalar_identity/alpha=1").passed());
    assert!(!get("scalar_identity/alpha=2").passed());
}

#[test]
fn warped_product_is_almost_contact_metric() {
    for warp in ["1", "exp(x1/4)"] {
        for a in [0.0, 1.0] {
            let w = warped(a, warp);
            let s = &w.product.structure;
            let smp = Samples::generate(w.product.manifold(), 13, 15);
            assert!(check_almost_contact(s, &smp, 1e-12).unwrap().passed());
            assert!(check_metric_compatibility(s, &smp, 1e-12).unwrap().passed());
            for x in smp.iter() {
                let local = w.product.manifold().local(&x.point).unwrap();
                let xi = local.value(&s.xi).unwrap();
                assert!((local.inner(&xi, &xi) - 1.0).abs() < 1e-12);
                assert!(crate::tensor::cholesky(local.metric()).is_ok());
            }
        }
    }
}

#[test]
fn untwisted_warped_product_is_block_diagonal() {
    let w = warped(0.0, "1");
    let base = example_base();
    let fiber = bundled("sasakian-r3");
    let p = [0.1, 0.2, 0.3, 0.4, 0.5, -0.5, 0.25];
    let g = w.product.manifold().metric_at(&p).unwrap();
    let g1 = base.manifold.metric_at(&p[..4]).unwrap();
    let g2 = fiber.manifold.metric_at(&p[4..]).unwrap();
    assert!(close(&g.view((0, 0), (4, 4)).into_owned(), &g1) < 1e-15);
    assert!(close(&g.view((4, 4), (3, 3)).into_owned(), &g2) < 1e-15);
    assert!(g.view((0, 4), (4, 3)).abs().max() == 0.0);
}

#[test]
fn closed_forms_match_with_constant_warp() {
    let w = warped(1.0, "1");
    for s in w.samples(21, 6) {
        let (xs, us) = (&s.base.fields, &s.fiber.fields);
        for x in xs {
            for y in xs {
                assert!(connection_base(&w, x, y, &s.point).unwrap().residual() < 1e-9);
            }
            for u in us {
                let m = connection_mixed(&w, x, u, &s.point).unwrap();
                assert!(m.form.residual() < 1e-9);
                assert!(m.symmetry_residual() < 1e-9);
            }
        }
        for u in us {
            for v in us {
                let fp = connection_fiber(&w, u, v, &s.point).unwrap();
                assert_eq!(fp.winner(1e-9), ParseWinner::Both);
            }
        }
    }
}

#[test]
fn mixed_warp_term_has_reversed_sign() {
    let w = warped(1.0, "exp(x1/4)");
    for s in w.samples(4, 5) {
        let x = VectorField::coordinate(4, 0);
        let u = &s.fiber.fields[0];
        let m = connection_mixed(&w, &x, u, &s.point).unwrap();
        assert!(m.flipped_residual() < 1e-9);
        assert!(m.form.residual() > 1e-3);
    }
}

#[test]
fn mixed_with_reeb_fiber_field() {
    // U = ξ: φU = 0, η(U) = 1, leaving (−aJX, a²ω(JX)ξ).
    let w = warped(1.5, "exp(x1/4)");
    let xi = w.spec.fiber().xi.clone();
    for s in w.samples(8, 5) {
        let x = &s.base.fields[0];
        let m = connection_mixed(&w, x, &xi, &s.point).unwrap();
        assert!(m.warp_term.norm() < 1e-15);
        assert!(m.form.residual() < 1e-9);
    }
}

#[test]
fn fiber_reeb_reeb_vanishes() {
    let w = warped(1.0, "exp(y1/4)");
    let xi = w.spec.fiber().xi.clone();
    for s in w.samples(2, 5) {
        let fp = connection_fiber(&w, &xi, &xi, &s.point).unwrap();
        assert!(fp.oracle.norm() < 1e-12);
        assert!(fp.parse_a.norm() < 1e-12);
    }
}

#[test]
fn fiber_parse_a_wins_when_warp_gradient_meets_potential() {
    let w = warped(1.0, "exp(y1/4)");
    let [a, b, win] = fiber_parse_check(&w, 3, 8, 1e-6).unwrap();
    assert!(a.max_residual < 1e-9);
    assert!(b.max_residual > 1e-2);
    assert_eq!(win.notes[0], "8 evaluations");
    assert!(win.notes.iter().any(|n| n == "A=8 B=0 both=0 neither=0"), "{:?}", win.notes);
}

#[test]
fn aux_forms_on_diagonal() {
    let w = warped(1.0, "1");
    let aux = AuxForms { base: w.spec.base(), fiber: w.spec.fiber() };
    for s in w.samples(5, 4) {
        let (p1, p2) = w.product.split(&s.point);
        let x = &s.base.fields[2];
        let local = w.spec.base().manifold.local(p1).unwrap();
        let xv = local.value(x).unwrap();
        let expect = 2.0 * local.derive_pairing(&xv, &w.spec.base().omega, x).unwrap();
        assert!((aux.lambda(x, x, p1).unwrap() - expect).abs() < 1e-12);
        let u = &s.fiber.fields[2];
        let fl = w.spec.fiber().manifold.local(p2).unwrap();
        let uv = fl.value(u).unwrap();
        let expect = 2.0 * fl.derive_pairing(&uv, &w.spec.fiber().eta, u).unwrap();
        assert!((aux.theta(u, u, p2).unwrap() - expect).abs() < 1e-12);
    }
}

#[test]
fn split_identities_hold() {
    for warp in ["1", "exp(x1/4+y2/5)"] {
        let w = warped(1.0, warp);
        let [mixed, fiber, statement] = split_identity_check(&w, 6, 5, 1e-9).unwrap();
        assert!(mixed.passed(), "{warp} {mixed:?}");
        assert!(fiber.passed(), "{warp} {fiber:?}");
        assert!(statement.max_residual > 0.1, "{warp} {statement:?}");
    }
}

#[test]
fn product_samples_are_reproducible() {
    let w = warped(1.0, "1");
    let a = w.samples(99, 3);
    let b = w.samples(99, 3);
    assert_eq!(a.iter().map(|s| s.point.clone()).collect::<Vec<_>>(), b.iter().map(|s| s.point.clone()).collect::<Vec<_>>());
    assert_eq!(a[0].point.len(), 7);
    assert_ne!(w.samples(100, 1)[0].point, a[0].point);
}

#[test]
fn printed_phi_frame_is_negated_under_dx_to_dy() {
    let spec = contactization("worked-example", 1.5);
    let prod = build_contactization(&spec).unwrap();
    let (_, pe, xi) = frame_fields(&spec, &prod);
    for s in Samples::generate(prod.manifold(), 17, 10).iter() {
        let f = potential_coefficients(spec.base(), &s.point).unwrap();
        let xiv = xi.eval(prod.manifold(), &s.point).unwrap();
        for (i, field) in pe.iter().enumerate() {
            let mut claim = -&xiv * (1.5 * f[i]);
            claim[i] += 2.0;
            let got = field.eval(prod.manifold(), &s.point).unwrap();
            assert!((got + claim).norm() < 1e-12, "{i}");
        }
    }
}
