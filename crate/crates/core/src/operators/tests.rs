use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::grid::{make_grid, BcMode, DirectorField, Grid, MacVectorField, ScalarField};

fn periodic(n: usize) -> Grid {
    make_grid(&[n, n], &[1.0, 1.0], BcMode::Periodic).unwrap()
}

fn smooth_u(g: &Grid, seed: f64) -> MacVectorField {
    MacVectorField::from_fn(g, |a, x| {
        let (s, c) = ((2.0 * PI * (x[0] + seed)).sin(), (2.0 * PI * (x[1] - seed)).cos());
        if a == 0 {
            s * c + 0.3 * (4.0 * PI * x[1]).sin()
        } else {
            c - 0.2 * s * s
        }
    })
}

fn smooth_d(g: &Grid, seed: f64) -> DirectorField {
    DirectorField::from_fn(g, |x| {
        let th = 0.7 * (2.0 * PI * (x[0] + seed)).sin() * (2.0 * PI * x[1]).cos() + 0.3;
        let ph = 0.5 * (2.0 * PI * (x[1] + 0.5 * seed)).sin();
        [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]
    })
}

fn max_diff(a: &MacVectorField, b: &MacVectorField) -> f64 {
    let mut d = a.clone();
    d.axpy(-1.0, b);
    d.max_abs()
}

#[test]
fn gradient_of_constant_is_zero() {
    for bc in [BcMode::Wall, BcMode::Periodic] {
        let g = make_grid(&[8, 8], &[1.0, 1.0], bc).unwrap();
        let p = ScalarField::from_fn(&g, |_| 3.5);
        assert_eq!(gradient(&p).max_abs(), 0.0);
    }
}

#[test]
fn gradient_of_linear_on_periodic_box_has_wrap_jump() {
    let g = periodic(8);
    let p = ScalarField::from_fn(&g, |x| x[0]);
    let gp = gradient(&p);
    for j in 1..=8 {
        // wrap face between the last and first cell sees the jump 0.0625 - 0.9375
        assert!((gp.comp(0)[g.flatten(&[1, j])] + 7.0).abs() < 1e-12);
        for i in 2..=8 {
            assert!((gp.comp(0)[g.flatten(&[i, j])] - 1.0).abs() < 1e-12);
        }
    }
}

fn gradient_error(n: usize) -> f64 {
    let g = periodic(n);
    let p = ScalarField::from_fn(&g, |x| (2.0 * PI * x[0]).sin());
    let gp = gradient(&p);
    g.interior_faces(0)
        .iter()
        .map(|&f| {
            let x = g.face_center(0, f);
            (gp.comp(0)[f] - 2.0 * PI * (2.0 * PI * x[0]).cos()).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn gradient_is_second_order() {
    let e64 = gradient_error(64);
    let e128 = gradient_error(128);
    let ratio = e64 / e128;
    assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    assert!(e64 < 0.01);
}

#[test]
fn divergence_of_constant_and_linear_strain() {
    let g = periodic(8);
    let u = MacVectorField::from_fn(&g, |a, _| if a == 0 { 2.0 } else { -1.0 });
    assert!(divergence(&u).max_abs() < 1e-13);

    let g = make_grid(&[8, 8], &[1.0, 1.0], BcMode::Wall).unwrap();
    let u = MacVectorField::from_fn(&g, |a, x| if a == 0 { x[0] } else { -x[1] });
    let div = divergence(&u);
    // Away from the walls, where no-slip does not overwrite faces.
    for i in 2..=7 {
        for j in 2..=7 {
            assert!(div.data()[g.flatten(&[i, j])].abs() < 1e-13);
        }
    }
}

#[test]
fn divergence_of_gradient_is_five_point_laplacian() {
    let g = periodic(8);
    let p = ScalarField::from_fn(&g, |x| (2.0 * PI * x[0]).sin() + x[1].cos());
    let a = divergence(&gradient(&p));
    let b = laplacian_scalar(&p);
    for &i in g.interior() {
        assert!((a.data()[i] - b.data()[i]).abs() < 1e-10);
    }
}

#[test]
fn laplacian_exact_on_quadratics_and_eigenfunctions() {
    let g = make_grid(&[8, 8], &[1.0, 1.0], BcMode::Wall).unwrap();
    let f = ScalarField::from_fn(&g, |x| x[0] * x[0]);
    let l = laplacian_scalar(&f);
    assert!((l.data()[g.flatten(&[4, 4])] - 2.0).abs() < 1e-10);

    let g = periodic(8);
    let h = g.h(0);
    let f = ScalarField::from_fn(&g, |x| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin());
    let l = laplacian_scalar(&f);
    let lam = -(2.0 / (h * h)) * (2.0 - 2.0 * (2.0 * PI * h).cos());
    for &i in g.interior() {
        assert!((l.data()[i] - lam * f.data()[i]).abs() < 1e-11);
    }
    let c = DirectorField::from_fn(&g, |_| [0.3, -0.2, 0.9]);
    let lc = laplacian_director(&c);
    assert!(lc.comps().iter().all(|v| v.iter().all(|x| x.abs() < 1e-12)));
}

fn advect_error(n: usize) -> f64 {
    let g = periodic(n);
    let u = MacVectorField::from_fn(&g, |a, _| if a == 0 { 1.0 } else { 0.0 });
    let f = ScalarField::from_fn(&g, |x| (2.0 * PI * x[0]).sin());
    let adv = advect_scalar(&u, &f);
    g.interior()
        .iter()
        .map(|&i| {
            let x = g.cell_center(i);
            (adv.data()[i] - 2.0 * PI * (2.0 * PI * x[0]).cos()).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn advection_trivial_cases_and_order() {
    let g = periodic(16);
    let f = ScalarField::from_fn(&g, |x| x[0].sin());
    assert_eq!(advect_scalar(&MacVectorField::zeros(&g), &f).max_abs(), 0.0);
    let c = ScalarField::from_fn(&g, |_| 2.0);
    assert_eq!(advect_scalar(&smooth_u(&g, 0.1), &c).max_abs(), 0.0);
    let ratio = advect_error(32) / advect_error(64);
    assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
}

#[test]
fn twist_gradient_and_forces() {
    let g = periodic(32);
    let k = 2.0 * PI;
    let h = g.h(0);
    let d = DirectorField::from_fn(&g, |x| [(k * x[0]).sin(), 0.0, (k * x[0]).cos()]);
    let t = grad_tensor(&d);
    for &i in g.interior() {
        let x = g.cell_center(i);
        let sk = (k * h).sin() / h;
        assert!((t.entry(0, 0)[i] - sk * (k * x[0]).cos()).abs() < 1e-12);
        assert!((t.entry(2, 0)[i] + sk * (k * x[0]).sin()).abs() < 1e-12);
        assert!((t.entry(0, 0)[i] - k * (k * x[0]).cos()).abs() < k * k * k * h * h);
        assert_eq!(t.entry(1, 0)[i], 0.0);
        assert!(t.entry(0, 1)[i].abs() < 1e-12);
        for j in 0..2 {
            for l in 0..2 {
                assert_eq!(t.gram_at(j, l, i), t.gram_at(l, j, i));
            }
        }
    }
    assert!(elastic_force_direct(&d).max_abs() < 1e-9);
    assert!(elastic_force_identity(&d).max_abs() < 1e-9);

    let c = DirectorField::from_fn(&g, |_| [0.0, 0.0, 1.0]);
    assert_eq!(elastic_force_direct(&c).max_abs(), 0.0);
    assert_eq!(elastic_force_identity(&c).max_abs(), 0.0);
    assert_eq!(director_rhs(&MacVectorField::zeros(&g), &c).comps()[2].iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0);
}

fn twist_rhs_max(n: usize) -> f64 {
    let g = periodic(n);
    let k = 2.0 * PI;
    let d = DirectorField::from_fn(&g, |x| [(k * x[0]).sin(), 0.0, (k * x[0]).cos()]);
    let r = director_rhs(&MacVectorField::zeros(&g), &d);
    (0..3)
        .map(|c| crate::grid::cell_max_abs(&g, r.comp(c)))
        .fold(0.0, f64::max)
}

#[test]
fn twist_is_near_equilibrium_of_director_flow() {
    let (a, b) = (twist_rhs_max(32), twist_rhs_max(64));
    assert!(a < 20.0 * (1.0 / 32.0f64).powi(2) * (2.0 * PI).powi(4));
    assert!((a / b - 4.0).abs() < 0.1, "{}", a / b);
}

#[test]
fn twist_transport_matches_minus_x_derivative() {
    let g = periodic(64);
    let k = 2.0 * PI;
    let d = DirectorField::from_fn(&g, |x| [(k * x[0]).sin(), 0.0, (k * x[0]).cos()]);
    let u = MacVectorField::from_fn(&g, |a, _| if a == 0 { 1.0 } else { 0.0 });
    let r = director_rhs(&u, &d);
    let r0 = director_rhs(&MacVectorField::zeros(&g), &d);
    for &i in g.interior() {
        let x = g.cell_center(i);
        let exact = [-k * (k * x[0]).cos(), 0.0, k * (k * x[0]).sin()];
        for c in 0..3 {
            assert!((r.comp(c)[i] - r0.comp(c)[i] - exact[c]).abs() < k * k * k / (64.0 * 64.0));
        }
    }
}

fn stress_gap(n: usize) -> f64 {
    let g = periodic(n);
    let d = smooth_d(&g, 0.13);
    max_diff(&elastic_force_direct(&d), &elastic_force_identity(&d))
}

#[test]
fn stress_forms_agree_to_second_order() {
    let (a, b) = (stress_gap(32), stress_gap(64));
    assert!(a / b > 3.2 && a / b < 4.8, "{}", a / b);
}

#[test]
fn stress_forms_agree_to_second_order_in_wall_mode() {
    let gap = |n: usize| {
        let g = make_grid(&[n, n], &[1.0, 1.0], BcMode::Wall).unwrap();
        // Neumann-compatible director (even about both walls).
        let d = DirectorField::from_fn(&g, |x| {
            let th = 0.6 * (PI * x[0]).cos() * (PI * x[1]).cos();
            [th.sin(), 0.0, th.cos()]
        });
        max_diff(&elastic_force_direct(&d), &elastic_force_identity(&d))
    };
    let (a, b) = (gap(32), gap(64));
    assert!(a / b > 3.0 && a / b < 5.0, "{}", a / b);
}

#[test]
fn gradient_divergence_adjoint() {
    for bc in [BcMode::Wall, BcMode::Periodic] {
        let g = make_grid(&[10, 7], &[1.0, 0.8], bc).unwrap();
        let p = ScalarField::from_fn(&g, |x| (3.0 * x[0]).sin() * x[1] + x[1].exp());
        let u = smooth_u(&g, 0.2);
        let lhs = gradient(&p).dot(&u);
        let rhs = -p.dot(&divergence(&u));
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()), "{bc:?} {lhs} {rhs}");
    }
}

#[test]
fn skew_momentum_transport_is_energy_neutral() {
    for bc in [BcMode::Wall, BcMode::Periodic] {
        let g = make_grid(&[12, 9], &[1.0, 1.0], bc).unwrap();
        let u = smooth_u(&g, 0.05);
        let v = smooth_u(&g, 0.31);
        let e = advect_velocity_skew(&u, &v).dot(&v);
        assert!(e.abs() < 1e-13, "{bc:?}: {e}");
    }
}

#[test]
fn coupling_terms_cancel_exactly() {
    // <u, -(grad d)^T lap d> + <u . grad d, lap d> = 0 on the discrete level.
    for bc in [BcMode::Wall, BcMode::Periodic] {
        let g = make_grid(&[12, 10], &[1.0, 1.0], bc).unwrap();
        let u = smooth_u(&g, 0.4);
        let d = smooth_d(&g, 0.2);
        let a = u.dot(&elastic_force_identity_solenoidal(&d));
        let b = advect_director(&u, &d).dot(&laplacian_director(&d));
        assert!((a + b).abs() < 1e-10 * (1.0 + a.abs()), "{bc:?}: {a} {b}");
    }
}

#[test]
fn identity_force_minus_solenoidal_part_is_a_gradient() {
    let g = periodic(16);
    let d = smooth_d(&g, 0.7);
    let mut diff = elastic_force_identity(&d);
    diff.axpy(-1.0, &elastic_force_identity_solenoidal(&d));
    let solver = crate::solver::LinearSolver::default();
    let (rest, _) = crate::projection::project(&diff, 1.0, &solver).unwrap();
    assert!(rest.max_abs() < 1e-9);
}

#[test]
fn translation_equivariance() {
    let g = periodic(8);
    let d = smooth_d(&g, 0.21);
    let u = smooth_u(&g, 0.11);
    let shift = |f: &[f64]| {
        let mut out = f.to_vec();
        for &i in g.interior() {
            let m = g.unflatten(i);
            let src = g.flatten(&[if m[0] == 1 { 8 } else { m[0] - 1 }, m[1]]);
            out[i] = f[src];
        }
        crate::grid::fill_cell_ghosts(&g, &mut out, [1.0; 3]);
        out
    };
    let ds = DirectorField::from_comps(&g, [shift(d.comp(0)), shift(d.comp(1)), shift(d.comp(2))]);
    let us = MacVectorField::from_comps(&g, vec![shift(u.comp(0)), shift(u.comp(1))]);
    let f = elastic_force_direct(&d);
    let fs = elastic_force_direct(&ds);
    let r = director_rhs(&u, &d);
    let rs = director_rhs(&us, &ds);
    for a in 0..2 {
        let expect = shift(f.comp(a));
        for &i in g.interior() {
            assert!((expect[i] - fs.comp(a)[i]).abs() < 1e-12);
        }
    }
    for c in 0..3 {
        let expect = shift(r.comp(c));
        for &i in g.interior() {
            assert!((expect[i] - rs.comp(c)[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn periodic_constants_stay_exactly_constant() {
    let g = periodic(8);
    let u = MacVectorField::from_fn(&g, |a, _| if a == 0 { 0.7 } else { -0.4 });
    let d = DirectorField::from_fn(&g, |_| [0.6, 0.0, 0.8]);
    assert_eq!(laplacian_mac(&u).max_abs(), 0.0);
    assert_eq!(advect_velocity(&u, &u).max_abs(), 0.0);
    assert_eq!(advect_velocity_skew(&u, &u).max_abs(), 0.0);
    assert_eq!(divergence(&u).max_abs(), 0.0);
    let r = director_rhs(&u, &d);
    assert!(r.comps().iter().all(|c| c.iter().all(|v| *v == 0.0)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_operators_are_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, s1 in 0.0f64..1.0, s2 in 0.0f64..1.0) {
        let g = make_grid(&[8, 6], &[1.0, 1.0], BcMode::Wall).unwrap();
        let u = smooth_u(&g, s1);
        let v = smooth_u(&g, s2);
        let mut comb = u.clone();
        comb.scale(a);
        comb.axpy(b, &v);
        let lhs = laplacian_mac(&comb);
        let mut rhs = laplacian_mac(&u);
        rhs.scale(a);
        rhs.axpy(b, &laplacian_mac(&v));
        prop_assert!(max_diff(&lhs, &rhs) < 1e-9);

        let dl = divergence(&comb);
        let mut dr = divergence(&u);
        dr.data_mut().iter_mut().for_each(|x| *x *= a);
        let dv = divergence(&v);
        for (x, y) in dr.data_mut().iter_mut().zip(dv.data()) { *x += b * y; }
        for &i in g.interior() {
            prop_assert!((dl.data()[i] - dr.data()[i]).abs() < 1e-10);
        }
    }
}
