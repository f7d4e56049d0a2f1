use std::f64::consts::PI;

use nematic::diagnostics::{relative_energy, total_energy, unit_norm_drift};
use nematic::operators::divergence;
use nematic::presets::InitialCondition;
use nematic::projection::project;
use nematic::solver::{LinearSolver, PoissonSolveConfig};
use nematic::weak_strong::{prolong, restrict};
use nematic::{make_grid, BcMode, Grid, MacVectorField};
use proptest::prelude::*;

fn grid(n: usize, bc: BcMode) -> Grid {
    make_grid(&[n, n], &[2.0 * PI, 2.0 * PI], bc).unwrap()
}

fn bc_mode() -> impl Strategy<Value = BcMode> {
    prop_oneof![Just(BcMode::Periodic), Just(BcMode::Wall)]
}

fn wavy(g: &Grid, a: f64, b: f64, c: f64) -> MacVectorField {
    let mut u = MacVectorField::from_fn(g, |axis, x| {
        if axis == 0 {
            a * (x[1] + c).sin() + b * (2.0 * x[0]).cos()
        } else {
            b * (x[0] - c).cos() + a * (x[1] * x[0]).sin()
        }
    });
    nematic::grid::apply_velocity_bc(&mut u);
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn projection_is_idempotent_and_divergence_free(
        a in -2.0f64..2.0, b in -2.0f64..2.0, c in 0.0f64..6.0, bc in bc_mode(),
    ) {
        let g = grid(12, bc);
        let solver = LinearSolver::by_name("cg", PoissonSolveConfig::default()).unwrap();
        let (p1, _) = project(&wavy(&g, a, b, c), 1.0, &solver).unwrap();
        let scale = 1.0 + a.abs() + b.abs();
        prop_assert!(divergence(&p1).max_abs() <= 1e-8 * scale);
        let (p2, _) = project(&p1, 1.0, &solver).unwrap();
        let mut diff = p2.clone();
        diff.axpy(-1.0, &p1);
        prop_assert!(diff.max_abs() <= 1e-8 * scale);
    }

    #[test]
    fn presets_give_unit_directors_and_solenoidal_velocity(
        eps in 0.0f64..0.5, seed in 0u64..1000, bc in bc_mode(),
    ) {
        let g = grid(16, bc);
        for ic in [InitialCondition::taylor_green(eps).with_director_perturbation(eps), InitialCondition::random_smooth(eps)] {
            let s = ic.build(&g, seed).unwrap();
            prop_assert!(unit_norm_drift(&s) <= 1e-14);
            prop_assert!(divergence(&s.u).max_abs() <= 1e-10);
            prop_assert!(total_energy(&s) >= 0.0);
        }
    }

    #[test]
    fn relative_energy_is_a_symmetric_nonnegative_distance(
        e1 in 0.0f64..0.5, e2 in 0.0f64..0.5, seed in 0u64..100,
    ) {
        let g = grid(12, BcMode::Periodic);
        let a = InitialCondition::random_smooth(e1).build(&g, seed).unwrap();
        let b = InitialCondition::random_smooth(e2).build(&g, seed + 1).unwrap();
        let ab = relative_energy(&a, &b).unwrap();
        let ba = relative_energy(&b, &a).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1e-300));
        prop_assert_eq!(relative_energy(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn restriction_keeps_divergence_free_and_inverts_prolongation(
        eps in 0.0f64..0.5, seed in 0u64..100, bc in bc_mode(),
    ) {
        let fine = grid(32, bc);
        let coarse = grid(16, bc);
        let s = InitialCondition::random_smooth(eps).build(&fine, seed).unwrap();
        let r = restrict(&s, &coarse).unwrap();
        prop_assert!(divergence(&r.u).max_abs() <= 1e-10);
        prop_assert!(unit_norm_drift(&r) <= 1e-14);
        let back = restrict(&prolong(&r, &fine).unwrap(), &coarse).unwrap();
        prop_assert!(relative_energy(&back, &r).unwrap() <= 1e-20);
    }
}
