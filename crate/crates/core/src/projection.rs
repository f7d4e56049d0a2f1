//! Discrete Leray projection and the zero-mean pressure solve.

use crate::error::{Error, Result};
use crate::grid::{apply_velocity_bc, MacVectorField, ScalarField};
use crate::operators::{divergence, gradient};
use crate::solver::{LinearSolver, Location};

pub use crate::solver::PoissonSolveConfig;

/// Solves `lap x = rhs` with zero mean.
///
/// The pure Neumann/periodic problem needs a mean-free right-hand side;
/// callers subtract the mean. A mean larger than `tol` times the RMS of
/// `rhs` is rejected as [`Error::IncompatibleRhs`].
pub fn solve_poisson(rhs: &ScalarField, solver: &LinearSolver) -> Result<ScalarField> {
    let g = rhs.grid();
    let mean = rhs.mean();
    let rms = (g.interior().iter().map(|&i| rhs.data()[i].powi(2)).sum::<f64>()
        / g.cell_count() as f64)
        .sqrt();
    if mean.abs() > solver.cfg().tol * rms {
        return Err(Error::IncompatibleRhs { mean });
    }
    let neg: Vec<f64> = rhs.data().iter().map(|v| -v).collect();
    let x = solver.solve(g, Location::Cell, 0.0, 1.0, &neg)?;
    let mut out = ScalarField::from_data(g, x);
    out.subtract_mean();
    crate::grid::apply_scalar_bc(&mut out);
    Ok(out)
}

/// Projects `u_star` onto discretely divergence-free fields.
///
/// Solves `lap phi = div(u_star)/dt`, sets `u = u_star - dt grad phi` and
/// returns `phi` as the (zero-mean) pressure.
pub fn project(
    u_star: &MacVectorField,
    dt: f64,
    solver: &LinearSolver,
) -> Result<(MacVectorField, ScalarField)> {
    let g = u_star.grid();
    let mut rhs = divergence(u_star);
    rhs.data_mut().iter_mut().for_each(|v| *v /= dt);
    // Rounding in the divergence leaves a mean of order eps; it is not part
    // of the compatibility question.
    rhs.subtract_mean();
    if rhs.max_abs() == 0.0 {
        let mut u = u_star.clone();
        apply_velocity_bc(&mut u);
        return Ok((u, ScalarField::zeros(g)));
    }
    let phi = solve_poisson(&rhs, solver)?;
    let mut u = u_star.clone();
    u.axpy(-dt, &gradient(&phi));
    apply_velocity_bc(&mut u);
    Ok((u, phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, BcMode};
    use std::f64::consts::PI;

    fn tight() -> LinearSolver {
        LinearSolver::by_name(
            "cg",
            PoissonSolveConfig {
                tol: 1e-12,
                max_iter: 10_000,
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let g = make_grid(&[8, 8], &[1.0, 1.0], BcMode::Wall).unwrap();
        let x = solve_poisson(&ScalarField::zeros(&g), &tight()).unwrap();
        assert_eq!(x.max_abs(), 0.0);
        let (u, p) = project(&MacVectorField::zeros(&g), 0.1, &tight()).unwrap();
        assert_eq!(u.max_abs(), 0.0);
        assert_eq!(p.max_abs(), 0.0);
    }

    #[test]
    fn constant_rhs_is_incompatible() {
        let g = make_grid(&[8, 8], &[1.0, 1.0], BcMode::Periodic).unwrap();
        let rhs = ScalarField::from_fn(&g, |_| 1.0);
        assert!(matches!(
            solve_poisson(&rhs, &tight()),
            Err(Error::IncompatibleRhs { .. })
        ));
    }

    #[test]
    fn divergence_free_input_is_fixed() {
        for bc in [BcMode::Wall, BcMode::Periodic] {
            let g = make_grid(&[16, 16], &[1.0, 1.0], bc).unwrap();
            // Discrete curl of a streamfunction vanishing on the boundary.
            let psi = |x: f64, y: f64| (PI * x).sin().powi(2) * (PI * y).sin().powi(2);
            let h = g.h(0);
            let u = MacVectorField::from_fn(&g, |a, x| {
                if a == 0 {
                    (psi(x[0], x[1] + h / 2.0) - psi(x[0], x[1] - h / 2.0)) / h
                } else {
                    -(psi(x[0] + h / 2.0, x[1]) - psi(x[0] - h / 2.0, x[1])) / h
                }
            });
            assert!(divergence(&u).max_abs() < 1e-12);
            let (v, p) = project(&u, 1.0, &tight()).unwrap();
            let mut diff = v.clone();
            diff.axpy(-1.0, &u);
            assert!(diff.max_abs() < 1e-10, "{}", diff.max_abs());
            assert!(p.max_abs() < 1e-10);
        }
    }

    #[test]
    fn pure_gradient_is_removed_and_mean_is_zero() {
        for bc in [BcMode::Wall, BcMode::Periodic] {
            let g = make_grid(&[16, 16], &[1.0, 1.0], bc).unwrap();
            let s = ScalarField::from_fn(&g, |x| (2.0 * PI * x[0]).sin() + (PI * x[1]).cos());
            let u = gradient(&s);
            let (v, p) = project(&u, 1.0, &tight()).unwrap();
            assert!(v.max_abs() < 1e-9, "{bc:?}: {}", v.max_abs());
            assert!(p.mean().abs() < 1e-14);
            let mut shifted = s.clone();
            shifted.subtract_mean();
            for &i in g.interior() {
                assert!((shifted.data()[i] - p.data()[i]).abs() < 1e-9);
            }
        }
    }
}
