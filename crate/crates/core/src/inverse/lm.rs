//! Small dense Levenberg-Marquardt loop over three unconstrained variables.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

#[derive(Debug, Clone, Copy)]
pub(crate) struct LmOptions {
    pub max_iterations: usize,
    pub step_tolerance: f64,
    pub residual_tolerance: f64,
    pub gradient_tolerance: f64,
    pub damping_initial: f64,
    pub damping_growth: f64,
    pub damping_shrink: f64,
    pub fd_relative_step: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct LmOutcome {
    pub u: Vector3<f64>,
    pub residuals: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

const DAMPING_CEILING: f64 = 1e16;

/// Central-difference Jacobian, one column per variable.
pub(crate) fn jacobian<F>(f: &F, u: &Vector3<f64>, m: usize, rel_step: f64) -> DMatrix<f64>
where
    F: Fn(&Vector3<f64>) -> DVector<f64>,
{
    let mut jac = DMatrix::zeros(m, 3);
    for j in 0..3 {
        let h = rel_step * u[j].abs().max(1.0);
        let mut up = *u;
        let mut down = *u;
        up[j] += h;
        down[j] -= h;
        let span = up[j] - down[j];
        let col = (f(&up) - f(&down)) / span;
        jac.set_column(j, &col);
    }
    jac
}

pub(crate) fn minimize<F>(f: F, u0: Vector3<f64>, opts: &LmOptions) -> LmOutcome
where
    F: Fn(&Vector3<f64>) -> DVector<f64>,
{
    let mut u = u0;
    let mut r = f(&u);
    let m = r.len();
    let mut cost = 0.5 * r.norm_squared();
    let mut lambda = opts.damping_initial;

    for iter in 0..opts.max_iterations {
        if r.norm() <= opts.residual_tolerance {
            return LmOutcome { u, residuals: r, iterations: iter, converged: true };
        }
        let jac = jacobian(&f, &u, m, opts.fd_relative_step);
        let grad: Vector3<f64> = (jac.transpose() * &r).fixed_rows::<3>(0).into();
        if grad.amax() <= opts.gradient_tolerance {
            return LmOutcome { u, residuals: r, iterations: iter, converged: true };
        }
        let jtj_dyn = jac.transpose() * &jac;
        let jtj = Matrix3::from_fn(|i, j| jtj_dyn[(i, j)]);
        let diag_floor = 1e-12 * jtj.diagonal().max().max(f64::MIN_POSITIVE);

        loop {
            let mut lhs = jtj;
            for i in 0..3 {
                lhs[(i, i)] += lambda * jtj[(i, i)].max(diag_floor);
            }
            let step = lhs.cholesky().map(|ch| ch.solve(&(-grad)));
            if let Some(step) = step.filter(|s| s.iter().all(|v| v.is_finite())) {
                let u_new = u + step;
                let r_new = f(&u_new);
                let cost_new = 0.5 * r_new.norm_squared();
                if cost_new < cost {
                    let small_step = step.norm() <= opts.step_tolerance * (u.norm() + opts.step_tolerance);
                    u = u_new;
                    r = r_new;
                    cost = cost_new;
                    lambda = (lambda * opts.damping_shrink).max(1e-15);
                    if small_step {
                        return LmOutcome { u, residuals: r, iterations: iter + 1, converged: true };
                    }
                    break;
                }
            }
            lambda *= opts.damping_growth;
            if lambda > DAMPING_CEILING {
                // no direction reduces the cost at working precision
                return LmOutcome { u, residuals: r, iterations: iter + 1, converged: true };
            }
        }
    }
    let converged = r.norm() <= opts.residual_tolerance;
    LmOutcome { u, residuals: r, iterations: opts.max_iterations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> LmOptions {
        LmOptions {
            max_iterations: 500,
            step_tolerance: 1e-14,
            residual_tolerance: 1e-12,
            gradient_tolerance: 1e-16,
            damping_initial: 1e-3,
            damping_growth: 10.0,
            damping_shrink: 0.3,
            fd_relative_step: 1e-6,
        }
    }

    // Rosenbrock as a residual pair plus a third decoupled variable.
    #[test]
    fn solves_rosenbrock() {
        let f = |u: &Vector3<f64>| DVector::from_vec(vec![10.0 * (u[1] - u[0] * u[0]), 1.0 - u[0], u[2] - 3.0]);
        let out = minimize(f, Vector3::new(-1.2, 1.0, 0.0), &opts());
        assert!(out.converged);
        assert!((out.u - Vector3::new(1.0, 1.0, 3.0)).norm() < 1e-8, "{:?}", out.u);
    }

    #[test]
    fn fits_exponential_decay() {
        let ts: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 2.0 * (-0.7 * t).exp() + 0.5).collect();
        let f = |u: &Vector3<f64>| {
            DVector::from_iterator(ts.len(), ts.iter().zip(&ys).map(|(t, y)| u[0] * (-u[1] * t).exp() + u[2] - y))
        };
        let out = minimize(f, Vector3::new(1.0, 0.1, 0.0), &opts());
        assert!(out.converged);
        assert!((out.u - Vector3::new(2.0, 0.7, 0.5)).norm() < 1e-8);
    }

    #[test]
    fn fd_jacobian_matches_analytic() {
        let f = |u: &Vector3<f64>| DVector::from_vec(vec![u[0] * u[1], u[2].sin(), u[0].exp()]);
        let u = Vector3::new(0.3, -1.2, 0.8);
        let jac = jacobian(&f, &u, 3, 1e-6);
        let exact = DMatrix::from_row_slice(3, 3, &[u[1], u[0], 0.0, 0.0, 0.0, u[2].cos(), u[0].exp(), 0.0, 0.0]);
        assert!((jac - exact).amax() < 1e-8);
    }
}
