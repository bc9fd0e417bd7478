//! Non-adaptive LASSO baseline.
//!
//! Solves `min 0.5 * |y - A x|^2 + lambda * |x|_1` with monotone FISTA and
//! backtracking, and picks the regulariser from a grid by the true MSE.

use nalgebra::DVector;

use crate::sensing::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct LassoProblem {
    pub a: Matrix,
    pub y: DVector<f64>,
    pub lambda: f64,
}

impl LassoProblem {
    pub fn new(a: Matrix, y: DVector<f64>, lambda: f64) -> Result<Self> {
        if a.nrows() != y.len() {
            return Err(Error::input(format!(
                "matrix has {} rows but the observation has {} entries",
                a.nrows(),
                y.len()
            )));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::input(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self { a, y, lambda })
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        let r = &self.a * x - &self.y;
        0.5 * r.norm_squared() + self.lambda * x.lp_norm(1)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.a.tr_mul(&(&self.a * x - &self.y))
    }

    /// Largest violation of the optimality conditions at `x`.
    pub fn kkt_residual(&self, x: &DVector<f64>) -> f64 {
        kkt_from_gradient(x, &self.gradient(x), self.lambda)
    }

    /// Smallest `lambda` for which `x = 0` is optimal, `|A^T y|_inf`.
    pub fn lambda_max(&self) -> f64 {
        self.a.tr_mul(&self.y).amax()
    }
}

#[derive(Debug, Clone)]
pub struct LassoSolution {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    /// Lipschitz estimate at exit; the step size is its reciprocal.
    pub lipschitz: f64,
    /// Objective after each iteration, starting with the initial point.
    pub objective_history: Vec<f64>,
}

fn kkt_from_gradient(x: &DVector<f64>, g: &DVector<f64>, lambda: f64) -> f64 {
    x.iter()
        .zip(g.iter())
        .map(|(&xi, &gi)| {
            if xi == 0.0 {
                (gi.abs() - lambda).max(0.0)
            } else {
                (gi + lambda * xi.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn prox(v: &DVector<f64>, t: f64) -> DVector<f64> {
    v.map(|e| soft_threshold(e, t))
}

/// Largest eigenvalue of `A^T A` by 50 steps of power iteration.
fn lipschitz_estimate(a: &Matrix) -> f64 {
    let n = a.ncols();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut est = 0.0;
    for _ in 0..50 {
        let w = a.tr_mul(&(a * &v));
        est = w.norm();
        if est == 0.0 {
            return 1.0;
        }
        v = w / est;
    }
    est
}

pub fn lasso_solve(p: &LassoProblem, tol: f64, max_iter: usize) -> Result<LassoSolution> {
    lasso_solve_from(p, &DVector::zeros(p.a.ncols()), tol, max_iter)
}

/// Monotone FISTA from a warm start.
pub fn lasso_solve_from(
    p: &LassoProblem,
    x0: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<LassoSolution> {
    if !(tol > 0.0) {
        return Err(Error::input(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if x0.len() != p.a.ncols() {
        return Err(Error::input("warm start has the wrong length"));
    }
    let l1 = |x: &DVector<f64>| p.lambda * x.lp_norm(1);
    // residuals are cached so each iteration costs three or four products
    let residual = |x: &DVector<f64>| &p.a * x - &p.y;

    let mut lipschitz = lipschitz_estimate(&p.a).max(f64::MIN_POSITIVE);
    let mut x = x0.clone();
    let mut r_x = residual(&x);
    let mut f_x = 0.5 * r_x.norm_squared() + l1(&x);
    let mut g_x = p.a.tr_mul(&r_x);
    let mut kkt = kkt_from_gradient(&x, &g_x, p.lambda);
    let mut w = x.clone();
    let mut t = 1.0f64;
    let mut history = vec![f_x];
    let mut iterations = 0;

    while kkt > tol && iterations < max_iter {
        iterations += 1;
        let r_w = residual(&w);
        let f_w = 0.5 * r_w.norm_squared();
        let g = p.a.tr_mul(&r_w);
        let (z, r_z) = loop {
            let candidate = prox(&(&w - &g / lipschitz), p.lambda / lipschitz);
            let r_c = residual(&candidate);
            let d = &candidate - &w;
            let model = f_w + g.dot(&d) + 0.5 * lipschitz * d.norm_squared();
            if 0.5 * r_c.norm_squared() <= model * (1.0 + 1e-14) + 1e-300 {
                break (candidate, r_c);
            }
            lipschitz *= 2.0;
        };
        let f_z = 0.5 * r_z.norm_squared() + l1(&z);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let x_prev = x.clone();
        if f_z <= f_x {
            x = z.clone();
            f_x = f_z;
            r_x = r_z;
            g_x = p.a.tr_mul(&r_x);
            kkt = kkt_from_gradient(&x, &g_x, p.lambda);
        }
        w = &x + (&z - &x) * (t / t_next) + (&x - &x_prev) * ((t - 1.0) / t_next);
        t = t_next;
        history.push(f_x);
    }

    Ok(LassoSolution {
        x,
        iterations,
        converged: kkt <= tol,
        kkt_residual: kkt,
        lipschitz,
        objective_history: history,
    })
}

/// Regulariser grid `10^-4 .. 10^0` with 17 log-spaced points.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..17)
        .map(|i| 10f64.powf(-4.0 + 0.25 * i as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleChoice {
    pub lambda: f64,
    pub mse: f64,
    /// Whether every grid solve met the tolerance.
    pub all_converged: bool,
}

/// Solve on every grid point (largest first, warm-started) and keep the
/// `lambda` with the lowest MSE against `x_true`. Ties go to the larger
/// `lambda`.
pub fn lasso_oracle_lambda(
    a: &Matrix,
    y: &DVector<f64>,
    x_true: &[f64],
    grid: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<OracleChoice> {
    if grid.is_empty() {
        return Err(Error::input("lambda grid is empty"));
    }
    if x_true.len() != a.ncols() {
        return Err(Error::input("reference signal has the wrong length"));
    }
    let mut order: Vec<f64> = grid.to_vec();
    order.sort_by(|a, b| b.total_cmp(a));

    let mut warm = DVector::zeros(a.ncols());
    let mut best: Option<OracleChoice> = None;
    let mut all_converged = true;
    for lambda in order {
        let p = LassoProblem::new(a.clone(), y.clone(), lambda)?;
        let sol = lasso_solve_from(&p, &warm, tol, max_iter)?;
        all_converged &= sol.converged;
        let mse = sol
            .x
            .iter()
            .zip(x_true)
            .map(|(e, t)| (e - t) * (e - t))
            .sum::<f64>()
            / x_true.len() as f64;
        if best.is_none_or(|b| mse < b.mse) {
            best = Some(OracleChoice {
                lambda,
                mse,
                all_converged: true,
            });
        }
        warm = sol.x;
    }
    let mut best = best.expect("grid is non-empty");
    best.all_converged = all_converged;
    Ok(best)
}
