//! Dense BFGS minimizer with Armijo backtracking.
//!
//! Objectives report failure (out-of-domain points, numeric overflow) by
//! returning None; the line search treats such points as rejected and
//! shrinks the step, so the iterate path stays inside the domain that the
//! caller can evaluate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub trait Objective {
    fn value(&self, x: &[f64]) -> Option<f64>;
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>>;
}

#[derive(Debug, Clone)]
pub struct Options {
    pub max_iter: usize,
    /// Convergence when the gradient max-norm drops below this.
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub min_step: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            max_iter: 500,
            grad_tol: 1e-6,
            armijo_c: 1e-4,
            backtrack: 0.5,
            min_step: 1e-14,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Accepted objective values, starting with the value at x0.
    pub trace: Vec<f64>,
    pub n_evals: usize,
}

fn inf_norm(g: &DVector<f64>) -> f64 {
    g.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Minimizes `obj` from `x0`. The inverse Hessian approximation starts at
/// the identity, is rescaled to (s'y / y'y) I after the first accepted
/// step, and skips updates whose curvature s'y is not safely positive.
pub fn minimize<O: Objective>(obj: &O, x0: &[f64], opts: &Options) -> Result<Outcome> {
    let dim = x0.len();
    if dim == 0 {
        return Err(Error::Dimension("cannot minimize over zero variables".into()));
    }
    let mut n_evals = 0usize;
    let mut eval = |x: &DVector<f64>| -> Option<f64> {
        n_evals += 1;
        obj.value(x.as_slice())
    };

    let mut x = DVector::from_column_slice(x0);
    let mut fx = eval(&x).ok_or_else(|| {
        Error::NonFinite("objective is undefined at the starting point".into())
    })?;
    let mut g = DVector::from_vec(obj.gradient(x.as_slice()).ok_or_else(|| {
        Error::NonFinite("gradient is undefined at the starting point".into())
    })?);
    if g.len() != dim {
        return Err(Error::Dimension("gradient length mismatch".into()));
    }

    let mut h = DMatrix::<f64>::identity(dim, dim);
    let mut trace = vec![fx];
    let mut converged = false;
    let mut iterations = 0;
    let mut first_step = true;

    for iter in 0..opts.max_iter {
        iterations = iter;
        if inf_norm(&g) < opts.grad_tol {
            converged = true;
            break;
        }

        let mut d = -(&h * &g);
        let mut gd = d.dot(&g);
        let mut steepest = false;
        if !(gd < 0.0) || !gd.is_finite() {
            h = DMatrix::identity(dim, dim);
            d = -g.clone();
            gd = d.dot(&g);
            steepest = true;
        }

        // Backtracking Armijo search; rejected or unevaluable points shrink
        // the step.
        let search = |d: &DVector<f64>, gd: f64, eval: &mut dyn FnMut(&DVector<f64>) -> Option<f64>| {
            let mut step = 1.0f64;
            while step >= opts.min_step {
                let xt = &x + d * step;
                if let Some(ft) = eval(&xt) {
                    if ft <= fx + opts.armijo_c * step * gd {
                        return Some((xt, ft));
                    }
                }
                step *= opts.backtrack;
            }
            None
        };

        let mut accepted = search(&d, gd, &mut eval);
        if accepted.is_none() && !steepest {
            // Quasi-Newton direction failed; fall back to steepest descent
            // with a fresh Hessian approximation.
            h = DMatrix::identity(dim, dim);
            d = -g.clone();
            gd = d.dot(&g);
            accepted = search(&d, gd, &mut eval);
        }
        let Some((x_new, f_new)) = accepted else {
            break;
        };

        let Some(g_new) = obj.gradient(x_new.as_slice()) else {
            break;
        };
        let g_new = DVector::from_vec(g_new);
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-10 {
            if first_step {
                let yy = y.dot(&y);
                if yy > 0.0 {
                    h = DMatrix::identity(dim, dim) * (sy / yy);
                }
                first_step = false;
            }
            // Standard BFGS inverse update:
            // H <- (I - rho s y') H (I - rho y s') + rho s s'.
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            let ss = &s * s.transpose();
            let hys = &hy * s.transpose();
            h = &h - (&hys + hys.transpose()) * rho + &ss * (rho * rho * yhy + rho);
        }

        x = x_new;
        fx = f_new;
        g = g_new;
        trace.push(fx);
        iterations = iter + 1;
    }

    if !converged && inf_norm(&g) < opts.grad_tol {
        converged = true;
    }

    Ok(Outcome {
        x: x.as_slice().to_vec(),
        value: fx,
        gradient: g.as_slice().to_vec(),
        iterations,
        converged,
        trace,
        n_evals,
    })
}
