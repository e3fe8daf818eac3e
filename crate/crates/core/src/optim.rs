//! Two-parameter quasi-Newton minimizer used by the family and tail
//! fitters. Gradients come from central differences in the transformed
//! coordinates; the line search is Armijo backtracking, so the objective
//! trace over accepted steps is nonincreasing.

use crate::num::Real;

pub(crate) struct OptimOptions<F> {
    pub grad_step: F,
    pub grad_tol: F,
    pub obj_rel_tol: F,
    pub max_iters: usize,
}

impl<F: Real> Default for OptimOptions<F> {
    fn default() -> Self {
        Self {
            grad_step: F::cst(1e-6),
            grad_tol: F::cst(1e-7),
            obj_rel_tol: F::cst(1e-10),
            max_iters: 500,
        }
    }
}

pub(crate) struct OptimOutcome<F> {
    pub x: [F; 2],
    pub value: F,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at each accepted iterate, starting point included.
    /// Read by the invariant tests only.
    #[allow(dead_code)]
    pub trace: Vec<F>,
}

pub(crate) fn gradient2<F: Real>(f: &dyn Fn([F; 2]) -> F, x: [F; 2], h: F) -> [F; 2] {
    let mut g = [F::zero(); 2];
    for i in 0..2 {
        let mut hi = x;
        let mut lo = x;
        hi[i] += h;
        lo[i] -= h;
        g[i] = (f(hi) - f(lo)) / (F::cst(2.0) * h);
    }
    g
}

/// BFGS with an explicit 2x2 inverse-Hessian approximation.
///
/// The objective may return infinity outside its feasible region; the
/// backtracking line search then shrinks back inside. Starts must be
/// feasible.
pub(crate) fn bfgs2<F: Real>(
    f: &dyn Fn([F; 2]) -> F,
    x0: [F; 2],
    opts: &OptimOptions<F>,
) -> OptimOutcome<F> {
    let mut x = x0;
    let mut fx = f(x);
    let mut trace = vec![fx];
    // Inverse-Hessian approximation, row-major.
    let mut h = [[F::one(), F::zero()], [F::zero(), F::one()]];
    let mut g = gradient2(f, x, opts.grad_step);
    let c1 = F::cst(1e-4);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..opts.max_iters {
        iterations = iter + 1;
        if !(g[0].is_finite() && g[1].is_finite() && fx.is_finite()) {
            break;
        }
        if g[0].abs().max(g[1].abs()) < opts.grad_tol {
            converged = true;
            break;
        }
        let mut p = [
            -(h[0][0] * g[0] + h[0][1] * g[1]),
            -(h[1][0] * g[0] + h[1][1] * g[1]),
        ];
        let mut slope = p[0] * g[0] + p[1] * g[1];
        if !(slope < F::zero()) {
            // Not a descent direction; reset to steepest descent.
            h = [[F::one(), F::zero()], [F::zero(), F::one()]];
            p = [-g[0], -g[1]];
            slope = -(g[0] * g[0] + g[1] * g[1]);
        }

        let mut t = F::one();
        let mut accepted = None;
        for _ in 0..40 {
            let cand = [x[0] + t * p[0], x[1] + t * p[1]];
            let fc = f(cand);
            if fc.is_finite() && fc <= fx + c1 * t * slope {
                accepted = Some((cand, fc));
                break;
            }
            t *= F::cst(0.5);
        }
        let Some((xn, fn_)) = accepted else {
            // Line search exhausted; treat the current point as final.
            converged = g[0].abs().max(g[1].abs()) < opts.grad_tol * F::cst(10.0);
            break;
        };

        let gn = gradient2(f, xn, opts.grad_step);
        let s = [xn[0] - x[0], xn[1] - x[1]];
        let y = [gn[0] - g[0], gn[1] - g[1]];
        let sy = s[0] * y[0] + s[1] * y[1];
        let s_norm = (s[0] * s[0] + s[1] * s[1]).sqrt();
        let y_norm = (y[0] * y[0] + y[1] * y[1]).sqrt();
        if sy > F::cst(1e-12) * s_norm * y_norm && sy > F::zero() {
            // Standard BFGS inverse update.
            let rho = F::one() / sy;
            let hy = [
                h[0][0] * y[0] + h[0][1] * y[1],
                h[1][0] * y[0] + h[1][1] * y[1],
            ];
            let yhy = y[0] * hy[0] + y[1] * hy[1];
            let coef = (F::one() + rho * yhy) * rho;
            let mut hn = [[F::zero(); 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    hn[i][j] = h[i][j] + coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
            h = hn;
        } else {
            h = [[F::one(), F::zero()], [F::zero(), F::one()]];
        }

        let rel = (fx - fn_).abs() / fx.abs().max(F::one());
        x = xn;
        fx = fn_;
        g = gn;
        trace.push(fx);
        if rel < opts.obj_rel_tol {
            converged = true;
            break;
        }
    }

    OptimOutcome {
        x,
        value: fx,
        iterations,
        converged,
        trace,
    }
}
