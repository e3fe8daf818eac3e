//! Nonparametric pmf smoothing.
//!
//! A cubic B-spline basis on uniform knots carries a second-difference
//! coefficient penalty; the working response is the log of the shares
//! (floored at 1e-8), fitted by penalized least squares. The smoothing
//! parameter minimizes the Gaussian REML score over a log-spaced grid with
//! golden-section refinement, fitted values are exponentiated and
//! normalized back onto the simplex, and a residual-autocorrelation check
//! doubles the basis dimension when it signals unmodeled structure.
//!
//! With uniform (unclamped) knots the penalty null space is exactly the
//! log-linear fits, so the large-lambda limit is the best log-linear pmf.

use rand::seq::SliceRandom;

use crate::divergence;
use crate::error::{Error, Result};
use crate::linalg::{chol_log_det, chol_solve, Mat};
use crate::num::Real;
use crate::pmf::{DailyPmf, SUPPORT_LEN};
use crate::seeds::substream;

const DEGREE: usize = 3;
/// Penalty null-space dimension: constant and linear coefficient vectors.
const NULL_DIM: usize = 2;
const KCHECK_SHUFFLES: usize = 199;
const KCHECK_SEED: u64 = 0x5EED_C4EC;

/// Result of one penalized-spline fit.
#[derive(Clone, Debug)]
pub struct SmoothFit<F: Real = f64> {
    pub fitted_pmf: Vec<F>,
    /// Effective degrees of freedom: trace of the smoother matrix.
    pub edf: F,
    pub k_used: usize,
    pub lambda: F,
    pub k_check_passed: bool,
}

impl<F: Real> SmoothFit<F> {
    pub fn cdf(&self) -> Vec<F> {
        let mut acc = F::zero();
        self.fitted_pmf
            .iter()
            .map(|&m| {
                acc += m;
                acc
            })
            .collect()
    }
}

/// Cubic B-spline basis of dimension `k` on uniform knots spanning the
/// lead support, evaluated at the integer leads. Row l holds the (at most
/// four) nonzero basis values at lead l.
fn bspline_basis<F: Real>(k: usize) -> Mat<F> {
    let h = 365.0 / (k - DEGREE) as f64;
    let knot = |i: isize| F::cst((i as f64 - DEGREE as f64) * h);
    let mut basis = Mat::zeros(SUPPORT_LEN, k);
    for lead in 0..SUPPORT_LEN {
        let xf = lead as f64;
        let x = F::cst(xf);
        // Knot span index: t[s] <= x < t[s+1], clamped to the last span.
        let s = ((xf / h).floor() as usize + DEGREE).min(k - 1);
        let mut n = [F::zero(); DEGREE + 1];
        n[0] = F::one();
        for d in 1..=DEGREE {
            let mut saved = F::zero();
            for r in 0..d {
                let left = x - knot(s as isize + r as isize + 1 - d as isize);
                let right = knot(s as isize + r as isize + 1) - x;
                let tmp = n[r] / (right + left);
                n[r] = saved + right * tmp;
                saved = left * tmp;
            }
            n[d] = saved;
        }
        for (r, &v) in n.iter().enumerate() {
            *basis.at_mut(lead, s - DEGREE + r) = v;
        }
    }
    basis
}

/// Second-difference coefficient penalty S = D2' D2.
fn second_difference_penalty<F: Real>(k: usize) -> Mat<F> {
    let mut s = Mat::zeros(k, k);
    let two = F::cst(2.0);
    for r in 0..(k - 2) {
        let idx = [r, r + 1, r + 2];
        let w = [F::one(), -two, F::one()];
        for i in 0..3 {
            for j in 0..3 {
                *s.at_mut(idx[i], idx[j]) += w[i] * w[j];
            }
        }
    }
    s
}

struct PenalizedFit<F> {
    eta: Vec<F>,
    rss: F,
    penalty: F,
    log_det_a: F,
    edf: F,
}

struct Workspace<F> {
    basis: Mat<F>,
    bt_b: Mat<F>,
    penalty: Mat<F>,
    k: usize,
}

impl<F: Real> Workspace<F> {
    fn new(k: usize) -> Self {
        let basis = bspline_basis::<F>(k);
        let mut bt_b = Mat::zeros(k, k);
        for l in 0..SUPPORT_LEN {
            for i in 0..k {
                let bi = basis.at(l, i);
                if bi == F::zero() {
                    continue;
                }
                for j in 0..k {
                    *bt_b.at_mut(i, j) += bi * basis.at(l, j);
                }
            }
        }
        Self {
            basis,
            bt_b,
            penalty: second_difference_penalty(k),
            k,
        }
    }

    fn bt_y(&self, y: &[F]) -> Vec<F> {
        let mut out = vec![F::zero(); self.k];
        for l in 0..SUPPORT_LEN {
            for j in 0..self.k {
                let b = self.basis.at(l, j);
                if b != F::zero() {
                    out[j] += b * y[l];
                }
            }
        }
        out
    }

    fn fit(&self, y: &[F], bty: &[F], lambda: F) -> Option<PenalizedFit<F>> {
        let k = self.k;
        let mut a = Mat::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                *a.at_mut(i, j) = self.bt_b.at(i, j) + lambda * self.penalty.at(i, j);
            }
        }
        let l = a.cholesky()?;
        let theta = chol_solve(&l, bty);
        let mut eta = vec![F::zero(); SUPPORT_LEN];
        for (row, e) in eta.iter_mut().enumerate() {
            let mut acc = F::zero();
            for j in 0..k {
                let b = self.basis.at(row, j);
                if b != F::zero() {
                    acc += b * theta[j];
                }
            }
            *e = acc;
        }
        let mut rss = F::zero();
        for (f, &obs) in eta.iter().zip(y) {
            let d = obs - *f;
            rss += d * d;
        }
        let mut penalty = F::zero();
        for i in 0..k {
            let mut row = F::zero();
            for j in 0..k {
                row += self.penalty.at(i, j) * theta[j];
            }
            penalty += theta[i] * row;
        }
        // edf = tr(A^{-1} B'B), column by column.
        let mut edf = F::zero();
        let mut col = vec![F::zero(); k];
        for j in 0..k {
            for (i, slot) in col.iter_mut().enumerate() {
                *slot = self.bt_b.at(i, j);
            }
            let x = chol_solve(&l, &col);
            edf += x[j];
        }
        Some(PenalizedFit {
            eta,
            rss,
            penalty,
            log_det_a: chol_log_det(&l),
            edf,
        })
    }

    /// Gaussian REML score, additive constants dropped.
    fn reml_score(&self, fit: &PenalizedFit<F>, lambda: F) -> F {
        let n_eff = F::cst((SUPPORT_LEN - NULL_DIM) as f64);
        let k_pen = F::cst((self.k - NULL_DIM) as f64);
        n_eff * (fit.rss + lambda * fit.penalty).max(F::cst(1e-300)).ln() + fit.log_det_a
            - k_pen * lambda.ln()
    }
}

fn select_lambda<F: Real>(ws: &Workspace<F>, y: &[F], bty: &[F]) -> (F, PenalizedFit<F>) {
    let score_at = |log10_lambda: f64| -> (F, Option<PenalizedFit<F>>) {
        let lambda = F::cst(10f64.powf(log10_lambda));
        match ws.fit(y, bty, lambda) {
            Some(fit) => (ws.reml_score(&fit, lambda), Some(fit)),
            None => (F::infinity(), None),
        }
    };

    // 61-point log grid over [1e-6, 1e6].
    let mut best_idx = 0usize;
    let mut best_score = F::infinity();
    for i in 0..61 {
        let lg = -6.0 + 0.2 * i as f64;
        let (score, fit) = score_at(lg);
        if fit.is_some() && score < best_score {
            best_score = score;
            best_idx = i;
        }
    }
    // Golden-section refinement around the grid minimum.
    let mut lo = -6.0 + 0.2 * best_idx.saturating_sub(1) as f64;
    let mut hi = (-6.0 + 0.2 * (best_idx + 1) as f64).min(6.0);
    let phi = 0.5 * (3.0 - 5f64.sqrt());
    let mut x1 = lo + phi * (hi - lo);
    let mut x2 = hi - phi * (hi - lo);
    let mut f1 = score_at(x1).0;
    let mut f2 = score_at(x2).0;
    for _ in 0..40 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = lo + phi * (hi - lo);
            f1 = score_at(x1).0;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = hi - phi * (hi - lo);
            f2 = score_at(x2).0;
        }
    }
    let lg_best = if f1 < f2 { x1 } else { x2 };
    let candidates = [lg_best, -6.0 + 0.2 * best_idx as f64];
    let mut chosen = candidates[0];
    let mut chosen_score = score_at(candidates[0]).0;
    let alt_score = score_at(candidates[1]).0;
    if alt_score < chosen_score {
        chosen = candidates[1];
        chosen_score = alt_score;
    }
    let _ = chosen_score;
    let lambda = F::cst(10f64.powf(chosen));
    let fit = ws
        .fit(y, bty, lambda)
        .expect("selected lambda must be solvable");
    (lambda, fit)
}

/// Lag-1 autocorrelation of a (demeaned) residual vector.
fn lag1_autocorr<F: Real>(r: &[F]) -> F {
    let n = F::cst(r.len() as f64);
    let mean = r.iter().copied().sum::<F>() / n;
    let mut num = F::zero();
    let mut den = F::zero();
    for i in 0..r.len() {
        let a = r[i] - mean;
        den += a * a;
        if i + 1 < r.len() {
            num += a * (r[i + 1] - mean);
        }
    }
    if den > F::zero() {
        num / den
    } else {
        F::zero()
    }
}

/// Residual-structure check: lag-1 autocorrelation with a permutation
/// p-value from 199 seeded shuffles. Returns (passed, rho, p).
fn basis_adequacy_check<F: Real>(residuals: &[F]) -> (bool, F, F) {
    let rho = lag1_autocorr(residuals);
    let mut rng = substream(KCHECK_SEED, 0xC0, 0);
    let mut perm: Vec<F> = residuals.to_vec();
    let mut at_least = 0usize;
    for _ in 0..KCHECK_SHUFFLES {
        perm.shuffle(&mut rng);
        if lag1_autocorr(&perm) >= rho {
            at_least += 1;
        }
    }
    let p = F::cst((1 + at_least) as f64 / (KCHECK_SHUFFLES + 1) as f64);
    let failed = rho > F::cst(0.2) && p < F::cst(0.05);
    (!failed, rho, p)
}

/// Penalized-spline smooth of a daily pmf with REML smoothing selection
/// and basis-dimension escalation.
pub fn smooth_pmf<F: Real>(x: &DailyPmf<F>, k_init: usize, k_max: usize) -> Result<SmoothFit<F>> {
    if k_init < 4 {
        return Err(Error::BasisTooSmall(k_init));
    }
    if k_init > k_max || k_max > SUPPORT_LEN {
        return Err(Error::InvalidConfig(format!(
            "basis bounds must satisfy 4 <= k_init <= k_max <= {SUPPORT_LEN}, got {k_init}..{k_max}"
        )));
    }
    // Shares are floored at 1e-8 before the log so exactly log-linear
    // targets stay inside the penalty null space.
    let delta = F::cst(1e-8);
    let y: Vec<F> = x.mass().iter().map(|&m| m.max(delta).ln()).collect();

    let mut k = k_init;
    loop {
        let ws = Workspace::new(k);
        let bty = ws.bt_y(&y);
        let (lambda, fit) = select_lambda(&ws, &y, &bty);
        let residuals: Vec<F> = y.iter().zip(&fit.eta).map(|(&obs, &f)| obs - f).collect();
        let (passed, ..) = basis_adequacy_check(&residuals);
        if !passed && k < k_max {
            k = (2 * k).min(k_max);
            continue;
        }
        let mut fitted: Vec<F> = fit.eta.iter().map(|&e| e.exp()).collect();
        let total: F = fitted.iter().copied().sum();
        for v in fitted.iter_mut() {
            *v /= total;
        }
        return Ok(SmoothFit {
            fitted_pmf: fitted,
            edf: fit.edf,
            k_used: k,
            lambda,
            k_check_passed: passed,
        });
    }
}

/// In-sample scores of a smooth fit against the day it was fitted to.
pub fn score_smoother<F: Real>(fit: &SmoothFit<F>, x: &DailyPmf<F>) -> Result<(F, F)> {
    let crps = divergence::crps(&fit.cdf(), x)?;
    let kld = divergence::kld_mass(x.mass(), &fit.fitted_pmf);
    Ok((crps, kld))
}
