//! Multiple structural breaks in the mean of a series.
//!
//! Segmentations are found by dynamic programming over segment sums of
//! squares, exactly optimal for each break count subject to a minimum
//! segment length, with BIC selecting the break count. Inference uses a
//! Newey–West long-run variance with the Andrews AR(1) plug-in bandwidth
//! and a sup-F statistic whose p-value comes from white-noise simulation
//! of the identical statistic (see [`crate::bootstrap::simulate_supf_null`]),
//! so finite-sample size is exact by construction.

use crate::bootstrap::{empirical_upper_p, simulate_supf_null, SupFConfig};
use crate::error::{Error, Result};
use crate::num::Real;

const DEFAULT_NULL_DRAWS: usize = 800;
const DEFAULT_NULL_SEED: u64 = 1729;

/// Minimum admissible segment length ceil(trim * n).
///
/// The product is computed with a relative slack so that exact integer
/// products (0.05 * 100) do not ceil one step too far.
pub fn min_segment<F: Real>(n: usize, trim: F) -> usize {
    let x = trim.to_f64_lossy() * n as f64;
    let k = (x - 1e-9 * x.max(1.0)).ceil() as usize;
    k.max(1)
}

/// Long-run variance estimate with its truncation lag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HacEstimate<F: Real = f64> {
    pub long_run_variance: F,
    /// Bartlett truncation lag from the Andrews AR(1) plug-in rule.
    pub bandwidth: usize,
}

fn autocovariance<F: Real>(centered: &[F], lag: usize) -> F {
    let n = centered.len();
    let mut total = F::zero();
    for t in lag..n {
        total += centered[t] * centered[t - lag];
    }
    total / F::cst(n as f64)
}

/// Newey–West long-run variance of a series with Bartlett weights and the
/// Andrews AR(1) plug-in bandwidth, capped at n-2 and floored at 0.
pub fn newey_west<F: Real>(series: &[F]) -> Result<HacEstimate<F>> {
    let n = series.len();
    if n < 20 {
        return Err(Error::SeriesTooShort {
            needed: 20,
            actual: n,
        });
    }
    let mean: F = series.iter().copied().sum::<F>() / F::cst(n as f64);
    let centered: Vec<F> = series.iter().map(|&x| x - mean).collect();
    let gamma0 = autocovariance(&centered, 0);
    if !(gamma0 > F::zero()) {
        return Ok(HacEstimate {
            long_run_variance: F::zero(),
            bandwidth: 0,
        });
    }
    let rho = autocovariance(&centered, 1) / gamma0;
    let one = F::one();
    let denom = (one - rho).powi(2) * (one + rho).powi(2);
    let alpha = if denom > F::zero() {
        F::cst(4.0) * rho * rho / denom
    } else {
        F::infinity()
    };
    let l_real = 1.1447 * (alpha.to_f64_lossy() * n as f64).cbrt();
    let bandwidth = if l_real.is_finite() {
        (l_real.ceil().max(0.0) as usize).min(n - 2)
    } else {
        n - 2
    };
    let mut lrv = gamma0;
    for j in 1..=bandwidth {
        let weight = one - F::cst(j as f64) / F::cst((bandwidth + 1) as f64);
        lrv += F::cst(2.0) * weight * autocovariance(&centered, j);
    }
    Ok(HacEstimate {
        long_run_variance: lrv.max(F::zero()),
        bandwidth,
    })
}

/// Result of the Bai–Perron segmentation and selection.
#[derive(Clone, Debug, PartialEq)]
pub struct BreakModel<F: Real = f64> {
    /// 0-based position of the last element of each segment but the final.
    pub break_indices: Vec<usize>,
    /// One mean per segment of the chosen segmentation.
    pub segment_means: Vec<F>,
    /// Optimal SSR for each break count 0..=max_breaks.
    pub ssr_by_m: Vec<F>,
    pub bic_by_m: Vec<F>,
    pub chosen_m: usize,
    pub supf: F,
    pub supf_p: F,
}

impl<F: Real> BreakModel<F> {
    /// Segment id (0-based) for each series position.
    pub fn segment_ids(&self, n: usize) -> Vec<usize> {
        let mut ids = vec![0usize; n];
        let mut seg = 0usize;
        let mut next_break = self.break_indices.first().copied();
        for (i, id) in ids.iter_mut().enumerate() {
            *id = seg;
            if Some(i) == next_break {
                seg += 1;
                next_break = self.break_indices.get(seg).copied();
            }
        }
        ids
    }
}

struct PrefixSums<F> {
    s1: Vec<F>,
    s2: Vec<F>,
}

impl<F: Real> PrefixSums<F> {
    fn new(series: &[F]) -> Self {
        let mut s1 = Vec::with_capacity(series.len() + 1);
        let mut s2 = Vec::with_capacity(series.len() + 1);
        s1.push(F::zero());
        s2.push(F::zero());
        let (mut a, mut b) = (F::zero(), F::zero());
        for &x in series {
            a += x;
            b += x * x;
            s1.push(a);
            s2.push(b);
        }
        Self { s1, s2 }
    }

    /// SSR of the constant-mean fit on the inclusive range [i, j].
    fn cost(&self, i: usize, j: usize) -> F {
        let len = F::cst((j - i + 1) as f64);
        let sum = self.s1[j + 1] - self.s1[i];
        let sq = self.s2[j + 1] - self.s2[i];
        (sq - sum * sum / len).max(F::zero())
    }

    fn mean(&self, i: usize, j: usize) -> F {
        (self.s1[j + 1] - self.s1[i]) / F::cst((j - i + 1) as f64)
    }
}

/// Exact least-squares segmentation into up to `max_breaks` + 1
/// constant-mean segments, with BIC model selection.
///
/// For each m the dynamic program minimizes the total SSR subject to every
/// segment holding at least `min_segment(n, trim)` points. BIC counts
/// 2m + 1 parameters (m + 1 means plus m break positions).
pub fn bai_perron<F: Real>(series: &[F], max_breaks: usize, trim: F) -> Result<BreakModel<F>> {
    let n = series.len();
    let minseg = min_segment(n, trim);
    let needed = (max_breaks + 1) * minseg;
    if n < needed {
        return Err(Error::SeriesTooShort { needed, actual: n });
    }
    let sums = PrefixSums::new(series);
    let inf = F::infinity();

    // dp[m][j]: minimal SSR of splitting [0, j] into m+1 segments.
    let mut dp: Vec<Vec<F>> = Vec::with_capacity(max_breaks + 1);
    let mut arg: Vec<Vec<usize>> = Vec::with_capacity(max_breaks + 1);
    let mut level0 = vec![inf; n];
    for (j, slot) in level0.iter_mut().enumerate() {
        if j + 1 >= minseg {
            *slot = sums.cost(0, j);
        }
    }
    dp.push(level0);
    arg.push(vec![usize::MAX; n]);

    for m in 1..=max_breaks {
        let mut level = vec![inf; n];
        let mut level_arg = vec![usize::MAX; n];
        let t_min = m * minseg - 1;
        for j in ((m + 1) * minseg - 1)..n {
            let mut best = inf;
            let mut best_t = usize::MAX;
            for t in t_min..=(j - minseg) {
                let prev = dp[m - 1][t];
                if prev < inf {
                    let cand = prev + sums.cost(t + 1, j);
                    if cand < best {
                        best = cand;
                        best_t = t;
                    }
                }
            }
            level[j] = best;
            level_arg[j] = best_t;
        }
        dp.push(level);
        arg.push(level_arg);
    }

    let ln_n = F::cst((n as f64).ln());
    let nf = F::cst(n as f64);
    let mut ssr_by_m = Vec::with_capacity(max_breaks + 1);
    let mut bic_by_m = Vec::with_capacity(max_breaks + 1);
    let mut chosen_m = 0usize;
    let mut best_bic = F::infinity();
    for (m, level) in dp.iter().enumerate() {
        let ssr = level[n - 1];
        let bic = nf * (ssr.max(F::cst(1e-300)) / nf).ln() + F::cst((2 * m + 1) as f64) * ln_n;
        if bic < best_bic {
            best_bic = bic;
            chosen_m = m;
        }
        ssr_by_m.push(ssr);
        bic_by_m.push(bic);
    }

    let mut break_indices = Vec::with_capacity(chosen_m);
    let mut j = n - 1;
    for m in (1..=chosen_m).rev() {
        let t = arg[m][j];
        break_indices.push(t);
        j = t;
    }
    break_indices.reverse();

    let mut segment_means = Vec::with_capacity(chosen_m + 1);
    let mut start = 0usize;
    for &b in &break_indices {
        segment_means.push(sums.mean(start, b));
        start = b + 1;
    }
    segment_means.push(sums.mean(start, n - 1));

    let (supf, supf_p) = if n >= 2 * minseg && n >= 40 {
        sup_f(series, trim)?
    } else {
        (F::zero(), F::one())
    };

    Ok(BreakModel {
        break_indices,
        segment_means,
        ssr_by_m,
        bic_by_m,
        chosen_m,
        supf,
        supf_p,
    })
}

/// Sup over admissible split points of the Wald statistic for a one-break
/// mean shift, with a HAC long-run variance in the denominator.
///
/// The variance is estimated once from the residuals of the best-SSR
/// single-break fit, so the statistic is scale-free: rescaling the series
/// rescales numerator and denominator alike.
pub fn sup_f_statistic<F: Real>(series: &[F], trim: F) -> Result<F> {
    let n = series.len();
    let minseg = min_segment(n, trim);
    if n < 2 * minseg || n < 20 {
        return Err(Error::SeriesTooShort {
            needed: (2 * minseg).max(20),
            actual: n,
        });
    }
    let sums = PrefixSums::new(series);
    let variance = sums.cost(0, n - 1) / F::cst(n as f64);
    if !(variance > F::zero()) {
        return Ok(F::zero());
    }

    // Best single-break split by SSR.
    let mut best_k = minseg;
    let mut best_ssr = F::infinity();
    for k in minseg..=(n - minseg) {
        let ssr = sums.cost(0, k - 1) + sums.cost(k, n - 1);
        if ssr < best_ssr {
            best_ssr = ssr;
            best_k = k;
        }
    }
    let m1 = sums.mean(0, best_k - 1);
    let m2 = sums.mean(best_k, n - 1);
    let residuals: Vec<F> = series
        .iter()
        .enumerate()
        .map(|(t, &x)| if t < best_k { x - m1 } else { x - m2 })
        .collect();
    let lrv = newey_west(&residuals)?.long_run_variance;
    let lrv_eff = lrv.max(variance * F::cst(1e-12));

    let mut sup = F::zero();
    for k in minseg..=(n - minseg) {
        let a = sums.mean(0, k - 1);
        let b = sums.mean(k, n - 1);
        let delta = b - a;
        let scale = lrv_eff * (F::one() / F::cst(k as f64) + F::one() / F::cst((n - k) as f64));
        let f = delta * delta / scale;
        if f > sup {
            sup = f;
        }
    }
    Ok(sup)
}

/// Sup-F statistic plus its simulated finite-sample p-value.
pub fn sup_f<F: Real>(series: &[F], trim: F) -> Result<(F, F)> {
    let stat = sup_f_statistic(series, trim)?;
    let null = simulate_supf_null(
        series.len(),
        &SupFConfig { trim },
        DEFAULT_NULL_DRAWS,
        DEFAULT_NULL_SEED,
    )?;
    Ok((stat, empirical_upper_p(&null, stat)))
}
