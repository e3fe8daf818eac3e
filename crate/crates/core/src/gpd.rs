//! Tail analysis: tail-mass ratios, synthetic exceedance sampling from the
//! day-weighted mixture, generalized Pareto fitting with a staged fallback
//! chain, and the threshold-stability sweep.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::optim::{bfgs2, OptimOptions};
use crate::pmf::{DailyPmf, PairedDay, MAX_LEAD};
use crate::seeds::{substream, TAG_PMF_DRAWS};

/// Which estimator stage produced a GPD fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GpdEstimator {
    MleA,
    MleB,
    Pwm,
    Mom,
}

impl std::fmt::Display for GpdEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GpdEstimator::MleA => write!(f, "mle_a"),
            GpdEstimator::MleB => write!(f, "mle_b"),
            GpdEstimator::Pwm => write!(f, "pwm"),
            GpdEstimator::Mom => write!(f, "mom"),
        }
    }
}

/// Fitted generalized Pareto exceedance model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GpdFit<F: Real = f64> {
    pub threshold: F,
    pub xi: F,
    pub beta: F,
    pub n_exceed: usize,
    pub estimator: GpdEstimator,
}

/// Daily tail masses and their GBV/Nights ratio per threshold.
///
/// Matrices are date-major. A ratio whose denominator holds less than
/// 1e-12 of mass is masked (`defined = false`, value NaN), never zeroed.
#[derive(Clone, Debug)]
pub struct TailRatioSeries<F: Real = f64> {
    pub dates: Vec<NaiveDate>,
    pub thresholds: Vec<usize>,
    pub nights_tail: Vec<Vec<F>>,
    pub gbv_tail: Vec<Vec<F>>,
    pub ratio: Vec<Vec<F>>,
    pub defined: Vec<Vec<bool>>,
}

/// Tail-mass ratios for every day and threshold.
pub fn tail_ratio_series<F: Real>(
    days: &[PairedDay<F>],
    thresholds: &[usize],
) -> Result<TailRatioSeries<F>> {
    if days.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut thresholds: Vec<usize> = thresholds.to_vec();
    thresholds.sort_unstable();
    thresholds.dedup();
    if let Some(&bad) = thresholds.iter().find(|&&u| u + 1 > MAX_LEAD) {
        return Err(Error::ThresholdOutOfRange(bad));
    }
    let floor = F::cst(1e-12);
    let mut nights_tail = Vec::with_capacity(days.len());
    let mut gbv_tail = Vec::with_capacity(days.len());
    let mut ratio = Vec::with_capacity(days.len());
    let mut defined = Vec::with_capacity(days.len());
    for day in days {
        let mut nrow = Vec::with_capacity(thresholds.len());
        let mut grow = Vec::with_capacity(thresholds.len());
        let mut rrow = Vec::with_capacity(thresholds.len());
        let mut drow = Vec::with_capacity(thresholds.len());
        for &u in &thresholds {
            let n = day.nights.tail_mass(u)?;
            let g = day.gbv.tail_mass(u)?;
            let ok = n >= floor;
            nrow.push(n);
            grow.push(g);
            rrow.push(if ok { g / n } else { F::nan() });
            drow.push(ok);
        }
        nights_tail.push(nrow);
        gbv_tail.push(grow);
        ratio.push(rrow);
        defined.push(drow);
    }
    Ok(TailRatioSeries {
        dates: days.iter().map(|d| d.date).collect(),
        thresholds,
        nights_tail,
        gbv_tail,
        ratio,
        defined,
    })
}

/// Draws `draws_per_day` lead times from each day's pmf and pools them.
///
/// With `jitter` on, each integer lead gets uniform (-0.5, 0.5) within-bin
/// noise so that the pooled sample is tie-free for continuous fitting.
/// Per-day seed substreams make the output order-independent.
pub fn sample_lead_times<F: Real>(
    pool: &[DailyPmf<F>],
    draws_per_day: usize,
    seed: u64,
    jitter: bool,
) -> Vec<F> {
    use rand::Rng;
    let mut out = Vec::with_capacity(pool.len() * draws_per_day);
    for (day_idx, day) in pool.iter().enumerate() {
        let cdf = day.cdf();
        let mut rng = substream(seed, TAG_PMF_DRAWS, day_idx as u64);
        for _ in 0..draws_per_day {
            let target = F::cst(rng.gen::<f64>());
            let lead = cdf.partition_point(|&c| c < target).min(MAX_LEAD);
            let mut x = F::cst(lead as f64);
            if jitter {
                x += F::cst(rng.gen::<f64>() - 0.5);
            }
            out.push(x);
        }
    }
    out
}

/// Pooled draws exceeding `u`, shifted to exceedances `y = x - u`.
pub fn sample_exceedances<F: Real>(
    pool: &[DailyPmf<F>],
    u: F,
    draws_per_day: usize,
    seed: u64,
    jitter: bool,
) -> Vec<F> {
    sample_lead_times(pool, draws_per_day, seed, jitter)
        .into_iter()
        .filter(|&x| x > u)
        .map(|x| x - u)
        .collect()
}

/// Mean negative log-likelihood of GPD exceedances; infinite outside the
/// feasible region.
fn gpd_mean_nll<F: Real>(exceedances: &[F], xi: F, beta: F) -> F {
    if !(beta > F::zero()) || !xi.is_finite() || !beta.is_finite() {
        return F::infinity();
    }
    let n = F::cst(exceedances.len() as f64);
    if xi.abs() < F::cst(1e-9) {
        let total: F = exceedances.iter().copied().sum();
        return beta.ln() + total / (beta * n);
    }
    let mut acc = F::zero();
    for &y in exceedances {
        let t = F::one() + xi * y / beta;
        if !(t > F::zero()) {
            return F::infinity();
        }
        acc += t.ln();
    }
    beta.ln() + (F::one() + F::one() / xi) * acc / n
}

fn support_ok<F: Real>(max_exceedance: F, xi: F, beta: F) -> bool {
    if !(beta > F::zero()) || !xi.is_finite() || !beta.is_finite() {
        return false;
    }
    xi >= F::zero() || max_exceedance < beta / (-xi)
}

/// Probability-weighted-moment estimates from ascending order statistics,
/// using the 0.35 plotting position. `None` when the moment system is
/// singular.
pub fn gpd_pwm<F: Real>(sorted_ascending: &[F]) -> Option<(F, F)> {
    let n = sorted_ascending.len();
    if n < 2 {
        return None;
    }
    let nf = F::cst(n as f64);
    let mut b0 = F::zero();
    let mut b1 = F::zero();
    for (i, &y) in sorted_ascending.iter().enumerate() {
        b0 += y;
        let p = (F::cst((i + 1) as f64) - F::cst(0.35)) / nf;
        b1 += (F::one() - p) * y;
    }
    b0 /= nf;
    b1 /= nf;
    let denom = b0 - F::cst(2.0) * b1;
    if denom.abs() < F::cst(1e-300) {
        return None;
    }
    let xi = F::cst(2.0) - b0 / denom;
    let beta = F::cst(2.0) * b0 * b1 / denom;
    (beta > F::zero() && xi.is_finite()).then_some((xi, beta))
}

/// Method-of-moments estimates from a mean and variance.
pub fn gpd_mom<F: Real>(mean: F, variance: F) -> Option<(F, F)> {
    if !(variance > F::zero()) || !(mean > F::zero()) {
        return None;
    }
    let xi = (F::one() - mean * mean / variance) / F::cst(2.0);
    let beta = mean * (F::one() - xi);
    (beta > F::zero() && xi.is_finite()).then_some((xi, beta))
}

/// Fits a GPD to exceedances through a staged chain: quasi-Newton MLE,
/// coordinate-descent MLE, PWM, then MOM. A stage counts only if its
/// parameters keep every exceedance inside the model support.
pub fn fit_gpd<F: Real>(exceedances: &[F], u: F) -> Result<GpdFit<F>> {
    let n = exceedances.len();
    if n < 30 {
        return Err(Error::TooFewExceedances {
            needed: 30,
            actual: n,
        });
    }
    if exceedances
        .iter()
        .any(|&y| !(y >= F::zero()) || !y.is_finite())
    {
        return Err(Error::InvalidConfig(
            "exceedances must be finite and nonnegative".into(),
        ));
    }
    let nf = F::cst(n as f64);
    let mean = exceedances.iter().copied().sum::<F>() / nf;
    let var = exceedances
        .iter()
        .map(|&y| (y - mean) * (y - mean))
        .sum::<F>()
        / nf;
    let max_y = exceedances.iter().copied().fold(F::zero(), |a, b| a.max(b));

    let mut sorted = exceedances.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let pwm = gpd_pwm(&sorted);
    let mom = gpd_mom(mean, var);

    let fallback_start = (F::cst(0.1), mean);
    let feasible_or = |cand: Option<(F, F)>| -> (F, F) {
        match cand {
            Some((xi, beta)) if support_ok(max_y, xi, beta) => (xi, beta),
            _ => fallback_start,
        }
    };

    let done = |xi: F, beta: F, estimator: GpdEstimator| GpdFit {
        threshold: u,
        xi,
        beta,
        n_exceed: n,
        estimator,
    };

    // Stage 1: BFGS on (xi, ln beta) with Armijo backtracking.
    let (xi0, beta0) = feasible_or(pwm);
    let obj = |z: [F; 2]| gpd_mean_nll(exceedances, z[0], z[1].exp());
    let opts = OptimOptions {
        max_iters: 200,
        ..OptimOptions::default()
    };
    let out = bfgs2(&obj, [xi0, beta0.ln()], &opts);
    let (xi, beta) = (out.x[0], out.x[1].exp());
    if out.converged && support_ok(max_y, xi, beta) && out.value.is_finite() {
        return Ok(done(xi, beta, GpdEstimator::MleA));
    }

    // Stage 2: data-scaled coordinate descent from the MOM start.
    let (mut xi, mut beta) = feasible_or(mom);
    let mut best = gpd_mean_nll(exceedances, xi, beta);
    if best.is_finite() {
        for &base in &[0.5, 0.2, 0.05, 0.01, 0.002] {
            let beta_step = F::cst(base) * mean.max(F::cst(1e-8));
            let xi_step = F::cst(base * 0.5);
            for _ in 0..200 {
                let mut improved = false;
                for &db in &[-beta_step, beta_step] {
                    let cand = gpd_mean_nll(exceedances, xi, beta + db);
                    if cand < best {
                        beta += db;
                        best = cand;
                        improved = true;
                    }
                }
                for &dx in &[-xi_step, xi_step] {
                    let cand = gpd_mean_nll(exceedances, xi + dx, beta);
                    if cand < best {
                        xi += dx;
                        best = cand;
                        improved = true;
                    }
                }
                if !improved {
                    break;
                }
            }
        }
        if support_ok(max_y, xi, beta) && best.is_finite() {
            return Ok(done(xi, beta, GpdEstimator::MleB));
        }
    }

    // Stage 3: PWM closed form.
    if let Some((xi, beta)) = pwm {
        if support_ok(max_y, xi, beta) {
            return Ok(done(xi, beta, GpdEstimator::Pwm));
        }
    }

    // Stage 4: MOM closed form.
    if let Some((xi, beta)) = mom {
        if support_ok(max_y, xi, beta) {
            return Ok(done(xi, beta, GpdEstimator::Mom));
        }
    }

    Err(Error::AllStagesFailed)
}

/// Shape-by-threshold stability profile over one shared draw pool.
#[derive(Clone, Debug)]
pub struct StabilityProfile<F: Real = f64> {
    pub thresholds: Vec<usize>,
    /// Per-threshold fit; masked where too few exceedances or all stages
    /// failed.
    pub fits: Vec<Option<GpdFit<F>>>,
    pub n_exceed: Vec<usize>,
}

impl<F: Real> StabilityProfile<F> {
    pub fn xi_by_threshold(&self) -> Vec<Option<F>> {
        self.fits.iter().map(|f| f.map(|g| g.xi)).collect()
    }
}

/// Fits the GPD at each threshold on one shared draw set per seed.
pub fn stability_sweep<F: Real>(
    pool: &[DailyPmf<F>],
    thresholds: &[usize],
    draws_per_day: usize,
    seed: u64,
    jitter: bool,
) -> Result<StabilityProfile<F>> {
    if pool.is_empty() {
        return Err(Error::EmptyInput);
    }
    if draws_per_day == 0 {
        return Err(Error::InvalidConfig(
            "draws_per_day must be positive".into(),
        ));
    }
    if thresholds.is_empty() || thresholds.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(
            "thresholds must be nonempty and strictly increasing".into(),
        ));
    }
    let draws = sample_lead_times(pool, draws_per_day, seed, jitter);
    let mut fits = Vec::with_capacity(thresholds.len());
    let mut n_exceed = Vec::with_capacity(thresholds.len());
    for &u in thresholds {
        let uf = F::cst(u as f64);
        let exceedances: Vec<F> = draws.iter().filter(|&&x| x > uf).map(|&x| x - uf).collect();
        n_exceed.push(exceedances.len());
        fits.push(fit_gpd(&exceedances, uf).ok());
    }
    Ok(StabilityProfile {
        thresholds: thresholds.to_vec(),
        fits,
        n_exceed,
    })
}
