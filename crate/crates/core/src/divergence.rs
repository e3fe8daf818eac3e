//! Divergences between discrete distributions on the shared lead-time
//! support: Wasserstein-1, smoothed Kullback–Leibler, and the squared-cdf
//! score used for fit comparison.

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::pmf::{DailyPmf, PairedDay, SUPPORT_LEN};

/// Dated sequence of per-day Wasserstein-1 distances.
#[derive(Clone, Debug, PartialEq)]
pub struct DivergenceSeries<F: Real = f64> {
    dates: Vec<NaiveDate>,
    w1: Vec<F>,
}

impl<F: Real> DivergenceSeries<F> {
    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn w1(&self) -> &[F] {
        &self.w1
    }

    pub fn len(&self) -> usize {
        self.w1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w1.is_empty()
    }
}

/// Wasserstein-1 (earth-mover) distance between two pmfs on the common
/// ordered support: the sum of absolute cdf differences, in days.
pub fn wasserstein1<F: Real>(p: &DailyPmf<F>, q: &DailyPmf<F>) -> F {
    let mut fp = F::zero();
    let mut fq = F::zero();
    let mut total = F::zero();
    for (&mp, &mq) in p.mass().iter().zip(q.mass()) {
        fp += mp;
        fq += mq;
        total += (fp - fq).abs();
    }
    total
}

/// Per-day Wasserstein-1 between the nights and gbv pmfs of each day.
///
/// Dates must be strictly increasing.
pub fn divergence_series<F: Real>(days: &[PairedDay<F>]) -> Result<DivergenceSeries<F>> {
    if days.is_empty() {
        return Err(Error::EmptyInput);
    }
    for (i, pair) in days.windows(2).enumerate() {
        if pair[1].date == pair[0].date {
            return Err(Error::DuplicateDates(i + 1));
        }
        if pair[1].date < pair[0].date {
            return Err(Error::UnsortedDates(i + 1));
        }
    }
    Ok(DivergenceSeries {
        dates: days.iter().map(|d| d.date).collect(),
        w1: days
            .iter()
            .map(|d| wasserstein1(&d.nights, &d.gbv))
            .collect(),
    })
}

fn smoothed<F: Real>(mass: &[F]) -> Vec<F> {
    let eps = F::cst(1e-16);
    let total: F = mass.iter().map(|&m| m + eps).sum();
    mass.iter().map(|&m| (m + eps) / total).collect()
}

/// Kullback–Leibler divergence in nats with additive smoothing.
///
/// Both arguments get the 1e-16 shift and are renormalized before the sum,
/// which keeps the result nonnegative exactly (Gibbs).
pub fn kld<F: Real>(x: &DailyPmf<F>, xhat: &DailyPmf<F>) -> F {
    kld_mass(x.mass(), xhat.mass())
}

pub(crate) fn kld_mass<F: Real>(x: &[F], xhat: &[F]) -> F {
    let xs = smoothed(x);
    let hs = smoothed(xhat);
    let mut total = F::zero();
    for (&a, &b) in xs.iter().zip(&hs) {
        total += a * (a / b).ln();
    }
    total
}

/// Squared-cdf discrepancy between a fitted cdf and an empirical pmf.
///
/// The fitted cdf must be nondecreasing, lie in [0, 1], and end within
/// 1e-6 of 1. Parametric, smoothed, and empirical fits all score through
/// this one path.
pub fn crps<F: Real>(fitted_cdf: &[F], empirical: &DailyPmf<F>) -> Result<F> {
    if fitted_cdf.len() != SUPPORT_LEN {
        return Err(Error::BadLength(fitted_cdf.len()));
    }
    let dip = F::cst(1e-12);
    let mut prev = F::zero();
    for (i, &c) in fitted_cdf.iter().enumerate() {
        if c < prev - dip {
            return Err(Error::NonMonotoneCdf(i));
        }
        if c < -dip || c > F::one() + F::cst(1e-6) {
            return Err(Error::NonMonotoneCdf(i));
        }
        prev = c;
    }
    let last = fitted_cdf[SUPPORT_LEN - 1];
    if (last - F::one()).abs() > F::cst(1e-6) {
        return Err(Error::CdfNotTerminatingAtOne(last.to_f64_lossy()));
    }
    let emp = empirical.cdf();
    let mut total = F::zero();
    for (&f, &e) in fitted_cdf.iter().zip(&emp) {
        let d = f - e;
        total += d * d;
    }
    Ok(total)
}
