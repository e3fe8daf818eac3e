//! Compositional lead-time vectors: validation, cumulative transforms,
//! tail-mass queries, and day-weighted pooling.
//!
//! A daily pmf allocates one day's bookings across integer lead times
//! 0..=365. Entries are nonnegative and sum to one; vectors whose sum is
//! off by at most the renormalization band are rescaled on construction,
//! anything worse is rejected.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Number of lead-time bins (0 through 365 inclusive).
pub const SUPPORT_LEN: usize = 366;

/// Largest observable lead time in days.
pub const MAX_LEAD: usize = 365;

/// Which booking measure a pmf describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Nights,
    Gbv,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Nights => write!(f, "nights"),
            Metric::Gbv => write!(f, "gbv"),
        }
    }
}

/// One day's compositional vector over lead times for one metric.
///
/// Immutable after construction; all invariants are enforced by
/// [`DailyPmf::new`].
#[derive(Clone, Debug, PartialEq)]
pub struct DailyPmf<F: Real = f64> {
    date: NaiveDate,
    metric: Metric,
    mass: Vec<F>,
    renormalized: bool,
}

impl<F: Real> DailyPmf<F> {
    /// Validates a raw mass vector and wraps it.
    ///
    /// Entries in `(-neg_tol, 0)` are treated as roundoff and clamped to
    /// zero. A sum within the renormalization band of 1 is rescaled and
    /// flagged; a sum farther out is rejected.
    pub fn new(date: NaiveDate, metric: Metric, raw: Vec<F>) -> Result<Self> {
        if raw.len() != SUPPORT_LEN {
            return Err(Error::BadLength(raw.len()));
        }
        let mut mass = raw;
        for (lead, v) in mass.iter_mut().enumerate() {
            if *v < -F::neg_tol() {
                return Err(Error::NegativeMass {
                    lead,
                    value: v.to_f64_lossy(),
                });
            }
            if *v < F::zero() {
                *v = F::zero();
            }
        }
        let sum: F = mass.iter().copied().sum();
        let dev = (sum - F::one()).abs();
        if dev > F::renorm_band() {
            return Err(Error::SumOutOfTolerance(sum.to_f64_lossy()));
        }
        let renormalized = dev > F::sum_tol();
        if renormalized {
            for v in mass.iter_mut() {
                *v /= sum;
            }
        }
        Ok(Self {
            date,
            metric,
            mass,
            renormalized,
        })
    }

    /// A pmf with all mass on one lead.
    pub fn point_mass(date: NaiveDate, metric: Metric, lead: usize) -> Result<Self> {
        if lead > MAX_LEAD {
            return Err(Error::ThresholdOutOfRange(lead));
        }
        let mut mass = vec![F::zero(); SUPPORT_LEN];
        mass[lead] = F::one();
        Self::new(date, metric, mass)
    }

    /// The uniform pmf over the full support.
    pub fn uniform(date: NaiveDate, metric: Metric) -> Self {
        let w = F::one() / F::cst(SUPPORT_LEN as f64);
        Self::new(date, metric, vec![w; SUPPORT_LEN]).expect("uniform is on the simplex")
    }

    pub fn date(&self) -> NaiveDate {
        self.date
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn mass(&self) -> &[F] {
        &self.mass
    }

    /// True when construction had to rescale the input onto the simplex.
    pub fn was_renormalized(&self) -> bool {
        self.renormalized
    }

    /// Cumulative distribution over leads; nondecreasing, ends at 1.
    pub fn cdf(&self) -> Vec<F> {
        let mut acc = F::zero();
        self.mass
            .iter()
            .map(|&m| {
                acc += m;
                acc
            })
            .collect()
    }

    /// Probability mass strictly beyond lead `u`.
    pub fn tail_mass(&self, u: usize) -> Result<F> {
        if u > MAX_LEAD {
            return Err(Error::ThresholdOutOfRange(u));
        }
        Ok(self.mass[u + 1..].iter().copied().sum())
    }

    /// Discrete mean and variance of the lead distribution.
    pub fn moments(&self) -> (F, F) {
        let mut mean = F::zero();
        let mut second = F::zero();
        for (lead, &m) in self.mass.iter().enumerate() {
            let x = F::cst(lead as f64);
            mean += x * m;
            second += x * x * m;
        }
        (mean, second - mean * mean)
    }
}

/// A calendar day's (volume, revenue) pmf pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedDay<F: Real = f64> {
    pub date: NaiveDate,
    pub nights: DailyPmf<F>,
    pub gbv: DailyPmf<F>,
}

impl<F: Real> PairedDay<F> {
    pub fn new(nights: DailyPmf<F>, gbv: DailyPmf<F>) -> Result<Self> {
        if nights.date() != gbv.date() {
            return Err(Error::InvalidConfig(format!(
                "paired pmfs carry different dates: {} vs {}",
                nights.date(),
                gbv.date()
            )));
        }
        if nights.metric() != Metric::Nights || gbv.metric() != Metric::Gbv {
            return Err(Error::MixedMetrics);
        }
        Ok(Self {
            date: nights.date(),
            nights,
            gbv,
        })
    }
}

/// Day-weighted mixture of daily pmfs: the entrywise mean.
#[derive(Clone, Debug, PartialEq)]
pub struct PooledPmf<F: Real = f64> {
    mass: Vec<F>,
    day_count: usize,
}

impl<F: Real> PooledPmf<F> {
    pub fn mass(&self) -> &[F] {
        &self.mass
    }

    pub fn day_count(&self) -> usize {
        self.day_count
    }
}

/// Pools days into their entrywise arithmetic mean.
///
/// All inputs must share one metric; each day weighs the same regardless
/// of its (unobserved) booking volume.
pub fn pool_days<F: Real>(days: &[DailyPmf<F>]) -> Result<PooledPmf<F>> {
    let first = days.first().ok_or(Error::EmptyInput)?;
    let metric = first.metric();
    if days.iter().any(|d| d.metric() != metric) {
        return Err(Error::MixedMetrics);
    }
    let inv = F::one() / F::cst(days.len() as f64);
    let mut mass = vec![F::zero(); SUPPORT_LEN];
    for day in days {
        for (acc, &m) in mass.iter_mut().zip(day.mass()) {
            *acc += m;
        }
    }
    for v in mass.iter_mut() {
        *v *= inv;
    }
    Ok(PooledPmf {
        mass,
        day_count: days.len(),
    })
}
