//! Parametric fits to daily pmfs.
//!
//! Each candidate family (Gamma, Weibull, Lognormal) is mapped onto the
//! discrete support by interval censoring: an integer lead `l` owns the
//! continuous mass of `[l - 0.5, l + 0.5)`, and the whole distribution is
//! renormalized to the observable window `[0, 365.5]`. Fitting minimizes
//! the cross-entropy between the observed shares and the induced bin
//! probabilities; with two parameters everywhere, the family with the
//! lowest cross-entropy wins the day.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::optim::{bfgs2, OptimOptions};
use crate::pmf::{DailyPmf, Metric, SUPPORT_LEN};
use crate::special::{normal_cdf, normal_sf, reg_lower_gamma, reg_upper_gamma};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gamma,
    Weibull,
    Lognormal,
}

/// Fixed comparison order; earlier families win exact ties.
pub const FAMILIES: [Family; 3] = [Family::Gamma, Family::Weibull, Family::Lognormal];

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::Gamma => write!(f, "gamma"),
            Family::Weibull => write!(f, "weibull"),
            Family::Lognormal => write!(f, "lognormal"),
        }
    }
}

/// Two-parameter family instance.
///
/// `(a, b)` is (shape, rate) for Gamma, (shape, scale) for Weibull and
/// (mu, sigma) for Lognormal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams<F: Real = f64> {
    pub family: Family,
    pub a: F,
    pub b: F,
}

impl<F: Real> FamilyParams<F> {
    pub fn new(family: Family, a: F, b: F) -> Result<Self> {
        let ok = match family {
            Family::Gamma | Family::Weibull => {
                a.is_finite() && b.is_finite() && a > F::zero() && b > F::zero()
            }
            Family::Lognormal => a.is_finite() && b.is_finite() && b > F::zero(),
        };
        if !ok {
            return Err(Error::InvalidParams {
                family,
                a: a.to_f64_lossy(),
                b: b.to_f64_lossy(),
            });
        }
        Ok(Self { family, a, b })
    }

    /// Untruncated cdf at `x >= 0`.
    fn cdf(&self, x: F) -> F {
        if x <= F::zero() {
            return F::zero();
        }
        match self.family {
            Family::Gamma => reg_lower_gamma(self.a, self.b * x),
            Family::Weibull => -((-(x / self.b).powf(self.a)).exp_m1()),
            Family::Lognormal => normal_cdf((x.ln() - self.a) / self.b),
        }
    }

    /// Untruncated survival function, accurate in the far tail.
    fn sf(&self, x: F) -> F {
        if x <= F::zero() {
            return F::one();
        }
        match self.family {
            Family::Gamma => reg_upper_gamma(self.a, self.b * x),
            Family::Weibull => (-(x / self.b).powf(self.a)).exp(),
            Family::Lognormal => normal_sf((x.ln() - self.a) / self.b),
        }
    }

    /// Mass of `(lo, hi]`, switching to survival differences past the
    /// median so far-tail bins do not cancel.
    fn interval_mass(&self, lo: F, hi: F) -> F {
        let f_lo = self.cdf(lo);
        let m = if f_lo < F::cst(0.5) {
            self.cdf(hi) - f_lo
        } else {
            self.sf(lo) - self.sf(hi)
        };
        m.max(F::zero())
    }

    /// Mean of the untruncated distribution.
    pub fn mean(&self) -> F {
        match self.family {
            Family::Gamma => self.a / self.b,
            Family::Weibull => self.b * ((F::one() + F::one() / self.a).ln_gamma()).exp(),
            Family::Lognormal => (self.a + self.b * self.b / F::cst(2.0)).exp(),
        }
    }

    /// Same family with the untruncated mean multiplied by `mult`,
    /// holding the shape fixed.
    pub fn with_mean_multiplier(&self, mult: F) -> Result<Self> {
        match self.family {
            Family::Gamma => Self::new(self.family, self.a, self.b / mult),
            Family::Weibull => Self::new(self.family, self.a, self.b * mult),
            Family::Lognormal => Self::new(self.family, self.a + mult.ln(), self.b),
        }
    }
}

/// Discrete pmf induced on the lead support by interval censoring and
/// truncation at the support bound.
pub fn induced_pmf<F: Real>(params: &FamilyParams<F>) -> Result<Vec<F>> {
    let half = F::cst(0.5);
    let norm = F::one() - params.sf(F::cst(365.5));
    if !(norm > F::cst(1e-300)) {
        return Err(Error::DegenerateMass);
    }
    let mut bins = Vec::with_capacity(SUPPORT_LEN);
    bins.push(params.interval_mass(F::zero(), half));
    for lead in 1..SUPPORT_LEN {
        let c = F::cst(lead as f64);
        bins.push(params.interval_mass(c - half, c + half));
    }
    let total: F = bins.iter().copied().sum();
    if !(total > F::cst(1e-300)) {
        return Err(Error::DegenerateMass);
    }
    for b in bins.iter_mut() {
        *b /= total;
    }
    Ok(bins)
}

/// Cross-entropy −Σ x_l · ln p_l with the probability floored before the
/// logarithm.
pub fn cross_entropy<F: Real>(x: &DailyPmf<F>, p: &[F]) -> F {
    let floor = F::prob_floor();
    let mut total = F::zero();
    for (&xv, &pv) in x.mass().iter().zip(p) {
        if xv > F::zero() {
            total -= xv * pv.max(floor).ln();
        }
    }
    total
}

/// One family's fitted parameters and induced pmf for a day.
#[derive(Clone, Debug)]
pub struct FamilyFit<F: Real = f64> {
    pub params: FamilyParams<F>,
    pub cross_entropy: F,
    pub induced_pmf: Vec<F>,
    pub converged: bool,
    pub iterations: usize,
}

impl<F: Real> FamilyFit<F> {
    pub fn cdf(&self) -> Vec<F> {
        let mut acc = F::zero();
        self.induced_pmf
            .iter()
            .map(|&m| {
                acc += m;
                acc
            })
            .collect()
    }
}

fn transform<F: Real>(family: Family, params: &FamilyParams<F>) -> [F; 2] {
    match family {
        Family::Lognormal => [params.a, params.b.ln()],
        _ => [params.a.ln(), params.b.ln()],
    }
}

fn untransform<F: Real>(family: Family, z: [F; 2]) -> FamilyParams<F> {
    let (a, b) = match family {
        Family::Lognormal => (z[0], z[1].exp()),
        _ => (z[0].exp(), z[1].exp()),
    };
    FamilyParams { family, a, b }
}

/// Moment-matched starting point for a family, from the discrete mean and
/// variance of the observed pmf.
fn moment_start<F: Real>(family: Family, mean: F, var: F) -> FamilyParams<F> {
    match family {
        Family::Gamma => FamilyParams {
            family,
            a: (mean * mean / var).max(F::cst(1e-3)),
            b: (mean / var).max(F::cst(1e-6)),
        },
        Family::Weibull => {
            let k = weibull_shape_from_cv2(var / (mean * mean));
            let scale = mean / ((F::one() + F::one() / k).ln_gamma()).exp();
            FamilyParams {
                family,
                a: k,
                b: scale.max(F::cst(1e-6)),
            }
        }
        Family::Lognormal => {
            let sigma2 = (F::one() + var / (mean * mean)).ln();
            FamilyParams {
                family,
                a: mean.ln() - sigma2 / F::cst(2.0),
                b: sigma2.sqrt().max(F::cst(1e-3)),
            }
        }
    }
}

/// Solves Gamma(1+2/k)/Gamma(1+1/k)^2 = 1 + cv^2 for k by bisection.
fn weibull_shape_from_cv2<F: Real>(cv2: F) -> F {
    let target = F::one() + cv2;
    let ratio = |k: F| {
        let g1 = (F::one() + F::one() / k).ln_gamma();
        let g2 = (F::one() + F::cst(2.0) / k).ln_gamma();
        (g2 - F::cst(2.0) * g1).exp()
    };
    let mut lo = F::cst(0.1);
    let mut hi = F::cst(10.0);
    // ratio(k) is decreasing in k.
    if ratio(lo) <= target {
        return lo;
    }
    if ratio(hi) >= target {
        return hi;
    }
    for _ in 0..80 {
        let mid = (lo + hi) / F::cst(2.0);
        if ratio(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / F::cst(2.0)
}

fn alternate_start<F: Real>(base: &FamilyParams<F>, mean: F, factor: F) -> FamilyParams<F> {
    // Scale the shape, then restore the target mean.
    match base.family {
        Family::Gamma => {
            let a = base.a * factor;
            FamilyParams {
                family: base.family,
                a,
                b: a / mean,
            }
        }
        Family::Weibull => {
            let k = (base.a * factor).max(F::cst(0.05));
            let scale = mean / ((F::one() + F::one() / k).ln_gamma()).exp();
            FamilyParams {
                family: base.family,
                a: k,
                b: scale,
            }
        }
        Family::Lognormal => {
            let sigma = base.b * factor;
            FamilyParams {
                family: base.family,
                a: mean.ln() - sigma * sigma / F::cst(2.0),
                b: sigma,
            }
        }
    }
}

/// Fits one family to a day's pmf by quasi-Newton cross-entropy
/// minimization in log-transformed coordinates, from three starts.
pub fn fit_family<F: Real>(x: &DailyPmf<F>, family: Family) -> Result<FamilyFit<F>> {
    let (mean, var) = x.moments();
    if !(var > F::cst(1e-9)) || !(mean > F::zero()) {
        return Err(Error::DegenerateInput);
    }
    let objective = move |z: [F; 2], x: &DailyPmf<F>| -> F {
        let params = untransform(family, z);
        match induced_pmf(&params) {
            Ok(p) => cross_entropy(x, &p),
            Err(_) => F::infinity(),
        }
    };

    let base = moment_start(family, mean, var);
    let starts = [
        base,
        alternate_start(&base, mean, F::cst(0.5)),
        alternate_start(&base, mean, F::cst(2.0)),
    ];

    let opts = OptimOptions::default();
    let mut best: Option<(F, [F; 2], bool, usize)> = None;
    for start in &starts {
        let z0 = transform(family, start);
        let f = |z: [F; 2]| objective(z, x);
        if !f(z0).is_finite() {
            continue;
        }
        let out = bfgs2(&f, z0, &opts);
        let better = match &best {
            Some((v, ..)) => out.value < *v,
            None => true,
        };
        if better && out.value.is_finite() {
            best = Some((out.value, out.x, out.converged, out.iterations));
        }
    }
    let (value, z, converged, iterations) = best.ok_or(Error::DegenerateMass)?;
    let params = untransform(family, z);
    let pmf = induced_pmf(&params)?;
    Ok(FamilyFit {
        params,
        cross_entropy: value,
        induced_pmf: pmf,
        converged,
        iterations,
    })
}

/// All three family fits for one day plus the cross-entropy winner.
#[derive(Clone, Debug)]
pub struct DayComparison<F: Real = f64> {
    pub date: NaiveDate,
    pub metric: Metric,
    /// Successful fits in the fixed family order.
    pub fits: Vec<FamilyFit<F>>,
    /// Families whose fit failed outright; excluded from the argmin.
    pub failed: Vec<Family>,
    pub winner: Family,
    pub ln_minus_gamma: Option<F>,
    pub wei_minus_gamma: Option<F>,
}

impl<F: Real> DayComparison<F> {
    pub fn fit(&self, family: Family) -> Option<&FamilyFit<F>> {
        self.fits.iter().find(|f| f.params.family == family)
    }
}

/// Fits all families and picks the lowest cross-entropy; ties break by
/// the fixed family order.
pub fn compare_day<F: Real>(x: &DailyPmf<F>) -> Result<DayComparison<F>> {
    let mut fits = Vec::new();
    let mut failed = Vec::new();
    for family in FAMILIES {
        match fit_family(x, family) {
            Ok(f) => fits.push(f),
            Err(Error::DegenerateInput) => return Err(Error::DegenerateInput),
            Err(_) => failed.push(family),
        }
    }
    let winner = fits
        .iter()
        .min_by(|a, b| {
            a.cross_entropy
                .partial_cmp(&b.cross_entropy)
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .map(|f| f.params.family)
        .ok_or(Error::AllStagesFailed)?;
    let ce = |family: Family| -> Option<F> {
        fits.iter()
            .find(|f| f.params.family == family)
            .map(|f| f.cross_entropy)
    };
    let ln_minus_gamma = match (ce(Family::Lognormal), ce(Family::Gamma)) {
        (Some(l), Some(g)) => Some(l - g),
        _ => None,
    };
    let wei_minus_gamma = match (ce(Family::Weibull), ce(Family::Gamma)) {
        (Some(w), Some(g)) => Some(w - g),
        _ => None,
    };
    Ok(DayComparison {
        date: x.date(),
        metric: x.metric(),
        fits,
        failed,
        winner,
        ln_minus_gamma,
        wei_minus_gamma,
    })
}

/// Parallel [`compare_day`] over a panel of pmfs, order-preserving.
pub fn compare_days<F: Real>(pmfs: &[DailyPmf<F>]) -> Vec<Result<DayComparison<F>>> {
    use rayon::prelude::*;
    pmfs.par_iter().map(compare_day).collect()
}

/// Per-family win counts and shares over a set of day comparisons.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WinTally {
    pub counts: [usize; 3],
    pub total: usize,
}

impl WinTally {
    pub fn count(&self, family: Family) -> usize {
        self.counts[FAMILIES.iter().position(|&f| f == family).unwrap()]
    }

    pub fn share(&self, family: Family) -> f64 {
        self.count(family) as f64 / self.total as f64
    }
}

pub fn win_tally<F: Real>(comparisons: &[DayComparison<F>]) -> Result<WinTally> {
    if comparisons.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut counts = [0usize; 3];
    for cmp in comparisons {
        let idx = FAMILIES.iter().position(|&f| f == cmp.winner).unwrap();
        counts[idx] += 1;
    }
    Ok(WinTally {
        counts,
        total: comparisons.len(),
    })
}
