//! Distributional analysis of paired daily lead-time compositions.
//!
//! The crate models each day's bookings as a pair of probability vectors
//! over lead times 0..=365 (volume and revenue shares) and provides the
//! full analysis stack on top of them: Wasserstein divergence with block
//! bootstrap, structural-break detection with HAC inference, tail-mass and
//! peaks-over-threshold diagnostics, interval-censored parametric fitting,
//! penalized-spline smoothing, proper scoring, and a seeded synthetic
//! panel generator for ground-truth validation.
//!
//! All numeric kernels are generic over the scalar type through the
//! [`num::Real`] trait; `f64` is the default scalar and the one the
//! pipeline and file formats use.

// Guards shaped as `!(x > eps)` reject NaN along with the out-of-range
// value; rewriting them as `x <= eps` would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Indexed loops stay as written in the matrix and DP kernels, where the
// index arithmetic is the algorithm.
#![allow(clippy::needless_range_loop)]

pub mod bootstrap;
pub mod breaks;
pub mod divergence;
pub mod error;
pub mod fit;
pub mod gpd;
pub mod io;
pub mod num;
pub mod pmf;
pub mod smooth;
pub mod synth;

mod linalg;
mod optim;
mod seeds;
mod special;

pub use error::{Error, Result};
pub use num::Real;
pub use pmf::{DailyPmf, Metric, PairedDay, PooledPmf, MAX_LEAD, SUPPORT_LEN};

/// Concrete `f64` aliases for the main domain types.
pub type DailyPmf64 = pmf::DailyPmf<f64>;
pub type PairedDay64 = pmf::PairedDay<f64>;
pub type PooledPmf64 = pmf::PooledPmf<f64>;
pub type DivergenceSeries64 = divergence::DivergenceSeries<f64>;
pub type BreakModel64 = breaks::BreakModel<f64>;
pub type FamilyParams64 = fit::FamilyParams<f64>;
pub type FamilyFit64 = fit::FamilyFit<f64>;
pub type DayComparison64 = fit::DayComparison<f64>;
pub type GpdFit64 = gpd::GpdFit<f64>;
pub type SmoothFit64 = smooth::SmoothFit<f64>;
pub type ScenarioSpec64 = synth::ScenarioSpec<f64>;
