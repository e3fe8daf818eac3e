//! Block bootstrap for dependent daily series and the simulated null
//! distribution backing the sup-F test.
//!
//! Blocks are circular (wrap-around) moving blocks of length ceil(n^{1/3}),
//! so every replicate series has full length and no end effects. Replicates
//! draw from per-replicate substreams of the seed, which makes results
//! deterministic and order-independent.

use rand::Rng;

use crate::breaks;
use crate::error::{Error, Result};
use crate::num::Real;
use crate::seeds::{substream, TAG_BOOTSTRAP, TAG_SUPF_NULL};

/// Point estimate with a percentile bootstrap interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BootstrapResult<F: Real = f64> {
    pub point: F,
    pub ci_low: F,
    pub ci_high: F,
    pub replicates: usize,
    pub block_len: usize,
}

/// Bootstrap block length ceil(n^{1/3}), computed in integer arithmetic so
/// exact cubes do not fall victim to floating-point rounding.
pub fn block_length(n: usize) -> usize {
    assert!(n >= 1, "block_length needs n >= 1");
    let mut k = (n as f64).cbrt().floor() as usize;
    k = k.max(1);
    while k * k * k >= n && k > 1 {
        k -= 1;
    }
    while k * k * k < n {
        k += 1;
    }
    k
}

fn mean<F: Real>(xs: &[F]) -> F {
    let total: F = xs.iter().copied().sum();
    total / F::cst(xs.len() as f64)
}

/// Linear-interpolation percentile of a sorted slice.
fn percentile<F: Real>(sorted: &[F], q: f64) -> F {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = F::cst(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Circular moving-block bootstrap of the mean with a 95% percentile
/// interval. Deterministic for a fixed seed.
pub fn block_bootstrap_mean<F: Real>(
    series: &[F],
    replicates: usize,
    seed: u64,
) -> Result<BootstrapResult<F>> {
    let n = series.len();
    if n < 2 {
        return Err(Error::SeriesTooShort {
            needed: 2,
            actual: n,
        });
    }
    if replicates < 100 {
        return Err(Error::InvalidConfig(format!(
            "need at least 100 replicates, got {replicates}"
        )));
    }
    let block_len = block_length(n);
    let n_blocks = n.div_ceil(block_len);
    let inv_n = F::one() / F::cst(n as f64);

    let mut means = Vec::with_capacity(replicates);
    for r in 0..replicates {
        let mut rng = substream(seed, TAG_BOOTSTRAP, r as u64);
        let mut total = F::zero();
        let mut taken = 0usize;
        'blocks: for _ in 0..n_blocks {
            let start = rng.gen_range(0..n);
            for offset in 0..block_len {
                if taken == n {
                    break 'blocks;
                }
                total += series[(start + offset) % n];
                taken += 1;
            }
        }
        means.push(total * inv_n);
    }
    means.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));

    Ok(BootstrapResult {
        point: mean(series),
        ci_low: percentile(&means, 0.025),
        ci_high: percentile(&means, 0.975),
        replicates,
        block_len,
    })
}

/// Configuration forwarded to the sup-F statistic inside the null
/// simulation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupFConfig<F: Real = f64> {
    pub trim: F,
}

/// Simulates the sup-F null distribution on white noise of length `n` and
/// returns the sorted statistics. The p-value of an observed statistic is
/// its upper-tail empirical rank via [`empirical_upper_p`].
pub fn simulate_supf_null<F: Real>(
    n: usize,
    config: &SupFConfig<F>,
    draws: usize,
    seed: u64,
) -> Result<Vec<F>> {
    if n < 40 {
        return Err(Error::InvalidConfig(format!(
            "null simulation needs n >= 40, got {n}"
        )));
    }
    if draws < 200 {
        return Err(Error::InvalidConfig(format!(
            "null simulation needs at least 200 draws, got {draws}"
        )));
    }
    if !(config.trim > F::zero() && config.trim < F::cst(0.5)) {
        return Err(Error::InvalidConfig(format!(
            "trim must lie in (0, 0.5), got {}",
            config.trim
        )));
    }
    use rand_distr::{Distribution, StandardNormal};
    let mut stats = Vec::with_capacity(draws);
    for d in 0..draws {
        let mut rng = substream(seed, TAG_SUPF_NULL, d as u64);
        let series: Vec<F> = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                F::cst(z)
            })
            .collect();
        stats.push(breaks::sup_f_statistic(&series, config.trim)?);
    }
    stats.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(stats)
}

/// Upper-tail empirical p-value (1 + #{null >= stat}) / (draws + 1).
pub fn empirical_upper_p<F: Real>(sorted_null: &[F], stat: F) -> F {
    let above = sorted_null.iter().filter(|&&s| s >= stat).count();
    F::cst((1 + above) as f64) / F::cst((sorted_null.len() + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::Distribution;

    #[test]
    fn block_length_cases() {
        assert_eq!(block_length(1), 1);
        assert_eq!(block_length(8), 2);
        assert_eq!(block_length(27), 3);
        assert_eq!(block_length(28), 4);
        assert_eq!(block_length(2557), 14);
        assert_eq!(block_length(1000), 10);
        assert_eq!(block_length(1001), 11);
    }

    #[test]
    fn constant_series_has_degenerate_interval() {
        let series = vec![5.0f64; 50];
        let out = block_bootstrap_mean(&series, 200, 1).unwrap();
        assert_eq!(out.point, 5.0);
        assert_eq!(out.ci_low, 5.0);
        assert_eq!(out.ci_high, 5.0);
        assert_eq!(out.block_len, block_length(50));
    }

    #[test]
    fn identical_seeds_give_identical_results() {
        let mut rng = crate::seeds::substream(77, 0xB0, 0);
        let series: Vec<f64> = (0..500)
            .map(|_| rand_distr::StandardNormal.sample(&mut rng))
            .collect();
        let a = block_bootstrap_mean(&series, 300, 42).unwrap();
        let b = block_bootstrap_mean(&series, 300, 42).unwrap();
        assert_eq!(a, b);
        let c = block_bootstrap_mean(&series, 300, 43).unwrap();
        assert!(a.ci_low != c.ci_low || a.ci_high != c.ci_high);
    }

    #[test]
    fn iid_interval_width_tracks_analytic_standard_error() {
        let n = 2000;
        let mut rng = crate::seeds::substream(5, 0xB0, 1);
        let series: Vec<f64> = (0..n)
            .map(|_| rand_distr::StandardNormal.sample(&mut rng))
            .collect();
        let out = block_bootstrap_mean(&series, 1000, 9).unwrap();
        let width = out.ci_high - out.ci_low;
        let analytic = 2.0 * 1.96 / (n as f64).sqrt();
        assert!(
            width > 0.7 * analytic && width < 1.4 * analytic,
            "width {width} vs analytic {analytic}"
        );
        assert!(out.ci_low <= out.point && out.point <= out.ci_high);
    }

    #[test]
    fn dependent_series_widens_interval_over_iid_resampling() {
        // AR(1) with phi = 0.5; compare against a naive iid percentile
        // bootstrap oracle on the same draws.
        let n = 5000;
        let phi = 0.5;
        let mut rng = crate::seeds::substream(6, 0xB0, 2);
        let mut series = Vec::with_capacity(n);
        let mut x = 0.0f64;
        for _ in 0..n {
            let e: f64 = rand_distr::StandardNormal.sample(&mut rng);
            x = phi * x + e;
            series.push(x);
        }
        let block = block_bootstrap_mean(&series, 1000, 11).unwrap();

        let mut iid_means = Vec::with_capacity(1000);
        for r in 0..1000u64 {
            let mut rr = crate::seeds::substream(11, 0x99, r);
            let mut total = 0.0;
            for _ in 0..n {
                total += series[rand::Rng::gen_range(&mut rr, 0..n)];
            }
            iid_means.push(total / n as f64);
        }
        iid_means.sort_by(|a, b| a.total_cmp(b));
        let iid_width = percentile(&iid_means, 0.975) - percentile(&iid_means, 0.025);
        let block_width = block.ci_high - block.ci_low;
        assert!(
            block_width > iid_width,
            "block {block_width} should exceed iid {iid_width}"
        );
    }

    #[test]
    fn interval_width_shrinks_with_sample_size() {
        // Same AR(1) process at n = 1000 and n = 4000; widths aggregated
        // over 50 seeded trials.
        let phi = 0.5f64;
        let width_at = |n: usize, tag: u64| {
            let mut total = 0.0f64;
            for trial in 0..50u64 {
                let mut rng = crate::seeds::substream(tag, 0xB1, trial);
                let mut x = 0.0f64;
                let series: Vec<f64> = (0..n)
                    .map(|_| {
                        let e: f64 = rand_distr::StandardNormal.sample(&mut rng);
                        x = phi * x + e;
                        x
                    })
                    .collect();
                let out = block_bootstrap_mean(&series, 400, 1000 + trial).unwrap();
                total += out.ci_high - out.ci_low;
            }
            total / 50.0
        };
        let wide = width_at(1000, 21);
        let narrow = width_at(4000, 22);
        assert!(
            narrow < wide,
            "width at n=4000 ({narrow}) should be below n=1000 ({wide})"
        );
    }

    #[test]
    fn null_simulation_validates_config() {
        let cfg = SupFConfig { trim: 0.05 };
        assert!(simulate_supf_null::<f64>(30, &cfg, 300, 1).is_err());
        assert!(simulate_supf_null::<f64>(100, &cfg, 100, 1).is_err());
        let bad = SupFConfig { trim: 0.7 };
        assert!(simulate_supf_null::<f64>(100, &bad, 300, 1).is_err());
    }

    #[test]
    fn empirical_p_respects_rank_bounds() {
        let null: Vec<f64> = (1..=400).map(|i| i as f64).collect();
        // Below the median.
        let p_low = empirical_upper_p(&null, 100.0);
        assert!(p_low >= 0.5);
        // Above the maximum.
        let p_high = empirical_upper_p(&null, 1000.0);
        assert!(p_high <= 1.0 / 400.0);
    }
}
