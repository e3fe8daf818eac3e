//! Seeded synthetic panels with known ground truth.
//!
//! Scenarios draw daily pmf pairs from a parametric family with optional
//! mean seasonality, regime shifts in the parameters, multinomial
//! observation noise, support truncation, and a paired revenue pmf whose
//! mean is inflated relative to volume. Every oracle-based test in the
//! workspace runs against these panels.

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{induced_pmf, Family, FamilyParams};
use crate::num::Real;
use crate::pmf::{DailyPmf, Metric, PairedDay, MAX_LEAD};
use crate::seeds::{substream, TAG_BREAK_SERIES, TAG_PANEL_NOISE};

/// Parameter override taking effect at a day index; the family is the
/// scenario's family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec<F: Real = f64> {
    pub start_index: usize,
    pub a: F,
    pub b: F,
}

fn default_truncate() -> usize {
    MAX_LEAD
}

fn default_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2019, 1, 1).unwrap()
}

/// Full generator description; serializable so scenarios can live in JSON
/// files next to the panels they produce.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec<F: Real = f64> {
    pub n_days: usize,
    #[serde(default = "default_start_date")]
    pub start_date: NaiveDate,
    pub family: Family,
    pub base_params: FamilyParams<F>,
    /// Relative modulation of the implied mean, one harmonic per year.
    #[serde(default)]
    pub seasonal_amplitude: F,
    #[serde(default)]
    pub regimes: Vec<RegimeSpec<F>>,
    /// Multinomial sample size per day; 0 means noiseless.
    #[serde(default)]
    pub noise_draws: usize,
    #[serde(default = "default_truncate")]
    pub truncate_at: usize,
    /// Relative mean inflation of the paired GBV pmf.
    #[serde(default)]
    pub gbv_shift: F,
    pub seed: u64,
}

impl<F: Real> ScenarioSpec<F> {
    /// Noiseless single-regime scenario; fields can be adjusted after.
    pub fn basic(family: Family, a: F, b: F, n_days: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            n_days,
            start_date: default_start_date(),
            family,
            base_params: FamilyParams::new(family, a, b)?,
            seasonal_amplitude: F::zero(),
            regimes: Vec::new(),
            noise_draws: 0,
            truncate_at: MAX_LEAD,
            gbv_shift: F::zero(),
            seed,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.n_days == 0 {
            return Err(Error::InvalidSpec("n_days must be positive".into()));
        }
        if self.base_params.family != self.family {
            return Err(Error::InvalidSpec(format!(
                "base_params family {} does not match scenario family {}",
                self.base_params.family, self.family
            )));
        }
        FamilyParams::new(self.family, self.base_params.a, self.base_params.b)
            .map_err(|e| Error::InvalidSpec(e.to_string()))?;
        if !(self.seasonal_amplitude >= F::zero() && self.seasonal_amplitude < F::one()) {
            return Err(Error::InvalidSpec(
                "seasonal_amplitude must lie in [0, 1)".into(),
            ));
        }
        if !(self.gbv_shift >= F::zero()) {
            return Err(Error::InvalidSpec("gbv_shift must be nonnegative".into()));
        }
        if self.truncate_at > MAX_LEAD {
            return Err(Error::InvalidSpec(format!(
                "truncate_at must be at most {MAX_LEAD}"
            )));
        }
        let mut prev: Option<usize> = None;
        for regime in &self.regimes {
            if let Some(p) = prev {
                if regime.start_index <= p {
                    return Err(Error::InvalidSpec(
                        "regime start indices must be strictly increasing".into(),
                    ));
                }
            }
            FamilyParams::new(self.family, regime.a, regime.b)
                .map_err(|e| Error::InvalidSpec(e.to_string()))?;
            prev = Some(regime.start_index);
        }
        Ok(())
    }

    fn params_for_day(&self, day: usize) -> Result<FamilyParams<F>> {
        let mut params = self.base_params;
        for regime in &self.regimes {
            if day >= regime.start_index {
                params = FamilyParams::new(self.family, regime.a, regime.b)?;
            }
        }
        if self.seasonal_amplitude > F::zero() {
            let phase = F::cst(2.0 * std::f64::consts::PI * day as f64 / 365.0);
            let mult = F::one() + self.seasonal_amplitude * phase.sin();
            params = params.with_mean_multiplier(mult)?;
        }
        Ok(params)
    }
}

fn truncate_renormalize<F: Real>(mass: &mut [F], truncate_at: usize) -> Result<()> {
    if truncate_at < MAX_LEAD {
        for v in mass.iter_mut().skip(truncate_at + 1) {
            *v = F::zero();
        }
    }
    let total: F = mass.iter().copied().sum();
    if !(total > F::zero()) {
        return Err(Error::DegenerateMass);
    }
    for v in mass.iter_mut() {
        *v /= total;
    }
    Ok(())
}

fn multinomial_noise<F: Real>(mass: &[F], draws: usize, rng: &mut rand_pcg::Pcg64) -> Vec<F> {
    use rand::Rng;
    let mut cdf = Vec::with_capacity(mass.len());
    let mut acc = F::zero();
    for &m in mass {
        acc += m;
        cdf.push(acc);
    }
    let mut counts = vec![0usize; mass.len()];
    for _ in 0..draws {
        let target = F::cst(rng.gen::<f64>());
        let idx = cdf.partition_point(|&c| c < target).min(mass.len() - 1);
        counts[idx] += 1;
    }
    let inv = F::one() / F::cst(draws as f64);
    counts.iter().map(|&c| F::cst(c as f64) * inv).collect()
}

/// Generates the paired daily panel described by a scenario.
/// Deterministic for a fixed spec and seed.
pub fn generate_panel<F: Real>(spec: &ScenarioSpec<F>) -> Result<Vec<PairedDay<F>>> {
    spec.validate()?;
    let mut panel = Vec::with_capacity(spec.n_days);
    for day in 0..spec.n_days {
        let date = spec.start_date + Days::new(day as u64);
        let nights_params = spec.params_for_day(day)?;
        let gbv_params = nights_params.with_mean_multiplier(F::one() + spec.gbv_shift)?;

        let build = |params: &FamilyParams<F>, metric: Metric| -> Result<DailyPmf<F>> {
            let mut mass = induced_pmf(params)?;
            truncate_renormalize(&mut mass, spec.truncate_at)?;
            if spec.noise_draws > 0 {
                let stream_idx = (day as u64) * 2 + if metric == Metric::Gbv { 1 } else { 0 };
                let mut rng = substream(spec.seed, TAG_PANEL_NOISE, stream_idx);
                mass = multinomial_noise(&mass, spec.noise_draws, &mut rng);
            }
            DailyPmf::new(date, metric, mass)
        };

        let nights = build(&nights_params, Metric::Nights)?;
        let gbv = build(&gbv_params, Metric::Gbv)?;
        panel.push(PairedDay::new(nights, gbv)?);
    }
    Ok(panel)
}

/// Piecewise-constant mean plus iid Gaussian noise; the direct scalar
/// fixture for the break detector. A break point `b` is the first index
/// of the new regime.
pub fn generate_break_series<F: Real>(
    n: usize,
    break_points: &[usize],
    means: &[F],
    sigma: F,
    seed: u64,
) -> Result<Vec<F>> {
    use rand_distr::Distribution;
    if means.len() != break_points.len() + 1 {
        return Err(Error::InvalidSpec(format!(
            "need {} means for {} break points, got {}",
            break_points.len() + 1,
            break_points.len(),
            means.len()
        )));
    }
    if !(sigma >= F::zero()) {
        return Err(Error::InvalidSpec("sigma must be nonnegative".into()));
    }
    let mut prev: Option<usize> = None;
    for &b in break_points {
        if b == 0 || b >= n {
            return Err(Error::InvalidSpec(format!(
                "break point {b} outside the series interior"
            )));
        }
        if prev.is_some_and(|p| b <= p) {
            return Err(Error::InvalidSpec(
                "break points must be strictly increasing".into(),
            ));
        }
        prev = Some(b);
    }
    let mut rng = substream(seed, TAG_BREAK_SERIES, 0);
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    for t in 0..n {
        if seg < break_points.len() && t >= break_points[seg] {
            seg += 1;
        }
        let z: f64 = rand_distr::StandardNormal.sample(&mut rng);
        out.push(means[seg] + sigma * F::cst(z));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence;

    #[test]
    fn degenerate_scenario_has_zero_divergence() {
        let spec: ScenarioSpec = ScenarioSpec::basic(Family::Gamma, 1.0, 0.02, 5, 7).unwrap();
        let panel = generate_panel(&spec).unwrap();
        assert_eq!(panel.len(), 5);
        assert_eq!(panel[0].nights.mass(), panel[4].nights.mass());
        let series = divergence::divergence_series(&panel).unwrap();
        assert!(series.w1().iter().all(|&w| w.abs() < 1e-9));
    }

    #[test]
    fn gbv_shift_raises_tail_ratio_above_one() {
        // Mean inflation matching the Weibull scale contrast 61.7 / 54.2.
        let mut spec: ScenarioSpec =
            ScenarioSpec::basic(Family::Weibull, 0.85, 54.2, 10, 3).unwrap();
        spec.gbv_shift = 61.7 / 54.2 - 1.0;
        let panel = generate_panel(&spec).unwrap();
        for day in &panel {
            let n = day.nights.tail_mass(90).unwrap();
            let g = day.gbv.tail_mass(90).unwrap();
            assert!(g / n > 1.0, "ratio {}", g / n);
        }
    }

    #[test]
    fn panels_are_bit_identical_per_seed() {
        let mut spec: ScenarioSpec =
            ScenarioSpec::basic(Family::Gamma, 0.8, 0.012, 20, 99).unwrap();
        spec.noise_draws = 2000;
        spec.seasonal_amplitude = 0.2;
        let a = generate_panel(&spec).unwrap();
        let b = generate_panel(&spec).unwrap();
        assert_eq!(a, b);
        spec.seed = 100;
        let c = generate_panel(&spec).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noiseless_generation_round_trips_through_the_fitter() {
        let spec: ScenarioSpec = ScenarioSpec::basic(Family::Gamma, 0.9, 0.015, 1, 1).unwrap();
        let panel = generate_panel(&spec).unwrap();
        let fit = crate::fit::fit_family(&panel[0].nights, Family::Gamma).unwrap();
        assert!(((fit.params.a - 0.9) / 0.9).abs() < 0.01);
        assert!(((fit.params.b - 0.015) / 0.015).abs() < 0.01);
    }

    #[test]
    fn multinomial_noise_concentrates_with_many_draws() {
        let mut spec: ScenarioSpec = ScenarioSpec::basic(Family::Gamma, 1.0, 0.05, 1, 5).unwrap();
        spec.noise_draws = 1_000_000;
        let noisy = generate_panel(&spec).unwrap();
        spec.noise_draws = 0;
        let clean = generate_panel(&spec).unwrap();
        let tv: f64 = noisy[0]
            .nights
            .mass()
            .iter()
            .zip(clean[0].nights.mass())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.005, "tv = {tv}");
    }

    #[test]
    fn seasonality_modulates_the_mean() {
        let mut spec: ScenarioSpec = ScenarioSpec::basic(Family::Gamma, 1.0, 0.02, 365, 2).unwrap();
        spec.seasonal_amplitude = 0.3;
        let panel = generate_panel(&spec).unwrap();
        let mean_at = |d: usize| panel[d].nights.moments().0;
        // Peak near day 91 (sin maximum), trough near day 274.
        assert!(mean_at(91) > mean_at(0) * 1.15);
        assert!(mean_at(274) < mean_at(0) * 0.85);
    }

    #[test]
    fn regime_override_shifts_divergence_against_a_reference() {
        let mut spec: ScenarioSpec =
            ScenarioSpec::basic(Family::Gamma, 1.0, 0.02, 400, 11).unwrap();
        spec.regimes = vec![RegimeSpec {
            start_index: 200,
            a: 1.0,
            b: 0.01,
        }];
        spec.noise_draws = 5000;
        let panel = generate_panel(&spec).unwrap();
        let reference = panel[0].nights.clone();
        let series: Vec<f64> = panel
            .iter()
            .map(|d| divergence::wasserstein1(&d.nights, &reference))
            .collect();
        let model = crate::breaks::bai_perron(&series, 5, 0.05).unwrap();
        assert!(model.chosen_m >= 1);
        // Reported index is the last day of the old regime; the new one
        // starts at 200.
        let nearest = model
            .break_indices
            .iter()
            .map(|&b| (b as i64 - 199).abs())
            .min()
            .unwrap();
        assert!(nearest <= 5, "breaks at {:?}", model.break_indices);
    }

    #[test]
    fn break_series_is_exact_without_noise() {
        let series: Vec<f64> = generate_break_series(10, &[4], &[1.0, 3.0], 0.0, 9).unwrap();
        assert_eq!(series[..4], [1.0, 1.0, 1.0, 1.0]);
        assert_eq!(series[4..], [3.0, 3.0, 3.0, 3.0, 3.0, 3.0]);
    }

    #[test]
    fn invalid_scenarios_are_rejected() {
        let mut spec: ScenarioSpec = ScenarioSpec::basic(Family::Gamma, 1.0, 0.02, 10, 1).unwrap();
        spec.seasonal_amplitude = 1.5;
        assert!(matches!(generate_panel(&spec), Err(Error::InvalidSpec(_))));
        let mut spec: ScenarioSpec = ScenarioSpec::basic(Family::Gamma, 1.0, 0.02, 10, 1).unwrap();
        spec.regimes = vec![
            RegimeSpec {
                start_index: 5,
                a: 1.0,
                b: 0.1,
            },
            RegimeSpec {
                start_index: 5,
                a: 1.0,
                b: 0.2,
            },
        ];
        assert!(matches!(generate_panel(&spec), Err(Error::InvalidSpec(_))));
        assert!(generate_break_series::<f64>(10, &[4], &[1.0], 1.0, 0).is_err());
        assert!(generate_break_series::<f64>(10, &[0], &[1.0, 2.0], 1.0, 0).is_err());
    }

    #[test]
    fn scenario_spec_round_trips_through_json() {
        let mut spec: ScenarioSpec =
            ScenarioSpec::basic(Family::Weibull, 0.9, 60.0, 30, 17).unwrap();
        spec.gbv_shift = 0.14;
        spec.noise_draws = 100;
        let text = serde_json::to_string(&spec).unwrap();
        let back: ScenarioSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
    }
}
