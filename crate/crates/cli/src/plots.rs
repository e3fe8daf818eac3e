//! Plot-ready CSV bundles, one per figure analog. Data files only; any
//! plotting tool can consume them.

use leadtime_core::breaks::BreakModel;
use leadtime_core::divergence::DivergenceSeries;
use leadtime_core::fit::DayComparison;
use leadtime_core::gpd::{StabilityProfile, TailRatioSeries};
use leadtime_core::pmf::{pool_days, Metric, PairedDay, SUPPORT_LEN};

use crate::pipeline::{MetricComparisons, RunError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    /// `plots/pooled.csv`: lead,nights,gbv — day-weighted mixture pmfs.
    Pooled,
    /// `plots/divergence.csv`: date,w1.
    Divergence,
    /// `plots/breaks.csv`: date,w1,segment_id,segment_mean.
    Breaks,
    /// `plots/tail_ratios.csv`: date,threshold,ratio,defined.
    TailRatios,
    /// `plots/tail_mass.csv`: date,threshold,metric,tail_mass.
    TailMass,
    /// `plots/stability.csv`: metric,threshold,xi,n_exceed,defined.
    Stability,
    /// `plots/ce_histograms.csv`: metric,comparison,bin_left,bin_right,count.
    /// Fixed 0.005-wide bins over [-0.05, 0.25]; outliers clamp into the
    /// edge bins.
    CeHistograms,
}

pub struct PlotInputs<'a> {
    pub panel: &'a [PairedDay<f64>],
    pub divergence: Option<&'a DivergenceSeries<f64>>,
    pub break_model: Option<&'a BreakModel<f64>>,
    pub tails: Option<&'a TailRatioSeries<f64>>,
    pub gpd_profiles: Option<&'a [(Metric, StabilityProfile<f64>)]>,
    pub comparisons: Option<&'a MetricComparisons>,
}

fn missing(figure: Figure, stage: &str) -> RunError {
    RunError::MissingStageOutput {
        figure: format!("{figure:?}"),
        stage: stage.to_string(),
    }
}

/// Builds the requested figure bundles as (relative path, contents).
/// Errors when a requested figure references a stage that has not run.
pub fn emit_plot_data(
    inputs: &PlotInputs<'_>,
    figures: &[Figure],
) -> Result<Vec<(String, String)>, RunError> {
    let mut out = Vec::with_capacity(figures.len());
    for &figure in figures {
        let bundle = match figure {
            Figure::Pooled => ("plots/pooled.csv".to_string(), pooled_csv(inputs.panel)?),
            Figure::Divergence => {
                let series = inputs
                    .divergence
                    .ok_or_else(|| missing(figure, "divergence"))?;
                let mut csv = String::from("date,w1\n");
                for (date, w) in series.dates().iter().zip(series.w1()) {
                    csv.push_str(&format!("{date},{w}\n"));
                }
                ("plots/divergence.csv".to_string(), csv)
            }
            Figure::Breaks => {
                let series = inputs
                    .divergence
                    .ok_or_else(|| missing(figure, "divergence"))?;
                let model = inputs
                    .break_model
                    .ok_or_else(|| missing(figure, "breaks"))?;
                let ids = model.segment_ids(series.len());
                let mut csv = String::from("date,w1,segment_id,segment_mean\n");
                for ((date, w), id) in series.dates().iter().zip(series.w1()).zip(ids) {
                    csv.push_str(&format!("{date},{w},{id},{}\n", model.segment_means[id]));
                }
                ("plots/breaks.csv".to_string(), csv)
            }
            Figure::TailRatios => {
                let tails = inputs.tails.ok_or_else(|| missing(figure, "tails"))?;
                let mut csv = String::from("date,threshold,ratio,defined\n");
                for (i, date) in tails.dates.iter().enumerate() {
                    for (j, &u) in tails.thresholds.iter().enumerate() {
                        let ratio = if tails.defined[i][j] {
                            format!("{}", tails.ratio[i][j])
                        } else {
                            String::new()
                        };
                        csv.push_str(&format!("{date},{u},{ratio},{}\n", tails.defined[i][j]));
                    }
                }
                ("plots/tail_ratios.csv".to_string(), csv)
            }
            Figure::TailMass => {
                let tails = inputs.tails.ok_or_else(|| missing(figure, "tails"))?;
                let mut csv = String::from("date,threshold,metric,tail_mass\n");
                for (i, date) in tails.dates.iter().enumerate() {
                    for (j, &u) in tails.thresholds.iter().enumerate() {
                        csv.push_str(&format!("{date},{u},nights,{}\n", tails.nights_tail[i][j]));
                        csv.push_str(&format!("{date},{u},gbv,{}\n", tails.gbv_tail[i][j]));
                    }
                }
                ("plots/tail_mass.csv".to_string(), csv)
            }
            Figure::Stability => {
                let profiles = inputs.gpd_profiles.ok_or_else(|| missing(figure, "gpd"))?;
                let mut csv = String::from("metric,threshold,xi,n_exceed,defined\n");
                for (metric, profile) in profiles {
                    for (j, &u) in profile.thresholds.iter().enumerate() {
                        match &profile.fits[j] {
                            Some(fit) => csv.push_str(&format!(
                                "{metric},{u},{},{},true\n",
                                fit.xi, fit.n_exceed
                            )),
                            None => csv.push_str(&format!(
                                "{metric},{u},,{},false\n",
                                profile.n_exceed[j]
                            )),
                        }
                    }
                }
                ("plots/stability.csv".to_string(), csv)
            }
            Figure::CeHistograms => {
                let comparisons = inputs.comparisons.ok_or_else(|| missing(figure, "fit"))?;
                (
                    "plots/ce_histograms.csv".to_string(),
                    ce_histograms_csv(comparisons),
                )
            }
        };
        out.push(bundle);
    }
    Ok(out)
}

fn pooled_csv(panel: &[PairedDay<f64>]) -> Result<String, RunError> {
    let nights: Vec<_> = panel.iter().map(|d| d.nights.clone()).collect();
    let gbv: Vec<_> = panel.iter().map(|d| d.gbv.clone()).collect();
    let err = |e: leadtime_core::Error| RunError::Setup(format!("pooled bundle: {e}"));
    let pooled_n = pool_days(&nights).map_err(err)?;
    let pooled_g = pool_days(&gbv).map_err(err)?;
    let mut csv = String::from("lead,nights,gbv\n");
    for lead in 0..SUPPORT_LEN {
        csv.push_str(&format!(
            "{lead},{},{}\n",
            pooled_n.mass()[lead],
            pooled_g.mass()[lead]
        ));
    }
    Ok(csv)
}

const HIST_LO: f64 = -0.05;
const HIST_HI: f64 = 0.25;
const HIST_WIDTH: f64 = 0.005;

fn ce_histograms_csv(comparisons: &MetricComparisons) -> String {
    let n_bins = ((HIST_HI - HIST_LO) / HIST_WIDTH).round() as usize;
    let mut csv = String::from("metric,comparison,bin_left,bin_right,count\n");
    for (metric, days) in comparisons {
        for (label, pick) in [
            (
                "lognormal_minus_gamma",
                Box::new(|c: &DayComparison<f64>| c.ln_minus_gamma)
                    as Box<dyn Fn(&DayComparison<f64>) -> Option<f64>>,
            ),
            (
                "weibull_minus_gamma",
                Box::new(|c: &DayComparison<f64>| c.wei_minus_gamma),
            ),
        ] {
            let mut counts = vec![0usize; n_bins];
            for cmp in days {
                if let Some(v) = pick(cmp) {
                    let idx = ((v - HIST_LO) / HIST_WIDTH).floor();
                    let idx = (idx.max(0.0) as usize).min(n_bins - 1);
                    counts[idx] += 1;
                }
            }
            for (i, &count) in counts.iter().enumerate() {
                let left = HIST_LO + HIST_WIDTH * i as f64;
                let right = HIST_LO + HIST_WIDTH * (i + 1) as f64;
                csv.push_str(&format!("{metric},{label},{left},{right},{count}\n"));
            }
        }
    }
    csv
}
