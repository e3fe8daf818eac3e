//! CSV and JSON serializers for the per-stage artifacts. All floats print
//! through the shortest-roundtrip formatter so output bytes are a pure
//! function of the values.

use leadtime_core::breaks::BreakModel;
use leadtime_core::divergence::DivergenceSeries;
use leadtime_core::fit::{DayComparison, Family, FAMILIES};
use leadtime_core::gpd::{StabilityProfile, TailRatioSeries};
use leadtime_core::pmf::Metric;
use leadtime_core::smooth::SmoothFit;
use serde::Serialize;

pub fn divergence_csv(series: &DivergenceSeries<f64>) -> String {
    let mut out = String::from("date,w1\n");
    for (date, w) in series.dates().iter().zip(series.w1()) {
        out.push_str(&format!("{date},{w}\n"));
    }
    out
}

#[derive(Serialize)]
pub struct DivergenceSummary {
    pub mean_w1: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicates: usize,
    pub block_len: usize,
}

#[derive(Serialize)]
pub struct BreakReportEntry {
    /// First date of the segment.
    pub date: String,
    pub segment_mean: f64,
}

#[derive(Serialize)]
pub struct BreakReport {
    /// One entry per segment, led by its start date.
    pub breaks: Vec<BreakReportEntry>,
    pub supf: f64,
    pub supf_p: f64,
    pub bic: Vec<f64>,
}

pub fn break_report(series: &DivergenceSeries<f64>, model: &BreakModel<f64>) -> BreakReport {
    let dates = series.dates();
    let mut entries = Vec::with_capacity(model.segment_means.len());
    let mut start = 0usize;
    for (seg, &mean) in model.segment_means.iter().enumerate() {
        entries.push(BreakReportEntry {
            date: dates[start].to_string(),
            segment_mean: mean,
        });
        if let Some(&b) = model.break_indices.get(seg) {
            start = b + 1;
        }
    }
    BreakReport {
        breaks: entries,
        supf: model.supf,
        supf_p: model.supf_p,
        bic: model.bic_by_m.clone(),
    }
}

pub fn segments_csv(series: &DivergenceSeries<f64>, model: &BreakModel<f64>) -> String {
    let ids = model.segment_ids(series.len());
    let mut out = String::from("date,segment_id\n");
    for (date, id) in series.dates().iter().zip(ids) {
        out.push_str(&format!("{date},{id}\n"));
    }
    out
}

pub fn tails_csv(tails: &TailRatioSeries<f64>) -> String {
    let mut out = String::from("date,threshold,nights_tail,gbv_tail,ratio,defined\n");
    for (i, date) in tails.dates.iter().enumerate() {
        for (j, &u) in tails.thresholds.iter().enumerate() {
            let ratio = if tails.defined[i][j] {
                format!("{}", tails.ratio[i][j])
            } else {
                String::new()
            };
            out.push_str(&format!(
                "{date},{u},{},{},{ratio},{}\n",
                tails.nights_tail[i][j], tails.gbv_tail[i][j], tails.defined[i][j]
            ));
        }
    }
    out
}

pub fn gpd_csv(profiles: &[(Metric, StabilityProfile<f64>)]) -> String {
    let mut out = String::from("metric,threshold,xi,beta,n_exceed,estimator\n");
    for (metric, profile) in profiles {
        for (j, &u) in profile.thresholds.iter().enumerate() {
            match &profile.fits[j] {
                Some(fit) => out.push_str(&format!(
                    "{metric},{u},{},{},{},{}\n",
                    fit.xi, fit.beta, fit.n_exceed, fit.estimator
                )),
                None => out.push_str(&format!("{metric},{u},,,{},\n", profile.n_exceed[j])),
            }
        }
    }
    out
}

pub fn fits_csv(comparisons: &[DayComparison<f64>]) -> String {
    let mut out = String::from("date,metric,family,a,b,cross_entropy,converged\n");
    for cmp in comparisons {
        for fit in &cmp.fits {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                cmp.date,
                cmp.metric,
                fit.params.family,
                fit.params.a,
                fit.params.b,
                fit.cross_entropy,
                fit.converged
            ));
        }
    }
    out
}

pub fn comparisons_csv(comparisons: &[DayComparison<f64>]) -> String {
    let mut out = String::from("date,metric,winner,ln_minus_gamma,wei_minus_gamma\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for cmp in comparisons {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            cmp.date,
            cmp.metric,
            cmp.winner,
            opt(cmp.ln_minus_gamma),
            opt(cmp.wei_minus_gamma)
        ));
    }
    out
}

#[derive(Serialize)]
pub struct WinEntry {
    pub family: String,
    pub days: usize,
    pub share: f64,
}

#[derive(Serialize)]
pub struct WinReport {
    pub metric: String,
    pub total_days: usize,
    pub wins: Vec<WinEntry>,
}

pub fn win_report(metric: Metric, comparisons: &[DayComparison<f64>]) -> Option<WinReport> {
    let tally = leadtime_core::fit::win_tally(comparisons).ok()?;
    Some(WinReport {
        metric: metric.to_string(),
        total_days: tally.total,
        wins: FAMILIES
            .iter()
            .map(|&f| WinEntry {
                family: f.to_string(),
                days: tally.count(f),
                share: tally.share(f),
            })
            .collect(),
    })
}

pub struct SmoothRow {
    pub date: chrono::NaiveDate,
    pub metric: Metric,
    pub fit: SmoothFit<f64>,
    pub crps: f64,
    pub kld: f64,
}

pub fn smoother_csv(rows: &[SmoothRow]) -> String {
    let mut out = String::from("date,metric,k_used,edf,lambda,crps,kld,k_check_passed\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.date,
            row.metric,
            row.fit.k_used,
            row.fit.edf,
            row.fit.lambda,
            row.crps,
            row.kld,
            row.fit.k_check_passed
        ));
    }
    out
}

pub struct ScoreRow {
    pub date: chrono::NaiveDate,
    pub metric: Metric,
    pub model: String,
    pub crps: f64,
    pub kld: f64,
}

pub fn scores_csv(rows: &[ScoreRow]) -> String {
    let mut out = String::from("date,metric,model,crps,kld\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.date, row.metric, row.model, row.crps, row.kld
        ));
    }
    out
}

#[derive(Serialize)]
pub struct ScoreSummaryEntry {
    pub metric: String,
    pub model: String,
    pub mean_crps: f64,
    pub mean_kld: f64,
    pub days: usize,
}

/// Mean scores per (metric, model), in-sample.
pub fn score_summary(rows: &[ScoreRow]) -> Vec<ScoreSummaryEntry> {
    let mut out = Vec::new();
    for metric in [Metric::Nights, Metric::Gbv] {
        let models: Vec<String> = {
            let mut seen = Vec::new();
            for row in rows.iter().filter(|r| r.metric == metric) {
                if !seen.contains(&row.model) {
                    seen.push(row.model.clone());
                }
            }
            seen
        };
        for model in models {
            let subset: Vec<&ScoreRow> = rows
                .iter()
                .filter(|r| r.metric == metric && r.model == model)
                .collect();
            let n = subset.len();
            if n == 0 {
                continue;
            }
            out.push(ScoreSummaryEntry {
                metric: metric.to_string(),
                model,
                mean_crps: subset.iter().map(|r| r.crps).sum::<f64>() / n as f64,
                mean_kld: subset.iter().map(|r| r.kld).sum::<f64>() / n as f64,
                days: n,
            });
        }
    }
    out
}

/// Convenience used by comparison-based scoring.
pub fn family_models() -> [Family; 3] {
    FAMILIES
}
