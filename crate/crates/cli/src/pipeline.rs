//! Stage orchestration: reads one input, executes the requested stages in
//! dependency order, and writes per-stage artifacts plus a manifest.
//!
//! Intermediate results are computed on demand and cached, so a stage
//! produces identical bytes whether or not the stages it depends on were
//! requested. File writes go through a write-temp-then-rename path; a
//! failing stage leaves earlier artifacts in place.

use std::path::Path;
use std::time::Instant;

use leadtime_core::breaks::{bai_perron, BreakModel};
use leadtime_core::divergence::{divergence_series, DivergenceSeries};
use leadtime_core::fit::{compare_days, DayComparison};
use leadtime_core::gpd::{stability_sweep, tail_ratio_series, StabilityProfile, TailRatioSeries};
use leadtime_core::io::{parse_panel, ReadOptions};
use leadtime_core::pmf::{DailyPmf, Metric, PairedDay};
use leadtime_core::smooth::{score_smoother, smooth_pmf};
use leadtime_core::synth::{generate_panel, ScenarioSpec};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, Stage};
use crate::plots::{emit_plot_data, Figure, PlotInputs};
use crate::reports;

/// Per-metric day comparisons from the fit stage.
pub type MetricComparisons = Vec<(Metric, Vec<DayComparison<f64>>)>;

#[derive(Debug)]
pub enum RunError {
    /// Input failed validation; carries per-row diagnostics. Exit 2.
    Input(Vec<String>),
    /// A stage failed after validation. Exit 3.
    Stage { stage: Stage, message: String },
    /// A plot bundle referenced a stage that produced no output. Exit 3.
    MissingStageOutput { figure: String, stage: String },
    /// Environment problems outside the input/stage contract. Exit 1.
    Setup(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Input(_) => 2,
            RunError::Stage { .. } | RunError::MissingStageOutput { .. } => 3,
            RunError::Setup(_) => 1,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Input(diags) => {
                writeln!(
                    f,
                    "input validation failed with {} diagnostic(s):",
                    diags.len()
                )?;
                for d in diags {
                    writeln!(f, "  {d}")?;
                }
                Ok(())
            }
            RunError::Stage { stage, message } => {
                write!(f, "stage `{stage}` failed: {message}")
            }
            RunError::MissingStageOutput { figure, stage } => {
                write!(
                    f,
                    "plot bundle `{figure}` needs output of stage `{stage}` which did not run"
                )
            }
            RunError::Setup(message) => write!(f, "{message}"),
        }
    }
}

impl std::error::Error for RunError {}

#[derive(Serialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub wall_ms: u128,
}

#[derive(Serialize)]
pub struct Manifest {
    pub tool: String,
    pub config: RunConfig,
    pub seed: u64,
    /// SHA-256 of the raw input bytes; auditable against data drift.
    pub input_digest: String,
    pub panel_days: usize,
    pub stages: Vec<StageRecord>,
    pub outputs: Vec<String>,
}

pub struct RunSummary {
    pub manifest: Manifest,
}

pub fn input_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("sha256:{:x}", hasher.finalize())
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), RunError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)
        .and_then(|()| std::fs::rename(&tmp, path))
        .map_err(|e| RunError::Setup(format!("writing {}: {e}", path.display())))
}

struct RunState {
    panel: Vec<PairedDay<f64>>,
    divergence: Option<DivergenceSeries<f64>>,
    break_model: Option<BreakModel<f64>>,
    tails: Option<TailRatioSeries<f64>>,
    gpd_profiles: Option<Vec<(Metric, StabilityProfile<f64>)>>,
    comparisons: Option<MetricComparisons>,
    smooth_rows: Option<Vec<reports::SmoothRow>>,
}

impl RunState {
    fn new(panel: Vec<PairedDay<f64>>) -> Self {
        Self {
            panel,
            divergence: None,
            break_model: None,
            tails: None,
            gpd_profiles: None,
            comparisons: None,
            smooth_rows: None,
        }
    }

    fn metric_pmfs(&self, metric: Metric) -> Vec<DailyPmf<f64>> {
        self.panel
            .iter()
            .map(|d| match metric {
                Metric::Nights => d.nights.clone(),
                Metric::Gbv => d.gbv.clone(),
            })
            .collect()
    }

    fn divergence(&mut self, stage: Stage) -> Result<&DivergenceSeries<f64>, RunError> {
        if self.divergence.is_none() {
            let series = divergence_series(&self.panel).map_err(|e| stage_err(stage, e))?;
            self.divergence = Some(series);
        }
        Ok(self.divergence.as_ref().unwrap())
    }

    fn break_model(&mut self, config: &RunConfig) -> Result<&BreakModel<f64>, RunError> {
        if self.break_model.is_none() {
            let series = self.divergence(Stage::Breaks)?.w1().to_vec();
            let model = bai_perron(&series, config.max_breaks, config.trim)
                .map_err(|e| stage_err(Stage::Breaks, e))?;
            self.break_model = Some(model);
        }
        Ok(self.break_model.as_ref().unwrap())
    }

    fn comparisons(
        &mut self,
        config: &RunConfig,
        stage: Stage,
    ) -> Result<&MetricComparisons, RunError> {
        let _ = config;
        if self.comparisons.is_none() {
            let mut all = Vec::new();
            for metric in [Metric::Nights, Metric::Gbv] {
                let pmfs = self.metric_pmfs(metric);
                let mut days = Vec::with_capacity(pmfs.len());
                for (pmf, result) in pmfs.iter().zip(compare_days(&pmfs)) {
                    match result {
                        Ok(cmp) => days.push(cmp),
                        Err(e) => {
                            return Err(RunError::Stage {
                                stage,
                                message: format!("{} {}: {e}", pmf.date(), metric),
                            })
                        }
                    }
                }
                all.push((metric, days));
            }
            self.comparisons = Some(all);
        }
        Ok(self.comparisons.as_ref().unwrap())
    }

    fn smooth_rows(
        &mut self,
        config: &RunConfig,
        stage: Stage,
    ) -> Result<&Vec<reports::SmoothRow>, RunError> {
        if self.smooth_rows.is_none() {
            use rayon::prelude::*;
            let mut rows = Vec::new();
            for metric in [Metric::Nights, Metric::Gbv] {
                let pmfs = self.metric_pmfs(metric);
                let fitted: Vec<_> = pmfs
                    .par_iter()
                    .map(|x| {
                        let fit = smooth_pmf(x, config.k_init, config.k_max)?;
                        let (crps, kld) = score_smoother(&fit, x)?;
                        Ok::<_, leadtime_core::Error>((x.date(), fit, crps, kld))
                    })
                    .collect();
                for result in fitted {
                    match result {
                        Ok((date, fit, crps, kld)) => rows.push(reports::SmoothRow {
                            date,
                            metric,
                            fit,
                            crps,
                            kld,
                        }),
                        Err(e) => {
                            return Err(RunError::Stage {
                                stage,
                                message: format!("{metric}: {e}"),
                            })
                        }
                    }
                }
            }
            self.smooth_rows = Some(rows);
        }
        Ok(self.smooth_rows.as_ref().unwrap())
    }
}

fn stage_err(stage: Stage, e: leadtime_core::Error) -> RunError {
    RunError::Stage {
        stage,
        message: e.to_string(),
    }
}

/// Executes a full pipeline run. Returns the manifest that was written.
pub fn run(config: &RunConfig) -> Result<RunSummary, RunError> {
    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| RunError::Setup(format!("creating output dir: {e}")))?;
    if config.stages.is_empty() {
        return Err(RunError::Setup("no stages requested".into()));
    }

    let input_bytes = std::fs::read(&config.input_path)
        .map_err(|e| RunError::Input(vec![format!("{}: {e}", config.input_path.display())]))?;
    let digest = input_digest(&input_bytes);
    let input_text = String::from_utf8(input_bytes)
        .map_err(|_| RunError::Input(vec!["input is not valid UTF-8".into()]))?;

    let mut stage_records: Vec<StageRecord> = Vec::new();
    let mut outputs: Vec<String> = Vec::new();
    let write_out = |name: &str, contents: &str, outputs: &mut Vec<String>| {
        let path = config.output_dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| RunError::Setup(format!("creating {}: {e}", parent.display())))?;
        }
        write_atomic(&path, contents)?;
        outputs.push(name.to_string());
        Ok::<(), RunError>(())
    };

    // Acquire the panel, either from the simulate stage or the input CSV.
    let panel = if config.wants(Stage::Simulate) {
        let start = Instant::now();
        let mut spec: ScenarioSpec<f64> = serde_json::from_str(&input_text)
            .map_err(|e| RunError::Input(vec![format!("scenario: {e}")]))?;
        if let Some(seed) = config.simulate_seed {
            spec.seed = seed;
        }
        let panel = generate_panel(&spec).map_err(|e| stage_err(Stage::Simulate, e))?;
        write_out(
            "panel.csv",
            &leadtime_core::io::panel_to_csv(&panel),
            &mut outputs,
        )?;
        stage_records.push(StageRecord {
            stage: Stage::Simulate,
            wall_ms: start.elapsed().as_millis(),
        });
        panel
    } else {
        match parse_panel::<f64>(&input_text, &ReadOptions::default()) {
            Ok(read) => read.days,
            Err(leadtime_core::Error::InvalidPanel(diags)) => return Err(RunError::Input(diags)),
            Err(e) => return Err(RunError::Input(vec![e.to_string()])),
        }
    };

    let mut state = RunState::new(panel);

    for stage in config.ordered_stages() {
        if stage == Stage::Simulate {
            continue;
        }
        let start = Instant::now();
        match stage {
            Stage::Simulate => unreachable!(),
            Stage::Divergence => {
                let series = state.divergence(stage)?;
                let csv = reports::divergence_csv(series);
                let summary = {
                    let boot = leadtime_core::bootstrap::block_bootstrap_mean(
                        series.w1(),
                        config.bootstrap_replicates,
                        config.seed,
                    )
                    .map_err(|e| stage_err(stage, e))?;
                    reports::DivergenceSummary {
                        mean_w1: boot.point,
                        ci_low: boot.ci_low,
                        ci_high: boot.ci_high,
                        replicates: boot.replicates,
                        block_len: boot.block_len,
                    }
                };
                write_out("divergence.csv", &csv, &mut outputs)?;
                write_out("divergence_summary.json", &to_json(&summary)?, &mut outputs)?;
            }
            Stage::Breaks => {
                state.break_model(config)?;
                let series = state.divergence.as_ref().unwrap();
                let model = state.break_model.as_ref().unwrap();
                let report = reports::break_report(series, model);
                write_out("breaks.json", &to_json(&report)?, &mut outputs)?;
                write_out(
                    "segments.csv",
                    &reports::segments_csv(series, model),
                    &mut outputs,
                )?;
            }
            Stage::Tails => {
                let tails = tail_ratio_series(&state.panel, &config.tail_thresholds)
                    .map_err(|e| stage_err(stage, e))?;
                write_out("tails.csv", &reports::tails_csv(&tails), &mut outputs)?;
                state.tails = Some(tails);
            }
            Stage::Gpd => {
                let mut profiles = Vec::new();
                for metric in [Metric::Nights, Metric::Gbv] {
                    let pool = state.metric_pmfs(metric);
                    let profile = stability_sweep(
                        &pool,
                        &config.gpd_thresholds,
                        config.draws_per_day,
                        config.seed,
                        config.jitter,
                    )
                    .map_err(|e| stage_err(stage, e))?;
                    profiles.push((metric, profile));
                }
                write_out("gpd.csv", &reports::gpd_csv(&profiles), &mut outputs)?;
                state.gpd_profiles = Some(profiles);
            }
            Stage::Fit => {
                let comparisons = state.comparisons(config, stage)?;
                let mut all: Vec<DayComparison<f64>> = Vec::new();
                let mut wins = Vec::new();
                for (metric, days) in comparisons {
                    all.extend(days.iter().cloned());
                    if let Some(report) = reports::win_report(*metric, days) {
                        wins.push(report);
                    }
                }
                write_out("fits.csv", &reports::fits_csv(&all), &mut outputs)?;
                write_out(
                    "comparisons.csv",
                    &reports::comparisons_csv(&all),
                    &mut outputs,
                )?;
                write_out("wins.json", &to_json(&wins)?, &mut outputs)?;
            }
            Stage::Smooth => {
                let rows = state.smooth_rows(config, stage)?;
                write_out("smoother.csv", &reports::smoother_csv(rows), &mut outputs)?;
            }
            Stage::Score => {
                state.comparisons(config, stage)?;
                state.smooth_rows(config, stage)?;
                let rows = build_score_rows(&state).map_err(|e| stage_err(stage, e))?;
                write_out("scores.csv", &reports::scores_csv(&rows), &mut outputs)?;
                write_out(
                    "scores_summary.json",
                    &to_json(&reports::score_summary(&rows))?,
                    &mut outputs,
                )?;
            }
        }
        stage_records.push(StageRecord {
            stage,
            wall_ms: start.elapsed().as_millis(),
        });
    }

    // Plot-ready bundles for whatever ran.
    let mut figures = vec![Figure::Pooled];
    if state.divergence.is_some() {
        figures.push(Figure::Divergence);
    }
    if state.break_model.is_some() {
        figures.push(Figure::Breaks);
    }
    if state.tails.is_some() {
        figures.push(Figure::TailRatios);
        figures.push(Figure::TailMass);
    }
    if state.gpd_profiles.is_some() {
        figures.push(Figure::Stability);
    }
    if state.comparisons.is_some() {
        figures.push(Figure::CeHistograms);
    }
    let inputs = PlotInputs {
        panel: &state.panel,
        divergence: state.divergence.as_ref(),
        break_model: state.break_model.as_ref(),
        tails: state.tails.as_ref(),
        gpd_profiles: state.gpd_profiles.as_deref(),
        comparisons: state.comparisons.as_ref(),
    };
    for (name, contents) in emit_plot_data(&inputs, &figures)? {
        write_out(&name, &contents, &mut outputs)?;
    }

    let manifest = Manifest {
        tool: format!("leadtime-lab {}", env!("CARGO_PKG_VERSION")),
        config: config.clone(),
        seed: config.seed,
        input_digest: digest,
        panel_days: state.panel.len(),
        stages: stage_records,
        outputs,
    };
    write_atomic(
        &config.output_dir.join("manifest.json"),
        &to_json(&manifest)?,
    )?;
    Ok(RunSummary { manifest })
}

fn build_score_rows(state: &RunState) -> Result<Vec<reports::ScoreRow>, leadtime_core::Error> {
    let mut rows = Vec::new();
    let comparisons = state.comparisons.as_ref().expect("fit results computed");
    let smooth_rows = state.smooth_rows.as_ref().expect("smooth results computed");
    for (metric, days) in comparisons {
        for cmp in days {
            let x = state
                .panel
                .iter()
                .find(|d| d.date == cmp.date)
                .map(|d| match metric {
                    Metric::Nights => &d.nights,
                    Metric::Gbv => &d.gbv,
                })
                .expect("comparison dates come from the panel");
            for fit in &cmp.fits {
                let crps = leadtime_core::divergence::crps(&fit.cdf(), x)?;
                let as_pmf = DailyPmf::new(x.date(), x.metric(), fit.induced_pmf.clone())?;
                let kld = leadtime_core::divergence::kld(x, &as_pmf);
                rows.push(reports::ScoreRow {
                    date: cmp.date,
                    metric: *metric,
                    model: fit.params.family.to_string(),
                    crps,
                    kld,
                });
            }
        }
    }
    for row in smooth_rows {
        rows.push(reports::ScoreRow {
            date: row.date,
            metric: row.metric,
            model: "smoother".to_string(),
            crps: row.crps,
            kld: row.kld,
        });
    }
    Ok(rows)
}

fn to_json<T: Serialize>(value: &T) -> Result<String, RunError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| RunError::Setup(format!("serializing report: {e}")))
}

/// Generates a panel from a scenario file and writes it in the standard
/// panel format. Backs the `simulate` subcommand.
pub fn simulate_to_csv(
    scenario_path: &Path,
    output_path: &Path,
    seed_override: Option<u64>,
) -> Result<usize, RunError> {
    let text = std::fs::read_to_string(scenario_path)
        .map_err(|e| RunError::Input(vec![format!("{}: {e}", scenario_path.display())]))?;
    let mut spec: ScenarioSpec<f64> =
        serde_json::from_str(&text).map_err(|e| RunError::Input(vec![format!("scenario: {e}")]))?;
    if let Some(seed) = seed_override {
        spec.seed = seed;
    }
    let panel = generate_panel(&spec).map_err(|e| stage_err(Stage::Simulate, e))?;
    if let Some(parent) = output_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| RunError::Setup(format!("creating {}: {e}", parent.display())))?;
        }
    }
    write_atomic(output_path, &leadtime_core::io::panel_to_csv(&panel))?;
    Ok(panel.len())
}
