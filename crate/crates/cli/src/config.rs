//! Run configuration shared by the CLI and the pipeline tests.

use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

/// Pipeline stages in dependency order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Simulate,
    Divergence,
    Breaks,
    Tails,
    Gpd,
    Fit,
    Smooth,
    Score,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Simulate,
        Stage::Divergence,
        Stage::Breaks,
        Stage::Tails,
        Stage::Gpd,
        Stage::Fit,
        Stage::Smooth,
        Stage::Score,
    ];
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Simulate => "simulate",
            Stage::Divergence => "divergence",
            Stage::Breaks => "breaks",
            Stage::Tails => "tails",
            Stage::Gpd => "gpd",
            Stage::Fit => "fit",
            Stage::Smooth => "smooth",
            Stage::Score => "score",
        };
        write!(f, "{name}")
    }
}

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TAIL_THRESHOLDS: [usize; 5] = [7, 30, 60, 90, 180];
pub const DEFAULT_GPD_THRESHOLDS: [usize; 8] = [60, 90, 120, 150, 180, 210, 240, 270];
pub const DEFAULT_REPLICATES: usize = 1000;
pub const DEFAULT_MAX_BREAKS: usize = 5;
pub const DEFAULT_TRIM: f64 = 0.05;
pub const DEFAULT_DRAWS_PER_DAY: usize = 1000;

/// Everything a pipeline run depends on besides the input bytes.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub input_path: PathBuf,
    pub output_dir: PathBuf,
    pub stages: Vec<Stage>,
    pub seed: u64,
    /// Seed override for the simulate stage; `None` keeps the scenario
    /// file's own seed.
    pub simulate_seed: Option<u64>,
    pub tail_thresholds: Vec<usize>,
    pub gpd_thresholds: Vec<usize>,
    pub bootstrap_replicates: usize,
    pub max_breaks: usize,
    pub trim: f64,
    pub draws_per_day: usize,
    pub jitter: bool,
    /// Smoother basis bounds.
    pub k_init: usize,
    pub k_max: usize,
}

impl RunConfig {
    pub fn new(input_path: PathBuf, output_dir: PathBuf, stages: Vec<Stage>) -> Self {
        Self {
            input_path,
            output_dir,
            stages,
            seed: DEFAULT_SEED,
            simulate_seed: None,
            tail_thresholds: DEFAULT_TAIL_THRESHOLDS.to_vec(),
            gpd_thresholds: DEFAULT_GPD_THRESHOLDS.to_vec(),
            bootstrap_replicates: DEFAULT_REPLICATES,
            max_breaks: DEFAULT_MAX_BREAKS,
            trim: DEFAULT_TRIM,
            draws_per_day: DEFAULT_DRAWS_PER_DAY,
            jitter: true,
            k_init: 20,
            k_max: 100,
        }
    }

    pub fn wants(&self, stage: Stage) -> bool {
        self.stages.contains(&stage)
    }

    /// Requested stages sorted into dependency order, deduplicated.
    pub fn ordered_stages(&self) -> Vec<Stage> {
        let mut out: Vec<Stage> = Stage::ALL
            .into_iter()
            .filter(|s| self.stages.contains(s))
            .collect();
        out.dedup();
        out
    }
}
