//! The JSON run summary. Non-finite numbers serialize as `null`.

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::regime::Theory;

pub const SCHEMA_VERSION: &str = "moodyn/1";

/// The schema shipped with the binary.
pub const SCHEMA: &str = include_str!("../schemas/summary.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamsEcho {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub q: f64,
    pub t0: f64,
    pub h: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
}

impl From<&moodyn_core::DynParams> for ParamsEcho {
    fn from(p: &moodyn_core::DynParams) -> Self {
        ParamsEcho {
            alpha: p.alpha,
            beta: p.beta,
            p: p.p,
            q: p.q,
            t0: p.t0,
            h: p.h,
            t_end: p.t_end,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathParamsEcho {
    pub beta: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalState {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FlagCounts {
    pub degenerate: usize,
    pub tie: usize,
    pub warm_reset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEcho {
    pub tail_fraction: f64,
    pub f_inf: Vec<f64>,
    pub spread: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEntry {
    pub quantity: &'static str,
    pub window: [f64; 2],
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub residual: Option<f64>,
    pub theory: Option<f64>,
    pub consistent: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorEntry {
    pub name: String,
    /// `null` when nothing was checked.
    pub worst: Option<f64>,
    pub worst_t: Option<f64>,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormReport {
    pub samples: usize,
    pub max_error: f64,
    pub z2_min: f64,
    pub z2_max: f64,
    pub all_certified: bool,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub label: String,
    pub status: Status,
    pub error: Option<String>,
    pub params: ParamsEcho,
    pub path_params: Option<PathParamsEcho>,
    pub steps: usize,
    pub final_state: Option<FinalState>,
    pub flag_counts: FlagCounts,
    pub limit_values: Option<LimitEcho>,
    pub final_path_distance: Option<f64>,
    pub theory: Theory,
    pub rates: Vec<RateEntry>,
    pub monitors: Vec<MonitorEntry>,
    pub energy_w_max_increase: Vec<f64>,
    pub energy_w_bound: f64,
    pub closed_form: Option<ClosedFormReport>,
    /// All monitors within bounds; `null` when none ran.
    pub passed: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary<'a> {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub config: &'a ExperimentConfig,
    pub cells: Vec<CellSummary>,
    pub passed: Option<bool>,
    pub wall_clock_seconds: Option<f64>,
}

impl RunSummary<'_> {
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("summary serializes");
        out.push(b'\n');
        out
    }
}

pub fn cell_json(cell: &CellSummary) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(cell).expect("summary serializes");
    out.push(b'\n');
    out
}
