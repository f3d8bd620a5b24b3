//! The four subcommands over a parsed configuration.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Channel, ExperimentConfig, Format, PathSource};
use crate::run::{load_problem, run_cell, run_closed_form, CellOutcome, RunError};
use crate::summary::{cell_json, CellSummary, RunSummary, Status, SCHEMA_VERSION};
use crate::table::{fmt_f64, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Verify,
    Rates,
    Path,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Rates => "rates",
            Command::Path => "path",
        }
    }

    fn summary_file(self) -> &'static str {
        match self {
            Command::Verify => "verify.json",
            _ => "summary.json",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    /// Overrides `output_dir`.
    pub out: Option<PathBuf>,
    /// Record wall-clock time in the summary (breaks byte-identical output).
    pub timing: bool,
    /// Worker threads for sweep cells; `None` lets rayon decide.
    pub threads: Option<usize>,
}

/// What a finished command reports back to the caller.
#[derive(Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub out_dir: PathBuf,
    pub cells: Vec<CellSummary>,
    /// Human-readable report lines.
    pub report: Vec<String>,
}

pub fn exit_code(e: &RunError) -> i32 {
    match e {
        RunError::Config(_) => EXIT_CONFIG,
        RunError::Numeric(_) => EXIT_NUMERIC,
        RunError::Io(_) => EXIT_IO,
    }
}

fn channels_for(cmd: Command, cfg: &ExperimentConfig) -> BTreeSet<Channel> {
    let mut set: BTreeSet<Channel> = cfg.outputs.channels.iter().copied().collect();
    match cmd {
        Command::Simulate => {}
        Command::Verify => {
            set.insert(Channel::Monitors);
        }
        Command::Rates => {
            set.insert(Channel::Rates);
        }
        Command::Path => {
            set = BTreeSet::from([Channel::PathDistance]);
        }
    }
    set
}

fn write_files(dir: &Path, files: &[(PathBuf, Vec<u8>)]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in files {
        std::fs::write(dir.join(name), body)?;
    }
    Ok(())
}

pub fn execute(cmd: Command, cfg: &ExperimentConfig, opts: &Options) -> Result<Outcome, RunError> {
    let started = Instant::now();
    let out_dir = opts.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let cells = cfg.cells();
    let closed_form = cmd == Command::Path && cfg.path_source == PathSource::ClosedForm;
    let channels = channels_for(cmd, cfg);

    let work = || -> Result<Vec<CellOutcome>, RunError> {
        if closed_form {
            return cells.par_iter().map(|c| run_closed_form(cfg, c)).collect();
        }
        let problem = load_problem(cfg)?;
        cells
            .par_iter()
            .map(|c| run_cell(cfg, &problem, c, &channels))
            .collect()
    };
    let outcomes = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| RunError::Config(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };

    let sweep = cfg.sweep.is_some();
    for o in &outcomes {
        let dir = out_dir.join(o.dir());
        let mut files = o.files.clone();
        if sweep && cfg.writes(Format::Json) {
            files.push((PathBuf::from("summary.json"), cell_json(&o.summary)));
        }
        write_files(&dir, &files)?;
    }

    let summaries: Vec<CellSummary> = outcomes.into_iter().map(|o| o.summary).collect();
    if cmd == Command::Rates {
        write_rates_table(&out_dir, cfg, &summaries)?;
    }

    let failed_numeric = summaries.iter().any(|s| s.status == Status::Error);
    let verified = match cmd {
        Command::Verify => Some(summaries.iter().all(|s| s.passed == Some(true))),
        Command::Path if closed_form => Some(summaries.iter().all(|s| s.passed == Some(true))),
        _ => None,
    };
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        command: cmd.name(),
        config: cfg,
        cells: summaries,
        passed: verified,
        wall_clock_seconds: opts.timing.then(|| started.elapsed().as_secs_f64()),
    };
    std::fs::create_dir_all(&out_dir)?;
    std::fs::write(out_dir.join(cmd.summary_file()), summary.to_json())?;

    let report = report_lines(cmd, &summary.cells);
    let exit_code = if failed_numeric {
        EXIT_NUMERIC
    } else if verified == Some(false) {
        EXIT_VERIFY
    } else {
        EXIT_OK
    };
    Ok(Outcome {
        exit_code,
        out_dir,
        cells: summary.cells,
        report,
    })
}

fn cell_name(s: &CellSummary) -> &str {
    if s.label.is_empty() {
        "run"
    } else {
        &s.label
    }
}

fn report_lines(cmd: Command, cells: &[CellSummary]) -> Vec<String> {
    let mut out = Vec::new();
    for s in cells {
        let name = cell_name(s);
        if let Some(e) = &s.error {
            out.push(format!("{name}: error: {e}"));
            continue;
        }
        match cmd {
            Command::Verify => {
                for m in &s.monitors {
                    out.push(format!(
                        "{name}: {:<16} worst {:>12} bound {:e} {}",
                        m.name,
                        m.worst.map_or("-".to_string(), |w| format!("{w:.3e}")),
                        m.bound,
                        if m.pass { "ok" } else { "FAIL" }
                    ));
                }
            }
            Command::Rates => {
                for r in &s.rates {
                    let fit = r.slope.map_or("-".to_string(), |v| format!("{v:.3}"));
                    let th = r.theory.map_or("-".to_string(), |v| format!("{v:.3}"));
                    out.push(format!("{name}: {:<9} slope {fit:>7} theory {th:>7} ({})", r.quantity, s.theory.regime));
                }
            }
            Command::Path => {
                if let Some(c) = &s.closed_form {
                    out.push(format!(
                        "{name}: {} samples, max error {:.3e}, z_2 in [{:.4}, {:.4}] {}",
                        c.samples,
                        c.max_error,
                        c.z2_min,
                        c.z2_max,
                        if c.pass { "ok" } else { "FAIL" }
                    ));
                } else if let Some(d) = s.final_path_distance {
                    out.push(format!("{name}: final distance to path {d:.6e}"));
                }
            }
            Command::Simulate => {
                if let Some(f) = &s.final_state {
                    out.push(format!("{name}: t = {} x = {:?}", f.t, f.x));
                }
            }
        }
    }
    out
}

#[derive(Serialize)]
struct RateRow<'a> {
    label: &'a str,
    p: f64,
    q: f64,
    regime: &'static str,
    quantity: &'static str,
    slope: Option<f64>,
    theory: Option<f64>,
    consistent: Option<bool>,
}

fn write_rates_table(dir: &Path, cfg: &ExperimentConfig, cells: &[CellSummary]) -> std::io::Result<()> {
    let mut rows = Vec::new();
    for s in cells {
        for r in &s.rates {
            rows.push(RateRow {
                label: cell_name(s),
                p: s.params.p,
                q: s.params.q,
                regime: s.theory.regime,
                quantity: r.quantity,
                slope: r.slope,
                theory: r.theory,
                consistent: r.consistent,
            });
        }
    }
    std::fs::create_dir_all(dir)?;
    if cfg.writes(Format::Csv) {
        let mut t = Table::new(["label", "p", "q", "regime", "quantity", "slope", "theory", "consistent"]);
        let o = |v: Option<f64>| v.map_or_else(String::new, fmt_f64);
        for r in &rows {
            t.push(vec![
                r.label.to_string(),
                fmt_f64(r.p),
                fmt_f64(r.q),
                r.regime.to_string(),
                r.quantity.to_string(),
                o(r.slope),
                o(r.theory),
                r.consistent.map_or_else(String::new, |c| c.to_string()),
            ]);
        }
        t.write(&dir.join("rates-table.csv"))?;
    }
    if cfg.writes(Format::Json) {
        let mut body = serde_json::to_vec_pretty(&rows).expect("rates serialize");
        body.push(b'\n');
        std::fs::write(dir.join("rates-table.json"), body)?;
    }
    Ok(())
}
