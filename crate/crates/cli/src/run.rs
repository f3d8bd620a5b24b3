//! Per-cell analysis: integrate (or load), derive the requested channels and
//! render them to in-memory files.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use moodyn_core::diagnostics::{Anchor, EnergySpec, MonitorConfig};
use moodyn_core::problems::{example25_closed_path, problem_by_label, Example25Config};
use moodyn_core::{
    energy_w, fit_rate, integrate, limit_values, merit_phi, monitor_inequalities_with,
    regularization_path, solve_scalarized, PathSample, Problem, Series, Trajectory,
};

use crate::config::{Cell, Channel, ExperimentConfig, Format, System};
use crate::regime::{self, Theory};
use crate::summary::{
    CellSummary, ClosedFormReport, FinalState, FlagCounts, LimitEcho, MonitorEntry, ParamsEcho,
    PathParamsEcho, RateEntry, Status,
};
use crate::svg::{emit_svg, Axes, PlotSeries, Scale};
use crate::table::{self, fmt_f64, trajectory_table, Table};

/// Worst slack allowed on every monitor.
pub const MONITOR_BOUND: f64 = 0.05;
/// Per-step increase allowed on `W_i`, in units of `h²`.
pub const W_SLACK: f64 = 50.0;
/// Allowed gap between the numeric and the closed-form path.
pub const CLOSED_FORM_TOL: f64 = 1e-5;
/// A fitted slope is consistent when it is at most this much above theory.
pub const RATE_MARGIN: f64 = 0.3;
const SVG_POINTS: usize = 2000;

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numeric(String),
    Io(std::io::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config: {m}"),
            RunError::Numeric(m) => write!(f, "numeric: {m}"),
            RunError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

fn numeric(e: impl fmt::Display) -> RunError {
    RunError::Numeric(e.to_string())
}

/// Resolves the problem and checks the initial data against it.
pub fn load_problem(cfg: &ExperimentConfig) -> Result<Problem, RunError> {
    let problem = problem_by_label(&cfg.problem).map_err(|e| RunError::Config(e.to_string()))?;
    let n = problem.n();
    for (name, v) in [("x0", &cfg.x0), ("v0", &cfg.v0)] {
        if v.len() != n {
            return Err(RunError::Config(format!(
                "`{name}` has {} entries, problem `{}` lives in dimension {n}",
                v.len(),
                cfg.problem
            )));
        }
    }
    Ok(problem)
}

/// One cell's summary plus the files it produced, relative to its directory.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub summary: CellSummary,
    pub files: Vec<(PathBuf, Vec<u8>)>,
}

impl CellOutcome {
    pub fn dir(&self) -> PathBuf {
        PathBuf::from(&self.summary.label)
    }
}

fn empty_summary(cell: &Cell, cfg: &ExperimentConfig) -> CellSummary {
    let params = &cell.params;
    CellSummary {
        label: cell.label.clone(),
        status: Status::Ok,
        error: None,
        params: ParamsEcho::from(params),
        path_params: (cell.path_params.beta > 0.0).then(|| PathParamsEcho {
            beta: cell.path_params.beta,
            p: cell.path_params.p,
        }),
        steps: 0,
        final_state: None,
        flag_counts: FlagCounts::default(),
        limit_values: None,
        final_path_distance: None,
        theory: theory_for(cfg, params),
        rates: Vec::new(),
        monitors: Vec::new(),
        energy_w_max_increase: Vec::new(),
        energy_w_bound: W_SLACK * params.h * params.h,
        closed_form: None,
        passed: None,
    }
}

/// The predicted exponents; the unregularized system has its own rates.
pub fn theory_for(cfg: &ExperimentConfig, params: &moodyn_core::DynParams) -> Theory {
    if cfg.system == System::Mavd {
        let ok = params.alpha >= 3.0;
        return Theory {
            regime: if ok { "unregularized" } else { "unregularized with alpha<3" },
            merit: ok.then_some(-2.0),
            velocity: ok.then_some(-1.0),
            distance: None,
        };
    }
    regime::classify(params.p, params.q, params.alpha, params.beta)
}

fn log_positive(s: PlotSeries) -> Option<PlotSeries> {
    let (t, y): (Vec<f64>, Vec<f64>) = s
        .t
        .iter()
        .zip(&s.y)
        .filter(|(t, y)| **t > 0.0 && **y > 0.0 && y.is_finite())
        .map(|(t, y)| (*t, *y))
        .unzip();
    (!t.is_empty()).then(|| PlotSeries::new(s.label, t, y))
}

fn finite(s: PlotSeries) -> Option<PlotSeries> {
    let (t, y): (Vec<f64>, Vec<f64>) = s
        .t
        .iter()
        .zip(&s.y)
        .filter(|(_, y)| y.is_finite())
        .map(|(t, y)| (*t, *y))
        .unzip();
    (!t.is_empty()).then(|| PlotSeries::new(s.label, t, y))
}

/// Output collector honouring the configured formats.
struct Files<'a> {
    cfg: &'a ExperimentConfig,
    out: Vec<(PathBuf, Vec<u8>)>,
}

impl Files<'_> {
    fn csv(&mut self, name: &str, t: &Table) {
        if self.cfg.writes(Format::Csv) {
            self.out.push((PathBuf::from(name), t.to_csv()));
        }
    }

    fn svg(&mut self, name: &str, series: Vec<Option<PlotSeries>>, axes: Axes) {
        if !self.cfg.writes(Format::Svg) {
            return;
        }
        let series: Vec<PlotSeries> = series.into_iter().flatten().map(|s| s.thinned(SVG_POINTS)).collect();
        // nothing plottable (e.g. a merit that is exactly zero) means no file
        if let Ok(text) = emit_svg(&series, &axes) {
            self.out.push((PathBuf::from(name), text.into_bytes()));
        }
    }
}

fn monitor_entry(name: &str, series: &[f64], t: &[f64], bound: f64) -> MonitorEntry {
    let worst = series.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let worst_t = series
        .iter()
        .zip(t)
        .max_by(|a, b| a.0.total_cmp(b.0))
        .map(|(_, t)| *t);
    MonitorEntry {
        name: name.to_string(),
        worst: worst.is_finite().then_some(worst),
        worst_t,
        bound,
        pass: !(worst > bound) && !worst.is_nan(),
    }
}

fn rate_entry(quantity: &'static str, series: &Series, window: [f64; 2], theory: Option<f64>) -> RateEntry {
    match fit_rate(series, window) {
        Ok(f) => RateEntry {
            quantity,
            window,
            slope: Some(f.slope),
            intercept: Some(f.intercept),
            residual: Some(f.residual),
            theory,
            consistent: regime::consistent(f.slope, theory, RATE_MARGIN),
            error: None,
        },
        Err(e) => RateEntry {
            quantity,
            window,
            slope: None,
            intercept: None,
            residual: None,
            theory,
            consistent: None,
            error: Some(e.to_string()),
        },
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, fmt_f64)
}

/// Analyses one cell with `channels` (the configured ones plus whatever the
/// command forces). A numeric failure is reported in the summary, not as an
/// `Err`; only configuration and input problems abort.
pub fn run_cell(
    cfg: &ExperimentConfig,
    problem: &Problem,
    cell: &Cell,
    channels: &BTreeSet<Channel>,
) -> Result<CellOutcome, RunError> {
    let mut summary = empty_summary(cell, cfg);
    let mut files = Files { cfg, out: Vec::new() };
    let traj = match &cfg.input {
        Some(path) => table::read_trajectory(path, &cell.params, problem.n(), problem.m())
            .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?,
        None => match integrate(problem, &cell.params, &cfg.x0, &cfg.v0) {
            Ok(t) => t,
            Err(e) => {
                summary.status = Status::Error;
                summary.error = Some(e.to_string());
                return Ok(CellOutcome { summary, files: files.out });
            }
        },
    };
    if let Err(e) = analyse(cfg, problem, cell, channels, &traj, &mut summary, &mut files) {
        summary.status = Status::Error;
        summary.error = Some(e.to_string());
    }
    Ok(CellOutcome { summary, files: files.out })
}

fn analyse(
    cfg: &ExperimentConfig,
    problem: &Problem,
    cell: &Cell,
    channels: &BTreeSet<Channel>,
    traj: &Trajectory,
    summary: &mut CellSummary,
    files: &mut Files<'_>,
) -> Result<(), RunError> {
    let params = &traj.params;
    let m = problem.m();
    let n = problem.n();
    let wants = |c| channels.contains(&c);

    summary.steps = traj.len();
    let last = traj.last();
    summary.final_state = Some(FinalState {
        t: last.t,
        x: last.x.clone(),
        v: last.v.clone(),
    });
    for f in &traj.flags {
        summary.flag_counts.degenerate += f.degenerate_velocity as usize;
        summary.flag_counts.tie += f.tie as usize;
        summary.flag_counts.warm_reset += f.warm_reset as usize;
    }
    let lim = limit_values(problem, traj, cfg.outputs.tail_fraction).map_err(numeric)?;
    summary.limit_values = Some(LimitEcho {
        tail_fraction: cfg.outputs.tail_fraction,
        f_inf: lim.f_inf,
        spread: lim.spread,
    });

    let times = traj.times();
    if wants(Channel::Trajectory) {
        files.csv("trajectory.csv", &trajectory_table(traj, m));
        let series = (0..n)
            .map(|i| {
                finite(PlotSeries::new(
                    format!("x_{}", i + 1),
                    times.clone(),
                    traj.states.iter().map(|s| s.x[i]).collect(),
                ))
            })
            .collect();
        files.svg(
            "trajectory.svg",
            series,
            Axes::new(Scale::Linear, Scale::Linear, "trajectory", "t", "x"),
        );
    }

    let needs_path = [Channel::Merit, Channel::PathDistance, Channel::Energies, Channel::Rates, Channel::Monitors]
        .into_iter()
        .any(wants);
    let path: Vec<PathSample> = if needs_path && cell.path_params.beta > 0.0 {
        regularization_path(problem, traj, &cell.path_params, cfg.outputs.path_stride).map_err(numeric)?
    } else {
        Vec::new()
    };
    summary.final_path_distance = path.last().map(|s| s.distance);
    let path_t: Vec<f64> = path.iter().map(|s| s.t).collect();
    let path_state = |s: &PathSample| {
        let k = (((s.t - params.t0) / params.h).round().max(0.0) as usize).min(traj.len() - 1);
        &traj.states[k]
    };

    let mut merit_hi = Vec::new();
    if wants(Channel::Merit) || wants(Channel::Rates) {
        let mut t = Table::new(["t", "phi_lo", "phi_hi", "phi_t", "gap_bound"]);
        let mut lo = Vec::new();
        for s in &path {
            let mi = merit_phi(problem, &path_state(s).x, s.t.max(params.t0), &cell.path_params).map_err(numeric)?;
            t.push_floats(&[s.t, mi.lo, mi.hi, s.phi_t, s.gap_bound]);
            lo.push(mi.lo);
            merit_hi.push(mi.hi);
        }
        if wants(Channel::Merit) {
            files.csv("merit.csv", &t);
            files.svg(
                "merit.svg",
                vec![
                    log_positive(PlotSeries::new("phi upper", path_t.clone(), merit_hi.clone())),
                    log_positive(PlotSeries::new("phi lower", path_t.clone(), lo)),
                    log_positive(PlotSeries::new(
                        "phi_t",
                        path_t.clone(),
                        path.iter().map(|s| s.phi_t).collect(),
                    )),
                ],
                Axes::new(Scale::Log, Scale::Log, "merit", "t", "phi"),
            );
        }
    }

    if wants(Channel::PathDistance) {
        let header = std::iter::once("t".to_string())
            .chain((1..=n).map(|i| format!("z_{i}")))
            .chain(["distance", "phi_t", "gap_bound", "certified"].map(String::from));
        let mut t = Table::new(header);
        for s in &path {
            let mut row = vec![fmt_f64(s.t)];
            row.extend(s.z.iter().chain([&s.distance, &s.phi_t, &s.gap_bound]).map(|v| fmt_f64(*v)));
            row.push(s.certified.to_string());
            t.push(row);
        }
        files.csv("path.csv", &t);
        files.svg(
            "path-distance.svg",
            vec![log_positive(PlotSeries::new(
                "|x - z|",
                path_t.clone(),
                path.iter().map(|s| s.distance).collect(),
            ))],
            Axes::new(Scale::Log, Scale::Log, "distance to the regularization path", "t", "|x - z|"),
        );
    }

    if wants(Channel::Energies) || wants(Channel::Monitors) {
        let ws: Vec<Series> = (0..m).map(|i| energy_w(problem, traj, i)).collect::<Result<_, _>>().map_err(numeric)?;
        summary.energy_w_max_increase = ws.iter().map(Series::max_increase).collect();
        if wants(Channel::Energies) {
            let anchor = if params.beta > 0.0 {
                Anchor::Path
            } else {
                Anchor::Fixed(path.last().map_or_else(|| traj.last().x.clone(), |s| s.z.clone()))
            };
            let spec = EnergySpec::lambda_form(params.q, cfg.outputs.monitor_lambda, anchor.clone());
            let header = std::iter::once("t".to_string())
                .chain((1..=m).map(|i| format!("W_{i}")))
                .chain(std::iter::once("E".to_string()));
            let mut t = Table::new(header);
            let idx = moodyn_core::sample_indices(traj.len(), cfg.outputs.path_stride);
            let mut e_series = Vec::new();
            for (j, &k) in idx.iter().enumerate() {
                let s = &traj.states[k];
                let z = match &anchor {
                    Anchor::Fixed(z) => Some(z.as_slice()),
                    Anchor::Path => path.get(j).map(|p| p.z.as_slice()),
                };
                let e = z.map_or(f64::NAN, |z| spec.eval(problem, params, s.t, &s.x, &s.v, z));
                e_series.push(e);
                let mut row = vec![s.t];
                row.extend(ws.iter().map(|w| w.y[k]));
                row.push(e);
                t.push_floats(&row);
            }
            files.csv("energies.csv", &t);
            let mut series: Vec<Option<PlotSeries>> = ws
                .iter()
                .enumerate()
                .map(|(i, w)| finite(PlotSeries::new(format!("W_{}", i + 1), w.t.clone(), w.y.clone())))
                .collect();
            let e_t: Vec<f64> = idx.iter().map(|&k| times[k]).collect();
            series.push(finite(PlotSeries::new("E", e_t, e_series)));
            files.svg(
                "energies.svg",
                series,
                Axes::new(Scale::Linear, Scale::Linear, "energies", "t", "energy"),
            );
        }
    }

    if wants(Channel::Rates) {
        let window = cfg.outputs.rate_window;
        let theory = summary.theory;
        let merit = Series::new(path_t.clone(), merit_hi.clone());
        let speed = Series::new(times.clone(), traj.states.iter().map(|s| moodyn_core::linalg::norm(&s.v)).collect());
        let dist = Series::new(path_t.clone(), path.iter().map(|s| s.distance).collect());
        summary.rates = vec![
            rate_entry("merit", &merit, window, theory.merit),
            rate_entry("velocity", &speed, window, theory.velocity),
            rate_entry("distance", &dist, window, theory.distance),
        ];
        let mut t = Table::new([
            "quantity", "slope", "intercept", "residual", "window_lo", "window_hi", "theory", "consistent", "error",
        ]);
        for r in &summary.rates {
            t.push(vec![
                r.quantity.to_string(),
                opt(r.slope),
                opt(r.intercept),
                opt(r.residual),
                fmt_f64(r.window[0]),
                fmt_f64(r.window[1]),
                opt(r.theory),
                r.consistent.map_or_else(String::new, |c| c.to_string()),
                r.error.clone().unwrap_or_default(),
            ]);
        }
        files.csv("rates.csv", &t);
        if cfg.writes(Format::Json) {
            let mut body = serde_json::to_vec_pretty(&summary.rates).expect("rates serialize");
            body.push(b'\n');
            files.out.push((PathBuf::from("rates.json"), body));
        }
        files.svg(
            "rates.svg",
            vec![
                log_positive(PlotSeries::new("phi upper", merit.t, merit.y)),
                log_positive(PlotSeries::new("|v|", speed.t, speed.y)),
                log_positive(PlotSeries::new("|x - z|", dist.t, dist.y)),
            ],
            Axes::new(Scale::Log, Scale::Log, "decay", "t", "value"),
        );
    }

    if wants(Channel::Monitors) {
        let mcfg = MonitorConfig {
            r: params.q,
            lambda: cfg.outputs.monitor_lambda,
            anchor: None,
        };
        let report = monitor_inequalities_with(problem, traj, &path, &mcfg).map_err(numeric)?;
        let mut entries: Vec<MonitorEntry> = report
            .summaries()
            .iter()
            .map(|s| monitor_entry(s.name, &s.slack, &s.t, MONITOR_BOUND))
            .collect();
        let ws: Vec<Series> = (0..m).map(|i| energy_w(problem, traj, i)).collect::<Result<_, _>>().map_err(numeric)?;
        for (i, w) in ws.iter().enumerate() {
            let inc: Vec<f64> = w.y.windows(2).map(|p| p[1] - p[0]).collect();
            entries.push(monitor_entry(&format!("energy_w_{}", i + 1), &inc, &w.t[1.min(w.t.len())..], summary.energy_w_bound));
        }
        let mut t = Table::new(["name", "worst", "worst_t", "bound", "pass"]);
        for e in &entries {
            t.push(vec![e.name.clone(), opt(e.worst), opt(e.worst_t), fmt_f64(e.bound), e.pass.to_string()]);
        }
        files.csv("monitors.csv", &t);
        files.svg(
            "monitors.svg",
            report
                .summaries()
                .iter()
                .map(|s| finite(PlotSeries::new(s.name, s.t.clone(), s.slack.clone())))
                .collect(),
            Axes::new(Scale::Log, Scale::Linear, "monitor slack", "t", "lhs - rhs"),
        );
        summary.passed = Some(entries.iter().all(|e| e.pass));
        summary.monitors = entries;
    }
    Ok(())
}

/// Numeric against closed-form path for the `example25` problem at
/// `t0, t0 + stride·h, …` and `T`.
pub fn run_closed_form(cfg: &ExperimentConfig, cell: &Cell) -> Result<CellOutcome, RunError> {
    if cfg.problem != "example25" {
        return Err(RunError::Config(format!(
            "path_source = closed-form needs problem = example25, got `{}`",
            cfg.problem
        )));
    }
    let params = &cell.path_params;
    let ecfg = Example25Config {
        beta: params.beta,
        p: params.p,
        ..Example25Config::default()
    };
    if !(params.t0 >= ecfg.t0() * (1.0 - 1e-12)) {
        return Err(RunError::Config(format!(
            "closed-form path starts at t0 = {}, got t0 = {}",
            ecfg.t0(),
            params.t0
        )));
    }
    let problem = moodyn_core::problems::example25_problem(&ecfg);
    let mut summary = empty_summary(cell, cfg);
    let mut files = Files { cfg, out: Vec::new() };
    let steps = params.num_steps();
    let idx = moodyn_core::sample_indices(steps + 1, cfg.outputs.path_stride);
    let mut t = Table::new(["t", "z_1", "z_2", "z_closed_1", "z_closed_2", "error", "certified"]);
    let (mut max_err, mut z2_min, mut z2_max, mut all_cert) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY, true);
    let mut ts = Vec::new();
    let mut errs = Vec::new();
    let mut z_prev: Option<Vec<f64>> = None;
    for k in idx {
        let time = params.time(k).max(ecfg.t0());
        let (q, z) = example25_closed_path(&ecfg, time).map_err(numeric)?;
        let init = z_prev.clone().unwrap_or_else(|| vec![0.0, 0.0]);
        let res = solve_scalarized(&problem, &q, params.reg(time), &init, 1e-12).map_err(numeric)?;
        let err = res
            .z_star
            .iter()
            .zip(&z)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        max_err = max_err.max(err);
        z2_min = z2_min.min(z[1]);
        z2_max = z2_max.max(z[1]);
        all_cert &= res.certified;
        t.push(vec![
            fmt_f64(time),
            fmt_f64(res.z_star[0]),
            fmt_f64(res.z_star[1]),
            fmt_f64(z[0]),
            fmt_f64(z[1]),
            fmt_f64(err),
            res.certified.to_string(),
        ]);
        ts.push(time);
        errs.push(err);
        z_prev = Some(res.z_star);
    }
    let pass = max_err <= CLOSED_FORM_TOL && z2_min >= 2.25 && z2_max <= 2.75;
    summary.closed_form = Some(ClosedFormReport {
        samples: ts.len(),
        max_error: max_err,
        z2_min,
        z2_max,
        all_certified: all_cert,
        tolerance: CLOSED_FORM_TOL,
        pass,
    });
    summary.passed = Some(pass);
    files.csv("path.csv", &t);
    files.svg(
        "path-distance.svg",
        vec![log_positive(PlotSeries::new("numeric vs closed form", ts, errs))],
        Axes::new(Scale::Linear, Scale::Log, "closed-form path error", "t", "max abs error"),
    );
    Ok(CellOutcome { summary, files: files.out })
}
