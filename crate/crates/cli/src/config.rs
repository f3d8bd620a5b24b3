//! Line-oriented experiment configuration.
//!
//! ```text
//! # comment
//! [experiment]
//! problem = mop-ex1
//! system = mtrigs
//! [params]
//! alpha = 4
//! ```
//!
//! Every key belongs to a section; unknown sections and keys, duplicates and
//! malformed values are errors carrying the 1-based line number.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use moodyn_core::{validate_params, DynParams, DEFAULT_EPS_TIE, DEFAULT_EPS_V};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// 1-based line, `None` for whole-file problems such as a missing key.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(line: Option<usize>, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        line,
        message: message.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    Mtrigs,
    Mavd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    Trajectory,
    Merit,
    PathDistance,
    Energies,
    Rates,
    Monitors,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::Trajectory,
        Channel::Merit,
        Channel::PathDistance,
        Channel::Energies,
        Channel::Rates,
        Channel::Monitors,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Trajectory => "trajectory",
            Channel::Merit => "merit",
            Channel::PathDistance => "path-distance",
            Channel::Energies => "energies",
            Channel::Rates => "rates",
            Channel::Monitors => "monitors",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Channel::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Svg,
    Json,
}

/// Where the `path` command takes its anchors `q` from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathSource {
    /// `q = F(x(t))` along the simulated trajectory.
    Trajectory,
    /// The closed-form anchors of the `example25` problem.
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamsConfig {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub q: f64,
    pub t0: f64,
    pub h: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub eps_v: f64,
    pub eps_tie: f64,
}

impl ParamsConfig {
    pub fn dyn_params(&self) -> DynParams {
        DynParams {
            eps_v: self.eps_v,
            eps_tie: self.eps_tie,
            ..DynParams::new(self.alpha, self.beta, self.p, self.q, self.t0, self.h, self.t_end)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputsConfig {
    pub channels: Vec<Channel>,
    /// Path samples are taken every `path_stride` states.
    pub path_stride: usize,
    /// Regularization used for the path, merit and distance channels.
    pub path_beta: f64,
    pub path_p: f64,
    pub rate_window: [f64; 2],
    pub tail_fraction: f64,
    pub monitor_lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub problem: String,
    pub system: System,
    pub params: ParamsConfig,
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
    pub outputs: OutputsConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
    pub path_source: PathSource,
    /// A recorded `trajectory.csv` to analyse instead of integrating.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
}

/// One run of a (possibly swept) configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// Sub-directory name, empty without a sweep.
    pub label: String,
    pub params: DynParams,
    pub path_params: DynParams,
}

impl ExperimentConfig {
    pub fn wants(&self, c: Channel) -> bool {
        self.outputs.channels.contains(&c)
    }

    pub fn writes(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    /// Runs in sweep order: `p` outer, `q` inner.
    pub fn cells(&self) -> Vec<Cell> {
        let base = self.params.dyn_params();
        let (ps, qs) = match &self.sweep {
            None => (None, None),
            Some(s) => (s.p.clone(), s.q.clone()),
        };
        let p_list: Vec<Option<f64>> = ps.map_or(vec![None], |v| v.into_iter().map(Some).collect());
        let q_list: Vec<Option<f64>> = qs.map_or(vec![None], |v| v.into_iter().map(Some).collect());
        let mut out = Vec::new();
        for p in &p_list {
            for q in &q_list {
                let mut params = base;
                let mut parts = Vec::new();
                if let Some(p) = p {
                    params.p = *p;
                    parts.push(format!("p_{p}"));
                }
                if let Some(q) = q {
                    params.q = *q;
                    parts.push(format!("q_{q}"));
                }
                let path_params = self.path_params_for(&params);
                out.push(Cell {
                    label: parts.join("-"),
                    params,
                    path_params,
                });
            }
        }
        out
    }

    fn path_params_for(&self, params: &DynParams) -> DynParams {
        let mut pp = *params;
        match self.system {
            System::Mtrigs => {
                pp.beta = params.beta;
                pp.p = params.p;
            }
            System::Mavd => {
                pp.beta = self.outputs.path_beta;
                pp.p = self.outputs.path_p;
            }
        }
        pp
    }
}

type Section = BTreeMap<String, (usize, String)>;

const SECTIONS: [(&str, &[&str]); 5] = [
    (
        "experiment",
        &["problem", "system", "output_dir", "formats", "path_source", "input"],
    ),
    (
        "params",
        &["alpha", "beta", "p", "q", "t0", "h", "T", "eps_v", "eps_tie"],
    ),
    ("initial", &["x0", "v0"]),
    (
        "outputs",
        &[
            "channels",
            "path_stride",
            "path_beta",
            "path_p",
            "rate_window",
            "tail_fraction",
            "monitor_lambda",
        ],
    ),
    ("sweep", &["p", "q"]),
];

fn split_sections(text: &str) -> Result<BTreeMap<String, (usize, Section)>, ConfigError> {
    let mut out: BTreeMap<String, (usize, Section)> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return err(Some(line_no), format!("malformed section header `{line}`"));
            };
            let name = name.trim();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                return err(Some(line_no), format!("unknown section `[{name}]`"));
            }
            if out.contains_key(name) {
                return err(Some(line_no), format!("duplicate section `[{name}]`"));
            }
            out.insert(name.to_string(), (line_no, Section::new()));
            current = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return err(Some(line_no), format!("expected `key = value`, got `{line}`"));
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(section) = current.as_deref() else {
            return err(Some(line_no), format!("key `{key}` outside of any section"));
        };
        let allowed = SECTIONS.iter().find(|(s, _)| *s == section).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return err(Some(line_no), format!("unknown key `{key}` in [{section}]"));
        }
        if value.is_empty() {
            return err(Some(line_no), format!("empty value for `{key}`"));
        }
        let entry = &mut out.get_mut(section).expect("section registered").1;
        if entry.contains_key(key) {
            return err(Some(line_no), format!("duplicate key `{key}` in [{section}]"));
        }
        entry.insert(key.to_string(), (line_no, value.to_string()));
    }
    Ok(out)
}

struct Reader<'a> {
    name: &'static str,
    section: Option<&'a Section>,
}

impl<'a> Reader<'a> {
    fn raw(&self, key: &str) -> Option<(usize, &'a str)> {
        self.section
            .and_then(|s| s.get(key))
            .map(|(l, v)| (*l, v.as_str()))
    }

    fn require(&self, key: &str) -> Result<(usize, &'a str), ConfigError> {
        self.raw(key).map_or_else(
            || err(None, format!("missing required key `{key}` in [{}]", self.name)),
            Ok,
        )
    }

    fn float(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.raw(key).map(|(l, v)| parse_float(l, key, v)).transpose()
    }

    fn floats(&self, key: &str) -> Result<Option<(usize, Vec<f64>)>, ConfigError> {
        self.raw(key)
            .map(|(l, v)| {
                v.split(',')
                    .map(|s| parse_float(l, key, s.trim()))
                    .collect::<Result<Vec<_>, _>>()
                    .map(|xs| (l, xs))
            })
            .transpose()
    }
}

fn parse_float(line: usize, key: &str, s: &str) -> Result<f64, ConfigError> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => err(Some(line), format!("`{key}`: expected a finite number, got `{s}`")),
    }
}

fn list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).collect()
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let sections = split_sections(text)?;
    let reader = |name: &'static str| Reader {
        name,
        section: sections.get(name).map(|(_, s)| s),
    };
    let exp = reader("experiment");
    let prm = reader("params");
    let init = reader("initial");
    let outs = reader("outputs");

    let problem = exp.require("problem")?.1.to_string();
    let system = match exp.raw("system") {
        None => System::Mtrigs,
        Some((_, "mtrigs")) => System::Mtrigs,
        Some((_, "mavd")) => System::Mavd,
        Some((l, other)) => return err(Some(l), format!("`system`: expected mtrigs or mavd, got `{other}`")),
    };
    let output_dir = PathBuf::from(exp.raw("output_dir").map_or("out", |(_, v)| v));
    let formats = match exp.raw("formats") {
        None => vec![Format::Csv, Format::Svg, Format::Json],
        Some((l, v)) => {
            let mut f = Vec::new();
            for item in list(v) {
                let parsed = match item {
                    "csv" => Format::Csv,
                    "svg" => Format::Svg,
                    "json" => Format::Json,
                    _ => return err(Some(l), format!("`formats`: unknown format `{item}`")),
                };
                if !f.contains(&parsed) {
                    f.push(parsed);
                }
            }
            f.sort();
            f
        }
    };
    let path_source = match exp.raw("path_source") {
        None | Some((_, "trajectory")) => PathSource::Trajectory,
        Some((_, "closed-form")) => PathSource::ClosedForm,
        Some((l, other)) => {
            return err(Some(l), format!("`path_source`: expected trajectory or closed-form, got `{other}`"))
        }
    };
    let input = exp.raw("input").map(|(_, v)| PathBuf::from(v));

    let alpha = prm.float("alpha")?;
    let beta = prm.float("beta")?;
    let p = prm.float("p")?;
    let q = prm.float("q")?;
    let need = |v: Option<f64>, key: &str| {
        v.map_or_else(|| err(None, format!("missing required key `{key}` in [params]")), Ok)
    };
    let (beta, p, q) = match system {
        System::Mtrigs => (need(beta, "beta")?, need(p, "p")?, need(q, "q")?),
        System::Mavd => {
            if let Some(b) = beta.filter(|b| *b != 0.0) {
                let l = prm.raw("beta").map(|r| r.0);
                return err(l, format!("`beta`: the mavd system has beta = 0, got {b}"));
            }
            if let Some(qv) = q.filter(|q| *q != 1.0) {
                let l = prm.raw("q").map(|r| r.0);
                return err(l, format!("`q`: the mavd system has q = 1, got {qv}"));
            }
            (0.0, p.unwrap_or(1.0), 1.0)
        }
    };
    let params = ParamsConfig {
        alpha: need(alpha, "alpha")?,
        beta,
        p,
        q,
        t0: need(prm.float("t0")?, "t0")?,
        h: need(prm.float("h")?, "h")?,
        t_end: need(prm.float("T")?, "T")?,
        eps_v: prm.float("eps_v")?.unwrap_or(DEFAULT_EPS_V),
        eps_tie: prm.float("eps_tie")?.unwrap_or(DEFAULT_EPS_TIE),
    };
    if let Err(e) = validate_params(&params.dyn_params()) {
        return err(None, format!("[params] {e}"));
    }

    let (_, x0) = init
        .floats("x0")?
        .map_or_else(|| err(None, "missing required key `x0` in [initial]"), Ok)?;
    let v0 = match init.floats("v0")? {
        None => vec![0.0; x0.len()],
        Some((l, v)) if v.len() != x0.len() => {
            return err(Some(l), format!("`v0` has {} entries, x0 has {}", v.len(), x0.len()))
        }
        Some((_, v)) => v,
    };

    let (cl, ch) = outs.require("channels")?;
    let mut channels = Vec::new();
    for item in list(ch) {
        match Channel::parse(item) {
            Some(c) if !channels.contains(&c) => channels.push(c),
            Some(_) => {}
            None => return err(Some(cl), format!("`channels`: unknown channel `{item}`")),
        }
    }
    channels.sort();
    let path_stride = match outs.raw("path_stride") {
        None => ((0.1 / params.h).round() as usize).max(1),
        Some((l, v)) => match v.parse::<usize>() {
            Ok(s) if s >= 1 => s,
            _ => return err(Some(l), format!("`path_stride`: expected a positive integer, got `{v}`")),
        },
    };
    let default_path = match system {
        System::Mtrigs => (params.beta, params.p),
        System::Mavd => (0.5, 1.75),
    };
    let path_beta = outs.float("path_beta")?.unwrap_or(default_path.0);
    let path_p = outs.float("path_p")?.unwrap_or(default_path.1);
    if system == System::Mtrigs && (outs.raw("path_beta").is_some() || outs.raw("path_p").is_some()) {
        let l = outs.raw("path_beta").or(outs.raw("path_p")).map(|r| r.0);
        return err(l, "`path_beta`/`path_p` only apply to the mavd system");
    }
    if !(path_beta > 0.0) || !(path_p > 0.0 && path_p <= 2.0) {
        let l = outs.raw("path_beta").or(outs.raw("path_p")).map(|r| r.0);
        return err(l, format!("path regularization needs beta > 0 and p in (0,2], got beta = {path_beta}, p = {path_p}"));
    }
    let rate_window = match outs.floats("rate_window")? {
        None => [params.t0.max(10.0), params.t_end],
        Some((l, w)) => {
            if w.len() != 2 || !(w[0] < w[1]) {
                return err(Some(l), "`rate_window`: expected two increasing times `lo, hi`");
            }
            [w[0], w[1]]
        }
    };
    let tail_fraction = outs.float("tail_fraction")?.unwrap_or(0.01);
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        let l = outs.raw("tail_fraction").map(|r| r.0);
        return err(l, format!("`tail_fraction`: expected a value in (0,1), got {tail_fraction}"));
    }
    let monitor_lambda = outs.float("monitor_lambda")?.unwrap_or(0.5);
    if !(monitor_lambda > 0.0) {
        let l = outs.raw("monitor_lambda").map(|r| r.0);
        return err(l, "`monitor_lambda` must be > 0");
    }

    let sweep = match sections.get("sweep") {
        None => None,
        Some((header, _)) => {
            let sw = reader("sweep");
            let p = sw.floats("p")?.map(|(_, v)| v);
            let q = sw.floats("q")?.map(|(_, v)| v);
            if p.is_none() && q.is_none() {
                return err(Some(*header), "[sweep] needs at least one of `p`, `q`");
            }
            if system == System::Mavd && q.is_some() {
                return err(sw.raw("q").map(|r| r.0), "the mavd system cannot sweep q");
            }
            Some(SweepConfig { p, q })
        }
    };

    let cfg = ExperimentConfig {
        problem,
        system,
        params,
        x0,
        v0,
        outputs: OutputsConfig {
            channels,
            path_stride,
            path_beta,
            path_p,
            rate_window,
            tail_fraction,
            monitor_lambda,
        },
        sweep,
        output_dir,
        formats,
        path_source,
        input,
    };
    for cell in cfg.cells() {
        if let Err(e) = validate_params(&cell.params) {
            let where_ = if cell.label.is_empty() { String::new() } else { format!(" (sweep cell {})", cell.label) };
            return err(None, format!("[params]{where_} {e}"));
        }
    }
    if cfg.input.is_some() && cfg.sweep.is_some() {
        return err(exp.raw("input").map(|r| r.0), "`input` cannot be combined with [sweep]");
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2: &str = include_str!("../configs/fig2.cfg");
    const FIG4: &str = include_str!("../configs/fig4.cfg");

    fn minimal() -> String {
        "[experiment]\nproblem = mop-ex1\n[params]\nalpha = 4\nbeta = 0.5\np = 1.75\nq = 0.875\nt0 = 1\nh = 0.01\nT = 2\n[initial]\nx0 = 2.5, 0.5\n[outputs]\nchannels = trajectory\n".to_string()
    }

    #[test]
    fn shipped_fig2() {
        let c = parse_config(FIG2).unwrap();
        let p = &c.params;
        assert_eq!((p.alpha, p.beta, p.q, p.p, p.h), (4.0, 0.5, 0.875, 1.75, 0.01));
        assert_eq!(c.x0, vec![2.5, 0.5]);
        assert_eq!(c.system, System::Mtrigs);
    }

    #[test]
    fn q_sweep_has_four_runs() {
        let c = parse_config(FIG4).unwrap();
        let cells = c.cells();
        assert_eq!(cells.len(), 4);
        let qs: Vec<f64> = cells.iter().map(|c| c.params.q).collect();
        assert_eq!(qs, vec![0.3, 0.6, 0.8, 0.99]);
        assert_eq!(cells[0].label, "q_0.3");
        assert!(cells.iter().all(|c| c.params.p == 1.1));
    }

    #[test]
    fn missing_problem_is_named() {
        let text = minimal().replace("problem = mop-ex1\n", "");
        let e = parse_config(&text).unwrap_err();
        assert!(e.message.contains("`problem`"), "{e}");
    }

    #[test]
    fn unknown_key_has_line_number() {
        let text = minimal().replace("alpha = 4", "alpha = 4\ngamma = 1");
        let e = parse_config(&text).unwrap_err();
        assert_eq!(e.line, Some(5));
        assert!(e.message.contains("gamma"));
    }

    #[test]
    fn malformed_lines() {
        for (bad, line) in [
            ("[params\n", 4),
            ("[nope]\n", 4),
            ("alpha 4\n", 4),
        ] {
            let text = minimal().replace("[params]\n", &format!("[params]\n{bad}"));
            let e = parse_config(&text).unwrap_err();
            assert_eq!(e.line, Some(line), "{bad:?}: {e}");
        }
        let e = parse_config("problem = x\n").unwrap_err();
        assert_eq!(e.line, Some(1));
    }

    #[test]
    fn duplicate_key_rejected() {
        let text = minimal().replace("alpha = 4", "alpha = 4\nalpha = 3");
        assert_eq!(parse_config(&text).unwrap_err().line, Some(5));
    }

    #[test]
    fn bad_values() {
        let e = parse_config(&minimal().replace("p = 1.75", "p = 0")).unwrap_err();
        assert!(e.message.contains("p out of (0,2]"), "{e}");
        let e = parse_config(&minimal().replace("h = 0.01", "h = fast")).unwrap_err();
        assert_eq!(e.line, Some(9));
        let e = parse_config(&minimal().replace("channels = trajectory", "channels = trajectory, plots")).unwrap_err();
        assert!(e.message.contains("plots"));
        let e = parse_config(&minimal().replace("x0 = 2.5, 0.5", "x0 = 2.5, 0.5\nv0 = 0")).unwrap_err();
        assert!(e.message.contains("v0"));
    }

    #[test]
    fn mavd_defaults_and_guards() {
        let text = minimal()
            .replace("beta = 0.5\n", "")
            .replace("q = 0.875\n", "")
            .replace("problem = mop-ex1", "problem = mop-ex1\nsystem = mavd");
        let c = parse_config(&text).unwrap();
        assert_eq!((c.params.beta, c.params.q), (0.0, 1.0));
        assert_eq!((c.outputs.path_beta, c.outputs.path_p), (0.5, 1.75));
        let cell = &c.cells()[0];
        assert_eq!((cell.path_params.beta, cell.path_params.p), (0.5, 1.75));
        assert_eq!(cell.params.beta, 0.0);
        let bad = text.replace("alpha = 4", "alpha = 4\nbeta = 0.5");
        assert!(parse_config(&bad).unwrap_err().message.contains("beta"));
    }

    #[test]
    fn empty_sweep_rejected() {
        let text = minimal() + "[sweep]\n";
        assert!(parse_config(&text).is_err());
        let text = minimal() + "[sweep]\np = \n";
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn sweep_grid_labels() {
        let text = minimal() + "[sweep]\np = 0.5, 1\nq = 0.3, 0.9\n";
        let labels: Vec<String> = parse_config(&text).unwrap().cells().into_iter().map(|c| c.label).collect();
        assert_eq!(labels, ["p_0.5-q_0.3", "p_0.5-q_0.9", "p_1-q_0.3", "p_1-q_0.9"]);
    }

    #[test]
    fn defaults() {
        let c = parse_config(&minimal()).unwrap();
        assert_eq!(c.outputs.path_stride, 10);
        assert_eq!(c.outputs.rate_window, [10.0, 2.0]);
        assert_eq!(c.formats, vec![Format::Csv, Format::Svg, Format::Json]);
        assert_eq!(c.output_dir, PathBuf::from("out"));
        assert_eq!(c.v0, vec![0.0, 0.0]);
    }
}
