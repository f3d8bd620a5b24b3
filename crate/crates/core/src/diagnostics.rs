//! Energies, inequality monitors, limit estimates and log-log rate fits
//! evaluated on computed trajectories.

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::linalg::{dist, dot, norm, norm_sq, sub};
use crate::params::DynParams;
use crate::problem::Problem;
use crate::scalarization::{regularization_path_tol, PathSample};

/// A sampled scalar function of time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Series {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
}

impl Series {
    pub fn new(t: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(t.len(), y.len(), "series length mismatch");
        Series { t, y }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Largest single-step increase `max_k (y_{k+1} − y_k)`, or `-inf`.
    pub fn max_increase(&self) -> f64 {
        self.y
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `W_i(t_k) = f_i(x_k) + β/(2 t_k^p) ‖x_k‖² + ½ ‖v_k‖²`
pub fn energy_w(problem: &Problem, trajectory: &Trajectory, i: usize) -> Result<Series> {
    if i >= problem.m() {
        return Err(Error::Problem(format!("objective index {i} out of range")));
    }
    let p = &trajectory.params;
    let y = trajectory
        .states
        .iter()
        .map(|s| problem.value(i, &s.x) + 0.5 * p.reg(s.t) * norm_sq(&s.x) + 0.5 * norm_sq(&s.v))
        .collect();
    Ok(Series::new(trajectory.times(), y))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaChoice {
    /// `γ(t) = λ`
    Constant,
    /// `γ(t) = 2r t^{r−1}`
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XiChoice {
    /// `ξ(t) = λ (r t^{r−1} + α t^{r−q} − 2λ)`
    Lambda,
    /// `ξ(t) = 2αr t^{2r−q−1} + 2r(1−4r) t^{2(r−1)}`
    G,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Anchor {
    Fixed(Vec<f64>),
    /// The regularization path point `z(t)` of the current state.
    Path,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergySpec {
    pub r: f64,
    pub lambda: f64,
    pub gamma: GammaChoice,
    pub xi: XiChoice,
    pub anchor: Anchor,
}

impl EnergySpec {
    /// `γ = λ`, `ξ` the matching λ-form.
    pub fn lambda_form(r: f64, lambda: f64, anchor: Anchor) -> Self {
        EnergySpec {
            r,
            lambda,
            gamma: GammaChoice::Constant,
            xi: XiChoice::Lambda,
            anchor,
        }
    }

    fn validate(&self, params: &DynParams) -> Result<()> {
        if !(self.r >= params.q && self.r <= 1.0) {
            return Err(Error::param("r", format!("r = {} out of [q, 1]", self.r)));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::param("lambda", "lambda must be > 0"));
        }
        Ok(())
    }

    fn gamma(&self, t: f64) -> f64 {
        match self.gamma {
            GammaChoice::Constant => self.lambda,
            GammaChoice::Power => 2.0 * self.r * t.powf(self.r - 1.0),
        }
    }

    fn xi(&self, t: f64, params: &DynParams) -> f64 {
        let (r, l, a, q) = (self.r, self.lambda, params.alpha, params.q);
        match self.xi {
            XiChoice::Lambda => l * (r * t.powf(r - 1.0) + a * t.powf(r - q) - 2.0 * l),
            XiChoice::G => {
                2.0 * a * r * t.powf(2.0 * r - q - 1.0)
                    + 2.0 * r * (1.0 - 4.0 * r) * t.powf(2.0 * (r - 1.0))
            }
        }
    }

    /// The energy at one `(t, x, v)` with anchor `z`.
    pub fn eval(
        &self,
        problem: &Problem,
        params: &DynParams,
        t: f64,
        x: &[f64],
        v: &[f64],
        z: &[f64],
    ) -> f64 {
        let tr = t.powf(self.r);
        let reg = params.reg(t);
        let shift = 0.5 * reg * (norm_sq(x) - norm_sq(z));
        let min_gap = problem
            .values(x)
            .iter()
            .zip(problem.values(z))
            .map(|(fx, fz)| fx - fz + shift)
            .fold(f64::INFINITY, f64::min);
        let gam = self.gamma(t);
        let d = sub(x, z);
        let mixed: f64 = d
            .iter()
            .zip(v)
            .map(|(di, vi)| (gam * di + tr * vi).powi(2))
            .sum();
        tr * tr * min_gap + 0.5 * mixed + 0.5 * self.xi(t, params) * norm_sq(&d)
    }
}

/// The energy along the whole trajectory.
pub fn energy_e(
    problem: &Problem,
    trajectory: &Trajectory,
    spec: &EnergySpec,
    scalar_tol: f64,
) -> Result<Series> {
    energy_e_strided(problem, trajectory, spec, scalar_tol, 1)
}

/// [`energy_e`] on every `stride`-th state (plus the last).
pub fn energy_e_strided(
    problem: &Problem,
    trajectory: &Trajectory,
    spec: &EnergySpec,
    scalar_tol: f64,
    stride: usize,
) -> Result<Series> {
    let params = &trajectory.params;
    spec.validate(params)?;
    let idx = crate::scalarization::sample_indices(trajectory.len(), stride);
    let anchors: Vec<Vec<f64>> = match &spec.anchor {
        Anchor::Fixed(z) => {
            problem.check_point(z, "anchor")?;
            vec![z.clone(); idx.len()]
        }
        Anchor::Path => {
            regularization_path_tol(problem, trajectory, params, stride, scalar_tol)?
                .into_iter()
                .map(|s| s.z)
                .collect()
        }
    };
    let mut t = Vec::with_capacity(idx.len());
    let mut y = Vec::with_capacity(idx.len());
    for (&k, z) in idx.iter().zip(&anchors) {
        let s = &trajectory.states[k];
        t.push(s.t);
        y.push(spec.eval(problem, params, s.t, &s.x, &s.v, z));
    }
    Ok(Series::new(t, y))
}

/// Worst-case view of one family of discrete inequalities `lhs − rhs ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackSummary {
    pub name: &'static str,
    pub t: Vec<f64>,
    /// `lhs − rhs` per checked point; positive values are violations.
    pub slack: Vec<f64>,
}

impl SlackSummary {
    fn new(name: &'static str) -> Self {
        SlackSummary {
            name,
            t: Vec::new(),
            slack: Vec::new(),
        }
    }

    fn push(&mut self, t: f64, s: f64) {
        self.t.push(t);
        self.slack.push(s);
    }

    /// Largest slack, `-inf` when nothing was checked.
    pub fn worst(&self) -> f64 {
        self.slack.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn worst_t(&self) -> Option<f64> {
        self.slack
            .iter()
            .zip(&self.t)
            .max_by(|a, b| a.0.total_cmp(b.0))
            .map(|(_, t)| *t)
    }

    pub fn holds(&self, bound: f64) -> Vec<bool> {
        self.slack.iter().map(|s| *s <= bound).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    /// `⟨∇f_i + β/t^p x + a, v⟩ + α/t^q ‖v‖² ≤ 0` for every `i`.
    pub velocity: SlackSummary,
    /// `φ(x) ≤ φ_t(x) + βR²/(2t^p)`; needs `β > 0` and an exact merit.
    pub merit_bound: Option<SlackSummary>,
    /// `‖x − z‖² ≤ 2t^p φ_t(x)/β`; needs `β > 0`.
    pub distance_bound: Option<SlackSummary>,
    /// Finite-difference derivative of the λ-energy against its bound, over `t^{2r}`.
    pub energy: SlackSummary,
}

impl MonitorReport {
    pub fn summaries(&self) -> Vec<&SlackSummary> {
        let mut v = vec![&self.velocity];
        v.extend(self.merit_bound.as_ref());
        v.extend(self.distance_bound.as_ref());
        v.push(&self.energy);
        v
    }

    pub fn worst(&self) -> f64 {
        self.summaries()
            .iter()
            .map(|s| s.worst())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Energy parameters for the derivative check.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorConfig {
    pub r: f64,
    pub lambda: f64,
    /// Fixed anchor; defaults to the last path point (or last state).
    pub anchor: Option<Vec<f64>>,
}

impl MonitorConfig {
    pub fn for_params(params: &DynParams) -> Self {
        MonitorConfig {
            r: params.q,
            lambda: 0.5,
            anchor: None,
        }
    }
}

/// Runs every monitor with [`MonitorConfig::for_params`].
pub fn monitor_inequalities(
    problem: &Problem,
    trajectory: &Trajectory,
    path_samples: &[PathSample],
) -> Result<MonitorReport> {
    let cfg = MonitorConfig::for_params(&trajectory.params);
    monitor_inequalities_with(problem, trajectory, path_samples, &cfg)
}

pub fn monitor_inequalities_with(
    problem: &Problem,
    trajectory: &Trajectory,
    path_samples: &[PathSample],
    cfg: &MonitorConfig,
) -> Result<MonitorReport> {
    let params = &trajectory.params;
    if trajectory.is_empty() {
        return Err(Error::Problem("empty trajectory".into()));
    }

    let mut velocity = SlackSummary::new("velocity");
    for (k, s) in trajectory.states.iter().enumerate() {
        let a = &trajectory.accel[k];
        let reg = params.reg(s.t);
        let rhs = -params.damping(s.t) * norm_sq(&s.v);
        let lhs = problem
            .gradients(&s.x)
            .iter()
            .map(|g| {
                g.iter()
                    .zip(&s.x)
                    .zip(a)
                    .zip(&s.v)
                    .map(|(((g, x), a), v)| (g + reg * x + a) * v)
                    .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        velocity.push(s.t, lhs - rhs);
    }

    let (merit_bound, distance_bound) = if params.beta > 0.0 && !path_samples.is_empty() {
        let radius = problem.r_bound().unwrap_or_else(|| {
            1.1 * path_samples
                .iter()
                .map(|s| norm(&s.z))
                .fold(0.0, f64::max)
        });
        let mut dist_b = SlackSummary::new("distance_bound");
        let mut merit_b = problem.analytic_merit().map(|_| SlackSummary::new("merit_bound"));
        for s in path_samples {
            let k = index_of(params, s.t, trajectory.len());
            let x = &trajectory.states[k].x;
            let reg = params.reg(s.t);
            let phi_t = s.phi_t + s.gap_bound;
            dist_b.push(s.t, norm_sq(&sub(x, &s.z)) - 2.0 * phi_t / reg);
            if let (Some(mb), Some(phi)) = (merit_b.as_mut(), problem.analytic_merit()) {
                mb.push(s.t, phi(x) - (phi_t + 0.5 * reg * radius * radius));
            }
        }
        (merit_b, Some(dist_b))
    } else {
        (None, None)
    };

    let anchor = cfg
        .anchor
        .clone()
        .or_else(|| path_samples.last().map(|s| s.z.clone()))
        .unwrap_or_else(|| trajectory.last().x.clone());
    let energy = energy_derivative_slack(problem, trajectory, cfg.r, cfg.lambda, &anchor)?;

    Ok(MonitorReport {
        velocity,
        merit_bound,
        distance_bound,
        energy,
    })
}

fn index_of(params: &DynParams, t: f64, len: usize) -> usize {
    (((t - params.t0) / params.h).round().max(0.0) as usize).min(len - 1)
}

/// `(E(t_{k+1}) − E(t_k))/h` minus the derivative bound at `t_{k+½}`, with
/// `E` evaluated at central-difference velocities, divided by `t^{2r}`.
///
/// The lagged selection in the integrator chatters between vertices once the
/// trajectory slides along a kink; the resulting error in `dE/dt` is `O(h)`
/// times the `t^{2r}` weight on the merit term, so the raw slack grows with
/// `t` while the scaled one stays `O(h)`.
fn energy_derivative_slack(
    problem: &Problem,
    trajectory: &Trajectory,
    r: f64,
    lambda: f64,
    z: &[f64],
) -> Result<SlackSummary> {
    let params = &trajectory.params;
    let spec = EnergySpec::lambda_form(r, lambda, Anchor::Fixed(z.to_vec()));
    spec.validate(params)?;
    problem.check_point(z, "anchor")?;
    let h = params.h;
    let xs: Vec<&[f64]> = trajectory.states.iter().map(|s| s.x.as_slice()).collect();
    let n = xs.len();
    let mut out = SlackSummary::new("energy");
    if n < 4 {
        return Ok(out);
    }
    let central = |k: usize| -> Vec<f64> {
        xs[k + 1]
            .iter()
            .zip(xs[k - 1])
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect()
    };
    let e_at = |k: usize| {
        let t = trajectory.states[k].t;
        spec.eval(problem, params, t, xs[k], &central(k), z)
    };
    let (a, q, b, p) = (params.alpha, params.q, params.beta, params.p);
    let mut e_prev = e_at(1);
    for k in 1..n - 2 {
        let e_next = e_at(k + 1);
        let t = 0.5 * (trajectory.states[k].t + trajectory.states[k + 1].t);
        let x: Vec<f64> = xs[k].iter().zip(xs[k + 1]).map(|(u, w)| 0.5 * (u + w)).collect();
        let v: Vec<f64> = xs[k + 1].iter().zip(xs[k]).map(|(u, w)| (u - w) / h).collect();
        let reg = params.reg(t);
        let shift = 0.5 * reg * (norm_sq(&x) - norm_sq(z));
        let min_gap = problem
            .values(&x)
            .iter()
            .zip(problem.values(z))
            .map(|(fx, fz)| fx - fz + shift)
            .fold(f64::INFINITY, f64::min);
        let d = sub(&x, z);
        let tr = t.powf(r);
        let rhs = (2.0 * r * t.powf(2.0 * r - 1.0) - lambda * tr) * min_gap
            + if b > 0.0 {
                p * b * tr * tr / (2.0 * t.powf(p + 1.0)) * norm_sq(z)
            } else {
                0.0
            }
            + lambda * (2.0 * r * t.powf(r - 1.0) - lambda) * dot(&d, &v)
            + tr * (lambda + r * t.powf(r - 1.0) - a * t.powf(r - q)) * norm_sq(&v)
            + 0.5
                * lambda
                * (r * (r - 1.0) * t.powf(r - 2.0) + a * (r - q) * t.powf(r - q - 1.0)
                    - if b > 0.0 { b * t.powf(r - p) } else { 0.0 })
                * norm_sq(&d);
        out.push(t, ((e_next - e_prev) / h - rhs) / (tr * tr));
        e_prev = e_next;
    }
    Ok(out)
}

/// Least-squares line through `(log t, log y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub window: [f64; 2],
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
}

/// Default rate window `[max(10, t0), T]`.
pub fn default_window(params: &DynParams) -> [f64; 2] {
    [params.t0.max(10.0), params.t_end]
}

pub fn fit_rate(series: &Series, window: [f64; 2]) -> Result<RateFit> {
    let [lo, hi] = window;
    if !(lo < hi) {
        return Err(Error::Problem(format!("empty rate window [{lo}, {hi}]")));
    }
    let pts: Vec<(f64, f64)> = series
        .t
        .iter()
        .zip(&series.y)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .map(|(t, y)| (*t, *y))
        .collect();
    if pts.len() < 10 {
        return Err(Error::Problem(format!(
            "rate window [{lo}, {hi}] holds {} samples, need 10",
            pts.len()
        )));
    }
    if let Some((t, y)) = pts.iter().find(|(_, y)| !(*y > 0.0)) {
        return Err(Error::Problem(format!("nonpositive value {y} at t = {t}")));
    }
    let lx: Vec<f64> = pts.iter().map(|(t, _)| t.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|(_, y)| y.ln()).collect();
    let nf = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / nf;
    let my = ly.iter().sum::<f64>() / nf;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(RateFit {
        window,
        slope,
        intercept,
        residual: (rss / nf).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitEstimate {
    pub f_inf: Vec<f64>,
    /// `max − min` of each `f_i` over the tail.
    pub spread: Vec<f64>,
}

/// Tail means of `f_i(x(t))` over the last `tail_fraction` of the samples.
pub fn limit_values(
    problem: &Problem,
    trajectory: &Trajectory,
    tail_fraction: f64,
) -> Result<LimitEstimate> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::param("tail_fraction", "tail_fraction out of (0,1)"));
    }
    if trajectory.is_empty() {
        return Err(Error::Problem("empty trajectory".into()));
    }
    let len = trajectory.len();
    let start = len - ((len as f64 * tail_fraction).ceil() as usize).clamp(1, len);
    let tail: Vec<Vec<f64>> = trajectory.states[start..]
        .iter()
        .map(|s| problem.values(&s.x))
        .collect();
    // mean as first sample plus averaged deviations, exact on constant tails
    let first = tail[0].clone();
    let count = tail.len() as f64;
    let m = problem.m();
    let mut f_inf = first.clone();
    let mut spread = vec![0.0; m];
    for i in 0..m {
        let dev: f64 = tail.iter().map(|f| f[i] - first[i]).sum();
        f_inf[i] += dev / count;
        let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| {
            (lo.min(f[i]), hi.max(f[i]))
        });
        spread[i] = hi - lo;
    }
    Ok(LimitEstimate { f_inf, spread })
}

/// Partial sums of `Σ t_k ‖v_k‖² h`.
pub fn velocity_integral(trajectory: &Trajectory) -> Series {
    let h = trajectory.params.h;
    let mut acc = 0.0;
    let y = trajectory
        .states
        .iter()
        .map(|s| {
            acc += s.t * norm_sq(&s.v) * h;
            acc
        })
        .collect();
    Series::new(trajectory.times(), y)
}

/// `‖x(t_k) − z_k‖` at each path sample.
pub fn path_distance(path: &[PathSample]) -> Series {
    Series::new(
        path.iter().map(|s| s.t).collect(),
        path.iter().map(|s| s.distance).collect(),
    )
}

/// `‖x(T) − target‖`, a convenience for limit checks.
pub fn final_distance(trajectory: &Trajectory, target: &[f64]) -> f64 {
    dist(&trajectory.last().x, target)
}
