//! The regularized weighted-max subproblem
//!
//! ```text
//! min_z  Φ(z) = max_i (f_i(z) − q_i) + ε/2 ‖z‖²
//! ```
//!
//! and the merit functions and path built on it.
//!
//! Each iteration solves the piecewise-quadratic model
//! `max_i(ℓ_i + ⟨g_i, d⟩) + ½ dᵀMd + ε/2 ‖z + d‖²` through its simplex dual,
//! where `M` is a clipped finite-difference Hessian of the current
//! `θ`-weighted objective. With `M = 0` the step is the classic minimal-norm
//! subgradient direction; the curvature term is what keeps small `ε` from
//! zig-zagging along the kink. Steps are damped by Armijo backtracking on `Φ`.
//!
//! Termination uses the minimal-norm element of the near-active subgradient
//! hull; by `ε`-strong convexity it bounds both `‖z − z*‖ ≤ cert/ε` and the
//! value gap `cert²/(2ε)`. "Near-active" starts at a `1e-12` relative band
//! and widens to `1e-8` only if the iteration stalls: the wide band lets a
//! point sitting `1e-8` off the kink certify itself.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::linalg::{dist, dot, norm, norm_sq};
use crate::params::DynParams;
use crate::problem::Problem;
use crate::simplex_qp::{min_norm_combination, simplex_qp};

pub const MAX_ITER: usize = 10_000;
pub const DEFAULT_TOL: f64 = 1e-10;
const ARMIJO: f64 = 1e-4;
/// Relative margin on a runtime estimate of the level-set radius.
const RADIUS_MARGIN: f64 = 1.1;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarizationResult {
    pub z_star: Vec<f64>,
    /// `Φ(z_star)`
    pub value: f64,
    /// Norm of the minimal subgradient over the near-active set.
    pub cert: f64,
    /// `cert² / (2ε)`
    pub gap_bound: f64,
    pub iterations: usize,
    /// `false` when the iteration budget ran out or the line search stalled.
    pub certified: bool,
}

struct Eval {
    ell: Vec<f64>,
    grads: Vec<Vec<f64>>,
    phi: f64,
}

fn evaluate(problem: &Problem, qvec: &[f64], eps: f64, z: &[f64]) -> Eval {
    let ell: Vec<f64> = problem
        .values(z)
        .iter()
        .zip(qvec)
        .map(|(f, q)| f - q)
        .collect();
    let max = ell.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Eval {
        phi: max + 0.5 * eps * norm_sq(z),
        grads: problem.gradients(z),
        ell,
    }
}

fn objective(problem: &Problem, qvec: &[f64], eps: f64, z: &[f64]) -> f64 {
    problem
        .values(z)
        .iter()
        .zip(qvec)
        .map(|(f, q)| f - q)
        .fold(f64::NEG_INFINITY, f64::max)
        + 0.5 * eps * norm_sq(z)
}

/// Relative activity threshold while iterating.
const ACTIVE_TIGHT: f64 = 1e-12;
/// Looser threshold used once the iteration has stalled.
const ACTIVE_LOOSE: f64 = 1e-8;

/// Minimal norm of `conv{∇f_i : i near-active} + εz`.
fn certificate(e: &Eval, eps: f64, z: &[f64], rel: f64) -> Result<f64> {
    let max = e.ell.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = rel * (1.0 + max.abs());
    let active: Vec<Vec<f64>> = e
        .ell
        .iter()
        .zip(&e.grads)
        .filter(|(l, _)| **l >= max - tol)
        .map(|(_, g)| g.clone())
        .collect();
    let shift: Vec<f64> = z.iter().map(|v| eps * v).collect();
    Ok(min_norm_combination(&active, &shift)?.value.sqrt())
}

/// Symmetrized, eigenvalue-clipped central-difference Hessian of
/// `Σ θ_i f_i` at `z`.
fn curvature(problem: &Problem, theta: &[f64], z: &[f64]) -> DMatrix<f64> {
    let n = z.len();
    let mut hess = DMatrix::<f64>::zeros(n, n);
    let mut zp = z.to_vec();
    for j in 0..n {
        let delta = 1e-6 * (1.0 + z[j].abs());
        zp[j] = z[j] + delta;
        let up: Vec<Vec<f64>> = (0..problem.m())
            .filter(|&i| theta[i] > 0.0)
            .map(|i| problem.gradient(i, &zp))
            .collect();
        zp[j] = z[j] - delta;
        let down: Vec<Vec<f64>> = (0..problem.m())
            .filter(|&i| theta[i] > 0.0)
            .map(|i| problem.gradient(i, &zp))
            .collect();
        zp[j] = z[j];
        let weights = theta.iter().filter(|&&t| t > 0.0);
        for ((u, d), w) in up.iter().zip(&down).zip(weights) {
            for r in 0..n {
                hess[(r, j)] += w * (u[r] - d[r]) / (2.0 * delta);
            }
        }
    }
    let sym = (&hess + hess.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose()
}

/// Minimizes `max_i(f_i(z) − q_i) + ε/2 ‖z‖²` from `z_init` until the
/// certificate drops below `tol`.
///
/// Running out of iterations is not an error: the best iterate is returned
/// with `certified = false`.
pub fn solve_scalarized(
    problem: &Problem,
    qvec: &[f64],
    eps: f64,
    z_init: &[f64],
    tol: f64,
) -> Result<ScalarizationResult> {
    Error::check_dim(problem.m(), qvec.len(), "anchor q")?;
    problem.check_point(z_init, "z_init")?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param("eps", format!("eps must be > 0, got {eps}")));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", format!("tol must be > 0, got {tol}")));
    }
    let n = problem.n();
    let m = problem.m();
    let mut z = z_init.to_vec();
    let mut theta = vec![1.0 / m as f64; m];
    let mut e = evaluate(problem, qvec, eps, &z);
    let mut certified = false;
    let mut iterations = 0;
    let mut cert = certificate(&e, eps, &z, ACTIVE_TIGHT)?;

    while iterations < MAX_ITER {
        if cert <= tol {
            certified = true;
            break;
        }
        iterations += 1;
        let mut h = curvature(problem, &theta, &z);
        for d in 0..n {
            h[(d, d)] += eps;
        }
        let Some(chol) = h.clone().cholesky() else {
            break;
        };
        let gmat = DMatrix::from_fn(n, m, |r, i| e.grads[i][r]);
        let zv = DVector::from_column_slice(&z);
        let hinv_g = chol.solve(&gmat);
        let hinv_z = chol.solve(&zv);
        let qmat = gmat.transpose() * &hinv_g;
        let qmat = (&qmat + qmat.transpose()) * 0.5;
        let lin: Vec<f64> = (0..m)
            .map(|i| eps * gmat.column(i).dot(&hinv_z) - e.ell[i])
            .collect();
        let scale = 1.0
            + qmat.amax()
            + lin.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let quad = |th: &[f64]| {
            let v = DVector::from_column_slice(th);
            0.5 * v.dot(&(&qmat * &v)) + dot(&lin, th)
        };
        theta = simplex_qp(&qmat, &lin, Some(&theta), |_| 1e-15 * scale, quad).theta;

        let rhs = &gmat * DVector::from_column_slice(&theta) + &zv * eps;
        let d: Vec<f64> = (-chol.solve(&rhs)).iter().copied().collect();
        let dv = DVector::from_column_slice(&d);
        let curv = dv.dot(&(&h * &dv)) - eps * dv.norm_squared();
        let model = (0..m)
            .map(|i| e.ell[i] + dot(&e.grads[i], &d))
            .fold(f64::NEG_INFINITY, f64::max)
            + 0.5 * curv
            + 0.5 * eps * z.iter().zip(&d).map(|(a, b)| (a + b) * (a + b)).sum::<f64>();
        let pred = model - e.phi;
        if !(pred < 0.0) {
            break;
        }
        let mut s = 1.0;
        let mut accepted = None;
        while s > 1e-12 {
            let trial: Vec<f64> = z.iter().zip(&d).map(|(a, b)| a + s * b).collect();
            let f = objective(problem, qvec, eps, &trial);
            if f <= e.phi + ARMIJO * s * pred {
                accepted = Some(trial);
                break;
            }
            s *= 0.5;
        }
        let Some(next) = accepted else {
            break;
        };
        z = next;
        e = evaluate(problem, qvec, eps, &z);
        cert = certificate(&e, eps, &z, ACTIVE_TIGHT)?;
    }
    if !certified {
        cert = cert.min(certificate(&e, eps, &z, ACTIVE_LOOSE)?);
        certified = cert <= tol;
    }
    Ok(ScalarizationResult {
        value: e.phi,
        gap_bound: cert * cert / (2.0 * eps),
        z_star: z,
        cert,
        iterations,
        certified,
    })
}

/// `φ_t(x) = β/(2t^p) ‖x‖² − min_z Φ(z)` with `q = F(x)`, `ε = β/t^p`.
///
/// Returns `φ_t` together with the subproblem solution (whose `z_star` is
/// the path point `z(t)` for this `x`).
pub fn merit_phi_t(
    problem: &Problem,
    x: &[f64],
    t: f64,
    params: &DynParams,
    tol: f64,
) -> Result<(f64, ScalarizationResult)> {
    merit_phi_t_from(problem, x, t, params, tol, x)
}

pub(crate) fn merit_phi_t_from(
    problem: &Problem,
    x: &[f64],
    t: f64,
    params: &DynParams,
    tol: f64,
    z_init: &[f64],
) -> Result<(f64, ScalarizationResult)> {
    if !(params.beta > 0.0) {
        return Err(Error::param("beta", "regularized merit needs beta > 0"));
    }
    if !(t >= params.t0) {
        return Err(Error::param("t", format!("t = {t} is below t0 = {}", params.t0)));
    }
    let eps = params.reg(t);
    let res = solve_scalarized(problem, &problem.values(x), eps, z_init, tol)?;
    Ok((0.5 * eps * norm_sq(x) - res.value, res))
}

/// Two-sided enclosure of `φ(x) = sup_z min_i (f_i(x) − f_i(z))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeritInterval {
    pub lo: f64,
    pub hi: f64,
}

/// Encloses `φ(x)`: exact when the problem has an analytic merit oracle,
/// otherwise bracketed through `φ_t`.
///
/// The radius is the problem's `R` bound if present, else `1.1 ‖z(t)‖`.
pub fn merit_phi(problem: &Problem, x: &[f64], t: f64, params: &DynParams) -> Result<MeritInterval> {
    merit_phi_with_radius(problem, x, t, params, problem.r_bound())
}

/// [`merit_phi`] with an explicit radius (`None` estimates it from `z(t)`).
pub fn merit_phi_with_radius(
    problem: &Problem,
    x: &[f64],
    t: f64,
    params: &DynParams,
    radius: Option<f64>,
) -> Result<MeritInterval> {
    problem.check_point(x, "x")?;
    if let Some(phi) = problem.analytic_merit() {
        let v = phi(x);
        return Ok(MeritInterval { lo: v, hi: v });
    }
    let (phi_t, res) = merit_phi_t(problem, x, t, params, DEFAULT_TOL)?;
    Ok(bracket(phi_t, &res, x, params.reg(t), radius))
}

fn bracket(
    phi_t: f64,
    res: &ScalarizationResult,
    x: &[f64],
    eps: f64,
    radius: Option<f64>,
) -> MeritInterval {
    let r = radius.unwrap_or_else(|| RADIUS_MARGIN * norm(&res.z_star));
    let hi = phi_t + 0.5 * eps * r * r + res.gap_bound;
    let lo = (phi_t - res.gap_bound - 0.5 * eps * norm_sq(x)).max(0.0);
    MeritInterval {
        lo: lo.min(hi.max(0.0)),
        hi: hi.max(0.0),
    }
}

/// One point of the generalized regularization path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub t: f64,
    /// Anchor `F(x(t))`.
    pub q: Vec<f64>,
    pub z: Vec<f64>,
    /// `‖x(t) − z‖`
    pub distance: f64,
    pub phi_t: f64,
    pub gap_bound: f64,
    pub certified: bool,
    /// `‖z‖ ≤ R + 1e-6`, vacuously true without a known `R`.
    pub within_radius: bool,
}

/// Trace `z(t_k)` for every `stride`-th state (and the last one), warm
/// starting each solve from the previous path point.
///
/// The regularization `β`, `p` and `t0` come from `params`, which need not be
/// the parameters the trajectory was integrated with.
pub fn regularization_path(
    problem: &Problem,
    trajectory: &Trajectory,
    params: &DynParams,
    stride: usize,
) -> Result<Vec<PathSample>> {
    regularization_path_tol(problem, trajectory, params, stride, DEFAULT_TOL)
}

pub fn regularization_path_tol(
    problem: &Problem,
    trajectory: &Trajectory,
    params: &DynParams,
    stride: usize,
    tol: f64,
) -> Result<Vec<PathSample>> {
    if trajectory.is_empty() {
        return Err(Error::Problem("empty trajectory".into()));
    }
    if !(params.beta > 0.0) {
        return Err(Error::param("beta", "regularization path needs beta > 0"));
    }
    let stride = stride.max(1);
    let mut out = Vec::new();
    let mut z_prev: Option<Vec<f64>> = None;
    for k in sample_indices(trajectory.len(), stride) {
        let s = &trajectory.states[k];
        let init = z_prev.as_deref().unwrap_or(&s.x);
        let (phi_t, res) = merit_phi_t_from(problem, &s.x, s.t.max(params.t0), params, tol, init)?;
        let within_radius = problem
            .r_bound()
            .map_or(true, |r| norm(&res.z_star) <= r + 1e-6);
        out.push(PathSample {
            t: s.t,
            q: problem.values(&s.x),
            distance: dist(&s.x, &res.z_star),
            z: res.z_star.clone(),
            phi_t,
            gap_bound: res.gap_bound,
            certified: res.certified,
            within_radius,
        });
        z_prev = Some(res.z_star);
    }
    Ok(out)
}

/// `0, stride, 2·stride, …` plus the final index.
pub fn sample_indices(len: usize, stride: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).step_by(stride.max(1)).collect();
    if len > 0 && idx.last() != Some(&(len - 1)) {
        idx.push(len - 1);
    }
    idx
}
