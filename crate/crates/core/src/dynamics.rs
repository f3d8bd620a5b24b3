//! Fixed-step integration of the inertial system.
//!
//! The set-valued right-hand side is resolved at the lagged (backward
//! difference) velocity; the remaining linear implicitness of the stencil
//!
//! ```text
//! (x_{k+1} − 2x_k + x_{k−1})/h² + (α/t_k^q)(x_{k+1} − x_k)/h + β/t_k^p x_k + g_k = 0
//! ```
//!
//! is solved exactly for `x_{k+1}`.

use crate::error::{Error, Result};
use crate::linalg::{all_finite, combine, dot, norm};
use crate::params::{validate_params, DynParams, State};
use crate::problem::Problem;
use crate::simplex_qp::{min_norm_combination_warm, steepest_direction};

/// Per-step notes on how the selection was made.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepFlags {
    /// `‖v‖ ≤ eps_v`: minimal-norm element of the full regularized hull.
    pub degenerate_velocity: bool,
    /// More than one vertex was near-active.
    pub tie: bool,
    /// A warm start was offered but discarded because the active set moved.
    pub warm_reset: bool,
}

impl StepFlags {
    pub fn labels(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.degenerate_velocity {
            out.push("degenerate");
        }
        if self.tie {
            out.push("tie");
        }
        if self.warm_reset {
            out.push("warm_reset");
        }
        out
    }
}

/// Acceleration and weights selected at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsEval {
    pub a: Vec<f64>,
    pub theta: Vec<f64>,
    pub flags: StepFlags,
}

/// Samples `(t_k, x_k, v_k)` with the acceleration, weights and flags selected
/// at each of them. All four vectors have the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: DynParams,
    pub states: Vec<State>,
    pub accel: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
    pub flags: Vec<StepFlags>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("nonempty trajectory")
    }

    /// A resting trajectory at `x` over the first `len` grid times.
    pub fn constant(params: &DynParams, x: &[f64], len: usize) -> Self {
        let n = x.len();
        Trajectory {
            params: *params,
            states: (0..len)
                .map(|k| State {
                    t: params.time(k),
                    x: x.to_vec(),
                    v: vec![0.0; n],
                })
                .collect(),
            accel: vec![vec![0.0; n]; len],
            weights: vec![vec![1.0]; len],
            flags: vec![StepFlags::default(); len],
        }
    }

    /// Rebuilds a trajectory from recorded samples on the grid of `params`.
    ///
    /// Accelerations are the second differences of the positions (one-sided
    /// at the ends), so a recording whose velocities were tampered with no
    /// longer satisfies the velocity inequality.
    pub fn from_samples(
        params: &DynParams,
        states: Vec<State>,
        weights: Vec<Vec<f64>>,
        flags: Vec<StepFlags>,
    ) -> Result<Self> {
        let len = states.len();
        if len == 0 {
            return Err(Error::Problem("no samples".into()));
        }
        Error::check_dim(len, weights.len(), "weights")?;
        Error::check_dim(len, flags.len(), "flags")?;
        let n = states[0].x.len();
        for (k, s) in states.iter().enumerate() {
            Error::check_dim(n, s.x.len(), "sample position")?;
            Error::check_dim(n, s.v.len(), "sample velocity")?;
            if (s.t - params.time(k)).abs() > 1e-9 * (1.0 + s.t.abs()) {
                return Err(Error::Problem(format!(
                    "sample {k} at t = {} is off the grid (expected {})",
                    s.t,
                    params.time(k)
                )));
            }
        }
        let h2 = params.h * params.h;
        let accel = (0..len)
            .map(|k| {
                if len < 3 {
                    return vec![0.0; n];
                }
                let c = k.clamp(1, len - 2);
                (0..n)
                    .map(|d| {
                        (states[c + 1].x[d] - 2.0 * states[c].x[d] + states[c - 1].x[d]) / h2
                    })
                    .collect()
            })
            .collect();
        Ok(Trajectory {
            params: *params,
            states,
            accel,
            weights,
            flags,
        })
    }
}

/// `a = −α/t^q v − β/t^p x − g` with `g ∈ C(x)` maximizing `⟨g, v⟩`.
///
/// Near-ties in `⟨∇f_i, v⟩` are broken by the minimal-norm element of the
/// tied face; at (numerically) zero velocity `g` is the minimal-norm element
/// of `C(x) + β/t^p x`, minus the shift.
pub fn di_rhs(problem: &Problem, params: &DynParams, state: &State) -> Result<RhsEval> {
    di_rhs_warm(problem, params, state, None)
}

pub(crate) fn di_rhs_warm(
    problem: &Problem,
    params: &DynParams,
    state: &State,
    warm: Option<&[f64]>,
) -> Result<RhsEval> {
    problem.check_point(&state.x, "state.x")?;
    problem.check_point(&state.v, "state.v")?;
    if !(state.t >= params.t0) {
        return Err(Error::param("t", format!("t = {} is below t0", state.t)));
    }
    let m = problem.m();
    let n = problem.n();
    let grads = problem.gradients(&state.x);
    if !grads.iter().all(|g| all_finite(g)) {
        return Err(Error::NonFinite { t: state.t });
    }
    let reg = params.reg(state.t);
    let damp = params.damping(state.t);
    let speed = norm(&state.v);
    let mut flags = StepFlags::default();

    let theta = if speed <= params.eps_v {
        flags.degenerate_velocity = true;
        let shift: Vec<f64> = state.x.iter().map(|x| reg * x).collect();
        steepest_direction(problem, &state.x, &shift)?.theta
    } else {
        let scores: Vec<f64> = grads.iter().map(|g| dot(g, &state.v)).collect();
        let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let gmax = grads.iter().map(|g| norm(g)).fold(0.0, f64::max);
        let tol = params.eps_tie * (1.0 + speed * gmax);
        let active: Vec<usize> = (0..m).filter(|&i| scores[i] >= best - tol).collect();
        let mut theta = vec![0.0; m];
        if active.len() == 1 {
            theta[active[0]] = 1.0;
        } else {
            flags.tie = true;
            let face: Vec<Vec<f64>> = active.iter().map(|&i| grads[i].clone()).collect();
            let sub_warm = warm.and_then(|w| {
                let outside: f64 = (0..m).filter(|i| !active.contains(i)).map(|i| w[i]).sum();
                (outside == 0.0).then(|| active.iter().map(|&i| w[i]).collect::<Vec<_>>())
            });
            if warm.is_some() && sub_warm.is_none() {
                flags.warm_reset = true;
            }
            let sol = min_norm_combination_warm(&face, &vec![0.0; n], sub_warm.as_deref())?;
            for (k, &i) in active.iter().enumerate() {
                theta[i] = sol.theta[k];
            }
        }
        theta
    };
    let g = combine(&theta, &grads, &vec![0.0; n]);
    let a: Vec<f64> = (0..n)
        .map(|d| -damp * state.v[d] - reg * state.x[d] - g[d])
        .collect();
    Ok(RhsEval { a, theta, flags })
}

/// One stencil step from `prev = (t_k, x_k, ·)` and `x_{k−1}`.
pub fn step(
    problem: &Problem,
    params: &DynParams,
    prev: &State,
    prev_prev_x: &[f64],
) -> Result<State> {
    Ok(step_with(problem, params, prev, prev_prev_x, None)?.0)
}

fn step_with(
    problem: &Problem,
    params: &DynParams,
    prev: &State,
    prev_prev_x: &[f64],
    warm: Option<&[f64]>,
) -> Result<(State, RhsEval)> {
    problem.check_point(prev_prev_x, "prev_prev_x")?;
    let h = params.h;
    let xk = &prev.x;
    let v_lag: Vec<f64> = xk
        .iter()
        .zip(prev_prev_x)
        .map(|(a, b)| (a - b) / h)
        .collect();
    let lagged = State {
        t: prev.t,
        x: xk.clone(),
        v: v_lag,
    };
    let rhs = di_rhs_warm(problem, params, &lagged, warm)?;
    let grads = problem.gradients(xk);
    let g = combine(&rhs.theta, &grads, &vec![0.0; xk.len()]);
    let reg = params.reg(prev.t);
    let c = params.alpha * h / prev.t.powf(params.q);
    let x_next: Vec<f64> = (0..xk.len())
        .map(|d| {
            (2.0 * xk[d] - prev_prev_x[d] + c * xk[d] - h * h * (reg * xk[d] + g[d])) / (1.0 + c)
        })
        .collect();
    let k = ((prev.t - params.t0) / h).round() as usize;
    let t_next = params.time(k + 1);
    if !all_finite(&x_next) {
        return Err(Error::NonFinite { t: t_next });
    }
    let v_next = x_next.iter().zip(xk).map(|(a, b)| (a - b) / h).collect();
    Ok((
        State {
            t: t_next,
            x: x_next,
            v: v_next,
        },
        RhsEval {
            a: rhs.a,
            theta: rhs.theta,
            flags: rhs.flags,
        },
    ))
}

/// Integrates from `(x0, v0)` at `t0` to the first grid time `>= T`.
///
/// `x_1 = x_0 + h v_0 + ½ h² a_0`; afterwards every state carries the
/// backward-difference velocity and the acceleration selected at it.
pub fn integrate(problem: &Problem, params: &DynParams, x0: &[f64], v0: &[f64]) -> Result<Trajectory> {
    validate_params(params)?;
    let s0 = State::new(params.t0, x0.to_vec(), v0.to_vec())?;
    problem.check_point(x0, "x0")?;
    let steps = params.num_steps();
    let mut traj = Trajectory {
        params: *params,
        states: Vec::with_capacity(steps + 1),
        accel: Vec::with_capacity(steps + 1),
        weights: Vec::with_capacity(steps + 1),
        flags: Vec::with_capacity(steps + 1),
    };
    let rhs0 = di_rhs(problem, params, &s0)?;
    if steps == 0 {
        push(&mut traj, s0, rhs0);
        return Ok(traj);
    }
    let h = params.h;
    let x1: Vec<f64> = (0..x0.len())
        .map(|d| x0[d] + h * v0[d] + 0.5 * h * h * rhs0.a[d])
        .collect();
    if !all_finite(&x1) {
        return Err(Error::NonFinite { t: params.time(1) });
    }
    let v1 = x1.iter().zip(x0).map(|(a, b)| (a - b) / h).collect();
    let mut warm = Some(rhs0.theta.clone());
    push(&mut traj, s0, rhs0);
    let mut cur = State {
        t: params.time(1),
        x: x1,
        v: v1,
    };
    for _ in 1..steps {
        let prev_x = &traj.states.last().expect("seeded").x;
        let (next, rhs) = step_with(problem, params, &cur, prev_x, warm.as_deref())?;
        warm = Some(rhs.theta.clone());
        push(&mut traj, cur, rhs);
        cur = next;
    }
    let last = di_rhs_warm(problem, params, &cur, warm.as_deref())?;
    push(&mut traj, cur, last);
    Ok(traj)
}

fn push(traj: &mut Trajectory, s: State, rhs: RhsEval) {
    traj.states.push(s);
    traj.accel.push(rhs.a);
    traj.weights.push(rhs.theta);
    traj.flags.push(rhs.flags);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{FnObjective, Objective};
    use crate::problems::{mop_ex1_problem, mop_ex2_problem, random_quadratics};
    use std::sync::Arc;

    fn half_sq_1d() -> Problem {
        let f: Arc<dyn Objective> = Arc::new(FnObjective::new(
            |x: &[f64]| 0.5 * x[0] * x[0],
            |x: &[f64]| vec![x[0]],
        ));
        Problem::new("sq", 1, vec![f]).unwrap()
    }

    #[test]
    fn single_objective_rhs() {
        let p = random_quadratics(2, 3, 1, 10.0).unwrap();
        let params = DynParams::new(3.0, 0.7, 1.5, 0.6, 1.0, 1e-2, 10.0);
        let s = State::new(2.0, vec![0.3, -1.0, 2.0], vec![1.0, 0.5, -0.2]).unwrap();
        let r = di_rhs(&p, &params, &s).unwrap();
        let g = p.gradient(0, &s.x);
        for d in 0..3 {
            let want = -3.0 / 2f64.powf(0.6) * s.v[d] - 0.7 / 2f64.powf(1.5) * s.x[d] - g[d];
            assert!((r.a[d] - want).abs() < 1e-14);
        }
        assert_eq!(r.theta, vec![1.0]);
    }

    #[test]
    fn rest_at_common_minimizer() {
        let p = half_sq_1d();
        let params = DynParams::new(4.0, 0.0, 1.0, 1.0, 1.0, 0.1, 2.0);
        let r = di_rhs(&p, &params, &State::new(1.0, vec![0.0], vec![0.0]).unwrap()).unwrap();
        assert_eq!(r.a, vec![0.0]);
        assert!(r.flags.degenerate_velocity);
        let next = step(&p, &params, &State::new(1.0, vec![0.0], vec![0.0]).unwrap(), &[0.0]).unwrap();
        assert_eq!(next.x, vec![0.0]);
    }

    #[test]
    fn one_step_by_hand() {
        // x_{k+1} = (2 − 1 + 0.4 − 0.01) / 1.4
        let p = half_sq_1d();
        let params = DynParams::new(4.0, 0.0, 1.0, 1.0, 1.0, 0.1, 2.0);
        let prev = State::new(1.0, vec![1.0], vec![0.0]).unwrap();
        let next = step(&p, &params, &prev, &[1.0]).unwrap();
        assert!((next.x[0] - 1.39 / 1.4).abs() < 1e-15);
        assert!((next.t - 1.1).abs() < 1e-15);
    }

    #[test]
    fn mop_ex2_rhs_at_rest_matches_grid() {
        let p = mop_ex2_problem();
        let params = DynParams::new(4.0, 0.5, 1.1, 0.8, 1.0, 1e-3, 100.0);
        let x = [2.0, 3.0, 4.0, 5.0];
        let r = di_rhs(&p, &params, &State::new(1.0, x.to_vec(), vec![0.0; 4]).unwrap()).unwrap();
        // min over θ of ‖θ∇f1 + (1−θ)∇f2 + βx‖², ∇f1 = (1,2,0,0), ∇f2 = (3,2,0,0)
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=100_000 {
            let th = k as f64 / 100_000.0;
            let w = [
                th * 1.0 + (1.0 - th) * 3.0 + 1.0,
                2.0 + 1.5,
                2.0,
                2.5,
            ];
            let v: f64 = w.iter().map(|a| a * a).sum();
            if v < best.0 {
                best = (v, th);
            }
        }
        // the hull point closest to −βx is ∇f1, so a = −βx − ∇f1
        assert!((r.theta[0] - best.1).abs() < 1e-4);
        let want = [-1.0 - 1.0, -1.5 - 2.0, -2.0, -2.5];
        for d in 0..4 {
            assert!((r.a[d] - want[d]).abs() < 1e-9, "{:?}", r.a);
        }
    }

    #[test]
    fn tie_takes_min_norm_face_element() {
        let p = mop_ex2_problem();
        let params = DynParams::new(4.0, 0.0, 1.0, 1.0, 1.0, 1e-3, 100.0);
        // v orthogonal to ∇f1 − ∇f2 = (−2,0,0,0)
        let s = State::new(1.0, vec![0.0, 3.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let r = di_rhs(&p, &params, &s).unwrap();
        assert!(r.flags.tie);
        assert!((r.theta[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_horizon_single_state() {
        let p = mop_ex1_problem();
        let params = DynParams::new(4.0, 0.5, 1.75, 0.875, 1.0, 1e-2, 1.0);
        let tr = integrate(&p, &params, &[2.5, 0.5], &[0.0, 0.0]).unwrap();
        assert_eq!(tr.len(), 1);
        assert_eq!(tr.accel.len(), 1);
    }

    #[test]
    fn grid_times_exact() {
        let p = mop_ex1_problem();
        let params = DynParams::new(4.0, 0.5, 1.75, 0.875, 1.0, 1e-2, 3.0);
        let tr = integrate(&p, &params, &[2.5, 0.5], &[0.0, 0.0]).unwrap();
        assert_eq!(tr.len(), 201);
        for (k, s) in tr.states.iter().enumerate() {
            assert_eq!(s.t, params.time(k));
        }
        assert_eq!(tr.weights.len(), tr.len());
        assert_eq!(tr.flags.len(), tr.len());
    }

    #[test]
    fn half_start_with_initial_velocity() {
        let p = half_sq_1d();
        let params = DynParams::new(2.0, 0.3, 1.0, 0.5, 1.0, 0.01, 1.02);
        let tr = integrate(&p, &params, &[1.0], &[2.0]).unwrap();
        let a0 = -2.0 * 2.0 - 0.3 * 1.0 - 1.0;
        assert!((tr.states[1].x[0] - (1.0 + 0.02 + 0.5 * 1e-4 * a0)).abs() < 1e-15);
        assert_eq!(tr.states[0].v, vec![2.0]);
    }

    #[test]
    fn weight_identity_holds() {
        let p = mop_ex1_problem();
        let params = DynParams::new(4.0, 0.5, 1.75, 0.875, 1.0, 1e-2, 20.0);
        let tr = integrate(&p, &params, &[2.5, 0.5], &[0.0, 0.0]).unwrap();
        for k in 0..tr.len() {
            let s = &tr.states[k];
            let g = combine(&tr.weights[k], &p.gradients(&s.x), &[0.0, 0.0]);
            let res: Vec<f64> = (0..2)
                .map(|d| {
                    tr.accel[k][d] + params.damping(s.t) * s.v[d] + params.reg(s.t) * s.x[d] + g[d]
                })
                .collect();
            assert!(norm(&res) <= 1e-9 * (1.0 + norm(&tr.accel[k])));
        }
    }

    #[test]
    fn rebuilt_accel_follows_stencil() {
        let p = mop_ex1_problem();
        let params = DynParams::new(4.0, 0.5, 1.75, 0.875, 1.0, 1e-2, 5.0);
        let tr = integrate(&p, &params, &[2.5, 0.5], &[0.0, 0.0]).unwrap();
        let re = Trajectory::from_samples(
            &params,
            tr.states.clone(),
            tr.weights.clone(),
            tr.flags.clone(),
        )
        .unwrap();
        // second difference = −damping·forward difference − β/t^p x − g
        let h = params.h;
        for k in 1..tr.len() - 1 {
            let s = &tr.states[k];
            let g = combine(&tr.weights[k], &p.gradients(&s.x), &[0.0, 0.0]);
            for d in 0..2 {
                let fwd = (tr.states[k + 1].x[d] - s.x[d]) / h;
                let want = -params.damping(s.t) * fwd - params.reg(s.t) * s.x[d] - g[d];
                assert!((re.accel[k][d] - want).abs() <= 1e-7 * (1.0 + want.abs()));
            }
        }
        assert_eq!(re.accel[0], re.accel[1]);
    }

    #[test]
    fn rebuilt_rejects_off_grid_samples() {
        let params = DynParams::new(4.0, 0.0, 1.0, 1.0, 1.0, 0.1, 2.0);
        let mut tr = Trajectory::constant(&params, &[1.0], 4);
        tr.states[2].t += 0.05;
        assert!(Trajectory::from_samples(&params, tr.states, tr.weights, tr.flags).is_err());
    }

    #[test]
    fn nonfinite_step_reported() {
        let f: Arc<dyn Objective> = Arc::new(FnObjective::new(
            |x: &[f64]| 0.5e300 * x[0] * x[0],
            |x: &[f64]| vec![1e300 * x[0]],
        ));
        let p = Problem::new("stiff", 1, vec![f]).unwrap();
        let params = DynParams::new(1.0, 0.0, 1.0, 1.0, 1.0, 0.5, 100.0);
        assert!(matches!(
            integrate(&p, &params, &[1.0], &[0.0]),
            Err(Error::NonFinite { .. })
        ));
    }
}
