//! Properties of full-length runs on the segment and slab problems.

use moodyn_core::problems::{mop_ex1_problem, mop_ex2_problem};
use moodyn_core::*;

const MONITOR_BOUND: f64 = 0.05;

fn ex1_mtrigs() -> DynParams {
    DynParams::new(4.0, 0.5, 1.75, 0.875, 1.0, 1e-2, 100.0)
}

fn ex1_mavd() -> DynParams {
    DynParams::new(4.0, 0.0, 1.75, 1.0, 1.0, 1e-2, 100.0)
}

fn ex2(p: f64, q: f64) -> DynParams {
    DynParams::new(4.0, 0.5, p, q, 1.0, 1e-3, 100.0)
}

fn ex1_run(params: &DynParams) -> Trajectory {
    integrate(&mop_ex1_problem(), params, &[2.5, 0.5], &[0.0, 0.0]).unwrap()
}

fn ex2_run(params: &DynParams) -> Trajectory {
    integrate(&mop_ex2_problem(), params, &[2.0, 3.0, 4.0, 5.0], &[0.0; 4]).unwrap()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}

fn w_increase_ok(problem: &Problem, traj: &Trajectory) {
    let h = traj.params.h;
    for i in 0..problem.m() {
        let w = energy_w(problem, traj, i).unwrap();
        assert!(w.max_increase() <= 50.0 * h * h, "W_{i}: {}", w.max_increase());
    }
}

#[test]
fn ex1_energy_w_nonincreasing() {
    let p = mop_ex1_problem();
    w_increase_ok(&p, &ex1_run(&ex1_mtrigs()));
    w_increase_ok(&p, &ex1_run(&ex1_mavd()));
}

#[test]
fn ex1_monitors_within_bound() {
    let p = mop_ex1_problem();
    let reference = ex1_mtrigs();
    for params in [ex1_mtrigs(), ex1_mavd()] {
        let traj = ex1_run(&params);
        let path = regularization_path(&p, &traj, &reference, 10).unwrap();
        let rep = monitor_inequalities(&p, &traj, &path).unwrap();
        assert_eq!(rep.merit_bound.is_some(), params.beta > 0.0);
        assert_eq!(rep.distance_bound.is_some(), params.beta > 0.0);
        for s in rep.summaries() {
            assert!(s.worst() <= MONITOR_BOUND, "{} {:e}", s.name, s.worst());
        }
    }
}

#[test]
fn ex1_mtrigs_reaches_min_norm_point() {
    let p = mop_ex1_problem();
    let traj = ex1_run(&ex1_mtrigs());
    let x = &traj.last().x;
    let limit = (p.limit_map().unwrap())(x);
    assert!((x[1] - 1.0).abs() <= 0.05);
    assert!(dist(x, &limit) <= 0.05);
}

#[test]
fn ex1_limit_values_match_final_state() {
    let p = mop_ex1_problem();
    let traj = ex1_run(&ex1_mtrigs());
    let lim = limit_values(&p, &traj, 0.01).unwrap();
    for (f, g) in lim.f_inf.iter().zip(p.values(&traj.last().x)) {
        assert!((f - g).abs() <= 0.01);
    }
}

#[test]
fn ex2_limit_values_tail() {
    let p = mop_ex2_problem();
    let traj = ex2_run(&ex2(1.75, 0.8));
    // the tail still drifts toward the min-norm point, so the spread grows
    // linearly with the tail length
    let lim = limit_values(&p, &traj, 0.005).unwrap();
    // f_1 + f_2 ≥ 1 everywhere, attained on {0} × {1} × ℝ²
    assert!(lim.f_inf[0] + lim.f_inf[1] >= 1.0 - 1e-12);
    assert!(lim.spread.iter().all(|s| *s < 1e-3), "{:?}", lim.spread);
}

#[test]
fn ex2_merit_rate() {
    let p = mop_ex2_problem();
    let params = ex2(1.75, 0.8);
    let traj = ex2_run(&params);
    let phi = p.analytic_merit().unwrap();
    let (t, y): (Vec<f64>, Vec<f64>) = traj
        .states
        .iter()
        .step_by(100)
        .map(|s| (s.t, phi(&s.x)))
        .unzip();
    let fit = fit_rate(&Series::new(t, y), [10.0, 100.0]).unwrap();
    assert!(fit.slope <= -1.45, "slope {}", fit.slope);
}

#[test]
fn ex2_energy_derivative_monitor() {
    let p = mop_ex2_problem();
    let params = ex2(1.75, 0.8);
    let traj = ex2_run(&params);
    let path = regularization_path(&p, &traj, &params, 100).unwrap();
    let cfg = MonitorConfig {
        r: 0.8,
        lambda: 0.5,
        anchor: None,
    };
    let rep = monitor_inequalities_with(&p, &traj, &path, &cfg).unwrap();
    assert!(rep.energy.worst() <= MONITOR_BOUND, "{:e}", rep.energy.worst());
}

#[test]
fn ex2_path_energy_bounded() {
    let p = mop_ex2_problem();
    let params = ex2(1.75, 0.8);
    let traj = ex2_run(&params);
    let spec = EnergySpec::lambda_form(params.q, params.alpha / 4.0, Anchor::Path);
    let e = energy_e_strided(&p, &traj, &spec, 1e-10, 100).unwrap();
    let (early, late): (Vec<_>, Vec<_>) = e.t.iter().zip(&e.y).partition(|(t, _)| **t <= 10.0);
    let max = |v: Vec<(&f64, &f64)>| v.into_iter().map(|(_, y)| *y).fold(f64::NEG_INFINITY, f64::max);
    let (early, late) = (max(early), max(late));
    assert!(late <= 2.0 * early, "late {late} early {early}");
}

#[test]
fn ex2_velocity_integral_levels_off() {
    // q + 1 < p: the weighted kinetic integral converges
    let traj = ex2_run(&ex2(1.75, 0.6));
    let s = velocity_integral(&traj);
    let total = *s.y.last().unwrap();
    let half = s.t.iter().position(|t| *t >= 50.5).unwrap();
    assert!(total - s.y[half] <= 0.05 * total);
}

#[test]
fn ex2_w_and_monitors_across_sweep() {
    let p = mop_ex2_problem();
    let cells = [(0.25, 0.8), (0.75, 0.8), (1.25, 0.8), (1.1, 0.3), (1.1, 0.99)];
    for (pp, q) in cells {
        let params = ex2(pp, q);
        let traj = ex2_run(&params);
        w_increase_ok(&p, &traj);
        let path = regularization_path(&p, &traj, &params, 100).unwrap();
        let rep = monitor_inequalities(&p, &traj, &path).unwrap();
        assert!(rep.worst() <= MONITOR_BOUND, "p={pp} q={q}: {:e}", rep.worst());
    }
}
