//! Two-objective problems whose weak Pareto sets are a rectangle and a slab.

use std::sync::Arc;

use crate::problem::{FnObjective, Objective, Problem};

/// The vertical segments `S_1 = {-1} × [1,2]` and `S_2 = {1} × [1,2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentProblemConfig {
    pub s1: [[f64; 2]; 2],
    pub s2: [[f64; 2]; 2],
}

impl Default for SegmentProblemConfig {
    fn default() -> Self {
        SegmentProblemConfig {
            s1: [[-1.0, 1.0], [-1.0, 2.0]],
            s2: [[1.0, 1.0], [1.0, 2.0]],
        }
    }
}

fn project_vertical(seg: [[f64; 2]; 2], x: &[f64]) -> [f64; 2] {
    let (lo, hi) = (seg[0][1].min(seg[1][1]), seg[0][1].max(seg[1][1]));
    [seg[0][0], x[1].clamp(lo, hi)]
}

fn half_dist_sq(seg: [[f64; 2]; 2]) -> Arc<dyn Objective> {
    Arc::new(FnObjective::new(
        move |x: &[f64]| {
            let p = project_vertical(seg, x);
            0.5 * ((x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2))
        },
        move |x: &[f64]| {
            let p = project_vertical(seg, x);
            vec![x[0] - p[0], x[1] - p[1]]
        },
    ))
}

/// `sup_s min(a − ½(s+1)², b − ½(s−1)²)` over `s ∈ [−1, 1]`, where the
/// crossing point is `s* = (a − b)/2`.
fn segment_sup_min(a: f64, b: f64) -> f64 {
    let s = 0.5 * (a - b);
    let v = if s > 1.0 {
        b
    } else if s < -1.0 {
        a
    } else {
        a - 0.5 * (s + 1.0).powi(2)
    };
    v.max(0.0)
}

/// `f_i(x) = ½ dist(x, S_i)²` on ℝ².
///
/// Weak Pareto set `conv(S_1 ∪ S_2) = [-1,1] × [1,2]`; path points approach
/// `(z_1, 1)`, the smallest-norm point with the same objective values.
pub fn mop_ex1_problem() -> Problem {
    let cfg = SegmentProblemConfig::default();
    let comps = vec![half_dist_sq(cfg.s1), half_dist_sq(cfg.s2)];
    Problem::new("mop-ex1", 2, comps)
        .and_then(|p| p.with_lipschitz(vec![1.0, 1.0]))
        .and_then(|p| p.with_r_bound(std::f64::consts::SQRT_2))
        .expect("static problem")
        .with_merit(Arc::new(move |x: &[f64]| {
            let a = 0.5 * (x[0] + 1.0).powi(2) + 0.5 * (x[1] - x[1].clamp(1.0, 2.0)).powi(2);
            let b = 0.5 * (x[0] - 1.0).powi(2) + 0.5 * (x[1] - x[1].clamp(1.0, 2.0)).powi(2);
            segment_sup_min(a, b)
        }))
        .with_limit_map(Arc::new(|z: &[f64]| vec![z[0].clamp(-1.0, 1.0), 1.0]))
}

/// Two shifted quadratics on ℝ⁴ with weak Pareto set `[-1,1] × {1} × ℝ²`.
pub fn mop_ex2_problem() -> Problem {
    let f = |c: f64| -> Arc<dyn Objective> {
        Arc::new(FnObjective::new(
            move |x: &[f64]| 0.5 * (x[0] - c).powi(2) + 0.5 * (x[1] - 1.0).powi(2),
            move |x: &[f64]| vec![x[0] - c, x[1] - 1.0, 0.0, 0.0],
        ))
    };
    Problem::new("mop-ex2", 4, vec![f(1.0), f(-1.0)])
        .and_then(|p| p.with_lipschitz(vec![1.0, 1.0]))
        .and_then(|p| p.with_r_bound(std::f64::consts::SQRT_2))
        .expect("static problem")
        .with_merit(Arc::new(|x: &[f64]| {
            let d1 = x[0] - x[0].clamp(-1.0, 1.0);
            0.5 * d1 * d1 + 0.5 * (x[1] - 1.0).powi(2)
        }))
        .with_limit_map(Arc::new(|z: &[f64]| vec![z[0].clamp(-1.0, 1.0), 1.0, 0.0, 0.0]))
}
