//! Predicted decay exponents for `φ(x(t))`, `‖ẋ(t)‖` and `‖x(t) − z(t)‖`
//! as functions of the damping and regularization exponents.

use serde::Serialize;

/// Exponents `e` in `O(t^e)`; `None` where no rate is predicted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theory {
    pub regime: &'static str,
    pub merit: Option<f64>,
    pub velocity: Option<f64>,
    pub distance: Option<f64>,
}

pub const CRITICAL: &str = "critical — no theoretical rate";

const TOL: f64 = 1e-12;

fn eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL
}

/// Classifies `(p, q)`, checking the cases in the order
/// `p = q+1`, `p < q+1` with `q < 1`, `q = 1`, `p = 2`, `q+1 < p`, `2q < p`.
///
/// `β` and `α` matter only at the boundaries: `p = 2` needs `β ≥ q(1−q)`
/// and `q = 1` needs `α ≥ 3`.
pub fn classify(p: f64, q: f64, alpha: f64, beta: f64) -> Theory {
    let none = |regime| Theory {
        regime,
        merit: None,
        velocity: None,
        distance: None,
    };
    if eq(p, q + 1.0) {
        return none(CRITICAL);
    }
    if q < 1.0 - TOL && p < q + 1.0 {
        let m = q.max(p - q);
        return Theory {
            regime: "p<q+1",
            merit: Some(-p),
            velocity: Some((m - (p + 1.0)) / 2.0),
            distance: Some((m - 1.0) / 2.0),
        };
    }
    if eq(q, 1.0) {
        if alpha < 3.0 {
            return none("q=1 with alpha<3");
        }
        return Theory {
            regime: "q=1",
            merit: Some(-p),
            velocity: Some(-p / 2.0),
            distance: Some(0.0),
        };
    }
    let fast = |regime| Theory {
        regime,
        merit: Some(-2.0 * q),
        velocity: Some(-q),
        distance: Some(0.0),
    };
    if eq(p, 2.0) {
        if beta >= q * (1.0 - q) {
            return fast("p=2");
        }
        return none("p=2 with beta<q(1-q)");
    }
    if q + 1.0 < p {
        return fast("q+1<p");
    }
    if 2.0 * q < p {
        return fast("2q<p");
    }
    none("unclassified")
}

/// One-sided check: the fitted slope may be steeper than predicted but not
/// shallower by more than `margin`.
pub fn consistent(fitted: f64, theory: Option<f64>, margin: f64) -> Option<bool> {
    theory.map(|e| fitted <= e + margin)
}
