//! Convex quadratics over the unit simplex Δᵐ.
//!
//! The kernel minimizes `½ θᵀQθ + cᵀθ` by projected gradient with step `1/L`
//! (`L` a Gershgorin bound on `λ_max(Q)`). After every step the current
//! support is "polished" by solving the equality-constrained KKT system on
//! that face, which makes the small-`m` cases terminate exactly instead of
//! creeping. If the budget runs out, every face is enumerated.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{combine, dot, norm_sq};
use crate::problem::Problem;

const MAX_ITER: usize = 20_000;
const ENUMERATION_LIMIT: usize = 16;
/// Up to this size every solve is finished by an exact face enumeration, so
/// that interior optima (`w = 0`) come out exact rather than `δ_KKT`-close.
const REFINE_LIMIT: usize = 8;

/// Minimizer of `‖Σθ_i g_i + b‖²` over Δᵐ.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeights {
    pub theta: Vec<f64>,
    /// `Σθ_i g_i + b`
    pub w: Vec<f64>,
    /// `‖w‖²`
    pub value: f64,
    pub iterations: usize,
}

impl SimplexWeights {
    /// `max_i (‖w‖² − ⟨w, g_i + b⟩)`; nonpositive up to rounding at the optimum.
    pub fn kkt_residual(&self, g: &[Vec<f64>], b: &[f64]) -> f64 {
        let ww = norm_sq(&self.w);
        g.iter()
            .map(|gi| ww - (dot(&self.w, gi) + dot(&self.w, b)))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `δ_KKT = 1e-9 (1 + ‖w‖²)`
pub fn kkt_tolerance(value: f64) -> f64 {
    1e-9 * (1.0 + value)
}

/// Euclidean projection onto Δᵐ (sort-and-threshold).
///
/// Points already on the simplex (to rounding) are returned unchanged, which
/// makes the projection exactly idempotent.
pub fn project_simplex(y: &[f64]) -> Vec<f64> {
    let m = y.len();
    assert!(m >= 1, "project_simplex needs m >= 1");
    let sum: f64 = y.iter().sum();
    if y.iter().all(|&v| v >= 0.0) && (sum - 1.0).abs() <= 4.0 * m as f64 * f64::EPSILON {
        return y.to_vec();
    }
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let cand = (cum - 1.0) / (j + 1) as f64;
        if uj - cand > 0.0 {
            tau = cand;
        }
    }
    y.iter().map(|&v| (v - tau).max(0.0)).collect()
}

pub(crate) struct QpOutcome {
    pub theta: Vec<f64>,
    pub iterations: usize,
}

fn objective(q: &DMatrix<f64>, c: &[f64], theta: &[f64]) -> f64 {
    let t = DVector::from_column_slice(theta);
    0.5 * t.dot(&(q * &t)) + dot(c, theta)
}

fn gradient(q: &DMatrix<f64>, c: &[f64], theta: &[f64]) -> Vec<f64> {
    let t = DVector::from_column_slice(theta);
    let g = q * t;
    g.iter().zip(c).map(|(a, b)| a + b).collect()
}

/// Frank–Wolfe gap `⟨∇, θ⟩ − min_i ∇_i`, an upper bound on suboptimality.
fn fw_gap(grad: &[f64], theta: &[f64]) -> f64 {
    let min = grad.iter().cloned().fold(f64::INFINITY, f64::min);
    dot(grad, theta) - min
}

/// Minimizer of the quadratic restricted to the affine hull of `support`.
fn solve_face(q: &DMatrix<f64>, c: &[f64], support: &[usize]) -> Option<Vec<f64>> {
    let k = support.len();
    let mut kkt = DMatrix::<f64>::zeros(k + 1, k + 1);
    let mut rhs = DVector::<f64>::zeros(k + 1);
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            kkt[(a, b)] = q[(i, j)];
        }
        kkt[(a, k)] = 1.0;
        kkt[(k, a)] = 1.0;
        rhs[a] = -c[i];
    }
    rhs[k] = 1.0;
    let sol = match kkt.clone().lu().solve(&rhs) {
        Some(s) if s.iter().all(|v| v.is_finite()) => s,
        _ => kkt.svd(true, true).solve(&rhs, 1e-13).ok()?,
    };
    let mut theta = vec![0.0; q.nrows()];
    for (a, &i) in support.iter().enumerate() {
        theta[i] = sol[a];
    }
    theta.iter().all(|v| v.is_finite()).then_some(theta)
}

fn clean(theta: &mut [f64]) {
    for v in theta.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let s: f64 = theta.iter().sum();
    for v in theta.iter_mut() {
        *v /= s;
    }
}

/// Minimizes `½ θᵀQθ + cᵀθ` over Δᵐ until the Frank–Wolfe gap is `<= tol`.
///
/// `value` re-evaluates the objective for the final comparison between
/// candidates; callers with a factored form (`‖Cθ‖²`) avoid the cancellation
/// of `θᵀQθ` near zero that way.
pub(crate) fn simplex_qp(
    q: &DMatrix<f64>,
    c: &[f64],
    warm: Option<&[f64]>,
    tol: impl Fn(&[f64]) -> f64,
    value: impl Fn(&[f64]) -> f64,
) -> QpOutcome {
    let mut out = projected_gradient(q, c, warm, tol);
    let m = c.len();
    if m > 1 && m <= REFINE_LIMIT {
        if let Some(best) = enumerate_faces(q, c) {
            if value(&best) < value(&out.theta) {
                out.theta = best;
            }
        }
    }
    out
}

fn projected_gradient(
    q: &DMatrix<f64>,
    c: &[f64],
    warm: Option<&[f64]>,
    tol: impl Fn(&[f64]) -> f64,
) -> QpOutcome {
    let m = c.len();
    if m == 1 {
        return QpOutcome {
            theta: vec![1.0],
            iterations: 0,
        };
    }
    let mut theta = match warm {
        Some(w) if w.len() == m && w.iter().all(|v| v.is_finite()) => project_simplex(w),
        _ => vec![1.0 / m as f64; m],
    };
    let lip = (0..m)
        .map(|i| (0..m).map(|j| q[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if lip <= f64::MIN_POSITIVE {
        // linear objective: the best vertex
        let best = (0..m).min_by(|&a, &b| c[a].total_cmp(&c[b])).unwrap();
        let mut theta = vec![0.0; m];
        theta[best] = 1.0;
        return QpOutcome {
            theta,
            iterations: 0,
        };
    }

    for it in 0..MAX_ITER {
        let grad = gradient(q, c, &theta);
        if fw_gap(&grad, &theta) <= tol(&theta) {
            return QpOutcome {
                theta,
                iterations: it,
            };
        }
        let support: Vec<usize> = (0..m).filter(|&i| theta[i] > 0.0).collect();
        if let Some(face) = solve_face(q, c, &support) {
            if face.iter().all(|&v| v >= -1e-15) {
                let mut face = face;
                clean(&mut face);
                if objective(q, c, &face) <= objective(q, c, &theta) + 1e-15 {
                    let g = gradient(q, c, &face);
                    if fw_gap(&g, &face) <= tol(&face) {
                        return QpOutcome {
                            theta: face,
                            iterations: it + 1,
                        };
                    }
                    theta = face;
                }
            }
        }
        let grad = gradient(q, c, &theta);
        let trial: Vec<f64> = theta
            .iter()
            .zip(&grad)
            .map(|(t, g)| t - g / lip)
            .collect();
        theta = project_simplex(&trial);
    }

    if m > REFINE_LIMIT && m <= ENUMERATION_LIMIT {
        if let Some(best) = enumerate_faces(q, c) {
            let keep_current = objective(q, c, &theta) <= objective(q, c, &best);
            if !keep_current {
                theta = best;
            }
        }
    }
    QpOutcome {
        theta,
        iterations: MAX_ITER,
    }
}

fn enumerate_faces(q: &DMatrix<f64>, c: &[f64]) -> Option<Vec<f64>> {
    let m = c.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1u32 << m) {
        let support: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        let Some(mut theta) = solve_face(q, c, &support) else {
            continue;
        };
        if theta.iter().any(|&v| v < -1e-12) {
            continue;
        }
        clean(&mut theta);
        let val = objective(q, c, &theta);
        if best.as_ref().map_or(true, |(b, _)| val < *b) {
            best = Some((val, theta));
        }
    }
    best.map(|(_, t)| t)
}

/// Minimal-norm element of `conv{g_i} + b`.
pub fn min_norm_combination(g: &[Vec<f64>], b: &[f64]) -> Result<SimplexWeights> {
    min_norm_combination_warm(g, b, None)
}

/// [`min_norm_combination`] started from a caller-held `θ`.
pub fn min_norm_combination_warm(
    g: &[Vec<f64>],
    b: &[f64],
    warm: Option<&[f64]>,
) -> Result<SimplexWeights> {
    let m = g.len();
    if m == 0 {
        return Err(Error::Problem("min_norm_combination needs m >= 1".into()));
    }
    let n = b.len();
    for gi in g {
        Error::check_dim(n, gi.len(), "min_norm_combination vector")?;
    }
    let cols: Vec<Vec<f64>> = g
        .iter()
        .map(|gi| gi.iter().zip(b).map(|(a, c)| a + c).collect())
        .collect();
    let mut gram = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = 2.0 * dot(&cols[i], &cols[j]);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let zero = vec![0.0; m];
    // FW gap on ‖Cθ‖² is 2(‖w‖² − min_i⟨w, c_i⟩); keep half the KKT budget
    // as margin for the final recomputation of w.
    let outcome = simplex_qp(
        &gram,
        &zero,
        warm,
        |theta| kkt_tolerance(norm_sq(&combine(theta, g, b))),
        |theta| norm_sq(&combine(theta, g, b)),
    );
    let mut theta = outcome.theta;
    clean(&mut theta);
    let w = combine(&theta, g, b);
    let value = norm_sq(&w);
    Ok(SimplexWeights {
        theta,
        w,
        value,
        iterations: outcome.iterations,
    })
}

/// Minimal-norm element of `C(x) + shift`.
pub fn steepest_direction(problem: &Problem, x: &[f64], shift: &[f64]) -> Result<SimplexWeights> {
    problem.check_point(x, "x")?;
    problem.check_point(shift, "shift")?;
    min_norm_combination(&problem.gradients(x), shift)
}
