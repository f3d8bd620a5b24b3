//! Two objectives with a T-shaped weak Pareto set, for which the minimal-norm
//! solution map is discontinuous and the regularization path is known in
//! closed form.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::problem::{FnObjective, Objective, Problem};

/// Parameters of the prescribed path `q(t)`; `t0 = (192 β)^{1/p}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example25Config {
    pub beta: f64,
    pub p: f64,
    pub eta: f64,
}

impl Default for Example25Config {
    fn default() -> Self {
        Example25Config {
            beta: 0.5,
            p: 1.0,
            eta: 1.0 / 50.0,
        }
    }
}

impl Example25Config {
    pub fn t0(&self) -> f64 {
        (192.0 * self.beta).powf(1.0 / self.p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::param("beta", "beta must be > 0"));
        }
        if !(self.p > 0.0 && self.p <= 2.0) {
            return Err(Error::param("p", "p out of (0,2]"));
        }
        if !(self.eta > 0.0) {
            return Err(Error::param("eta", "eta must be > 0"));
        }
        Ok(())
    }
}

/// `½ max(y−3, 0)² + ½ max(2−y, 0)²`
fn band(y: f64) -> f64 {
    0.5 * (y - 3.0).max(0.0).powi(2) + 0.5 * (2.0 - y).max(0.0).powi(2)
}

fn band_prime(y: f64) -> f64 {
    (y - 3.0).max(0.0) - (2.0 - y).max(0.0)
}

const GUARD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Region {
    Disc,
    Wing,
    Outer,
}

fn region(x: &[f64]) -> Region {
    let (a, b) = (x[0].abs(), x[1] + 1.0);
    if a <= 1.0 && b <= (1.0 - a * a).max(0.0).sqrt() + GUARD {
        Region::Disc
    } else if a > 1.0 && b <= 0.0 {
        Region::Wing
    } else {
        Region::Outer
    }
}

pub(crate) fn g_value(x: &[f64]) -> f64 {
    match region(x) {
        Region::Disc => 0.5 * (x[0] * x[0] + x[1] * x[1]),
        Region::Wing => x[0].abs() + 0.5 * x[1] * x[1] - 0.5,
        Region::Outer => x[0].hypot(x[1] + 1.0) - (x[1] + 1.0),
    }
}

/// `∇g`, which is the projection onto the `Disc` region.
pub(crate) fn g_gradient(x: &[f64]) -> [f64; 2] {
    match region(x) {
        Region::Disc => [x[0], x[1]],
        Region::Wing => [x[0].signum(), x[1]],
        Region::Outer => {
            let r = x[0].hypot(x[1] + 1.0);
            [x[0] / r, (x[1] + 1.0) / r - 1.0]
        }
    }
}

fn component(c: f64) -> Arc<dyn Objective> {
    Arc::new(FnObjective::new(
        move |x: &[f64]| 0.5 * (x[0] - c).powi(2) + band(x[1]) + g_value(x),
        move |x: &[f64]| {
            let g = g_gradient(x);
            vec![x[0] - c + g[0], band_prime(x[1]) + g[1]]
        },
    ))
}

fn omega(cfg: &Example25Config, t: f64) -> f64 {
    (10.0 + (cfg.eta * t).sin()) / 4.0
}

/// Closed-form `(q(t), z(t))`.
pub fn example25_closed_path(cfg: &Example25Config, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    let t0 = cfg.t0();
    if !(t >= t0) {
        return Err(Error::param("t", format!("t = {t} is below t0 = {t0}")));
    }
    let w = omega(cfg, t);
    let tp = t.powf(cfg.p);
    let ratio = tp / (tp - cfg.beta * w);
    let s = (w + 1.0) * (ratio * ratio - 1.0).sqrt();
    Ok((vec![2.0 * s, 0.0], vec![-s, w]))
}

/// `f_{1,2}(x) = ½(x_1 ∓ 1)² + band(x_2) + g(x)` on ℝ².
///
/// The path oracle answers only for anchors on the prescribed `q(t)`.
pub fn example25_problem(cfg: &Example25Config) -> Problem {
    let cfg = *cfg;
    Problem::new("example25", 2, vec![component(1.0), component(-1.0)])
        .and_then(|p| p.with_lipschitz(vec![3.0, 3.0]))
        .expect("static problem")
        .with_path(Arc::new(move |t: f64, q: &[f64]| {
            let (qt, z) = example25_closed_path(&cfg, t).ok()?;
            let close = q
                .iter()
                .zip(&qt)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + b.abs()));
            close.then_some(z)
        }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_t0() {
        assert_eq!(Example25Config::default().t0(), 96.0);
    }

    #[test]
    fn g_gradient_examples() {
        assert_eq!(region(&[0.0, 0.0]), Region::Disc);
        assert_eq!(g_gradient(&[0.0, 0.0]), [0.0, 0.0]);
        assert_eq!(region(&[2.0, -2.0]), Region::Wing);
        assert_eq!(g_gradient(&[2.0, -2.0]), [1.0, -2.0]);
    }

    #[test]
    fn value_example() {
        let p = example25_problem(&Example25Config::default());
        assert!((p.value(0, &[0.0, 2.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn g_pieces_agree_on_boundaries() {
        for k in 0..=100 {
            let a = -1.0 + 0.02 * k as f64;
            let b = (1.0 - a * a).max(0.0).sqrt() - 1.0;
            let disc = 0.5 * (a * a + b * b);
            let outer = a.hypot(b + 1.0) - (b + 1.0);
            assert!((disc - outer).abs() < 1e-12, "{a}");
        }
        for k in 0..50 {
            let y = -1.0 - 0.1 * k as f64;
            let disc = 0.5 * (1.0 + y * y);
            let wing = 1.0 + 0.5 * y * y - 0.5;
            assert!((disc - wing).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_is_projection_onto_disc_region() {
        // nearest point of the region by brute force over its boundary
        for &x in &[[0.3, 2.0], [-2.0, 1.0], [3.0, -4.0], [0.5, -3.0], [-0.9, 0.1]] {
            let g = g_gradient(&x);
            if region(&x) == Region::Disc {
                assert_eq!(g, x);
                continue;
            }
            let mut best = (f64::INFINITY, [0.0, 0.0]);
            for k in 0..=200_000 {
                let th = std::f64::consts::PI * k as f64 / 200_000.0;
                let c = [th.cos(), th.sin() - 1.0];
                let d = (c[0] - x[0]).hypot(c[1] - x[1]);
                if d < best.0 {
                    best = (d, c);
                }
            }
            for side in [-1.0, 1.0] {
                let c = [side, x[1].min(-1.0)];
                let d = (c[0] - x[0]).hypot(c[1] - x[1]);
                if d < best.0 {
                    best = (d, c);
                }
            }
            assert!((g[0] - best.1[0]).abs() < 1e-4 && (g[1] - best.1[1]).abs() < 1e-4);
        }
    }

    #[test]
    fn closed_path_shape() {
        let cfg = Example25Config::default();
        assert!(example25_closed_path(&cfg, 95.0).is_err());
        for k in 0..200 {
            let t = cfg.t0() * (1.0 + 0.3 * k as f64);
            let (q, z) = example25_closed_path(&cfg, t).unwrap();
            assert!((2.25..=2.75).contains(&z[1]));
            assert_eq!(z[0], -q[0] / 2.0);
            assert_eq!(q[1], 0.0);
        }
    }

    #[test]
    fn path_oracle_requires_prescribed_anchor() {
        let cfg = Example25Config::default();
        let p = example25_problem(&cfg);
        let (q, z) = example25_closed_path(&cfg, 200.0).unwrap();
        let oracle = p.analytic_path().unwrap();
        assert_eq!(oracle(200.0, &q), Some(z));
        assert_eq!(oracle(200.0, &[0.0, 0.0]), None);
    }
}
