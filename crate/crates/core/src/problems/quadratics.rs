use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::problem::{FnObjective, Objective, Problem};

/// `m` quadratics `½ (x − c_i)ᵀ A_i (x − c_i)` with spectra in
/// `[1/conditioning, 1]`, deterministic in `seed`.
pub fn random_quadratics(seed: u64, n: usize, m: usize, conditioning: f64) -> Result<Problem> {
    if n == 0 || m == 0 {
        return Err(Error::Problem("random_quadratics needs n, m >= 1".into()));
    }
    if !(conditioning >= 1.0) {
        return Err(Error::Problem("conditioning must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut comps: Vec<Arc<dyn Objective>> = Vec::with_capacity(m);
    let mut lips = Vec::with_capacity(m);
    for _ in 0..m {
        let gauss = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
        let basis = gauss.qr().q();
        // log-uniform spectrum pinned at both ends for n >= 2
        let eig: Vec<f64> = (0..n)
            .map(|k| match (k, n) {
                (0, _) => 1.0,
                (1, _) => 1.0 / conditioning,
                _ => conditioning.powf(-rng.random_range(0.0..=1.0)),
            })
            .collect();
        let a = &basis * DMatrix::from_diagonal(&DVector::from_vec(eig.clone())) * basis.transpose();
        let a = (&a + a.transpose()) * 0.5;
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        lips.push(eig.iter().cloned().fold(0.0, f64::max));
        let (a_f, c_f) = (a.clone(), c.clone());
        comps.push(Arc::new(FnObjective::new(
            move |x: &[f64]| {
                let d = DVector::from_iterator(n, x.iter().zip(&c_f).map(|(x, c)| x - c));
                0.5 * d.dot(&(&a_f * &d))
            },
            move |x: &[f64]| {
                let d = DVector::from_iterator(n, x.iter().zip(&c).map(|(x, c)| x - c));
                (&a * d).iter().copied().collect()
            },
        )));
    }
    Problem::new(format!("quad:{seed}:{n}:{m}"), n, comps)?.with_lipschitz(lips)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_objective_minimizer() {
        let p = random_quadratics(4, 3, 1, 10.0).unwrap();
        // gradient vanishes only at c_1; Newton step from 0 lands there
        let g0 = p.gradient(0, &[0.0; 3]);
        let e: Vec<Vec<f64>> = (0..3)
            .map(|k| {
                let mut x = vec![0.0; 3];
                x[k] = 1.0;
                let g = p.gradient(0, &x);
                g.iter().zip(&g0).map(|(a, b)| a - b).collect()
            })
            .collect();
        let a = DMatrix::from_fn(3, 3, |i, j| e[j][i]);
        let c = a.lu().solve(&-DVector::from_vec(g0)).unwrap();
        let c: Vec<f64> = c.iter().copied().collect();
        assert!(crate::linalg::norm(&p.gradient(0, &c)) < 1e-12);
        assert!(p.value(0, &c).abs() < 1e-12);
    }

    #[test]
    fn deterministic_in_seed() {
        let a = random_quadratics(42, 3, 2, 10.0).unwrap();
        let b = random_quadratics(42, 3, 2, 10.0).unwrap();
        let c = random_quadratics(43, 3, 2, 10.0).unwrap();
        let x = [0.3, -1.2, 2.0];
        for i in 0..2 {
            assert_eq!(a.value(i, &x).to_bits(), b.value(i, &x).to_bits());
            assert_eq!(a.gradient(i, &x), b.gradient(i, &x));
        }
        assert_ne!(a.value(0, &x), c.value(0, &x));
    }

    #[test]
    fn spectrum_within_bounds() {
        let p = random_quadratics(8, 4, 3, 25.0).unwrap();
        for i in 0..3 {
            let g0 = p.gradient(i, &[0.0; 4]);
            let a = DMatrix::from_fn(4, 4, |r, k| {
                let mut x = [0.0; 4];
                x[k] = 1.0;
                p.gradient(i, &x)[r] - g0[r]
            });
            let eig = a.symmetric_eigen().eigenvalues;
            for &l in eig.iter() {
                assert!(l >= 1.0 / 25.0 - 1e-12 && l <= 1.0 + 1e-12, "{l}");
            }
        }
    }
}
