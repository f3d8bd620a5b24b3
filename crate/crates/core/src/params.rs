use crate::error::{Error, Result};
use crate::linalg::{all_finite, norm_sq};
use crate::problem::Problem;

pub const DEFAULT_EPS_V: f64 = 1e-10;
pub const DEFAULT_EPS_TIE: f64 = 1e-9;

/// Damping/regularization exponents plus the fixed-step integrator settings.
///
/// `beta = 0` selects the unregularized system; the regularization term is
/// then skipped outright rather than evaluated as `0 / t^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynParams {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub q: f64,
    pub t0: f64,
    pub h: f64,
    pub t_end: f64,
    pub eps_v: f64,
    pub eps_tie: f64,
}

impl DynParams {
    pub fn new(alpha: f64, beta: f64, p: f64, q: f64, t0: f64, h: f64, t_end: f64) -> Self {
        DynParams {
            alpha,
            beta,
            p,
            q,
            t0,
            h,
            t_end,
            eps_v: DEFAULT_EPS_V,
            eps_tie: DEFAULT_EPS_TIE,
        }
    }

    /// Damping coefficient `α / t^q`.
    #[inline]
    pub fn damping(&self, t: f64) -> f64 {
        if self.q == 1.0 {
            self.alpha / t
        } else {
            self.alpha / t.powf(self.q)
        }
    }

    /// Regularization weight `β / t^p`, exactly zero when `β = 0`.
    #[inline]
    pub fn reg(&self, t: f64) -> f64 {
        if self.beta == 0.0 {
            0.0
        } else {
            self.beta / t.powf(self.p)
        }
    }

    /// `t_k = t0 + k h`.
    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + (k as f64) * self.h
    }

    /// Number of steps needed to reach `t_end` on the grid `t0 + k h`.
    pub fn num_steps(&self) -> usize {
        let span = (self.t_end - self.t0) / self.h;
        if span <= 0.0 {
            0
        } else {
            (span - 1e-9).ceil().max(0.0) as usize
        }
    }

    pub fn is_regularized(&self) -> bool {
        self.beta > 0.0
    }
}

/// Checks every [`DynParams`] invariant and names the first offending field.
///
/// `t_end == t0` is accepted and yields a single-state trajectory.
pub fn validate_params(params: &DynParams) -> Result<()> {
    let DynParams {
        alpha,
        beta,
        p,
        q,
        t0,
        h,
        t_end,
        eps_v,
        eps_tie,
    } = *params;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", format!("alpha must be > 0, got {alpha}")));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::param("beta", format!("beta must be >= 0, got {beta}")));
    }
    if !(p > 0.0 && p <= 2.0) {
        return Err(Error::param("p", format!("p out of (0,2], got {p}")));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::param("q", format!("q out of (0,1], got {q}")));
    }
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::param("t0", format!("t0 must be > 0, got {t0}")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::param("h", format!("h must be > 0, got {h}")));
    }
    if !(t_end >= t0 && t_end.is_finite()) {
        return Err(Error::param("T", format!("T must be >= t0 = {t0}, got {t_end}")));
    }
    if t_end > t0 && h >= t_end - t0 {
        return Err(Error::param(
            "h",
            format!("h = {h} must be smaller than T - t0 = {}", t_end - t0),
        ));
    }
    if !(eps_v >= 0.0) {
        return Err(Error::param("eps_v", format!("eps_v must be >= 0, got {eps_v}")));
    }
    if !(eps_tie >= 0.0) {
        return Err(Error::param("eps_tie", format!("eps_tie must be >= 0, got {eps_tie}")));
    }
    Ok(())
}

/// Position and velocity at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl State {
    pub fn new(t: f64, x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        Error::check_dim(x.len(), v.len(), "velocity length")?;
        if !(t.is_finite() && all_finite(&x) && all_finite(&v)) {
            return Err(Error::NonFinite { t });
        }
        Ok(State { t, x, v })
    }
}

/// Uniform level offset `a_i = β/(2 t0^p) ‖x0‖² + ½‖v0‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelOffset {
    pub a: Vec<f64>,
}

pub fn level_offset(
    problem: &Problem,
    params: &DynParams,
    x0: &[f64],
    v0: &[f64],
) -> Result<LevelOffset> {
    problem.check_point(x0, "x0")?;
    problem.check_point(v0, "v0")?;
    let a = 0.5 * params.reg(params.t0) * norm_sq(x0) + 0.5 * norm_sq(v0);
    Ok(LevelOffset {
        a: vec![a; problem.m()],
    })
}

/// `true` iff `f_i(x) <= reference_i` for every objective.
pub fn level_set_membership(problem: &Problem, x: &[f64], reference: &[f64]) -> Result<bool> {
    Error::check_dim(problem.m(), reference.len(), "reference values")?;
    problem.check_point(x, "x")?;
    Ok(problem
        .values(x)
        .iter()
        .zip(reference)
        .all(|(f, r)| f <= r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{mop_ex1_problem, mop_ex2_problem};

    fn fig2() -> DynParams {
        DynParams::new(4.0, 0.5, 1.75, 0.875, 1.0, 1e-2, 100.0)
    }

    #[test]
    fn accepts_reference_settings() {
        validate_params(&fig2()).unwrap();
        let mavd = DynParams::new(4.0, 0.0, 1.75, 1.0, 1.0, 1e-2, 100.0);
        validate_params(&mavd).unwrap();
    }

    #[test]
    fn rejects_each_field() {
        let cases: Vec<(&str, Box<dyn Fn(&mut DynParams)>)> = vec![
            ("alpha", Box::new(|p| p.alpha = 0.0)),
            ("beta", Box::new(|p| p.beta = -1.0)),
            ("p", Box::new(|p| p.p = 0.0)),
            ("p", Box::new(|p| p.p = 2.5)),
            ("q", Box::new(|p| p.q = 1.2)),
            ("q", Box::new(|p| p.q = 0.0)),
            ("t0", Box::new(|p| p.t0 = 0.0)),
            ("h", Box::new(|p| p.h = 0.0)),
            ("T", Box::new(|p| p.t_end = 0.5)),
            ("h", Box::new(|p| p.h = 99.0)),
            ("eps_v", Box::new(|p| p.eps_v = -1.0)),
            ("eps_tie", Box::new(|p| p.eps_tie = f64::NAN)),
        ];
        for (field, mutate) in cases {
            let mut p = fig2();
            mutate(&mut p);
            match validate_params(&p) {
                Err(Error::InvalidParam { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{field}: {other:?}"),
            }
        }
    }

    #[test]
    fn p_zero_message() {
        let mut p = fig2();
        p.p = 0.0;
        let msg = validate_params(&p).unwrap_err().to_string();
        assert!(msg.contains("p out of (0,2]"), "{msg}");
    }

    #[test]
    fn empty_horizon_is_valid() {
        let mut p = fig2();
        p.t_end = p.t0;
        validate_params(&p).unwrap();
        assert_eq!(p.num_steps(), 0);
    }

    #[test]
    fn step_count_hits_horizon() {
        let p = fig2();
        assert_eq!(p.num_steps(), 9900);
        assert!((p.time(p.num_steps()) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn unregularized_weight_is_exactly_zero() {
        let p = DynParams::new(4.0, 0.0, 1.75, 1.0, 1.0, 1e-2, 100.0);
        assert_eq!(p.reg(0.0), 0.0);
    }

    #[test]
    fn level_offset_cases() {
        let prob = mop_ex1_problem();
        let p = fig2();
        let zero = level_offset(&prob, &p, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(zero.a, vec![0.0, 0.0]);
        // 0.5 / 2 * (6.25 + 0.25)
        let a = level_offset(&prob, &p, &[2.5, 0.5], &[0.0, 0.0]).unwrap();
        for ai in a.a {
            assert!((ai - 1.625).abs() < 1e-15);
        }
        let mut mavd = p;
        mavd.beta = 0.0;
        let a = level_offset(&prob, &mavd, &[2.5, 0.5], &[1.0, 2.0]).unwrap();
        assert_eq!(a.a, vec![2.5, 2.5]);
    }

    #[test]
    fn level_set_cases() {
        let prob = mop_ex2_problem();
        let x = [1.5, -0.3, 7.0, 2.0];
        assert!(level_set_membership(&prob, &x, &prob.values(&x)).unwrap());
        // F((2,3,4,5)) = (2.5, 6.5), F((0,1,0,0)) = (0.5, 0.5), F((5,5,0,0)) = (16, 26)
        let r = prob.values(&[2.0, 3.0, 4.0, 5.0]);
        assert_eq!(r, vec![2.5, 6.5]);
        assert!(level_set_membership(&prob, &[0.0, 1.0, 0.0, 0.0], &r).unwrap());
        let r = prob.values(&[0.0, 1.0, 0.0, 0.0]);
        assert!(!level_set_membership(&prob, &[5.0, 5.0, 0.0, 0.0], &r).unwrap());
        assert!(level_set_membership(&prob, &x, &[1.0]).is_err());
    }
}
