use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A differentiable convex scalar function on ℝⁿ.
pub trait Objective: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

/// Objective built from a pair of closures.
pub struct FnObjective<F, G> {
    f: F,
    g: G,
}

impl<F, G> FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(f: F, g: G) -> Self {
        FnObjective { f, g }
    }
}

impl<F, G> Objective for FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.g)(x)
    }
}

pub type MeritOracle = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// `(t, q) ↦ z(t)`; `None` when the oracle has no closed form for this `q`.
pub type PathOracle = Arc<dyn Fn(f64, &[f64]) -> Option<Vec<f64>> + Send + Sync>;
pub type PointMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A multiobjective problem `min (f_1, ..., f_m)` over ℝⁿ.
///
/// Immutable after construction and cheap to clone.
#[derive(Clone)]
pub struct Problem {
    n: usize,
    components: Vec<Arc<dyn Objective>>,
    lipschitz: Option<Vec<f64>>,
    r_bound: Option<f64>,
    analytic_merit: Option<MeritOracle>,
    analytic_path: Option<PathOracle>,
    limit_map: Option<PointMap>,
    label: String,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("label", &self.label)
            .field("n", &self.n)
            .field("m", &self.m())
            .field("lipschitz", &self.lipschitz)
            .field("r_bound", &self.r_bound)
            .field("analytic_merit", &self.analytic_merit.is_some())
            .field("analytic_path", &self.analytic_path.is_some())
            .finish()
    }
}

impl Problem {
    /// Builds a problem and probes every gradient oracle at the origin for its
    /// output length.
    pub fn new(
        label: impl Into<String>,
        n: usize,
        components: Vec<Arc<dyn Objective>>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Problem("dimension n must be positive".into()));
        }
        if components.is_empty() {
            return Err(Error::Problem("at least one objective required".into()));
        }
        let origin = vec![0.0; n];
        for c in &components {
            Error::check_dim(n, c.gradient(&origin).len(), "gradient oracle output")?;
        }
        Ok(Problem {
            n,
            components,
            lipschitz: None,
            r_bound: None,
            analytic_merit: None,
            analytic_path: None,
            limit_map: None,
            label: label.into(),
        })
    }

    pub fn with_lipschitz(mut self, l: Vec<f64>) -> Result<Self> {
        Error::check_dim(self.m(), l.len(), "lipschitz constants")?;
        if l.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Problem("lipschitz constants must be positive".into()));
        }
        self.lipschitz = Some(l);
        Ok(self)
    }

    pub fn with_r_bound(mut self, r: f64) -> Result<Self> {
        if !(r >= 0.0) {
            return Err(Error::Problem("R bound must be nonnegative".into()));
        }
        self.r_bound = Some(r);
        Ok(self)
    }

    pub fn with_merit(mut self, merit: MeritOracle) -> Self {
        self.analytic_merit = Some(merit);
        self
    }

    pub fn with_path(mut self, path: PathOracle) -> Self {
        self.analytic_path = Some(path);
        self
    }

    /// Map from a path point to the limit the path is expected to approach.
    pub fn with_limit_map(mut self, map: PointMap) -> Self {
        self.limit_map = Some(map);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> usize {
        self.components.len()
    }
    pub fn label(&self) -> &str {
        &self.label
    }
    pub fn lipschitz(&self) -> Option<&[f64]> {
        self.lipschitz.as_deref()
    }
    pub fn r_bound(&self) -> Option<f64> {
        self.r_bound
    }
    pub fn analytic_merit(&self) -> Option<&MeritOracle> {
        self.analytic_merit.as_ref()
    }
    pub fn analytic_path(&self) -> Option<&PathOracle> {
        self.analytic_path.as_ref()
    }
    pub fn limit_map(&self) -> Option<&PointMap> {
        self.limit_map.as_ref()
    }

    pub fn value(&self, i: usize, x: &[f64]) -> f64 {
        self.components[i].value(x)
    }

    pub fn gradient(&self, i: usize, x: &[f64]) -> Vec<f64> {
        self.components[i].gradient(x)
    }

    /// `F(x) = (f_1(x), ..., f_m(x))`
    pub fn values(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.value(x)).collect()
    }

    pub fn gradients(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.components.iter().map(|c| c.gradient(x)).collect()
    }

    pub(crate) fn check_point(&self, x: &[f64], context: &'static str) -> Result<()> {
        Error::check_dim(self.n, x.len(), context)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_sq() -> Arc<dyn Objective> {
        Arc::new(FnObjective::new(
            |x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            |x: &[f64]| x.to_vec(),
        ))
    }

    #[test]
    fn rejects_bad_gradient_length() {
        let bad: Arc<dyn Objective> =
            Arc::new(FnObjective::new(|_: &[f64]| 0.0, |_: &[f64]| vec![0.0; 3]));
        assert!(Problem::new("bad", 2, vec![bad]).is_err());
    }

    #[test]
    fn rejects_empty_and_nonpositive_lipschitz() {
        assert!(Problem::new("e", 2, vec![]).is_err());
        assert!(Problem::new("z", 0, vec![half_sq()]).is_err());
        let p = Problem::new("q", 2, vec![half_sq()]).unwrap();
        assert!(p.clone().with_lipschitz(vec![0.0]).is_err());
        assert!(p.clone().with_lipschitz(vec![1.0, 1.0]).is_err());
        assert!(p.with_lipschitz(vec![1.0]).is_ok());
    }
}
