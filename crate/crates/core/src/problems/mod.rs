//! Built-in benchmark problems and the label registry.

mod example25;
mod quadratics;
mod segments;

use crate::error::{Error, Result};
use crate::problem::Problem;

pub use example25::{example25_closed_path, example25_problem, Example25Config};
pub use quadratics::random_quadratics;
pub use segments::{mop_ex1_problem, mop_ex2_problem, SegmentProblemConfig};

/// Condition number used by `quad:<seed>:<n>:<m>` labels.
pub const REGISTRY_CONDITIONING: f64 = 10.0;

/// Resolves `example25`, `mop-ex1`, `mop-ex2` or `quad:<seed>:<n>:<m>`.
pub fn problem_by_label(label: &str) -> Result<Problem> {
    match label {
        "example25" => Ok(example25_problem(&Example25Config::default())),
        "mop-ex1" => Ok(mop_ex1_problem()),
        "mop-ex2" => Ok(mop_ex2_problem()),
        other => {
            let parts: Vec<&str> = other.split(':').collect();
            let bad = || Error::Problem(format!("unknown problem label `{other}`"));
            if parts.len() != 4 || parts[0] != "quad" {
                return Err(bad());
            }
            let seed: u64 = parts[1].parse().map_err(|_| bad())?;
            let n: usize = parts[2].parse().map_err(|_| bad())?;
            let m: usize = parts[3].parse().map_err(|_| bad())?;
            random_quadratics(seed, n, m, REGISTRY_CONDITIONING)
        }
    }
}
