//! CSV output with shortest round-trip float formatting, and the reader for
//! recorded trajectories.

use std::io;
use std::path::Path;

use moodyn_core::{DynParams, State, StepFlags, Trajectory};

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// A header plus rows of already formatted cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_floats(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|v| fmt_f64(*v)).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}

fn indexed(prefix: &str, count: usize) -> impl Iterator<Item = String> + '_ {
    (1..=count).map(move |i| format!("{prefix}_{i}"))
}

fn trajectory_header(n: usize, m: usize) -> Vec<String> {
    std::iter::once("t".to_string())
        .chain(indexed("x", n))
        .chain(indexed("v", n))
        .chain(indexed("theta", m))
        .chain(std::iter::once("flags".to_string()))
        .collect()
}

/// `t, x_1..x_n, v_1..v_n, theta_1..theta_m, flags`; flags are `|`-joined.
pub fn trajectory_table(traj: &Trajectory, m: usize) -> Table {
    let n = traj.states.first().map_or(0, |s| s.x.len());
    let mut table = Table::new(trajectory_header(n, m));
    for (k, s) in traj.states.iter().enumerate() {
        let mut row = vec![fmt_f64(s.t)];
        row.extend(s.x.iter().chain(&s.v).map(|v| fmt_f64(*v)));
        // weights of the degenerate branch are padded to m
        let theta = &traj.weights[k];
        row.extend((0..m).map(|i| fmt_f64(theta.get(i).copied().unwrap_or(0.0))));
        row.push(traj.flags[k].labels().join("|"));
        table.push(row);
    }
    table
}

#[derive(Debug)]
pub enum ReadError {
    Io(io::Error),
    Format(String),
}

impl std::fmt::Display for ReadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReadError::Io(e) => write!(f, "{e}"),
            ReadError::Format(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for ReadError {}

/// Reads a `trajectory.csv` written by [`trajectory_table`] back into a
/// trajectory on the grid of `params`.
pub fn read_trajectory(path: &Path, params: &DynParams, n: usize, m: usize) -> Result<Trajectory, ReadError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => ReadError::Io(io),
        other => ReadError::Format(format!("{other:?}")),
    })?;
    let header = rdr
        .headers()
        .map_err(|e| ReadError::Format(e.to_string()))?
        .clone();
    let expected = trajectory_header(n, m);
    if header.iter().collect::<Vec<_>>() != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(ReadError::Format(format!(
            "{}: expected columns {}",
            path.display(),
            expected.join(",")
        )));
    }
    let mut states = Vec::new();
    let mut weights = Vec::new();
    let mut flags = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| ReadError::Format(e.to_string()))?;
        let row = i + 2;
        let num = |j: usize| -> Result<f64, ReadError> {
            rec[j]
                .parse::<f64>()
                .map_err(|_| ReadError::Format(format!("row {row}: bad number `{}`", &rec[j])))
        };
        let vals: Vec<f64> = (0..1 + 2 * n + m).map(num).collect::<Result<_, _>>()?;
        let state = State::new(vals[0], vals[1..1 + n].to_vec(), vals[1 + n..1 + 2 * n].to_vec())
            .map_err(|e| ReadError::Format(format!("row {row}: {e}")))?;
        states.push(state);
        weights.push(vals[1 + 2 * n..].to_vec());
        let mut f = StepFlags::default();
        for label in rec[1 + 2 * n + m].split('|').filter(|s| !s.is_empty()) {
            match label {
                "degenerate" => f.degenerate_velocity = true,
                "tie" => f.tie = true,
                "warm_reset" => f.warm_reset = true,
                other => return Err(ReadError::Format(format!("row {row}: unknown flag `{other}`"))),
            }
        }
        flags.push(f);
    }
    Trajectory::from_samples(params, states, weights, flags).map_err(|e| ReadError::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use moodyn_core::integrate;
    use moodyn_core::problems::mop_ex1_problem;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 123456.789, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(["t", "y"]);
        t.push_floats(&[1.0, 0.25]);
        t.push_floats(&[2.0, 1e-7]);
        assert_eq!(String::from_utf8(t.to_csv()).unwrap(), "t,y\n1.0,0.25\n2.0,1e-7\n");
    }

    #[test]
    fn trajectory_round_trip() {
        let p = mop_ex1_problem();
        let params = DynParams::new(4.0, 0.5, 1.75, 0.875, 1.0, 1e-2, 3.0);
        let tr = integrate(&p, &params, &[2.5, 0.5], &[0.0, 0.0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trajectory.csv");
        trajectory_table(&tr, 2).write(&path).unwrap();
        let back = read_trajectory(&path, &params, 2, 2).unwrap();
        assert_eq!(back.states, tr.states);
        assert_eq!(back.flags, tr.flags);
        for (a, b) in back.weights.iter().zip(&tr.weights) {
            assert_eq!(&a[..b.len()], &b[..]);
        }
    }

    #[test]
    fn reader_rejects_foreign_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "t,y\n1.0,2.0\n").unwrap();
        let params = DynParams::new(4.0, 0.5, 1.75, 0.875, 1.0, 1e-2, 3.0);
        assert!(matches!(read_trajectory(&path, &params, 2, 2), Err(ReadError::Format(_))));
    }
}
