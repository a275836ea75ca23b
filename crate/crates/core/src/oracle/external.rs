//! File bridge to an external exact solver (Concorde or anything that reads
//! TSPLib EUC_2D and writes a cyclic tour).
//!
//! Emitted problem file, one field per line, `\n` line endings:
//!
//! ```text
//! NAME : <name>
//! TYPE : TSP
//! DIMENSION : <n>
//! EDGE_WEIGHT_TYPE : EUC_2D
//! NODE_COORD_SECTION
//! <i+1> <round(x * scale)> <round(y * scale)>     (n lines, integers)
//! EOF
//! ```
//!
//! Accepted tour files: any header lines, then node indices separated by
//! whitespace, terminated by `-1`, `EOF` or end of input. A leading count
//! equal to `n` (Concorde `.sol` layout) is skipped. Indices are 1-based
//! when they span `1..=n` and 0-based when they span `0..n`.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::Command;

use crate::geometry::{Tour, TspInstance};
use crate::oracle::{OracleMethod, OracleResult};
use crate::{Error, Result};

pub const DEFAULT_SCALE: u64 = 10_000_000;

pub fn write_external_solver_file(instance: &TspInstance, name: &str, scale: u64) -> Result<String> {
    if scale == 0 {
        return Err(Error::InvalidParameter("scale must be positive".into()));
    }
    let name: String = name.chars().filter(|c| !c.is_control() && *c != ':').collect();
    let mut out = String::new();
    let s = scale as f64;
    let _ = writeln!(out, "NAME : {name}");
    let _ = writeln!(out, "TYPE : TSP");
    let _ = writeln!(out, "DIMENSION : {}", instance.n());
    let _ = writeln!(out, "EDGE_WEIGHT_TYPE : EUC_2D");
    let _ = writeln!(out, "NODE_COORD_SECTION");
    for (i, p) in instance.points().iter().enumerate() {
        let _ = writeln!(
            out,
            "{} {} {}",
            i + 1,
            (p.x * s).round() as u64,
            (p.y * s).round() as u64
        );
    }
    out.push_str("EOF\n");
    Ok(out)
}

pub fn read_external_tour(text: &str, instance: &TspInstance) -> Result<OracleResult> {
    let n = instance.n();
    let mut values: Vec<i64> = Vec::new();
    'lines: for line in text.lines() {
        let line = line.trim();
        if line.eq_ignore_ascii_case("EOF") {
            break;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let parsed: Option<Vec<i64>> = tokens.iter().map(|t| t.parse().ok()).collect();
        let Some(nums) = parsed else {
            if values.is_empty() {
                continue; // header line
            }
            return Err(Error::MalformedTour(format!("unexpected line `{line}`")));
        };
        for v in nums {
            if v == -1 {
                break 'lines;
            }
            values.push(v);
        }
    }
    if values.len() == n + 1 && values[0] == n as i64 {
        values.remove(0);
    }
    if values.len() != n {
        return Err(Error::MalformedTour(format!(
            "expected {n} node indices, found {}",
            values.len()
        )));
    }
    let min = *values.iter().min().expect("n >= 2");
    let max = *values.iter().max().expect("n >= 2");
    let offset = if min == 1 && max == n as i64 {
        1
    } else if min == 0 && max == n as i64 - 1 {
        0
    } else {
        return Err(Error::MalformedTour(format!(
            "indices span [{min}, {max}], neither 0- nor 1-based for n = {n}"
        )));
    };
    let order: Vec<usize> = values.iter().map(|&v| (v - offset) as usize).collect();
    let tour = Tour::new(instance, order)?;
    Ok(OracleResult::new(tour, OracleMethod::External))
}

/// Runs an external solver binary as `<program> -o <tour> <problem>`
/// (Concorde's command line) in a scratch directory.
#[derive(Debug, Clone)]
pub struct ExternalSolver {
    pub program: PathBuf,
    pub scale: u64,
}

impl ExternalSolver {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        ExternalSolver {
            program: program.into(),
            scale: DEFAULT_SCALE,
        }
    }

    /// Looks for `concorde` on `PATH`.
    pub fn find_concorde() -> Option<Self> {
        let path = std::env::var_os("PATH")?;
        std::env::split_paths(&path)
            .map(|d| d.join("concorde"))
            .find(|p| p.is_file())
            .map(ExternalSolver::new)
    }

    pub fn solve(&self, instance: &TspInstance) -> Result<OracleResult> {
        let dir = tempfile::tempdir()?;
        let problem = dir.path().join("instance.tsp");
        let tour = dir.path().join("instance.sol");
        std::fs::write(&problem, write_external_solver_file(instance, "instance", self.scale)?)?;
        let out = Command::new(&self.program)
            .current_dir(dir.path())
            .arg("-o")
            .arg(&tour)
            .arg(&problem)
            .output()
            .map_err(|e| Error::ExternalSolver(format!("{}: {e}", self.program.display())))?;
        if !out.status.success() {
            return Err(Error::ExternalSolver(format!(
                "{} exited with {}",
                self.program.display(),
                out.status
            )));
        }
        let text = std::fs::read_to_string(&tour)?;
        let mut result = read_external_tour(&text, instance)?;
        result.tour = result.tour.canonical();
        Ok(result)
    }
}
