//! External MIP solver driven through MPS and solution files.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::process::Command;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::model::MipModel;
use super::mps::write_mps;
use super::{MipSolution, Status};

/// A solver command. `{mps}` and `{sol}` in `args` are replaced by the
/// model and solution paths, e.g. `cbc {mps} solve solu {sol}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalSolver {
    pub program: String,
    pub args: Vec<String>,
}

impl ExternalSolver {
    pub fn cbc() -> Self {
        ExternalSolver {
            program: "cbc".into(),
            args: ["{mps}", "solve", "solu", "{sol}"].map(String::from).to_vec(),
        }
    }

    pub fn solve(&self, m: &MipModel) -> Result<MipSolution> {
        let dir = tempfile::tempdir()?;
        let mps = dir.path().join("master.mps");
        let sol = dir.path().join("master.sol");
        {
            let mut out = BufWriter::new(File::create(&mps)?);
            write_mps(m, "MASTER", &mut out)?;
            out.flush()?;
        }
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| {
                a.replace("{mps}", &mps.to_string_lossy())
                    .replace("{sol}", &sol.to_string_lossy())
            })
            .collect();
        let output = Command::new(&self.program)
            .args(&args)
            .output()
            .map_err(|e| Error::Backend(format!("cannot run {}: {e}", self.program)))?;
        if !output.status.success() {
            return Err(Error::Backend(format!(
                "{} exited with {}\nstdout:\n{}\nstderr:\n{}",
                self.program,
                output.status,
                String::from_utf8_lossy(&output.stdout),
                String::from_utf8_lossy(&output.stderr)
            )));
        }
        let text = std::fs::read_to_string(&sol).map_err(|e| {
            Error::Backend(format!(
                "no solution file from {}: {e}\nstdout:\n{}",
                self.program,
                String::from_utf8_lossy(&output.stdout)
            ))
        })?;
        parse_solution(m, &text)
    }
}

/// Parses a CBC style solution: a status line such as
/// `Optimal - objective value 15.0`, then `index name value [reduced]` rows.
pub fn parse_solution(m: &MipModel, text: &str) -> Result<MipSolution> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Backend("empty solution file".into()))?
        .trim();
    let lower = header.to_ascii_lowercase();
    let status = if lower.starts_with("optimal") {
        Status::Optimal
    } else if lower.contains("infeasible") {
        Status::Infeasible
    } else {
        Status::Limit
    };
    if status == Status::Infeasible {
        return Ok(MipSolution {
            status,
            objective: None,
            values: Vec::new(),
        });
    }

    let index: HashMap<&str, usize> = m
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.as_str(), i))
        .collect();
    let mut values = vec![0i64; m.variables.len()];
    for (n, row) in lines.enumerate() {
        let fields: Vec<&str> = row.split_whitespace().filter(|f| *f != "**").collect();
        if fields.is_empty() {
            continue;
        }
        let bad = || Error::Backend(format!("bad solution row {}: {row:?}", n + 2));
        if fields.len() < 3 {
            return Err(bad());
        }
        let var = *index
            .get(fields[1])
            .ok_or_else(|| Error::Backend(format!("unknown variable {:?} in solution", fields[1])))?;
        let value: f64 = fields[2].parse().map_err(|_| bad())?;
        values[var] = value.round() as i64;
    }
    let objective = m.objective_value(&values);
    Ok(MipSolution {
        status,
        objective: Some(objective),
        values,
    })
}
