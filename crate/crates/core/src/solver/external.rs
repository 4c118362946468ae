//! Adapter for an external MILP solver driven through LP files.
//!
//! The command template may contain `{lp}` and `{sol}`; it runs under
//! `sh -c`. The solver must write a plain-text solution file:
//!
//! ```text
//! # comments are ignored
//! status feasible        (or infeasible / unknown; optional)
//! w_0_0_0 1
//! u_3 2
//! ```
//!
//! Variables that are not listed are read as 0.

use std::collections::HashMap;
use std::path::Path;
use std::process::Command;

use super::SolverError;
use crate::ilp::{lp_names, write_lp, IlpModel, Solution, SolveStatus};

pub const SOLVER_CMD_ENV: &str = "CTL_SOLVER_CMD";

/// The explicit command if given, otherwise `$CTL_SOLVER_CMD`.
pub fn resolve_solver_cmd(explicit: Option<&str>) -> Option<String> {
    explicit
        .map(str::to_string)
        .or_else(|| std::env::var(SOLVER_CMD_ENV).ok())
        .filter(|s| !s.trim().is_empty())
}

fn shell_quote(p: &Path) -> String {
    format!("'{}'", p.display().to_string().replace('\'', "'\\''"))
}

pub fn solve_external(
    model: &IlpModel,
    solver_cmd: &str,
    workdir: &Path,
) -> Result<Solution, SolverError> {
    std::fs::create_dir_all(workdir)?;
    let lp = workdir.join("model.lp");
    let sol = workdir.join("model.sol");
    std::fs::write(&lp, write_lp(model))?;
    if sol.exists() {
        std::fs::remove_file(&sol)?;
    }
    let mut cmd = solver_cmd.to_string();
    if !cmd.contains("{lp}") {
        cmd.push_str(" {lp} {sol}");
    }
    let cmd = cmd
        .replace("{lp}", &shell_quote(&lp))
        .replace("{sol}", &shell_quote(&sol));
    let out = Command::new("sh").arg("-c").arg(&cmd).output()?;
    if !out.status.success() {
        return Err(SolverError::ExternalExit {
            code: out.status.code(),
            stderr: String::from_utf8_lossy(&out.stderr).trim().to_string(),
        });
    }
    let text = std::fs::read_to_string(&sol)?;
    parse_solution(model, &text)
}

/// Reads a solution file and validates the point against `model`.
pub fn parse_solution(model: &IlpModel, text: &str) -> Result<Solution, SolverError> {
    let names = lp_names(model);
    let index: HashMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut status = None;
    let mut values = vec![0.0; model.num_vars()];
    let mut seen_value = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| SolverError::SolutionParse { line: i + 1, msg };
        let mut parts = line.split_whitespace();
        let (Some(key), Some(val), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err(format!("expected `name value`, got `{line}`")));
        };
        if key == "status" {
            status = Some(match val {
                "feasible" | "optimal" => SolveStatus::Feasible,
                "infeasible" => SolveStatus::Infeasible,
                "unknown" => SolveStatus::Unknown,
                other => return Err(err(format!("unknown status `{other}`"))),
            });
            continue;
        }
        let &v = index
            .get(key)
            .ok_or_else(|| err(format!("unknown variable `{key}`")))?;
        let x: f64 = val
            .parse()
            .map_err(|_| err(format!("bad number `{val}`")))?;
        if !x.is_finite() {
            return Err(err(format!("non-finite value for `{key}`")));
        }
        values[v] = x;
        seen_value = true;
    }
    let status = match status {
        Some(s) => s,
        None if seen_value => SolveStatus::Feasible,
        None => {
            return Err(SolverError::SolutionParse {
                line: 0,
                msg: "no status and no values".into(),
            })
        }
    };
    match status {
        SolveStatus::Infeasible => return Ok(Solution::infeasible()),
        SolveStatus::Unknown => return Ok(Solution::unknown()),
        SolveStatus::Feasible => {}
    }
    for (v, info) in model.vars().iter().enumerate() {
        if info.kind.is_integral() {
            let r = values[v].round();
            if (values[v] - r).abs() > 1e-6 {
                return Err(SolverError::Mismatch(format!(
                    "`{}` = {} is not integral",
                    names[v], values[v]
                )));
            }
            values[v] = r;
        }
    }
    model.check(&values, 1e-6).map_err(SolverError::Mismatch)?;
    Ok(Solution {
        status: SolveStatus::Feasible,
        values,
    })
}
