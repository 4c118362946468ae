//! Feasibility solving for [`IlpModel`]s.
//!
//! The bundled solver is a depth-first branch-and-bound: bound propagation
//! at every node, an LP relaxation warm-started from the parent, branching on
//! the most fractional variable (ties to the lowest id, nearest rounding
//! first). A run that exceeds its node cutoff restarts with seeded noise in
//! the branching scores and twice the cutoff, which tames the heavy tail on
//! feasible models and keeps the search complete. Every point it reports as
//! feasible is re-checked against the model.

mod bnb;
mod external;
mod lp;
mod propagate;

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::ilp::{IlpModel, Solution, SolveStatus};

pub use external::{parse_solution, resolve_solver_cmd, solve_external, SOLVER_CMD_ENV};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("variable `{0}` has an infinite bound")]
    UnboundedVariable(String),
    #[error("numerical failure in the LP relaxation: {0}")]
    Numerical(String),
    #[error("no external solver command (pass one or set {SOLVER_CMD_ENV})")]
    NoCommand,
    #[error("external solver exited with {code:?}: {stderr}")]
    ExternalExit { code: Option<i32>, stderr: String },
    #[error("solution file line {line}: {msg}")]
    SolutionParse { line: usize, msg: String },
    #[error("external solution rejected: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub time_budget: Option<Duration>,
    pub node_budget: Option<u64>,
    pub seed: u64,
    pub threads: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            time_budget: None,
            node_budget: None,
            seed: 0,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub nodes: u64,
    pub lp_solves: u64,
    pub max_depth: usize,
}

pub fn solve_bnb(model: &IlpModel, config: &SolverConfig) -> Result<Solution, SolverError> {
    solve_bnb_with_stats(model, config).map(|(s, _)| s)
}

/// Like [`solve_bnb`], also reporting search effort. With `threads > 1` the
/// workers race with differently seeded branching and the first conclusive
/// answer wins; the stats are those of the winner.
pub fn solve_bnb_with_stats(
    model: &IlpModel,
    config: &SolverConfig,
) -> Result<(Solution, SearchStats), SolverError> {
    for v in model.vars() {
        let (lo, hi) = v.kind.bounds();
        if !lo.is_finite() || !hi.is_finite() {
            return Err(SolverError::UnboundedVariable(v.name.clone()));
        }
    }
    let deadline = config.time_budget.map(|d| Instant::now() + d);
    let stop = AtomicBool::new(false);
    let threads = config.threads.max(1);
    if threads == 1 {
        let (sol, stats) = restarting(model, config, 0, 1, deadline, &stop)?;
        return Ok((checked(model, sol)?, stats));
    }
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|s| {
        for k in 0..threads {
            let tx = tx.clone();
            let stop = &stop;
            s.spawn(move || {
                let r = restarting(model, config, k, threads, deadline, stop);
                if matches!(&r, Ok((s, _)) if s.status != SolveStatus::Unknown) || r.is_err() {
                    stop.store(true, Ordering::Relaxed);
                }
                let _ = tx.send(r);
            });
        }
    });
    drop(tx);
    let mut fallback = None;
    let mut first_err = None;
    for r in rx {
        match r {
            Ok((s, st)) if s.status != SolveStatus::Unknown => return Ok((checked(model, s)?, st)),
            Ok(x) => fallback = Some(x),
            Err(e) => first_err = first_err.or(Some(e)),
        }
    }
    match (first_err, fallback) {
        (Some(e), _) => Err(e),
        (None, Some(x)) => Ok(x),
        (None, None) => Ok((Solution::unknown(), SearchStats::default())),
    }
}

const FIRST_CUTOFF: u64 = 256;

/// Runs worker `first`, then `first + stride`, `first + 2 stride`, … with a
/// doubling node cutoff until one of them is conclusive or a budget runs out.
fn restarting(
    model: &IlpModel,
    config: &SolverConfig,
    first: usize,
    stride: usize,
    deadline: Option<Instant>,
    stop: &AtomicBool,
) -> Result<(Solution, SearchStats), SolverError> {
    let mut total = SearchStats::default();
    let mut cutoff = FIRST_CUTOFF;
    for round in 0.. {
        let limits = bnb::Limits {
            deadline,
            node_budget: config.node_budget.map(|b| b.saturating_sub(total.nodes)),
            cutoff: Some(cutoff),
            stop,
        };
        let mut w = bnb::Worker::new(model, first + stride * round, config.seed, limits);
        let sol = w.run()?;
        total.nodes += w.stats.nodes;
        total.lp_solves += w.stats.lp_solves;
        total.max_depth = total.max_depth.max(w.stats.max_depth);
        if sol.status == SolveStatus::Unknown && w.cut {
            cutoff = cutoff.saturating_mul(2);
            continue;
        }
        return Ok((sol, total));
    }
    unreachable!("the restart loop only exits by returning")
}

fn checked(model: &IlpModel, sol: Solution) -> Result<Solution, SolverError> {
    if sol.is_feasible() {
        model
            .check(&sol.values, 1e-6)
            .map_err(SolverError::Numerical)?;
    }
    Ok(sol)
}

/// Tries `h_min, h_min + step, …, ≤ h_max` and returns the first horizon for
/// which `attempt` produces a result. `None` only means nothing was found
/// inside the sweep.
pub fn deepen_horizon<T, E>(
    h_min: usize,
    h_max: usize,
    step: usize,
    mut attempt: impl FnMut(usize) -> Result<Option<T>, E>,
) -> Result<Option<(usize, T)>, E> {
    let mut h = h_min;
    while h <= h_max {
        if let Some(x) = attempt(h)? {
            return Ok(Some((h, x)));
        }
        h += step.max(1);
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ilp::{BoolOp, LinExpr, Sense, VarKind};

    fn solve(m: &IlpModel) -> Solution {
        solve_bnb(m, &SolverConfig::default()).unwrap()
    }

    #[test]
    fn trivial_infeasible() {
        let mut m = IlpModel::new();
        let x = m.binary("x");
        let y = m.binary("y");
        m.constrain(LinExpr::sum([x, y]), Sense::Ge, 1.0);
        m.constrain(LinExpr::sum([x, y]), Sense::Le, 0.0);
        assert_eq!(solve(&m).status, SolveStatus::Infeasible);
    }

    #[test]
    fn empty_row_is_checked() {
        let mut m = IlpModel::new();
        m.constrain(LinExpr::new(), Sense::Le, -1.0);
        assert_eq!(solve(&m).status, SolveStatus::Infeasible);
        let mut m = IlpModel::new();
        m.constrain(LinExpr::new(), Sense::Le, 1.0);
        assert_eq!(solve(&m).status, SolveStatus::Feasible);
    }

    #[test]
    fn integer_branching() {
        // 2x + 2y = 3 has no integer point; 2x + 3y = 7 with x,y ∈ [0,5] does
        let mut m = IlpModel::new();
        let x = m.add_var(VarKind::Integer { lo: 0, hi: 5 }, "x").unwrap();
        let y = m.add_var(VarKind::Integer { lo: 0, hi: 5 }, "y").unwrap();
        m.constrain(LinExpr::var(x).with_term(y, 2.0).with_term(x, 1.0), Sense::Eq, 3.0);
        assert_eq!(solve(&m).status, SolveStatus::Infeasible);
        let mut m = IlpModel::new();
        let x = m.add_var(VarKind::Integer { lo: 0, hi: 5 }, "x").unwrap();
        let y = m.add_var(VarKind::Integer { lo: 0, hi: 5 }, "y").unwrap();
        m.constrain(LinExpr::var(x).with_term(x, 1.0).with_term(y, 3.0), Sense::Eq, 7.0);
        let s = solve(&m);
        assert!(s.is_feasible());
        assert_eq!(2.0 * s.value(x) + 3.0 * s.value(y), 7.0);
    }

    #[test]
    fn gadget_models_feasible() {
        let mut m = IlpModel::new();
        let xs: Vec<_> = (0..4).map(|i| m.binary(format!("x{i}"))).collect();
        let z = m.bool_gadget(BoolOp::And, &xs).unwrap();
        m.constrain(LinExpr::var(z), Sense::Eq, 1.0);
        let s = solve(&m);
        assert!(xs.iter().all(|&x| s.is_true(x)));
    }

    #[test]
    fn node_budget_gives_unknown() {
        let mut m = IlpModel::new();
        // pigeonhole 4 into 3 needs branching to refute
        let x: Vec<Vec<_>> = (0..4)
            .map(|p| (0..3).map(|h| m.binary(format!("x{p}_{h}"))).collect())
            .collect();
        for row in &x {
            m.constrain(LinExpr::sum(row.clone()), Sense::Eq, 1.0);
        }
        for h in 0..3 {
            m.constrain(LinExpr::sum(x.iter().map(|r| r[h])), Sense::Le, 1.0);
        }
        let cfg = SolverConfig {
            node_budget: Some(0),
            ..Default::default()
        };
        assert_eq!(solve_bnb(&m, &cfg).unwrap().status, SolveStatus::Unknown);
        assert_eq!(solve(&m).status, SolveStatus::Infeasible);
        let cfg = SolverConfig {
            threads: 3,
            seed: 7,
            ..Default::default()
        };
        assert_eq!(solve_bnb(&m, &cfg).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn horizon_sweep() {
        let r: Result<_, ()> = deepen_horizon(1, 10, 1, |h| Ok((h >= 3).then_some(h * 10)));
        assert_eq!(r.unwrap(), Some((3, 30)));
        let r: Result<Option<(usize, ())>, ()> = deepen_horizon(1, 4, 1, |_| Ok(None));
        assert_eq!(r.unwrap(), None);
        let r: Result<_, ()> = deepen_horizon(2, 4, 1, |h| Ok(Some(h)));
        assert_eq!(r.unwrap(), Some((2, 2)));
    }
}
