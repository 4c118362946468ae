//! LP relaxation through microlp, kept warm across branching decisions.

use std::time::Duration;

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome, Variable};

use super::SolverError;
use crate::ilp::{IlpModel, Sense};

pub(crate) enum LpResult {
    Solved(LpState),
    Infeasible,
    Interrupted,
}

#[derive(Clone)]
pub(crate) struct LpState {
    sol: microlp::Solution,
    vars: std::rc::Rc<Vec<Variable>>,
    // columns built with equal bounds; microlp rejects edits on them
    pinned: std::rc::Rc<Vec<Option<f64>>>,
}

type Cols = (std::rc::Rc<Vec<Variable>>, std::rc::Rc<Vec<Option<f64>>>);

fn wrap(r: Result<SolveOutcome, microlp::Error>, (vars, pinned): Cols) -> Result<LpResult, SolverError> {
    match r {
        Ok(SolveOutcome::Solution(sol)) => Ok(LpResult::Solved(LpState { sol, vars, pinned })),
        Ok(SolveOutcome::Interrupted(_)) => Ok(LpResult::Interrupted),
        Err(microlp::Error::Infeasible) => Ok(LpResult::Infeasible),
        Err(e) => Err(SolverError::Numerical(e.to_string())),
    }
}

/// Solves the relaxation of `model` under the bounds `lo`/`hi`.
pub(crate) fn solve_relaxation(
    model: &IlpModel,
    lo: &[f64],
    hi: &[f64],
    limit: Option<Duration>,
) -> Result<LpResult, SolverError> {
    let mut p = Problem::new(OptimizationDirection::Minimize);
    if let Some(d) = limit {
        p.set_time_limit(d.max(Duration::from_millis(1)));
    }
    let vars: Vec<Variable> = lo
        .iter()
        .zip(hi)
        .map(|(&l, &h)| p.add_var(0.0, (l, h.max(l))))
        .collect();
    for c in model.constraints() {
        if c.terms.is_empty() {
            if c.violation(&[]) > 1e-9 {
                return Ok(LpResult::Infeasible);
            }
            continue;
        }
        let op = match c.sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Ge => ComparisonOp::Ge,
            Sense::Eq => ComparisonOp::Eq,
        };
        p.add_constraint(
            c.terms.iter().map(|&(v, k)| (vars[v.index()], k)),
            op,
            c.rhs,
        );
    }
    let pinned = lo
        .iter()
        .zip(hi)
        .map(|(&l, &h)| (h <= l).then_some(l))
        .collect();
    wrap(p.solve(), (std::rc::Rc::new(vars), std::rc::Rc::new(pinned)))
}

impl LpState {
    pub fn value(&self, v: usize) -> f64 {
        self.sol.var_value_raw(self.vars[v])
    }

    fn cols(&self) -> Cols {
        (self.vars.clone(), self.pinned.clone())
    }

    pub fn fix(self, v: usize, val: f64) -> Result<LpResult, SolverError> {
        if let Some(p) = self.pinned[v] {
            return Ok(if (p - val).abs() <= 1e-9 {
                LpResult::Solved(self)
            } else {
                LpResult::Infeasible
            });
        }
        let cols = self.cols();
        wrap(self.sol.fix_var(cols.0[v], val), cols)
    }

    /// Adds `x_v ≤ val` (`upper`) or `x_v ≥ val`.
    pub fn bound(self, v: usize, val: f64, upper: bool) -> Result<LpResult, SolverError> {
        if let Some(p) = self.pinned[v] {
            let ok = if upper { p <= val + 1e-9 } else { p >= val - 1e-9 };
            return Ok(if ok { LpResult::Solved(self) } else { LpResult::Infeasible });
        }
        let cols = self.cols();
        let op = if upper {
            ComparisonOp::Le
        } else {
            ComparisonOp::Ge
        };
        wrap(self.sol.add_constraint([(cols.0[v], 1.0)], op, val), cols)
    }
}
