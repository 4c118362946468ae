use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lp::{solve_relaxation, LpResult, LpState};
use super::propagate::Propagator;
use super::{SearchStats, SolverError};
use crate::ilp::{IlpModel, Solution, SolveStatus};

const FRAC_TOL: f64 = 1e-6;
// only the deepest frames keep an LP snapshot; older ones rebuild on demand
const MAX_SNAPSHOTS: usize = 48;
// a larger sync than this is cheaper as a fresh solve
const MAX_SYNC: usize = 24;

#[derive(Debug, Clone, Copy)]
enum Decision {
    Fix(usize, f64),
    Upper(usize, f64),
    Lower(usize, f64),
}

impl Decision {
    fn apply_prop(self, p: &mut Propagator) -> bool {
        let ok = match self {
            Decision::Fix(v, x) => p.set_bounds(v, x, x),
            Decision::Upper(v, x) => p.set_bounds(v, f64::NEG_INFINITY, x),
            Decision::Lower(v, x) => p.set_bounds(v, x, f64::INFINITY),
        };
        ok && p.propagate()
    }

    fn apply_lp(self, lp: LpState) -> Result<LpResult, SolverError> {
        match self {
            Decision::Fix(v, x) => lp.fix(v, x),
            Decision::Upper(v, x) => lp.bound(v, x, true),
            Decision::Lower(v, x) => lp.bound(v, x, false),
        }
    }
}

struct Frame {
    mark: usize,
    alt: Option<Decision>,
    lp: Option<LpState>,
}

pub(crate) struct Limits<'a> {
    pub deadline: Option<Instant>,
    pub node_budget: Option<u64>,
    /// Nodes before this run gives up in favor of a restart.
    pub cutoff: Option<u64>,
    pub stop: &'a AtomicBool,
}

enum Node {
    Lp(LpState),
    Dead,
    Unknown,
}

pub(crate) struct Worker<'a> {
    model: &'a IlpModel,
    prop: Propagator,
    rng: Option<ChaCha8Rng>,
    limits: Limits<'a>,
    pub stats: SearchStats,
    /// Set when the run stopped at its restart cutoff.
    pub cut: bool,
}

impl<'a> Worker<'a> {
    /// Worker `0` follows the plain rule; others perturb scores with `seed`.
    pub fn new(model: &'a IlpModel, index: usize, seed: u64, limits: Limits<'a>) -> Self {
        let rng = (index > 0).then(|| ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64)));
        Worker {
            model,
            prop: Propagator::new(model),
            rng,
            limits,
            stats: SearchStats::default(),
            cut: false,
        }
    }

    fn out_of_budget(&mut self) -> bool {
        if self.limits.stop.load(Ordering::Relaxed) {
            return true;
        }
        if let Some(nb) = self.limits.node_budget {
            if self.stats.nodes >= nb {
                return true;
            }
        }
        if matches!(self.limits.deadline, Some(d) if Instant::now() >= d) {
            return true;
        }
        self.cut = self.limits.cutoff.is_some_and(|c| self.stats.nodes >= c);
        self.cut
    }

    fn remaining(&self) -> Option<std::time::Duration> {
        self.limits
            .deadline
            .map(|d| d.saturating_duration_since(Instant::now()))
    }

    fn fresh_lp(&mut self) -> Result<Node, SolverError> {
        self.stats.lp_solves += 1;
        Ok(
            match solve_relaxation(self.model, &self.prop.lo, &self.prop.hi, self.remaining())? {
                LpResult::Solved(s) => Node::Lp(s),
                LpResult::Infeasible => Node::Dead,
                LpResult::Interrupted => Node::Unknown,
            },
        )
    }

    fn edit(&mut self, r: Result<LpResult, SolverError>) -> Result<Node, SolverError> {
        self.stats.lp_solves += 1;
        Ok(match r? {
            LpResult::Solved(s) => Node::Lp(s),
            LpResult::Infeasible => Node::Dead,
            LpResult::Interrupted => Node::Unknown,
        })
    }

    /// Fractional integral variables whose LP value the propagated domain
    /// already excludes.
    fn stale(&self, lp: &LpState) -> Vec<usize> {
        let mut out = Vec::new();
        for v in 0..self.prop.lo.len() {
            if !self.prop.integral[v] {
                continue;
            }
            let x = lp.value(v);
            if (x - x.round()).abs() > FRAC_TOL
                && (x < self.prop.lo[v] - FRAC_TOL || x > self.prop.hi[v] + FRAC_TOL)
            {
                out.push(v);
            }
        }
        out
    }

    /// Pulls propagated bounds into the LP until its fractional values
    /// respect them.
    fn sync(&mut self, mut lp: LpState) -> Result<Node, SolverError> {
        loop {
            let stale = self.stale(&lp);
            if stale.is_empty() {
                return Ok(Node::Lp(lp));
            }
            if stale.len() > MAX_SYNC {
                return match self.fresh_lp()? {
                    Node::Lp(l) if self.stale(&l).is_empty() => Ok(Node::Lp(l)),
                    Node::Lp(_) => Err(SolverError::Numerical(
                        "relaxation ignores its own bounds".into(),
                    )),
                    other => Ok(other),
                };
            }
            for v in stale {
                let (lo, hi, x) = (self.prop.lo[v], self.prop.hi[v], lp.value(v));
                // an earlier edit in this pass may already have moved it
                if x >= lo - FRAC_TOL && x <= hi + FRAC_TOL {
                    continue;
                }
                let d = if lo == hi {
                    Decision::Fix(v, lo)
                } else if x < lo {
                    Decision::Lower(v, lo)
                } else {
                    Decision::Upper(v, hi)
                };
                match self.edit(d.apply_lp(lp))? {
                    Node::Lp(l) => lp = l,
                    other => return Ok(other),
                }
            }
        }
    }

    fn candidate(&self, lp: &LpState) -> Vec<f64> {
        (0..self.prop.lo.len())
            .map(|v| {
                let x = lp.value(v);
                if self.prop.integral[v] {
                    x.round()
                } else {
                    let (lo, hi) = self.model.vars()[v].kind.bounds();
                    x.clamp(lo, hi)
                }
            })
            .collect()
    }

    /// Most fractional integral variable, ties to the lowest index.
    fn pick(&mut self, lp: &LpState) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for v in 0..self.prop.lo.len() {
            if !self.prop.integral[v] || self.prop.is_fixed(v) {
                continue;
            }
            let x = lp.value(v);
            let f = (x - x.floor()).min(x.ceil() - x);
            if f <= FRAC_TOL {
                continue;
            }
            let score = match &mut self.rng {
                Some(r) => f + 0.25 * r.random::<f64>(),
                None => f,
            };
            if best.is_none_or(|(_, _, s)| score > s + 1e-12) {
                best = Some((v, x, score));
            }
        }
        best.map(|(v, x, _)| (v, x))
    }

    fn branches(&mut self, v: usize, x: f64) -> (Decision, Decision) {
        let mut up = x - x.floor() >= 0.5;
        if let Some(r) = &mut self.rng {
            if r.random::<f64>() < 0.2 {
                up = !up;
            }
        }
        let binary = self.prop.lo[v] >= 0.0 && self.prop.hi[v] <= 1.0;
        let (down, upd) = if binary {
            (Decision::Fix(v, 0.0), Decision::Fix(v, 1.0))
        } else {
            (Decision::Upper(v, x.floor()), Decision::Lower(v, x.ceil()))
        };
        if up {
            (upd, down)
        } else {
            (down, upd)
        }
    }

    fn start_node(&mut self, r: Result<LpResult, SolverError>) -> Result<Option<Start>, SolverError> {
        Ok(match self.edit(r)? {
            Node::Lp(l) => Some(Start::Lp(l)),
            Node::Dead => Some(Start::Dead),
            Node::Unknown => None,
        })
    }

    pub fn run(&mut self) -> Result<Solution, SolverError> {
        let mut stack: Vec<Frame> = Vec::new();
        self.prop.queue_all();
        if !self.prop.propagate() {
            return Ok(Solution::infeasible());
        }
        let mut start = Start::Rebuild;
        loop {
            if self.out_of_budget() {
                return Ok(Solution::unknown());
            }
            self.stats.nodes += 1;
            self.stats.max_depth = self.stats.max_depth.max(stack.len());
            let node = match std::mem::replace(&mut start, Start::Dead) {
                Start::Lp(lp) => self.sync(lp)?,
                Start::Rebuild => match self.fresh_lp()? {
                    Node::Lp(lp) => self.sync(lp)?,
                    other => other,
                },
                Start::Dead => Node::Dead,
            };
            let branch = match node {
                Node::Unknown => return Ok(Solution::unknown()),
                Node::Dead => None,
                Node::Lp(lp) => match self.pick(&lp) {
                    Some((v, x)) => {
                        let (a, b) = self.branches(v, x);
                        Some((a, b, lp))
                    }
                    None => {
                        let cand = self.candidate(&lp);
                        if self.model.check(&cand, 1e-6).is_ok() {
                            return Ok(Solution {
                                status: SolveStatus::Feasible,
                                values: cand,
                            });
                        }
                        // integral yet rejected (continuous slack): split a free variable
                        (0..self.prop.lo.len())
                            .find(|&v| self.prop.integral[v] && !self.prop.is_fixed(v))
                            .map(|v| {
                                let x = cand[v].clamp(self.prop.lo[v], self.prop.hi[v]);
                                if x < self.prop.hi[v] {
                                    (Decision::Upper(v, x), Decision::Lower(v, x + 1.0), lp)
                                } else {
                                    (Decision::Lower(v, x), Decision::Upper(v, x - 1.0), lp)
                                }
                            })
                    }
                },
            };
            if let Some((first, second, lp)) = branch {
                let depth = stack.len();
                if depth >= MAX_SNAPSHOTS {
                    stack[depth - MAX_SNAPSHOTS].lp = None;
                }
                stack.push(Frame {
                    mark: self.prop.mark(),
                    alt: Some(second),
                    lp: Some(lp.clone()),
                });
                if first.apply_prop(&mut self.prop) {
                    match self.start_node(first.apply_lp(lp))? {
                        Some(s) => start = s,
                        None => return Ok(Solution::unknown()),
                    }
                    continue;
                }
            }
            // backtrack to the deepest open alternative
            loop {
                let Some(mut frame) = stack.pop() else {
                    return Ok(Solution::infeasible());
                };
                self.prop.undo(frame.mark);
                let Some(alt) = frame.alt.take() else {
                    continue;
                };
                if !alt.apply_prop(&mut self.prop) {
                    self.prop.undo(frame.mark);
                    continue;
                }
                let lp = frame.lp.take();
                // the exhausted frame stays so its mark still undoes this branch
                stack.push(frame);
                start = match lp {
                    Some(l) => match self.start_node(alt.apply_lp(l))? {
                        Some(s) => s,
                        None => return Ok(Solution::unknown()),
                    },
                    None => Start::Rebuild,
                };
                break;
            }
        }
    }
}

enum Start {
    Lp(LpState),
    Rebuild,
    Dead,
}
