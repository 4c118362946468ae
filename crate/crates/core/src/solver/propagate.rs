//! Activity-based bound propagation with an undo trail.

use std::collections::VecDeque;

use crate::ilp::{IlpModel, Sense};

const INT_TOL: f64 = 1e-6;
// continuous bounds only move when the gain is worth another pass
const CONT_GAIN: f64 = 1e-4;

#[derive(Debug, Clone)]
struct Row {
    start: usize,
    end: usize,
    lo: f64,
    hi: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Propagator {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub integral: Vec<bool>,
    rows: Vec<Row>,
    vars: Vec<u32>,
    coefs: Vec<f64>,
    col_rows: Vec<Vec<u32>>,
    trail: Vec<(u32, f64, f64)>,
    queue: VecDeque<u32>,
    queued: Vec<bool>,
}

impl Propagator {
    pub fn new(model: &IlpModel) -> Self {
        let n = model.num_vars();
        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        let mut integral = Vec::with_capacity(n);
        for v in model.vars() {
            let (a, b) = v.kind.bounds();
            lo.push(a);
            hi.push(b);
            integral.push(v.kind.is_integral());
        }
        let mut rows = Vec::new();
        let mut vars = Vec::new();
        let mut coefs = Vec::new();
        let mut col_rows = vec![Vec::new(); n];
        for c in model.constraints() {
            let start = vars.len();
            let r = rows.len() as u32;
            for &(v, k) in &c.terms {
                vars.push(v.index() as u32);
                coefs.push(k);
                col_rows[v.index()].push(r);
            }
            let (rlo, rhi) = match c.sense {
                Sense::Le => (f64::NEG_INFINITY, c.rhs),
                Sense::Ge => (c.rhs, f64::INFINITY),
                Sense::Eq => (c.rhs, c.rhs),
            };
            rows.push(Row {
                start,
                end: vars.len(),
                lo: rlo,
                hi: rhi,
            });
        }
        let m = rows.len();
        Propagator {
            lo,
            hi,
            integral,
            rows,
            vars,
            coefs,
            col_rows,
            trail: Vec::new(),
            queue: VecDeque::new(),
            queued: vec![false; m],
        }
    }

    pub fn mark(&self) -> usize {
        self.trail.len()
    }

    pub fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (v, l, h) = self.trail.pop().unwrap();
            self.lo[v as usize] = l;
            self.hi[v as usize] = h;
        }
        for r in self.queue.drain(..) {
            self.queued[r as usize] = false;
        }
    }

    pub fn is_fixed(&self, v: usize) -> bool {
        self.hi[v] - self.lo[v] < 1e-9
    }

    fn enqueue_var(&mut self, v: usize) {
        for i in 0..self.col_rows[v].len() {
            let r = self.col_rows[v][i];
            if !self.queued[r as usize] {
                self.queued[r as usize] = true;
                self.queue.push_back(r);
            }
        }
    }

    /// Tightens the bounds of `v`; false when the domain empties.
    pub fn set_bounds(&mut self, v: usize, lo: f64, hi: f64) -> bool {
        let (mut lo, mut hi) = (lo.max(self.lo[v]), hi.min(self.hi[v]));
        if self.integral[v] {
            lo = (lo - INT_TOL).ceil();
            hi = (hi + INT_TOL).floor();
        }
        if lo > hi + 1e-9 {
            return false;
        }
        if lo > hi {
            hi = lo;
        }
        if lo == self.lo[v] && hi == self.hi[v] {
            return true;
        }
        self.trail.push((v as u32, self.lo[v], self.hi[v]));
        self.lo[v] = lo;
        self.hi[v] = hi;
        self.enqueue_var(v);
        true
    }

    /// Queues every row; used once before the first propagation.
    pub fn queue_all(&mut self) {
        for r in 0..self.rows.len() {
            if !self.queued[r] {
                self.queued[r] = true;
                self.queue.push_back(r as u32);
            }
        }
    }

    /// Runs to a fixpoint. Returns false on a proven conflict.
    pub fn propagate(&mut self) -> bool {
        let mut budget = 50 * (self.rows.len() + 16);
        while let Some(r) = self.queue.pop_front() {
            self.queued[r as usize] = false;
            if budget == 0 {
                // stop tightening but keep the conflict test honest
                if !self.row_feasible(r as usize) {
                    self.undo_queue();
                    return false;
                }
                continue;
            }
            budget -= 1;
            if !self.propagate_row(r as usize) {
                self.undo_queue();
                return false;
            }
        }
        true
    }

    fn undo_queue(&mut self) {
        for r in self.queue.drain(..) {
            self.queued[r as usize] = false;
        }
    }

    fn activity(&self, r: usize) -> (f64, f64) {
        let row = &self.rows[r];
        let (mut amin, mut amax) = (0.0, 0.0);
        for i in row.start..row.end {
            let v = self.vars[i] as usize;
            let a = self.coefs[i];
            if a > 0.0 {
                amin += a * self.lo[v];
                amax += a * self.hi[v];
            } else {
                amin += a * self.hi[v];
                amax += a * self.lo[v];
            }
        }
        (amin, amax)
    }

    fn row_feasible(&self, r: usize) -> bool {
        let (amin, amax) = self.activity(r);
        let row = &self.rows[r];
        amin <= row.hi + 1e-7 && amax >= row.lo - 1e-7
    }

    fn propagate_row(&mut self, r: usize) -> bool {
        let (amin, amax) = self.activity(r);
        let (rlo, rhi, start, end) = {
            let row = &self.rows[r];
            (row.lo, row.hi, row.start, row.end)
        };
        if amin > rhi + 1e-7 || amax < rlo - 1e-7 {
            return false;
        }
        let slack_hi = rhi - amin;
        let slack_lo = amax - rlo;
        for i in start..end {
            let v = self.vars[i] as usize;
            let a = self.coefs[i];
            let (lo, hi) = (self.lo[v], self.hi[v]);
            if hi - lo < 1e-12 {
                continue;
            }
            // bounds implied by activity ≤ rhi and ≥ rlo
            let (mut nlo, mut nhi) = (lo, hi);
            if a > 0.0 {
                if slack_hi.is_finite() {
                    nhi = nhi.min(lo + slack_hi / a);
                }
                if slack_lo.is_finite() {
                    nlo = nlo.max(hi - slack_lo / a);
                }
            } else {
                if slack_hi.is_finite() {
                    nlo = nlo.max(hi + slack_hi / a);
                }
                if slack_lo.is_finite() {
                    nhi = nhi.min(lo - slack_lo / a);
                }
            }
            if !self.integral[v] {
                let width = (hi - lo).max(1e-9);
                if nlo - lo < CONT_GAIN * width {
                    nlo = lo;
                }
                if hi - nhi < CONT_GAIN * width {
                    nhi = hi;
                }
            }
            if (nlo > lo || nhi < hi) && !self.set_bounds(v, nlo, nhi) {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ilp::{BoolOp, LinExpr};

    #[test]
    fn and_gadget_propagates_both_ways() {
        let mut m = IlpModel::new();
        let x = m.binary("x");
        let y = m.binary("y");
        let z = m.bool_gadget(BoolOp::And, &[x, y]).unwrap();
        let mut p = Propagator::new(&m);
        p.queue_all();
        assert!(p.propagate());
        let mark = p.mark();
        assert!(p.set_bounds(z.index(), 1.0, 1.0));
        assert!(p.propagate());
        assert_eq!((p.lo[x.index()], p.lo[y.index()]), (1.0, 1.0));
        p.undo(mark);
        assert_eq!(p.lo[x.index()], 0.0);
        assert!(p.set_bounds(x.index(), 0.0, 0.0));
        assert!(p.propagate());
        assert_eq!(p.hi[z.index()], 0.0);
    }

    #[test]
    fn detects_conflict() {
        let mut m = IlpModel::new();
        let x = m.binary("x");
        let y = m.binary("y");
        m.constrain(LinExpr::sum([x, y]), Sense::Ge, 1.0);
        m.constrain(LinExpr::sum([x, y]), Sense::Le, 0.0);
        let mut p = Propagator::new(&m);
        p.queue_all();
        assert!(!p.propagate());
    }
}
