//! Compilation of counting temporal logic problems into ILPs.
//!
//! All encoders share one convention: states exist for `t = 0..=h`, loop
//! variables `z_loop[t]` and formula variables for `t = 0..h`, and the
//! successor of position `h − 1` is the loop start. Constant subformulas are
//! folded away as [`Bit::Const`] rather than pinned variables.

mod cltl;
mod continuous;
mod formula;
mod robust;
mod sync;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ilp::{BoolOp, IlpError, IlpModel, LinExpr, Sense, Solution, VarId};
use crate::system::SystemError;

pub use cltl::{build_cltl_problem, decompose_flows, decompose_flows_with, TieBreak};
pub use continuous::{
    build_cont_problem, extract_continuous, ContinuousOptions, ContinuousTrajectory,
};
pub use robust::{build_robust_problem, build_robust_problem_with, RobustOptions};
pub use sync::{build_sync_problem, extract_trajectories};

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("unknown atomic proposition `{0}`")]
    UnknownAtom(String),
    #[error("inner next cannot be made robust to asynchrony: `{0}`")]
    InnerNextRobust(String),
    #[error("not a cLTL formula: inner formula `{0}` is not propositional")]
    NotCltl(String),
    #[error("robot group `{0}` cannot be used here: {1}")]
    BadGroup(String, String),
    #[error("outer negation left in `{0}`; normalize to PNF first")]
    NotPnf(String),
    #[error("collision constraints need robots with a common state space")]
    CollisionStateSpace,
    #[error("continuous model: {0}")]
    Continuous(String),
    #[error("solution is not feasible")]
    NotFeasible,
    #[error("malformed solution: {0}")]
    Malformed(String),
    #[error("flow decomposition failed: {0}")]
    Decomposition(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Ilp(#[from] IlpError),
}

/// A Boolean value in the model: a known constant or a binary variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bit {
    Const(bool),
    Var(VarId),
}

impl Bit {
    pub fn value(self, sol: &Solution) -> bool {
        match self {
            Bit::Const(b) => b,
            Bit::Var(v) => sol.is_true(v),
        }
    }

    fn expr(self) -> LinExpr {
        match self {
            Bit::Const(b) => LinExpr::constant(f64::from(u8::from(b))),
            Bit::Var(v) => LinExpr::var(v),
        }
    }
}

/// Where each encoded quantity lives in the model.
#[derive(Debug, Clone, Default)]
pub struct VariableLayout {
    pub h: usize,
    pub tau: usize,
    pub z_loop: Vec<VarId>,
    /// Per-robot one-hot states `w[n][t][s]`, `t = 0..=h+τ`.
    pub w: Vec<Vec<Vec<VarId>>>,
    /// Aggregate counts `w[t][i]` and flows `u[t] = [((i, j), var)]`.
    pub counts: Vec<Vec<VarId>>,
    pub flows: Vec<Vec<((usize, usize), VarId)>>,
    /// Continuous inputs `u[n][t][k]`.
    pub inputs: Vec<Vec<Vec<VarId>>>,
    /// Inner formula values keyed by `(formula, robot)`.
    pub inner: BTreeMap<(String, usize), Vec<Bit>>,
    /// Windowed robust values `R`, same keys as `inner`.
    pub robust: BTreeMap<(String, usize), Vec<Bit>>,
    /// Outer formula values keyed by formula text.
    pub outer: BTreeMap<String, Vec<Bit>>,
    pub root: Option<Bit>,
}

impl VariableLayout {
    pub fn loop_start(&self, sol: &Solution) -> Result<usize, EncodeError> {
        let on: Vec<usize> = (0..self.z_loop.len())
            .filter(|&t| sol.is_true(self.z_loop[t]))
            .collect();
        match on.as_slice() {
            [l] => Ok(*l),
            _ => Err(EncodeError::Malformed(format!(
                "expected one loop start, found {on:?}"
            ))),
        }
    }
}

/// An encoded problem ready to solve.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub model: IlpModel,
    pub layout: VariableLayout,
    pub warnings: Vec<String>,
}

/// Model under construction plus the loop variables every encoder shares.
pub(crate) struct Ctx {
    pub model: IlpModel,
    pub h: usize,
    /// Positions past `h − 1` that inner sequences must also cover.
    pub ext: usize,
    pub z_loop: Vec<VarId>,
    aux: usize,
}

impl Ctx {
    pub fn new(h: usize, ext: usize) -> Result<Self, EncodeError> {
        if h == 0 {
            return Err(EncodeError::ZeroHorizon);
        }
        Ok(Ctx {
            model: IlpModel::new(),
            h,
            ext,
            z_loop: Vec::new(),
            aux: 0,
        })
    }

    /// `z_loop[t]` for `t < h` with exactly one set.
    pub fn add_loop_vars(&mut self) {
        self.model.set_section("loop");
        self.z_loop = (0..self.h)
            .map(|t| self.model.binary(format!("zloop_{t}")))
            .collect();
        self.model
            .constrain(LinExpr::sum(self.z_loop.clone()), Sense::Eq, 1.0);
    }

    fn aux_name(&mut self) -> String {
        self.aux += 1;
        format!("g{}", self.aux)
    }

    fn name_or_aux(&mut self, name: Option<String>) -> String {
        match name {
            Some(n) => n,
            None => self.aux_name(),
        }
    }

    pub fn and(&mut self, bits: &[Bit], name: Option<String>) -> Bit {
        self.gate(BoolOp::And, bits, name)
    }

    pub fn or(&mut self, bits: &[Bit], name: Option<String>) -> Bit {
        self.gate(BoolOp::Or, bits, name)
    }

    fn gate(&mut self, op: BoolOp, bits: &[Bit], name: Option<String>) -> Bit {
        // the absorbing constant decides; the neutral one drops out
        let absorbing = op == BoolOp::Or;
        let mut vars: Vec<VarId> = Vec::new();
        for &b in bits {
            match b {
                Bit::Const(c) if c == absorbing => return Bit::Const(absorbing),
                Bit::Const(_) => {}
                Bit::Var(v) => {
                    if !vars.contains(&v) {
                        vars.push(v);
                    }
                }
            }
        }
        match vars.as_slice() {
            [] => Bit::Const(!absorbing),
            [v] => Bit::Var(*v),
            _ => {
                let name = self.name_or_aux(name);
                let z = self.model.binary(name);
                self.model.bool_gadget_into(op, z, &vars);
                Bit::Var(z)
            }
        }
    }

    pub fn not(&mut self, b: Bit, name: Option<String>) -> Bit {
        match b {
            Bit::Const(c) => Bit::Const(!c),
            Bit::Var(x) => {
                let name = self.name_or_aux(name);
                let z = self.model.binary(name);
                self.model.bool_gadget_into(BoolOp::Not, z, &[x]);
                Bit::Var(z)
            }
        }
    }

    /// Binary equal to the 0/1 expression `expr`.
    pub fn bit_of(&mut self, expr: LinExpr, name: String) -> Bit {
        if expr.is_constant() {
            return Bit::Const(expr.constant_term() > 0.5);
        }
        let terms: Vec<(VarId, f64)> = expr.terms().collect();
        if terms.len() == 1 && terms[0].1 == 1.0 && expr.constant_term() == 0.0 {
            return Bit::Var(terms[0].0);
        }
        let z = self.model.binary(name);
        self.model.constrain(expr.with_term(z, -1.0), Sense::Eq, 0.0);
        Bit::Var(z)
    }

    /// `⋁_j (z_loop[j] ∧ seq[j])`: the value of `seq` at the loop start.
    pub fn loop_select(&mut self, seq: &[Bit], name: Option<String>) -> Bit {
        let h = self.h;
        if seq[..h].iter().all(|&b| b == seq[0]) {
            return seq[0];
        }
        let mut terms = Vec::with_capacity(h);
        for j in 0..h {
            let zl = Bit::Var(self.z_loop[j]);
            let t = self.and(&[zl, seq[j]], None);
            terms.push(t);
        }
        self.or(&terms, name)
    }

    /// `y ⇔ Σ bits ≥ m` using the big-M pair with `big_m`.
    pub fn indicator(&mut self, bits: &[Bit], m: i64, big_m: f64, name: String) -> Bit {
        let mut e = LinExpr::new();
        for &b in bits {
            e.add_expr(&b.expr(), 1.0);
        }
        self.indicator_expr(e, m, big_m, name)
    }

    pub fn indicator_expr(&mut self, e: LinExpr, m: i64, big_m: f64, name: String) -> Bit {
        let (lo, hi) = self.model.expr_bounds(&e);
        if lo >= m as f64 {
            return Bit::Const(true);
        }
        if hi < m as f64 {
            return Bit::Const(false);
        }
        let y = self.model.binary(name);
        self.model.indicator_into(y, &e, m, big_m);
        Bit::Var(y)
    }

    /// Forces `a = b` whenever `z_loop[l]` is set.
    pub fn tie(&mut self, a: Bit, b: Bit, l: usize) {
        if a == b {
            return;
        }
        let g = self.z_loop[l];
        let diff = a.expr().with_term(g, 1.0);
        let mut d1 = diff.clone();
        d1.add_expr(&b.expr(), -1.0);
        self.model.constrain(d1, Sense::Le, 1.0);
        let mut d2 = b.expr().with_term(g, 1.0);
        d2.add_expr(&a.expr(), -1.0);
        self.model.constrain(d2, Sense::Le, 1.0);
    }

    /// Extends a length-`h` sequence over the `ext` positions past the loop
    /// by tying each to its loop-equivalent position.
    pub fn tie_ext(&mut self, seq: &mut Vec<Bit>, base: &str) {
        let h = self.h;
        for k in 0..self.ext {
            let cands: Vec<Bit> = (0..h).map(|l| seq[l + k % (h - l)]).collect();
            if cands.iter().all(|&c| c == cands[0]) {
                seq.push(cands[0]);
                continue;
            }
            let e = Bit::Var(self.model.binary(format!("{base}_t{}", h + k)));
            for (l, c) in cands.into_iter().enumerate() {
                self.tie(e, c, l);
            }
            seq.push(e);
        }
    }

    /// Requires `b` to hold (an unsatisfiable constant becomes an empty row).
    pub fn require(&mut self, b: Bit) {
        match b {
            Bit::Const(true) => {}
            Bit::Const(false) => self.model.constrain(LinExpr::new(), Sense::Ge, 1.0),
            Bit::Var(v) => self.model.constrain(LinExpr::var(v), Sense::Eq, 1.0),
        }
    }

    pub fn next_seq(&mut self, child: &[Bit], base: &str) -> Vec<Bit> {
        let h = self.h;
        let mut out: Vec<Bit> = child[1..h].to_vec();
        let last = self.loop_select(child, Some(format!("{base}_t{}", h - 1)));
        out.push(last);
        out
    }

    /// `z[t] = b[t] ∨ (a[t] ∧ z[t+1])` with the auxiliary pass closing the loop.
    pub fn until_seq(&mut self, a: &[Bit], b: &[Bit], base: &str) -> Vec<Bit> {
        let h = self.h;
        let mut aux = vec![Bit::Const(false); h];
        aux[h - 1] = b[h - 1];
        for t in (0..h - 1).rev() {
            let c = self.and(&[a[t], aux[t + 1]], None);
            aux[t] = self.or(&[b[t], c], Some(format!("{base}x_t{t}")));
        }
        let mut z = vec![Bit::Const(false); h];
        let wrap = self.loop_select(&aux, None);
        let c = self.and(&[a[h - 1], wrap], None);
        z[h - 1] = self.or(&[b[h - 1], c], Some(format!("{base}_t{}", h - 1)));
        for t in (0..h - 1).rev() {
            let c = self.and(&[a[t], z[t + 1]], None);
            z[t] = self.or(&[b[t], c], Some(format!("{base}_t{t}")));
        }
        z
    }

    /// `z[t] = b[t] ∧ (a[t] ∨ z[t+1])`, the dual scheme.
    pub fn release_seq(&mut self, a: &[Bit], b: &[Bit], base: &str) -> Vec<Bit> {
        let h = self.h;
        let mut aux = vec![Bit::Const(true); h];
        aux[h - 1] = b[h - 1];
        for t in (0..h - 1).rev() {
            let c = self.or(&[a[t], aux[t + 1]], None);
            aux[t] = self.and(&[b[t], c], Some(format!("{base}x_t{t}")));
        }
        let mut z = vec![Bit::Const(true); h];
        let wrap = self.loop_select(&aux, None);
        let c = self.or(&[a[h - 1], wrap], None);
        z[h - 1] = self.and(&[b[h - 1], c], Some(format!("{base}_t{}", h - 1)));
        for t in (0..h - 1).rev() {
            let c = self.or(&[a[t], z[t + 1]], None);
            z[t] = self.and(&[b[t], c], Some(format!("{base}_t{t}")));
        }
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding() {
        let mut c = Ctx::new(2, 0).unwrap();
        let x = Bit::Var(c.model.binary("x"));
        assert_eq!(c.and(&[x, Bit::Const(true)], None), x);
        assert_eq!(c.and(&[x, Bit::Const(false)], None), Bit::Const(false));
        assert_eq!(c.or(&[Bit::Const(false)], None), Bit::Const(false));
        assert_eq!(c.or(&[x, x], None), x);
        assert_eq!(c.model.num_vars(), 1);
        assert_eq!(
            c.indicator(&[Bit::Const(true), Bit::Const(true)], 2, 3.0, "y".into()),
            Bit::Const(true)
        );
        assert_eq!(c.indicator(&[x], 2, 3.0, "y".into()), Bit::Const(false));
    }
}
