//! Solver-neutral integer program builder.

mod gadget;
mod lp_format;

use std::collections::BTreeMap;
use std::fmt;

pub use gadget::BoolOp;
pub use lp_format::{export_lp, lp_names, write_lp};

#[derive(Debug, thiserror::Error)]
pub enum IlpError {
    #[error("variable `{name}` has empty domain [{lo}, {hi}]")]
    InvalidBounds { name: String, lo: f64, hi: f64 },
    #[error("variable `{name}` has an infinite bound")]
    UnboundedVariable { name: String },
    #[error("expression references unregistered variable #{0}")]
    UnknownVariable(u32),
    #[error("boolean gadget needs at least one input")]
    EmptyGadget,
    #[error("gadget input `{0}` is not binary")]
    NotBinary(String),
    #[error("indicator needs an integer-valued expression")]
    NotIntegral,
    #[error("big-M {big_m} too small: need at least {needed}")]
    BigMTooSmall { big_m: f64, needed: f64 },
    #[error("writing LP file: {0}")]
    Io(#[from] std::io::Error),
}

/// Opaque handle of a model variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub(crate) u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarKind {
    Binary,
    Integer { lo: i64, hi: i64 },
    Continuous { lo: f64, hi: f64 },
}

impl VarKind {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            VarKind::Binary => (0.0, 1.0),
            VarKind::Integer { lo, hi } => (lo as f64, hi as f64),
            VarKind::Continuous { lo, hi } => (lo, hi),
        }
    }

    pub fn is_integral(&self) -> bool {
        !matches!(self, VarKind::Continuous { .. })
    }
}

#[derive(Debug, Clone)]
pub struct VarInfo {
    pub kind: VarKind,
    pub name: String,
    pub tag: String,
}

/// Sparse linear expression plus a constant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    terms: BTreeMap<VarId, f64>,
    constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr {
            terms: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(v: VarId) -> Self {
        let mut e = Self::new();
        e.add_term(v, 1.0);
        e
    }

    pub fn sum(vars: impl IntoIterator<Item = VarId>) -> Self {
        let mut e = Self::new();
        for v in vars {
            e.add_term(v, 1.0);
        }
        e
    }

    pub fn add_term(&mut self, v: VarId, coeff: f64) -> &mut Self {
        let c = self.terms.entry(v).or_insert(0.0);
        *c += coeff;
        if *c == 0.0 {
            self.terms.remove(&v);
        }
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    pub fn add_expr(&mut self, other: &LinExpr, scale: f64) -> &mut Self {
        for (&v, &c) in &other.terms {
            self.add_term(v, c * scale);
        }
        self.constant += other.constant * scale;
        self
    }

    pub fn with_term(mut self, v: VarId, coeff: f64) -> Self {
        self.add_term(v, coeff);
        self
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (VarId, f64)> + '_ {
        self.terms.iter().map(|(&v, &c)| (v, c))
    }

    pub fn coeff(&self, v: VarId) -> f64 {
        self.terms.get(&v).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|(v, c)| c * values[v.index()])
                .sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

/// `Σ terms ⋈ rhs`, with any expression constant already moved to the right.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub tag: u16,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|(v, c)| c * values[v.index()]).sum()
    }

    /// Amount by which the constraint is violated at `values` (0 if satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let a = self.activity(values);
        match self.sense {
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

/// Variable and constraint totals, overall and per tag.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct ModelStats {
    pub variables: usize,
    pub binary: usize,
    pub integer: usize,
    pub continuous: usize,
    pub constraints: usize,
    pub variables_by_tag: BTreeMap<String, usize>,
    pub constraints_by_tag: BTreeMap<String, usize>,
}

/// Integer linear feasibility model.
#[derive(Debug, Clone, Default)]
pub struct IlpModel {
    vars: Vec<VarInfo>,
    constraints: Vec<Constraint>,
    tags: Vec<String>,
    section: String,
    objective: Option<LinExpr>,
}

impl IlpModel {
    pub fn new() -> Self {
        IlpModel {
            section: "model".into(),
            ..Default::default()
        }
    }

    /// Tag applied to variables created from now on.
    pub fn set_section(&mut self, tag: &str) {
        self.section = tag.to_string();
    }

    pub fn section(&self) -> &str {
        &self.section
    }

    fn intern(&mut self, tag: &str) -> u16 {
        match self.tags.iter().position(|t| t == tag) {
            Some(i) => i as u16,
            None => {
                self.tags.push(tag.to_string());
                (self.tags.len() - 1) as u16
            }
        }
    }

    pub fn add_var(&mut self, kind: VarKind, name: impl Into<String>) -> Result<VarId, IlpError> {
        let name = name.into();
        let (lo, hi) = kind.bounds();
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(IlpError::UnboundedVariable { name });
        }
        if lo > hi || lo.is_nan() || hi.is_nan() {
            return Err(IlpError::InvalidBounds { name, lo, hi });
        }
        let id = VarId(self.vars.len() as u32);
        self.vars.push(VarInfo {
            kind,
            name,
            tag: self.section.clone(),
        });
        Ok(id)
    }

    pub fn binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(VarKind::Binary, name).expect("binary bounds are valid")
    }

    pub fn add_constraint(
        &mut self,
        expr: LinExpr,
        sense: Sense,
        rhs: f64,
        tag: &str,
    ) -> Result<(), IlpError> {
        for (v, _) in expr.terms() {
            if v.index() >= self.vars.len() {
                return Err(IlpError::UnknownVariable(v.0));
            }
        }
        let tag = self.intern(tag);
        let rhs = rhs - expr.constant;
        self.constraints.push(Constraint {
            terms: expr.terms().collect(),
            sense,
            rhs,
            tag,
        });
        Ok(())
    }

    /// Adds a constraint tagged with the current section.
    pub fn constrain(&mut self, expr: LinExpr, sense: Sense, rhs: f64) {
        let tag = self.section.clone();
        self.add_constraint(expr, sense, rhs, &tag)
            .expect("encoder only references its own variables")
    }

    pub fn set_objective(&mut self, obj: Option<LinExpr>) {
        self.objective = obj;
    }

    pub fn objective(&self) -> Option<&LinExpr> {
        self.objective.as_ref()
    }

    pub fn vars(&self) -> &[VarInfo] {
        &self.vars
    }

    pub fn var(&self, v: VarId) -> &VarInfo {
        &self.vars[v.index()]
    }

    pub fn var_ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.vars.len() as u32).map(VarId)
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn tag_name(&self, tag: u16) -> &str {
        &self.tags[tag as usize]
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Bounds of `expr` implied by the variable domains.
    pub fn expr_bounds(&self, expr: &LinExpr) -> (f64, f64) {
        let mut lo = expr.constant;
        let mut hi = expr.constant;
        for (v, c) in expr.terms() {
            let (a, b) = self.var(v).kind.bounds();
            if c >= 0.0 {
                lo += c * a;
                hi += c * b;
            } else {
                lo += c * b;
                hi += c * a;
            }
        }
        (lo, hi)
    }

    /// True when `expr` takes integer values at every integral point.
    pub fn is_integral_expr(&self, expr: &LinExpr) -> bool {
        expr.constant.fract() == 0.0
            && expr
                .terms()
                .all(|(v, c)| c.fract() == 0.0 && self.var(v).kind.is_integral())
    }

    pub fn stats(&self) -> ModelStats {
        let mut s = ModelStats {
            variables: self.vars.len(),
            constraints: self.constraints.len(),
            ..Default::default()
        };
        for v in &self.vars {
            match v.kind {
                VarKind::Binary => s.binary += 1,
                VarKind::Integer { .. } => s.integer += 1,
                VarKind::Continuous { .. } => s.continuous += 1,
            }
            *s.variables_by_tag.entry(v.tag.clone()).or_default() += 1;
        }
        for c in &self.constraints {
            *s.constraints_by_tag
                .entry(self.tags[c.tag as usize].clone())
                .or_default() += 1;
        }
        s
    }

    /// Checks domains, integrality, and every constraint at `values`.
    pub fn check(&self, values: &[f64], tol: f64) -> Result<(), String> {
        if values.len() != self.vars.len() {
            return Err(format!(
                "{} values for {} variables",
                values.len(),
                self.vars.len()
            ));
        }
        for (v, &x) in self.vars.iter().zip(values) {
            let (lo, hi) = v.kind.bounds();
            if !x.is_finite() || x < lo - tol || x > hi + tol {
                return Err(format!("`{}` = {x} outside [{lo}, {hi}]", v.name));
            }
            if v.kind.is_integral() && (x - x.round()).abs() > tol {
                return Err(format!("`{}` = {x} is not integral", v.name));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let viol = c.violation(values);
            if viol > tol {
                return Err(format!(
                    "constraint {i} ({}) violated by {viol}",
                    self.tags[c.tag as usize]
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Feasible,
    Infeasible,
    Unknown,
}

/// Solver outcome. `values` is indexed by [`VarId::index`] and empty unless
/// the status is feasible.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    pub values: Vec<f64>,
}

impl Solution {
    pub fn infeasible() -> Self {
        Solution {
            status: SolveStatus::Infeasible,
            values: Vec::new(),
        }
    }

    pub fn unknown() -> Self {
        Solution {
            status: SolveStatus::Unknown,
            values: Vec::new(),
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status == SolveStatus::Feasible
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.index()]
    }

    pub fn is_true(&self, v: VarId) -> bool {
        self.values[v.index()] > 0.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn var_bounds() {
        let mut m = IlpModel::new();
        assert!(m.add_var(VarKind::Binary, "b").is_ok());
        assert!(m.add_var(VarKind::Integer { lo: 0, hi: 5 }, "i").is_ok());
        assert!(matches!(
            m.add_var(VarKind::Continuous { lo: 2.0, hi: 1.0 }, "c"),
            Err(IlpError::InvalidBounds { .. })
        ));
        assert!(matches!(
            m.add_var(
                VarKind::Continuous {
                    lo: 0.0,
                    hi: f64::INFINITY
                },
                "c"
            ),
            Err(IlpError::UnboundedVariable { .. })
        ));
        assert_eq!(m.num_vars(), 2);
    }

    #[test]
    fn constraints_and_tags() {
        let mut m = IlpModel::new();
        let x = m.binary("x");
        let y = m.binary("y");
        m.add_constraint(LinExpr::sum([x, y]), Sense::Le, 1.0, "collision")
            .unwrap();
        m.add_constraint(LinExpr::constant(0.0), Sense::Le, -1.0, "junk")
            .unwrap();
        assert!(matches!(
            m.add_constraint(LinExpr::var(VarId(7)), Sense::Le, 1.0, "bad"),
            Err(IlpError::UnknownVariable(7))
        ));
        let s = m.stats();
        assert_eq!(s.constraints, 2);
        assert_eq!(s.constraints_by_tag["collision"], 1);
        assert_eq!(s.variables_by_tag["model"], 2);
        assert!(m.check(&[1.0, 0.0], 1e-9).is_err());
    }

    #[test]
    fn expression_algebra() {
        let mut m = IlpModel::new();
        let x = m.binary("x");
        let mut e = LinExpr::var(x).with_constant(2.0);
        e.add_term(x, -1.0);
        assert!(e.is_constant());
        assert_eq!(e.constant_term(), 2.0);
        let e = LinExpr::var(x).with_term(x, 2.0).with_constant(-1.0);
        assert_eq!(m.expr_bounds(&e), (-1.0, 2.0));
        assert!(m.is_integral_expr(&e));
        assert!(!m.is_integral_expr(&LinExpr::var(x).with_constant(0.5)));
    }
}
