//! Two-layer counting temporal logic.
//!
//! An [`InnerFormula`] is an ordinary LTL formula over atomic propositions and
//! describes what a single robot does. An [`OuterFormula`] is LTL over
//! [`TempCountProp`]s: `[φ, m]` holds when at least `m` robots satisfy the inner
//! formula `φ` at their current local time. The optional robot group restricts
//! the count to a subset of robots.

mod fragment;
mod normal;
mod parse;

use std::fmt;

pub use fragment::{check_fragment, formula_length, inner_length, FragmentReport};
pub use normal::{expand_sugar, inner_nnf, negate_inner, to_pnf, to_pnf_with_warnings, PnfWarning};
pub use parse::{parse_formula, parse_formula_with_groups, ParseError, ParseErrorKind};

/// Single-robot formula.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InnerFormula {
    True,
    False,
    Atom(String),
    Not(Box<InnerFormula>),
    And(Vec<InnerFormula>),
    Or(Vec<InnerFormula>),
    Next(Box<InnerFormula>),
    Until(Box<InnerFormula>, Box<InnerFormula>),
    Release(Box<InnerFormula>, Box<InnerFormula>),
    Eventually(Box<InnerFormula>),
    Always(Box<InnerFormula>),
}

/// A named subset of robot indices (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RobotGroup {
    pub name: String,
    pub robots: Vec<usize>,
}

/// Temporal counting proposition `[φ, m]` or `[φ, @group, m]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TempCountProp {
    pub inner: InnerFormula,
    pub group: Option<RobotGroup>,
    pub m: u32,
}

/// Multi-robot formula over temporal counting propositions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OuterFormula {
    True,
    False,
    Tcp(TempCountProp),
    Not(Box<OuterFormula>),
    And(Vec<OuterFormula>),
    Or(Vec<OuterFormula>),
    Next(Box<OuterFormula>),
    Until(Box<OuterFormula>, Box<OuterFormula>),
    Release(Box<OuterFormula>, Box<OuterFormula>),
    Eventually(Box<OuterFormula>),
    Always(Box<OuterFormula>),
}

impl InnerFormula {
    pub fn atom(name: impl Into<String>) -> Self {
        InnerFormula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        InnerFormula::Not(Box::new(self))
    }

    pub fn next(self) -> Self {
        InnerFormula::Next(Box::new(self))
    }

    pub fn eventually(self) -> Self {
        InnerFormula::Eventually(Box::new(self))
    }

    pub fn always(self) -> Self {
        InnerFormula::Always(Box::new(self))
    }

    pub fn until(self, rhs: Self) -> Self {
        InnerFormula::Until(Box::new(self), Box::new(rhs))
    }

    pub fn release(self, rhs: Self) -> Self {
        InnerFormula::Release(Box::new(self), Box::new(rhs))
    }

    /// Atoms mentioned anywhere in the formula, sorted and deduplicated.
    pub fn atoms(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_atoms(&self, out: &mut Vec<String>) {
        match self {
            InnerFormula::True | InnerFormula::False => {}
            InnerFormula::Atom(a) => out.push(a.clone()),
            InnerFormula::Not(c)
            | InnerFormula::Next(c)
            | InnerFormula::Eventually(c)
            | InnerFormula::Always(c) => c.collect_atoms(out),
            InnerFormula::And(cs) | InnerFormula::Or(cs) => {
                cs.iter().for_each(|c| c.collect_atoms(out))
            }
            InnerFormula::Until(a, b) | InnerFormula::Release(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// True when the formula contains a next operator.
    pub fn has_next(&self) -> bool {
        match self {
            InnerFormula::True | InnerFormula::False | InnerFormula::Atom(_) => false,
            InnerFormula::Next(_) => true,
            InnerFormula::Not(c) | InnerFormula::Eventually(c) | InnerFormula::Always(c) => {
                c.has_next()
            }
            InnerFormula::And(cs) | InnerFormula::Or(cs) => cs.iter().any(|c| c.has_next()),
            InnerFormula::Until(a, b) | InnerFormula::Release(a, b) => {
                a.has_next() || b.has_next()
            }
        }
    }
}

impl TempCountProp {
    pub fn new(inner: InnerFormula, m: u32) -> Self {
        TempCountProp { inner, group: None, m }
    }

    pub fn with_group(inner: InnerFormula, group: RobotGroup, m: u32) -> Self {
        TempCountProp {
            inner,
            group: Some(group),
            m,
        }
    }

    /// Robots whose satisfaction is counted, given the total robot count.
    pub fn counted_robots(&self, n_robots: usize) -> Vec<usize> {
        match &self.group {
            Some(g) => g.robots.clone(),
            None => (0..n_robots).collect(),
        }
    }

    /// Size of the counted population.
    pub fn population(&self, n_robots: usize) -> usize {
        match &self.group {
            Some(g) => g.robots.len(),
            None => n_robots,
        }
    }
}

impl OuterFormula {
    pub fn tcp(inner: InnerFormula, m: u32) -> Self {
        OuterFormula::Tcp(TempCountProp::new(inner, m))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        OuterFormula::Not(Box::new(self))
    }

    pub fn next(self) -> Self {
        OuterFormula::Next(Box::new(self))
    }

    pub fn eventually(self) -> Self {
        OuterFormula::Eventually(Box::new(self))
    }

    pub fn always(self) -> Self {
        OuterFormula::Always(Box::new(self))
    }

    pub fn until(self, rhs: Self) -> Self {
        OuterFormula::Until(Box::new(self), Box::new(rhs))
    }

    pub fn release(self, rhs: Self) -> Self {
        OuterFormula::Release(Box::new(self), Box::new(rhs))
    }

    /// All temporal counting propositions in left-to-right order.
    pub fn tcps(&self) -> Vec<&TempCountProp> {
        let mut out = Vec::new();
        self.collect_tcps(&mut out);
        out
    }

    fn collect_tcps<'a>(&'a self, out: &mut Vec<&'a TempCountProp>) {
        match self {
            OuterFormula::True | OuterFormula::False => {}
            OuterFormula::Tcp(t) => out.push(t),
            OuterFormula::Not(c)
            | OuterFormula::Next(c)
            | OuterFormula::Eventually(c)
            | OuterFormula::Always(c) => c.collect_tcps(out),
            OuterFormula::And(cs) | OuterFormula::Or(cs) => {
                cs.iter().for_each(|c| c.collect_tcps(out))
            }
            OuterFormula::Until(a, b) | OuterFormula::Release(a, b) => {
                a.collect_tcps(out);
                b.collect_tcps(out);
            }
        }
    }

    /// Atoms used by any inner formula.
    pub fn atoms(&self) -> Vec<String> {
        let mut out: Vec<String> = self.tcps().iter().flat_map(|t| t.inner.atoms()).collect();
        out.sort();
        out.dedup();
        out
    }

    /// True when the outer layer contains a next operator.
    pub fn has_outer_next(&self) -> bool {
        match self {
            OuterFormula::True | OuterFormula::False | OuterFormula::Tcp(_) => false,
            OuterFormula::Next(_) => true,
            OuterFormula::Not(c) | OuterFormula::Eventually(c) | OuterFormula::Always(c) => {
                c.has_outer_next()
            }
            OuterFormula::And(cs) | OuterFormula::Or(cs) => cs.iter().any(|c| c.has_outer_next()),
            OuterFormula::Until(a, b) | OuterFormula::Release(a, b) => {
                a.has_outer_next() || b.has_outer_next()
            }
        }
    }

    /// True when any layer contains a next operator.
    pub fn has_any_next(&self) -> bool {
        self.has_outer_next() || self.tcps().iter().any(|t| t.inner.has_next())
    }
}

// Binary operators are always parenthesized so printed text parses back to the
// same tree. Parenthesized groups are not flattened by the parser.

fn write_nary<T: fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    op: &str,
    empty: &str,
    cs: &[T],
) -> fmt::Result {
    match cs {
        [] => f.write_str(empty),
        [only] => write!(f, "{only}"),
        _ => {
            f.write_str("(")?;
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{c}")?;
            }
            f.write_str(")")
        }
    }
}

impl fmt::Display for InnerFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InnerFormula::True => f.write_str("true"),
            InnerFormula::False => f.write_str("false"),
            InnerFormula::Atom(a) => f.write_str(a),
            InnerFormula::Not(c) => write!(f, "!{c}"),
            InnerFormula::Next(c) => write!(f, "X {c}"),
            InnerFormula::Eventually(c) => write!(f, "F {c}"),
            InnerFormula::Always(c) => write!(f, "G {c}"),
            InnerFormula::And(cs) => write_nary(f, "&", "true", cs),
            InnerFormula::Or(cs) => write_nary(f, "|", "false", cs),
            InnerFormula::Until(a, b) => write!(f, "({a} U {b})"),
            InnerFormula::Release(a, b) => write!(f, "({a} R {b})"),
        }
    }
}

impl fmt::Display for TempCountProp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.group {
            Some(g) => write!(f, "[{}, @{}, {}]", self.inner, g.name, self.m),
            None => write!(f, "[{}, {}]", self.inner, self.m),
        }
    }
}

impl fmt::Display for OuterFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OuterFormula::True => f.write_str("true"),
            OuterFormula::False => f.write_str("false"),
            OuterFormula::Tcp(t) => write!(f, "{t}"),
            OuterFormula::Not(c) => write!(f, "!{c}"),
            OuterFormula::Next(c) => write!(f, "X {c}"),
            OuterFormula::Eventually(c) => write!(f, "F {c}"),
            OuterFormula::Always(c) => write!(f, "G {c}"),
            OuterFormula::And(cs) => write_nary(f, "&", "true", cs),
            OuterFormula::Or(cs) => write_nary(f, "|", "false", cs),
            OuterFormula::Until(a, b) => write!(f, "({a} U {b})"),
            OuterFormula::Release(a, b) => write!(f, "({a} R {b})"),
        }
    }
}
