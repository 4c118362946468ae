use super::{InnerFormula, OuterFormula};

/// Syntactic classification of a formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct FragmentReport {
    /// Every counting proposition has a bare atom as its inner formula.
    pub is_cltl: bool,
    /// No next operator inside any inner formula.
    pub inner_next_free: bool,
    /// No outer negation and inner negation only on atoms.
    pub is_pnf: bool,
    /// Generated by `True | tcp | μ ∧ μ | tcp ∨ tcp | tcp U tcp | X μ`
    /// (with `F tcp` accepted as shorthand for a tcp until).
    pub in_completeness_fragment: bool,
    /// Completeness of the robust encoding additionally depends on mutually
    /// exclusive labels, because the formula pools robots across a
    /// disjunction or an until.
    pub mutually_exclusive_required: bool,
}

pub fn check_fragment(f: &OuterFormula) -> FragmentReport {
    let tcps = f.tcps();
    let in_frag = completeness_fragment(f);
    FragmentReport {
        is_cltl: tcps
            .iter()
            .all(|t| matches!(t.inner, InnerFormula::Atom(_))),
        inner_next_free: tcps.iter().all(|t| !t.inner.has_next()),
        is_pnf: outer_pnf(f),
        in_completeness_fragment: in_frag,
        mutually_exclusive_required: in_frag && pools_tcps(f),
    }
}

fn inner_pnf(f: &InnerFormula) -> bool {
    use InnerFormula as I;
    match f {
        I::True | I::False | I::Atom(_) => true,
        I::Not(c) => matches!(c.as_ref(), I::Atom(_)),
        I::And(cs) | I::Or(cs) => cs.iter().all(inner_pnf),
        I::Next(c) | I::Eventually(c) | I::Always(c) => inner_pnf(c),
        I::Until(a, b) | I::Release(a, b) => inner_pnf(a) && inner_pnf(b),
    }
}

fn outer_pnf(f: &OuterFormula) -> bool {
    use OuterFormula as O;
    match f {
        O::True | O::False => true,
        O::Tcp(t) => inner_pnf(&t.inner),
        O::Not(_) => false,
        O::And(cs) | O::Or(cs) => cs.iter().all(outer_pnf),
        O::Next(c) | O::Eventually(c) | O::Always(c) => outer_pnf(c),
        O::Until(a, b) | O::Release(a, b) => outer_pnf(a) && outer_pnf(b),
    }
}

fn completeness_fragment(f: &OuterFormula) -> bool {
    use OuterFormula as O;
    let is_tcp = |g: &OuterFormula| matches!(g, O::Tcp(_));
    match f {
        O::True | O::Tcp(_) => outer_pnf(f),
        O::And(cs) => cs.iter().all(completeness_fragment),
        O::Or(cs) => cs.len() == 2 && cs.iter().all(|c| is_tcp(c) && outer_pnf(c)),
        O::Until(a, b) => is_tcp(a) && is_tcp(b) && outer_pnf(f),
        O::Eventually(c) => is_tcp(c) && outer_pnf(c),
        O::Next(c) => completeness_fragment(c),
        O::False | O::Not(_) | O::Release(..) | O::Always(_) => false,
    }
}

fn pools_tcps(f: &OuterFormula) -> bool {
    use OuterFormula as O;
    match f {
        O::Or(_) | O::Until(..) | O::Eventually(_) => true,
        O::And(cs) => cs.iter().any(pools_tcps),
        O::Next(c) => pools_tcps(c),
        _ => false,
    }
}

/// Number of AST nodes, counting each tcp as one node plus its inner tree.
pub fn formula_length(f: &OuterFormula) -> usize {
    use OuterFormula as O;
    match f {
        O::True | O::False => 1,
        O::Tcp(t) => 1 + inner_length(&t.inner),
        O::Not(c) | O::Next(c) | O::Eventually(c) | O::Always(c) => 1 + formula_length(c),
        O::And(cs) | O::Or(cs) => 1 + cs.iter().map(formula_length).sum::<usize>(),
        O::Until(a, b) | O::Release(a, b) => 1 + formula_length(a) + formula_length(b),
    }
}

pub fn inner_length(f: &InnerFormula) -> usize {
    use InnerFormula as I;
    match f {
        I::True | I::False | I::Atom(_) => 1,
        I::Not(c) | I::Next(c) | I::Eventually(c) | I::Always(c) => 1 + inner_length(c),
        I::And(cs) | I::Or(cs) => 1 + cs.iter().map(inner_length).sum::<usize>(),
        I::Until(a, b) | I::Release(a, b) => 1 + inner_length(a) + inner_length(b),
    }
}
