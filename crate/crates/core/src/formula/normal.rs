use super::{InnerFormula, OuterFormula, TempCountProp};

/// A dualized threshold fell outside `[0, population + 1]` and was clamped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PnfWarning {
    pub tcp: String,
    pub message: String,
}

/// Negation of an inner formula, already in negation normal form.
pub fn negate_inner(f: &InnerFormula) -> InnerFormula {
    use InnerFormula as I;
    match f {
        I::True => I::False,
        I::False => I::True,
        I::Atom(a) => I::Not(Box::new(I::Atom(a.clone()))),
        I::Not(c) => inner_nnf(c),
        I::And(cs) => I::Or(cs.iter().map(negate_inner).collect()),
        I::Or(cs) => I::And(cs.iter().map(negate_inner).collect()),
        I::Next(c) => I::Next(Box::new(negate_inner(c))),
        I::Until(a, b) => I::Release(Box::new(negate_inner(a)), Box::new(negate_inner(b))),
        I::Release(a, b) => I::Until(Box::new(negate_inner(a)), Box::new(negate_inner(b))),
        I::Eventually(c) => I::Always(Box::new(negate_inner(c))),
        I::Always(c) => I::Eventually(Box::new(negate_inner(c))),
    }
}

/// Pushes negations down to atoms.
pub fn inner_nnf(f: &InnerFormula) -> InnerFormula {
    use InnerFormula as I;
    match f {
        I::True | I::False | I::Atom(_) => f.clone(),
        I::Not(c) => negate_inner(c),
        I::And(cs) => I::And(cs.iter().map(inner_nnf).collect()),
        I::Or(cs) => I::Or(cs.iter().map(inner_nnf).collect()),
        I::Next(c) => I::Next(Box::new(inner_nnf(c))),
        I::Until(a, b) => I::Until(Box::new(inner_nnf(a)), Box::new(inner_nnf(b))),
        I::Release(a, b) => I::Release(Box::new(inner_nnf(a)), Box::new(inner_nnf(b))),
        I::Eventually(c) => I::Eventually(Box::new(inner_nnf(c))),
        I::Always(c) => I::Always(Box::new(inner_nnf(c))),
    }
}

/// Positive normal form: no outer negation, inner negation only on atoms.
///
/// `¬[φ, m]` becomes `[¬φ, P + 1 − m]` where `P` is the counted population
/// (`n_robots`, or the group size).
pub fn to_pnf(f: &OuterFormula, n_robots: usize) -> OuterFormula {
    to_pnf_with_warnings(f, n_robots).0
}

pub fn to_pnf_with_warnings(f: &OuterFormula, n_robots: usize) -> (OuterFormula, Vec<PnfWarning>) {
    let mut warnings = Vec::new();
    let out = pos(f, n_robots, &mut warnings);
    (out, warnings)
}

fn pos(f: &OuterFormula, n: usize, w: &mut Vec<PnfWarning>) -> OuterFormula {
    use OuterFormula as O;
    match f {
        O::True | O::False => f.clone(),
        O::Tcp(t) => O::Tcp(TempCountProp {
            inner: inner_nnf(&t.inner),
            group: t.group.clone(),
            m: t.m,
        }),
        O::Not(c) => neg(c, n, w),
        O::And(cs) => O::And(cs.iter().map(|c| pos(c, n, w)).collect()),
        O::Or(cs) => O::Or(cs.iter().map(|c| pos(c, n, w)).collect()),
        O::Next(c) => O::Next(Box::new(pos(c, n, w))),
        O::Until(a, b) => O::Until(Box::new(pos(a, n, w)), Box::new(pos(b, n, w))),
        O::Release(a, b) => O::Release(Box::new(pos(a, n, w)), Box::new(pos(b, n, w))),
        O::Eventually(c) => O::Eventually(Box::new(pos(c, n, w))),
        O::Always(c) => O::Always(Box::new(pos(c, n, w))),
    }
}

fn neg(f: &OuterFormula, n: usize, w: &mut Vec<PnfWarning>) -> OuterFormula {
    use OuterFormula as O;
    match f {
        O::True => O::False,
        O::False => O::True,
        O::Tcp(t) => O::Tcp(dual_tcp(t, n, w)),
        O::Not(c) => pos(c, n, w),
        O::And(cs) => O::Or(cs.iter().map(|c| neg(c, n, w)).collect()),
        O::Or(cs) => O::And(cs.iter().map(|c| neg(c, n, w)).collect()),
        O::Next(c) => O::Next(Box::new(neg(c, n, w))),
        O::Until(a, b) => O::Release(Box::new(neg(a, n, w)), Box::new(neg(b, n, w))),
        O::Release(a, b) => O::Until(Box::new(neg(a, n, w)), Box::new(neg(b, n, w))),
        O::Eventually(c) => O::Always(Box::new(neg(c, n, w))),
        O::Always(c) => O::Eventually(Box::new(neg(c, n, w))),
    }
}

fn dual_tcp(t: &TempCountProp, n: usize, w: &mut Vec<PnfWarning>) -> TempCountProp {
    let pop = t.population(n) as i64;
    let raw = pop + 1 - t.m as i64;
    let m = if raw < 0 {
        w.push(PnfWarning {
            tcp: t.to_string(),
            message: format!(
                "threshold {} exceeds {} + 1, negation clamped to count 0",
                t.m, pop
            ),
        });
        0
    } else {
        raw as u32
    };
    TempCountProp {
        inner: negate_inner(&t.inner),
        group: t.group.clone(),
        m,
    }
}

/// Rewrites eventually and always into until and release in both layers.
///
/// With `robust` set, an outer `F [φ, m]` becomes `[¬φ, P − m + 1] U [φ, m]`
/// instead of `true U [φ, m]`.
pub fn expand_sugar(f: &OuterFormula, n_robots: usize, robust: bool) -> OuterFormula {
    use OuterFormula as O;
    let rec = |c: &OuterFormula| expand_sugar(c, n_robots, robust);
    match f {
        O::True | O::False => f.clone(),
        O::Tcp(t) => O::Tcp(TempCountProp {
            inner: expand_inner(&t.inner),
            group: t.group.clone(),
            m: t.m,
        }),
        O::Not(c) => O::Not(Box::new(rec(c))),
        O::And(cs) => O::And(cs.iter().map(rec).collect()),
        O::Or(cs) => O::Or(cs.iter().map(rec).collect()),
        O::Next(c) => O::Next(Box::new(rec(c))),
        O::Until(a, b) => O::Until(Box::new(rec(a)), Box::new(rec(b))),
        O::Release(a, b) => O::Release(Box::new(rec(a)), Box::new(rec(b))),
        O::Eventually(c) => match (robust, c.as_ref()) {
            (true, O::Tcp(t)) => {
                let inner = expand_inner(&t.inner);
                let pop = t.population(n_robots) as i64;
                let lhs = TempCountProp {
                    inner: expand_inner(&negate_inner(&t.inner)),
                    group: t.group.clone(),
                    m: (pop - t.m as i64 + 1).max(0) as u32,
                };
                let rhs = TempCountProp {
                    inner,
                    group: t.group.clone(),
                    m: t.m,
                };
                O::Until(Box::new(O::Tcp(lhs)), Box::new(O::Tcp(rhs)))
            }
            _ => O::Until(Box::new(O::True), Box::new(rec(c))),
        },
        O::Always(c) => O::Release(Box::new(O::False), Box::new(rec(c))),
    }
}

fn expand_inner(f: &InnerFormula) -> InnerFormula {
    use InnerFormula as I;
    match f {
        I::True | I::False | I::Atom(_) => f.clone(),
        I::Not(c) => I::Not(Box::new(expand_inner(c))),
        I::And(cs) => I::And(cs.iter().map(expand_inner).collect()),
        I::Or(cs) => I::Or(cs.iter().map(expand_inner).collect()),
        I::Next(c) => I::Next(Box::new(expand_inner(c))),
        I::Until(a, b) => I::Until(Box::new(expand_inner(a)), Box::new(expand_inner(b))),
        I::Release(a, b) => I::Release(Box::new(expand_inner(a)), Box::new(expand_inner(b))),
        I::Eventually(c) => I::Until(Box::new(I::True), Box::new(expand_inner(c))),
        I::Always(c) => I::Release(Box::new(I::False), Box::new(expand_inner(c))),
    }
}
