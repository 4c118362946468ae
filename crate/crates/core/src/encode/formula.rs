//! Shared recursion over inner and outer formulas.

use std::collections::{BTreeMap, HashMap};

use super::{Bit, Ctx, EncodeError, VariableLayout};
use crate::formula::{InnerFormula, OuterFormula, TempCountProp};
use crate::ilp::{LinExpr, VarId};

/// Supplies atomic literals for per-robot encodings.
pub(crate) trait Literals {
    /// Value of `atom` (or its negation) for robot `n` at position `t`, or
    /// `None` when position `t ≥ h` should be tied to the loop instead.
    fn literal(
        &mut self,
        ctx: &mut Ctx,
        n: usize,
        t: usize,
        atom: &str,
        negated: bool,
    ) -> Result<Option<Bit>, EncodeError>;
}

/// Aggregate count expressions: `count(φ, t) = Σ_{i ⊨ φ} w_i(t)`.
pub(crate) struct Counts {
    pub w: Vec<Vec<VarId>>,
    pub labels: Vec<std::collections::BTreeSet<String>>,
}

pub(crate) enum Counting<'a> {
    PerRobot(&'a mut dyn Literals),
    Aggregate(Counts),
}

pub(crate) struct FormulaEncoder<'a> {
    pub counting: Counting<'a>,
    pub n_robots: usize,
    pub tau: usize,
    pub pooled: bool,
    inner: HashMap<(InnerFormula, usize), Vec<Bit>>,
    robust: HashMap<(InnerFormula, usize), Vec<Bit>>,
    outer: HashMap<OuterFormula, Vec<Bit>>,
    ids: HashMap<String, usize>,
    pub warnings: Vec<String>,
}

impl<'a> FormulaEncoder<'a> {
    pub fn new(counting: Counting<'a>, n_robots: usize, tau: usize) -> Self {
        FormulaEncoder {
            counting,
            n_robots,
            tau,
            pooled: true,
            inner: HashMap::new(),
            robust: HashMap::new(),
            outer: HashMap::new(),
            ids: HashMap::new(),
            warnings: Vec::new(),
        }
    }

    /// Stable short id for a subformula, used in variable names.
    fn id(&mut self, key: String) -> usize {
        let next = self.ids.len();
        *self.ids.entry(key).or_insert(next)
    }

    /// `Z[φ][n][t]` for `t < h + ext`.
    pub fn inner_seq(
        &mut self,
        ctx: &mut Ctx,
        f: &InnerFormula,
        n: usize,
    ) -> Result<Vec<Bit>, EncodeError> {
        if let Some(s) = self.inner.get(&(f.clone(), n)) {
            return Ok(s.clone());
        }
        use InnerFormula as I;
        let h = ctx.h;
        let len = h + ctx.ext;
        let id = self.id(format!("i:{f}"));
        let base = format!("z{id}_r{n}");
        let seq = match f {
            I::True => vec![Bit::Const(true); len],
            I::False => vec![Bit::Const(false); len],
            I::Atom(_) | I::Not(_) => {
                let (atom, neg) = match f {
                    I::Atom(a) => (a.as_str(), false),
                    I::Not(c) => match c.as_ref() {
                        I::Atom(a) => (a.as_str(), true),
                        _ => unreachable!("inner formulas are put in NNF before encoding"),
                    },
                    _ => unreachable!(),
                };
                let Counting::PerRobot(lits) = &mut self.counting else {
                    unreachable!("aggregate counting never asks for inner sequences")
                };
                let mut s = Vec::with_capacity(len);
                for t in 0..len {
                    match lits.literal(ctx, n, t, atom, neg)? {
                        Some(b) => s.push(b),
                        None => break,
                    }
                }
                if s.len() < len {
                    s.truncate(h);
                    ctx.tie_ext(&mut s, &base);
                }
                s
            }
            I::And(cs) | I::Or(cs) => {
                let kids = cs
                    .iter()
                    .map(|c| self.inner_seq(ctx, c, n))
                    .collect::<Result<Vec<_>, _>>()?;
                let is_and = matches!(f, I::And(_));
                (0..len)
                    .map(|t| {
                        let bits: Vec<Bit> = kids.iter().map(|k| k[t]).collect();
                        let name = Some(format!("{base}_t{t}"));
                        if is_and {
                            ctx.and(&bits, name)
                        } else {
                            ctx.or(&bits, name)
                        }
                    })
                    .collect()
            }
            I::Next(c) => {
                if self.tau > 0 {
                    return Err(EncodeError::InnerNextRobust(f.to_string()));
                }
                let k = self.inner_seq(ctx, c, n)?;
                let mut s = ctx.next_seq(&k, &base);
                ctx.tie_ext(&mut s, &base);
                s
            }
            I::Until(a, b) | I::Release(a, b) => {
                let sa = self.inner_seq(ctx, a, n)?;
                let sb = self.inner_seq(ctx, b, n)?;
                let mut s = if matches!(f, I::Until(..)) {
                    ctx.until_seq(&sa, &sb, &base)
                } else {
                    ctx.release_seq(&sa, &sb, &base)
                };
                ctx.tie_ext(&mut s, &base);
                s
            }
            I::Eventually(c) => {
                let g = I::Until(Box::new(I::True), c.clone());
                self.inner_seq(ctx, &g, n)?
            }
            I::Always(c) => {
                let g = I::Release(Box::new(I::False), c.clone());
                self.inner_seq(ctx, &g, n)?
            }
        };
        self.inner.insert((f.clone(), n), seq.clone());
        Ok(seq)
    }

    /// `R[φ][n][t] = ⋀_{k=0..τ} Z[φ][n][t+k]` for `t < h`.
    pub fn robust_seq(
        &mut self,
        ctx: &mut Ctx,
        f: &InnerFormula,
        n: usize,
    ) -> Result<Vec<Bit>, EncodeError> {
        if let Some(s) = self.robust.get(&(f.clone(), n)) {
            return Ok(s.clone());
        }
        let z = self.inner_seq(ctx, f, n)?;
        let id = self.id(format!("i:{f}"));
        let r: Vec<Bit> = (0..ctx.h)
            .map(|t| ctx.and(&z[t..=t + self.tau], Some(format!("r{id}_r{n}_t{t}"))))
            .collect();
        self.robust.insert((f.clone(), n), r.clone());
        Ok(r)
    }

    pub fn counted(&self, tcp: &TempCountProp) -> Vec<usize> {
        tcp.counted_robots(self.n_robots)
    }

    /// Synchronous tcp: `y ⇔ Σ_{n∈S} Z[φ][n][t] ≥ m`, `M = |S| + 1`.
    pub fn tcp_seq(&mut self, ctx: &mut Ctx, tcp: &TempCountProp, base: &str) -> Result<Vec<Bit>, EncodeError> {
        let h = ctx.h;
        let m = i64::from(tcp.m);
        if let Counting::Aggregate(counts) = &self.counting {
            let pop = self.n_robots;
            if let Some(g) = &tcp.group {
                let mut rs = g.robots.clone();
                rs.sort_unstable();
                rs.dedup();
                if rs.len() != pop {
                    return Err(EncodeError::BadGroup(
                        g.name.clone(),
                        "the aggregate encoding cannot count a robot subset".into(),
                    ));
                }
            }
            let holds: Vec<bool> = counts
                .labels
                .iter()
                .map(|l| propositional(&tcp.inner, l))
                .collect::<Result<_, _>>()?;
            let big_m = pop as f64 + 1.0;
            let ws = counts.w.clone();
            return Ok((0..h)
                .map(|t| {
                    let mut e = LinExpr::new();
                    for (i, &hold) in holds.iter().enumerate() {
                        if hold {
                            e.add_term(ws[t][i], 1.0);
                        }
                    }
                    ctx.indicator_expr(e, m, big_m, format!("{base}_t{t}"))
                })
                .collect());
        }
        let robots = self.counted(tcp);
        let big_m = robots.len() as f64 + 1.0;
        let zs = robots
            .iter()
            .map(|&n| self.inner_seq(ctx, &tcp.inner, n))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((0..h)
            .map(|t| {
                let bits: Vec<Bit> = zs.iter().map(|z| z[t]).collect();
                ctx.indicator(&bits, m, big_m, format!("{base}_t{t}"))
            })
            .collect())
    }

    /// `Y[μ][t]` for `t < h`. `μ` must be in PNF.
    pub fn outer_seq(&mut self, ctx: &mut Ctx, f: &OuterFormula) -> Result<Vec<Bit>, EncodeError> {
        if let Some(s) = self.outer.get(f) {
            return Ok(s.clone());
        }
        use OuterFormula as O;
        let h = ctx.h;
        let id = self.id(format!("o:{f}"));
        let base = format!("y{id}");
        let seq = match f {
            O::True => vec![Bit::Const(true); h],
            O::False => vec![Bit::Const(false); h],
            O::Tcp(t) => {
                if self.tau > 0 {
                    self.robust_tcp_seq(ctx, t, &base)?
                } else {
                    self.tcp_seq(ctx, t, &base)?
                }
            }
            O::Not(_) => return Err(EncodeError::NotPnf(f.to_string())),
            O::And(cs) => {
                let kids = cs
                    .iter()
                    .map(|c| self.outer_seq(ctx, c))
                    .collect::<Result<Vec<_>, _>>()?;
                (0..h)
                    .map(|t| {
                        let bits: Vec<Bit> = kids.iter().map(|k| k[t]).collect();
                        ctx.and(&bits, Some(format!("{base}_t{t}")))
                    })
                    .collect()
            }
            O::Or(cs) => {
                if self.tau > 0 {
                    self.robust_or_seq(ctx, cs, &base)?
                } else {
                    let kids = cs
                        .iter()
                        .map(|c| self.outer_seq(ctx, c))
                        .collect::<Result<Vec<_>, _>>()?;
                    (0..h)
                        .map(|t| {
                            let bits: Vec<Bit> = kids.iter().map(|k| k[t]).collect();
                            ctx.or(&bits, Some(format!("{base}_t{t}")))
                        })
                        .collect()
                }
            }
            O::Next(c) => {
                if self.tau > 0 {
                    self.warnings.push(format!(
                        "outer next under asynchrony is encoded as a plain shift: {f}"
                    ));
                }
                let k = self.outer_seq(ctx, c)?;
                ctx.next_seq(&k, &base)
            }
            O::Until(a, b) => {
                if self.tau > 0 {
                    self.robust_until_seq(ctx, a, b, &base)?
                } else {
                    let sa = self.outer_seq(ctx, a)?;
                    let sb = self.outer_seq(ctx, b)?;
                    ctx.until_seq(&sa, &sb, &base)
                }
            }
            O::Release(a, b) => {
                let sa = self.outer_seq(ctx, a)?;
                let sb = self.outer_seq(ctx, b)?;
                ctx.release_seq(&sa, &sb, &base)
            }
            O::Eventually(c) => {
                let g = O::Until(Box::new(O::True), c.clone());
                self.outer_seq(ctx, &g)?
            }
            O::Always(c) => {
                let g = O::Release(Box::new(O::False), c.clone());
                self.outer_seq(ctx, &g)?
            }
        };
        self.outer.insert(f.clone(), seq.clone());
        Ok(seq)
    }

    /// Copies the memo tables into `layout` under printable keys.
    pub fn fill_layout(&self, layout: &mut VariableLayout) {
        let mut inner = BTreeMap::new();
        for ((f, n), s) in &self.inner {
            inner.insert((f.to_string(), *n), s.clone());
        }
        let mut robust = BTreeMap::new();
        for ((f, n), s) in &self.robust {
            robust.insert((f.to_string(), *n), s.clone());
        }
        let mut outer = BTreeMap::new();
        for (f, s) in &self.outer {
            outer.insert(f.to_string(), s.clone());
        }
        layout.inner = inner;
        layout.robust = robust;
        layout.outer = outer;
    }
}

/// Truth of a temporal-free inner formula on one label set.
pub(crate) fn propositional(
    f: &InnerFormula,
    labels: &std::collections::BTreeSet<String>,
) -> Result<bool, EncodeError> {
    use InnerFormula as I;
    Ok(match f {
        I::True => true,
        I::False => false,
        I::Atom(a) => labels.contains(a),
        I::Not(c) => !propositional(c, labels)?,
        I::And(cs) => {
            let mut all = true;
            for c in cs {
                all &= propositional(c, labels)?;
            }
            all
        }
        I::Or(cs) => {
            let mut any = false;
            for c in cs {
                any |= propositional(c, labels)?;
            }
            any
        }
        _ => return Err(EncodeError::NotCltl(f.to_string())),
    })
}
