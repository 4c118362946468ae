//! Encodings robust to τ-bounded asynchrony.
//!
//! A robot lagging by up to `τ` steps is covered by requiring inner formulas
//! over a window: `R[φ][n][t]` holds when `Z[φ][n][t..=t+τ]` all hold. Counting
//! propositions then count `R` instead of `Z`, with special handling for
//! `m = 1`, pooled disjunctions, and until. With `τ = 0` every construction
//! here falls back to the synchronous one.

use super::formula::FormulaEncoder;
use super::sync::{build_discrete, DiscreteOptions};
use super::{Bit, Ctx, EncodeError, Encoded};
use crate::formula::{InnerFormula, OuterFormula, RobotGroup, TempCountProp};
use crate::ilp::{LinExpr, Sense, VarId};
use crate::system::MultiRobotInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RobustOptions {
    pub tau: usize,
    /// Use the pooled threshold for disjunctions of counting propositions;
    /// when off, disjunctions are plain ORs of the robust disjuncts.
    pub pooled_disjunction: bool,
}

impl RobustOptions {
    pub fn new(tau: usize) -> Self {
        RobustOptions {
            tau,
            pooled_disjunction: true,
        }
    }
}

pub fn build_robust_problem(
    inst: &MultiRobotInstance,
    mu: &OuterFormula,
    h: usize,
    tau: usize,
) -> Result<Encoded, EncodeError> {
    build_robust_problem_with(inst, mu, h, &RobustOptions::new(tau))
}

pub fn build_robust_problem_with(
    inst: &MultiRobotInstance,
    mu: &OuterFormula,
    h: usize,
    opts: &RobustOptions,
) -> Result<Encoded, EncodeError> {
    build_discrete(
        inst,
        mu,
        h,
        &DiscreteOptions {
            tau: opts.tau,
            pooled: opts.pooled_disjunction,
        },
    )
}

/// One-hot states `w(h+k)`, `k = 1..=τ`, equal to `w(l + k mod (h − l))`
/// under `z_loop[l]`.
pub(crate) fn extend_states(ctx: &mut Ctx, w: &mut [Vec<Vec<VarId>>], tau: usize) {
    let h = ctx.h;
    for (n, wn) in w.iter_mut().enumerate() {
        let ns = wn[0].len();
        for k in 1..=tau {
            let t = h + k;
            let row: Vec<VarId> = (0..ns)
                .map(|s| ctx.model.binary(format!("w_{n}_{t}_{s}")))
                .collect();
            ctx.model
                .constrain(LinExpr::sum(row.clone()), Sense::Eq, 1.0);
            for l in 0..h {
                let src = l + k % (h - l);
                for s in 0..ns {
                    ctx.tie(Bit::Var(row[s]), Bit::Var(wn[src][s]), l);
                }
            }
            wn.push(row);
        }
    }
}

impl Ctx {
    /// `y[t] = c[t] ∧ (b[t] ∨ y[t+1])` where `c` is the robust `μ₁ ∨ μ₂`.
    pub fn robust_until_seq(&mut self, c: &[Bit], b: &[Bit], base: &str) -> Vec<Bit> {
        let h = self.h;
        let mut aux = vec![Bit::Const(false); h];
        aux[h - 1] = b[h - 1];
        for t in (0..h - 1).rev() {
            let d = self.or(&[b[t], aux[t + 1]], None);
            aux[t] = self.and(&[c[t], d], Some(format!("{base}x_t{t}")));
        }
        let mut y = vec![Bit::Const(false); h];
        let wrap = self.loop_select(&aux, None);
        let d = self.or(&[b[h - 1], wrap], None);
        y[h - 1] = self.and(&[c[h - 1], d], Some(format!("{base}_t{}", h - 1)));
        for t in (0..h - 1).rev() {
            let d = self.or(&[b[t], y[t + 1]], None);
            y[t] = self.and(&[c[t], d], Some(format!("{base}_t{t}")));
        }
        y
    }
}

impl FormulaEncoder<'_> {
    /// Robust tcp. `m > 1`: `y ⇔ Σ R ≥ m`. `m = 1`: `y = ỹ ∨ ȳ` with
    /// `ỹ ⇔ Σ R ≥ 1` and `ȳ ⇔ Σ Z[t] ≥ N`, the latter only when every robot
    /// is counted.
    pub(crate) fn robust_tcp_seq(
        &mut self,
        ctx: &mut Ctx,
        tcp: &TempCountProp,
        base: &str,
    ) -> Result<Vec<Bit>, EncodeError> {
        let h = ctx.h;
        let robots = self.counted(tcp);
        let pop = robots.len() as i64;
        let m = i64::from(tcp.m);
        if m == 0 {
            return Ok(vec![Bit::Const(true); h]);
        }
        if m > pop {
            return Ok(vec![Bit::Const(false); h]);
        }
        let big_m = pop as f64 + 1.0;
        let rs = robots
            .iter()
            .map(|&n| self.robust_seq(ctx, &tcp.inner, n))
            .collect::<Result<Vec<_>, _>>()?;
        // the all-robots shortcut needs the anchoring robot to be counted,
        // which a strict subgroup cannot promise
        if m > 1 || robots.len() < self.n_robots {
            return Ok((0..h)
                .map(|t| {
                    let bits: Vec<Bit> = rs.iter().map(|r| r[t]).collect();
                    ctx.indicator(&bits, m, big_m, format!("{base}_t{t}"))
                })
                .collect());
        }
        let zs = robots
            .iter()
            .map(|&n| self.inner_seq(ctx, &tcp.inner, n))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((0..h)
            .map(|t| {
                let rb: Vec<Bit> = rs.iter().map(|r| r[t]).collect();
                let zb: Vec<Bit> = zs.iter().map(|z| z[t]).collect();
                let some = ctx.indicator(&rb, 1, big_m, format!("{base}w_t{t}"));
                let all = ctx.indicator(&zb, pop, big_m, format!("{base}a_t{t}"));
                ctx.or(&[some, all], Some(format!("{base}_t{t}")))
            })
            .collect())
    }

    /// Robust disjunction. Counting propositions over the same robot group
    /// are pooled: besides their own values, the disjunction holds when
    /// `Σ R[⋁ φᵢ] ≥ 1 + Σ (mᵢ − 1)`.
    pub(crate) fn robust_or_seq(
        &mut self,
        ctx: &mut Ctx,
        cs: &[OuterFormula],
        base: &str,
    ) -> Result<Vec<Bit>, EncodeError> {
        let h = ctx.h;
        let mut cols: Vec<Vec<Bit>> = Vec::new();
        // tcps first, then the rest, so the pooled block is contiguous
        let (tcps, others): (Vec<&OuterFormula>, Vec<&OuterFormula>) =
            cs.iter().partition(|c| matches!(c, OuterFormula::Tcp(_)));
        for c in tcps.iter().chain(others.iter()) {
            cols.push(self.outer_seq(ctx, c)?);
        }
        if self.pooled {
            let mut groups: Vec<(Option<RobotGroup>, Vec<&TempCountProp>)> = Vec::new();
            for c in &tcps {
                let OuterFormula::Tcp(t) = c else { unreachable!() };
                match groups.iter_mut().find(|(g, _)| *g == t.group) {
                    Some((_, v)) => v.push(t),
                    None => groups.push((t.group.clone(), vec![t])),
                }
            }
            for (k, (_, block)) in groups.into_iter().enumerate() {
                if block.len() < 2 {
                    continue;
                }
                let inner = InnerFormula::Or(block.iter().map(|t| t.inner.clone()).collect());
                let thr = 1 + block.iter().map(|t| i64::from(t.m) - 1).sum::<i64>();
                let robots = self.counted(block[0]);
                let big_m = robots.len() as f64 + 1.0;
                let rs = robots
                    .iter()
                    .map(|&n| self.robust_seq(ctx, &inner, n))
                    .collect::<Result<Vec<_>, _>>()?;
                let pooled: Vec<Bit> = (0..h)
                    .map(|t| {
                        let bits: Vec<Bit> = rs.iter().map(|r| r[t]).collect();
                        ctx.indicator(&bits, thr, big_m, format!("{base}p{k}_t{t}"))
                    })
                    .collect();
                cols.push(pooled);
            }
        }
        Ok((0..h)
            .map(|t| {
                let bits: Vec<Bit> = cols.iter().map(|c| c[t]).collect();
                ctx.or(&bits, Some(format!("{base}_t{t}")))
            })
            .collect())
    }

    pub(crate) fn robust_until_seq(
        &mut self,
        ctx: &mut Ctx,
        a: &OuterFormula,
        b: &OuterFormula,
        base: &str,
    ) -> Result<Vec<Bit>, EncodeError> {
        let either = OuterFormula::Or(vec![a.clone(), b.clone()]);
        let c = self.outer_seq(ctx, &either)?;
        let sb = self.outer_seq(ctx, b)?;
        Ok(ctx.robust_until_seq(&c, &sb, base))
    }
}
