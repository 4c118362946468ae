//! Per-robot encoding over one-hot state variables.

use std::collections::HashMap;

use super::formula::{Counting, FormulaEncoder, Literals};
use super::robust::extend_states;
use super::{Bit, Ctx, EncodeError, Encoded, VariableLayout};
use crate::formula::{expand_sugar, to_pnf_with_warnings, OuterFormula};
use crate::ilp::{LinExpr, Sense, Solution, VarId};
use crate::system::{CollisionMode, MultiRobotInstance};
use crate::trajectory::LassoTrajectory;

pub(crate) struct DiscreteOptions {
    pub tau: usize,
    pub pooled: bool,
}

/// Synchronous encoding: every robot moves once per time step.
pub fn build_sync_problem(
    inst: &MultiRobotInstance,
    mu: &OuterFormula,
    h: usize,
) -> Result<Encoded, EncodeError> {
    build_discrete(inst, mu, h, &DiscreteOptions { tau: 0, pooled: true })
}

struct StateLits<'a> {
    inst: &'a MultiRobotInstance,
    w: &'a [Vec<Vec<VarId>>],
    labels: HashMap<(usize, String), Vec<u8>>,
}

impl Literals for StateLits<'_> {
    fn literal(
        &mut self,
        ctx: &mut Ctx,
        n: usize,
        t: usize,
        atom: &str,
        negated: bool,
    ) -> Result<Option<Bit>, EncodeError> {
        if t >= self.w[n].len() {
            return Ok(None);
        }
        let key = (n, atom.to_string());
        if !self.labels.contains_key(&key) {
            let v = self.inst.systems[n]
                .label_vector(atom)
                .map_err(|_| EncodeError::UnknownAtom(atom.to_string()))?;
            self.labels.insert(key.clone(), v);
        }
        let lv = &self.labels[&key];
        let want = u8::from(!negated);
        let e = LinExpr::sum(
            lv.iter()
                .enumerate()
                .filter(|&(_, &b)| b == want)
                .map(|(s, _)| self.w[n][t][s]),
        );
        let sign = if negated { "n" } else { "" };
        Ok(Some(ctx.bit_of(e, format!("lit_{sign}{atom}_r{n}_t{t}"))))
    }
}

pub(crate) fn build_discrete(
    inst: &MultiRobotInstance,
    mu: &OuterFormula,
    h: usize,
    opts: &DiscreteOptions,
) -> Result<Encoded, EncodeError> {
    let n_robots = inst.n_robots();
    let diags = inst.validate();
    if !diags.is_empty() {
        return Err(crate::system::SystemError::Invalid(diags.join("; ")).into());
    }
    let ap = inst.ap();
    for a in mu.atoms() {
        if !ap.contains(&a) {
            return Err(EncodeError::UnknownAtom(a));
        }
    }
    for t in mu.tcps() {
        if let Some(g) = &t.group {
            if let Some(&r) = g.robots.iter().find(|&&r| r >= n_robots) {
                return Err(EncodeError::BadGroup(
                    g.name.clone(),
                    format!("robot {r} does not exist"),
                ));
            }
        }
    }
    let tau = opts.tau;
    let mut warnings = Vec::new();
    let (pnf, pw) = to_pnf_with_warnings(mu, n_robots);
    if has_outer_not(mu) {
        warnings.push("formula normalized to positive normal form".to_string());
    }
    warnings.extend(pw.into_iter().map(|w| format!("{}: {}", w.tcp, w.message)));
    let f = expand_sugar(&pnf, n_robots, tau > 0);

    let mut ctx = Ctx::new(h, tau)?;
    ctx.model.set_section("dynamics");
    let mut w: Vec<Vec<Vec<VarId>>> = Vec::with_capacity(n_robots);
    for (n, ts) in inst.systems.iter().enumerate() {
        let ns = ts.n_states();
        let rows: Vec<Vec<VarId>> = (0..=h)
            .map(|t| {
                (0..ns)
                    .map(|s| ctx.model.binary(format!("w_{n}_{t}_{s}")))
                    .collect()
            })
            .collect();
        let init = inst.initial_states[n];
        for (s, &v) in rows[0].iter().enumerate() {
            let val = if s == init { 1.0 } else { 0.0 };
            ctx.model.constrain(LinExpr::var(v), Sense::Eq, val);
        }
        for row in &rows[1..] {
            ctx.model.constrain(LinExpr::sum(row.clone()), Sense::Eq, 1.0);
        }
        let preds: Vec<Vec<usize>> = (0..ns).map(|j| ts.predecessors(j)).collect();
        for t in 0..h {
            for j in 0..ns {
                let mut e = LinExpr::var(rows[t + 1][j]);
                for &i in &preds[j] {
                    e.add_term(rows[t][i], -1.0);
                }
                ctx.model.constrain(e, Sense::Le, 0.0);
            }
        }
        w.push(rows);
    }

    ctx.add_loop_vars();
    for wn in &w {
        for l in 0..h {
            for s in 0..wn[h].len() {
                ctx.tie(Bit::Var(wn[h][s]), Bit::Var(wn[l][s]), l);
            }
        }
    }

    if tau > 0 {
        ctx.model.set_section("robust");
        extend_states(&mut ctx, &mut w, tau);
    }

    if inst.collision != CollisionMode::Off && n_robots > 1 {
        ctx.model.set_section("collision");
        collisions(&mut ctx, inst, &w, tau)?;
    }

    let mut lits = StateLits {
        inst,
        w: &w,
        labels: HashMap::new(),
    };
    let mut enc = FormulaEncoder::new(Counting::PerRobot(&mut lits), n_robots, tau);
    enc.pooled = opts.pooled;
    ctx.model.set_section("formula");
    let root_seq = enc.outer_seq(&mut ctx, &f)?;
    let root = root_seq[0];
    ctx.model.set_section("root");
    ctx.require(root);
    warnings.extend(enc.warnings.iter().cloned());

    let mut layout = VariableLayout {
        h,
        tau,
        z_loop: ctx.z_loop.clone(),
        root: Some(root),
        ..Default::default()
    };
    enc.fill_layout(&mut layout);
    drop(enc);
    layout.w = w;
    Ok(Encoded {
        model: ctx.model,
        layout,
        warnings,
    })
}

fn has_outer_not(f: &OuterFormula) -> bool {
    use OuterFormula as O;
    match f {
        O::True | O::False | O::Tcp(_) => false,
        O::Not(_) => true,
        O::And(cs) | O::Or(cs) => cs.iter().any(has_outer_not),
        O::Next(c) | O::Eventually(c) | O::Always(c) => has_outer_not(c),
        O::Until(a, b) | O::Release(a, b) => has_outer_not(a) || has_outer_not(b),
    }
}

/// Mutual exclusion within every window of `τ` steps, optionally forbidding
/// swaps along edges present in both directions.
fn collisions(
    ctx: &mut Ctx,
    inst: &MultiRobotInstance,
    w: &[Vec<Vec<VarId>>],
    tau: usize,
) -> Result<(), EncodeError> {
    let ns = inst.systems[0].n_states();
    if inst.systems.iter().any(|s| s.n_states() != ns) {
        return Err(EncodeError::CollisionStateSpace);
    }
    let n_robots = w.len();
    let last = w[0].len() - 1;
    if tau == 0 {
        for t in 0..=last {
            for s in 0..ns {
                let e = LinExpr::sum((0..n_robots).map(|n| w[n][t][s]));
                ctx.model.constrain(e, Sense::Le, 1.0);
            }
        }
    } else {
        for a in 0..n_robots {
            for b in a + 1..n_robots {
                for t in 0..=last {
                    let lo = t.saturating_sub(tau);
                    let hi = (t + tau).min(last);
                    for t2 in lo..=hi {
                        for s in 0..ns {
                            let e = LinExpr::sum([w[a][t][s], w[b][t2][s]]);
                            ctx.model.constrain(e, Sense::Le, 1.0);
                        }
                    }
                }
            }
        }
    }
    if inst.collision == CollisionMode::MutualExclusionPlusSwap {
        let ts = &inst.systems[0];
        let swaps: Vec<(usize, usize)> = ts
            .transitions
            .iter()
            .copied()
            .filter(|&(i, j)| i != j && ts.has_edge(j, i))
            .collect();
        for a in 0..n_robots {
            for b in a + 1..n_robots {
                for t in 0..last {
                    for &(i, j) in &swaps {
                        let e = LinExpr::sum([w[a][t][i], w[a][t + 1][j], w[b][t][j], w[b][t + 1][i]]);
                        ctx.model.constrain(e, Sense::Le, 3.0);
                    }
                }
            }
        }
    }
    Ok(())
}

/// Reads each robot's lasso from a feasible solution.
pub fn extract_trajectories(
    layout: &VariableLayout,
    sol: &Solution,
) -> Result<Vec<LassoTrajectory>, EncodeError> {
    if !sol.is_feasible() {
        return Err(EncodeError::NotFeasible);
    }
    let l = layout.loop_start(sol)?;
    layout
        .w
        .iter()
        .enumerate()
        .map(|(n, wn)| {
            let states = (0..=layout.h)
                .map(|t| {
                    let on: Vec<usize> = (0..wn[t].len()).filter(|&s| sol.is_true(wn[t][s])).collect();
                    match on.as_slice() {
                        [s] => Ok(*s),
                        _ => Err(EncodeError::Malformed(format!(
                            "robot {n} occupies {on:?} at time {t}"
                        ))),
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(LassoTrajectory::new(states, l))
        })
        .collect()
}
