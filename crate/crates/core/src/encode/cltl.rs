//! Aggregate encoding over robot counts for teams of identical robots.
//!
//! The model tracks `w_i(t)`, the number of robots in state `i`, and the
//! integer flows `u_ij(t)` along edges. Its size does not depend on the
//! number of robots. Individual trajectories are recovered afterwards by
//! splitting the flows.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::formula::{propositional, Counting, Counts, FormulaEncoder};
use super::{Ctx, EncodeError, Encoded, VariableLayout};
use crate::formula::{expand_sugar, to_pnf_with_warnings, OuterFormula};
use crate::ilp::{LinExpr, Sense, Solution, VarId, VarKind};
use crate::system::AggregateSystem;
use crate::trajectory::LassoTrajectory;

/// How robots sharing a state are matched to outgoing flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Lower robot index takes the lower target state.
    #[default]
    LowestIndex,
    /// Robots in a state are shuffled with this seed first.
    Seeded(u64),
}

pub fn build_cltl_problem(
    agg: &AggregateSystem,
    mu: &OuterFormula,
    h: usize,
) -> Result<Encoded, EncodeError> {
    let ts = &agg.shared;
    let n = agg.n_robots;
    let big_n = n as f64;
    for a in mu.atoms() {
        if !ts.ap.contains(&a) {
            return Err(EncodeError::UnknownAtom(a));
        }
    }
    // reject early, pointing at the first inner formula with a temporal operator
    for t in mu.tcps() {
        propositional(&t.inner, &Default::default())?;
    }
    let (pnf, pw) = to_pnf_with_warnings(mu, n);
    let mut warnings: Vec<String> = pw
        .into_iter()
        .map(|w| format!("{}: {}", w.tcp, w.message))
        .collect();
    let f = expand_sugar(&pnf, n, false);

    let mut ctx = Ctx::new(h, 0)?;
    ctx.model.set_section("dynamics");
    let ns = ts.n_states();
    let mut w: Vec<Vec<VarId>> = Vec::with_capacity(h + 1);
    for t in 0..=h {
        let row = (0..ns)
            .map(|i| {
                ctx.model
                    .add_var(VarKind::Integer { lo: 0, hi: n as i64 }, format!("w_{t}_{i}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        w.push(row);
    }
    for (i, &c) in agg.w0.iter().enumerate() {
        ctx.model
            .constrain(LinExpr::var(w[0][i]), Sense::Eq, f64::from(c));
    }
    let mut edges = ts.transitions.clone();
    edges.sort_unstable();
    edges.dedup();
    let mut flows: Vec<Vec<((usize, usize), VarId)>> = Vec::with_capacity(h);
    for t in 0..h {
        let row = edges
            .iter()
            .map(|&(i, j)| {
                ctx.model
                    .add_var(VarKind::Integer { lo: 0, hi: n as i64 }, format!("u_{t}_{i}_{j}"))
                    .map(|v| ((i, j), v))
            })
            .collect::<Result<Vec<_>, _>>()?;
        for i in 0..ns {
            let mut out = LinExpr::new();
            out.add_term(w[t][i], -1.0);
            let mut inflow = LinExpr::new();
            inflow.add_term(w[t + 1][i], -1.0);
            for &((a, b), v) in &row {
                if a == i {
                    out.add_term(v, 1.0);
                }
                if b == i {
                    inflow.add_term(v, 1.0);
                }
            }
            ctx.model.constrain(out, Sense::Eq, 0.0);
            ctx.model.constrain(inflow, Sense::Eq, 0.0);
        }
        flows.push(row);
    }

    ctx.add_loop_vars();
    for l in 0..h {
        let z = ctx.z_loop[l];
        for i in 0..ns {
            let e = LinExpr::var(w[h][i])
                .with_term(w[l][i], -1.0)
                .with_term(z, big_n);
            ctx.model.constrain(e, Sense::Le, big_n);
            let e = LinExpr::var(w[l][i])
                .with_term(w[h][i], -1.0)
                .with_term(z, big_n);
            ctx.model.constrain(e, Sense::Le, big_n);
        }
    }

    let counts = Counts {
        w: w.clone(),
        labels: ts.labels.clone(),
    };
    let mut enc = FormulaEncoder::new(Counting::Aggregate(counts), n, 0);
    ctx.model.set_section("formula");
    let root_seq = enc.outer_seq(&mut ctx, &f)?;
    let root = root_seq[0];
    ctx.model.set_section("root");
    ctx.require(root);
    warnings.extend(enc.warnings.iter().cloned());

    let mut layout = VariableLayout {
        h,
        tau: 0,
        z_loop: ctx.z_loop.clone(),
        counts: w,
        flows,
        root: Some(root),
        ..Default::default()
    };
    enc.fill_layout(&mut layout);
    Ok(Encoded {
        model: ctx.model,
        layout,
        warnings,
    })
}

pub fn decompose_flows(
    agg: &AggregateSystem,
    layout: &VariableLayout,
    sol: &Solution,
) -> Result<Vec<LassoTrajectory>, EncodeError> {
    decompose_flows_with(agg, layout, sol, None, TieBreak::LowestIndex)
}

/// Splits integer flows into per-robot lassos sharing the loop start `l`.
///
/// The counts at `h` and `l` agree, but the robots there may be permuted.
/// A robot then follows the segments of the robots it replaces until the
/// permutation cycle closes, so its lasso may be longer than `h + 1`.
/// `initial` assigns robots to start states; by default robots fill the
/// states of `w0` in index order.
pub fn decompose_flows_with(
    agg: &AggregateSystem,
    layout: &VariableLayout,
    sol: &Solution,
    initial: Option<&[usize]>,
    tie: TieBreak,
) -> Result<Vec<LassoTrajectory>, EncodeError> {
    if !sol.is_feasible() {
        return Err(EncodeError::NotFeasible);
    }
    let h = layout.h;
    let ns = agg.shared.n_states();
    let n = agg.n_robots;
    let l = layout.loop_start(sol)?;
    let count = |v: VarId| -> u32 { sol.value(v).round().max(0.0) as u32 };

    let start: Vec<usize> = match initial {
        Some(s) => s.to_vec(),
        None => agg
            .w0
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(i, c as usize))
            .collect(),
    };
    if start.len() != n {
        return Err(EncodeError::Decomposition(format!(
            "{} initial states for {n} robots",
            start.len()
        )));
    }
    let mut rng = match tie {
        TieBreak::Seeded(s) => Some(ChaCha8Rng::seed_from_u64(s)),
        TieBreak::LowestIndex => None,
    };

    let mut pos: Vec<Vec<usize>> = vec![start];
    for t in 0..h {
        let cur = &pos[t];
        let mut next = vec![usize::MAX; n];
        for i in 0..ns {
            let mut here: Vec<usize> = (0..n).filter(|&r| cur[r] == i).collect();
            if here.len() as u32 != count(layout.counts[t][i]) {
                return Err(EncodeError::Decomposition(format!(
                    "{} robots in state {i} at time {t}, counts say {}",
                    here.len(),
                    count(layout.counts[t][i])
                )));
            }
            if let Some(r) = rng.as_mut() {
                here.shuffle(r);
            }
            let targets: Vec<usize> = layout.flows[t]
                .iter()
                .filter(|((a, _), _)| *a == i)
                .flat_map(|&((_, b), v)| std::iter::repeat_n(b, count(v) as usize))
                .collect();
            if targets.len() != here.len() {
                return Err(EncodeError::Decomposition(format!(
                    "flow out of state {i} at time {t} is {}, not {}",
                    targets.len(),
                    here.len()
                )));
            }
            for (&r, &j) in here.iter().zip(&targets) {
                next[r] = j;
            }
        }
        pos.push(next);
    }

    // sigma[r]: the robot whose position at l robot r occupies at h
    let mut sigma = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for r in 0..n {
        if pos[h][r] == pos[l][r] {
            sigma[r] = r;
            taken[r] = true;
        }
    }
    for r in 0..n {
        if sigma[r] != usize::MAX {
            continue;
        }
        let k = (0..n)
            .find(|&k| !taken[k] && pos[l][k] == pos[h][r])
            .ok_or_else(|| {
                EncodeError::Decomposition(format!("counts at {h} and {l} differ"))
            })?;
        sigma[r] = k;
        taken[k] = true;
    }

    Ok((0..n)
        .map(|r| {
            let mut states: Vec<usize> = (0..l).map(|t| pos[t][r]).collect();
            let mut k = r;
            loop {
                states.extend((l..h).map(|t| pos[t][k]));
                k = sigma[k];
                if k == r {
                    break;
                }
            }
            states.push(pos[l][r]);
            LassoTrajectory::new(states, l)
        })
        .collect())
}
