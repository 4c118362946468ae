//! Robots with affine dynamics and polytope propositions.
//!
//! Only the inputs are decision variables. States are affine expressions in
//! the inputs obtained by unrolling the dynamics, so the box bounds on states
//! become linear constraints. An atom `a` holds at `w` when every row of
//! `H_a w ≤ h_a` holds; each row gets a binary with a strict-side margin `ε`.

use serde::{Deserialize, Serialize};

use super::formula::{Counting, FormulaEncoder, Literals};
use super::{Bit, Ctx, EncodeError, Encoded, VariableLayout};
use crate::formula::{expand_sugar, to_pnf_with_warnings, OuterFormula};
use crate::ilp::{LinExpr, Sense, Solution, VarKind};
use crate::system::{ContinuousSystem, Polytope};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousOptions {
    /// Margin separating "row holds" from "row fails".
    pub eps: f64,
}

impl Default for ContinuousOptions {
    fn default() -> Self {
        ContinuousOptions { eps: 1e-6 }
    }
}

/// Solved inputs and the states they produce, `t = 0..=h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousTrajectory {
    pub inputs: Vec<Vec<f64>>,
    pub states: Vec<Vec<f64>>,
    pub loop_start: usize,
}

impl ContinuousTrajectory {
    /// Label sets at positions `0..h`, with polytope membership up to `tol`.
    pub fn labels(
        &self,
        sys: &ContinuousSystem,
        tol: f64,
    ) -> Vec<std::collections::BTreeSet<String>> {
        let h = self.states.len() - 1;
        self.states[..h]
            .iter()
            .map(|w| {
                sys.atoms
                    .iter()
                    .filter(|(_, p)| contains_tol(p, w, tol))
                    .map(|(a, _)| a.clone())
                    .collect()
            })
            .collect()
    }
}

pub(crate) fn contains_tol(p: &Polytope, w: &[f64], tol: f64) -> bool {
    p.h_mat
        .iter()
        .zip(&p.h_vec)
        .all(|(row, &b)| crate::system::dot(row, w) <= b + tol)
}

struct PolyLits<'a> {
    sys: &'a ContinuousSystem,
    states: &'a [Vec<Vec<LinExpr>>],
    eps: f64,
}

impl Literals for PolyLits<'_> {
    fn literal(
        &mut self,
        ctx: &mut Ctx,
        n: usize,
        t: usize,
        atom: &str,
        negated: bool,
    ) -> Result<Option<Bit>, EncodeError> {
        if t >= ctx.h {
            return Ok(None);
        }
        let poly = self
            .sys
            .atoms
            .get(atom)
            .ok_or_else(|| EncodeError::UnknownAtom(atom.to_string()))?;
        let bounds = &self.sys.robots[n].state_bounds;
        let w = &self.states[n][t];
        let mut rows = Vec::with_capacity(poly.h_vec.len());
        for (i, (hrow, &hv)) in poly.h_mat.iter().zip(&poly.h_vec).enumerate() {
            // max and min of H_i w − h_i over the state box
            let (mut hi, mut lo) = (-hv, -hv);
            for (k, &c) in hrow.iter().enumerate() {
                let (a, b) = (c * bounds[k].0, c * bounds[k].1);
                hi += a.max(b);
                lo += a.min(b);
            }
            if hi <= 0.0 {
                continue;
            }
            if lo > 0.0 {
                rows.clear();
                rows.push(Bit::Const(false));
                break;
            }
            let big_m = hi.abs().max(lo.abs()) + 1.0;
            let e_var = ctx.model.binary(format!("e_{atom}_r{n}_t{t}_{i}"));
            let mut g = LinExpr::new();
            for (k, &c) in hrow.iter().enumerate() {
                if c != 0.0 {
                    g.add_expr(&w[k], c);
                }
            }
            g.add_constant(-hv);
            ctx.model
                .constrain(g.clone().with_term(e_var, big_m), Sense::Le, big_m);
            ctx.model
                .constrain(g.with_term(e_var, big_m), Sense::Ge, self.eps);
            rows.push(Bit::Var(e_var));
        }
        let inside = ctx.and(&rows, Some(format!("in_{atom}_r{n}_t{t}")));
        Ok(Some(if negated {
            ctx.not(inside, Some(format!("out_{atom}_r{n}_t{t}")))
        } else {
            inside
        }))
    }
}

pub fn build_cont_problem(
    sys: &ContinuousSystem,
    mu: &OuterFormula,
    h: usize,
    tau: usize,
    opts: &ContinuousOptions,
) -> Result<Encoded, EncodeError> {
    let diags = sys.validate();
    if !diags.is_empty() {
        return Err(EncodeError::Continuous(diags.join("; ")));
    }
    for a in mu.atoms() {
        if !sys.atoms.contains_key(&a) {
            return Err(EncodeError::UnknownAtom(a));
        }
    }
    let n_robots = sys.n_robots();
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
    let (pnf, pw) = to_pnf_with_warnings(mu, n_robots);
    let mut warnings: Vec<String> = pw
        .into_iter()
        .map(|w| format!("{}: {}", w.tcp, w.message))
        .collect();
    let f = expand_sugar(&pnf, n_robots, tau > 0);

    let mut ctx = Ctx::new(h, tau)?;
    ctx.model.set_section("dynamics");
    let mut inputs = Vec::with_capacity(n_robots);
    let mut states: Vec<Vec<Vec<LinExpr>>> = Vec::with_capacity(n_robots);
    for (n, r) in sys.robots.iter().enumerate() {
        let mut un = Vec::with_capacity(h);
        let mut wn: Vec<Vec<LinExpr>> = vec![r.init.iter().map(|&x| LinExpr::constant(x)).collect()];
        for t in 0..h {
            let u = r
                .input_bounds
                .iter()
                .enumerate()
                .map(|(k, &(lo, hi))| {
                    ctx.model
                        .add_var(VarKind::Continuous { lo, hi }, format!("u_{n}_{t}_{k}"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let prev = &wn[t];
            let next: Vec<LinExpr> = (0..r.state_dim())
                .map(|i| {
                    let mut e = LinExpr::constant(r.c.get(i).copied().unwrap_or(0.0));
                    for (j, &fij) in r.f[i].iter().enumerate() {
                        if fij != 0.0 {
                            e.add_expr(&prev[j], fij);
                        }
                    }
                    for (k, &gik) in r.g[i].iter().enumerate() {
                        if gik != 0.0 {
                            e.add_term(u[k], gik);
                        }
                    }
                    e
                })
                .collect();
            for (i, e) in next.iter().enumerate() {
                let (lo, hi) = r.state_bounds[i];
                let (elo, ehi) = ctx.model.expr_bounds(e);
                if ehi > hi {
                    ctx.model.constrain(e.clone(), Sense::Le, hi);
                }
                if elo < lo {
                    ctx.model.constrain(e.clone(), Sense::Ge, lo);
                }
            }
            wn.push(next);
            un.push(u);
        }
        inputs.push(un);
        states.push(wn);
    }

    ctx.add_loop_vars();
    for (n, r) in sys.robots.iter().enumerate() {
        let wn = &states[n];
        for l in 0..h {
            let z = ctx.z_loop[l];
            for (d, &(lo, hi)) in r.state_bounds.iter().enumerate() {
                let m = hi - lo;
                let mut diff = wn[h][d].clone();
                diff.add_expr(&wn[l][d], -1.0);
                // |w_h − w_l| ≤ M (1 − z)
                ctx.model
                    .constrain(diff.clone().with_term(z, m), Sense::Le, m);
                ctx.model
                    .constrain(diff.with_term(z, -m), Sense::Ge, -m);
            }
        }
    }

    let mut lits = PolyLits {
        sys,
        states: &states,
        eps: opts.eps,
    };
    let mut enc = FormulaEncoder::new(Counting::PerRobot(&mut lits), n_robots, tau);
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
    layout.inputs = inputs;
    Ok(Encoded {
        model: ctx.model,
        layout,
        warnings,
    })
}

/// Replays the dynamics under the solved inputs.
pub fn extract_continuous(
    sys: &ContinuousSystem,
    layout: &VariableLayout,
    sol: &Solution,
) -> Result<Vec<ContinuousTrajectory>, EncodeError> {
    if !sol.is_feasible() {
        return Err(EncodeError::NotFeasible);
    }
    let l = layout.loop_start(sol)?;
    Ok(sys
        .robots
        .iter()
        .zip(&layout.inputs)
        .map(|(r, un)| {
            let inputs: Vec<Vec<f64>> = un
                .iter()
                .map(|u| u.iter().map(|&v| sol.value(v)).collect())
                .collect();
            let mut states = vec![r.init.clone()];
            for u in &inputs {
                let next = r.step(states.last().expect("nonempty"), u);
                states.push(next);
            }
            ContinuousTrajectory {
                inputs,
                states,
                loop_start: l,
            }
        })
        .collect())
}
