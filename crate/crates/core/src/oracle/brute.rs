//! Exhaustive synthesis over joint lassos, for cross-checking encoders on
//! tiny instances.

use super::{check_robust, CollectiveExecution, Evaluator, RobustBudget};
use crate::formula::OuterFormula;
use crate::system::{CollisionMode, MultiRobotInstance, TransitionSystem};
use crate::trajectory::{LabeledLasso, LassoTrajectory};

#[derive(Debug, thiserror::Error)]
pub enum BruteForceError {
    #[error("joint search space of about {0:.3e} lassos exceeds the guard of {1:.0e}")]
    SpaceTooLarge(f64, f64),
}

/// All lassos of robot `ts` from `init` with horizon `h` and loop start `l`.
fn lassos(ts: &TransitionSystem, init: usize, h: usize, l: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut path = vec![init];
    fn go(
        ts: &TransitionSystem,
        h: usize,
        l: usize,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if path.len() == h + 1 {
            if path[h] == path[l] {
                out.push(path.clone());
            }
            return;
        }
        let last = *path.last().expect("path starts with init");
        for s in ts.successors(last) {
            path.push(s);
            go(ts, h, l, path, out);
            path.pop();
        }
    }
    go(ts, h, l, &mut path, &mut out);
    out
}

/// First joint lasso, in lexicographic order of `(l, π₁, …, π_N)`, that
/// satisfies `μ` (τ-robustly when `τ > 0`, with exhaustive execution search
/// up to `h + τ + 1`) and respects the instance's collision mode.
///
/// All robots share the horizon `h` and the loop start `l`, which is the
/// search space of the encoders.
pub fn brute_force_synth(
    inst: &MultiRobotInstance,
    mu: &OuterFormula,
    h: usize,
    tau: usize,
) -> Result<Option<Vec<LassoTrajectory>>, BruteForceError> {
    const GUARD: f64 = 1e7;
    let n = inst.n_robots();
    let space: f64 = inst
        .systems
        .iter()
        .map(|ts| (ts.n_states() as f64).powi(h as i32 + 1))
        .product();
    if space > GUARD {
        return Err(BruteForceError::SpaceTooLarge(space, GUARD));
    }
    for l in 0..h {
        let per: Vec<Vec<Vec<usize>>> = (0..n)
            .map(|r| lassos(&inst.systems[r], inst.initial_states[r], h, l))
            .collect();
        if per.iter().any(|p| p.is_empty()) {
            continue;
        }
        let labeled: Vec<Vec<LabeledLasso>> = per
            .iter()
            .enumerate()
            .map(|(r, ps)| {
                ps.iter()
                    .map(|p| LassoTrajectory::new(p.clone(), l).labeled(&inst.systems[r]))
                    .collect()
            })
            .collect();
        let mut idx = vec![0usize; n];
        loop {
            let trajs: Vec<LassoTrajectory> = (0..n)
                .map(|r| LassoTrajectory::new(per[r][idx[r]].clone(), l))
                .collect();
            if collision_violations(&trajs, inst.collision, tau).is_empty() {
                let pi: Vec<LabeledLasso> = (0..n).map(|r| labeled[r][idx[r]].clone()).collect();
                let ok = if tau == 0 {
                    Evaluator::new(&pi)
                        .outer_truth(&CollectiveExecution::synchronous(n), mu)
                        .at(0)
                } else {
                    check_robust(&pi, mu, tau, &RobustBudget::exhaustive(h + tau + 1)).is_verified()
                };
                if ok {
                    return Ok(Some(trajs));
                }
            }
            // odometer, last robot fastest
            let mut r = n;
            let done = loop {
                if r == 0 {
                    break true;
                }
                r -= 1;
                idx[r] += 1;
                if idx[r] < per[r].len() {
                    break false;
                }
                idx[r] = 0;
            };
            if done {
                break;
            }
        }
    }
    Ok(None)
}

/// Collisions among lassos under `mode`, one message each.
///
/// Mutual exclusion compares every pair of robots at global times at most
/// `τ` apart; swaps are checked on simultaneous steps. Times are unrolled
/// far enough to cover one common period after every robot is in its loop.
pub fn collision_violations(
    trajs: &[LassoTrajectory],
    mode: CollisionMode,
    tau: usize,
) -> Vec<String> {
    let mut out = Vec::new();
    if mode == CollisionMode::Off || trajs.len() < 2 {
        return out;
    }
    let period = trajs
        .iter()
        .map(|t| t.period())
        .fold(1usize, |acc, p| acc / super::gcd(acc, p) * p);
    let reach = trajs.iter().map(|t| t.horizon()).max().unwrap_or(0) + period + tau;
    for a in 0..trajs.len() {
        for b in a + 1..trajs.len() {
            for t in 0..=reach {
                for t2 in t.saturating_sub(tau)..=(t + tau).min(reach) {
                    let (sa, sb) = (trajs[a].state_at(t), trajs[b].state_at(t2));
                    if sa == sb {
                        out.push(format!(
                            "robots {a} and {b} share state {sa} at times {t} and {t2}"
                        ));
                    }
                }
            }
            if mode == CollisionMode::MutualExclusionPlusSwap {
                for t in 0..reach {
                    let (a0, a1) = (trajs[a].state_at(t), trajs[a].state_at(t + 1));
                    let (b0, b1) = (trajs[b].state_at(t), trajs[b].state_at(t + 1));
                    if a0 != a1 && a0 == b1 && a1 == b0 {
                        out.push(format!(
                            "robots {a} and {b} swap states {a0} and {a1} at step {t}"
                        ));
                    }
                }
            }
        }
    }
    out
}
