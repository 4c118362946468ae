//! Falsification search for τ-robust satisfaction.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{anchor_map, CollectiveExecution, Evaluator};
use crate::formula::OuterFormula;
use crate::trajectory::LabeledLasso;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RobustBudget {
    /// Explicit execution horizon; later steps follow the tail rule.
    pub max_t: usize,
    /// Enumerate exhaustively when `N · max_t` is at most this.
    pub enumeration_cap: usize,
    /// Executions drawn when enumeration is too large.
    pub samples: usize,
    pub seed: u64,
}

impl RobustBudget {
    pub fn new(max_t: usize) -> Self {
        RobustBudget {
            max_t,
            enumeration_cap: 16,
            samples: 2000,
            seed: 0,
        }
    }

    /// Always enumerate, whatever the size.
    pub fn exhaustive(max_t: usize) -> Self {
        RobustBudget {
            enumeration_cap: usize::MAX,
            ..Self::new(max_t)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    VerifiedBounded,
    Falsified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub execution: CollectiveExecution,
    /// Global time with anchor 0 at which the formula fails.
    pub time: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub counterexample: Option<Counterexample>,
    pub executions: u64,
    pub exhaustive: bool,
}

impl Verdict {
    pub fn is_verified(&self) -> bool {
        self.status == VerdictStatus::VerifiedBounded
    }
}

/// Searches for a τ-bounded execution `K` and a time `T` with `b_K(T) = 0`
/// at which `(Π, K), T ⊭ μ`.
///
/// Exhaustive mode visits increment vectors in ascending bitmask order
/// (robot 0 is the lowest bit), so the counterexample returned is the
/// least one in that order. A verified verdict only covers the executions
/// searched.
pub fn check_robust(
    pi: &[LabeledLasso],
    mu: &OuterFormula,
    tau: usize,
    budget: &RobustBudget,
) -> Verdict {
    let n = pi.len();
    let mut ev = Evaluator::new(pi);
    let exhaustive = n.saturating_mul(budget.max_t) <= budget.enumeration_cap;
    let mut count = 0u64;
    let mut found = None;
    if exhaustive {
        let mut inc: Vec<Vec<bool>> = Vec::with_capacity(budget.max_t);
        let mut k = vec![0usize; n];
        dfs(&mut ev, mu, tau, budget.max_t, &mut inc, &mut k, &mut count, &mut found);
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        for _ in 0..budget.samples {
            let mut k = vec![0usize; n];
            let mut inc = Vec::with_capacity(budget.max_t);
            for _ in 0..budget.max_t {
                let valid: Vec<u64> = (0..1u64 << n)
                    .filter(|&m| spread_after(&k, m) <= tau)
                    .collect();
                let m = valid[rng.random_range(0..valid.len())];
                apply(&mut k, m, 1);
                inc.push(mask_vec(m, n));
            }
            count += 1;
            if let Some(c) = violation(&mut ev, mu, CollectiveExecution::new(n, inc)) {
                found = Some(c);
                break;
            }
        }
    }
    Verdict {
        status: if found.is_some() {
            VerdictStatus::Falsified
        } else {
            VerdictStatus::VerifiedBounded
        },
        counterexample: found,
        executions: count,
        exhaustive,
    }
}

fn mask_vec(m: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| m >> i & 1 == 1).collect()
}

fn apply(k: &mut [usize], m: u64, sign: isize) {
    for (i, kn) in k.iter_mut().enumerate() {
        if m >> i & 1 == 1 {
            *kn = kn.wrapping_add_signed(sign);
        }
    }
}

fn spread_after(k: &[usize], m: u64) -> usize {
    let it = k.iter().enumerate().map(|(i, &kn)| kn + (m >> i & 1) as usize);
    let (lo, hi) = it.fold((usize::MAX, 0), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi - lo
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    ev: &mut Evaluator,
    mu: &OuterFormula,
    tau: usize,
    depth: usize,
    inc: &mut Vec<Vec<bool>>,
    k: &mut Vec<usize>,
    count: &mut u64,
    found: &mut Option<super::Counterexample>,
) {
    if found.is_some() {
        return;
    }
    let n = k.len();
    if inc.len() == depth {
        *count += 1;
        *found = violation(ev, mu, CollectiveExecution::new(n, inc.clone()));
        return;
    }
    for m in 0..1u64 << n {
        if spread_after(k, m) > tau {
            continue;
        }
        apply(k, m, 1);
        inc.push(mask_vec(m, n));
        dfs(ev, mu, tau, depth, inc, k, count, found);
        inc.pop();
        apply(k, m, -1);
        if found.is_some() {
            return;
        }
    }
}

fn violation(ev: &mut Evaluator, mu: &OuterFormula, k: CollectiveExecution) -> Option<Counterexample> {
    let truth = ev.outer_truth(&k, mu);
    (0..=k.horizon())
        .take_while(|&t| anchor_map(&k, t) == 0)
        .find(|&t| !truth.at(t))
        .map(|time| Counterexample { execution: k, time })
}

/// Robust check at anchor 0 for formulas without outer temporal operators,
/// over local times `kₙ ∈ [0, τ]` with some robot at 0. Returns the first
/// violating local-time vector.
pub fn check_windowed(pi: &[LabeledLasso], mu: &OuterFormula, tau: usize) -> Option<Vec<usize>> {
    let n = pi.len();
    let mut ev = Evaluator::new(pi);
    let total = (tau + 1).checked_pow(n as u32)?;
    for code in 0..total {
        let mut c = code;
        let local: Vec<usize> = (0..n)
            .map(|_| {
                let d = c % (tau + 1);
                c /= tau + 1;
                d
            })
            .collect();
        if !local.contains(&0) {
            continue;
        }
        if !static_eval(&mut ev, mu, &local) {
            return Some(local);
        }
    }
    None
}

fn static_eval(ev: &mut Evaluator, f: &OuterFormula, local: &[usize]) -> bool {
    use OuterFormula as O;
    match f {
        O::True => true,
        O::False => false,
        O::Tcp(t) => ev.tcp_at(t, local),
        O::Not(c) => !static_eval(ev, c, local),
        O::And(cs) => cs.iter().all(|c| static_eval(ev, c, local)),
        O::Or(cs) => cs.iter().any(|c| static_eval(ev, c, local)),
        _ => panic!("windowed check needs a formula without outer temporal operators"),
    }
}
