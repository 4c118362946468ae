//! Reference semantics, independent of the ILP encodings.
//!
//! Everything here works directly on lassos: inner formulas are decided by
//! fixpoint iteration over the lasso positions, and an execution of a
//! collection of lassos under a collective execution `K` is itself a lasso
//! over global time once every robot has entered its loop and the tail rule
//! (all counters advance together past the explicit horizon) applies.

mod brute;
mod robust;

use std::collections::HashMap;

use serde::Serialize;

use crate::formula::{InnerFormula, OuterFormula, TempCountProp};
use crate::trajectory::LabeledLasso;

pub use brute::{brute_force_synth, collision_violations, BruteForceError};
pub use robust::{check_robust, check_windowed, Counterexample, RobustBudget, Verdict, VerdictStatus};

/// Local counters of `N` robots as unit increments per global step.
///
/// `increments[t][n]` says whether robot `n` advances between global times
/// `t` and `t + 1`. Past `increments.len()` every robot advances at every
/// step, which keeps the counters divergent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CollectiveExecution {
    pub n_robots: usize,
    pub increments: Vec<Vec<bool>>,
}

impl CollectiveExecution {
    /// The globally synchronous execution `K*`.
    pub fn synchronous(n_robots: usize) -> Self {
        CollectiveExecution {
            n_robots,
            increments: Vec::new(),
        }
    }

    pub fn new(n_robots: usize, increments: Vec<Vec<bool>>) -> Self {
        assert!(increments.iter().all(|v| v.len() == n_robots));
        CollectiveExecution {
            n_robots,
            increments,
        }
    }

    /// Builds an execution from explicit counter vectors `K(0), K(1), …`.
    /// Returns `None` unless `K(0) = 0` and every step adds 0 or 1.
    pub fn from_counters(counters: &[Vec<usize>]) -> Option<Self> {
        let first = counters.first()?;
        let n = first.len();
        if first.iter().any(|&k| k != 0) {
            return None;
        }
        let mut inc = Vec::with_capacity(counters.len() - 1);
        for w in counters.windows(2) {
            if w[1].len() != n {
                return None;
            }
            let mut step = Vec::with_capacity(n);
            for (a, b) in w[0].iter().zip(&w[1]) {
                match b.checked_sub(*a) {
                    Some(0) => step.push(false),
                    Some(1) => step.push(true),
                    _ => return None,
                }
            }
            inc.push(step);
        }
        Some(CollectiveExecution::new(n, inc))
    }

    pub fn horizon(&self) -> usize {
        self.increments.len()
    }

    /// `K(t)`.
    pub fn counters(&self, t: usize) -> Vec<usize> {
        let h = self.horizon();
        let mut k = vec![0; self.n_robots];
        for step in &self.increments[..t.min(h)] {
            for (kn, &a) in k.iter_mut().zip(step) {
                *kn += usize::from(a);
            }
        }
        if t > h {
            for kn in &mut k {
                *kn += t - h;
            }
        }
        k
    }

    /// Largest spread `max kₙ − min kₙ` over all times.
    pub fn max_spread(&self) -> usize {
        (0..=self.horizon())
            .map(|t| {
                let k = self.counters(t);
                k.iter().max().unwrap_or(&0) - k.iter().min().unwrap_or(&0)
            })
            .max()
            .unwrap_or(0)
    }

    pub fn is_tau_bounded(&self, tau: usize) -> bool {
        self.max_spread() <= tau
    }
}

/// Anchor time `b_K(t) = minₙ kₙ(t)`.
pub fn anchor_map(k: &CollectiveExecution, t: usize) -> usize {
    k.counters(t).into_iter().min().unwrap_or(t)
}

/// Shape of a lasso: positions `0..len`, position `len` continues at `loop_start`.
#[derive(Debug, Clone, Copy)]
struct Shape {
    len: usize,
    loop_start: usize,
}

impl Shape {
    fn succ(self, p: usize) -> usize {
        if p + 1 < self.len {
            p + 1
        } else {
            self.loop_start
        }
    }

    fn position(self, t: usize) -> usize {
        if t < self.len {
            t
        } else {
            self.loop_start + (t - self.loop_start) % (self.len - self.loop_start)
        }
    }
}

fn next_vec(s: Shape, a: &[bool]) -> Vec<bool> {
    (0..s.len).map(|p| a[s.succ(p)]).collect()
}

/// Least fixpoint of `z = b ∨ (a ∧ X z)`.
fn until_vec(s: Shape, a: &[bool], b: &[bool]) -> Vec<bool> {
    let mut z = vec![false; s.len];
    loop {
        let mut changed = false;
        for p in (0..s.len).rev() {
            let v = b[p] || (a[p] && z[s.succ(p)]);
            if v != z[p] {
                z[p] = v;
                changed = true;
            }
        }
        if !changed {
            return z;
        }
    }
}

/// Greatest fixpoint of `z = b ∧ (a ∨ X z)`.
fn release_vec(s: Shape, a: &[bool], b: &[bool]) -> Vec<bool> {
    let mut z = vec![true; s.len];
    loop {
        let mut changed = false;
        for p in (0..s.len).rev() {
            let v = b[p] && (a[p] || z[s.succ(p)]);
            if v != z[p] {
                z[p] = v;
                changed = true;
            }
        }
        if !changed {
            return z;
        }
    }
}

fn zip_all(kids: Vec<Vec<bool>>, len: usize, and: bool) -> Vec<bool> {
    (0..len)
        .map(|p| {
            if and {
                kids.iter().all(|k| k[p])
            } else {
                kids.iter().any(|k| k[p])
            }
        })
        .collect()
}

/// Truth of `f` at every lasso position.
pub fn inner_truth(lasso: &LabeledLasso, f: &InnerFormula) -> Vec<bool> {
    use InnerFormula as I;
    let s = Shape {
        len: lasso.len(),
        loop_start: lasso.loop_start,
    };
    let rec = |c: &InnerFormula| inner_truth(lasso, c);
    match f {
        I::True => vec![true; s.len],
        I::False => vec![false; s.len],
        I::Atom(a) => lasso.labels.iter().map(|l| l.contains(a)).collect(),
        I::Not(c) => rec(c).into_iter().map(|b| !b).collect(),
        I::And(cs) => zip_all(cs.iter().map(rec).collect(), s.len, true),
        I::Or(cs) => zip_all(cs.iter().map(rec).collect(), s.len, false),
        I::Next(c) => next_vec(s, &rec(c)),
        I::Until(a, b) => until_vec(s, &rec(a), &rec(b)),
        I::Release(a, b) => release_vec(s, &rec(a), &rec(b)),
        I::Eventually(c) => until_vec(s, &vec![true; s.len], &rec(c)),
        I::Always(c) => release_vec(s, &vec![false; s.len], &rec(c)),
    }
}

/// `(σ, t) ⊨ φ` on the ω-expansion of the lasso.
pub fn eval_inner(lasso: &LabeledLasso, t: usize, f: &InnerFormula) -> bool {
    inner_truth(lasso, f)[lasso.position(t)]
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Evaluates outer formulas over executions of a fixed collection.
///
/// Inner truth vectors depend only on the collection, so they are cached
/// across executions.
pub struct Evaluator<'a> {
    pi: &'a [LabeledLasso],
    inner: HashMap<(InnerFormula, usize), Vec<bool>>,
}

/// Outer truth over global time, as a lasso.
pub struct GlobalTruth {
    values: Vec<bool>,
    shape: Shape,
}

impl GlobalTruth {
    pub fn at(&self, t: usize) -> bool {
        self.values[self.shape.position(t)]
    }
}

impl<'a> Evaluator<'a> {
    pub fn new(pi: &'a [LabeledLasso]) -> Self {
        Evaluator {
            pi,
            inner: HashMap::new(),
        }
    }

    pub fn n_robots(&self) -> usize {
        self.pi.len()
    }

    fn inner_vec(&mut self, f: &InnerFormula, n: usize) -> &Vec<bool> {
        let pi = self.pi;
        self.inner
            .entry((f.clone(), n))
            .or_insert_with(|| inner_truth(&pi[n], f))
    }

    /// `[φ, m]` with robots at the given local times.
    pub fn tcp_at(&mut self, tcp: &TempCountProp, local: &[usize]) -> bool {
        let robots = tcp.counted_robots(self.n_robots());
        let mut count = 0u32;
        for n in robots {
            let p = self.pi[n].position(local[n]);
            if self.inner_vec(&tcp.inner, n)[p] {
                count += 1;
            }
        }
        count >= tcp.m
    }

    /// Truth of `mu` at every global time of `(Π, K)`.
    pub fn outer_truth(&mut self, k: &CollectiveExecution, mu: &OuterFormula) -> GlobalTruth {
        let hk = k.horizon();
        let at_h = k.counters(hk);
        let catch_up = self
            .pi
            .iter()
            .zip(&at_h)
            .map(|(p, &kn)| p.loop_start.saturating_sub(kn))
            .max()
            .unwrap_or(0);
        let t1 = hk + catch_up;
        let period = self
            .pi
            .iter()
            .map(|p| p.len() - p.loop_start)
            .fold(1, |acc, p| acc / gcd(acc, p) * p);
        let shape = Shape {
            len: t1 + period,
            loop_start: t1,
        };
        let local: Vec<Vec<usize>> = (0..shape.len).map(|t| k.counters(t)).collect();
        let mut memo = HashMap::new();
        let values = self.outer_vec(shape, &local, mu, &mut memo);
        GlobalTruth { values, shape }
    }

    fn outer_vec(
        &mut self,
        s: Shape,
        local: &[Vec<usize>],
        f: &OuterFormula,
        memo: &mut HashMap<OuterFormula, Vec<bool>>,
    ) -> Vec<bool> {
        if let Some(v) = memo.get(f) {
            return v.clone();
        }
        use OuterFormula as O;
        let v = match f {
            O::True => vec![true; s.len],
            O::False => vec![false; s.len],
            O::Tcp(t) => (0..s.len).map(|p| self.tcp_at(t, &local[p])).collect(),
            O::Not(c) => self
                .outer_vec(s, local, c, memo)
                .into_iter()
                .map(|b| !b)
                .collect(),
            O::And(cs) | O::Or(cs) => {
                let kids = cs.iter().map(|c| self.outer_vec(s, local, c, memo)).collect();
                zip_all(kids, s.len, matches!(f, O::And(_)))
            }
            O::Next(c) => next_vec(s, &self.outer_vec(s, local, c, memo)),
            O::Until(a, b) => {
                let (va, vb) = (self.outer_vec(s, local, a, memo), self.outer_vec(s, local, b, memo));
                until_vec(s, &va, &vb)
            }
            O::Release(a, b) => {
                let (va, vb) = (self.outer_vec(s, local, a, memo), self.outer_vec(s, local, b, memo));
                release_vec(s, &va, &vb)
            }
            O::Eventually(c) => until_vec(s, &vec![true; s.len], &self.outer_vec(s, local, c, memo)),
            O::Always(c) => release_vec(s, &vec![false; s.len], &self.outer_vec(s, local, c, memo)),
        };
        memo.insert(f.clone(), v.clone());
        v
    }
}

/// `(Π, K), t ⊨ μ`.
pub fn eval_outer(pi: &[LabeledLasso], k: &CollectiveExecution, t: usize, mu: &OuterFormula) -> bool {
    Evaluator::new(pi).outer_truth(k, mu).at(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use std::collections::BTreeSet;

    fn lasso(words: &[&[&str]], l: usize) -> LabeledLasso {
        LabeledLasso {
            labels: words
                .iter()
                .map(|w| w.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>())
                .collect(),
            loop_start: l,
        }
    }

    fn inner(text: &str) -> InnerFormula {
        match parse_formula(&format!("[{text}, 1]")).unwrap() {
            OuterFormula::Tcp(t) => t.inner,
            _ => unreachable!(),
        }
    }

    #[test]
    fn always_on_constant_trace() {
        let s = lasso(&[&["a"], &["a"], &["a"]], 0);
        assert!(eval_inner(&s, 0, &inner("G a")));
    }

    #[test]
    fn eventually_inside_the_loop() {
        let s = lasso(&[&[], &[], &["a"]], 2);
        assert!(eval_inner(&s, 0, &inner("F a")));
        assert!(eval_inner(&s, 0, &inner("G F a")));
        let s = lasso(&[&[], &["a"], &[]], 2);
        assert!(eval_inner(&s, 0, &inner("F a")));
        assert!(!eval_inner(&s, 0, &inner("G F a")));
    }

    #[test]
    fn next_wraps_against_unrolling() {
        let s = lasso(&[&[], &["a"], &[], &["a"], &["b"]], 2);
        let f = inner("X a");
        // explicit ω-expansion over three periods
        let word: Vec<bool> = (0..5 + 3 * 3)
            .map(|t| s.labels[s.position(t)].contains("a"))
            .collect();
        for t in 0..12 {
            assert_eq!(eval_inner(&s, t, &f), word[t + 1], "t = {t}");
        }
    }

    #[test]
    fn anchors_from_counters() {
        let k = CollectiveExecution::from_counters(&[vec![0, 0, 0], vec![1, 1, 1], vec![1, 2, 1]])
            .unwrap();
        assert_eq!(anchor_map(&k, 1), 1);
        assert_eq!(anchor_map(&k, 2), 1);
        let sync = CollectiveExecution::synchronous(3);
        for t in 0..6 {
            assert_eq!(anchor_map(&sync, t), t);
        }
        assert!(CollectiveExecution::from_counters(&[vec![0, 0], vec![2, 0]]).is_none());
    }

    #[test]
    fn counting_each_versus_together() {
        // both robots visit a infinitely often, never at the same time
        let pi = vec![lasso(&[&["a"], &[]], 0), lasso(&[&[], &["a"]], 0)];
        let k = CollectiveExecution::synchronous(2);
        assert!(eval_outer(&pi, &k, 0, &parse_formula("[G F a, 2]").unwrap()));
        assert!(!eval_outer(&pi, &k, 0, &parse_formula("G F [a, 2]").unwrap()));
        assert!(eval_outer(&pi, &k, 0, &OuterFormula::True));
    }
}
