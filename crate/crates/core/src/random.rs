//! Seeded generators for systems, instances and formulas.
//!
//! Used by the randomized tests and the benchmark instances; all output is a
//! pure function of the seed.

use std::collections::BTreeSet;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{InnerFormula, OuterFormula, RobotGroup, TempCountProp};
use crate::system::{MultiRobotInstance, TransitionSystem};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Erdős–Rényi digraph on `n` states with edge probability `p`, plus a
/// Hamiltonian cycle `0 → 1 → … → 0` so the graph is strongly connected.
/// Self-loops are drawn like any other edge.
pub fn erdos_renyi(r: &mut ChaCha8Rng, n: usize, p: f64, ap: &[&str]) -> TransitionSystem {
    let mut edges = Vec::new();
    for i in 0..n {
        edges.push((i, (i + 1) % n));
        for j in 0..n {
            if r.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    labeled(r, n, edges, ap, 0.4)
}

/// Random system where every state has a self-loop and `extra` random edges.
pub fn random_ts(r: &mut ChaCha8Rng, n: usize, extra: usize, ap: &[&str], label_p: f64) -> TransitionSystem {
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    for _ in 0..extra {
        edges.push((r.random_range(0..n), r.random_range(0..n)));
    }
    labeled(r, n, edges, ap, label_p)
}

fn labeled(
    r: &mut ChaCha8Rng,
    n: usize,
    edges: Vec<(usize, usize)>,
    ap: &[&str],
    label_p: f64,
) -> TransitionSystem {
    let labels: Vec<BTreeSet<String>> = (0..n)
        .map(|_| {
            ap.iter()
                .filter(|_| r.random::<f64>() < label_p)
                .map(|a| a.to_string())
                .collect()
        })
        .collect();
    TransitionSystem::new(
        names("v", n),
        edges,
        ap.iter().map(|a| a.to_string()).collect(),
        labels,
    )
}

/// Identical robots on one random system with random initial states.
pub fn random_instance(r: &mut ChaCha8Rng, n_robots: usize, n_states: usize, ap: &[&str]) -> MultiRobotInstance {
    let extra = r.random_range(0..=n_states * 2);
    let ts = random_ts(r, n_states, extra, ap, 0.4);
    let init = (0..n_robots).map(|_| r.random_range(0..n_states)).collect();
    MultiRobotInstance::homogeneous(ts, init)
}

/// Shape controls for random formulas.
#[derive(Debug, Clone)]
pub struct FormulaShape {
    pub outer_depth: usize,
    pub inner_depth: usize,
    /// Allow next in inner formulas.
    pub inner_next: bool,
    /// Allow next in outer formulas.
    pub outer_next: bool,
    /// Allow outer negation.
    pub negation: bool,
    /// Inner formulas are bare atoms or negated atoms.
    pub atoms_only: bool,
    /// Probability that a tcp counts a random robot group.
    pub group_p: f64,
}

impl Default for FormulaShape {
    fn default() -> Self {
        FormulaShape {
            outer_depth: 3,
            inner_depth: 2,
            inner_next: true,
            outer_next: true,
            negation: true,
            atoms_only: false,
            group_p: 0.0,
        }
    }
}

pub fn random_inner(r: &mut ChaCha8Rng, ap: &[&str], depth: usize, shape: &FormulaShape) -> InnerFormula {
    use InnerFormula as I;
    let atom = |r: &mut ChaCha8Rng| I::atom(ap[r.random_range(0..ap.len())]);
    if depth == 0 || shape.atoms_only {
        let a = atom(r);
        return if r.random::<f64>() < 0.25 { a.not() } else { a };
    }
    let sub = |r: &mut ChaCha8Rng| random_inner(r, ap, depth - 1, shape);
    let pick = r.random_range(0..if shape.inner_next { 9 } else { 8 });
    match pick {
        0 => atom(r),
        1 => sub(r).not(),
        2 => I::And(vec![sub(r), sub(r)]),
        3 => I::Or(vec![sub(r), sub(r)]),
        4 => sub(r).until(sub(r)),
        5 => sub(r).release(sub(r)),
        6 => sub(r).eventually(),
        7 => sub(r).always(),
        _ => sub(r).next(),
    }
}

pub fn random_tcp(r: &mut ChaCha8Rng, ap: &[&str], n_robots: usize, shape: &FormulaShape) -> TempCountProp {
    let depth = r.random_range(0..=shape.inner_depth);
    let inner = random_inner(r, ap, depth, shape);
    let group = if n_robots > 1 && r.random::<f64>() < shape.group_p {
        let robots: Vec<usize> = (0..n_robots).filter(|_| r.random::<bool>()).collect();
        if robots.is_empty() {
            None
        } else {
            Some(RobotGroup {
                name: "g".into(),
                robots,
            })
        }
    } else {
        None
    };
    let pop = group.as_ref().map_or(n_robots, |g| g.robots.len());
    // mostly satisfiable thresholds, occasionally 0 or pop + 1
    let m = match r.random_range(0..10) {
        0 => 0,
        1 => pop + 1,
        _ => r.random_range(1..=pop.max(1)),
    } as u32;
    TempCountProp { inner, group, m }
}

pub fn random_outer(r: &mut ChaCha8Rng, ap: &[&str], n_robots: usize, depth: usize, shape: &FormulaShape) -> OuterFormula {
    use OuterFormula as O;
    if depth == 0 {
        return O::Tcp(random_tcp(r, ap, n_robots, shape));
    }
    let sub = |r: &mut ChaCha8Rng| random_outer(r, ap, n_robots, depth - 1, shape);
    let mut ops = vec![0, 1, 2, 3, 4, 5, 6];
    if shape.outer_next {
        ops.push(7);
    }
    if shape.negation {
        ops.push(8);
    }
    match ops[r.random_range(0..ops.len())] {
        0 => O::Tcp(random_tcp(r, ap, n_robots, shape)),
        1 => O::And(vec![sub(r), sub(r)]),
        2 => O::Or(vec![sub(r), sub(r)]),
        3 => sub(r).until(sub(r)),
        4 => sub(r).release(sub(r)),
        5 => sub(r).eventually(),
        6 => sub(r).always(),
        7 => sub(r).next(),
        _ => sub(r).not(),
    }
}

/// The team benchmark: an Erdős–Rényi system whose states are split into
/// halves labeled `s1` and `s2`, with three goal sets `g1`, `g2`, `g3` of
/// `n / 10` random states each (at least one).
pub fn team_system(r: &mut ChaCha8Rng, n: usize, p: f64) -> TransitionSystem {
    let mut ts = erdos_renyi(r, n, p, &[]);
    let goal = (n / 10).max(1);
    ts.ap = ["s1", "s2", "g1", "g2", "g3"].iter().map(|a| a.to_string()).collect();
    for (i, l) in ts.labels.iter_mut().enumerate() {
        l.insert(if i < n / 2 { "s1" } else { "s2" }.to_string());
    }
    for g in ["g1", "g2", "g3"] {
        let mut picked = BTreeSet::new();
        while picked.len() < goal {
            picked.insert(r.random_range(0..n));
        }
        for s in picked {
            ts.labels[s].insert(g.to_string());
        }
    }
    ts
}

/// `n_robots` identical robots on `ts`, each starting in a random `s1` state.
pub fn team_instance(r: &mut ChaCha8Rng, ts: &TransitionSystem, n_robots: usize) -> MultiRobotInstance {
    let starts: Vec<usize> = (0..ts.n_states()).filter(|&s| ts.labels[s].contains("s1")).collect();
    let init = (0..n_robots).map(|_| starts[r.random_range(0..starts.len())]).collect();
    MultiRobotInstance::homogeneous(ts.clone(), init)
}

/// Half the team settles in `s2` while each goal set is visited by a third
/// of the team infinitely often (thresholds rounded up).
pub fn team_formula(n_robots: usize) -> String {
    let half = n_robots.div_ceil(2);
    let third = n_robots.div_ceil(3);
    format!("F G [s2, {half}] & G F [g1, {third}] & G F [g2, {third}] & G F [g3, {third}]")
}
