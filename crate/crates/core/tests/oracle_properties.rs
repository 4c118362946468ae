use std::collections::BTreeSet;

use ctlsynth::formula::{parse_formula, OuterFormula};
use ctlsynth::oracle::{
    anchor_map, brute_force_synth, check_robust, check_windowed, eval_outer, CollectiveExecution,
    RobustBudget,
};
use ctlsynth::random::{random_outer, rng, FormulaShape};
use ctlsynth::system::{MultiRobotInstance, TransitionSystem};
use ctlsynth::trajectory::LabeledLasso;
use proptest::prelude::*;
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

fn lasso(labels: &[&[&str]], loop_start: usize) -> LabeledLasso {
    LabeledLasso {
        labels: labels
            .iter()
            .map(|l| l.iter().map(|a| a.to_string()).collect())
            .collect(),
        loop_start,
    }
}

/// The three traces `{φ₁}^ω`, `{φ₁}{φ₂}^ω`, `{φ₂}^ω`.
fn example_three() -> Vec<LabeledLasso> {
    vec![
        lasso(&[&["f1"]], 0),
        lasso(&[&["f1"], &["f2"]], 1),
        lasso(&[&["f2"]], 0),
    ]
}

#[test]
fn pooled_disjunction_is_robust_but_its_halves_are_not() {
    let pi = example_three();
    let budget = RobustBudget::exhaustive(4);
    let mu = parse_formula("[f1, 2] | [f2, 2]").unwrap();
    let v = check_robust(&pi, &mu, 1, &budget);
    assert!(v.is_verified() && v.exhaustive);

    let f1 = parse_formula("[f1, 2]").unwrap();
    let v = check_robust(&pi, &f1, 1, &budget);
    let c = v.counterexample.expect("falsified");
    // the middle robot has moved on to f2 while the first is still at its start
    let k = c.execution.counters(c.time);
    assert_eq!(anchor_map(&c.execution, c.time), 0);
    assert!(k[1] > 0);
    assert!(!eval_outer(&pi, &c.execution, c.time, &f1));

    let f2 = parse_formula("[f2, 2]").unwrap();
    let c = check_robust(&pi, &f2, 1, &budget).counterexample.expect("falsified");
    assert!(!eval_outer(&pi, &c.execution, c.time, &f2));
}

#[test]
fn counting_at_a_skewed_moment() {
    let pi = example_three();
    let k = CollectiveExecution::from_counters(&[vec![0, 0, 0], vec![0, 1, 1]]).unwrap();
    assert!(eval_outer(&pi, &k, 1, &parse_formula("[f2, 2]").unwrap()));
    assert!(!eval_outer(&pi, &k, 1, &parse_formula("[f1, 2]").unwrap()));
}

#[test]
fn individual_liveness_is_not_joint_liveness() {
    // two robots visit a on alternate steps
    let pi = vec![lasso(&[&["a"], &[]], 0), lasso(&[&[], &["a"]], 0)];
    let k = CollectiveExecution::synchronous(2);
    assert!(eval_outer(&pi, &k, 0, &parse_formula("[G F a, 2]").unwrap()));
    assert!(!eval_outer(&pi, &k, 0, &parse_formula("G F [a, 2]").unwrap()));
    assert!(eval_outer(&pi, &k, 0, &parse_formula("true").unwrap()));
}

fn chain(labels: &[&[&str]], edges: &[(usize, usize)]) -> TransitionSystem {
    TransitionSystem::new(
        (0..labels.len()).map(|i| format!("v{i}")).collect(),
        edges.to_vec(),
        ["a".to_string()].into_iter().collect(),
        labels
            .iter()
            .map(|l| l.iter().map(|a| a.to_string()).collect())
            .collect(),
    )
}

#[test]
fn exhaustive_search_finds_the_advancing_lasso() {
    let inst = MultiRobotInstance::new(vec![chain(&[&[], &["a"]], &[(0, 1), (1, 1)])], vec![0]);
    let found = brute_force_synth(&inst, &parse_formula("F [a, 1]").unwrap(), 2, 0)
        .unwrap()
        .expect("reachable");
    assert_eq!(found[0].states, vec![0, 1, 1]);

    let none = brute_force_synth(&inst, &parse_formula("[a, 2]").unwrap(), 2, 0).unwrap();
    assert!(none.is_none());
}

fn random_lasso(r: &mut ChaCha8Rng, ap: &[&str]) -> LabeledLasso {
    let len = r.random_range(1..=4);
    let labels: Vec<BTreeSet<String>> = (0..len)
        .map(|_| ap.iter().filter(|_| r.random::<bool>()).map(|a| a.to_string()).collect())
        .collect();
    LabeledLasso {
        loop_start: r.random_range(0..len),
        labels,
    }
}

fn random_execution(r: &mut ChaCha8Rng, n: usize, len: usize, tau: Option<usize>) -> CollectiveExecution {
    let mut k = vec![0usize; n];
    let mut inc = Vec::with_capacity(len);
    for _ in 0..len {
        let step: Vec<bool> = loop {
            let s: Vec<bool> = (0..n).map(|_| r.random::<bool>()).collect();
            let next: Vec<usize> = k.iter().zip(&s).map(|(&a, &b)| a + usize::from(b)).collect();
            let spread = next.iter().max().unwrap() - next.iter().min().unwrap();
            if tau.is_none_or(|t| spread <= t) {
                k = next;
                break s;
            }
        };
        inc.push(step);
    }
    CollectiveExecution::new(n, inc)
}

const AP: &[&str] = &["a", "b"];

fn next_free(r: &mut ChaCha8Rng, n: usize, depth: usize) -> OuterFormula {
    let shape = FormulaShape {
        outer_next: false,
        group_p: 0.3,
        ..Default::default()
    };
    random_outer(r, AP, n, depth, &shape)
}

fn tcp_only(r: &mut ChaCha8Rng, n: usize) -> OuterFormula {
    let shape = FormulaShape {
        inner_next: false,
        group_p: 0.3,
        ..Default::default()
    };
    // Boolean combinations only: build from tcps with and/or/not
    fn go(r: &mut ChaCha8Rng, n: usize, d: usize, shape: &FormulaShape) -> OuterFormula {
        if d == 0 {
            return ctlsynth::random::random_outer(r, AP, n, 0, shape);
        }
        match r.random_range(0..4) {
            0 => OuterFormula::And(vec![go(r, n, d - 1, shape), go(r, n, d - 1, shape)]),
            1 => OuterFormula::Or(vec![go(r, n, d - 1, shape), go(r, n, d - 1, shape)]),
            2 => go(r, n, d - 1, shape).not(),
            _ => go(r, n, 0, shape),
        }
    }
    let d = r.random_range(0..=2);
    go(r, n, d, &shape)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn anchor_time_never_decreases(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=4);
        let k = random_execution(&mut r, n, 8, None);
        for t in 0..12 {
            prop_assert!(anchor_map(&k, t) <= anchor_map(&k, t + 1));
            prop_assert_eq!(anchor_map(&k, t), *k.counters(t).iter().min().unwrap());
        }
    }

    #[test]
    fn global_stutters_do_not_change_next_free_truth(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=3);
        let pi: Vec<LabeledLasso> = (0..n).map(|_| random_lasso(&mut r, AP)).collect();
        let depth = r.random_range(0..=3);
        let mu = next_free(&mut r, n, depth);
        let mut inc = Vec::new();
        for _ in 0..6 {
            for _ in 0..r.random_range(0..=2) {
                inc.push(vec![false; n]);
            }
            inc.push(vec![true; n]);
        }
        let stuttered = CollectiveExecution::new(n, inc);
        prop_assert_eq!(
            eval_outer(&pi, &CollectiveExecution::synchronous(n), 0, &mu),
            eval_outer(&pi, &stuttered, 0, &mu),
            "{}", mu
        );
    }

    #[test]
    fn zero_tolerance_is_synchronous_truth(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=3);
        let pi: Vec<LabeledLasso> = (0..n).map(|_| random_lasso(&mut r, AP)).collect();
        let depth = r.random_range(0..=3);
        let mu = next_free(&mut r, n, depth);
        let v = check_robust(&pi, &mu, 0, &RobustBudget::exhaustive(4));
        prop_assert_eq!(
            v.is_verified(),
            eval_outer(&pi, &CollectiveExecution::synchronous(n), 0, &mu),
            "{}", mu
        );
    }

    #[test]
    fn windowed_check_agrees_with_full_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=3);
        let tau = r.random_range(0..=1);
        let pi: Vec<LabeledLasso> = (0..n).map(|_| random_lasso(&mut r, AP)).collect();
        let mu = tcp_only(&mut r, n);
        let windowed = check_windowed(&pi, &mu, tau);
        let full = check_robust(&pi, &mu, tau, &RobustBudget::exhaustive(tau + 2));
        prop_assert_eq!(windowed.is_none(), full.is_verified(), "{}", mu);
    }

    #[test]
    fn counterexamples_replay(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=3);
        let pi: Vec<LabeledLasso> = (0..n).map(|_| random_lasso(&mut r, AP)).collect();
        let depth = r.random_range(0..=2);
        let mu = next_free(&mut r, n, depth);
        let v = check_robust(&pi, &mu, 1, &RobustBudget::new(5));
        if let Some(c) = v.counterexample {
            prop_assert!(c.execution.is_tau_bounded(1));
            prop_assert_eq!(anchor_map(&c.execution, c.time), 0);
            prop_assert!(!eval_outer(&pi, &c.execution, c.time, &mu));
        }
    }

    #[test]
    fn sampled_executions_respect_the_bound(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(2..=4);
        let tau = r.random_range(0..=2);
        let k = random_execution(&mut r, n, 10, Some(tau));
        prop_assert!(k.is_tau_bounded(tau));
        prop_assert!(k.max_spread() <= tau);
    }
}
