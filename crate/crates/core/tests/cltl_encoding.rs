use std::collections::BTreeSet;

use ctlsynth::encode::{
    build_cltl_problem, build_sync_problem, decompose_flows, decompose_flows_with, EncodeError,
    TieBreak,
};
use ctlsynth::formula::parse_formula;
use ctlsynth::ilp::{LinExpr, Sense, Solution};
use ctlsynth::oracle::{eval_outer, CollectiveExecution};
use ctlsynth::random::{erdos_renyi, random_instance, random_outer, rng, FormulaShape};
use ctlsynth::solver::{solve_bnb, SolverConfig};
use ctlsynth::system::{AggregateSystem, MultiRobotInstance, TransitionSystem};
use ctlsynth::trajectory::{LabeledLasso, LassoTrajectory};
use rand::RngExt;

fn ts(edges: &[(usize, usize)], labels: &[&[&str]], ap: &[&str]) -> TransitionSystem {
    TransitionSystem::new(
        (0..labels.len()).map(|i| format!("s{i}")).collect(),
        edges.to_vec(),
        ap.iter().map(|a| a.to_string()).collect(),
        labels
            .iter()
            .map(|l| l.iter().map(|a| a.to_string()).collect())
            .collect(),
    )
}

fn agg(shared: TransitionSystem, w0: Vec<u32>) -> AggregateSystem {
    let n_robots = w0.iter().sum::<u32>() as usize;
    AggregateSystem {
        shared,
        w0,
        n_robots,
    }
}

fn solve(model: &ctlsynth::ilp::IlpModel) -> Solution {
    solve_bnb(model, &SolverConfig::default()).unwrap()
}

fn counts(sol: &Solution, row: &[ctlsynth::ilp::VarId]) -> Vec<u32> {
    row.iter().map(|&v| sol.value(v).round() as u32).collect()
}

/// Robots per state at each step, from individual lassos.
fn reaggregate(trajs: &[LassoTrajectory], ns: usize, steps: usize) -> Vec<Vec<u32>> {
    (0..steps)
        .map(|t| {
            let mut c = vec![0u32; ns];
            for tr in trajs {
                c[tr.state_at(t)] += 1;
            }
            c
        })
        .collect()
}

#[test]
fn a_single_self_loop_keeps_everyone_home() {
    let a = agg(ts(&[(0, 0)], &[&[]], &[]), vec![5]);
    let enc = build_cltl_problem(&a, &parse_formula("true").unwrap(), 3).unwrap();
    let sol = solve(&enc.model);
    for row in &enc.layout.counts {
        assert_eq!(counts(&sol, row), vec![5]);
    }
}

#[test]
fn swap_graph_alternates_counts() {
    let a = agg(ts(&[(0, 1), (1, 0)], &[&[], &[]], &[]), vec![3, 2]);
    let enc = build_cltl_problem(&a, &parse_formula("true").unwrap(), 2).unwrap();
    let sol = solve(&enc.model);
    let c = &enc.layout.counts;
    assert_eq!(counts(&sol, &c[1]), vec![2, 3]);
    assert_eq!(counts(&sol, &c[2]), vec![3, 2]);
    assert_eq!(enc.layout.loop_start(&sol).unwrap(), 0);

    let trajs = decompose_flows(&a, &enc.layout, &sol).unwrap();
    assert_eq!(trajs.len(), 5);
    for t in &trajs {
        t.check(&a.shared).unwrap();
        for k in 0..6 {
            assert_ne!(t.state_at(k), t.state_at(k + 1));
        }
    }
    let expected: Vec<Vec<u32>> = (0..=2).map(|t| counts(&sol, &c[t])).collect();
    assert_eq!(reaggregate(&trajs, 2, 3), expected);
}

#[test]
fn counting_threshold_reads_the_aggregate_state() {
    let sys = ts(&[(0, 0), (1, 1)], &[&["a"], &[]], &["a"]);
    let a = agg(sys, vec![3, 2]);
    let at = |m| {
        let mu = parse_formula(&format!("[a, {m}]")).unwrap();
        solve(&build_cltl_problem(&a, &mu, 1).unwrap().model).is_feasible()
    };
    assert!(at(0));
    assert!(at(3));
    assert!(!at(4));
}

#[test]
fn temporal_inner_formulas_are_rejected() {
    let a = agg(ts(&[(0, 0)], &[&["a"]], &["a"]), vec![2]);
    let mu = parse_formula("[F a, 1] & [a, 1]").unwrap();
    match build_cltl_problem(&a, &mu, 2) {
        Err(EncodeError::NotCltl(s)) => assert!(s.contains('F'), "{s}"),
        other => panic!("expected a fragment error, got {other:?}"),
    }
}

#[test]
fn model_size_does_not_depend_on_team_size() {
    let mut r = rng(3);
    let sys = erdos_renyi(&mut r, 6, 0.3, &["a", "b"]);
    let mu = parse_formula("F G [a, 2] & G F [b, 1]").unwrap();
    let size = |n: u32| {
        let enc = build_cltl_problem(&agg(sys.clone(), vec![n, 0, 0, 0, 0, 0]), &mu, 5).unwrap();
        (enc.model.num_vars(), enc.model.num_constraints())
    };
    assert_eq!(size(10), size(500));
}

#[test]
fn split_flow_sends_the_higher_index_away() {
    // w(0) = [2, 0] with one robot staying and one leaving
    let a = agg(ts(&[(0, 0), (0, 1), (1, 0)], &[&[], &[]], &[]), vec![2, 0]);
    let mut enc = build_cltl_problem(&a, &parse_formula("true").unwrap(), 2).unwrap();
    for &((i, j), v) in &enc.layout.flows[0] {
        let x = if (i, j) == (0, 0) || (i, j) == (0, 1) { 1.0 } else { 0.0 };
        enc.model.constrain(LinExpr::var(v), Sense::Eq, x);
    }
    let sol = solve(&enc.model);
    let trajs = decompose_flows(&a, &enc.layout, &sol).unwrap();
    assert_eq!(trajs[0].state_at(1), 0);
    assert_eq!(trajs[1].state_at(1), 1);

    let shuffled = decompose_flows_with(&a, &enc.layout, &sol, None, TieBreak::Seeded(9)).unwrap();
    assert_eq!(reaggregate(&shuffled, 2, 3), reaggregate(&trajs, 2, 3));
}

#[test]
fn one_robot_follows_the_only_path() {
    let a = agg(ts(&[(0, 1), (1, 2), (2, 1)], &[&[], &[], &[]], &[]), vec![1, 0, 0]);
    let enc = build_cltl_problem(&a, &parse_formula("true").unwrap(), 3).unwrap();
    let sol = solve(&enc.model);
    let trajs = decompose_flows(&a, &enc.layout, &sol).unwrap();
    assert_eq!(trajs, vec![LassoTrajectory::new(vec![0, 1, 2, 1], 1)]);
}

fn labeled(trajs: &[LassoTrajectory], ts: &TransitionSystem) -> Vec<LabeledLasso> {
    trajs.iter().map(|t| t.labeled(ts)).collect()
}

#[test]
fn team_level_liveness_on_a_random_graph() {
    let mut r = rng(11);
    let ap = ["s2", "g0", "g1", "g2"];
    let sys = erdos_renyi(&mut r, 8, 0.25, &ap);
    let n = 6;
    let mut w0 = vec![0u32; 8];
    w0[0] = n;
    let a = agg(sys.clone(), w0);
    let mu = parse_formula("F G [s2, 3] & G F [g0, 2] & G F [g1, 2] & G F [g2, 2]").unwrap();
    let sol_h = (4..=10).find_map(|h| {
        let enc = build_cltl_problem(&a, &mu, h).unwrap();
        let sol = solve(&enc.model);
        sol.is_feasible().then_some((enc, sol))
    });
    let (enc, sol) = sol_h.expect("feasible within h = 10");
    let trajs = decompose_flows(&a, &enc.layout, &sol).unwrap();
    for t in &trajs {
        t.check(&sys).unwrap();
    }
    let pi = labeled(&trajs, &sys);
    assert!(eval_outer(&pi, &CollectiveExecution::synchronous(n as usize), 0, &mu));
    for t in 0..=enc.layout.h {
        assert_eq!(reaggregate(&trajs, 8, t + 1)[t], counts(&sol, &enc.layout.counts[t]));
    }
}

#[test]
fn aggregate_and_individual_encodings_agree() {
    let shape = FormulaShape {
        atoms_only: true,
        ..Default::default()
    };
    let mut feasible = 0;
    for seed in 0..60 {
        let mut r = rng(seed);
        let n = r.random_range(1..=3);
        let s = r.random_range(2..=4);
        let h = r.random_range(1..=4);
        let inst: MultiRobotInstance = random_instance(&mut r, n, s, &["a", "b"]);
        let depth = r.random_range(0..=3);
        let mu = random_outer(&mut r, &["a", "b"], n, depth, &shape);
        let a = inst.aggregate_view().unwrap();
        let enc = build_cltl_problem(&a, &mu, h).unwrap();
        let sol = solve(&enc.model);
        let sync = solve(&build_sync_problem(&inst, &mu, h).unwrap().model);
        assert_eq!(sol.is_feasible(), sync.is_feasible(), "seed {seed}: {mu} at h = {h}");
        if !sol.is_feasible() {
            continue;
        }
        feasible += 1;
        for row in &enc.layout.counts {
            assert_eq!(counts(&sol, row).iter().sum::<u32>(), n as u32);
        }
        // robots start where the instance put them
        let trajs = decompose_flows_with(&a, &enc.layout, &sol, Some(&inst.initial_states), TieBreak::LowestIndex).unwrap();
        let starts: BTreeSet<_> = trajs.iter().map(|t| t.state_at(0)).collect();
        assert!(starts.iter().all(|s| inst.initial_states.contains(s)));
        for t in &trajs {
            t.check(&a.shared).unwrap();
        }
        let pi = labeled(&trajs, &a.shared);
        assert!(
            eval_outer(&pi, &CollectiveExecution::synchronous(n), 0, &mu),
            "seed {seed}: {mu} violated by {trajs:?}"
        );
    }
    assert!(feasible >= 15, "only {feasible} feasible");
}
