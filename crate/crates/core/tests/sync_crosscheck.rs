use ctlsynth::encode::{build_sync_problem, extract_trajectories};
use ctlsynth::oracle::{brute_force_synth, eval_outer, CollectiveExecution};
use ctlsynth::random::{random_instance, random_outer, rng, FormulaShape};
use ctlsynth::solver::{solve_bnb, SolverConfig};
use ctlsynth::trajectory::LabeledLasso;
use rand::RngExt;

const AP: &[&str] = &["a", "b"];

#[test]
fn feasible_models_satisfy_the_formula() {
    let shape = FormulaShape {
        group_p: 0.3,
        ..Default::default()
    };
    let mut feasible = 0;
    for seed in 0..40 {
        let mut r = rng(seed);
        let n = r.random_range(1..=3);
        let s = r.random_range(2..=5);
        let h = r.random_range(1..=5);
        let inst = random_instance(&mut r, n, s, AP);
        let depth = r.random_range(0..=3);
        let mu = random_outer(&mut r, AP, n, depth, &shape);
        let enc = build_sync_problem(&inst, &mu, h).unwrap();
        let sol = solve_bnb(&enc.model, &SolverConfig::default()).unwrap();
        if !sol.is_feasible() {
            continue;
        }
        feasible += 1;
        let trajs = extract_trajectories(&enc.layout, &sol).unwrap();
        let pi: Vec<LabeledLasso> = trajs
            .iter()
            .zip(&inst.systems)
            .map(|(t, ts)| {
                t.check(ts).unwrap();
                t.labeled(ts)
            })
            .collect();
        assert!(
            eval_outer(&pi, &CollectiveExecution::synchronous(n), 0, &mu),
            "seed {seed}: {mu} violated by {trajs:?}"
        );
    }
    assert!(feasible >= 10, "only {feasible} feasible instances");
}

#[test]
fn feasibility_matches_exhaustive_search() {
    let shape = FormulaShape::default();
    for seed in 100..130 {
        let mut r = rng(seed);
        let s = r.random_range(2..=3);
        let h = r.random_range(1..=4);
        let inst = random_instance(&mut r, 2, s, AP);
        let depth = r.random_range(0..=2);
        let mu = random_outer(&mut r, AP, 2, depth, &shape);
        let enc = build_sync_problem(&inst, &mu, h).unwrap();
        let sol = solve_bnb(&enc.model, &SolverConfig::default()).unwrap();
        let brute = brute_force_synth(&inst, &mu, h, 0).unwrap();
        assert_eq!(
            sol.is_feasible(),
            brute.is_some(),
            "seed {seed}: {mu} at h = {h}"
        );
    }
}
