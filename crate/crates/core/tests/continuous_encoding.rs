use std::collections::BTreeMap;

use ctlsynth::encode::{build_cont_problem, extract_continuous, ContinuousOptions, ContinuousTrajectory};
use ctlsynth::formula::{parse_formula, OuterFormula};
use ctlsynth::ilp::{LinExpr, Sense, Solution};
use ctlsynth::oracle::{check_robust, eval_outer, CollectiveExecution, RobustBudget};
use ctlsynth::solver::{solve_bnb, SolverConfig};
use ctlsynth::system::{AffineRobot, ContinuousSystem, Polytope};
use ctlsynth::trajectory::LabeledLasso;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `w(t+1) = f w(t) + u(t)` in one dimension.
fn scalar(f: f64, init: f64, state: (f64, f64), input: (f64, f64)) -> AffineRobot {
    AffineRobot {
        f: vec![vec![f]],
        g: vec![vec![1.0]],
        c: vec![],
        init: vec![init],
        state_bounds: vec![state],
        input_bounds: vec![input],
    }
}

/// `lo ≤ w ≤ hi` in one dimension.
fn interval(lo: f64, hi: f64) -> Polytope {
    Polytope {
        h_mat: vec![vec![1.0], vec![-1.0]],
        h_vec: vec![hi, -lo],
    }
}

fn system(robots: Vec<AffineRobot>, atoms: &[(&str, Polytope)]) -> ContinuousSystem {
    ContinuousSystem {
        robots,
        atoms: atoms.iter().map(|(a, p)| (a.to_string(), p.clone())).collect(),
        groups: BTreeMap::new(),
    }
}

fn solve(model: &ctlsynth::ilp::IlpModel) -> Solution {
    solve_bnb(model, &SolverConfig::default()).unwrap()
}

fn synth(sys: &ContinuousSystem, mu: &OuterFormula, h: usize, tau: usize) -> Option<Vec<ContinuousTrajectory>> {
    let enc = build_cont_problem(sys, mu, h, tau, &ContinuousOptions::default()).unwrap();
    let sol = solve(&enc.model);
    sol.is_feasible()
        .then(|| extract_continuous(sys, &enc.layout, &sol).unwrap())
}

fn labeled(sys: &ContinuousSystem, trajs: &[ContinuousTrajectory]) -> Vec<LabeledLasso> {
    trajs
        .iter()
        .map(|t| LabeledLasso {
            labels: t.labels(sys, 1e-6),
            loop_start: t.loop_start,
        })
        .collect()
}

fn closes(t: &ContinuousTrajectory) -> bool {
    let h = t.states.len() - 1;
    t.states[h]
        .iter()
        .zip(&t.states[t.loop_start])
        .all(|(a, b)| (a - b).abs() <= 1e-6)
}

#[test]
fn zero_input_holds_the_state() {
    let sys = system(vec![scalar(1.0, 0.3, (-1.0, 1.0), (0.0, 0.0))], &[]);
    let trajs = synth(&sys, &parse_formula("true").unwrap(), 3, 0).unwrap();
    assert!(trajs[0].states.iter().all(|w| w == &vec![0.3]));
    assert!(closes(&trajs[0]));
}

#[test]
fn one_step_reach_needs_full_input() {
    let sys = system(
        vec![scalar(1.0, 0.0, (-2.0, 2.0), (-1.0, 1.0))],
        &[("A", Polytope { h_mat: vec![vec![-1.0]], h_vec: vec![-1.0] })],
    );
    let trajs = synth(&sys, &parse_formula("X [A, 1]").unwrap(), 2, 0).unwrap();
    assert!((trajs[0].inputs[0][0] - 1.0).abs() <= 1e-6);
    assert!(closes(&trajs[0]));
}

#[test]
fn two_integrators_meet_in_a_target_interval() {
    let r = scalar(1.0, 0.0, (-2.0, 2.0), (-1.0, 1.0));
    let sys = system(vec![r.clone(), r], &[("A", interval(0.9, 1.1))]);
    let mu = parse_formula("F [A, 2]").unwrap();
    let trajs = synth(&sys, &mu, 3, 0).unwrap();
    let h = trajs[0].states.len() - 1;
    let together = (0..h).any(|t| trajs.iter().all(|tr| (0.9..=1.1).contains(&tr.states[t][0])));
    assert!(together);
    assert!(trajs.iter().all(closes));
    assert!(eval_outer(&labeled(&sys, &trajs), &CollectiveExecution::synchronous(2), 0, &mu));

    assert!(synth(&sys, &parse_formula("F [A, 3]").unwrap(), 3, 0).is_none());
}

#[test]
fn momentary_visits_are_not_robust() {
    // w flips sign each step, so A = [0.9, 1.1] is visited every other step
    let r = scalar(-1.0, 1.0, (-2.0, 2.0), (-0.1, 0.1));
    let sys = system(vec![r.clone(), r], &[("A", interval(0.9, 1.1))]);
    let mu = parse_formula("G F [A, 2]").unwrap();
    let trajs = synth(&sys, &mu, 4, 0).expect("synchronous visits line up");
    assert!(eval_outer(&labeled(&sys, &trajs), &CollectiveExecution::synchronous(2), 0, &mu));
    assert!(!check_robust(&labeled(&sys, &trajs), &mu, 1, &RobustBudget::exhaustive(6)).is_verified());
    assert!(synth(&sys, &mu, 4, 1).is_none());
}

#[test]
fn robust_stay_inside_is_verified() {
    let r = scalar(1.0, 0.0, (-2.0, 2.0), (-1.0, 1.0));
    let sys = system(vec![r.clone(), r], &[("A", interval(0.9, 1.1))]);
    let mu = parse_formula("F G [A, 2]").unwrap();
    let trajs = synth(&sys, &mu, 3, 1).unwrap();
    let pi = labeled(&sys, &trajs);
    assert!(check_robust(&pi, &mu, 1, &RobustBudget::exhaustive(6)).is_verified());
}

#[test]
fn boundary_points_count_as_inside() {
    let sys = system(
        vec![scalar(0.0, 0.0, (-1.0, 1.0), (-1.0, 1.0))],
        &[("A", interval(-0.5, 0.5))],
    );
    let at = |x: f64, f: &str, eps: f64| {
        let mut enc = build_cont_problem(&sys, &parse_formula(f).unwrap(), 2, 0, &ContinuousOptions { eps }).unwrap();
        enc.model.constrain(LinExpr::var(enc.layout.inputs[0][0][0]), Sense::Eq, x);
        solve(&enc.model).is_feasible()
    };
    assert!(at(0.5, "X [A, 1]", 1e-3));
    assert!(!at(0.5, "X [!A, 1]", 1e-3));
    // strictly between the face and face + ε neither side is representable
    assert!(!at(0.5005, "X [A, 1]", 1e-3));
    assert!(!at(0.5005, "X [!A, 1]", 1e-3));
    assert!(at(0.502, "X [!A, 1]", 1e-3));
}

#[test]
fn polytope_gadget_matches_membership_away_from_faces() {
    let robot = AffineRobot {
        f: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        g: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        c: vec![],
        init: vec![0.0, 0.0],
        state_bounds: vec![(-1.0, 1.0), (-1.0, 1.0)],
        input_bounds: vec![(-1.0, 1.0), (-1.0, 1.0)],
    };
    // a quadrilateral with one slanted face
    let poly = Polytope {
        h_mat: vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 1.0]],
        h_vec: vec![0.6, -0.2, 0.3, 0.8],
    };
    let sys = system(vec![robot], &[("A", poly.clone())]);
    let eps = 1e-4;
    let opts = ContinuousOptions { eps };
    let base = build_cont_problem(&sys, &parse_formula("X [A, 1]").unwrap(), 2, 0, &opts).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let (mut checked, mut inside) = (0, 0);
    while checked < 1000 {
        let p = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
        let slack: f64 = poly
            .h_mat
            .iter()
            .zip(&poly.h_vec)
            .map(|(row, b)| (row[0] * p[0] + row[1] * p[1] - b).abs() / (row[0].hypot(row[1])))
            .fold(f64::INFINITY, f64::min);
        if slack <= 2.0 * eps {
            continue;
        }
        checked += 1;
        let mut enc = base.clone();
        for (k, &x) in p.iter().enumerate() {
            enc.model.constrain(LinExpr::var(enc.layout.inputs[0][0][k]), Sense::Eq, x);
        }
        let member = poly.contains(&p);
        inside += usize::from(member);
        assert_eq!(solve(&enc.model).is_feasible(), member, "{p:?}");
    }
    assert!(inside > 50 && inside < 950, "{inside} of 1000 inside");
}
