//! Robot models: labeled transition systems, their aggregate view, and affine
//! continuous-state systems.

mod grid;
mod load;

use std::collections::{BTreeMap, BTreeSet};

pub use grid::grid_system;
pub use load::{load_model, load_model_str, LoadedModel};

#[derive(Debug, thiserror::Error)]
pub enum SystemError {
    #[error("reading model: {0}")]
    Io(#[from] std::io::Error),
    #[error("model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("robot {robot}: label `{label}` is not in the proposition set")]
    UnknownLabel { robot: usize, label: String },
    #[error("robot {robot}: labels given for unknown state `{state}`")]
    UnknownState { robot: usize, state: String },
    #[error("robot {robot}: transition ({from}, {to}) leaves the state range 0..{n_states}")]
    DanglingTransition {
        robot: usize,
        from: usize,
        to: usize,
        n_states: usize,
    },
    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),
    #[error("robots do not share identical dynamics: {0}")]
    NotIdentical(String),
    #[error("invalid model: {0}")]
    Invalid(String),
}

/// Labeled transition system of a single robot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionSystem {
    pub states: Vec<String>,
    /// Sorted, deduplicated `(from, to)` pairs.
    pub transitions: Vec<(usize, usize)>,
    pub ap: BTreeSet<String>,
    /// One label set per state.
    pub labels: Vec<BTreeSet<String>>,
}

impl TransitionSystem {
    pub fn new(
        states: Vec<String>,
        transitions: impl IntoIterator<Item = (usize, usize)>,
        ap: BTreeSet<String>,
        labels: Vec<BTreeSet<String>>,
    ) -> Self {
        let mut transitions: Vec<_> = transitions.into_iter().collect();
        transitions.sort_unstable();
        transitions.dedup();
        TransitionSystem {
            states,
            transitions,
            ap,
            labels,
        }
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.transitions.binary_search(&(from, to)).is_ok()
    }

    pub fn successors(&self, from: usize) -> Vec<usize> {
        let start = self.transitions.partition_point(|&(f, _)| f < from);
        self.transitions[start..]
            .iter()
            .take_while(|&&(f, _)| f == from)
            .map(|&(_, t)| t)
            .collect()
    }

    pub fn predecessors(&self, to: usize) -> Vec<usize> {
        self.transitions
            .iter()
            .filter(|&&(_, t)| t == to)
            .map(|&(f, _)| f)
            .collect()
    }

    /// Adjacency matrix with `A[j][i] = 1` iff there is a transition `i → j`.
    pub fn adjacency(&self) -> Vec<Vec<u8>> {
        let n = self.n_states();
        let mut a = vec![vec![0; n]; n];
        for &(i, j) in &self.transitions {
            a[j][i] = 1;
        }
        a
    }

    /// Entry `i` is 1 iff `a` labels state `i`.
    pub fn label_vector(&self, a: &str) -> Result<Vec<u8>, SystemError> {
        if !self.ap.contains(a) {
            return Err(SystemError::UnknownProposition(a.to_string()));
        }
        Ok(self
            .labels
            .iter()
            .map(|l| u8::from(l.contains(a)))
            .collect())
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    /// Label sets of a state sequence.
    pub fn trace(&self, states: &[usize]) -> Vec<BTreeSet<String>> {
        states.iter().map(|&s| self.labels[s].clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionMode {
    #[default]
    Off,
    /// At most one robot per state at a time.
    MutualExclusion,
    /// Mutual exclusion plus no two robots exchanging states across an edge.
    MutualExclusionPlusSwap,
}

/// A team of robots with their initial states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiRobotInstance {
    pub systems: Vec<TransitionSystem>,
    pub initial_states: Vec<usize>,
    pub groups: BTreeMap<String, Vec<usize>>,
    pub collision: CollisionMode,
}

impl MultiRobotInstance {
    pub fn new(systems: Vec<TransitionSystem>, initial_states: Vec<usize>) -> Self {
        MultiRobotInstance {
            systems,
            initial_states,
            groups: BTreeMap::new(),
            collision: CollisionMode::Off,
        }
    }

    /// `n` copies of one system.
    pub fn homogeneous(ts: TransitionSystem, initial_states: Vec<usize>) -> Self {
        let systems = vec![ts; initial_states.len()];
        Self::new(systems, initial_states)
    }

    pub fn n_robots(&self) -> usize {
        self.systems.len()
    }

    pub fn ap(&self) -> BTreeSet<String> {
        self.systems
            .first()
            .map(|s| s.ap.clone())
            .unwrap_or_default()
    }

    /// Checks every structural invariant and returns one message per violation.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.systems.is_empty() {
            out.push("instance has no robots".to_string());
        }
        if self.initial_states.len() != self.systems.len() {
            out.push(format!(
                "{} initial states for {} robots",
                self.initial_states.len(),
                self.systems.len()
            ));
        }
        let ap0 = self.ap();
        for (n, ts) in self.systems.iter().enumerate() {
            if ts.ap != ap0 {
                out.push(format!("robot {n}: proposition set differs from robot 0"));
            }
            if ts.labels.len() != ts.n_states() {
                out.push(format!(
                    "robot {n}: {} label sets for {} states",
                    ts.labels.len(),
                    ts.n_states()
                ));
            }
            for &(i, j) in &ts.transitions {
                if i >= ts.n_states() || j >= ts.n_states() {
                    out.push(format!("robot {n}: transition ({i}, {j}) out of range"));
                }
            }
            for (s, l) in ts.labels.iter().enumerate() {
                for a in l {
                    if !ts.ap.contains(a) {
                        out.push(format!("robot {n}: state {s} has unknown label `{a}`"));
                    }
                }
            }
            if let Some(&init) = self.initial_states.get(n) {
                if init >= ts.n_states() {
                    out.push(format!("robot {n}: initial state {init} out of range"));
                }
            }
        }
        for (name, robots) in &self.groups {
            if robots.is_empty() {
                out.push(format!("group `{name}` is empty"));
            }
            for &r in robots {
                if r >= self.systems.len() {
                    out.push(format!("group `{name}` names robot {r}, which does not exist"));
                }
            }
        }
        if self.collision != CollisionMode::Off {
            let n0 = self.systems.first().map(|s| s.n_states());
            if self.systems.iter().any(|s| Some(s.n_states()) != n0) {
                out.push("collision avoidance needs a shared state space".to_string());
            }
        }
        out
    }

    pub fn validated(self) -> Result<Self, SystemError> {
        let diags = self.validate();
        if diags.is_empty() {
            Ok(self)
        } else {
            Err(SystemError::Invalid(diags.join("; ")))
        }
    }

    /// True when every robot has structurally identical dynamics and labels.
    pub fn identical_dynamics(&self) -> bool {
        self.first_difference().is_none()
    }

    fn first_difference(&self) -> Option<String> {
        let base = canonical(self.systems.first()?);
        for (n, ts) in self.systems.iter().enumerate().skip(1) {
            let other = canonical(ts);
            if other.states != base.states {
                return Some(format!("robot {n}: state names differ from robot 0"));
            }
            if other.transitions != base.transitions {
                return Some(format!("robot {n}: transitions differ from robot 0"));
            }
            if other.labels != base.labels {
                return Some(format!("robot {n}: labels differ from robot 0"));
            }
        }
        None
    }

    /// Robot counts per state for identical robots.
    pub fn aggregate_view(&self) -> Result<AggregateSystem, SystemError> {
        if let Some(diff) = self.first_difference() {
            return Err(SystemError::NotIdentical(diff));
        }
        let shared = self
            .systems
            .first()
            .ok_or_else(|| SystemError::Invalid("instance has no robots".into()))?
            .clone();
        let mut w0 = vec![0u32; shared.n_states()];
        for (n, &s) in self.initial_states.iter().enumerate() {
            // robots may list states in different orders; map through names
            let name = &self.systems[n].states[s];
            let i = shared.state_index(name).expect("canonical states agree");
            w0[i] += 1;
        }
        Ok(AggregateSystem {
            shared,
            w0,
            n_robots: self.n_robots(),
        })
    }
}

struct Canonical {
    states: Vec<String>,
    transitions: Vec<(String, String)>,
    labels: Vec<(String, BTreeSet<String>)>,
}

fn canonical(ts: &TransitionSystem) -> Canonical {
    let mut states = ts.states.clone();
    states.sort();
    let mut transitions: Vec<_> = ts
        .transitions
        .iter()
        .map(|&(i, j)| (ts.states[i].clone(), ts.states[j].clone()))
        .collect();
    transitions.sort();
    let mut labels: Vec<_> = ts
        .states
        .iter()
        .cloned()
        .zip(ts.labels.iter().cloned())
        .collect();
    labels.sort();
    Canonical {
        states,
        transitions,
        labels,
    }
}

/// Counting view of identical robots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregateSystem {
    pub shared: TransitionSystem,
    pub w0: Vec<u32>,
    pub n_robots: usize,
}

/// Convex polytope `{w : H w ≤ h}`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Polytope {
    #[serde(rename = "H")]
    pub h_mat: Vec<Vec<f64>>,
    #[serde(rename = "h")]
    pub h_vec: Vec<f64>,
}

impl Polytope {
    pub fn contains(&self, w: &[f64]) -> bool {
        self.h_mat
            .iter()
            .zip(&self.h_vec)
            .all(|(row, &b)| dot(row, w) <= b)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Affine dynamics `w(t+1) = F w(t) + G u(t) + c` with box bounds.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AffineRobot {
    #[serde(rename = "F")]
    pub f: Vec<Vec<f64>>,
    #[serde(rename = "G")]
    pub g: Vec<Vec<f64>>,
    #[serde(default)]
    pub c: Vec<f64>,
    pub init: Vec<f64>,
    pub state_bounds: Vec<(f64, f64)>,
    pub input_bounds: Vec<(f64, f64)>,
}

impl AffineRobot {
    pub fn state_dim(&self) -> usize {
        self.init.len()
    }

    pub fn input_dim(&self) -> usize {
        self.input_bounds.len()
    }

    pub fn step(&self, w: &[f64], u: &[f64]) -> Vec<f64> {
        (0..self.state_dim())
            .map(|i| {
                dot(&self.f[i], w) + dot(&self.g[i], u) + self.c.get(i).copied().unwrap_or(0.0)
            })
            .collect()
    }
}

/// Continuous-state team with polytope propositions.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousSystem {
    pub robots: Vec<AffineRobot>,
    pub atoms: BTreeMap<String, Polytope>,
    pub groups: BTreeMap<String, Vec<usize>>,
}

impl ContinuousSystem {
    pub fn n_robots(&self) -> usize {
        self.robots.len()
    }

    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.robots.is_empty() {
            out.push("continuous system has no robots".to_string());
        }
        for (n, r) in self.robots.iter().enumerate() {
            let dw = r.state_dim();
            let du = r.input_dim();
            if r.f.len() != dw || r.f.iter().any(|row| row.len() != dw) {
                out.push(format!("robot {n}: F must be {dw}x{dw}"));
            }
            if r.g.len() != dw || r.g.iter().any(|row| row.len() != du) {
                out.push(format!("robot {n}: G must be {dw}x{du}"));
            }
            if !r.c.is_empty() && r.c.len() != dw {
                out.push(format!("robot {n}: c must have length {dw}"));
            }
            if r.state_bounds.len() != dw {
                out.push(format!("robot {n}: state_bounds must have length {dw}"));
            }
            for (lo, hi) in r.state_bounds.iter().chain(&r.input_bounds) {
                if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                    out.push(format!("robot {n}: bounds must be finite with lo <= hi"));
                    break;
                }
            }
            for (k, (&x, &(lo, hi))) in r.init.iter().zip(&r.state_bounds).enumerate() {
                if x < lo || x > hi {
                    out.push(format!("robot {n}: initial state component {k} outside its box"));
                }
            }
        }
        for (a, p) in &self.atoms {
            if p.h_mat.len() != p.h_vec.len() || p.h_mat.is_empty() {
                out.push(format!("atom `{a}`: H and h must have the same nonzero row count"));
            }
            for r in &self.robots {
                if p.h_mat.iter().any(|row| row.len() != r.state_dim()) {
                    out.push(format!("atom `{a}`: row length differs from a robot's state dimension"));
                    break;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn chain3() -> TransitionSystem {
        let ap: BTreeSet<String> = ["a".to_string()].into();
        TransitionSystem::new(
            vec!["v1".into(), "v2".into(), "v3".into()],
            [(0, 1), (1, 2), (0, 0), (2, 2)],
            ap,
            vec![BTreeSet::new(), ["a".to_string()].into(), BTreeSet::new()],
        )
    }

    #[test]
    fn label_vectors() {
        let ts = chain3();
        assert_eq!(ts.label_vector("a").unwrap(), vec![0, 1, 0]);
        assert!(matches!(
            ts.label_vector("b"),
            Err(SystemError::UnknownProposition(_))
        ));
        let mut all = ts.clone();
        all.labels = vec![["a".to_string()].into(); 3];
        assert_eq!(all.label_vector("a").unwrap(), vec![1, 1, 1]);
        let mut none = ts;
        none.labels = vec![BTreeSet::new(); 3];
        assert_eq!(none.label_vector("a").unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn adjacency_orientation() {
        let ts = chain3();
        let a = ts.adjacency();
        assert_eq!(a[1][0], 1);
        assert_eq!(a[0][1], 0);
        assert_eq!(ts.successors(0), vec![0, 1]);
        assert_eq!(ts.predecessors(2), vec![1, 2]);
    }

    #[test]
    fn aggregate_counts() {
        let inst = MultiRobotInstance::homogeneous(chain3(), vec![0, 0, 1]);
        let agg = inst.aggregate_view().unwrap();
        assert_eq!(agg.w0, vec![2, 1, 0]);
        assert_eq!(agg.w0.iter().sum::<u32>() as usize, agg.n_robots);

        let mut other = chain3();
        other.labels[0].insert("a".into());
        let inst = MultiRobotInstance::new(vec![chain3(), other], vec![0, 0]);
        assert!(matches!(
            inst.aggregate_view(),
            Err(SystemError::NotIdentical(_))
        ));
    }

    #[test]
    fn validation_diagnostics() {
        assert!(MultiRobotInstance::homogeneous(chain3(), vec![0, 2])
            .validate()
            .is_empty());
        let bad_init = MultiRobotInstance::homogeneous(chain3(), vec![0, 3]);
        assert_eq!(bad_init.validate().len(), 1);
        let mut other = chain3();
        other.ap.insert("b".into());
        let mismatch = MultiRobotInstance::new(vec![chain3(), other], vec![0, 0]);
        assert_eq!(mismatch.validate().len(), 1);
    }
}
