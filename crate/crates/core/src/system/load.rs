use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Deserialize;

use super::{
    grid_system, AffineRobot, CollisionMode, ContinuousSystem, MultiRobotInstance, Polytope,
    SystemError, TransitionSystem,
};

/// Result of reading a model file.
#[derive(Debug, Clone)]
pub enum LoadedModel {
    Discrete(MultiRobotInstance),
    Continuous(ContinuousSystem),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(default)]
    ap: Vec<String>,
    #[serde(default)]
    robots: Vec<RobotEntry>,
    #[serde(default)]
    groups: BTreeMap<String, Vec<usize>>,
    grid: Option<GridStanza>,
    #[serde(default)]
    collision: Option<CollisionField>,
    continuous: Option<ContinuousStanza>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotEntry {
    states: Option<Vec<String>>,
    transitions: Option<Vec<(usize, usize)>>,
    labels: Option<BTreeMap<String, Vec<String>>>,
    init: InitRef,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum InitRef {
    Index(usize),
    Cell((usize, usize)),
    Name(String),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CellRef {
    Index(usize),
    Xy((usize, usize)),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridStanza {
    width: usize,
    height: usize,
    #[serde(default)]
    regions: BTreeMap<String, Vec<CellRef>>,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum CollisionField {
    Off,
    #[serde(alias = "excl")]
    MutualExclusion,
    #[serde(alias = "swap")]
    MutualExclusionPlusSwap,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ContinuousStanza {
    robots: Vec<AffineRobot>,
    #[serde(default)]
    atoms: BTreeMap<String, Polytope>,
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LoadedModel, SystemError> {
    let text = std::fs::read_to_string(path)?;
    load_model_str(&text)
}

/// Parses and validates a model from JSON text.
pub fn load_model_str(text: &str) -> Result<LoadedModel, SystemError> {
    let file: ModelFile = serde_json::from_str(text)?;
    if let Some(c) = file.continuous {
        if !file.robots.is_empty() || file.grid.is_some() {
            return Err(SystemError::Schema(
                "a continuous model cannot also declare discrete robots or a grid".into(),
            ));
        }
        let sys = ContinuousSystem {
            robots: c.robots,
            atoms: c.atoms,
            groups: file.groups,
        };
        let diags = sys.validate();
        if !diags.is_empty() {
            return Err(SystemError::Invalid(diags.join("; ")));
        }
        return Ok(LoadedModel::Continuous(sys));
    }

    let ap: BTreeSet<String> = file.ap.iter().cloned().collect();
    let grid = match &file.grid {
        Some(g) => {
            let mut regions = BTreeMap::new();
            for (name, cells) in &g.regions {
                let cells = cells
                    .iter()
                    .map(|c| match *c {
                        CellRef::Index(i) => (i % g.width.max(1), i / g.width.max(1)),
                        CellRef::Xy(xy) => xy,
                    })
                    .collect();
                regions.insert(name.clone(), cells);
            }
            Some(grid_system(g.width, g.height, &regions, &ap)?)
        }
        None => None,
    };
    if file.robots.is_empty() {
        return Err(SystemError::Schema("model declares no robots".into()));
    }

    let mut systems = Vec::new();
    let mut inits = Vec::new();
    for (n, r) in file.robots.into_iter().enumerate() {
        let ts = match (&grid, r.states, r.transitions, r.labels) {
            (Some(g), None, None, None) => g.clone(),
            (Some(_), ..) => {
                return Err(SystemError::Schema(format!(
                    "robot {n}: grid robots take only `init`"
                )))
            }
            (None, Some(states), Some(transitions), labels) => {
                build_robot(n, &ap, states, transitions, labels.unwrap_or_default())?
            }
            (None, ..) => {
                return Err(SystemError::Schema(format!(
                    "robot {n}: `states` and `transitions` are required"
                )))
            }
        };
        let init = match r.init {
            InitRef::Index(i) => i,
            InitRef::Name(name) => ts.state_index(&name).ok_or_else(|| {
                SystemError::Schema(format!("robot {n}: unknown initial state `{name}`"))
            })?,
            InitRef::Cell((x, y)) => match &file.grid {
                Some(g) if x < g.width && y < g.height => y * g.width + x,
                Some(_) => {
                    return Err(SystemError::Schema(format!(
                        "robot {n}: initial cell ({x}, {y}) is off the grid"
                    )))
                }
                None => {
                    return Err(SystemError::Schema(format!(
                        "robot {n}: cell coordinates need a grid"
                    )))
                }
            },
        };
        systems.push(ts);
        inits.push(init);
    }
    let mut inst = MultiRobotInstance::new(systems, inits);
    inst.groups = file.groups;
    inst.collision = match file.collision {
        None | Some(CollisionField::Off) => CollisionMode::Off,
        Some(CollisionField::MutualExclusion) => CollisionMode::MutualExclusion,
        Some(CollisionField::MutualExclusionPlusSwap) => CollisionMode::MutualExclusionPlusSwap,
    };
    Ok(LoadedModel::Discrete(inst.validated()?))
}

fn build_robot(
    n: usize,
    ap: &BTreeSet<String>,
    states: Vec<String>,
    transitions: Vec<(usize, usize)>,
    labels: BTreeMap<String, Vec<String>>,
) -> Result<TransitionSystem, SystemError> {
    let k = states.len();
    for &(from, to) in &transitions {
        if from >= k || to >= k {
            return Err(SystemError::DanglingTransition {
                robot: n,
                from,
                to,
                n_states: k,
            });
        }
    }
    let mut sets = vec![BTreeSet::new(); k];
    for (state, props) in labels {
        let i = states
            .iter()
            .position(|s| *s == state)
            .ok_or_else(|| SystemError::UnknownState {
                robot: n,
                state: state.clone(),
            })?;
        for a in props {
            if !ap.contains(&a) {
                return Err(SystemError::UnknownLabel { robot: n, label: a });
            }
            sets[i].insert(a);
        }
    }
    Ok(TransitionSystem::new(states, transitions, ap.clone(), sets))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHAIN: &str = r#"{
        "ap": ["a"],
        "robots": [{
            "states": ["v1", "v2", "v3"],
            "transitions": [[0, 1], [1, 2], [2, 2]],
            "labels": {"v2": ["a"]},
            "init": "v1"
        }]
    }"#;

    #[test]
    fn chain_model() {
        let LoadedModel::Discrete(inst) = load_model_str(CHAIN).unwrap() else {
            panic!()
        };
        let ts = &inst.systems[0];
        assert_eq!(ts.n_states(), 3);
        assert_eq!(ts.transitions, vec![(0, 1), (1, 2), (2, 2)]);
        assert_eq!(ts.label_vector("a").unwrap(), vec![0, 1, 0]);
        assert_eq!(inst.initial_states, vec![0]);
    }

    #[test]
    fn label_on_missing_state() {
        let bad = CHAIN.replace("\"v2\": [\"a\"]", "\"v9\": [\"a\"]");
        assert!(matches!(
            load_model_str(&bad),
            Err(SystemError::UnknownState { .. })
        ));
        let bad = CHAIN.replace("[2, 2]", "[2, 3]");
        assert!(matches!(
            load_model_str(&bad),
            Err(SystemError::DanglingTransition { .. })
        ));
        let bad = CHAIN.replace("[\"a\"]}", "[\"b\"]}");
        assert!(matches!(
            load_model_str(&bad),
            Err(SystemError::UnknownLabel { .. })
        ));
    }

    #[test]
    fn grid_stanza() {
        let text = r#"{
            "grid": {"width": 10, "height": 10, "regions": {"A": [[0, 0], 11]}},
            "robots": [{"init": [0, 0]}, {"init": 99}, {"init": "c3_4"}],
            "groups": {"pair": [0, 1]},
            "collision": "excl"
        }"#;
        let LoadedModel::Discrete(inst) = load_model_str(text).unwrap() else {
            panic!()
        };
        assert_eq!(inst.systems[0].n_states(), 100);
        assert_eq!(inst.initial_states, vec![0, 99, 43]);
        assert_eq!(inst.collision, CollisionMode::MutualExclusion);
        let a = inst.systems[0].label_vector("A").unwrap();
        assert_eq!(a[0] + a[11], 2);
        assert_eq!(a.iter().map(|&x| x as usize).sum::<usize>(), 2);
    }

    #[test]
    fn continuous_stanza() {
        let text = r#"{
            "continuous": {
                "robots": [{"F": [[1]], "G": [[1]], "init": [0],
                            "state_bounds": [[-2, 2]], "input_bounds": [[-1, 1]]}],
                "atoms": {"A": {"H": [[1], [-1]], "h": [1.1, -0.9]}}
            }
        }"#;
        let LoadedModel::Continuous(sys) = load_model_str(text).unwrap() else {
            panic!()
        };
        assert_eq!(sys.robots[0].step(&[0.5], &[0.25]), vec![0.75]);
        assert!(sys.atoms["A"].contains(&[1.0]));
        assert!(!sys.atoms["A"].contains(&[0.5]));
    }
}
