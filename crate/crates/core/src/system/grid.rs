use std::collections::{BTreeMap, BTreeSet};

use super::{SystemError, TransitionSystem};

/// Four-neighbor grid where every cell may also stay put.
///
/// Cell `(x, y)` is state `y * width + x`, named `c{x}_{y}`. Every region name
/// becomes a proposition labeling its cells; `extra_ap` adds propositions that
/// label nothing.
pub fn grid_system(
    width: usize,
    height: usize,
    regions: &BTreeMap<String, Vec<(usize, usize)>>,
    extra_ap: &BTreeSet<String>,
) -> Result<TransitionSystem, SystemError> {
    if width == 0 || height == 0 {
        return Err(SystemError::Schema("grid must be at least 1x1".into()));
    }
    let n = width * height;
    let states = (0..n)
        .map(|i| format!("c{}_{}", i % width, i / width))
        .collect();
    let mut transitions = Vec::new();
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            transitions.push((i, i));
            if x > 0 {
                transitions.push((i, i - 1));
            }
            if x + 1 < width {
                transitions.push((i, i + 1));
            }
            if y > 0 {
                transitions.push((i, i - width));
            }
            if y + 1 < height {
                transitions.push((i, i + width));
            }
        }
    }
    let mut ap: BTreeSet<String> = extra_ap.clone();
    let mut labels = vec![BTreeSet::new(); n];
    for (name, cells) in regions {
        ap.insert(name.clone());
        for &(x, y) in cells {
            if x >= width || y >= height {
                return Err(SystemError::Schema(format!(
                    "region `{name}` cell ({x}, {y}) lies outside the {width}x{height} grid"
                )));
            }
            labels[y * width + x].insert(name.clone());
        }
    }
    Ok(TransitionSystem::new(states, transitions, ap, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_by_ten() {
        let ts = grid_system(10, 10, &BTreeMap::new(), &BTreeSet::new()).unwrap();
        assert_eq!(ts.n_states(), 100);
        for i in 0..100 {
            let k = ts.successors(i).len();
            assert!((3..=5).contains(&k), "state {i} has {k} successors");
            for j in ts.successors(i) {
                let (xi, yi) = (i % 10, i / 10);
                let (xj, yj) = (j % 10, j / 10);
                assert!(xi.abs_diff(xj) + yi.abs_diff(yj) <= 1);
            }
        }
        assert_eq!(ts.successors(0).len(), 3);
        assert_eq!(ts.successors(5).len(), 4);
        assert_eq!(ts.successors(55).len(), 5);
    }

    #[test]
    fn regions_label_cells() {
        let mut regions = BTreeMap::new();
        regions.insert("A".to_string(), vec![(0, 0), (1, 0)]);
        let ts = grid_system(2, 2, &regions, &BTreeSet::new()).unwrap();
        assert_eq!(ts.label_vector("A").unwrap(), vec![1, 1, 0, 0]);
        regions.insert("B".to_string(), vec![(2, 0)]);
        assert!(grid_system(2, 2, &regions, &BTreeSet::new()).is_err());
    }
}
