//! Prefix-suffix (lasso) trajectories.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::system::TransitionSystem;

/// States `s₀ … s_h` with `s_h = s_l`, read as `s₀ … s_{l−1} (s_l … s_{h−1})^ω`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LassoTrajectory {
    pub states: Vec<usize>,
    pub loop_start: usize,
}

impl LassoTrajectory {
    pub fn new(states: Vec<usize>, loop_start: usize) -> Self {
        LassoTrajectory { states, loop_start }
    }

    /// Index of the closing state, `h`.
    pub fn horizon(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn period(&self) -> usize {
        self.horizon() - self.loop_start
    }

    /// Position in `0..h` that time `t` of the ω-expansion maps to.
    pub fn position(&self, t: usize) -> usize {
        let (h, l) = (self.horizon(), self.loop_start);
        if t < h {
            t
        } else {
            l + (t - l) % (h - l)
        }
    }

    pub fn state_at(&self, t: usize) -> usize {
        self.states[self.position(t)]
    }

    /// Checks the lasso shape and that every step is a transition of `ts`.
    pub fn check(&self, ts: &TransitionSystem) -> Result<(), String> {
        let h = self.horizon();
        if h == 0 {
            return Err("a lasso needs at least two states".into());
        }
        if self.loop_start >= h {
            return Err(format!("loop start {} is not below {h}", self.loop_start));
        }
        if self.states[h] != self.states[self.loop_start] {
            return Err(format!(
                "state {h} ({}) differs from loop start state ({})",
                self.states[h], self.states[self.loop_start]
            ));
        }
        for (t, w) in self.states.windows(2).enumerate() {
            if !ts.has_edge(w[0], w[1]) {
                return Err(format!("no transition {} -> {} at step {t}", w[0], w[1]));
            }
        }
        Ok(())
    }

    pub fn labeled(&self, ts: &TransitionSystem) -> LabeledLasso {
        LabeledLasso {
            labels: ts.trace(&self.states[..self.horizon()]),
            loop_start: self.loop_start,
        }
    }
}

/// A lasso over label sets: positions `0..len`, position `len` is `loop_start`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledLasso {
    pub labels: Vec<BTreeSet<String>>,
    pub loop_start: usize,
}

impl LabeledLasso {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn succ(&self, p: usize) -> usize {
        if p + 1 < self.len() {
            p + 1
        } else {
            self.loop_start
        }
    }

    pub fn position(&self, t: usize) -> usize {
        let (h, l) = (self.len(), self.loop_start);
        if t < h {
            t
        } else {
            l + (t - l) % (h - l)
        }
    }

    /// The suffix starting at time `t`, again as a lasso.
    pub fn shifted(&self, t: usize) -> LabeledLasso {
        let p = self.position(t);
        if p < self.loop_start {
            return LabeledLasso {
                labels: self.labels[p..].to_vec(),
                loop_start: self.loop_start - p,
            };
        }
        // inside the loop: rotate it so it starts at p
        let mut labels = self.labels[p..].to_vec();
        labels.extend_from_slice(&self.labels[self.loop_start..p]);
        LabeledLasso { labels, loop_start: 0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_wrap_into_the_loop() {
        let t = LassoTrajectory::new(vec![0, 1, 2, 3, 2], 2);
        assert_eq!(t.period(), 2);
        let seen: Vec<_> = (0..8).map(|k| t.state_at(k)).collect();
        assert_eq!(seen, vec![0, 1, 2, 3, 2, 3, 2, 3]);
    }

    #[test]
    fn shifting_keeps_the_omega_word() {
        let word: Vec<BTreeSet<String>> = (0..5).map(|i| [i.to_string()].into_iter().collect()).collect();
        let l = LabeledLasso { labels: word, loop_start: 2 };
        for t in 0..9 {
            let s = l.shifted(t);
            for k in 0..12 {
                assert_eq!(s.labels[s.position(k)], l.labels[l.position(t + k)], "t = {t}, k = {k}");
            }
        }
    }
}
