//! Concrete executions of a circuit, as produced by counterexamples.

use serde::{Deserialize, Serialize};

use crate::circuit::{lit_value, Circuit};
use crate::encode::FrameMap;
use crate::sat::Model;

/// Per-frame input and latch values; `latches[t]` is the state at frame `t`
/// and `inputs[t]` the input applied in that frame.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub inputs: Vec<Vec<bool>>,
    pub latches: Vec<Vec<bool>>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.latches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.latches.is_empty()
    }

    /// Reads frames `0..frames` of `c` from a model.
    pub fn from_model(c: &Circuit, map: &FrameMap, model: &Model, frames: usize) -> Trace {
        let read = |t: usize, node: usize| map.get(t, node).is_some_and(|v| model.lit(v));
        Trace {
            inputs: (0..frames)
                .map(|t| c.inputs().iter().map(|&n| read(t, n)).collect())
                .collect(),
            latches: (0..frames)
                .map(|t| c.latches().iter().map(|l| read(t, l.node)).collect())
                .collect(),
        }
    }

    pub fn truncate(&mut self, frames: usize) {
        self.inputs.truncate(frames);
        self.latches.truncate(frames);
    }

    /// Property value at every frame.
    pub fn property_values(&self, c: &Circuit) -> Vec<bool> {
        self.inputs
            .iter()
            .zip(&self.latches)
            .map(|(i, l)| lit_value(&c.eval(i, l), c.property()))
            .collect()
    }

    /// Whether consecutive states follow the transition function.
    pub fn follows_transitions(&self, c: &Circuit) -> bool {
        (1..self.len()).all(|t| {
            let values = c.eval(&self.inputs[t - 1], &self.latches[t - 1]);
            c.next_state(&values) == self.latches[t]
        })
    }

    /// Whether this is a counterexample: it starts in a reset state, follows
    /// the transitions, and violates the property in its last frame.
    pub fn is_counterexample(&self, c: &Circuit) -> bool {
        !self.is_empty()
            && c.is_reset_state(&self.latches[0])
            && self.follows_transitions(c)
            && self.property_values(c).last() == Some(&false)
    }

    /// Human-readable frame-by-frame rendering.
    pub fn render(&self, c: &Circuit) -> String {
        let bits = |v: &[bool]| v.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>();
        let mut s = String::new();
        for t in 0..self.len() {
            s.push_str(&format!(
                "frame {t}: latches={} inputs={}\n",
                bits(&self.latches[t]),
                bits(&self.inputs[t])
            ));
        }
        let names: Vec<String> = (0..c.latches().len()).map(|j| c.latch_label(j)).collect();
        if !names.is_empty() {
            s.push_str(&format!("latch order: {}\n", names.join(" ")));
        }
        s
    }
}
