//! Opponent-modeling Q-learning over joint states and joint actions.
//!
//! Each agent counts how often the other UAVs played each action profile in
//! each joint state and exploits the action maximizing the expected Q value
//! under that empirical distribution.

use std::collections::{BTreeMap, HashMap};

use crate::spatial::{full_action_set, Action, LatticeConfig};
use crate::streams::Rng;

use super::{epsilon_greedy, JointAction, JointState, LearningSchedule};
use super::{Checkpoint, CheckpointTable};

// ---------------------------------------------------------------------------
// Opponent model
// ---------------------------------------------------------------------------

/// Per-state visit counts of the other agents' action profiles. Ordered maps
/// keep every summation order deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OpponentModel {
    states: BTreeMap<JointState, StateCounts>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct StateCounts {
    visits: u64,
    profiles: BTreeMap<Vec<Action>, u64>,
}

impl OpponentModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, state: &JointState, others: Vec<Action>) {
        let entry = self.states.entry(state.clone()).or_default();
        entry.visits += 1;
        *entry.profiles.entry(others).or_insert(0) += 1;
    }

    /// Number of times `state` has been visited.
    pub fn visits(&self, state: &JointState) -> u64 {
        self.states.get(state).map_or(0, |s| s.visits)
    }

    /// Recorded opponent profiles and counts, in deterministic order.
    pub fn profiles(&self, state: &JointState) -> impl Iterator<Item = (&Vec<Action>, u64)> {
        self.states
            .get(state)
            .into_iter()
            .flat_map(|s| s.profiles.iter().map(|(a, &c)| (a, c)))
    }

    /// All (state, profile, count) triples sorted, for checkpoints.
    pub fn entries(&self) -> Vec<(JointState, Vec<Action>, u64)> {
        self.states
            .iter()
            .flat_map(|(s, counts)| {
                counts
                    .profiles
                    .iter()
                    .map(move |(a, &c)| (s.clone(), a.clone(), c))
            })
            .collect()
    }

    pub fn from_entries(entries: &[(JointState, Vec<Action>, u64)]) -> Self {
        let mut model = OpponentModel::new();
        for (s, a, c) in entries {
            let st = model.states.entry(s.clone()).or_default();
            st.visits += c;
            *st.profiles.entry(a.clone()).or_insert(0) += c;
        }
        model
    }
}

// ---------------------------------------------------------------------------
// Joint Q tables
// ---------------------------------------------------------------------------

/// Anything that can answer "what is Q(s, a)?" for joint keys, with unvisited
/// entries reading as their initialization value.
pub trait JointQLookup {
    fn q_value(&self, state: &JointState, action: &JointAction) -> f64;
}

/// Sparse joint table: entries exist only for updated pairs, defaulting to 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseJointQ {
    states: HashMap<JointState, HashMap<JointAction, f64>>,
}

impl SparseJointQ {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, state: &JointState, action: &JointAction, value: f64) {
        self.states
            .entry(state.clone())
            .or_default()
            .insert(action.clone(), value);
    }

    pub fn len(&self) -> usize {
        self.states.values().map(|m| m.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.states
            .values()
            .flat_map(|m| m.values())
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Sorted (state, action, value) triples for checkpoints.
    pub fn entries(&self) -> Vec<(JointState, JointAction, f64)> {
        let mut out: Vec<_> = self
            .states
            .iter()
            .flat_map(|(s, m)| m.iter().map(move |(a, &v)| (s.clone(), a.clone(), v)))
            .collect();
        out.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));
        out
    }

    pub fn from_entries(entries: &[(JointState, JointAction, f64)]) -> Self {
        let mut q = SparseJointQ::new();
        for (s, a, v) in entries {
            q.set(s, a, *v);
        }
        q
    }
}

impl JointQLookup for SparseJointQ {
    fn q_value(&self, state: &JointState, action: &JointAction) -> f64 {
        self.states
            .get(state)
            .and_then(|m| m.get(action))
            .copied()
            .unwrap_or(0.0)
    }
}

/// Expected Q value of playing `own` in `state`, averaging the joint Q over
/// the empirical distribution of the other agents' profiles:
/// `sum_a'' Phi(s, a'') / n(s) * Q(s, (own, a''))`.
///
/// Zero when the state has never been visited (no information).
pub fn expected_q(
    q: &impl JointQLookup,
    model: &OpponentModel,
    state: &JointState,
    own: Action,
    agent: usize,
) -> f64 {
    let n = model.visits(state);
    if n == 0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (others, count) in model.profiles(state) {
        let joint = JointAction::from_own_and_others(agent, own, others);
        acc += count as f64 / n as f64 * q.q_value(state, &joint);
    }
    acc
}

// ---------------------------------------------------------------------------
// Learner
// ---------------------------------------------------------------------------

pub struct OpponentLearner {
    agent: usize,
    lattice: LatticeConfig,
    schedule: LearningSchedule,
    q: SparseJointQ,
    model: OpponentModel,
}

impl OpponentLearner {
    pub fn new(agent: usize, lattice: LatticeConfig, schedule: LearningSchedule) -> Self {
        OpponentLearner {
            agent,
            lattice,
            schedule,
            q: SparseJointQ::new(),
            model: OpponentModel::new(),
        }
    }

    pub fn agent_index(&self) -> usize {
        self.agent
    }

    pub fn model(&self) -> &OpponentModel {
        &self.model
    }

    pub fn q_table(&self) -> &SparseJointQ {
        &self.q
    }

    fn candidates(&self, state: &JointState) -> Vec<Action> {
        full_action_set(state.0[self.agent], &self.lattice)
    }

    /// Expected value of the best own action at `state` under the current
    /// model; 0 for never-visited states.
    fn best_expected(&self, state: &JointState) -> f64 {
        if self.model.visits(state) == 0 {
            return 0.0;
        }
        self.candidates(state)
            .iter()
            .map(|&a| expected_q(&self.q, &self.model, state, a, self.agent))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn select_action(&mut self, state: &JointState, k: usize, rng: &mut Rng) -> Action {
        let candidates = self.candidates(state);
        let values: Vec<f64> = candidates
            .iter()
            .map(|&a| expected_q(&self.q, &self.model, state, a, self.agent))
            .collect();
        epsilon_greedy(
            &candidates,
            &values,
            self.schedule.epsilon(k),
            self.schedule.convention,
            rng,
        )
    }

    /// Records the observed opponent profile, then applies
    /// `Q(s,a) = (1-alpha) Q(s,a) + alpha (R + rho V(s'))` with
    /// `V(s') = max_a'' E[Q(s', (a'', .))]` under the updated model.
    pub fn update(
        &mut self,
        state: &JointState,
        action: &JointAction,
        reward: f64,
        next_state: &JointState,
        k: usize,
    ) {
        self.model.record(state, action.others(self.agent));
        let alpha = self.schedule.alpha(k);
        let v_next = self.best_expected(next_state);
        let old = self.q.q_value(state, action);
        let new = (1.0 - alpha) * old + alpha * (reward + self.schedule.discount * v_next);
        self.q.set(state, action, new);
    }

    pub fn max_abs_q(&self) -> f64 {
        self.q.max_abs()
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: super::checkpoint::CHECKPOINT_VERSION,
            agent: self.agent,
            schedule: self.schedule,
            table: CheckpointTable::Joint {
                entries: self.q.entries(),
                model: self.model.entries(),
            },
        }
    }

    pub fn from_checkpoint(
        ckpt: &Checkpoint,
        lattice: LatticeConfig,
    ) -> crate::Result<OpponentLearner> {
        let CheckpointTable::Joint { entries, model } = &ckpt.table else {
            return Err(crate::Error::config(
                "checkpoint does not hold an opponent-modeling table",
            ));
        };
        Ok(OpponentLearner {
            agent: ckpt.agent,
            lattice,
            schedule: ckpt.schedule,
            q: SparseJointQ::from_entries(entries),
            model: OpponentModel::from_entries(model),
        })
    }
}
