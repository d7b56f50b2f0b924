//! Enhanced multi-UAV Q-learning: reduced action sets, analytic Q
//! initialization on first visit, and model-based rewards.

use std::collections::HashMap;

use crate::error::Result;
use crate::spatial::{reduced_action_set, Action, LatticeConfig, Position};
use crate::streams::Rng;

use super::opponent::{expected_q, JointQLookup, OpponentModel};
use super::{epsilon_greedy, Checkpoint, CheckpointTable, JointAction, JointState, LearningSchedule};

// ---------------------------------------------------------------------------
// Joint action space
// ---------------------------------------------------------------------------

/// Cartesian product of the per-UAV reduced action sets at one joint state,
/// with a canonical mixed-radix enumeration (the last UAV varies fastest).
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct JointActionSpace {
    per_uav: Vec<Vec<Action>>,
}

impl JointActionSpace {
    pub fn new(per_uav: Vec<Vec<Action>>) -> Self {
        debug_assert!(per_uav.iter().all(|set| !set.is_empty()));
        JointActionSpace { per_uav }
    }

    pub fn uav_count(&self) -> usize {
        self.per_uav.len()
    }

    /// Reduced action set of one UAV.
    pub fn own_actions(&self, agent: usize) -> &[Action] {
        &self.per_uav[agent]
    }

    /// Number of joint actions.
    pub fn len(&self) -> usize {
        self.per_uav.iter().map(|s| s.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.per_uav.is_empty()
    }

    /// Canonical index of a joint action; `None` when any component is not
    /// in its UAV's reduced set.
    pub fn index_of(&self, joint: &JointAction) -> Option<usize> {
        if joint.0.len() != self.per_uav.len() {
            return None;
        }
        let mut idx = 0usize;
        for (set, a) in self.per_uav.iter().zip(joint.0.iter()) {
            let pos = set.iter().position(|x| x == a)?;
            idx = idx * set.len() + pos;
        }
        Some(idx)
    }

    /// Joint action at a canonical index.
    pub fn at(&self, mut idx: usize) -> JointAction {
        let mut actions = vec![Action::ZERO; self.per_uav.len()];
        for (slot, set) in actions.iter_mut().zip(self.per_uav.iter()).rev() {
            *slot = set[idx % set.len()];
            idx /= set.len();
        }
        JointAction(actions)
    }

    /// All joint actions in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = JointAction> + '_ {
        (0..self.len()).map(|i| self.at(i))
    }
}

/// Reduced action sets of every UAV at `state`, each toward its own task.
pub fn joint_reduced_space(
    state: &JointState,
    tasks: &[Position],
    bs: &Position,
    lattice: &LatticeConfig,
) -> Result<JointActionSpace> {
    let mut per_uav = Vec::with_capacity(state.0.len());
    for (p, task) in state.0.iter().zip(tasks.iter()) {
        per_uav.push(reduced_action_set(*p, task, bs, lattice)?);
    }
    Ok(JointActionSpace::new(per_uav))
}

// ---------------------------------------------------------------------------
// Learner
// ---------------------------------------------------------------------------

/// Q values for one visited joint state, dense over its joint reduced action
/// space.
#[derive(Debug, Clone, PartialEq)]
struct StateQ {
    space: JointActionSpace,
    values: Vec<f64>,
}

pub struct EnhancedLearner {
    agent: usize,
    schedule: LearningSchedule,
    states: HashMap<JointState, StateQ>,
    model: OpponentModel,
}

struct StateQLookup<'a>(&'a HashMap<JointState, StateQ>);

impl JointQLookup for StateQLookup<'_> {
    fn q_value(&self, state: &JointState, action: &JointAction) -> f64 {
        self.0
            .get(state)
            .and_then(|sq| sq.space.index_of(action).map(|i| sq.values[i]))
            .unwrap_or(0.0)
    }
}

impl EnhancedLearner {
    pub fn new(agent: usize, schedule: LearningSchedule) -> Self {
        EnhancedLearner {
            agent,
            schedule,
            states: HashMap::new(),
            model: OpponentModel::new(),
        }
    }

    pub fn agent_index(&self) -> usize {
        self.agent
    }

    pub fn model(&self) -> &OpponentModel {
        &self.model
    }

    pub fn knows(&self, state: &JointState) -> bool {
        self.states.contains_key(state)
    }

    pub fn visited_states(&self) -> usize {
        self.states.len()
    }

    /// Installs a newly reached state: its joint reduced action space and
    /// this agent's initial Q values (the analytic valid-transmission
    /// probabilities), indexed in the space's canonical order.
    pub fn install_state(&mut self, state: &JointState, space: JointActionSpace, values: Vec<f64>) {
        assert_eq!(space.len(), values.len(), "initial values must cover the space");
        self.states.entry(state.clone()).or_insert(StateQ { space, values });
    }

    pub fn q_value(&self, state: &JointState, action: &JointAction) -> f64 {
        StateQLookup(&self.states).q_value(state, action)
    }

    /// The joint reduced action space installed at `state`.
    pub fn space(&self, state: &JointState) -> Option<&JointActionSpace> {
        self.states.get(state).map(|sq| &sq.space)
    }

    fn own_candidates(&self, state: &JointState) -> &[Action] {
        self.states
            .get(state)
            .expect("state must be installed before use")
            .space
            .own_actions(self.agent)
    }

    /// Value of every own candidate action at `state`, in candidate order.
    ///
    /// With opponent history, this is the expected Q under the empirical
    /// profile distribution. Without history the initialization still carries
    /// information (unlike the zero-initialized tables), so each own action
    /// is valued under a uniform prior over the opponents' reduced profiles:
    /// the mean of its Q values over the joint space.
    fn informed_values(&self, state: &JointState) -> Vec<f64> {
        let sq = self
            .states
            .get(state)
            .expect("state must be installed before use");
        let own_len = sq.space.own_actions(self.agent).len();
        if self.model.visits(state) == 0 {
            let n = sq.space.uav_count();
            // Stride of this agent's digit in the mixed-radix joint index.
            let stride: usize = (self.agent + 1..n)
                .map(|j| sq.space.own_actions(j).len())
                .product();
            let mut sums = vec![0.0f64; own_len];
            for (idx, v) in sq.values.iter().enumerate() {
                sums[(idx / stride) % own_len] += v;
            }
            let opponents = (sq.space.len() / own_len).max(1) as f64;
            sums.iter_mut().for_each(|s| *s /= opponents);
            return sums;
        }
        let lookup = StateQLookup(&self.states);
        sq.space
            .own_actions(self.agent)
            .iter()
            .map(|&a| expected_q(&lookup, &self.model, state, a, self.agent))
            .collect()
    }

    /// Best informed value over the agent's reduced candidates at `state`.
    fn best_expected(&self, state: &JointState) -> f64 {
        self.informed_values(state)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Epsilon-greedy over the agent's reduced action set, valuing each own
    /// action by its informed expected Q. The state must have been installed.
    pub fn select_action(&mut self, state: &JointState, k: usize, rng: &mut Rng) -> Action {
        let values = self.informed_values(state);
        let candidates = self.own_candidates(state);
        epsilon_greedy(
            candidates,
            &values,
            self.schedule.epsilon(k),
            self.schedule.convention,
            rng,
        )
    }

    /// Records the opponent profile and applies the joint-table backup with
    /// the model-based reward (the analytic valid-transmission probability
    /// supplied by the caller). Both `state` and `next_state` must have been
    /// installed.
    pub fn update(
        &mut self,
        state: &JointState,
        action: &JointAction,
        model_reward: f64,
        next_state: &JointState,
        k: usize,
    ) {
        debug_assert!((0.0..=1.0).contains(&model_reward));
        self.model.record(state, action.others(self.agent));
        let alpha = self.schedule.alpha(k);
        let v_next = self.best_expected(next_state);
        let sq = self
            .states
            .get_mut(state)
            .expect("state must be installed before update");
        let Some(idx) = sq.space.index_of(action) else {
            // A joint action outside the installed space means the observed
            // profile was not produced by these reduced sets; ignore it.
            return;
        };
        let old = sq.values[idx];
        sq.values[idx] =
            (1.0 - alpha) * old + alpha * (model_reward + self.schedule.discount * v_next);
    }

    pub fn max_abs_q(&self) -> f64 {
        self.states
            .values()
            .flat_map(|sq| sq.values.iter())
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut states: Vec<(JointState, JointActionSpace, Vec<f64>)> = self
            .states
            .iter()
            .map(|(s, sq)| (s.clone(), sq.space.clone(), sq.values.clone()))
            .collect();
        states.sort_by(|a, b| a.0.cmp(&b.0));
        Checkpoint {
            version: super::checkpoint::CHECKPOINT_VERSION,
            agent: self.agent,
            schedule: self.schedule,
            table: CheckpointTable::EnhancedDense {
                states,
                model: self.model.entries(),
            },
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> crate::Result<EnhancedLearner> {
        let CheckpointTable::EnhancedDense { states, model } = &ckpt.table else {
            return Err(crate::Error::config(
                "checkpoint does not hold an enhanced dense table",
            ));
        };
        let mut learner = EnhancedLearner::new(ckpt.agent, ckpt.schedule);
        for (s, space, values) in states {
            learner.install_state(s, space.clone(), values.clone());
        }
        learner.model = OpponentModel::from_entries(model);
        Ok(learner)
    }
}
