//! Single-agent Q-learning: each UAV keys its table on its own position only
//! and treats everything else as environment noise.

use std::collections::HashMap;

use crate::spatial::{full_action_set, Action, GridPoint, LatticeConfig};
use crate::streams::Rng;

use super::{epsilon_greedy, JointAction, JointState, LearningSchedule};
use super::{Checkpoint, CheckpointTable};

pub struct SingleAgentLearner {
    agent: usize,
    lattice: LatticeConfig,
    schedule: LearningSchedule,
    q: HashMap<(GridPoint, Action), f64>,
}

impl SingleAgentLearner {
    pub fn new(agent: usize, lattice: LatticeConfig, schedule: LearningSchedule) -> Self {
        SingleAgentLearner {
            agent,
            lattice,
            schedule,
            q: HashMap::new(),
        }
    }

    pub fn agent_index(&self) -> usize {
        self.agent
    }

    pub fn q_value(&self, s: GridPoint, a: Action) -> f64 {
        self.q.get(&(s, a)).copied().unwrap_or(0.0)
    }

    fn own(&self, state: &JointState) -> GridPoint {
        state.0[self.agent]
    }

    fn best_value(&self, s: GridPoint) -> f64 {
        // The action set is never empty: hovering is always valid.
        full_action_set(s, &self.lattice)
            .iter()
            .map(|&a| self.q_value(s, a))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn select_action(&mut self, state: &JointState, k: usize, rng: &mut Rng) -> Action {
        let s = self.own(state);
        let candidates = full_action_set(s, &self.lattice);
        let values: Vec<f64> = candidates.iter().map(|&a| self.q_value(s, a)).collect();
        epsilon_greedy(
            &candidates,
            &values,
            self.schedule.epsilon(k),
            self.schedule.convention,
            rng,
        )
    }

    /// One temporal-difference backup:
    /// `Q(s,a) += alpha_k (R + rho max_a' Q(s',a') - Q(s,a))`.
    pub fn update(
        &mut self,
        state: &JointState,
        action: &JointAction,
        reward: f64,
        next_state: &JointState,
        k: usize,
    ) {
        let s = self.own(state);
        let a = action.0[self.agent];
        let alpha = self.schedule.alpha(k);
        let target = reward + self.schedule.discount * self.best_value(self.own(next_state));
        let entry = self.q.entry((s, a)).or_insert(0.0);
        *entry += alpha * (target - *entry);
    }

    pub fn max_abs_q(&self) -> f64 {
        self.q.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn table_len(&self) -> usize {
        self.q.len()
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut entries: Vec<(GridPoint, Action, f64)> =
            self.q.iter().map(|(&(s, a), &v)| (s, a, v)).collect();
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        Checkpoint {
            version: super::checkpoint::CHECKPOINT_VERSION,
            agent: self.agent,
            schedule: self.schedule,
            table: CheckpointTable::Single { entries },
        }
    }

    pub fn from_checkpoint(
        ckpt: &Checkpoint,
        lattice: LatticeConfig,
    ) -> crate::Result<SingleAgentLearner> {
        let CheckpointTable::Single { entries } = &ckpt.table else {
            return Err(crate::Error::config(
                "checkpoint does not hold a single-agent table",
            ));
        };
        let mut learner = SingleAgentLearner::new(ckpt.agent, lattice, ckpt.schedule);
        for &(s, a, v) in entries {
            learner.q.insert((s, a), v);
        }
        Ok(learner)
    }
}
