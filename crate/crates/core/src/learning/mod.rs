//! Decentralized tabular Q-learning trajectory designers.
//!
//! Three learners share the same cycle-level loop: observe the joint state
//! broadcast during beaconing, pick the next flying direction, collect the
//! reward at the start of the following cycle, update.
//!
//! * [`SingleAgentLearner`] keys its table on its own position only and
//!   treats the other UAVs as part of the environment.
//! * [`OpponentLearner`] keys on the joint state and joint action, learns an
//!   empirical model of the other UAVs' action profile per state, and
//!   maximizes the expected Q value under that model.
//! * [`EnhancedLearner`] additionally restricts every UAV to its reduced
//!   action set near the BS-task plane, initializes newly visited states
//!   from the analytic valid-transmission probability, and learns from that
//!   probability instead of the raw binary reward.
//!
//! All tables are sparse over visited states. Action sets are always
//! enumerated in canonical order and ties are broken uniformly at random, so
//! runs are reproducible given the exploration stream.

mod checkpoint;
mod enhanced;
mod opponent;
mod single;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointTable};
pub use enhanced::{joint_reduced_space, EnhancedLearner, JointActionSpace};
pub use opponent::{expected_q, JointQLookup, OpponentLearner, OpponentModel, SparseJointQ};
pub use single::SingleAgentLearner;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::{Action, GridPoint};
use crate::streams::Rng;

// ---------------------------------------------------------------------------
// Schedule
// ---------------------------------------------------------------------------

/// Which branch of the epsilon-greedy coin exploits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum GreedyConvention {
    /// Explore with probability `epsilon(k)`; exploration decays to zero.
    #[default]
    StandardEpsilonGreedy,
    /// Exploit with probability `epsilon(k)`, as the algorithm listings are
    /// printed; retained for literal reproduction attempts.
    PaperLiteral,
}

/// Learning-rate and exploration schedules shared by all learners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningSchedule {
    /// `alpha(k) = 1 / k^alpha_exponent`. The default 2/3 satisfies the
    /// Robbins-Monro conditions (the alpha series diverges while its squares
    /// converge).
    pub alpha_exponent: f64,
    /// `epsilon(k) = epsilon_scale * exp(-epsilon_decay * k)`.
    pub epsilon_scale: f64,
    pub epsilon_decay: f64,
    /// Discount factor in [0, 1).
    pub discount: f64,
    pub convention: GreedyConvention,
}

impl Default for LearningSchedule {
    fn default() -> Self {
        LearningSchedule {
            alpha_exponent: 2.0 / 3.0,
            epsilon_scale: 0.8,
            epsilon_decay: 0.03,
            discount: 0.9,
            convention: GreedyConvention::default(),
        }
    }
}

impl LearningSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.discount >= 0.0 && self.discount < 1.0) {
            return Err(Error::config(format!(
                "learning.discount must be in [0, 1), got {}",
                self.discount
            )));
        }
        if !(self.alpha_exponent > 0.5 && self.alpha_exponent <= 1.0) {
            return Err(Error::config(format!(
                "learning.alpha_exponent must be in (0.5, 1] for convergent learning, got {}",
                self.alpha_exponent
            )));
        }
        if self.epsilon_scale < 0.0 || self.epsilon_scale > 1.0 {
            return Err(Error::config(format!(
                "learning.epsilon_scale must be in [0, 1], got {}",
                self.epsilon_scale
            )));
        }
        if self.epsilon_decay < 0.0 {
            return Err(Error::config(format!(
                "learning.epsilon_decay must be >= 0, got {}",
                self.epsilon_decay
            )));
        }
        Ok(())
    }

    /// Learning rate for cycle `k >= 1`.
    pub fn alpha(&self, k: usize) -> f64 {
        assert!(k >= 1, "cycle index must be >= 1");
        1.0 / (k as f64).powf(self.alpha_exponent)
    }

    /// Exploration rate for cycle `k`.
    pub fn epsilon(&self, k: usize) -> f64 {
        self.epsilon_scale * (-self.epsilon_decay * k as f64).exp()
    }
}

// ---------------------------------------------------------------------------
// Joint keys
// ---------------------------------------------------------------------------

/// Positions of all UAVs at the start of a cycle, in UAV index order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JointState(pub Vec<GridPoint>);

/// Actions of all UAVs in a cycle, in UAV index order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JointAction(pub Vec<Action>);

impl JointAction {
    /// The other UAVs' actions, with `agent`'s own removed.
    pub fn others(&self, agent: usize) -> Vec<Action> {
        let mut v = self.0.clone();
        v.remove(agent);
        v
    }

    /// Reassembles a joint action from `agent`'s own action and the others'.
    pub fn from_own_and_others(agent: usize, own: Action, others: &[Action]) -> JointAction {
        let mut v = others.to_vec();
        v.insert(agent, own);
        JointAction(v)
    }
}

// ---------------------------------------------------------------------------
// Epsilon-greedy selection
// ---------------------------------------------------------------------------

/// Picks from `candidates` by their `values`, epsilon-greedily. Exploitation
/// takes the argmax with uniform tie-breaking; exploration draws uniformly.
pub(crate) fn epsilon_greedy(
    candidates: &[Action],
    values: &[f64],
    epsilon: f64,
    convention: GreedyConvention,
    rng: &mut Rng,
) -> Action {
    debug_assert_eq!(candidates.len(), values.len());
    debug_assert!(!candidates.is_empty());
    let coin: f64 = rng.gen();
    let explore = match convention {
        GreedyConvention::StandardEpsilonGreedy => coin < epsilon,
        GreedyConvention::PaperLiteral => coin >= epsilon,
    };
    if explore {
        return candidates[rng.gen_range(0..candidates.len())];
    }
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let maximizers: Vec<usize> = (0..candidates.len())
        .filter(|&i| values[i] == best)
        .collect();
    let pick = if maximizers.len() == 1 {
        maximizers[0]
    } else {
        maximizers[rng.gen_range(0..maximizers.len())]
    };
    candidates[pick]
}

/// A trajectory learner of any of the three kinds, behind one interface for
/// the experiment runner.
pub enum Learner {
    Single(SingleAgentLearner),
    Opponent(OpponentLearner),
    Enhanced(EnhancedLearner),
}

impl Learner {
    /// True when the learner initializes per-state structures on first visit
    /// and `state` has not been installed yet.
    pub fn needs_state_init(&self, state: &JointState) -> bool {
        match self {
            Learner::Enhanced(e) => !e.knows(state),
            _ => false,
        }
    }

    /// Installs a freshly visited state (enhanced learner only): the joint
    /// reduced action space and this agent's initial Q values for it, in the
    /// space's canonical order.
    pub fn install_state(&mut self, state: &JointState, space: JointActionSpace, values: Vec<f64>) {
        match self {
            Learner::Enhanced(e) => e.install_state(state, space, values),
            _ => panic!("install_state only applies to the enhanced learner"),
        }
    }

    pub fn select_action(&mut self, state: &JointState, k: usize, rng: &mut Rng) -> Action {
        match self {
            Learner::Single(l) => l.select_action(state, k, rng),
            Learner::Opponent(l) => l.select_action(state, k, rng),
            Learner::Enhanced(l) => l.select_action(state, k, rng),
        }
    }

    /// Applies one cycle's transition. For the single-agent and
    /// opponent-modeling learners `reward` is the realized binary reward; for
    /// the enhanced learner the runner passes the analytic valid-transmission
    /// probability of `(state, action)`.
    pub fn update(
        &mut self,
        state: &JointState,
        action: &JointAction,
        reward: f64,
        next_state: &JointState,
        k: usize,
    ) {
        match self {
            Learner::Single(l) => l.update(state, action, reward, next_state, k),
            Learner::Opponent(l) => l.update(state, action, reward, next_state, k),
            Learner::Enhanced(l) => l.update(state, action, reward, next_state, k),
        }
    }

    /// Largest absolute Q value currently stored, for bound checks.
    pub fn max_abs_q(&self) -> f64 {
        match self {
            Learner::Single(l) => l.max_abs_q(),
            Learner::Opponent(l) => l.max_abs_q(),
            Learner::Enhanced(l) => l.max_abs_q(),
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        match self {
            Learner::Single(l) => l.to_checkpoint(),
            Learner::Opponent(l) => l.to_checkpoint(),
            Learner::Enhanced(l) => l.to_checkpoint(),
        }
    }
}
