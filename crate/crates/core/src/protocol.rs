//! The sense-and-send cycle engine.
//!
//! A cycle is `t_b` beaconing frames, `t_s` sensing frames and `t_u`
//! transmission frames, each lasting `t_f` seconds. Frames are indexed
//! 1-based within the cycle. Beaconing frames exchange positions and rewards
//! but trigger no stochastic events. During sensing, success accumulates as a
//! product of per-frame exponentials of the UAV-task distance. During
//! transmission, the BS allocates the `c` uplink subchannels each frame to the
//! not-yet-done UAVs with the highest per-frame success probabilities, and
//! every allocated UAV succeeds or fails independently.
//!
//! UAVs fly in a straight line at uniform speed from their cycle-start
//! position to the destination they committed to during beaconing.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelParams};
use crate::error::{Error, Result};
use crate::spatial::Position;
use crate::streams::Rng;

// ---------------------------------------------------------------------------
// Schedule
// ---------------------------------------------------------------------------

/// How to map a frame index to a point on the start-destination segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum InterpolationMode {
    /// `start + (t - t_b)/(t_c - t_b) * (dest - start)`: the UAV is at
    /// `start` when motion begins at the end of beaconing and at `dest` at
    /// the cycle boundary.
    #[default]
    ReAnchored,
    /// `start + t/t_c * (dest - start)` as a literal fraction of the whole
    /// cycle, which leaves an offset of `t_b/t_c` of the displacement at the
    /// start of motion.
    PaperLiteral,
}

/// Frame counts of one sense-and-send cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleSchedule {
    /// Beaconing frames.
    pub t_b: u32,
    /// Sensing frames.
    pub t_s: u32,
    /// Transmission frames.
    pub t_u: u32,
    /// Frame duration, seconds.
    pub t_f: f64,
    pub interpolation: InterpolationMode,
}

impl Default for CycleSchedule {
    fn default() -> Self {
        CycleSchedule {
            t_b: 3,
            t_s: 5,
            t_u: 5,
            t_f: 0.1,
            interpolation: InterpolationMode::default(),
        }
    }
}

impl CycleSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_f > 0.0) {
            return Err(Error::config(format!(
                "cycle.frame_secs must be > 0, got {}",
                self.t_f
            )));
        }
        Ok(())
    }

    /// Total frames per cycle.
    pub fn t_c(&self) -> u32 {
        self.t_b + self.t_s + self.t_u
    }

    /// Cycle duration in seconds.
    pub fn cycle_secs(&self) -> f64 {
        self.t_c() as f64 * self.t_f
    }

    /// 1-based frame indices of the sensing phase.
    pub fn sensing_frames(&self) -> std::ops::RangeInclusive<u32> {
        self.t_b + 1..=self.t_b + self.t_s
    }

    /// 1-based frame indices of the transmission phase.
    pub fn tx_frames(&self) -> std::ops::RangeInclusive<u32> {
        self.t_b + self.t_s + 1..=self.t_c()
    }
}

/// Position of a UAV at frame `t` of the cycle, on the straight segment from
/// `start` to `dest`. Valid for `t` in `[t_b, t_c]`; earlier frames belong to
/// the beaconing phase, where the UAV still sits at `start`.
pub fn interpolate_position(
    start: &Position,
    dest: &Position,
    t: u32,
    sched: &CycleSchedule,
) -> Result<Position> {
    let t_c = sched.t_c();
    if t < sched.t_b || t > t_c {
        return Err(Error::domain(
            "interpolate_position",
            format!("frame {t} outside [{}, {t_c}]", sched.t_b),
        ));
    }
    let frac = match sched.interpolation {
        InterpolationMode::ReAnchored => {
            let span = t_c - sched.t_b;
            if span == 0 {
                0.0
            } else {
                (t - sched.t_b) as f64 / span as f64
            }
        }
        InterpolationMode::PaperLiteral => {
            if t_c == 0 {
                0.0
            } else {
                t as f64 / t_c as f64
            }
        }
    };
    Ok(Position {
        x: start.x + frac * (dest.x - start.x),
        y: start.y + frac * (dest.y - start.y),
        h: start.h + frac * (dest.h - start.h),
    })
}

// ---------------------------------------------------------------------------
// Plan: one cycle for N UAVs
// ---------------------------------------------------------------------------

/// Everything needed to evaluate or simulate one cycle: where each UAV
/// starts, where it is headed, its task, the BS, the schedule, the channel
/// and the subchannel budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryCyclePlan {
    pub bs: Position,
    pub tasks: Vec<Position>,
    pub starts: Vec<Position>,
    pub dests: Vec<Position>,
    pub schedule: CycleSchedule,
    pub channel: ChannelParams,
    /// Number of uplink subchannels available per frame.
    pub subchannels: usize,
}

impl TrajectoryCyclePlan {
    pub fn uav_count(&self) -> usize {
        self.starts.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.starts.len();
        if n == 0 {
            return Err(Error::config("plan has no UAVs"));
        }
        if self.dests.len() != n || self.tasks.len() != n {
            return Err(Error::config(format!(
                "plan field lengths disagree: starts={n}, dests={}, tasks={}",
                self.dests.len(),
                self.tasks.len()
            )));
        }
        self.schedule.validate()?;
        self.channel.validate()?;
        Ok(())
    }

    /// Position of UAV `i` at frame `t`.
    pub fn position(&self, i: usize, t: u32) -> Result<Position> {
        interpolate_position(&self.starts[i], &self.dests[i], t, &self.schedule)
    }
}

/// Per-UAV probability that the whole sensing phase succeeds, i.e. the
/// product over sensing frames of `exp(-lambda * t_f * l_i(t))`.
pub fn cycle_sensing_probs(plan: &TrajectoryCyclePlan) -> Result<Vec<f64>> {
    let lambda = plan.channel.sensing_lambda;
    let t_f = plan.schedule.t_f;
    let mut probs = Vec::with_capacity(plan.uav_count());
    for i in 0..plan.uav_count() {
        let mut p = 1.0;
        for t in plan.schedule.sensing_frames() {
            let l = plan.position(i, t)?.distance(&plan.tasks[i]);
            p *= channel::sensing_success_prob(l, lambda, t_f)?;
        }
        probs.push(p);
    }
    Ok(probs)
}

/// Per-UAV, per-transmission-frame uplink success probabilities along the
/// planned trajectories: `probs[i][j]` is the probability for UAV `i` in the
/// j-th transmission frame. Shared by the simulator and the analytic chain so
/// the two always see identical numbers.
pub fn per_frame_tx_probs(plan: &TrajectoryCyclePlan) -> Result<Vec<Vec<f64>>> {
    let mut probs = vec![Vec::with_capacity(plan.schedule.t_u as usize); plan.uav_count()];
    for t in plan.schedule.tx_frames() {
        for (i, row) in probs.iter_mut().enumerate() {
            let pos = plan.position(i, t)?;
            row.push(channel::tx_success_prob(&pos, &plan.bs, &plan.channel)?);
        }
    }
    Ok(probs)
}

// ---------------------------------------------------------------------------
// Transmission state and subchannel allocation
// ---------------------------------------------------------------------------

/// Which UAVs have already delivered their data frame this cycle. Bits only
/// ever flip from pending to done within a cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransmissionState {
    done: Vec<bool>,
}

impl TransmissionState {
    pub fn new(n: usize) -> Self {
        TransmissionState {
            done: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.done.len()
    }

    pub fn is_empty(&self) -> bool {
        self.done.is_empty()
    }

    pub fn is_done(&self, i: usize) -> bool {
        self.done[i]
    }

    pub fn mark_done(&mut self, i: usize) {
        self.done[i] = true;
    }

    pub fn pending_count(&self) -> usize {
        self.done.iter().filter(|d| !**d).count()
    }

    pub fn bits(&self) -> &[bool] {
        &self.done
    }
}

/// Which UAVs hold a subchannel in the current frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationVector {
    assigned: Vec<bool>,
}

impl AllocationVector {
    pub fn is_assigned(&self, i: usize) -> bool {
        self.assigned[i]
    }

    pub fn assigned_count(&self) -> usize {
        self.assigned.iter().filter(|a| **a).count()
    }

    pub fn bits(&self) -> &[bool] {
        &self.assigned
    }
}

/// Allocates the `c` subchannels to the not-yet-done UAVs with the highest
/// success probabilities; ties break toward the lower UAV index. When fewer
/// than `c` UAVs are still pending, all of them are assigned.
pub fn allocate_subchannels(
    tx_probs: &[f64],
    state: &TransmissionState,
    c: usize,
) -> AllocationVector {
    debug_assert_eq!(tx_probs.len(), state.len());
    let mut ranked: Vec<usize> = (0..tx_probs.len()).filter(|&i| !state.is_done(i)).collect();
    ranked.sort_by(|&a, &b| {
        tx_probs[b]
            .partial_cmp(&tx_probs[a])
            .expect("tx probability must not be NaN")
            .then(a.cmp(&b))
    });
    let mut assigned = vec![false; tx_probs.len()];
    for &i in ranked.iter().take(c) {
        assigned[i] = true;
    }
    AllocationVector { assigned }
}

// ---------------------------------------------------------------------------
// Cycle simulation
// ---------------------------------------------------------------------------

/// How transmission outcomes are realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SimMode {
    /// One Bernoulli draw per attempt at the analytic per-frame probability.
    #[default]
    AnalyticBernoulli,
    /// Full channel sampling: LoS state and fading amplitude drawn per
    /// attempt.
    FullChannel,
}

/// Outcome of one simulated cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleOutcome {
    /// Whether the whole sensing phase succeeded, per UAV.
    pub sensed_ok: Vec<bool>,
    /// Whether the data frame reached the BS within the cycle, per UAV.
    pub tx_ok: Vec<bool>,
    /// 1-based frame index of the successful transmission, where it happened.
    pub tx_frame: Vec<Option<u32>>,
}

impl CycleOutcome {
    /// A cycle counts as rewarded only when the delivered data was valid:
    /// sensing and transmission both succeeded.
    pub fn reward(&self, i: usize) -> bool {
        self.sensed_ok[i] && self.tx_ok[i]
    }
}

/// Per-frame allocation snapshot, for validation and debugging.
#[derive(Debug, Clone)]
pub struct FrameTrace {
    pub frame: u32,
    pub pending_before: usize,
    pub assigned: Vec<bool>,
}

/// Simulates one cycle and returns the per-frame allocation trace alongside
/// the outcome.
///
/// Sensing is realized as a single Bernoulli draw per UAV on the product
/// probability, which is equivalent to independent per-frame draws because a
/// cycle's sensing succeeds only if every frame does. Sensing draws and
/// channel draws come from separate streams so that changing one consumer
/// never shifts the other's sequence.
pub fn simulate_cycle_traced(
    plan: &TrajectoryCyclePlan,
    mode: SimMode,
    sensing_rng: &mut Rng,
    channel_rng: &mut Rng,
) -> Result<(CycleOutcome, Vec<FrameTrace>)> {
    plan.validate()?;
    let n = plan.uav_count();

    let sensed_ok: Vec<bool> = cycle_sensing_probs(plan)?
        .iter()
        .map(|&p| sensing_rng.gen::<f64>() < p)
        .collect();

    let probs = per_frame_tx_probs(plan)?;
    let mut state = TransmissionState::new(n);
    let mut tx_frame = vec![None; n];
    let mut trace = Vec::with_capacity(plan.schedule.t_u as usize);

    for (j, t) in plan.schedule.tx_frames().enumerate() {
        let frame_probs: Vec<f64> = (0..n).map(|i| probs[i][j]).collect();
        let alloc = allocate_subchannels(&frame_probs, &state, plan.subchannels);
        trace.push(FrameTrace {
            frame: t,
            pending_before: state.pending_count(),
            assigned: alloc.bits().to_vec(),
        });
        for i in 0..n {
            if !alloc.is_assigned(i) {
                continue;
            }
            let success = match mode {
                SimMode::AnalyticBernoulli => channel_rng.gen::<f64>() < frame_probs[i],
                SimMode::FullChannel => {
                    let pos = plan.position(i, t)?;
                    channel::sample_frame_transmission(&pos, &plan.bs, &plan.channel, channel_rng)?
                }
            };
            if success {
                state.mark_done(i);
                tx_frame[i] = Some(t);
            }
        }
    }

    let tx_ok = (0..n).map(|i| state.is_done(i)).collect();
    Ok((
        CycleOutcome {
            sensed_ok,
            tx_ok,
            tx_frame,
        },
        trace,
    ))
}

/// Simulates one full sense-and-send cycle.
pub fn simulate_cycle(
    plan: &TrajectoryCyclePlan,
    mode: SimMode,
    sensing_rng: &mut Rng,
    channel_rng: &mut Rng,
) -> Result<CycleOutcome> {
    simulate_cycle_traced(plan, mode, sensing_rng, channel_rng).map(|(outcome, _)| outcome)
}
