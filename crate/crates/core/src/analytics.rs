//! Closed-form and dynamic-programming analysis of the sense-and-send
//! protocol.
//!
//! The quantity driving everything is the probability that a UAV delivers
//! *valid* data in a cycle: the product of the cycle sensing probability and
//! the probability that the uplink succeeds within the transmission phase.
//! The uplink term accounts for subchannel contention: the per-frame
//! transmission state of all UAVs forms an absorbing chain whose absorbing
//! probability is computed exactly by dynamic programming over
//! (frame, state) pairs.
//!
//! For the symmetric case where all UAVs share the same per-frame success
//! probability, the module also evaluates the valid-transmissions-per-second
//! rate and the transmission-phase length that maximizes it, both in closed
//! form (through the lower Lambert-W branch) and by direct root-finding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{
    allocate_subchannels, cycle_sensing_probs, per_frame_tx_probs, TrajectoryCyclePlan,
    TransmissionState,
};

/// Joint-state enumeration is exponential in the UAV count; refuse beyond
/// this many UAVs.
pub const MAX_DP_UAVS: usize = 20;

// ---------------------------------------------------------------------------
// Per-cycle probabilities
// ---------------------------------------------------------------------------

/// Probability that UAV `uav` senses successfully over the whole sensing
/// phase of the planned cycle.
pub fn cycle_sensing_prob(plan: &TrajectoryCyclePlan, uav: usize) -> Result<f64> {
    plan.validate()?;
    Ok(cycle_sensing_probs(plan)?[uav])
}

/// Probability that each UAV delivers its data frame within the transmission
/// phase, accounting for subchannel contention.
pub fn uplink_success_probs(plan: &TrajectoryCyclePlan) -> Result<Vec<f64>> {
    plan.validate()?;
    uplink_success_from_tables(&per_frame_tx_probs(plan)?, plan.subchannels)
}

/// Single-UAV convenience wrapper around [`uplink_success_probs`].
pub fn uplink_success_prob(plan: &TrajectoryCyclePlan, uav: usize) -> Result<f64> {
    Ok(uplink_success_probs(plan)?[uav])
}

/// Uplink success probabilities from explicit per-frame probability tables:
/// `probs[i][j]` is UAV `i`'s success probability in the j-th transmission
/// frame, given a subchannel.
///
/// Works backward over frames. For every transmission state (a bitmask of
/// done UAVs) the frame's allocation is determined by ranking pending UAVs,
/// and the allocated UAVs' outcomes are enumerated jointly; the value of a
/// pending UAV is the probability mass of outcome branches in which it
/// eventually succeeds.
pub fn uplink_success_from_tables(probs: &[Vec<f64>], c: usize) -> Result<Vec<f64>> {
    let n = probs.len();
    if n == 0 {
        return Err(Error::config("probability table has no UAVs"));
    }
    if n > MAX_DP_UAVS {
        return Err(Error::Capacity {
            what: "uplink success DP",
            n,
            max: MAX_DP_UAVS,
        });
    }
    let t_u = probs[0].len();
    if probs.iter().any(|row| row.len() != t_u) {
        return Err(Error::config("ragged per-frame probability table"));
    }

    let masks = 1usize << n;
    // value[mask * n + i]: probability that pending UAV i succeeds from the
    // current frame onward, given the done-set `mask`. Beyond the last frame
    // everything is 0.
    let mut value = vec![0.0f64; masks * n];
    let mut next = vec![0.0f64; masks * n];

    for j in (0..t_u).rev() {
        std::mem::swap(&mut value, &mut next);
        let frame_probs: Vec<f64> = (0..n).map(|i| probs[i][j]).collect();
        for mask in 0..masks {
            let mut state = TransmissionState::new(n);
            for i in 0..n {
                if mask & (1 << i) != 0 {
                    state.mark_done(i);
                }
            }
            let alloc = allocate_subchannels(&frame_probs, &state, c);
            let allocated: Vec<usize> = (0..n).filter(|&i| alloc.is_assigned(i)).collect();

            let row = &mut value[mask * n..(mask + 1) * n];
            row.fill(0.0);
            // Enumerate the joint outcome of all allocated UAVs.
            for outcome_bits in 0..(1usize << allocated.len()) {
                let mut weight = 1.0;
                let mut next_mask = mask;
                for (b, &i) in allocated.iter().enumerate() {
                    if outcome_bits & (1 << b) != 0 {
                        weight *= frame_probs[i];
                        next_mask |= 1 << i;
                    } else {
                        weight *= 1.0 - frame_probs[i];
                    }
                }
                if weight == 0.0 {
                    continue;
                }
                let next_row = &next[next_mask * n..(next_mask + 1) * n];
                for i in 0..n {
                    if mask & (1 << i) != 0 {
                        continue; // already done before this frame
                    }
                    if next_mask & (1 << i) != 0 {
                        // i succeeded in this very frame.
                        row[i] += weight;
                    } else {
                        row[i] += weight * next_row[i];
                    }
                }
            }
        }
    }

    Ok((0..n).map(|i| value[i]).collect())
}

/// Probability of a successful *valid* data transmission in the cycle:
/// sensing succeeded and the uplink went through.
pub fn valid_tx_prob(plan: &TrajectoryCyclePlan, uav: usize) -> Result<f64> {
    Ok(cycle_sensing_prob(plan, uav)? * uplink_success_prob(plan, uav)?)
}

/// All UAVs' valid-transmission probabilities at once; one DP sweep.
pub fn valid_tx_probs(plan: &TrajectoryCyclePlan) -> Result<Vec<f64>> {
    plan.validate()?;
    let sensing = cycle_sensing_probs(plan)?;
    let uplink = uplink_success_from_tables(&per_frame_tx_probs(plan)?, plan.subchannels)?;
    Ok(sensing
        .iter()
        .zip(uplink.iter())
        .map(|(s, u)| s * u)
        .collect())
}

// ---------------------------------------------------------------------------
// Symmetric-UAV spectrum efficiency
// ---------------------------------------------------------------------------

/// Scenario in which all UAVs share the same sensing and uplink success
/// probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalentUavScenario {
    pub n: u32,
    pub c: u32,
    /// Per-cycle sensing success probability.
    pub p_s: f64,
    /// Per-frame uplink success probability of an attempt that holds a
    /// subchannel.
    pub p_u: f64,
    pub t_b: u32,
    pub t_s: u32,
    /// Frame duration, seconds.
    pub t_f: f64,
}

impl EquivalentUavScenario {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.c < 1 {
            return Err(Error::config(format!(
                "scenario needs n >= 1 and c >= 1, got n={}, c={}",
                self.n, self.c
            )));
        }
        if !(self.p_s > 0.0 && self.p_s <= 1.0) {
            return Err(Error::config(format!("p_s={} outside (0, 1]", self.p_s)));
        }
        if !(self.p_u > 0.0 && self.p_u < 1.0) {
            return Err(Error::config(format!("p_u={} outside (0, 1)", self.p_u)));
        }
        if !(self.t_f > 0.0) {
            return Err(Error::config(format!("t_f={} must be > 0", self.t_f)));
        }
        Ok(())
    }
}

/// Average number of valid data transmissions per second for a symmetric
/// scenario when the transmission phase lasts `t_u` frames:
///
/// `N p_s (1 - (1-p_u)^(C t_u / N)) / ((T_b + T_s + t_u) t_f)`.
///
/// `t_u` is real-valued so the expression can be optimized continuously.
pub fn n_vd(scn: &EquivalentUavScenario, t_u: f64) -> f64 {
    debug_assert!(t_u >= 0.0);
    if t_u == 0.0 {
        return 0.0;
    }
    let p_f = 1.0 - scn.p_u;
    let frac = 1.0 - p_f.powf(scn.c as f64 * t_u / scn.n as f64);
    scn.n as f64 * scn.p_s * frac / ((scn.t_b as f64 + scn.t_s as f64 + t_u) * scn.t_f)
}

// ---------------------------------------------------------------------------
// Lambert W, lower branch
// ---------------------------------------------------------------------------

/// Lower branch of the Lambert W function on `[-1/e, 0)`: the unique
/// `w <= -1` with `w e^w = x`.
///
/// Bracketed Newton iteration; the residual `|w e^w - x|` stays below 1e-10
/// across the domain.
pub fn lambert_w_minus1(x: f64) -> Result<f64> {
    let neg_inv_e = -(-1.0f64).exp();
    if x >= 0.0 || x < neg_inv_e * (1.0 + 1e-12) {
        return Err(Error::domain(
            "lambert_w_minus1",
            format!("x={x} outside [-1/e, 0)"),
        ));
    }
    let x = x.max(neg_inv_e);
    if x == neg_inv_e {
        return Ok(-1.0);
    }

    // Initial guess: log-log asymptote toward 0, branch-point expansion near
    // -1/e.
    let mut w = if x > -0.27 {
        let l1 = (-x).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    } else {
        let p = (2.0 * (1.0 + std::f64::consts::E * x)).sqrt();
        -1.0 - p - p * p / 3.0 - 11.0 * p * p * p / 72.0
    };

    // Bracket: f is decreasing on (-inf, -1], positive far left, <= 0 at -1.
    let f = |w: f64| w * w.exp() - x;
    let mut hi = -1.0f64;
    let mut lo = w.min(-1.5);
    while f(lo) < 0.0 {
        lo = lo * 2.0 - 1.0;
    }

    w = w.clamp(lo, hi);
    for _ in 0..200 {
        let fw = f(w);
        if fw == 0.0 {
            break;
        }
        if fw > 0.0 {
            lo = w;
        } else {
            hi = w;
        }
        let deriv = w.exp() * (1.0 + w);
        let newton = w - fw / deriv;
        let next = if deriv != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        // Run to step collapse: an absolute residual test would stop too
        // early for arguments near zero, where |w e^w| itself is tiny.
        if (next - w).abs() <= f64::EPSILON * w.abs() {
            w = next;
            break;
        }
        w = next;
    }
    Ok(w)
}

// ---------------------------------------------------------------------------
// Optimal transmission-phase duration
// ---------------------------------------------------------------------------

/// Result of the transmission-phase optimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuOptimum {
    /// Stationary point of the rate, in (real-valued) frames, from the
    /// closed form.
    pub real: f64,
    /// Independent root of the stationarity function, by bisection.
    pub root: f64,
    /// Better of floor/ceil of `real` under the rate itself.
    pub integer: u32,
    /// Stationarity function evaluated at `real`; numerically zero.
    pub residual: f64,
}

/// Stationarity function of the rate: zero exactly at the optimum.
///
/// `F(t_u) = p_f^(C t_u / N) (N - C (T_b + T_s + t_u) ln p_f) - N`.
pub fn tu_stationarity(scn: &EquivalentUavScenario, t_u: f64) -> f64 {
    let p_f = 1.0 - scn.p_u;
    let ln_pf = p_f.ln();
    let n = scn.n as f64;
    let c = scn.c as f64;
    p_f.powf(c * t_u / n) * (n - c * (scn.t_b as f64 + scn.t_s as f64 + t_u) * ln_pf) - n
}

/// Transmission-phase duration maximizing the valid-transmission rate of a
/// symmetric scenario.
///
/// The closed form follows from solving the stationarity condition
/// `F(t_u) = 0`:
///
/// `t_u* = N/(C ln p_f) * (1 + W_-1(-p_f^(C (T_b+T_s)/N) / e)) - T_b - T_s`
///
/// and is cross-validated against direct bisection on `F`; the two must
/// agree or an internal-consistency error is returned.
pub fn optimal_tu(scn: &EquivalentUavScenario) -> Result<TuOptimum> {
    scn.validate()?;
    let p_f = 1.0 - scn.p_u;
    let ln_pf = p_f.ln();
    let n = scn.n as f64;
    let c = scn.c as f64;
    let overhead = scn.t_b as f64 + scn.t_s as f64;

    let arg = -p_f.powf(c * overhead / n) / std::f64::consts::E;
    let w = lambert_w_minus1(arg)?;
    let real = n / (c * ln_pf) * (1.0 + w) - overhead;

    // Independent root of F by bisection. F(0) >= 0 and F -> -N.
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while tu_stationarity(scn, hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::domain("optimal_tu", "no sign change found for F"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tu_stationarity(scn, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);

    if (real - root).abs() > 1e-6 * root.abs().max(1.0) {
        return Err(Error::domain(
            "optimal_tu",
            format!("closed form {real} disagrees with root {root}"),
        ));
    }

    let floor = real.floor().max(0.0);
    let ceil = real.ceil().max(0.0);
    let integer = if n_vd(scn, floor) >= n_vd(scn, ceil) {
        floor as u32
    } else {
        ceil as u32
    };

    Ok(TuOptimum {
        real,
        root,
        integer,
        residual: tu_stationarity(scn, real),
    })
}
