//! Frame-level simulator and analytic toolkit for cellular UAV real-time
//! sensing networks.
//!
//! UAVs repeat a fixed *sense-and-send cycle*: a beaconing phase in which
//! positions and rewards are exchanged through the base station, a sensing
//! phase in which each UAV samples its task, and a transmission phase in
//! which the UAVs compete for a limited number of uplink subchannels to
//! deliver the collected data. The crate provides:
//!
//! * [`spatial`] — the discrete lattice of UAV positions and the full /
//!   reduced action sets used by the learners;
//! * [`channel`] — air-to-ground channel math: LoS probability, pathloss,
//!   Rice/Rayleigh fading CDFs, the Marcum Q function, per-frame uplink
//!   success probabilities and a stochastic channel sampler;
//! * [`protocol`] — the cycle engine: subchannel allocation, per-cycle
//!   position interpolation and stochastic simulation of one full cycle;
//! * [`analytics`] — closed-form and dynamic-programming analysis of the
//!   protocol: cycle sensing probability, uplink success probability via the
//!   per-frame transmission-state chain, valid-data probability, the
//!   spectrum-efficiency rate and the optimal transmission-phase duration;
//! * [`learning`] — three decentralized tabular Q-learning trajectory
//!   designers (single-agent, opponent-modeling, enhanced);
//! * [`runner`] — experiment orchestration, seeding and Monte Carlo
//!   validation oracles;
//! * [`stats`] — the small statistical helpers shared by the validation
//!   harness and the experiment reports.

pub mod analytics;
pub mod channel;
pub mod error;
pub mod learning;
pub mod protocol;
pub mod runner;
pub mod spatial;
pub mod stats;
pub mod streams;

pub use error::{Error, Result};
