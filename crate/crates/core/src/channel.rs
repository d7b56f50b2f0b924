//! Air-to-ground physical-layer math.
//!
//! Everything the protocol needs to know about the radio environment lives
//! here: the exponential probabilistic sensing model, the urban-macro
//! aerial-vehicle LoS probability and pathloss laws, height-dependent Rice
//! fading for LoS links, Rayleigh fading for NLoS links, the Marcum Q
//! function backing the Rice CDF, the per-frame uplink success probability,
//! and a stochastic sampler that realizes one frame's transmission attempt.
//!
//! Powers are configured in dBm and thresholds in dB; all internal math is
//! done in linear milliwatts. Fading coefficients follow the amplitude
//! convention: an uplink frame succeeds when the fading amplitude reaches the
//! pathloss-scaled decoding threshold.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::Position;
use crate::streams::Rng;

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// How to evaluate the LoS probability once the UAV is beyond the critical
/// radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum LosMode {
    /// `min(1, r_c/r + exp(-(r - r_c)/p_0))`. The raw sum exceeds one for a
    /// band of geometries, so the value is clamped.
    #[default]
    PaperLiteralClamped,
    /// `r_c/r + exp(-(r - r_c)/p_0) * (1 - r_c/r)`, which stays within
    /// [0, 1] without clamping.
    Tr36777Corrected,
}

/// Physical-layer constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// UAV transmit power, dBm.
    pub tx_power_dbm: f64,
    /// Receiver noise power at the BS, dBm.
    pub noise_dbm: f64,
    /// SNR decoding threshold, dB.
    pub snr_threshold_db: f64,
    /// Carrier frequency, GHz.
    pub carrier_ghz: f64,
    /// Sensing decay rate per meter of UAV-task distance per second of
    /// sensing.
    pub sensing_lambda: f64,
    pub los_mode: LosMode,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            tx_power_dbm: 10.0,
            noise_dbm: -85.0,
            snr_threshold_db: 10.0,
            carrier_ghz: 1.0,
            sensing_lambda: 1e-3,
            los_mode: LosMode::default(),
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sensing_lambda > 0.0) {
            return Err(Error::config(format!(
                "channel.sensing_lambda must be > 0, got {}",
                self.sensing_lambda
            )));
        }
        if !(self.carrier_ghz > 0.0) {
            return Err(Error::config(format!(
                "channel.carrier_ghz must be > 0, got {}",
                self.carrier_ghz
            )));
        }
        if self.tx_power_dbm <= self.noise_dbm {
            return Err(Error::config(format!(
                "channel.tx_power_dbm ({}) must exceed channel.noise_dbm ({})",
                self.tx_power_dbm, self.noise_dbm
            )));
        }
        Ok(())
    }

    pub fn tx_power_mw(&self) -> f64 {
        dbm_to_mw(self.tx_power_dbm)
    }

    pub fn noise_mw(&self) -> f64 {
        dbm_to_mw(self.noise_dbm)
    }

    pub fn snr_threshold_linear(&self) -> f64 {
        db_to_linear(self.snr_threshold_db)
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

// ---------------------------------------------------------------------------
// Sensing model
// ---------------------------------------------------------------------------

/// Probability that `duration` seconds of sensing at distance `l` from the
/// task succeed: `exp(-lambda * duration * l)`.
pub fn sensing_success_prob(l: f64, lambda: f64, duration: f64) -> Result<f64> {
    if l < 0.0 || lambda < 0.0 || duration < 0.0 {
        return Err(Error::domain(
            "sensing_success_prob",
            format!("l={l}, lambda={lambda}, duration={duration} must all be >= 0"),
        ));
    }
    Ok((-lambda * duration * l).exp())
}

// ---------------------------------------------------------------------------
// LoS probability and pathloss
// ---------------------------------------------------------------------------

/// Critical radius below which the link is always LoS, meters.
pub fn los_critical_radius(h: f64) -> f64 {
    (294.05 * h.log10() - 432.94).max(18.0)
}

fn los_decay_length(h: f64) -> f64 {
    233.98 * h.log10() - 0.95
}

/// Probability that the UAV-BS link contains a LoS component, given the
/// horizontal distance `r` and the UAV height `h`.
pub fn los_probability(r: f64, h: f64, mode: LosMode) -> f64 {
    let r_c = los_critical_radius(h);
    if r <= r_c {
        return 1.0;
    }
    let p0 = los_decay_length(h);
    let tail = (-(r - r_c) / p0).exp();
    match mode {
        LosMode::PaperLiteralClamped => (r_c / r + tail).min(1.0),
        LosMode::Tr36777Corrected => r_c / r + tail * (1.0 - r_c / r),
    }
}

/// LoS pathloss in dB. `d` is the 3-D UAV-BS distance in meters, `h` the UAV
/// height in meters, `fc` the carrier frequency in GHz.
pub fn pathloss_los(d: f64, h: f64, fc: f64) -> Result<f64> {
    check_pathloss_args(d, h, fc)?;
    Ok(30.9 + (22.25 - 0.5 * h.log10()) * d.log10() + 20.0 * fc.log10())
}

/// NLoS pathloss in dB; same arguments as [`pathloss_los`].
pub fn pathloss_nlos(d: f64, h: f64, fc: f64) -> Result<f64> {
    check_pathloss_args(d, h, fc)?;
    Ok(32.4 + (43.2 - 7.6 * h.log10()) * d.log10() + 20.0 * fc.log10())
}

fn check_pathloss_args(d: f64, h: f64, fc: f64) -> Result<()> {
    if !(d > 0.0) || !(h > 0.0) || !(fc > 0.0) {
        return Err(Error::domain(
            "pathloss",
            format!("d={d}, h={h}, fc={fc} must all be > 0"),
        ));
    }
    Ok(())
}

/// Height-dependent Rice shape parameter, linear scale:
/// `K_dB = 4.217 log10(h) + 5.787`.
pub fn rice_k_linear(h: f64) -> f64 {
    10f64.powf((4.217 * h.log10() + 5.787) / 10.0)
}

// ---------------------------------------------------------------------------
// Special functions: Bessel I0 and the Marcum Q function
// ---------------------------------------------------------------------------

/// Exponentially scaled modified Bessel function `e^-x I0(x)` for `x >= 0`.
pub fn bessel_i0e(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= 25.0 {
        return bessel_i0_series(x) * (-x).exp();
    }
    // Asymptotic series; terms fall below f64 resolution well before they
    // start diverging at this magnitude of x.
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        let k = k as f64;
        term *= (2.0 * k - 1.0).powi(2) / (8.0 * k * x);
        let next = sum + term;
        if next == sum {
            break;
        }
        sum = next;
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// Modified Bessel function `I0(x)`. Overflows to infinity for x > ~709.
pub fn bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x <= 25.0 {
        bessel_i0_series(x)
    } else {
        bessel_i0e(x) * x.exp()
    }
}

fn bessel_i0_series(x: f64) -> f64 {
    // All-positive power series; no cancellation at any magnitude.
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / ((k * k) as f64);
        let next = sum + term;
        if next == sum {
            break;
        }
        sum = next;
    }
    sum
}

/// First-order Marcum Q function `Q_1(a, b)`, absolute accuracy better than
/// 1e-10 over the full non-negative quadrant.
///
/// For moderate arguments this sums the noncentral-chi-square mixture series
/// with an explicit tail bound; the remaining Poisson mass bounds the
/// truncation error because every partial gamma survival factor lies in
/// [0, 1]. For extreme arguments, where the series weights underflow, it
/// integrates the defining integrand with the scaled Bessel function.
pub fn marcum_q1(a: f64, b: f64) -> f64 {
    debug_assert!(a >= 0.0 && b >= 0.0);
    if b == 0.0 {
        return 1.0;
    }
    if a == 0.0 {
        return (-b * b / 2.0).exp();
    }
    let lambda = a * a / 2.0;
    let y = b * b / 2.0;
    if lambda < 600.0 && y < 600.0 {
        marcum_series(lambda, y)
    } else {
        marcum_quadrature(a, b)
    }
}

fn marcum_series(lambda: f64, y: f64) -> f64 {
    let tol = 1e-14;
    let mut weight = (-lambda).exp(); // Poisson(lambda) mass at n
    let mut weight_sum = weight;
    let mut gamma_term = (-y).exp(); // e^-y y^n / n!
    let mut survival = gamma_term; // P[Gamma(n+1) > y]
    let mut q = weight * survival;
    let mut n = 0usize;
    while 1.0 - weight_sum > tol && n < 100_000 {
        n += 1;
        weight *= lambda / n as f64;
        weight_sum += weight;
        gamma_term *= y / n as f64;
        survival += gamma_term;
        q += weight * survival.min(1.0);
    }
    q.clamp(0.0, 1.0)
}

fn marcum_quadrature(a: f64, b: f64) -> f64 {
    // Q1(a,b) = int_b^inf x exp(-(x-a)^2/2) i0e(a x) dx; the Gaussian factor
    // confines the mass to a few units around x = a.
    let upper = a.max(b) + 40.0;
    if b >= upper {
        return 0.0;
    }
    let f = |x: f64| x * (-(x - a) * (x - a) / 2.0).exp() * bessel_i0e(a * x);
    adaptive_simpson(&f, b, upper, 1e-12).clamp(0.0, 1.0)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

// ---------------------------------------------------------------------------
// Fading CDFs
// ---------------------------------------------------------------------------

/// CDF of the Rice fading amplitude with total power 1 and shape `k`:
/// `1 - Q_1(sqrt(2K), x sqrt(2(K+1)))`.
pub fn rice_cdf(x: f64, k: f64) -> f64 {
    debug_assert!(x >= 0.0 && k >= 0.0);
    1.0 - marcum_q1((2.0 * k).sqrt(), x * (2.0 * (k + 1.0)).sqrt())
}

/// CDF of the unit Rayleigh fading amplitude: `1 - exp(-x^2/2)`.
pub fn rayleigh_cdf(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    -(-x * x / 2.0).exp_m1()
}

// ---------------------------------------------------------------------------
// Uplink success probability and the stochastic sampler
// ---------------------------------------------------------------------------

/// Pathloss-scaled decoding thresholds for the LoS and NLoS branches, in
/// fading-amplitude units.
fn fading_thresholds(uav: &Position, bs: &Position, params: &ChannelParams) -> Result<(f64, f64)> {
    let d = uav.distance(bs);
    let h = uav.h;
    let fc = params.carrier_ghz;
    let scale = params.noise_mw() * params.snr_threshold_linear() / params.tx_power_mw();
    let chi_los = scale * db_to_linear(pathloss_los(d, h, fc)?);
    let chi_nlos = scale * db_to_linear(pathloss_nlos(d, h, fc)?);
    Ok((chi_los, chi_nlos))
}

/// Probability that a single uplink frame from `uav` decodes at the BS.
///
/// Mixes the LoS branch (Rice fading, LoS pathloss) and the NLoS branch
/// (Rayleigh fading, NLoS pathloss) with the LoS probability of the link.
pub fn tx_success_prob(uav: &Position, bs: &Position, params: &ChannelParams) -> Result<f64> {
    let (chi_los, chi_nlos) = fading_thresholds(uav, bs, params)?;
    let r = uav.horizontal_distance(bs);
    let p_los = los_probability(r, uav.h, params.los_mode);
    let k = rice_k_linear(uav.h);
    Ok(p_los * (1.0 - rice_cdf(chi_los, k)) + (1.0 - p_los) * (1.0 - rayleigh_cdf(chi_nlos)))
}

/// Two independent standard normals from one Box-Muller transform.
fn standard_normal_pair(rng: &mut Rng) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = 2.0 * std::f64::consts::PI * u2;
    (radius * angle.cos(), radius * angle.sin())
}

/// Realizes one frame's transmission attempt: draws the LoS state, draws the
/// fading amplitude from the matching distribution, forms the received SNR
/// and compares it to the decoding threshold.
///
/// The empirical success rate converges to [`tx_success_prob`].
pub fn sample_frame_transmission(
    uav: &Position,
    bs: &Position,
    params: &ChannelParams,
    rng: &mut Rng,
) -> Result<bool> {
    let (chi_los, chi_nlos) = fading_thresholds(uav, bs, params)?;
    let r = uav.horizontal_distance(bs);
    let p_los = los_probability(r, uav.h, params.los_mode);
    if rng.gen::<f64>() < p_los {
        let k = rice_k_linear(uav.h);
        // Rice amplitude with total power 1: dominant component nu plus
        // circular scatter of variance 2 sigma^2.
        let nu = (k / (k + 1.0)).sqrt();
        let sigma = (0.5 / (k + 1.0)).sqrt();
        let (z1, z2) = standard_normal_pair(rng);
        let amp = (nu + sigma * z1).hypot(sigma * z2);
        Ok(amp >= chi_los)
    } else {
        let u: f64 = 1.0 - rng.gen::<f64>();
        let amp = (-2.0 * u.ln()).sqrt();
        Ok(amp >= chi_nlos)
    }
}
