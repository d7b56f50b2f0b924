//! Flat dotted-key configuration.
//!
//! Config files are plain text: one `key = value` assignment per line, `#`
//! comments, no nesting. The same keys can be overridden on the command line
//! with `--set key=value`. Precedence: built-in defaults < config file <
//! `--set` overrides < dedicated flags (`--cycles`, `--replicas`,
//! `--algorithm`).

use std::collections::BTreeMap;
use std::path::Path;

use uavsense::channel::LosMode;
use uavsense::learning::GreedyConvention;
use uavsense::protocol::{InterpolationMode, SimMode};
use uavsense::runner::{default_tasks, Algorithm, ExperimentConfig, SweepPolicy};
use uavsense::spatial::Position;
use uavsense::{Error, Result};

/// Sweep-specific settings carried alongside the experiment config.
#[derive(Debug, Clone)]
pub struct SweepSettings {
    pub policy: SweepPolicy,
    pub cycles: usize,
    pub from: u32,
    pub to: u32,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            policy: SweepPolicy::FixedHover,
            cycles: 2000,
            from: 1,
            to: 20,
        }
    }
}

/// Optional explicit inputs for the transmission-phase optimization; when
/// absent they are derived from the configured scenario.
#[derive(Debug, Clone, Default)]
pub struct OptimalSettings {
    pub p_s: Option<f64>,
    pub p_u: Option<f64>,
}

/// Fully resolved configuration: the experiment plus command-specific knobs.
#[derive(Debug, Clone, Default)]
pub struct ResolvedConfig {
    pub experiment: ExperimentConfig,
    pub sweep: SweepSettings,
    pub optimal: OptimalSettings,
    /// The flat key-value view that produced this config, for the manifest.
    pub assignments: BTreeMap<String, String>,
}

/// Parses the flat `key = value` text format.
pub fn parse_assignments(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::config(format!(
                "line {}: expected `key = value`, got `{raw}`",
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

pub fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::config(format!("cannot read config file {}: {e}", path.display()))
    })?;
    parse_assignments(&text)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("key `{key}`: cannot parse `{value}`")))
}

/// Builds the resolved config from layered assignments (later layers win).
pub fn resolve(layers: &[&BTreeMap<String, String>]) -> Result<ResolvedConfig> {
    let mut merged: BTreeMap<String, String> = BTreeMap::new();
    for layer in layers {
        for (k, v) in layer.iter() {
            merged.insert(k.clone(), v.clone());
        }
    }

    let mut cfg = ExperimentConfig::default();
    let mut sweep = SweepSettings::default();
    let mut optimal = OptimalSettings::default();

    // First pass: the UAV count and task layout shape everything else.
    if let Some(v) = merged.get("uavs.count") {
        cfg.uav_count = parse_value("uavs.count", v)?;
    }
    let distance = match merged.get("tasks.distance") {
        Some(v) => parse_value::<f64>("tasks.distance", v)?,
        None => 500.0,
    };
    cfg.tasks = default_tasks(cfg.uav_count, distance);
    let mut r_max_explicit = false;
    let mut init_overrides: BTreeMap<usize, (Option<f64>, Option<f64>, Option<f64>)> =
        BTreeMap::new();

    for (key, value) in &merged {
        match key.as_str() {
            "uavs.count" | "tasks.distance" => {}
            "uavs.subchannels" => cfg.subchannels = parse_value(key, value)?,
            "bs.height" => cfg.lattice.bs_height = parse_value(key, value)?,
            "lattice.delta" => cfg.lattice.delta = parse_value(key, value)?,
            "lattice.h_min" => cfg.lattice.h_min = parse_value(key, value)?,
            "lattice.h_max" => cfg.lattice.h_max = parse_value(key, value)?,
            "lattice.r_max" => {
                cfg.lattice.r_max = parse_value(key, value)?;
                r_max_explicit = true;
            }
            "channel.tx_power_dbm" => cfg.channel.tx_power_dbm = parse_value(key, value)?,
            "channel.noise_dbm" => cfg.channel.noise_dbm = parse_value(key, value)?,
            "channel.snr_threshold_db" => cfg.channel.snr_threshold_db = parse_value(key, value)?,
            "channel.carrier_ghz" => cfg.channel.carrier_ghz = parse_value(key, value)?,
            "channel.sensing_lambda" => cfg.channel.sensing_lambda = parse_value(key, value)?,
            "channel.los_mode" => {
                cfg.channel.los_mode = match value.as_str() {
                    "literal" => LosMode::PaperLiteralClamped,
                    "corrected" => LosMode::Tr36777Corrected,
                    other => {
                        return Err(Error::config(format!(
                            "key `channel.los_mode`: expected literal|corrected, got `{other}`"
                        )))
                    }
                }
            }
            "cycle.t_b" => cfg.schedule.t_b = parse_value(key, value)?,
            "cycle.t_s" => cfg.schedule.t_s = parse_value(key, value)?,
            "cycle.t_u" => cfg.schedule.t_u = parse_value(key, value)?,
            "cycle.frame_secs" => cfg.schedule.t_f = parse_value(key, value)?,
            "cycle.interpolation" => {
                cfg.schedule.interpolation = match value.as_str() {
                    "anchored" => InterpolationMode::ReAnchored,
                    "literal" => InterpolationMode::PaperLiteral,
                    other => {
                        return Err(Error::config(format!(
                            "key `cycle.interpolation`: expected anchored|literal, got `{other}`"
                        )))
                    }
                }
            }
            "learning.alpha_exponent" => cfg.learning.alpha_exponent = parse_value(key, value)?,
            "learning.epsilon_scale" => cfg.learning.epsilon_scale = parse_value(key, value)?,
            "learning.epsilon_decay" => cfg.learning.epsilon_decay = parse_value(key, value)?,
            "learning.discount" => cfg.learning.discount = parse_value(key, value)?,
            "learning.greedy" => {
                cfg.learning.convention = match value.as_str() {
                    "standard" => GreedyConvention::StandardEpsilonGreedy,
                    "paper" => GreedyConvention::PaperLiteral,
                    other => {
                        return Err(Error::config(format!(
                            "key `learning.greedy`: expected standard|paper, got `{other}`"
                        )))
                    }
                }
            }
            "run.algorithm" => cfg.algorithm = parse_algorithm(value)?,
            "run.cycles" => cfg.cycles = parse_value(key, value)?,
            "run.replicas" => cfg.replicas = parse_value(key, value)?,
            "run.sim_mode" => {
                cfg.sim_mode = match value.as_str() {
                    "analytic" => SimMode::AnalyticBernoulli,
                    "full" => SimMode::FullChannel,
                    other => {
                        return Err(Error::config(format!(
                            "key `run.sim_mode`: expected analytic|full, got `{other}`"
                        )))
                    }
                }
            }
            "sweep.policy" => {
                sweep.policy = match value.as_str() {
                    "fixed" => SweepPolicy::FixedHover,
                    "learned" => SweepPolicy::Learned,
                    other => {
                        return Err(Error::config(format!(
                            "key `sweep.policy`: expected fixed|learned, got `{other}`"
                        )))
                    }
                }
            }
            "sweep.cycles" => sweep.cycles = parse_value(key, value)?,
            "sweep.from" => sweep.from = parse_value(key, value)?,
            "sweep.to" => sweep.to = parse_value(key, value)?,
            "optimal.p_s" => optimal.p_s = Some(parse_value(key, value)?),
            "optimal.p_u" => optimal.p_u = Some(parse_value(key, value)?),
            _ => {
                if let Some(rest) = key.strip_prefix("task.") {
                    apply_task_override(&mut cfg.tasks, rest, key, value)?;
                } else if let Some(rest) = key.strip_prefix("init.") {
                    let (idx, axis) = split_indexed(rest, key)?;
                    let slot = init_overrides.entry(idx).or_default();
                    match axis {
                        "x" => slot.0 = Some(parse_value(key, value)?),
                        "y" => slot.1 = Some(parse_value(key, value)?),
                        "h" => slot.2 = Some(parse_value(key, value)?),
                        _ => {
                            return Err(Error::config(format!(
                                "key `{key}`: expected init.<i>.x|y|h"
                            )))
                        }
                    }
                } else {
                    return Err(Error::config(format!("unknown config key `{key}`")));
                }
            }
        }
    }

    if !r_max_explicit {
        let farthest = cfg
            .tasks
            .iter()
            .map(|t| t.horizontal_radius())
            .fold(0.0f64, f64::max);
        cfg.lattice.r_max = cfg.lattice.r_max.max(farthest);
    }

    if !init_overrides.is_empty() {
        let mut points = cfg.start_points();
        for (idx, (x, y, h)) in &init_overrides {
            if *idx >= points.len() {
                return Err(Error::config(format!(
                    "init.{idx} exceeds uavs.count {}",
                    cfg.uav_count
                )));
            }
            let current = uavsense::spatial::to_cartesian(points[*idx], &cfg.lattice)
                .map_err(|e| Error::config(format!("init.{idx}: {e}")))?;
            points[*idx] = cfg.lattice.snap(Position {
                x: x.unwrap_or(current.x),
                y: y.unwrap_or(current.y),
                h: h.unwrap_or(current.h),
            });
        }
        cfg.initial_positions = Some(points);
    }

    cfg.validate()?;
    Ok(ResolvedConfig {
        experiment: cfg,
        sweep,
        optimal,
        assignments: merged,
    })
}

pub fn parse_algorithm(value: &str) -> Result<Algorithm> {
    match value {
        "single" => Ok(Algorithm::SingleAgent),
        "opponent" => Ok(Algorithm::OpponentModeling),
        "enhanced" => Ok(Algorithm::EnhancedMultiUav),
        other => Err(Error::config(format!(
            "algorithm: expected single|opponent|enhanced, got `{other}`"
        ))),
    }
}

fn split_indexed<'a>(rest: &'a str, key: &str) -> Result<(usize, &'a str)> {
    let Some((idx, axis)) = rest.split_once('.') else {
        return Err(Error::config(format!("key `{key}`: expected <i>.<axis>")));
    };
    Ok((parse_value(key, idx)?, axis))
}

fn apply_task_override(
    tasks: &mut [Position],
    rest: &str,
    key: &str,
    value: &str,
) -> Result<()> {
    let (idx, axis) = split_indexed(rest, key)?;
    if idx >= tasks.len() {
        return Err(Error::config(format!(
            "key `{key}`: task index {idx} exceeds the task count {}",
            tasks.len()
        )));
    }
    match axis {
        "x" => tasks[idx].x = parse_value(key, value)?,
        "y" => tasks[idx].y = parse_value(key, value)?,
        _ => {
            return Err(Error::config(format!(
                "key `{key}`: expected task.<i>.x or task.<i>.y"
            )))
        }
    }
    Ok(())
}
