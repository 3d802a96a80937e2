//! Run-configuration document: a strict key-value format.
//!
//! Lines are `key = value`, `#` starts a comment, and `[section]` prefixes
//! the keys that follow (equivalent to writing `section.key`). Unknown keys
//! are rejected, not ignored: a typo in a distribution parameter must fail
//! loudly rather than silently invalidate an experiment. Omitted keys take
//! the defaults. Speeds are in km/h, times in seconds.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::experiment::ExperimentConfig;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: unknown section `[{name}]`")]
    UnknownSection { name: String, line: usize },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { key: String, line: usize },
    #[error("line {line}: invalid value for `{key}`: {reason}")]
    BadValue {
        key: String,
        line: usize,
        reason: String,
    },
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

const SECTIONS: [&str; 6] = [
    "network",
    "speeding",
    "impeding",
    "crimp",
    "drunk",
    "distracted",
];

/// Parse a configuration document over the defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_config_tracked(text).map(|(config, _)| config)
}

/// Like [`parse_config`], also returning the set of keys the document
/// actually set.
pub fn parse_config_tracked(
    text: &str,
) -> Result<(ExperimentConfig, BTreeSet<String>), ConfigError> {
    let mut config = ExperimentConfig::default();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut prefix = String::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        if let Some(inner) = content.strip_prefix('[') {
            let Some(name) = inner.strip_suffix(']') else {
                return Err(ConfigError::Malformed {
                    line,
                    text: content.to_string(),
                });
            };
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::UnknownSection {
                    name: name.to_string(),
                    line,
                });
            }
            prefix = name.to_string();
            continue;
        }
        let Some((raw_key, raw_value)) = content.split_once('=') else {
            return Err(ConfigError::Malformed {
                line,
                text: content.to_string(),
            });
        };
        let mut key = raw_key.trim().to_string();
        if !prefix.is_empty() && !key.contains('.') {
            key = format!("{prefix}.{key}");
        }
        if !seen.insert(key.clone()) {
            return Err(ConfigError::Duplicate { key, line });
        }
        apply(&mut config, &key, raw_value.trim(), line)?;
    }

    cross_validate(&config)?;
    Ok((config, seen))
}

fn apply(
    config: &mut ExperimentConfig,
    key: &str,
    value: &str,
    line: usize,
) -> Result<(), ConfigError> {
    let bad = |reason: String| ConfigError::BadValue {
        key: key.to_string(),
        line,
        reason,
    };
    match key {
        "density" => {
            let densities = parse_list::<usize>(value, line, key)?;
            if densities.is_empty() || densities.contains(&0) {
                return Err(bad("densities must be positive".into()));
            }
            config.densities = densities;
        }
        "penetration" => {
            let values = parse_list::<f64>(value, line, key)?;
            for p in &values {
                if !(0.0..=1.0).contains(p) {
                    return Err(bad(format!("penetration {p} outside [0, 1]")));
                }
            }
            if values.is_empty() {
                return Err(bad("at least one penetration required".into()));
            }
            config.penetrations = values;
        }
        "vehicles" => {
            let n: usize = parse_scalar(value, line, key)?;
            if n == 0 {
                return Err(bad("vehicle count must be positive".into()));
            }
            config.n_vehicles = n;
        }
        "duration" => {
            let d: f64 = parse_scalar(value, line, key)?;
            if !(d >= 0.0) {
                return Err(bad("duration must be non-negative".into()));
            }
            config.duration_s = d;
        }
        "seed" => {
            let seeds = parse_list::<u64>(value, line, key)?;
            if seeds.is_empty() {
                return Err(bad("at least one seed required".into()));
            }
            config.seeds = seeds;
        }
        "record_hz" => {
            let hz: u32 = parse_scalar(value, line, key)?;
            if hz == 0 || !20u32.is_multiple_of(hz) {
                return Err(bad(format!("{hz} Hz must divide the 20 Hz tick rate")));
            }
            config.record_hz = hz;
        }
        "sensing_range" => {
            config.sensing_range = positive(value, line, key)?;
        }
        "network.rows" => config.network.rows = at_least_one(value, line, key)?,
        "network.cols" => config.network.cols = at_least_one(value, line, key)?,
        "network.block_len" => {
            let len: f64 = parse_scalar(value, line, key)?;
            if !(len >= 50.0) {
                return Err(bad("block length must be at least 50 m".into()));
            }
            config.network.block_len = len;
        }
        "network.speed_limit_kmh" => config.network.speed_limit_kmh = positive(value, line, key)?,
        "network.lane_width" => config.network.lane_width = positive(value, line, key)?,
        "network.signal_cycle" => {
            let cycle: f64 = parse_scalar(value, line, key)?;
            if !(cycle > 6.0) {
                return Err(bad("signal cycle must exceed 6 s".into()));
            }
            config.network.signal_cycle_s = cycle;
        }
        "speeding.ratio" => {
            let r: f64 = parse_scalar(value, line, key)?;
            if !(r > 1.0) {
                return Err(bad("overspeeding ratio must exceed 1".into()));
            }
            config.behaviors.speeding_ratio = r;
        }
        "impeding.ratio" => {
            let r: f64 = parse_scalar(value, line, key)?;
            if !(r > 0.0 && r < 1.0) {
                return Err(bad("impeding ratio must lie in (0, 1)".into()));
            }
            config.behaviors.impeding_ratio = r;
        }
        "crimp.speed_factor" => config.behaviors.crimp.speed_factor = positive(value, line, key)?,
        "crimp.offset_mean" => config.behaviors.crimp.offset_mean = positive(value, line, key)?,
        "crimp.offset_sd" => config.behaviors.crimp.offset_sd = positive(value, line, key)?,
        "crimp.offset_bound" => {
            let b: f64 = positive(value, line, key)?;
            if b > crate::vehicle::OFFSET_BOUND_M {
                return Err(bad(format!(
                    "offset bound capped at {} m",
                    crate::vehicle::OFFSET_BOUND_M
                )));
            }
            config.behaviors.crimp.offset_bound = b;
        }
        "crimp.hold_min" => config.behaviors.crimp.hold_min_s = positive(value, line, key)?,
        "crimp.hold_max" => config.behaviors.crimp.hold_max_s = positive(value, line, key)?,
        "drunk.p_ignore" => {
            let p: f64 = parse_scalar(value, line, key)?;
            if !(0.0..=1.0).contains(&p) {
                return Err(bad(format!("probability {p} outside [0, 1]")));
            }
            config.behaviors.drunk.p_ignore = p;
        }
        "drunk.ratio_mean" => config.behaviors.drunk.ratio_mean = positive(value, line, key)?,
        "drunk.ratio_sd" => config.behaviors.drunk.ratio_sd = positive(value, line, key)?,
        "drunk.ratio_min" => config.behaviors.drunk.ratio_min = positive(value, line, key)?,
        "drunk.ratio_max" => config.behaviors.drunk.ratio_max = positive(value, line, key)?,
        "drunk.hold_min" => config.behaviors.drunk.hold_min_s = positive(value, line, key)?,
        "drunk.hold_max" => config.behaviors.drunk.hold_max_s = positive(value, line, key)?,
        "distracted.cycle" => config.behaviors.distracted.cycle_s = positive(value, line, key)?,
        "distracted.loss_mean" => {
            config.behaviors.distracted.loss_mean_s = positive(value, line, key)?;
        }
        "distracted.loss_sd" => {
            config.behaviors.distracted.loss_sd_s = positive(value, line, key)?;
        }
        "distracted.loss_min" => {
            config.behaviors.distracted.loss_min_s = positive(value, line, key)?;
        }
        "distracted.loss_max" => {
            config.behaviors.distracted.loss_max_s = positive(value, line, key)?;
        }
        _ => {
            return Err(ConfigError::UnknownKey {
                key: key.to_string(),
                line,
            });
        }
    }
    Ok(())
}

fn cross_validate(config: &ExperimentConfig) -> Result<(), ConfigError> {
    config
        .behaviors
        .validate()
        .map_err(|e| ConfigError::Invalid {
            key: "behavior parameters".to_string(),
            reason: e.to_string(),
        })?;
    Ok(())
}

fn parse_scalar<T: std::str::FromStr>(
    value: &str,
    line: usize,
    key: &str,
) -> Result<T, ConfigError> {
    let parsed = value.parse::<T>().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        line,
        reason: format!("cannot parse `{value}`"),
    })?;
    Ok(parsed)
}

fn positive(value: &str, line: usize, key: &str) -> Result<f64, ConfigError> {
    let v: f64 = parse_scalar(value, line, key)?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(ConfigError::BadValue {
            key: key.to_string(),
            line,
            reason: format!("`{value}` must be positive"),
        });
    }
    Ok(v)
}

fn at_least_one(value: &str, line: usize, key: &str) -> Result<usize, ConfigError> {
    let v: usize = parse_scalar(value, line, key)?;
    if v == 0 {
        return Err(ConfigError::BadValue {
            key: key.to_string(),
            line,
            reason: "must be at least 1".to_string(),
        });
    }
    Ok(v)
}

fn parse_list<T: std::str::FromStr>(
    value: &str,
    line: usize,
    key: &str,
) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(|item| parse_scalar(item.trim(), line, key))
        .collect()
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Canonical echo of a configuration: every key, defaults included, in fixed
/// order. Parsing the echo reproduces the configuration exactly.
pub fn config_echo(config: &ExperimentConfig) -> String {
    let mut out = String::new();
    let c = config;
    let _ = writeln!(out, "density = {}", join(&c.densities));
    let _ = writeln!(out, "penetration = {}", join(&c.penetrations));
    let _ = writeln!(out, "vehicles = {}", c.n_vehicles);
    let _ = writeln!(out, "duration = {}", c.duration_s);
    let _ = writeln!(out, "seed = {}", join(&c.seeds));
    let _ = writeln!(out, "record_hz = {}", c.record_hz);
    let _ = writeln!(out, "sensing_range = {}", c.sensing_range);
    let _ = writeln!(out, "[network]");
    let _ = writeln!(out, "rows = {}", c.network.rows);
    let _ = writeln!(out, "cols = {}", c.network.cols);
    let _ = writeln!(out, "block_len = {}", c.network.block_len);
    let _ = writeln!(out, "speed_limit_kmh = {}", c.network.speed_limit_kmh);
    let _ = writeln!(out, "lane_width = {}", c.network.lane_width);
    let _ = writeln!(out, "signal_cycle = {}", c.network.signal_cycle_s);
    let _ = writeln!(out, "[speeding]");
    let _ = writeln!(out, "ratio = {}", c.behaviors.speeding_ratio);
    let _ = writeln!(out, "[impeding]");
    let _ = writeln!(out, "ratio = {}", c.behaviors.impeding_ratio);
    let _ = writeln!(out, "[crimp]");
    let _ = writeln!(out, "speed_factor = {}", c.behaviors.crimp.speed_factor);
    let _ = writeln!(out, "offset_mean = {}", c.behaviors.crimp.offset_mean);
    let _ = writeln!(out, "offset_sd = {}", c.behaviors.crimp.offset_sd);
    let _ = writeln!(out, "offset_bound = {}", c.behaviors.crimp.offset_bound);
    let _ = writeln!(out, "hold_min = {}", c.behaviors.crimp.hold_min_s);
    let _ = writeln!(out, "hold_max = {}", c.behaviors.crimp.hold_max_s);
    let _ = writeln!(out, "[drunk]");
    let _ = writeln!(out, "p_ignore = {}", c.behaviors.drunk.p_ignore);
    let _ = writeln!(out, "ratio_mean = {}", c.behaviors.drunk.ratio_mean);
    let _ = writeln!(out, "ratio_sd = {}", c.behaviors.drunk.ratio_sd);
    let _ = writeln!(out, "ratio_min = {}", c.behaviors.drunk.ratio_min);
    let _ = writeln!(out, "ratio_max = {}", c.behaviors.drunk.ratio_max);
    let _ = writeln!(out, "hold_min = {}", c.behaviors.drunk.hold_min_s);
    let _ = writeln!(out, "hold_max = {}", c.behaviors.drunk.hold_max_s);
    let _ = writeln!(out, "[distracted]");
    let _ = writeln!(out, "cycle = {}", c.behaviors.distracted.cycle_s);
    let _ = writeln!(out, "loss_mean = {}", c.behaviors.distracted.loss_mean_s);
    let _ = writeln!(out, "loss_sd = {}", c.behaviors.distracted.loss_sd_s);
    let _ = writeln!(out, "loss_min = {}", c.behaviors.distracted.loss_min_s);
    let _ = writeln!(out, "loss_max = {}", c.behaviors.distracted.loss_max_s);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_yields_full_defaults() {
        let config = parse_config("").unwrap();
        assert_eq!(config, ExperimentConfig::default());
        assert_eq!(config.densities, vec![25, 50, 100, 150]);
        assert_eq!(config.penetrations, vec![0.2, 0.4, 0.6, 0.8, 1.0]);
        assert_eq!(config.seeds, vec![10]);
        assert_eq!(config.duration_s, 300.0);
    }

    #[test]
    fn dotted_keys_and_sections_are_equivalent() {
        let dotted = parse_config("speeding.ratio = 1.8").unwrap();
        let sectioned = parse_config("[speeding]\nratio = 1.8").unwrap();
        assert_eq!(dotted, sectioned);
        assert_eq!(dotted.behaviors.speeding_ratio, 1.8);
    }

    #[test]
    fn out_of_range_penetration_is_rejected() {
        let err = parse_config("penetration = 1.3").unwrap_err();
        assert!(matches!(err, ConfigError::BadValue { ref key, line: 1, .. } if key == "penetration"));
    }

    #[test]
    fn unknown_keys_are_rejected_with_line_numbers() {
        let err = parse_config("# comment\nspeeeding.ratio = 1.5").unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey {
                key: "speeeding.ratio".to_string(),
                line: 2
            }
        );
        let err = parse_config("[speding]\nratio = 1.5").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownSection { line: 1, .. }));
    }

    #[test]
    fn duplicates_and_malformed_lines_are_rejected() {
        let err = parse_config("duration = 60\nduration = 90").unwrap_err();
        assert!(matches!(err, ConfigError::Duplicate { line: 2, .. }));
        let err = parse_config("duration").unwrap_err();
        assert!(matches!(err, ConfigError::Malformed { line: 1, .. }));
    }

    #[test]
    fn cross_field_validation_runs_after_parse() {
        let err = parse_config("distracted.cycle = 5").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { .. }));
        let err = parse_config("drunk.ratio_min = 2").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { .. }));
    }

    #[test]
    fn echo_round_trips_exactly() {
        let mut config = ExperimentConfig::default();
        config.behaviors.speeding_ratio = 1.75;
        config.network.speed_limit_kmh = 40.0;
        config.seeds = vec![10, 11, 12];
        config.duration_s = 123.5;
        let echoed = parse_config(&config_echo(&config)).unwrap();
        assert_eq!(echoed, config);
    }

    #[test]
    fn comments_and_units_are_handled() {
        let text = "duration = 60  # one minute\nnetwork.speed_limit_kmh = 36\n";
        let config = parse_config(text).unwrap();
        assert_eq!(config.duration_s, 60.0);
        // 36 km/h becomes exactly 10 m/s when the network is built.
        assert_eq!(config.network.params().speed_limit, 10.0);
    }
}
