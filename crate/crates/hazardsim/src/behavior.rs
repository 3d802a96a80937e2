//! Hazardous-behavior agents.
//!
//! Each vehicle carries a static `BehaviorProfile` and an evolving
//! `BehaviorRuntime`. Once per tick, `behavior_directive` folds them into a
//! `Directive` that modulates the baseline driving layer: a target-speed
//! factor, a headway factor, a lateral-offset target, signal compliance and a
//! control-freeze flag. All randomness comes from the vehicle's own stream.

use crate::clock::SimClock;
use crate::rng::RandomStream;
use crate::sampling;
use crate::vehicle::{BehaviorTag, ControlVector};
use thiserror::Error;

/// Rate at which a drunk/drug vehicle's commanded speed factor moves toward
/// its freshly sampled ratio, per second. A step change would demand
/// unbounded braking; this rate corresponds to about 2 m/s^2 at urban speed
/// limits, inside the comfortable-deceleration envelope.
pub const RATIO_SLEW_PER_S: f64 = 0.25;

#[derive(Debug, Error, PartialEq)]
pub enum BehaviorError {
    #[error("hold interval must satisfy 0 < lo < hi, got [{lo}, {hi})")]
    InvalidHold { lo: f64, hi: f64 },
    #[error("distraction cycle must exceed twice the maximum loss duration ({min} s), got {cycle_s} s")]
    CycleTooShort { cycle_s: f64, min: f64 },
    #[error("invalid {what} profile: {reason}")]
    InvalidProfile { what: &'static str, reason: String },
}

/// Lateral-offset parameters for crimping/occupying vehicles: a symmetric
/// two-component gaussian mixture, resampled on a uniform hold timer.
#[derive(Clone, PartialEq, Debug)]
pub struct CrimpParams {
    pub speed_factor: f64,
    /// Mixture component centers sit at plus/minus this value, m.
    pub offset_mean: f64,
    pub offset_sd: f64,
    /// Offsets are rejection-truncated to [-offset_bound, offset_bound], m.
    pub offset_bound: f64,
    pub hold_min_s: f64,
    pub hold_max_s: f64,
}

impl Default for CrimpParams {
    fn default() -> Self {
        Self {
            speed_factor: 0.8,
            offset_mean: 0.85,
            offset_sd: 0.5,
            offset_bound: 1.7,
            hold_min_s: 2.0,
            hold_max_s: 10.0,
        }
    }
}

/// Parameters for drunk/drug driving: a periodically resampled speed ratio
/// and a per-encounter probability of disregarding a red signal.
#[derive(Clone, PartialEq, Debug)]
pub struct DrunkParams {
    pub p_ignore: f64,
    pub ratio_mean: f64,
    pub ratio_sd: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub hold_min_s: f64,
    pub hold_max_s: f64,
}

impl Default for DrunkParams {
    fn default() -> Self {
        Self {
            p_ignore: 0.5,
            ratio_mean: 1.0,
            ratio_sd: 0.25,
            ratio_min: 0.5,
            ratio_max: 1.5,
            hold_min_s: 4.0,
            hold_max_s: 10.0,
        }
    }
}

/// Parameters for distracted driving: once per cycle the driver freezes the
/// current control vector for a truncated-gaussian loss duration. Between
/// losses the driver follows closer than an attentive one, failing to
/// compensate for the attention deficit.
#[derive(Clone, PartialEq, Debug)]
pub struct DistractedParams {
    pub cycle_s: f64,
    pub loss_mean_s: f64,
    pub loss_sd_s: f64,
    pub loss_min_s: f64,
    pub loss_max_s: f64,
    pub gap_factor: f64,
}

impl Default for DistractedParams {
    fn default() -> Self {
        Self {
            cycle_s: 30.0,
            loss_mean_s: 1.5,
            loss_sd_s: 0.5,
            loss_min_s: 1.0,
            loss_max_s: 3.0,
            gap_factor: 0.5,
        }
    }
}

/// Static description of one behavior kind and its distribution parameters.
#[derive(Clone, PartialEq, Debug)]
pub enum BehaviorProfile {
    Normal,
    /// Exceeds the limit by `ratio` (> 1) and keeps proportionally shorter
    /// headway.
    Speeding { ratio: f64 },
    /// Crawls at `ratio` (< 1) of the limit and keeps proportionally larger
    /// headway.
    Impeding { ratio: f64 },
    CrimpOccupy(CrimpParams),
    DrunkDrug(DrunkParams),
    Distracted(DistractedParams),
}

impl BehaviorProfile {
    pub fn tag(&self) -> BehaviorTag {
        match self {
            BehaviorProfile::Normal => BehaviorTag::Normal,
            BehaviorProfile::Speeding { .. } => BehaviorTag::Speeding,
            BehaviorProfile::Impeding { .. } => BehaviorTag::Impeding,
            BehaviorProfile::CrimpOccupy(_) => BehaviorTag::CrimpOccupy,
            BehaviorProfile::DrunkDrug(_) => BehaviorTag::DrunkDrug,
            BehaviorProfile::Distracted(_) => BehaviorTag::Distracted,
        }
    }

    pub fn default_for(tag: BehaviorTag) -> BehaviorProfile {
        match tag {
            BehaviorTag::Normal => BehaviorProfile::Normal,
            BehaviorTag::Speeding => BehaviorProfile::Speeding { ratio: 1.5 },
            BehaviorTag::Impeding => BehaviorProfile::Impeding { ratio: 0.5 },
            BehaviorTag::CrimpOccupy => BehaviorProfile::CrimpOccupy(CrimpParams::default()),
            BehaviorTag::DrunkDrug => BehaviorProfile::DrunkDrug(DrunkParams::default()),
            BehaviorTag::Distracted => BehaviorProfile::Distracted(DistractedParams::default()),
        }
    }

    pub fn validate(&self) -> Result<(), BehaviorError> {
        let bad = |what: &'static str, reason: String| {
            Err(BehaviorError::InvalidProfile { what, reason })
        };
        match self {
            BehaviorProfile::Normal => Ok(()),
            BehaviorProfile::Speeding { ratio } => {
                if *ratio > 1.0 {
                    Ok(())
                } else {
                    bad("speeding", format!("ratio must exceed 1, got {ratio}"))
                }
            }
            BehaviorProfile::Impeding { ratio } => {
                if *ratio > 0.0 && *ratio < 1.0 {
                    Ok(())
                } else {
                    bad("impeding", format!("ratio must lie in (0, 1), got {ratio}"))
                }
            }
            BehaviorProfile::CrimpOccupy(p) => {
                if !(p.offset_bound > 0.0 && p.offset_sd > 0.0) {
                    return bad("crimp_occupy", "offset bound and sd must be positive".into());
                }
                if p.offset_mean.abs() >= p.offset_bound {
                    return bad(
                        "crimp_occupy",
                        format!(
                            "offset mean {} must lie inside the bound {}",
                            p.offset_mean, p.offset_bound
                        ),
                    );
                }
                if !(p.speed_factor > 0.0) {
                    return bad("crimp_occupy", "speed factor must be positive".into());
                }
                check_hold(p.hold_min_s, p.hold_max_s)
            }
            BehaviorProfile::DrunkDrug(p) => {
                if !(0.0..=1.0).contains(&p.p_ignore) {
                    return bad(
                        "drunk_drug",
                        format!("signal-ignore probability must lie in [0, 1], got {}", p.p_ignore),
                    );
                }
                if !(p.ratio_sd > 0.0 && p.ratio_min > 0.0 && p.ratio_min < p.ratio_max) {
                    return bad("drunk_drug", "ratio bounds must satisfy 0 < min < max with sd > 0".into());
                }
                check_hold(p.hold_min_s, p.hold_max_s)
            }
            BehaviorProfile::Distracted(p) => {
                if !(p.loss_sd_s > 0.0 && p.loss_min_s > 0.0 && p.loss_min_s < p.loss_max_s) {
                    return bad("distracted", "loss bounds must satisfy 0 < min < max with sd > 0".into());
                }
                if !(p.gap_factor > 0.0) {
                    return bad("distracted", "gap factor must be positive".into());
                }
                if p.cycle_s <= 2.0 * p.loss_max_s {
                    return Err(BehaviorError::CycleTooShort {
                        cycle_s: p.cycle_s,
                        min: 2.0 * p.loss_max_s,
                    });
                }
                Ok(())
            }
        }
    }
}

fn check_hold(lo: f64, hi: f64) -> Result<(), BehaviorError> {
    if lo > 0.0 && lo < hi {
        Ok(())
    } else {
        Err(BehaviorError::InvalidHold { lo, hi })
    }
}

/// Evolving timers and sampled values of one behavior agent.
#[derive(Clone, PartialEq, Debug)]
pub struct BehaviorRuntime {
    /// When the periodically resampled quantity (offset or speed ratio)
    /// next rolls, s.
    pub next_resample_t: f64,
    pub current_offset: f64,
    /// Last sampled drunk/drug speed ratio.
    pub current_ratio: f64,
    /// Ratio actually commanded; slews toward `current_ratio`.
    pub effective_ratio: f64,
    pub freeze_until_t: f64,
    /// Control vector held during a distraction freeze.
    pub frozen_control: Option<ControlVector>,
    pub cycle_start_t: f64,
    pub loss_start_t: f64,
    pub loss_duration: f64,
    pub ignore_signals_now: bool,
    at_signal_prev: bool,
}

impl BehaviorRuntime {
    /// Fresh runtime at time `now`. Distracted profiles schedule their first
    /// loss interval immediately; periodic samplers arm to fire on the first
    /// tick.
    pub fn init(profile: &BehaviorProfile, now: f64, stream: &mut RandomStream) -> Self {
        let mut rt = BehaviorRuntime {
            next_resample_t: now,
            current_offset: 0.0,
            current_ratio: 1.0,
            effective_ratio: 1.0,
            freeze_until_t: f64::NEG_INFINITY,
            frozen_control: None,
            cycle_start_t: now,
            loss_start_t: f64::INFINITY,
            loss_duration: 0.0,
            ignore_signals_now: false,
            at_signal_prev: false,
        };
        if let BehaviorProfile::Distracted(p) = profile {
            let (start, dur) = schedule_distraction_with(stream, now, p);
            rt.loss_start_t = start;
            rt.loss_duration = dur;
        }
        rt
    }
}

/// Per-tick behavioral modulation applied on top of baseline driving.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Directive {
    /// Multiplier on the lane speed limit.
    pub target_speed_factor: f64,
    /// Multiplier on the baseline desired time gap.
    pub gap_factor: f64,
    /// Lateral offset the vehicle drifts toward, m.
    pub lateral_offset_target: f64,
    pub obey_signals: bool,
    /// Reapply the previous control vector instead of generating a new one.
    pub freeze_control: bool,
    /// Whether the vehicle yields to conflicting junction entries; aggressive
    /// lane-occupying drivers barge through instead.
    pub yields_at_junctions: bool,
}

impl Directive {
    pub const NORMAL: Directive = Directive {
        target_speed_factor: 1.0,
        gap_factor: 1.0,
        lateral_offset_target: 0.0,
        obey_signals: true,
        freeze_control: false,
        yields_at_junctions: true,
    };
}

/// Lateral-offset draw from the symmetric two-component mixture with the
/// default parameters: 0.5 N(-0.85, 0.5^2) + 0.5 N(0.85, 0.5^2), truncated to
/// [-1.7, 1.7].
pub fn sample_offset(stream: &mut RandomStream) -> f64 {
    sample_offset_with(stream, &CrimpParams::default())
}

pub(crate) fn sample_offset_with(stream: &mut RandomStream, p: &CrimpParams) -> f64 {
    loop {
        // Component choice is an explicit fair coin so the draw sequence can
        // be replayed by an independent implementation.
        let center = if stream.next_bool(0.5) {
            p.offset_mean
        } else {
            -p.offset_mean
        };
        let x = center + p.offset_sd * sampling::standard_normal(stream);
        if x > -p.offset_bound && x < p.offset_bound {
            return x;
        }
    }
}

/// Uniform hold time in `[lo, hi)` seconds between state transitions.
pub fn sample_hold(stream: &mut RandomStream, lo: f64, hi: f64) -> Result<f64, BehaviorError> {
    if !(lo > 0.0 && lo < hi) {
        return Err(BehaviorError::InvalidHold { lo, hi });
    }
    Ok(sampling::uniform_in(stream, lo, hi))
}

/// Drunk/drug speed ratio: N(1, 0.25^2) rejection-truncated to [0.5, 1.5].
pub fn sample_drunk_ratio(stream: &mut RandomStream) -> f64 {
    let p = DrunkParams::default();
    sampling::truncated_gaussian_in(stream, p.ratio_mean, p.ratio_sd, p.ratio_min, p.ratio_max)
}

/// Place one control-loss interval inside the cycle starting at
/// `cycle_start`: the duration is truncated-gaussian, the start uniform over
/// the positions that keep the whole interval strictly inside the cycle.
pub fn schedule_distraction(
    stream: &mut RandomStream,
    cycle_start: f64,
    t_cycle: f64,
) -> Result<(f64, f64), BehaviorError> {
    let p = DistractedParams {
        cycle_s: t_cycle,
        ..DistractedParams::default()
    };
    if t_cycle <= 2.0 * p.loss_max_s {
        return Err(BehaviorError::CycleTooShort {
            cycle_s: t_cycle,
            min: 2.0 * p.loss_max_s,
        });
    }
    Ok(schedule_distraction_with(stream, cycle_start, &p))
}

pub(crate) fn schedule_distraction_with(
    stream: &mut RandomStream,
    cycle_start: f64,
    p: &DistractedParams,
) -> (f64, f64) {
    let duration =
        sampling::truncated_gaussian_in(stream, p.loss_mean_s, p.loss_sd_s, p.loss_min_s, p.loss_max_s);
    let start = sampling::uniform_in(stream, cycle_start + duration, cycle_start + p.cycle_s - duration);
    (start, duration)
}

/// Turn (profile, runtime, tick context) into the tick's `Directive`,
/// updating the runtime's timers and sampled values in place.
pub fn behavior_directive(
    profile: &BehaviorProfile,
    runtime: &mut BehaviorRuntime,
    clock: &SimClock,
    at_signal: bool,
    stream: &mut RandomStream,
) -> Directive {
    let t = clock.t();
    match profile {
        BehaviorProfile::Normal => Directive::NORMAL,
        BehaviorProfile::Speeding { ratio } | BehaviorProfile::Impeding { ratio } => Directive {
            target_speed_factor: *ratio,
            gap_factor: 1.0 / ratio,
            ..Directive::NORMAL
        },
        BehaviorProfile::CrimpOccupy(p) => {
            if t >= runtime.next_resample_t {
                runtime.current_offset = sample_offset_with(stream, p);
                runtime.next_resample_t = t + sampling::uniform_in(stream, p.hold_min_s, p.hold_max_s);
            }
            Directive {
                target_speed_factor: p.speed_factor,
                lateral_offset_target: runtime.current_offset,
                // Meaningfully offset, the occupier barges junctions instead
                // of yielding.
                yields_at_junctions: runtime.current_offset.abs() < 0.5,
                ..Directive::NORMAL
            }
        }
        BehaviorProfile::DrunkDrug(p) => {
            if t >= runtime.next_resample_t {
                runtime.current_ratio = sampling::truncated_gaussian_in(
                    stream,
                    p.ratio_mean,
                    p.ratio_sd,
                    p.ratio_min,
                    p.ratio_max,
                );
                runtime.next_resample_t = t + sampling::uniform_in(stream, p.hold_min_s, p.hold_max_s);
            }
            // One compliance draw per signal encounter, latched at stop-line
            // approach; a fresh draw every tick would make any red light
            // eventually "run" regardless of the configured probability.
            if at_signal && !runtime.at_signal_prev {
                runtime.ignore_signals_now = stream.next_bool(p.p_ignore);
            } else if !at_signal {
                runtime.ignore_signals_now = false;
            }
            runtime.at_signal_prev = at_signal;
            // A driver committed to running the light does not crawl through
            // it; the commanded ratio is floored at the limit while ignoring.
            let target_ratio = if runtime.ignore_signals_now {
                runtime.current_ratio.max(1.0)
            } else {
                runtime.current_ratio
            };
            let step = RATIO_SLEW_PER_S * clock.dt;
            let delta = target_ratio - runtime.effective_ratio;
            runtime.effective_ratio += delta.clamp(-step, step);
            Directive {
                target_speed_factor: runtime.effective_ratio,
                obey_signals: !runtime.ignore_signals_now,
                ..Directive::NORMAL
            }
        }
        BehaviorProfile::Distracted(p) => {
            if t >= runtime.cycle_start_t + p.cycle_s {
                runtime.cycle_start_t += p.cycle_s;
                let (start, dur) = schedule_distraction_with(stream, runtime.cycle_start_t, p);
                runtime.loss_start_t = start;
                runtime.loss_duration = dur;
            }
            let frozen = t >= runtime.loss_start_t && t < runtime.loss_start_t + runtime.loss_duration;
            if frozen {
                runtime.freeze_until_t = runtime.loss_start_t + runtime.loss_duration;
            }
            Directive {
                freeze_control: frozen,
                gap_factor: p.gap_factor,
                ..Directive::NORMAL
            }
        }
    }
}
