//! Aggregation of recorded traces and event logs into report statistics.

use std::collections::BTreeMap;

use crate::dynamics::CollisionEvent;
use crate::vehicle::{BehaviorTag, ControlVector, VehicleId, OFFSET_BOUND_M};
use crate::world::EncounterRecord;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("total vehicle count must be positive")]
    EmptyPopulation,
    #[error("hazard count {n_hazard} exceeds total {n_total}")]
    HazardExceedsTotal { n_hazard: usize, n_total: usize },
}

/// One recorded sample of one vehicle, taken at the configured recording rate.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct TraceSample {
    pub t: f64,
    pub vehicle: VehicleId,
    pub behavior: BehaviorTag,
    pub v: f64,
    pub lateral_offset: f64,
    pub control: ControlVector,
    /// Bumper-to-bumper gap to the leader, absent when none is within
    /// sensing range.
    pub leader_gap: Option<f64>,
}

/// Aggregated statistics of one run.
#[derive(Clone, PartialEq, Debug)]
pub struct RunReport {
    pub density: usize,
    pub penetration: f64,
    pub seed: u64,
    pub duration_s: f64,
    pub penetration_rate: f64,
    /// Mean bumper-to-bumper distance per vehicle; absent without leader
    /// samples.
    pub mean_b2b: Vec<(VehicleId, Option<f64>)>,
    /// (encounters, runs) per vehicle, only for vehicles with encounters.
    pub red_light: Vec<(VehicleId, u32, u32)>,
    pub collisions_total: usize,
    pub collisions_by_behavior: BTreeMap<BehaviorTag, usize>,
    pub collisions_per_minute: f64,
}

/// Arithmetic mean of the leader gap over samples where a leader exists
/// within `sensing_range`; `None` when no sample has one.
pub fn mean_b2b_distance(samples: &[TraceSample], sensing_range: f64) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for sample in samples {
        if let Some(gap) = sample.leader_gap {
            if gap <= sensing_range {
                sum += gap;
                count += 1;
            }
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// Percentage of encounters that ended in a red-light run; `None` without
/// encounters.
pub fn red_light_ratio(encounters: &[(VehicleId, bool)]) -> Option<f64> {
    if encounters.is_empty() {
        return None;
    }
    let runs = encounters.iter().filter(|(_, ran)| *ran).count();
    Some(100.0 * runs as f64 / encounters.len() as f64)
}

/// Fraction of the population assigned a hazardous behavior.
pub fn penetration_rate(n_hazard: usize, n_total: usize) -> Result<f64, MetricsError> {
    if n_total == 0 {
        return Err(MetricsError::EmptyPopulation);
    }
    if n_hazard > n_total {
        return Err(MetricsError::HazardExceedsTotal { n_hazard, n_total });
    }
    Ok(n_hazard as f64 / n_total as f64)
}

/// Collision totals with each event attributed once to each participant's
/// behavior tag.
pub fn collision_summary(
    events: &[CollisionEvent],
    duration_s: f64,
) -> (usize, BTreeMap<BehaviorTag, usize>, f64) {
    let mut by_behavior: BTreeMap<BehaviorTag, usize> = BTreeMap::new();
    for event in events {
        *by_behavior.entry(event.behaviors.0).or_insert(0) += 1;
        *by_behavior.entry(event.behaviors.1).or_insert(0) += 1;
    }
    let per_minute = if duration_s > 0.0 {
        events.len() as f64 / (duration_s / 60.0)
    } else {
        0.0
    };
    (events.len(), by_behavior, per_minute)
}

/// Histogram of lateral offsets over [-1.7, 1.7] with the given bin width.
/// Returns (bin center, count) pairs covering the whole band.
pub fn offset_histogram(samples: &[TraceSample], bin_width: f64) -> Vec<(f64, usize)> {
    assert!(bin_width > 0.0);
    let lo = -OFFSET_BOUND_M;
    let hi = OFFSET_BOUND_M;
    let bins = ((hi - lo) / bin_width).ceil() as usize;
    let mut counts = vec![0usize; bins];
    for sample in samples {
        let idx = (((sample.lateral_offset - lo) / bin_width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + (i as f64 + 0.5) * bin_width, c))
        .collect()
}

/// Histogram of raw values over [-1.7, 1.7]; used for auditing the offset
/// sampler directly.
pub fn value_histogram(values: &[f64], bin_width: f64) -> Vec<(f64, usize)> {
    assert!(bin_width > 0.0);
    let lo = -OFFSET_BOUND_M;
    let hi = OFFSET_BOUND_M;
    let bins = ((hi - lo) / bin_width).ceil() as usize;
    let mut counts = vec![0usize; bins];
    for v in values {
        let idx = (((v - lo) / bin_width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + (i as f64 + 0.5) * bin_width, c))
        .collect()
}

/// Build the full per-run report from recorded traces and logs.
#[allow(clippy::too_many_arguments)]
pub fn build_run_report(
    density: usize,
    penetration: f64,
    seed: u64,
    duration_s: f64,
    n_hazard: usize,
    traces: &[TraceSample],
    events: &[CollisionEvent],
    encounters: &[EncounterRecord],
    sensing_range: f64,
) -> RunReport {
    let mut per_vehicle: BTreeMap<VehicleId, Vec<TraceSample>> = BTreeMap::new();
    for sample in traces {
        per_vehicle.entry(sample.vehicle).or_default().push(*sample);
    }
    let mean_b2b = per_vehicle
        .iter()
        .map(|(id, samples)| (*id, mean_b2b_distance(samples, sensing_range)))
        .collect();

    let mut red: BTreeMap<VehicleId, (u32, u32)> = BTreeMap::new();
    for rec in encounters {
        let entry = red.entry(rec.vehicle).or_insert((0, 0));
        entry.0 += 1;
        if rec.ran {
            entry.1 += 1;
        }
    }
    let red_light = red
        .into_iter()
        .map(|(id, (enc, runs))| (id, enc, runs))
        .collect();

    let (total, by_behavior, per_minute) = collision_summary(events, duration_s);
    let n_total = per_vehicle.len().max(density);
    RunReport {
        density,
        penetration,
        seed,
        duration_s,
        penetration_rate: if n_total > 0 {
            n_hazard as f64 / n_total as f64
        } else {
            0.0
        },
        mean_b2b,
        red_light,
        collisions_total: total,
        collisions_by_behavior: by_behavior,
        collisions_per_minute: per_minute,
    }
}
