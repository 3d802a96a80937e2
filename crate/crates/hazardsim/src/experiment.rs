//! Experiment drivers: scenario assembly, single recorded runs, the
//! single-behavior validation design, and the traffic-density x
//! hazard-penetration grid.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::behavior::{
    BehaviorError, BehaviorProfile, CrimpParams, DistractedParams, DrunkParams,
};
use crate::dynamics::{CollisionEvent, FollowParams};
use crate::metrics::{build_run_report, mean_b2b_distance, red_light_ratio, RunReport, TraceSample};
use crate::network::{build_network_with, NetworkError, NetworkParams};
use crate::rng::{stream_keys, RandomStream};
use crate::vehicle::{BehaviorTag, VehicleId};
use crate::world::{EncounterRecord, FreezeSpan, World, DT_S};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("density {density} exceeds the network spawn capacity of {capacity}")]
    DensityExceedsCapacity { density: usize, capacity: usize },
    #[error("recording rate {hz} Hz must divide the {tick_hz} Hz tick rate")]
    BadRecordRate { hz: u32, tick_hz: u32 },
    #[error("validation requires one of the five hazard kinds, got {kind}")]
    NotAHazard { kind: BehaviorTag },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
}

/// Parameter block for the five hazard profiles.
#[derive(Clone, PartialEq, Debug)]
pub struct BehaviorConfig {
    pub speeding_ratio: f64,
    pub impeding_ratio: f64,
    pub crimp: CrimpParams,
    pub drunk: DrunkParams,
    pub distracted: DistractedParams,
}

impl Default for BehaviorConfig {
    fn default() -> Self {
        Self {
            speeding_ratio: 1.5,
            impeding_ratio: 0.5,
            crimp: CrimpParams::default(),
            drunk: DrunkParams::default(),
            distracted: DistractedParams::default(),
        }
    }
}

impl BehaviorConfig {
    pub fn profile_for(&self, tag: BehaviorTag) -> BehaviorProfile {
        match tag {
            BehaviorTag::Normal => BehaviorProfile::Normal,
            BehaviorTag::Speeding => BehaviorProfile::Speeding {
                ratio: self.speeding_ratio,
            },
            BehaviorTag::Impeding => BehaviorProfile::Impeding {
                ratio: self.impeding_ratio,
            },
            BehaviorTag::CrimpOccupy => BehaviorProfile::CrimpOccupy(self.crimp.clone()),
            BehaviorTag::DrunkDrug => BehaviorProfile::DrunkDrug(self.drunk.clone()),
            BehaviorTag::Distracted => BehaviorProfile::Distracted(self.distracted.clone()),
        }
    }

    pub fn validate(&self) -> Result<(), BehaviorError> {
        for tag in BehaviorTag::HAZARDS {
            self.profile_for(tag).validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ExperimentMode {
    Validate(BehaviorTag),
    Grid,
}

/// Config-facing network parameters. Speeds are quoted in km/h at this
/// boundary and converted to SI exactly once, when the network is built.
#[derive(Clone, PartialEq, Debug)]
pub struct NetworkSettings {
    pub rows: usize,
    pub cols: usize,
    pub block_len: f64,
    pub speed_limit_kmh: f64,
    pub lane_width: f64,
    pub signal_cycle_s: f64,
}

impl Default for NetworkSettings {
    fn default() -> Self {
        Self {
            rows: 3,
            cols: 3,
            block_len: 150.0,
            speed_limit_kmh: 30.0,
            lane_width: 3.5,
            signal_cycle_s: 30.0,
        }
    }
}

impl NetworkSettings {
    pub fn params(&self) -> NetworkParams {
        NetworkParams {
            rows: self.rows,
            cols: self.cols,
            block_len: self.block_len,
            speed_limit: self.speed_limit_kmh / 3.6,
            lane_width: self.lane_width,
            signal_cycle_s: self.signal_cycle_s,
        }
    }
}

/// The full reproducibility manifest of an experiment.
#[derive(Clone, PartialEq, Debug)]
pub struct ExperimentConfig {
    pub mode: ExperimentMode,
    pub densities: Vec<usize>,
    pub penetrations: Vec<f64>,
    /// Population size in validate mode.
    pub n_vehicles: usize,
    pub duration_s: f64,
    pub seeds: Vec<u64>,
    pub record_hz: u32,
    pub sensing_range: f64,
    pub network: NetworkSettings,
    pub behaviors: BehaviorConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: ExperimentMode::Grid,
            densities: vec![25, 50, 100, 150],
            penetrations: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            n_vehicles: 50,
            duration_s: 300.0,
            seeds: vec![10],
            record_hz: 2,
            sensing_range: 50.0,
            network: NetworkSettings::default(),
            behaviors: BehaviorConfig::default(),
        }
    }
}

/// Vehicle id -> behavior profile for one scenario.
#[derive(Clone, PartialEq, Debug)]
pub struct ScenarioAssignment {
    pub profiles: Vec<BehaviorProfile>,
}

impl ScenarioAssignment {
    pub fn hazard_count(&self) -> usize {
        self.profiles
            .iter()
            .filter(|p| !matches!(p, BehaviorProfile::Normal))
            .count()
    }

    pub fn counts_by_tag(&self) -> BTreeMap<BehaviorTag, usize> {
        let mut counts = BTreeMap::new();
        for profile in &self.profiles {
            *counts.entry(profile.tag()).or_insert(0) += 1;
        }
        counts
    }
}

/// Identity of one grid cell.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct RunMeta {
    pub density: usize,
    pub penetration: f64,
    pub seed: u64,
}

/// Spawn `density` vehicles at seeded-shuffled spawn points and assign
/// `round(penetration * density)` of them hazard profiles, striped evenly
/// across the five kinds after a seeded shuffle.
pub fn build_scenario(
    config: &ExperimentConfig,
    density: usize,
    penetration: f64,
    seed: u64,
) -> Result<(World, ScenarioAssignment), ExperimentError> {
    config.behaviors.validate()?;
    let mut world_stream = RandomStream::new(seed, stream_keys::WORLD_GEN);
    let network = build_network_with(&config.network.params(), &mut world_stream)?;
    let capacity = network.spawn_capacity();
    if density > capacity {
        return Err(ExperimentError::DensityExceedsCapacity { density, capacity });
    }

    let mut scheduling = RandomStream::new(seed, stream_keys::SCHEDULING);
    let mut points = network.spawn_points.clone();
    scheduling.shuffle(&mut points);

    let n_hazard = (penetration * density as f64).round() as usize;
    let mut ids: Vec<usize> = (0..density).collect();
    scheduling.shuffle(&mut ids);
    let mut profiles = vec![BehaviorProfile::Normal; density];
    for (k, &id) in ids.iter().take(n_hazard).enumerate() {
        profiles[id] = config
            .behaviors
            .profile_for(BehaviorTag::HAZARDS[k % BehaviorTag::HAZARDS.len()]);
    }

    let mut world = World::new(network, seed, FollowParams::default());
    for (profile, (lane, s)) in profiles.iter().zip(&points) {
        world.add_vehicle(*lane, *s, profile.clone());
    }
    Ok((world, ScenarioAssignment { profiles }))
}

/// Validate-mode scenario: one ego of the given kind (vehicle 0), the rest
/// normal.
pub fn build_validation_scenario(
    config: &ExperimentConfig,
    kind: BehaviorTag,
    seed: u64,
) -> Result<(World, ScenarioAssignment), ExperimentError> {
    if !BehaviorTag::HAZARDS.contains(&kind) {
        return Err(ExperimentError::NotAHazard { kind });
    }
    config.behaviors.validate()?;
    let mut world_stream = RandomStream::new(seed, stream_keys::WORLD_GEN);
    let network = build_network_with(&config.network.params(), &mut world_stream)?;
    let capacity = network.spawn_capacity();
    if config.n_vehicles > capacity {
        return Err(ExperimentError::DensityExceedsCapacity {
            density: config.n_vehicles,
            capacity,
        });
    }
    let mut scheduling = RandomStream::new(seed, stream_keys::SCHEDULING);
    let mut points = network.spawn_points.clone();
    scheduling.shuffle(&mut points);

    let mut profiles = vec![BehaviorProfile::Normal; config.n_vehicles];
    profiles[0] = config.behaviors.profile_for(kind);
    let mut world = World::new(network, seed, FollowParams::default());
    for (profile, (lane, s)) in profiles.iter().zip(&points) {
        world.add_vehicle(*lane, *s, profile.clone());
    }
    Ok((world, ScenarioAssignment { profiles }))
}

/// Everything recorded by one run.
#[derive(Clone, PartialEq, Debug)]
pub struct SingleRun {
    pub traces: Vec<TraceSample>,
    pub events: Vec<CollisionEvent>,
    pub encounters: Vec<EncounterRecord>,
    pub freeze_log: Vec<FreezeSpan>,
    pub report: RunReport,
}

/// Step the world for `duration_s`, recording traces at `record_hz` and
/// replacing crashed vehicles every tick.
pub fn run_single(
    mut world: World,
    assignment: &ScenarioAssignment,
    meta: RunMeta,
    duration_s: f64,
    record_hz: u32,
    sensing_range: f64,
) -> Result<SingleRun, ExperimentError> {
    let tick_hz = (1.0 / DT_S).round() as u32;
    if record_hz == 0 || !tick_hz.is_multiple_of(record_hz) {
        return Err(ExperimentError::BadRecordRate {
            hz: record_hz,
            tick_hz,
        });
    }
    let every = u64::from(tick_hz / record_hz);
    let ticks = (duration_s / DT_S).round() as u64;
    let mut traces = Vec::new();
    for tick in 0..ticks {
        if tick % every == 0 {
            traces.extend(world.sample_traces(sensing_range));
        }
        world.step();
    }
    let report = build_run_report(
        meta.density,
        meta.penetration,
        meta.seed,
        duration_s,
        assignment.hazard_count(),
        &traces,
        &world.events,
        &world.encounters,
        sensing_range,
    );
    Ok(SingleRun {
        traces,
        events: world.events,
        encounters: world.encounters,
        freeze_log: world.freeze_log,
        report,
    })
}

#[derive(Clone, PartialEq, Debug)]
pub struct ValidationRun {
    pub seed: u64,
    pub run: SingleRun,
}

#[derive(Clone, PartialEq, Debug)]
pub struct B2bRow {
    pub label: String,
    pub vehicle: VehicleId,
    pub per_seed: Vec<Option<f64>>,
    pub mean: Option<f64>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct B2bTable {
    pub seeds: Vec<u64>,
    pub rows: Vec<B2bRow>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct RedLightTable {
    pub seeds: Vec<u64>,
    pub runs: Vec<u32>,
    pub encounters: Vec<u32>,
    pub ratio_pct: Vec<Option<f64>>,
    /// Mean of the per-seed ratios (not the pooled ratio).
    pub mean_pct: Option<f64>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct ValidationReport {
    pub kind: BehaviorTag,
    pub seeds: Vec<u64>,
    pub ego: VehicleId,
    pub runs: Vec<ValidationRun>,
    pub b2b: Option<B2bTable>,
    pub redlight: Option<RedLightTable>,
}

/// Number of normal vehicles tabulated next to the ego in the B2B table.
const B2B_NORMALS: usize = 3;

/// Single-behavior validation: one ego of `kind` among normals, repeated per
/// seed; emits the recorded quantities appropriate to the kind.
pub fn run_validation(
    config: &ExperimentConfig,
    kind: BehaviorTag,
) -> Result<ValidationReport, ExperimentError> {
    let ego = VehicleId(0);
    let mut runs = Vec::new();
    for &seed in &config.seeds {
        let (world, assignment) = build_validation_scenario(config, kind, seed)?;
        let meta = RunMeta {
            density: config.n_vehicles,
            penetration: 1.0 / config.n_vehicles as f64,
            seed,
        };
        let run = run_single(
            world,
            &assignment,
            meta,
            config.duration_s,
            config.record_hz,
            config.sensing_range,
        )?;
        runs.push(ValidationRun { seed, run });
    }

    let b2b = matches!(kind, BehaviorTag::Speeding | BehaviorTag::Impeding).then(|| {
        let mut rows = Vec::new();
        for v in 0..=B2B_NORMALS {
            let vehicle = VehicleId(v as u32);
            let label = if v == 0 {
                "ego".to_string()
            } else {
                format!("normal_{v}")
            };
            let per_seed: Vec<Option<f64>> = runs
                .iter()
                .map(|r| {
                    let samples: Vec<TraceSample> = r
                        .run
                        .traces
                        .iter()
                        .filter(|s| s.vehicle == vehicle)
                        .copied()
                        .collect();
                    mean_b2b_distance(&samples, config.sensing_range)
                })
                .collect();
            let defined: Vec<f64> = per_seed.iter().flatten().copied().collect();
            let mean = (!defined.is_empty())
                .then(|| defined.iter().sum::<f64>() / defined.len() as f64);
            rows.push(B2bRow {
                label,
                vehicle,
                per_seed,
                mean,
            });
        }
        B2bTable {
            seeds: config.seeds.clone(),
            rows,
        }
    });

    let redlight = matches!(kind, BehaviorTag::DrunkDrug).then(|| {
        let mut counts = Vec::new();
        let mut run_counts = Vec::new();
        let mut ratios = Vec::new();
        for r in &runs {
            let ego_encounters: Vec<(VehicleId, bool)> = r
                .run
                .encounters
                .iter()
                .filter(|e| e.vehicle == ego)
                .map(|e| (e.vehicle, e.ran))
                .collect();
            counts.push(ego_encounters.len() as u32);
            run_counts.push(ego_encounters.iter().filter(|(_, ran)| *ran).count() as u32);
            ratios.push(red_light_ratio(&ego_encounters));
        }
        let defined: Vec<f64> = ratios.iter().flatten().copied().collect();
        let mean_pct =
            (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
        RedLightTable {
            seeds: config.seeds.clone(),
            runs: run_counts,
            encounters: counts,
            ratio_pct: ratios,
            mean_pct,
        }
    });

    Ok(ValidationReport {
        kind,
        seeds: config.seeds.clone(),
        ego,
        runs,
        b2b,
        redlight,
    })
}

#[derive(Clone, PartialEq, Debug)]
pub struct CellOutcome {
    pub report: RunReport,
    pub events: Vec<CollisionEvent>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct GridCell {
    pub density: usize,
    pub penetration: f64,
    pub seed: u64,
    pub outcome: Result<CellOutcome, String>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct GridReport {
    pub densities: Vec<usize>,
    pub penetrations: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Cells ordered density-major, then penetration, then seed.
    pub cells: Vec<GridCell>,
    /// Mean collision totals over seeds, densities x penetrations; `None`
    /// where every seed errored.
    pub matrix: Vec<Vec<Option<f64>>>,
    /// Mean collision attributions per behavior at full penetration, one
    /// entry per density (empty when 1.0 is not in the penetration list).
    pub by_behavior: Vec<(usize, BTreeMap<BehaviorTag, f64>)>,
}

fn run_cell(config: &ExperimentConfig, meta: RunMeta) -> GridCell {
    let outcome = build_scenario(config, meta.density, meta.penetration, meta.seed)
        .and_then(|(world, assignment)| {
            // Grid cells keep aggregates and events; full traces would be
            // hundreds of megabytes across a sweep.
            run_single(
                world,
                &assignment,
                meta,
                config.duration_s,
                config.record_hz,
                config.sensing_range,
            )
        })
        .map(|run| CellOutcome {
            report: run.report,
            events: run.events,
        })
        .map_err(|e| e.to_string());
    GridCell {
        density: meta.density,
        penetration: meta.penetration,
        seed: meta.seed,
        outcome,
    }
}

/// Execute every (density, penetration, seed) cell independently; cells may
/// run concurrently without affecting each other's output.
pub fn run_grid(config: &ExperimentConfig) -> GridReport {
    let mut metas = Vec::new();
    for &density in &config.densities {
        for &penetration in &config.penetrations {
            for &seed in &config.seeds {
                metas.push(RunMeta {
                    density,
                    penetration,
                    seed,
                });
            }
        }
    }
    let cells: Vec<GridCell> = metas
        .par_iter()
        .map(|meta| run_cell(config, *meta))
        .collect();

    let mut matrix = Vec::new();
    for &density in &config.densities {
        let mut row = Vec::new();
        for &penetration in &config.penetrations {
            let totals: Vec<f64> = cells
                .iter()
                .filter(|c| c.density == density && c.penetration == penetration)
                .filter_map(|c| c.outcome.as_ref().ok())
                .map(|o| o.report.collisions_total as f64)
                .collect();
            row.push(
                (!totals.is_empty()).then(|| totals.iter().sum::<f64>() / totals.len() as f64),
            );
        }
        matrix.push(row);
    }

    let mut by_behavior = Vec::new();
    if config.penetrations.contains(&1.0) {
        for &density in &config.densities {
            let full_cells: Vec<&CellOutcome> = cells
                .iter()
                .filter(|c| c.density == density && c.penetration == 1.0)
                .filter_map(|c| c.outcome.as_ref().ok())
                .collect();
            if full_cells.is_empty() {
                continue;
            }
            let mut means = BTreeMap::new();
            for tag in BehaviorTag::HAZARDS {
                let mean = full_cells
                    .iter()
                    .map(|o| {
                        o.report
                            .collisions_by_behavior
                            .get(&tag)
                            .copied()
                            .unwrap_or(0) as f64
                    })
                    .sum::<f64>()
                    / full_cells.len() as f64;
                means.insert(tag, mean);
            }
            by_behavior.push((density, means));
        }
    }

    GridReport {
        densities: config.densities.clone(),
        penetrations: config.penetrations.clone(),
        seeds: config.seeds.clone(),
        cells,
        matrix,
        by_behavior,
    }
}
