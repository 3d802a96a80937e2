//! Bit-stable serialization of traces, reports and plot-ready data.
//!
//! Every artifact is rendered to a string with fixed column orders, fixed
//! row ordering and locale-independent `{:.4}` float formatting, so repeated
//! runs of the same configuration produce byte-identical files. The run
//! manifest records the configuration echo plus a SHA-256 digest of every
//! emitted file; `replay` re-executes the run and verifies the digests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::dynamics::CollisionEvent;
use crate::experiment::{B2bTable, GridReport, RedLightTable};
use crate::metrics::TraceSample;
use crate::vehicle::BehaviorTag;

/// An artifact ready to be written: path relative to the run directory plus
/// rendered contents.
#[derive(Clone, PartialEq, Debug)]
pub struct Artifact {
    pub rel_path: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(rel_path: impl Into<String>, contents: String) -> Artifact {
        Artifact {
            rel_path: rel_path.into(),
            contents,
        }
    }

    pub fn digest(&self) -> String {
        sha256_hex(self.contents.as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

fn fmt_opt(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.4}"),
        None => String::new(),
    }
}

/// `traces.csv`: one row per (t, vehicle), sorted by (t, vehicle_id).
/// Speeds are serialized in km/h.
pub fn render_traces_csv(traces: &[TraceSample]) -> String {
    let mut rows: Vec<&TraceSample> = traces.iter().collect();
    rows.sort_by(|a, b| {
        a.t.partial_cmp(&b.t)
            .unwrap()
            .then(a.vehicle.cmp(&b.vehicle))
    });
    let mut out = String::with_capacity(rows.len() * 64 + 80);
    out.push_str("t,vehicle_id,behavior,v_kmh,offset_m,throttle,brake,steer,leader_gap_m\n");
    for s in rows {
        let _ = writeln!(
            out,
            "{:.4},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{}",
            s.t,
            s.vehicle,
            s.behavior,
            s.v * 3.6,
            s.lateral_offset,
            s.control.throttle,
            s.control.brake,
            s.control.steer,
            fmt_opt(s.leader_gap),
        );
    }
    out
}

/// `collisions.csv`: one row per contact episode, sorted by (t, id_a).
pub fn render_collisions_csv(events: &[CollisionEvent]) -> String {
    let mut rows: Vec<&CollisionEvent> = events.iter().collect();
    rows.sort_by(|a, b| {
        a.t.partial_cmp(&b.t)
            .unwrap()
            .then(a.vehicle_a.cmp(&b.vehicle_a))
            .then(a.vehicle_b.cmp(&b.vehicle_b))
    });
    let mut out = String::new();
    out.push_str("t,id_a,id_b,behavior_a,behavior_b,lane,s\n");
    for e in rows {
        let _ = writeln!(
            out,
            "{:.4},{},{},{},{},{},{:.4}",
            e.t, e.vehicle_a, e.vehicle_b, e.behaviors.0, e.behaviors.1, e.lane, e.position,
        );
    }
    out
}

/// `b2b.csv`: the mean bumper-to-bumper table, one row per tabulated vehicle,
/// one column per seed plus the across-seed mean.
pub fn render_b2b_csv(table: &B2bTable) -> String {
    let mut out = String::new();
    out.push_str("vehicle");
    for seed in &table.seeds {
        let _ = write!(out, ",seed_{seed}");
    }
    out.push_str(",mean\n");
    for row in &table.rows {
        out.push_str(&row.label);
        for cell in &row.per_seed {
            let _ = write!(out, ",{}", fmt_opt(*cell));
        }
        let _ = writeln!(out, ",{}", fmt_opt(row.mean));
    }
    out
}

/// `redlight.csv`: encounters, runs and per-seed ratios with the mean of the
/// per-seed ratios.
pub fn render_redlight_csv(table: &RedLightTable) -> String {
    let mut out = String::new();
    out.push_str("metric");
    for seed in &table.seeds {
        let _ = write!(out, ",seed_{seed}");
    }
    out.push_str(",mean\n");
    out.push_str("runs");
    for v in &table.runs {
        let _ = write!(out, ",{v}");
    }
    out.push_str(",\n");
    out.push_str("encounters");
    for v in &table.encounters {
        let _ = write!(out, ",{v}");
    }
    out.push_str(",\n");
    out.push_str("ratio_pct");
    for v in &table.ratio_pct {
        let _ = write!(out, ",{}", fmt_opt(*v));
    }
    let _ = writeln!(out, ",{}", fmt_opt(table.mean_pct));
    out
}

/// `grid_matrix.csv`: mean collision totals, densities down, penetrations
/// across.
pub fn render_grid_matrix_csv(grid: &GridReport) -> String {
    let mut out = String::new();
    out.push_str("density");
    for p in &grid.penetrations {
        let _ = write!(out, ",p_{p:.2}");
    }
    out.push('\n');
    for (row, density) in grid.matrix.iter().zip(&grid.densities) {
        let _ = write!(out, "{density}");
        for cell in row {
            let _ = write!(out, ",{}", fmt_opt(*cell));
        }
        out.push('\n');
    }
    out
}

/// `grid_by_behavior.csv`: mean collision attributions per behavior at full
/// penetration, one row per density.
pub fn render_grid_by_behavior_csv(grid: &GridReport) -> String {
    let mut out = String::new();
    out.push_str("density");
    for tag in BehaviorTag::HAZARDS {
        let _ = write!(out, ",{tag}");
    }
    out.push('\n');
    for (density, means) in &grid.by_behavior {
        let _ = write!(out, "{density}");
        for tag in BehaviorTag::HAZARDS {
            let _ = write!(out, ",{}", fmt_opt(means.get(&tag).copied()));
        }
        out.push('\n');
    }
    out
}

/// The self-describing record that makes a run reproducible: tool version,
/// command, full config echo and a digest per emitted file.
pub fn render_manifest(
    command: &str,
    behavior: Option<BehaviorTag>,
    config_echo: &str,
    artifacts: &[Artifact],
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "tool = hazardsim {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "command = {command}");
    if let Some(tag) = behavior {
        let _ = writeln!(out, "behavior = {tag}");
    }
    out.push_str("[config]\n");
    out.push_str(config_echo);
    out.push_str("[digests]\n");
    let mut sorted: Vec<&Artifact> = artifacts.iter().collect();
    sorted.sort_by(|a, b| a.rel_path.cmp(&b.rel_path));
    for artifact in sorted {
        let _ = writeln!(out, "{} = {}", artifact.rel_path, artifact.digest());
    }
    out
}

/// Parsed form of a manifest file.
#[derive(Clone, PartialEq, Debug)]
pub struct Manifest {
    pub tool: String,
    pub command: String,
    pub behavior: Option<BehaviorTag>,
    pub config_text: String,
    pub digests: BTreeMap<String, String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("manifest line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("manifest is missing the `{0}` field")]
    MissingField(&'static str),
}

pub fn parse_manifest(text: &str) -> Result<Manifest, ManifestError> {
    #[derive(PartialEq)]
    enum Block {
        Head,
        Config,
        Digests,
    }
    let mut block = Block::Head;
    let mut tool = None;
    let mut command = None;
    let mut behavior = None;
    let mut config_text = String::new();
    let mut digests = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        match raw.trim() {
            "[config]" => {
                block = Block::Config;
                continue;
            }
            "[digests]" => {
                block = Block::Digests;
                continue;
            }
            _ => {}
        }
        match block {
            Block::Head => {
                let Some((key, value)) = raw.split_once('=') else {
                    if raw.trim().is_empty() {
                        continue;
                    }
                    return Err(ManifestError::Malformed {
                        line,
                        reason: format!("expected `key = value`, got `{raw}`"),
                    });
                };
                let (key, value) = (key.trim(), value.trim());
                match key {
                    "tool" => tool = Some(value.to_string()),
                    "command" => command = Some(value.to_string()),
                    "behavior" => {
                        behavior =
                            Some(BehaviorTag::parse(value).ok_or(ManifestError::Malformed {
                                line,
                                reason: format!("unknown behavior `{value}`"),
                            })?);
                    }
                    _ => {
                        return Err(ManifestError::Malformed {
                            line,
                            reason: format!("unknown manifest field `{key}`"),
                        });
                    }
                }
            }
            Block::Config => {
                config_text.push_str(raw);
                config_text.push('\n');
            }
            Block::Digests => {
                if raw.trim().is_empty() {
                    continue;
                }
                let Some((path, digest)) = raw.rsplit_once('=') else {
                    return Err(ManifestError::Malformed {
                        line,
                        reason: format!("expected `path = digest`, got `{raw}`"),
                    });
                };
                digests.insert(path.trim().to_string(), digest.trim().to_string());
            }
        }
    }

    Ok(Manifest {
        tool: tool.ok_or(ManifestError::MissingField("tool"))?,
        command: command.ok_or(ManifestError::MissingField("command"))?,
        behavior,
        config_text,
        digests,
    })
}

/// All artifacts of a validation run: per-seed traces and collision logs,
/// plus the kind-specific table.
pub fn validation_artifacts(report: &crate::experiment::ValidationReport) -> Vec<Artifact> {
    let mut artifacts = Vec::new();
    for run in &report.runs {
        artifacts.push(Artifact::new(
            format!("seed_{}/traces.csv", run.seed),
            render_traces_csv(&run.run.traces),
        ));
        artifacts.push(Artifact::new(
            format!("seed_{}/collisions.csv", run.seed),
            render_collisions_csv(&run.run.events),
        ));
    }
    if let Some(table) = &report.b2b {
        artifacts.push(Artifact::new("b2b.csv", render_b2b_csv(table)));
    }
    if let Some(table) = &report.redlight {
        artifacts.push(Artifact::new("redlight.csv", render_redlight_csv(table)));
    }
    artifacts
}

/// All artifacts of a grid run: the two summary tables plus per-cell
/// collision logs in disjoint subdirectories.
pub fn grid_artifacts(grid: &GridReport) -> Vec<Artifact> {
    let mut artifacts = vec![
        Artifact::new("grid_matrix.csv", render_grid_matrix_csv(grid)),
        Artifact::new("grid_by_behavior.csv", render_grid_by_behavior_csv(grid)),
    ];
    for cell in &grid.cells {
        let dir = format!(
            "cells/d{}_p{:.2}_s{}",
            cell.density, cell.penetration, cell.seed
        );
        match &cell.outcome {
            Ok(outcome) => artifacts.push(Artifact::new(
                format!("{dir}/collisions.csv"),
                render_collisions_csv(&outcome.events),
            )),
            Err(reason) => artifacts.push(Artifact::new(
                format!("{dir}/error.txt"),
                format!("{reason}\n"),
            )),
        }
    }
    artifacts
}

/// Write artifacts under `dir`, creating subdirectories as needed.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> io::Result<()> {
    for artifact in artifacts {
        let path = dir.join(&artifact.rel_path);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, artifact.contents.as_bytes())?;
    }
    Ok(())
}
