//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::behavior;
use crate::config::{config_echo, parse_config_tracked};
use crate::experiment::{run_grid, run_validation, ExperimentConfig, ExperimentMode};
use crate::output::{
    grid_artifacts, parse_manifest, render_manifest, validation_artifacts, write_artifacts,
    Artifact,
};
use crate::rng::{stream_keys, RandomStream};
use crate::sampling;
use crate::vehicle::BehaviorTag;

/// Environment variable overriding the default output directory.
pub const OUT_DIR_ENV: &str = "HAZARDSIM_OUT";
const DEFAULT_OUT_DIR: &str = "out";

#[derive(Parser)]
#[command(
    name = "hazardsim",
    version,
    about = "Deterministic traffic microsimulation with hazardous driver behaviors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single-behavior validation study and emit its recorded data.
    Validate {
        /// One of: speeding, impeding, crimp_occupy, drunk_drug, distracted.
        #[arg(long)]
        behavior: String,
        /// Comma-separated seed list; defaults depend on the behavior.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Configuration file (strict key-value format).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (flag beats the HAZARDSIM_OUT variable).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the traffic-density x hazard-penetration collision grid.
    Grid {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump raw draws from one of the behavior samplers for audits.
    Sample {
        /// offset | crimp-hold | drunk-ratio | drunk-hold | loss-duration
        /// (aliases eq1..eq5).
        #[arg(long)]
        dist: String,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 10)]
        seed: u64,
    },
    /// Re-execute a recorded run and verify every output digest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
    },
}

/// Entry point for the binary; returns the process exit status.
pub fn dispatch<I>(argv: I) -> i32
where
    I: IntoIterator<Item = String>,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match run_command(cli.command) {
        Ok(()) => 0,
        Err(message) => {
            eprintln!("error: {message}");
            1
        }
    }
}

fn run_command(command: Command) -> Result<(), String> {
    match command {
        Command::Validate {
            behavior,
            seeds,
            config,
            out,
        } => cmd_validate(&behavior, seeds, config, out),
        Command::Grid { config, out } => cmd_grid(config, out),
        Command::Sample { dist, n, seed } => cmd_sample(&dist, n, seed),
        Command::Replay { manifest } => cmd_replay(&manifest),
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<(ExperimentConfig, bool), String> {
    match path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let (config, keys) = parse_config_tracked(&text).map_err(|e| e.to_string())?;
            Ok((config, keys.contains("seed")))
        }
        None => Ok((ExperimentConfig::default(), false)),
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Seeds used by a validation study when neither the config file nor
/// `--seeds` names any: three for the headway tables, five for the red-light
/// table, one otherwise.
pub fn default_validation_seeds(kind: BehaviorTag) -> Vec<u64> {
    match kind {
        BehaviorTag::Speeding | BehaviorTag::Impeding => vec![10, 11, 12],
        BehaviorTag::DrunkDrug => vec![10, 11, 12, 13, 14],
        _ => vec![10],
    }
}

fn cmd_validate(
    behavior: &str,
    seeds: Option<Vec<u64>>,
    config_path: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<(), String> {
    let kind = BehaviorTag::parse(behavior)
        .filter(|tag| BehaviorTag::HAZARDS.contains(tag))
        .ok_or_else(|| format!("unknown behavior `{behavior}`"))?;
    let (mut config, seeds_from_file) = load_config(config_path.as_ref())?;
    if let Some(seeds) = seeds {
        if seeds.is_empty() {
            return Err("at least one seed required".to_string());
        }
        config.seeds = seeds;
    } else if !seeds_from_file {
        config.seeds = default_validation_seeds(kind);
    }
    config.mode = ExperimentMode::Validate(kind);

    let report = run_validation(&config, kind).map_err(|e| e.to_string())?;
    let artifacts = validation_artifacts(&report);
    let manifest = render_manifest("validate", Some(kind), &config_echo(&config), &artifacts);
    let dir = out_dir(out);
    write_all(&dir, artifacts, manifest)?;
    println!(
        "validate {kind}: {} seed run(s) written to {}",
        report.runs.len(),
        dir.display()
    );
    Ok(())
}

fn cmd_grid(config_path: Option<PathBuf>, out: Option<PathBuf>) -> Result<(), String> {
    let (mut config, _) = load_config(config_path.as_ref())?;
    config.mode = ExperimentMode::Grid;
    let grid = run_grid(&config);
    let failed: Vec<String> = grid
        .cells
        .iter()
        .filter_map(|c| {
            c.outcome.as_ref().err().map(|e| {
                format!(
                    "cell d{} p{:.2} s{}: {e}",
                    c.density, c.penetration, c.seed
                )
            })
        })
        .collect();
    let artifacts = grid_artifacts(&grid);
    let manifest = render_manifest("grid", None, &config_echo(&config), &artifacts);
    let dir = out_dir(out);
    write_all(&dir, artifacts, manifest)?;
    println!(
        "grid: {} cells ({} failed) written to {}",
        grid.cells.len(),
        failed.len(),
        dir.display()
    );
    for failure in failed {
        eprintln!("warning: {failure}");
    }
    Ok(())
}

fn write_all(dir: &Path, mut artifacts: Vec<Artifact>, manifest: String) -> Result<(), String> {
    artifacts.push(Artifact::new("manifest.txt", manifest));
    write_artifacts(dir, &artifacts).map_err(|e| format!("cannot write {}: {e}", dir.display()))
}

fn cmd_sample(dist: &str, n: u64, seed: u64) -> Result<(), String> {
    let mut stream = RandomStream::new(seed, stream_keys::SAMPLER_AUDIT);
    let mut draw: Box<dyn FnMut(&mut RandomStream) -> f64> = match dist {
        "offset" | "eq1" => Box::new(behavior::sample_offset),
        "crimp-hold" | "eq2" => {
            Box::new(|s: &mut RandomStream| behavior::sample_hold(s, 2.0, 10.0).unwrap())
        }
        "drunk-ratio" | "eq3" => Box::new(behavior::sample_drunk_ratio),
        "drunk-hold" | "eq4" => {
            Box::new(|s: &mut RandomStream| behavior::sample_hold(s, 4.0, 10.0).unwrap())
        }
        "loss-duration" | "eq5" => Box::new(|s: &mut RandomStream| {
            sampling::draw_truncated_gaussian(s, 1.5, 0.5, 1.0, 3.0).unwrap()
        }),
        _ => {
            return Err(format!(
                "unknown distribution `{dist}` (expected offset, crimp-hold, drunk-ratio, \
                 drunk-hold, loss-duration or eq1..eq5)"
            ));
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    use std::io::Write;
    for _ in 0..n {
        writeln!(lock, "{}", draw(&mut stream)).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn cmd_replay(path: &Path) -> Result<(), String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let manifest = parse_manifest(&text).map_err(|e| e.to_string())?;
    let (mut config, _) =
        crate::config::parse_config_tracked(&manifest.config_text).map_err(|e| e.to_string())?;

    let artifacts = match manifest.command.as_str() {
        "validate" => {
            let kind = manifest
                .behavior
                .ok_or("validate manifest is missing its behavior")?;
            config.mode = ExperimentMode::Validate(kind);
            let report = run_validation(&config, kind).map_err(|e| e.to_string())?;
            validation_artifacts(&report)
        }
        "grid" => {
            config.mode = ExperimentMode::Grid;
            grid_artifacts(&run_grid(&config))
        }
        other => return Err(format!("manifest names unknown command `{other}`")),
    };

    let mut mismatches = Vec::new();
    let mut verified = 0usize;
    let mut produced: std::collections::BTreeMap<String, String> = artifacts
        .iter()
        .map(|a| (a.rel_path.clone(), a.digest()))
        .collect();
    for (rel_path, expected) in &manifest.digests {
        match produced.remove(rel_path) {
            Some(actual) if actual == *expected => verified += 1,
            Some(actual) => {
                mismatches.push(format!("{rel_path}: digest {actual} != recorded {expected}"))
            }
            None => mismatches.push(format!("{rel_path}: not produced by replay")),
        }
    }
    for (rel_path, _) in produced {
        mismatches.push(format!("{rel_path}: produced but absent from manifest"));
    }

    if mismatches.is_empty() {
        println!("replay ok: {verified} file(s) verified");
        Ok(())
    } else {
        for m in &mismatches {
            eprintln!("replay mismatch: {m}");
        }
        Err(format!("{} file(s) failed verification", mismatches.len()))
    }
}
