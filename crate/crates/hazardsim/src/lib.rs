//! Deterministic agent-based traffic microsimulator with hazardous driver
//! behavior injection.
//!
//! A seeded population of point-mass vehicles drives a signalized toroidal
//! grid under an intelligent-driver-model baseline. Five hazardous behavior
//! agents (speeding, impeding, crimping/occupying, drunk/drug, distracted)
//! modulate that baseline through per-tick directives, and experiments
//! measure the resulting collision rates across traffic-density and
//! hazard-penetration sweeps. Every run is bit-reproducible from its seed.

pub mod behavior;
pub mod clock;
pub mod config;
pub mod dynamics;
pub mod experiment;
pub mod metrics;
pub mod network;
pub mod output;
pub mod rng;
pub mod sampling;
pub mod vehicle;
pub mod world;

pub mod cli;
