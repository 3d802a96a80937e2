//! Signalized grid road network.
//!
//! The world is a rows x cols lattice of four-approach intersections joined by
//! one-way lanes, wrapped toroidally so every lane has downstream successors
//! and traffic never drains off the map. Geometry is lane-local: a vehicle is
//! located by (lane, longitudinal position, lateral offset), which is all the
//! simulation needs.

use crate::rng::RandomStream;
use crate::sampling;
use thiserror::Error;

/// Spacing between generated spawn points along a lane.
const SPAWN_SPACING_M: f64 = 25.0;
/// Dead zone at each lane end where no spawn point is placed.
const SPAWN_MARGIN_M: f64 = 10.0;
/// Length of the amber interval at the tail of each movement window.
pub const AMBER_S: f64 = 3.0;

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("grid dimensions must be at least 1x1, got {rows}x{cols}")]
    BadDimensions { rows: usize, cols: usize },
    #[error("block length must be at least 50 m, got {block_len}")]
    BlockTooShort { block_len: f64 },
    #[error("speed limit must be positive, got {speed_limit}")]
    BadSpeedLimit { speed_limit: f64 },
    #[error("signal cycle must exceed twice the amber interval, got {cycle_s}")]
    BadSignalCycle { cycle_s: f64 },
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct LaneId(pub u32);

impl LaneId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for LaneId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Travel direction of a lane; also names the approach it forms at the
/// intersection it feeds.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Heading {
    North,
    East,
    South,
    West,
}

pub const HEADINGS: [Heading; 4] = [Heading::North, Heading::East, Heading::South, Heading::West];

impl Heading {
    pub fn opposite(self) -> Heading {
        match self {
            Heading::North => Heading::South,
            Heading::East => Heading::West,
            Heading::South => Heading::North,
            Heading::West => Heading::East,
        }
    }

    /// Signal group: north-south approaches share one movement window,
    /// east-west the other.
    pub fn is_north_south(self) -> bool {
        matches!(self, Heading::North | Heading::South)
    }

    /// Heading after a right turn.
    pub fn turned_right(self) -> Heading {
        match self {
            Heading::North => Heading::East,
            Heading::East => Heading::South,
            Heading::South => Heading::West,
            Heading::West => Heading::North,
        }
    }

    fn index(self) -> usize {
        match self {
            Heading::North => 0,
            Heading::East => 1,
            Heading::South => 2,
            Heading::West => 3,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Signal {
    Green,
    Amber,
    Red,
}

/// Fixed-time two-phase signal plan for one intersection.
#[derive(Clone, PartialEq, Debug)]
pub struct SignalPhase {
    pub cycle_s: f64,
    /// Duration of the north-south movement window (amber included);
    /// east-west gets the remainder of the cycle.
    pub green_s: f64,
    pub offset_s: f64,
}

impl SignalPhase {
    pub fn signal_for(&self, heading: Heading, t: f64) -> Signal {
        let local = (t + self.offset_s).rem_euclid(self.cycle_s);
        let (start, end) = if heading.is_north_south() {
            (0.0, self.green_s)
        } else {
            (self.green_s, self.cycle_s)
        };
        if local >= start && local < end {
            if local < end - AMBER_S {
                Signal::Green
            } else {
                Signal::Amber
            }
        } else {
            Signal::Red
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct Lane {
    pub id: LaneId,
    pub length: f64,
    pub width: f64,
    pub speed_limit: f64,
    pub heading: Heading,
    /// Intersection this lane feeds into.
    pub end_intersection: usize,
    pub successors: Vec<LaneId>,
}

/// One incoming lane of an intersection with its stop line and the signal
/// group it belongs to.
#[derive(Clone, PartialEq, Debug)]
pub struct Approach {
    pub lane: LaneId,
    pub heading: Heading,
    pub stop_line: f64,
}

#[derive(Clone, PartialEq, Debug)]
pub struct Intersection {
    pub id: usize,
    pub approaches: Vec<Approach>,
    pub phase: SignalPhase,
}

#[derive(Clone, PartialEq, Debug)]
pub struct RoadNetwork {
    pub lanes: Vec<Lane>,
    pub intersections: Vec<Intersection>,
    pub grid_dims: (usize, usize),
    pub spawn_points: Vec<(LaneId, f64)>,
}

impl RoadNetwork {
    #[inline]
    pub fn lane(&self, id: LaneId) -> &Lane {
        &self.lanes[id.index()]
    }

    #[inline]
    pub fn intersection_for(&self, lane: LaneId) -> &Intersection {
        &self.intersections[self.lane(lane).end_intersection]
    }

    /// Stop-line position on `lane` (lanes end at their intersection).
    #[inline]
    pub fn stop_line(&self, lane: LaneId) -> f64 {
        self.lane(lane).length
    }

    /// Signal state facing traffic on `lane` at time `t`.
    #[inline]
    pub fn signal_on(&self, lane: LaneId, t: f64) -> Signal {
        let l = self.lane(lane);
        self.intersections[l.end_intersection]
            .phase
            .signal_for(l.heading, t)
    }

    /// Maximum number of vehicles that can be placed at spawn points.
    pub fn spawn_capacity(&self) -> usize {
        self.spawn_points.len()
    }
}

/// Everything needed to build a network; `signal_cycle_s` is split into two
/// equal movement windows.
#[derive(Clone, PartialEq, Debug)]
pub struct NetworkParams {
    pub rows: usize,
    pub cols: usize,
    pub block_len: f64,
    pub speed_limit: f64,
    pub lane_width: f64,
    pub signal_cycle_s: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            rows: 3,
            cols: 3,
            block_len: 150.0,
            speed_limit: 30.0 / 3.6,
            lane_width: 3.5,
            signal_cycle_s: 30.0,
        }
    }
}

/// Build a toroidal signalized grid with the default lane width and cycle.
pub fn build_network(
    rows: usize,
    cols: usize,
    block_len: f64,
    speed_limit: f64,
    world_stream: &mut RandomStream,
) -> Result<RoadNetwork, NetworkError> {
    let params = NetworkParams {
        rows,
        cols,
        block_len,
        speed_limit,
        ..NetworkParams::default()
    };
    build_network_with(&params, world_stream)
}

pub fn build_network_with(
    params: &NetworkParams,
    world_stream: &mut RandomStream,
) -> Result<RoadNetwork, NetworkError> {
    let NetworkParams {
        rows,
        cols,
        block_len,
        speed_limit,
        lane_width,
        signal_cycle_s,
    } = *params;

    if rows < 1 || cols < 1 {
        return Err(NetworkError::BadDimensions { rows, cols });
    }
    if block_len < 50.0 {
        return Err(NetworkError::BlockTooShort { block_len });
    }
    if !(speed_limit > 0.0) {
        return Err(NetworkError::BadSpeedLimit { speed_limit });
    }
    if signal_cycle_s <= 2.0 * AMBER_S {
        return Err(NetworkError::BadSignalCycle {
            cycle_s: signal_cycle_s,
        });
    }

    let junction = |r: usize, c: usize| r * cols + c;
    let neighbor = |j: usize, h: Heading| -> usize {
        let (r, c) = (j / cols, j % cols);
        match h {
            Heading::North => junction((r + rows - 1) % rows, c),
            Heading::South => junction((r + 1) % rows, c),
            Heading::East => junction(r, (c + 1) % cols),
            Heading::West => junction(r, (c + cols - 1) % cols),
        }
    };
    let lane_id = |from: usize, h: Heading| LaneId((from * 4 + h.index()) as u32);

    let mut lanes = Vec::with_capacity(rows * cols * 4);
    for from in 0..rows * cols {
        for h in HEADINGS {
            let end = neighbor(from, h);
            // Turning movements at the end intersection: everything except a
            // U-turn back onto the opposite approach.
            let successors: Vec<LaneId> = HEADINGS
                .into_iter()
                .filter(|out| *out != h.opposite())
                .map(|out| lane_id(end, out))
                .collect();
            lanes.push(Lane {
                id: lane_id(from, h),
                length: block_len,
                width: lane_width,
                speed_limit,
                heading: h,
                end_intersection: end,
                successors,
            });
        }
    }

    let mut intersections = Vec::with_capacity(rows * cols);
    for j in 0..rows * cols {
        let offset_s = sampling::uniform_in(world_stream, 0.0, signal_cycle_s);
        let approaches: Vec<Approach> = lanes
            .iter()
            .filter(|l| l.end_intersection == j)
            .map(|l| Approach {
                lane: l.id,
                heading: l.heading,
                stop_line: l.length,
            })
            .collect();
        intersections.push(Intersection {
            id: j,
            approaches,
            phase: SignalPhase {
                cycle_s: signal_cycle_s,
                green_s: signal_cycle_s / 2.0,
                offset_s,
            },
        });
    }

    let mut spawn_points = Vec::new();
    for lane in &lanes {
        let mut s = SPAWN_MARGIN_M;
        while s <= lane.length - SPAWN_MARGIN_M {
            spawn_points.push((lane.id, s));
            s += SPAWN_SPACING_M;
        }
    }

    Ok(RoadNetwork {
        lanes,
        intersections,
        grid_dims: (rows, cols),
        spawn_points,
    })
}
