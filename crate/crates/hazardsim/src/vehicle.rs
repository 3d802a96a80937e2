//! Per-vehicle kinematic state and low-level control.

use crate::network::LaneId;

/// Widest lateral band any behavior may occupy, either side of the
/// lane centerline.
pub const OFFSET_BOUND_M: f64 = 1.7;
pub const DEFAULT_VEHICLE_LENGTH_M: f64 = 4.5;
pub const DEFAULT_VEHICLE_WIDTH_M: f64 = 2.0;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VehicleId(pub u32);

impl VehicleId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for VehicleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum BehaviorTag {
    Normal,
    Speeding,
    Impeding,
    CrimpOccupy,
    DrunkDrug,
    Distracted,
}

impl BehaviorTag {
    /// The five hazardous kinds, in the fixed order used for striped
    /// scenario assignment.
    pub const HAZARDS: [BehaviorTag; 5] = [
        BehaviorTag::Speeding,
        BehaviorTag::Impeding,
        BehaviorTag::CrimpOccupy,
        BehaviorTag::DrunkDrug,
        BehaviorTag::Distracted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BehaviorTag::Normal => "normal",
            BehaviorTag::Speeding => "speeding",
            BehaviorTag::Impeding => "impeding",
            BehaviorTag::CrimpOccupy => "crimp_occupy",
            BehaviorTag::DrunkDrug => "drunk_drug",
            BehaviorTag::Distracted => "distracted",
        }
    }

    pub fn parse(name: &str) -> Option<BehaviorTag> {
        match name {
            "normal" => Some(BehaviorTag::Normal),
            "speeding" => Some(BehaviorTag::Speeding),
            "impeding" => Some(BehaviorTag::Impeding),
            "crimp_occupy" => Some(BehaviorTag::CrimpOccupy),
            "drunk_drug" => Some(BehaviorTag::DrunkDrug),
            "distracted" => Some(BehaviorTag::Distracted),
            _ => None,
        }
    }
}

impl std::fmt::Display for BehaviorTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Normalized actuation: throttle and brake in [0,1] and mutually exclusive,
/// steer in [-1,1] commanding lateral drift.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct ControlVector {
    pub throttle: f64,
    pub brake: f64,
    pub steer: f64,
}

impl ControlVector {
    pub const COAST: ControlVector = ControlVector {
        throttle: 0.0,
        brake: 0.0,
        steer: 0.0,
    };

    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.throttle)
            && (0.0..=1.0).contains(&self.brake)
            && (-1.0..=1.0).contains(&self.steer)
            && self.throttle * self.brake == 0.0
    }
}

/// Kinematic and control state of one agent.
#[derive(Clone, PartialEq, Debug)]
pub struct VehicleState {
    pub id: VehicleId,
    pub lane: LaneId,
    /// Longitudinal position of the vehicle center along the lane, m.
    pub s: f64,
    /// Speed, m/s; never negative.
    pub v: f64,
    /// Signed distance from the lane centerline, m; positive is left.
    pub lateral_offset: f64,
    pub length: f64,
    pub width: f64,
    pub control: ControlVector,
    pub behavior: BehaviorTag,
    /// Key of the vehicle's private random substream.
    pub rng_stream: u64,
}

impl VehicleState {
    /// Front bumper position along the lane.
    #[inline]
    pub fn front(&self) -> f64 {
        self.s + self.length / 2.0
    }

    /// Rear bumper position along the lane.
    #[inline]
    pub fn rear(&self) -> f64 {
        self.s - self.length / 2.0
    }
}
