//! Baseline driving layer: car-following law, actuation, signal compliance
//! and lane-frame collision geometry.

use crate::behavior::Directive;
use crate::clock::SimClock;
use crate::network::{Intersection, LaneId, Signal};
use crate::vehicle::{BehaviorTag, ControlVector, VehicleId, VehicleState};

/// Lateral drift rate toward the offset target, m/s.
pub const LATERAL_SLEW_M_PER_S: f64 = 1.0;

/// Car-following parameters (intelligent-driver-model style).
#[derive(Clone, PartialEq, Debug)]
pub struct FollowParams {
    pub desired_time_gap: f64,
    pub min_standstill_gap: f64,
    pub max_accel: f64,
    pub comfortable_decel: f64,
    pub accel_exponent: f64,
}

impl Default for FollowParams {
    fn default() -> Self {
        Self {
            desired_time_gap: 1.5,
            min_standstill_gap: 2.0,
            max_accel: 2.0,
            comfortable_decel: 3.0,
            accel_exponent: 4.0,
        }
    }
}

impl FollowParams {
    /// Hardest deceleration the plant can produce.
    #[inline]
    pub fn decel_limit(&self) -> f64 {
        3.0 * self.comfortable_decel
    }

    /// Same law with the desired time gap scaled by a directive's gap factor.
    pub fn with_gap_factor(&self, factor: f64) -> FollowParams {
        FollowParams {
            desired_time_gap: self.desired_time_gap * factor,
            ..self.clone()
        }
    }
}

/// Longitudinal acceleration for a vehicle at speed `v` targeting `v_target`,
/// with a leader `gap` meters ahead moving at `v_lead`. Pass
/// `gap = f64::INFINITY` for a free road. Output is clamped to
/// `[-decel_limit, max_accel]`.
pub fn follow_accel(gap: f64, v: f64, v_lead: f64, v_target: f64, params: &FollowParams) -> f64 {
    let limit = params.decel_limit();
    if !(v_target > 0.0) {
        return if v > 0.0 { -limit } else { 0.0 };
    }
    if gap <= 0.0 {
        return -limit;
    }
    let free = params.max_accel * (1.0 - libm::pow(v / v_target, params.accel_exponent));
    let desired_gap = params.min_standstill_gap
        + (v * params.desired_time_gap
            + v * (v - v_lead) / (2.0 * (params.max_accel * params.comfortable_decel).sqrt()))
        .max(0.0);
    let ratio = desired_gap / gap;
    (free - params.max_accel * ratio * ratio).clamp(-limit, params.max_accel)
}

/// Map a commanded acceleration and lateral-drift command into normalized
/// controls through the fixed actuator scale.
pub fn control_from_accel(accel: f64, steer: f64, params: &FollowParams) -> ControlVector {
    if accel >= 0.0 {
        ControlVector {
            throttle: (accel / params.max_accel).clamp(0.0, 1.0),
            brake: 0.0,
            steer,
        }
    } else {
        ControlVector {
            throttle: 0.0,
            brake: (-accel / params.decel_limit()).clamp(0.0, 1.0),
            steer,
        }
    }
}

/// Plant model: the fixed actuator map from a control vector back to
/// acceleration. Speed caps are enforced by the integrator, not here, so a
/// frozen throttle keeps pushing a distracted vehicle regardless of how fast
/// it already is.
#[inline]
pub fn accel_from_control(control: &ControlVector, params: &FollowParams) -> f64 {
    control.throttle * params.max_accel - control.brake * params.decel_limit()
}

/// Steer command that drifts `offset` toward `target` at the lateral slew
/// rate without overshooting within one step.
pub fn steer_toward(offset: f64, target: f64, dt: f64) -> f64 {
    let max_step = LATERAL_SLEW_M_PER_S * dt;
    if max_step <= 0.0 {
        return 0.0;
    }
    ((target - offset) / max_step).clamp(-1.0, 1.0)
}

/// Vehicles hold this far short of a stop line; stopped queues then stay
/// clear of the junction-mouth zone where footprints on connecting lanes
/// couple.
pub const STOP_LINE_SETBACK_M: f64 = 1.0;

/// Deceleration used for the amber stop-or-go decision.
const AMBER_STOP_DECEL: f64 = 3.0;

/// If the signal facing `vehicle` requires stopping (and the directive says
/// to comply), returns the stop-line position to treat as a standing
/// obstacle. Amber stops the vehicle only while it can still comfortably
/// brake to the line.
pub fn signal_gate(
    vehicle: &VehicleState,
    directive: &Directive,
    intersection: &Intersection,
    clock: &SimClock,
) -> Option<f64> {
    let approach = intersection
        .approaches
        .iter()
        .find(|a| a.lane == vehicle.lane)?;
    if !directive.obey_signals {
        return None;
    }
    match intersection.phase.signal_for(approach.heading, clock.t()) {
        Signal::Green => None,
        Signal::Red => Some(approach.stop_line),
        Signal::Amber => {
            // Stop only when the braking law can settle at its usual resting
            // point (setback plus standstill gap) under comfortable
            // deceleration; otherwise the vehicle is committed and proceeds.
            let rest = approach.stop_line - STOP_LINE_SETBACK_M - 2.0;
            let dist = rest - vehicle.front();
            let stopping = vehicle.v * vehicle.v / (2.0 * AMBER_STOP_DECEL);
            (dist >= stopping).then_some(approach.stop_line)
        }
    }
}

/// One recorded contact between two vehicles (reported once per episode,
/// at onset).
#[derive(Clone, PartialEq, Debug)]
pub struct CollisionEvent {
    pub t: f64,
    pub vehicle_a: VehicleId,
    pub vehicle_b: VehicleId,
    pub behaviors: (BehaviorTag, BehaviorTag),
    pub lane: LaneId,
    pub position: f64,
}

/// Lane-frame rectangle overlap: longitudinal extents by length, lateral
/// extents by width centered at each lateral offset.
#[inline]
pub fn footprints_overlap(
    longitudinal_distance: f64,
    a: &VehicleState,
    b: &VehicleState,
) -> bool {
    longitudinal_distance.abs() < (a.length + b.length) / 2.0
        && (a.lateral_offset - b.lateral_offset).abs() < (a.width + b.width) / 2.0
}

/// Lateral bands overlap: used to decide whether a vehicle ahead actually
/// blocks this one's path.
#[inline]
pub fn lateral_bands_overlap(a: &VehicleState, b: &VehicleState) -> bool {
    (a.lateral_offset - b.lateral_offset).abs() < (a.width + b.width) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Approach, Heading, SignalPhase};
    use crate::vehicle::{VehicleId, DEFAULT_VEHICLE_LENGTH_M, DEFAULT_VEHICLE_WIDTH_M};

    fn params() -> FollowParams {
        FollowParams::default()
    }

    fn vehicle(lane: u32, s: f64, v: f64, offset: f64) -> VehicleState {
        VehicleState {
            id: VehicleId(0),
            lane: LaneId(lane),
            s,
            v,
            lateral_offset: offset,
            length: DEFAULT_VEHICLE_LENGTH_M,
            width: DEFAULT_VEHICLE_WIDTH_M,
            control: ControlVector::COAST,
            behavior: BehaviorTag::Normal,
            rng_stream: 0,
        }
    }

    #[test]
    fn free_flow_equilibrium_is_zero_accel() {
        let a = follow_accel(f64::INFINITY, 8.33, 0.0, 8.33, &params());
        assert!(a.abs() < 1e-9, "free-flow accel {a}");
    }

    #[test]
    fn standstill_equilibrium_is_zero_accel() {
        let p = params();
        let a = follow_accel(p.min_standstill_gap, 0.0, 0.0, 8.33, &p);
        assert!(a.abs() < 1e-9, "standstill accel {a}");
    }

    #[test]
    fn output_is_bounded() {
        let p = params();
        for gap in [0.1, 1.0, 5.0, 50.0, f64::INFINITY] {
            for v in [0.0, 5.0, 12.5] {
                for v_lead in [0.0, 4.0, 12.0] {
                    let a = follow_accel(gap, v, v_lead, 8.33, &p);
                    assert!(a <= p.max_accel + 1e-12 && a >= -p.decel_limit() - 1e-12);
                }
            }
        }
        assert_eq!(follow_accel(-1.0, 5.0, 0.0, 8.33, &p), -p.decel_limit());
    }

    #[test]
    fn short_gap_forces_deceleration() {
        let p = params();
        let a = follow_accel(4.0, 8.33, 8.33, 8.33, &p);
        assert!(a < -0.5, "tailgating accel {a}");
    }

    #[test]
    fn control_round_trips_through_plant() {
        let p = params();
        for accel in [-7.0, -1.5, 0.0, 0.4, 1.2] {
            let c = control_from_accel(accel, 0.0, &p);
            assert!(c.is_valid());
            let back = accel_from_control(&c, &p);
            assert!((back - accel).abs() < 1e-9, "accel {accel} -> {back}");
        }
        // Saturation at the actuator limits.
        let c = control_from_accel(5.0, 0.0, &p);
        assert_eq!(accel_from_control(&c, &p), p.max_accel);
        let c = control_from_accel(-20.0, 0.0, &p);
        assert_eq!(accel_from_control(&c, &p), -p.decel_limit());
    }

    #[test]
    fn steer_converges_without_overshoot() {
        let dt = 0.05;
        let mut offset = -1.2;
        let target = 0.85;
        for _ in 0..3000 {
            let steer = steer_toward(offset, target, dt);
            assert!((-1.0..=1.0).contains(&steer));
            offset += steer * LATERAL_SLEW_M_PER_S * dt;
        }
        assert!((offset - target).abs() < 1e-9);
    }

    fn test_intersection(stop_line: f64) -> Intersection {
        Intersection {
            id: 0,
            approaches: vec![Approach {
                lane: LaneId(0),
                heading: Heading::North,
                stop_line,
            }],
            phase: SignalPhase {
                cycle_s: 30.0,
                green_s: 15.0,
                offset_s: 0.0,
            },
        }
    }

    fn clock_at_t(t: f64) -> SimClock {
        let mut c = SimClock::new(0.05);
        c.tick = (t / 0.05).round() as u64;
        c
    }

    #[test]
    fn gate_stops_compliant_traffic_on_red() {
        let inter = test_intersection(200.0);
        let veh = vehicle(0, 150.0, 8.0, 0.0);
        // North is red in [15, 30) of the cycle.
        let stop = signal_gate(&veh, &Directive::NORMAL, &inter, &clock_at_t(20.0));
        assert_eq!(stop, Some(200.0));
    }

    #[test]
    fn gate_ignored_when_directive_disobeys() {
        let inter = test_intersection(200.0);
        let veh = vehicle(0, 150.0, 8.0, 0.0);
        let runner = Directive {
            obey_signals: false,
            ..Directive::NORMAL
        };
        assert_eq!(signal_gate(&veh, &runner, &inter, &clock_at_t(20.0)), None);
    }

    #[test]
    fn gate_open_on_green() {
        let inter = test_intersection(200.0);
        let veh = vehicle(0, 150.0, 8.0, 0.0);
        assert_eq!(
            signal_gate(&veh, &Directive::NORMAL, &inter, &clock_at_t(1.0)),
            None
        );
    }

    #[test]
    fn amber_stops_only_when_stoppable() {
        let inter = test_intersection(200.0);
        // Amber for north is [12, 15). Far vehicle can stop; near one is
        // committed and proceeds.
        let far = vehicle(0, 150.0, 8.0, 0.0);
        assert_eq!(
            signal_gate(&far, &Directive::NORMAL, &inter, &clock_at_t(13.0)),
            Some(200.0)
        );
        let near = vehicle(0, 195.0, 8.0, 0.0);
        assert_eq!(
            signal_gate(&near, &Directive::NORMAL, &inter, &clock_at_t(13.0)),
            None
        );
    }

    #[test]
    fn gate_absent_off_the_approach() {
        let inter = test_intersection(200.0);
        let veh = vehicle(7, 150.0, 8.0, 0.0);
        assert_eq!(
            signal_gate(&veh, &Directive::NORMAL, &inter, &clock_at_t(20.0)),
            None
        );
    }

    #[test]
    fn footprint_overlap_same_lane() {
        let a = vehicle(0, 100.0, 0.0, 0.0);
        let b = vehicle(0, 103.0, 0.0, 0.0);
        // Centers 3 m apart, half-length sum 4.5 m: overlapping.
        assert!(footprints_overlap(3.0, &a, &b));
        let c = vehicle(0, 105.0, 0.0, 0.0);
        assert!(!footprints_overlap(5.0, &a, &c));
    }

    #[test]
    fn extreme_opposite_offsets_clear_laterally() {
        // Offsets -1.7 and +1.7 with 2 m widths leave a 1.4 m lateral gap.
        let a = vehicle(0, 100.0, 0.0, -1.7);
        let b = vehicle(0, 100.0, 0.0, 1.7);
        let gap = (a.lateral_offset - b.lateral_offset).abs() - (a.width + b.width) / 2.0;
        assert!((gap - 1.4).abs() < 1e-12);
        assert!(!footprints_overlap(0.0, &a, &b));
        assert!(!lateral_bands_overlap(&a, &b));
    }
}
