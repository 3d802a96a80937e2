//! World state and the per-tick step pipeline.
//!
//! A step runs in two phases over vehicles in ascending id order: phase A
//! computes each vehicle's directive and a fresh control vector from a
//! snapshot of the world (or reapplies the frozen control during a
//! distraction), phase B integrates speeds and positions semi-implicitly and
//! handles lane transitions. Collision detection and crashed-vehicle
//! replacement run on the integrated state. A single run is strictly
//! sequential; parallelism only ever exists across independent worlds.

use std::collections::HashSet;

use crate::behavior::{behavior_directive, BehaviorProfile, BehaviorRuntime, Directive};
use crate::clock::SimClock;
use crate::dynamics::{
    accel_from_control, control_from_accel, follow_accel, footprints_overlap,
    lateral_bands_overlap, signal_gate, steer_toward, CollisionEvent, FollowParams,
    LATERAL_SLEW_M_PER_S, STOP_LINE_SETBACK_M,
};
use crate::network::{LaneId, RoadNetwork, Signal};
use crate::rng::{stream_keys, RandomStream};
use crate::vehicle::{
    ControlVector, VehicleId, VehicleState, DEFAULT_VEHICLE_LENGTH_M, DEFAULT_VEHICLE_WIDTH_M,
    OFFSET_BOUND_M,
};

/// Fixed physics step. Recording decimates this to the configured rate.
pub const DT_S: f64 = 0.05;
/// A red-light encounter begins when the front bumper is within this distance
/// of a red stop line.
pub const ENCOUNTER_ZONE_M: f64 = 15.0;
/// An encounter resolves as compliance when the vehicle has stopped with its
/// front bumper this close to the line.
const COMPLY_NEAR_M: f64 = 4.0;
/// A stop only counts as compliance when the road ahead is clear this far;
/// a vehicle stuck behind a jammed exit proves nothing about the signal.
const COMPLY_CLEAR_AHEAD_M: f64 = 10.0;
/// Leader lookahead used by the driving controller.
const CONTROL_SENSING_M: f64 = 40.0;
/// Zone before a junction in which conflicting entries are arbitrated.
const MERGE_GUARD_RANGE_M: f64 = 25.0;
/// Longitudinal window scanned for footprint overlap.
const COLLISION_WINDOW_M: f64 = 6.0;
/// How far into a non-committed connecting lane the controller watches for
/// vehicles still in or near the junction mouth.
const MOUTH_WATCH_M: f64 = 12.0;
/// Time horizon extending the mouth watch for fast traffic.
const MOUTH_WATCH_S: f64 = 1.5;
/// Clear distance (both ways) required around a respawn point.
const RESPAWN_CLEAR_M: f64 = 20.0;
/// Lateral displacement picked up when a control-frozen vehicle fails to
/// steer through a junction and swings wide.
const TURN_VEER_M: f64 = 1.7;
/// Speed floor used when estimating junction arrival times, so stopped
/// vehicles get the discharge speed they are about to have.
const DISCHARGE_FLOOR_M_S: f64 = 2.0;
/// Extra seconds of right-of-way conceded to a vehicle that is visibly not
/// going to yield (a signal runner or a barging lane occupier).
const HESITATION_S: f64 = 2.5;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum EncounterPhase {
    /// Not facing a red stop line.
    Idle,
    /// Inside the encounter zone of a red light, outcome open.
    Pending,
    /// Outcome recorded; waiting to leave the zone.
    Done,
}

/// One agent: kinematic state plus behavior machinery and its private
/// random stream.
#[derive(Clone, Debug)]
pub struct SimVehicle {
    pub state: VehicleState,
    pub profile: BehaviorProfile,
    pub runtime: BehaviorRuntime,
    pub stream: RandomStream,
    pub directive: Directive,
    /// Successor lane committed for the next junction crossing.
    pub route_next: LaneId,
    pub active: bool,
    encounter: EncounterPhase,
}

/// Resolved red-light encounter: the vehicle either crossed on red (`ran`)
/// or came to a stop at the line. Approaches cut short by a phase change
/// resolve as neither and are not recorded.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct EncounterRecord {
    pub vehicle: VehicleId,
    pub t: f64,
    pub ran: bool,
}

/// A scheduled distraction interval, logged when it is drawn.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct FreezeSpan {
    pub vehicle: VehicleId,
    pub start: f64,
    pub duration: f64,
}

#[derive(Debug)]
pub struct World {
    pub network: RoadNetwork,
    pub clock: SimClock,
    pub follow: FollowParams,
    pub vehicles: Vec<SimVehicle>,
    /// Collision log for the whole run.
    pub events: Vec<CollisionEvent>,
    /// Resolved red-light encounters for the whole run.
    pub encounters: Vec<EncounterRecord>,
    /// Every distraction interval scheduled during the run.
    pub freeze_log: Vec<FreezeSpan>,
    global_seed: u64,
    /// Per-lane active vehicle indices sorted by (s, id).
    occupancy: Vec<Vec<u32>>,
    /// Lanes feeding into each lane; used for respawn clearance checks.
    predecessors: Vec<Vec<LaneId>>,
    /// Unordered vehicle pairs currently in contact (episode registry).
    contacts: HashSet<(u32, u32)>,
    pending_respawn: Vec<u32>,
    respawn_stream: RandomStream,
}

impl World {
    pub fn new(network: RoadNetwork, global_seed: u64, follow: FollowParams) -> World {
        let lanes = network.lanes.len();
        let mut predecessors = vec![Vec::new(); lanes];
        for lane in &network.lanes {
            for succ in &lane.successors {
                predecessors[succ.index()].push(lane.id);
            }
        }
        World {
            network,
            clock: SimClock::new(DT_S),
            follow,
            vehicles: Vec::new(),
            events: Vec::new(),
            encounters: Vec::new(),
            freeze_log: Vec::new(),
            global_seed,
            occupancy: vec![Vec::new(); lanes],
            predecessors,
            contacts: HashSet::new(),
            pending_respawn: Vec::new(),
            respawn_stream: RandomStream::new(global_seed, stream_keys::RESPAWN),
        }
    }

    /// Add a vehicle at rest. Ids must be added in ascending order and double
    /// as indices into `vehicles`.
    pub fn add_vehicle(&mut self, lane: LaneId, s: f64, profile: BehaviorProfile) -> VehicleId {
        let id = VehicleId(self.vehicles.len() as u32);
        let mut stream = RandomStream::new(self.global_seed, u64::from(id.0));
        let now = self.clock.t();
        let runtime = BehaviorRuntime::init(&profile, now, &mut stream);
        self.log_schedule(id, &profile, &runtime);
        let successors = &self.network.lane(lane).successors;
        let route_next = successors[stream.next_index(successors.len())];
        let state = VehicleState {
            id,
            lane,
            s,
            v: 0.0,
            lateral_offset: 0.0,
            length: DEFAULT_VEHICLE_LENGTH_M,
            width: DEFAULT_VEHICLE_WIDTH_M,
            control: ControlVector::COAST,
            behavior: profile.tag(),
            rng_stream: u64::from(id.0),
        };
        self.vehicles.push(SimVehicle {
            state,
            profile,
            runtime,
            stream,
            directive: Directive::NORMAL,
            route_next,
            active: true,
            encounter: EncounterPhase::Idle,
        });
        id
    }

    fn log_schedule(&mut self, id: VehicleId, profile: &BehaviorProfile, runtime: &BehaviorRuntime) {
        if matches!(profile, BehaviorProfile::Distracted(_)) {
            self.freeze_log.push(FreezeSpan {
                vehicle: id,
                start: runtime.loss_start_t,
                duration: runtime.loss_duration,
            });
        }
    }

    pub fn active_count(&self) -> usize {
        self.vehicles.iter().filter(|v| v.active).count()
    }

    pub fn total_count(&self) -> usize {
        self.vehicles.len()
    }

    /// Advance the world by one `DT_S` step.
    pub fn step(&mut self) {
        self.process_pending_respawns();
        self.rebuild_occupancy();

        let t = self.clock.t();
        let n = self.vehicles.len();

        // Phase A: directives and controls from the pre-step snapshot.
        for i in 0..n {
            if !self.vehicles[i].active {
                continue;
            }
            let at_signal = self.at_signal(i);
            self.update_encounter_entry(i, at_signal);

            let vehicle = &mut self.vehicles[i];
            let cycle_before = vehicle.runtime.cycle_start_t;
            let directive = behavior_directive(
                &vehicle.profile,
                &mut vehicle.runtime,
                &self.clock,
                at_signal,
                &mut vehicle.stream,
            );
            if vehicle.runtime.cycle_start_t != cycle_before {
                let span = FreezeSpan {
                    vehicle: vehicle.state.id,
                    start: vehicle.runtime.loss_start_t,
                    duration: vehicle.runtime.loss_duration,
                };
                self.freeze_log.push(span);
            }
            self.vehicles[i].directive = directive;

            if directive.freeze_control {
                let vehicle = &mut self.vehicles[i];
                if vehicle.runtime.frozen_control.is_none() {
                    vehicle.runtime.frozen_control = Some(vehicle.state.control);
                }
                continue;
            }
            self.vehicles[i].runtime.frozen_control = None;

            let state = &self.vehicles[i].state;
            let lane = self.network.lane(state.lane);
            let v_target = directive.target_speed_factor * lane.speed_limit;
            let params = self.follow.with_gap_factor(directive.gap_factor);

            let mut accel =
                match self.find_leader_filtered(i, CONTROL_SENSING_M, directive.obey_signals) {
                    Some((gap, v_lead)) => follow_accel(gap, state.v, v_lead, v_target, &params),
                    None => follow_accel(f64::INFINITY, state.v, 0.0, v_target, &params),
                };

            let intersection = self.network.intersection_for(state.lane);
            let mut wall = signal_gate(state, &directive, intersection, &self.clock);
            if wall.is_none()
                && directive.obey_signals
                && directive.yields_at_junctions
                && self.merge_blocked(i)
            {
                wall = Some(self.network.stop_line(state.lane));
            }
            if let Some(stop) = wall {
                let gap = stop - STOP_LINE_SETBACK_M - state.front();
                accel = accel.min(follow_accel(gap, state.v, 0.0, v_target, &params));
            }

            let steer = steer_toward(
                state.lateral_offset,
                directive.lateral_offset_target,
                self.clock.dt,
            );
            self.vehicles[i].state.control = control_from_accel(accel, steer, &self.follow);
        }

        // Phase B: semi-implicit integration, lane transitions, encounter
        // resolution.
        for i in 0..n {
            if !self.vehicles[i].active {
                continue;
            }
            let dt = self.clock.dt;
            let (v_cap, control) = {
                let vehicle = &self.vehicles[i];
                let lane = self.network.lane(vehicle.state.lane);
                (
                    vehicle.directive.target_speed_factor * lane.speed_limit,
                    vehicle.state.control,
                )
            };
            let state = &mut self.vehicles[i].state;
            let accel = accel_from_control(&control, &self.follow);
            state.v = (state.v + accel * dt).clamp(0.0, v_cap);
            state.s += state.v * dt;
            state.lateral_offset = (state.lateral_offset
                + control.steer * LATERAL_SLEW_M_PER_S * dt)
                .clamp(-OFFSET_BOUND_M, OFFSET_BOUND_M);

            self.resolve_comply(i, t);
            self.handle_transitions(i, t);
        }

        self.clock.advance();
        self.rebuild_occupancy();
        let events = self.detect_collisions();
        if !events.is_empty() {
            self.replace_crashed(&events);
            self.events.extend(events);
        }
    }

    /// Run for a whole number of seconds.
    pub fn step_for(&mut self, duration_s: f64) {
        let ticks = (duration_s / DT_S).round() as u64;
        for _ in 0..ticks {
            self.step();
        }
    }

    /// True while the vehicle faces a red stop line it is close to (or is
    /// still crossing): once inside the encounter zone, the state holds until
    /// the vehicle transitions onto the next lane or the light changes.
    fn at_signal(&self, i: usize) -> bool {
        let state = &self.vehicles[i].state;
        let dist = self.network.stop_line(state.lane) - state.front();
        if dist > ENCOUNTER_ZONE_M {
            return false;
        }
        self.network.signal_on(state.lane, self.clock.t()) == Signal::Red
    }

    fn update_encounter_entry(&mut self, i: usize, at_signal: bool) {
        let state = &self.vehicles[i].state;
        let dist = self.network.stop_line(state.lane) - state.front();
        match self.vehicles[i].encounter {
            EncounterPhase::Idle => {
                // An encounter begins on entering the zone of a red light.
                if at_signal && dist >= 0.0 {
                    self.vehicles[i].encounter = EncounterPhase::Pending;
                }
            }
            // A phase change before the driver either crossed or stopped
            // voids the approach; the driver never had to choose.
            EncounterPhase::Pending | EncounterPhase::Done => {
                if !at_signal {
                    self.vehicles[i].encounter = EncounterPhase::Idle;
                }
            }
        }
    }

    /// A pending encounter resolves as compliance once the vehicle has
    /// stopped at the line while the light is still red and nothing blocks
    /// the road ahead, so the stop is attributable to the signal rather than
    /// to traffic.
    fn resolve_comply(&mut self, i: usize, t: f64) {
        if self.vehicles[i].encounter != EncounterPhase::Pending {
            return;
        }
        let state = &self.vehicles[i].state;
        let dist = self.network.stop_line(state.lane) - state.front();
        if (0.0..=COMPLY_NEAR_M).contains(&dist)
            && state.v < 0.1
            && self.network.signal_on(state.lane, t) == Signal::Red
            && self
                .find_leader_filtered(i, COMPLY_CLEAR_AHEAD_M, false)
                .is_none()
        {
            let record = EncounterRecord {
                vehicle: state.id,
                t,
                ran: false,
            };
            self.encounters.push(record);
            self.vehicles[i].encounter = EncounterPhase::Done;
        }
    }

    fn handle_transitions(&mut self, i: usize, t: f64) {
        loop {
            let (lane, s) = {
                let st = &self.vehicles[i].state;
                (st.lane, st.s)
            };
            let length = self.network.lane(lane).length;
            if s <= length {
                return;
            }
            // Crossing the stop line on red resolves a pending encounter as
            // a run.
            if self.vehicles[i].encounter == EncounterPhase::Pending
                && self.network.signal_on(lane, t) == Signal::Red
            {
                let record = EncounterRecord {
                    vehicle: self.vehicles[i].state.id,
                    t,
                    ran: true,
                };
                self.encounters.push(record);
            }
            self.vehicles[i].encounter = EncounterPhase::Idle;

            let next = self.vehicles[i].route_next;
            let old_heading = self.network.lane(lane).heading;
            let new_heading = self.network.lane(next).heading;
            let vehicle = &mut self.vehicles[i];
            vehicle.state.s = s - length;
            vehicle.state.lane = next;
            // A control-frozen driver does not steer through the junction:
            // the vehicle swings wide of the new lane's centerline (to the
            // outside of a turn; continuing its drift when going straight)
            // and only recovers once the distraction ends.
            if vehicle.directive.freeze_control {
                let veer = if new_heading == old_heading.turned_right() {
                    TURN_VEER_M
                } else if new_heading == old_heading {
                    TURN_VEER_M.copysign(vehicle.state.lateral_offset)
                } else {
                    -TURN_VEER_M
                };
                vehicle.state.lateral_offset =
                    (vehicle.state.lateral_offset + veer).clamp(-OFFSET_BOUND_M, OFFSET_BOUND_M);
            }
            let successors = &self.network.lane(next).successors;
            vehicle.route_next = successors[vehicle.stream.next_index(successors.len())];
        }
    }

    /// Nearest vehicle ahead on the own lane chain whose lateral band
    /// overlaps this one's. Returns the bumper-to-bumper gap and the leader's
    /// speed. `range` bounds the center-to-center search distance. Near the
    /// lane end, vehicles still straddling the junction onto any connecting
    /// lane count as obstacles, whatever exit they took.
    pub fn find_leader(&self, i: usize, range: f64) -> Option<(f64, f64)> {
        self.find_leader_filtered(i, range, true)
    }

    fn find_leader_filtered(
        &self,
        i: usize,
        range: f64,
        watch_cross_exits: bool,
    ) -> Option<(f64, f64)> {
        let me = &self.vehicles[i].state;
        let occ = &self.occupancy[me.lane.index()];
        let mut best: Option<(f64, f64)> = None;
        for &j in occ {
            let other = &self.vehicles[j as usize].state;
            if (other.s, other.id) <= (me.s, me.id) {
                continue;
            }
            let dist = other.s - me.s;
            if dist > range {
                break;
            }
            if lateral_bands_overlap(me, other) {
                best = Some((dist - (me.length + other.length) / 2.0, other.v));
                break;
            }
        }
        let remaining = self.network.lane(me.lane).length - me.s;
        if remaining < range {
            let next = self.vehicles[i].route_next;
            for succ in &self.network.lane(me.lane).successors {
                // The committed successor is followed at full range; other
                // connecting lanes matter only while a vehicle can still
                // poke back into the junction mouth. The watch scales with
                // own speed, and is halved for a driver barreling through a
                // red, who reacts to cross traffic far too late.
                let watch = MOUTH_WATCH_M.max(me.v * MOUTH_WATCH_S);
                let horizon = if *succ == next {
                    range - remaining
                } else if watch_cross_exits {
                    watch
                } else {
                    watch / 2.0
                };
                for &j in &self.occupancy[succ.index()] {
                    let other = &self.vehicles[j as usize].state;
                    if other.s > horizon {
                        break;
                    }
                    let dist = remaining + other.s;
                    if dist > range {
                        break;
                    }
                    if lateral_bands_overlap(me, other) {
                        let gap = dist - (me.length + other.length) / 2.0;
                        if best.is_none() || gap < best.unwrap().0 {
                            best = Some((gap, other.v));
                        }
                        break;
                    }
                }
            }
        }
        best
    }

    /// Conflicting junction entries are arbitrated by estimated arrival time
    /// (ties by id): the later vehicle holds at the line until the winner is
    /// through and becomes an ordinary leader or straddling obstacle. Two
    /// movements conflict when either exit connects to the other vehicle's
    /// lane, which is exactly when the collision model can couple their
    /// footprints at the junction.
    fn merge_blocked(&self, i: usize) -> bool {
        let me = &self.vehicles[i].state;
        let my_remaining = self.network.stop_line(me.lane) - me.front();
        if my_remaining > MERGE_GUARD_RANGE_M {
            return false;
        }
        let my_lane_successors = &self.network.lane(me.lane).successors;
        let target = self.vehicles[i].route_next;
        let junction = self.network.lane(me.lane).end_intersection;
        let t = self.clock.t();
        for approach in &self.network.intersections[junction].approaches {
            if approach.lane == me.lane {
                continue;
            }
            let their_successors = &self.network.lane(approach.lane).successors;
            for &j in &self.occupancy[approach.lane.index()] {
                let other = &self.vehicles[j as usize];
                let conflicting = my_lane_successors.contains(&other.route_next)
                    || their_successors.contains(&target);
                if !conflicting {
                    continue;
                }
                let their_remaining = approach.stop_line - other.state.front();
                if their_remaining > MERGE_GUARD_RANGE_M {
                    continue;
                }
                // A vehicle held by its own red light claims no priority;
                // one with its nose past the line is committed regardless.
                let entering = their_remaining < 0.0
                    || self.network.signal_on(approach.lane, t) != Signal::Red
                    || !other.directive.obey_signals;
                if !entering {
                    continue;
                }
                // Priority goes to the earlier arrival: drivers yield to a
                // fast vehicle bearing down on the junction even when they
                // are nearer the line themselves, and concede extra margin
                // to one that is clearly not going to stop.
                let mut their_eta =
                    their_remaining.max(0.0) / other.state.v.max(DISCHARGE_FLOOR_M_S);
                if !other.directive.obey_signals {
                    their_eta -= HESITATION_S;
                }
                let my_eta = my_remaining.max(0.0) / me.v.max(DISCHARGE_FLOOR_M_S);
                if (their_eta, other.state.id) < (my_eta, me.id) {
                    return true;
                }
            }
        }
        false
    }

    fn rebuild_occupancy(&mut self) {
        for lane in &mut self.occupancy {
            lane.clear();
        }
        for (i, vehicle) in self.vehicles.iter().enumerate() {
            if vehicle.active {
                self.occupancy[vehicle.state.lane.index()].push(i as u32);
            }
        }
        for lane in &mut self.occupancy {
            lane.sort_unstable_by(|&a, &b| {
                let sa = self.vehicles[a as usize].state.s;
                let sb = self.vehicles[b as usize].state.s;
                sa.partial_cmp(&sb).unwrap().then(a.cmp(&b))
            });
        }
    }

    /// Footprint-overlap pairs on the same or connecting lanes, reported
    /// once per contact episode (at onset).
    fn detect_collisions(&mut self) -> Vec<CollisionEvent> {
        let t = self.clock.t();
        let mut current: HashSet<(u32, u32)> = HashSet::new();
        let mut events = Vec::new();
        let note = |a_idx: u32,
                        b_idx: u32,
                        vehicles: &[SimVehicle],
                        contacts: &HashSet<(u32, u32)>,
                        current: &mut HashSet<(u32, u32)>,
                        events: &mut Vec<CollisionEvent>| {
            let key = (a_idx.min(b_idx), a_idx.max(b_idx));
            if !current.insert(key) {
                return;
            }
            if contacts.contains(&key) {
                return;
            }
            let a = &vehicles[key.0 as usize].state;
            let b = &vehicles[key.1 as usize].state;
            events.push(CollisionEvent {
                t,
                vehicle_a: a.id,
                vehicle_b: b.id,
                behaviors: (a.behavior, b.behavior),
                lane: a.lane,
                position: a.s,
            });
        };

        for lane in &self.network.lanes {
            let occ = &self.occupancy[lane.id.index()];
            for (k, &i) in occ.iter().enumerate() {
                let a = &self.vehicles[i as usize].state;
                for &j in &occ[k + 1..] {
                    let b = &self.vehicles[j as usize].state;
                    let dist = b.s - a.s;
                    if dist > COLLISION_WINDOW_M {
                        break;
                    }
                    if footprints_overlap(dist, a, b) {
                        note(i, j, &self.vehicles, &self.contacts, &mut current, &mut events);
                    }
                }
            }
            // Straddling pairs across the junction onto each connecting lane.
            for &i in occ.iter().rev() {
                let a = &self.vehicles[i as usize].state;
                let tail_dist = lane.length - a.s;
                if tail_dist > COLLISION_WINDOW_M {
                    break;
                }
                for succ in &lane.successors {
                    for &j in &self.occupancy[succ.index()] {
                        let b = &self.vehicles[j as usize].state;
                        let dist = tail_dist + b.s;
                        if dist > COLLISION_WINDOW_M {
                            break;
                        }
                        if footprints_overlap(dist, a, b) {
                            note(i, j, &self.vehicles, &self.contacts, &mut current, &mut events);
                        }
                    }
                }
            }
        }
        self.contacts = current;
        events
    }

    /// Remove both participants of each collision and respawn them at free
    /// spawn points, keeping their behavior profile and id but drawing a
    /// fresh runtime. With no free point the respawn is deferred.
    fn replace_crashed(&mut self, events: &[CollisionEvent]) {
        let mut crashed: Vec<u32> = Vec::new();
        for event in events {
            for id in [event.vehicle_a, event.vehicle_b] {
                if !crashed.contains(&id.0) {
                    crashed.push(id.0);
                }
            }
        }
        for idx in crashed {
            if self.vehicles[idx as usize].active {
                self.vehicles[idx as usize].active = false;
                self.pending_respawn.push(idx);
            }
        }
        self.rebuild_occupancy();
        self.process_pending_respawns();
    }

    fn process_pending_respawns(&mut self) {
        if self.pending_respawn.is_empty() {
            return;
        }
        let queue = std::mem::take(&mut self.pending_respawn);
        for idx in queue {
            if !self.try_respawn(idx as usize) {
                self.pending_respawn.push(idx);
            }
        }
    }

    fn try_respawn(&mut self, idx: usize) -> bool {
        let n_points = self.network.spawn_points.len();
        let start = self.respawn_stream.next_index(n_points);
        for k in 0..n_points {
            let (lane, pos) = self.network.spawn_points[(start + k) % n_points];
            if !self.spawn_point_free(lane, pos) {
                continue;
            }
            let now = self.clock.t();
            let vehicle = &mut self.vehicles[idx];
            let runtime = BehaviorRuntime::init(&vehicle.profile, now, &mut vehicle.stream);
            vehicle.runtime = runtime;
            vehicle.state.lane = lane;
            vehicle.state.s = pos;
            vehicle.state.v = 0.0;
            vehicle.state.lateral_offset = 0.0;
            vehicle.state.control = ControlVector::COAST;
            vehicle.directive = Directive::NORMAL;
            let successors = &self.network.lane(lane).successors;
            vehicle.route_next = successors[vehicle.stream.next_index(successors.len())];
            vehicle.active = true;
            vehicle.encounter = EncounterPhase::Idle;
            let (id, profile, runtime) = {
                let v = &self.vehicles[idx];
                (v.state.id, v.profile.clone(), v.runtime.clone())
            };
            self.log_schedule(id, &profile, &runtime);
            return true;
        }
        false
    }

    /// Free means no active vehicle within the clear distance along the lane
    /// chain, in either direction.
    fn spawn_point_free(&self, lane: LaneId, pos: f64) -> bool {
        for vehicle in self.vehicles.iter().filter(|v| v.active) {
            if vehicle.state.lane == lane && (vehicle.state.s - pos).abs() < RESPAWN_CLEAR_M {
                return false;
            }
        }
        let length = self.network.lane(lane).length;
        if pos < RESPAWN_CLEAR_M {
            for pred in &self.predecessors[lane.index()] {
                let pred_len = self.network.lane(*pred).length;
                for &j in &self.occupancy[pred.index()] {
                    let other = &self.vehicles[j as usize].state;
                    if (pred_len - other.s) + pos < RESPAWN_CLEAR_M {
                        return false;
                    }
                }
            }
        }
        if pos > length - RESPAWN_CLEAR_M {
            for succ in &self.network.lane(lane).successors {
                for &j in &self.occupancy[succ.index()] {
                    let other = &self.vehicles[j as usize].state;
                    if (length - pos) + other.s < RESPAWN_CLEAR_M {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Trace samples for all active vehicles, ascending id. The leader gap is
    /// bumper-to-bumper along the lane chain, absent beyond `sensing_range`.
    pub fn sample_traces(&self, sensing_range: f64) -> Vec<crate::metrics::TraceSample> {
        let t = self.clock.t();
        self.vehicles
            .iter()
            .enumerate()
            .filter(|(_, v)| v.active)
            .map(|(i, v)| crate::metrics::TraceSample {
                t,
                vehicle: v.state.id,
                behavior: v.state.behavior,
                v: v.state.v,
                lateral_offset: v.state.lateral_offset,
                control: v.state.control,
                leader_gap: self
                    .find_leader(i, sensing_range)
                    .map(|(gap, _)| gap)
                    .filter(|gap| *gap <= sensing_range),
            })
            .collect()
    }
}
