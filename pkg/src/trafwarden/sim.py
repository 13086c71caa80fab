"""Four-approach intersection microsimulation.

One lane per approach, straight-through movements only.  Vehicles follow a
rule-based kinematic law: each step a vehicle picks the nearest barrier
(the stop line when its approach's effective permission is Stop, or the
tail of its predecessor) and caps its speed so it can still halt at that
barrier with the configured deceleration; otherwise it accelerates toward
the free speed.  Braking to Stop is immediate at command time; permission
to Go only becomes effective after the robot finishes the gesture motion
and the driver reaction delay elapses.

Determinism: a run is fully determined by (ScenarioConfig, command
sequence).  Arrivals come from the LCG stream documented in rng.py.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .gestures import (
    APPROACHES,
    Approach,
    Permission,
    PermissionState,
    TrafficSignal,
    all_stop_state,
    signal_definition,
    signal_target_pose,
)
from .kinematics import (
    DONE_TOL,
    JointLimits,
    LinkModel,
    RobotPose,
    default_limits,
    forward_kinematics,
    home_pose,
    interpolate,
)
from .rng import SENSOR_STREAM_XOR, Lcg64

# Minimum speed inside the intersection box: a vehicle that creeps over
# the stop line still clears the box briskly.  6 m/s reproduces the transit
# time of a standstill start under the default acceleration.
BOX_MIN_SPEED = 6.0  # m/s

# Vehicles slower than this count as queued.
QUEUE_SPEED = 0.1  # m/s


class ScenarioError(ValueError):
    """Configuration invariant violation; names the offending field."""

    def __init__(self, field_name: str, message: str) -> None:
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name


@dataclass
class ScenarioConfig:
    lambda_front: float = 0.1     # vehicles/s
    lambda_behind: float = 0.1
    lambda_left: float = 0.1
    lambda_right: float = 0.1
    free_speed: float = 10.0      # m/s
    accel: float = 3.0            # m/s^2, braking and acceleration magnitude
    vehicle_length: float = 4.5   # m
    standstill_gap: float = 2.0   # m
    approach_length: float = 150.0  # m, spawn point to stop line
    box_length: float = 20.0      # m, across the intersection
    reaction_delay: float = 1.0   # s, driver lag after the gesture completes
    joint_speed: float = 1.0      # rad/s
    interim: float = 3.0          # s, change-sign clearance
    min_green: float = 8.0        # s
    max_green: float = 30.0       # s
    sensor_sigma: float = 0.0     # vehicles, queue sensor noise
    seed: int = 1
    duration: float = 600.0       # s
    dt: float = 0.05              # s

    _RATE_FIELDS = {
        Approach.FRONT: "lambda_front",
        Approach.BEHIND: "lambda_behind",
        Approach.LEFT: "lambda_left",
        Approach.RIGHT: "lambda_right",
    }

    def arrival_rate(self, approach: Approach) -> float:
        return getattr(self, self._RATE_FIELDS[approach])

    def validate(self) -> None:
        positive = (
            "free_speed", "accel", "vehicle_length", "standstill_gap",
            "approach_length", "box_length", "joint_speed", "interim",
            "min_green", "max_green", "duration", "dt",
        )
        for name in positive:
            if getattr(self, name) <= 0.0:
                raise ScenarioError(name, "must be positive")
        if self.reaction_delay < 0.0:
            raise ScenarioError("reaction_delay", "must be non-negative")
        if self.sensor_sigma < 0.0:
            raise ScenarioError("sensor_sigma", "must be non-negative")
        if self.dt > 0.1:
            raise ScenarioError("dt", "must be at most 0.1 s")
        if self.min_green > self.max_green:
            raise ScenarioError("min_green", "must not exceed max_green")
        if self.seed < 0:
            raise ScenarioError("seed", "must be non-negative")
        for name in self._RATE_FIELDS.values():
            lam = getattr(self, name)
            if lam < 0.0:
                raise ScenarioError(name, "must be non-negative")
            if lam * self.dt > 1.0:
                raise ScenarioError(name, "rate*dt exceeds 1 (Bernoulli step)")

    def validate_demand(self) -> None:
        """Load-time feasibility: demand below saturation so queues fit.

        A lane discharges at most free_speed/(vehicle_length+gap) veh/s;
        demand above that grows queues without bound and overflows the
        approach for any horizon.
        """
        slot = self.vehicle_length + self.standstill_gap
        for name in self._RATE_FIELDS.values():
            if getattr(self, name) * slot >= self.free_speed:
                raise ScenarioError(name, "demand exceeds lane saturation flow")


@dataclass(slots=True)
class Vehicle:
    vid: int
    approach: Approach
    s: float                 # m to the stop line; negative inside the box
    speed: float             # m/s
    spawn_time: float        # s
    cross_complete_time: Optional[float] = None
    box_speed: float = 0.0   # m/s, fixed when the stop line is crossed
    committed: bool = False  # too close to brake when Stop became effective


@dataclass(frozen=True)
class EffectivePermission:
    """What drivers obey, with the time each assignment became effective."""

    permissions: PermissionState
    since: Dict[Approach, float]


def effective_permissions(
    state: PermissionState,
    gesture_done_time: float,
    now: float,
    tau_react: float,
    previous: EffectivePermission | None = None,
) -> EffectivePermission:
    """Derive driver-visible permissions from the commanded state.

    A newly commanded Go becomes effective at gesture_done_time +
    tau_react; until then the prior effective permission holds.  A
    commanded Stop is effective immediately.
    """
    if previous is None:
        previous = EffectivePermission(all_stop_state(),
                                       {a: 0.0 for a in APPROACHES})
    perms: PermissionState = {}
    since: Dict[Approach, float] = {}
    for a in APPROACHES:
        commanded = state[a]
        prev = previous.permissions[a]
        if commanded is Permission.STOP:
            perms[a] = Permission.STOP
            since[a] = previous.since[a] if prev is Permission.STOP else now
        elif prev is Permission.GO:
            perms[a] = Permission.GO
            since[a] = previous.since[a]
        else:
            gate = gesture_done_time + tau_react
            if now >= gate:
                perms[a] = Permission.GO
                since[a] = gate
            else:
                perms[a] = Permission.STOP
                since[a] = previous.since[a]
    return EffectivePermission(perms, since)


@dataclass(frozen=True)
class ApproachMetrics:
    arrivals: int        # attempted (spawned + blocked at the entrance)
    spawned: int
    blocked: int
    crossed: int
    mean_delay: float    # s/vehicle over spawned vehicles
    max_queue: int

    def to_dict(self) -> Dict[str, float]:
        return {
            "arrivals": self.arrivals,
            "spawned": self.spawned,
            "blocked": self.blocked,
            "crossed": self.crossed,
            "mean_delay": self.mean_delay,
            "max_queue": self.max_queue,
        }


@dataclass(frozen=True)
class MetricsReport:
    per_approach: Dict[Approach, ApproachMetrics]
    total: ApproachMetrics
    conflicts: int
    committed_crossings: int
    trace_length: int

    def to_dict(self) -> Dict[str, object]:
        return {
            "per_approach": {a.value: m.to_dict()
                             for a, m in self.per_approach.items()},
            "total": self.total.to_dict(),
            "conflicts": self.conflicts,
            "committed_crossings": self.committed_crossings,
            "trace_length": self.trace_length,
        }


class Simulation:
    """Owned by a single stepping context; snapshots are fresh copies."""

    def __init__(self, cfg: ScenarioConfig,
                 limits: JointLimits | None = None,
                 links: LinkModel | None = None) -> None:
        cfg.validate()
        self.cfg = cfg
        self.limits = limits if limits is not None else default_limits(cfg.joint_speed)
        self.links = links if links is not None else LinkModel()

        self.clock = 0.0
        self._step_index = 0
        self.vehicles: Dict[Approach, List[Vehicle]] = {a: [] for a in APPROACHES}

        self.pose: RobotPose = home_pose()
        self.target_pose: RobotPose = dict(self.pose)
        self.current_signal: Optional[TrafficSignal] = None
        self.motion_pending = False
        self.motion_done_time = 0.0

        self.commanded: PermissionState = all_stop_state()
        self.effective: PermissionState = all_stop_state()
        self.effective_since: Dict[Approach, float] = {a: 0.0 for a in APPROACHES}
        # Approaches commanded Go but not yet effective; value is the time
        # they flip to Go, or None while the gesture motion is in flight.
        # The flip additionally waits for the crossing pair to clear the
        # box: drivers do not pull into an occupied intersection.
        self._pending_go: Dict[Approach, Optional[float]] = {}
        self._box_count_fb = 0
        self._box_count_lr = 0

        self._rng = Lcg64(cfg.seed)
        self._noise_rng = Lcg64(cfg.seed ^ SENSOR_STREAM_XOR)

        self.attempted = {a: 0 for a in APPROACHES}
        self.blocked = {a: 0 for a in APPROACHES}
        self.spawned = {a: 0 for a in APPROACHES}
        self.crossed = {a: 0 for a in APPROACHES}
        self._delay_sum = {a: 0.0 for a in APPROACHES}
        self.queue_counts = {a: 0 for a in APPROACHES}
        self.max_queue = {a: 0 for a in APPROACHES}
        self.max_queue_total = 0
        self.conflicts = 0
        self._conflict_pairs: set[Tuple[int, int]] = set()
        self.committed_crossings = 0
        self._next_vid = 0

        # Hot-loop constants.
        self._dt = cfg.dt
        self._p_arrival = {a: cfg.arrival_rate(a) * cfg.dt for a in APPROACHES}
        self._slot = cfg.vehicle_length + cfg.standstill_gap
        self._box_exit = cfg.box_length + cfg.vehicle_length
        self._inv_2a = 1.0 / (2.0 * cfg.accel)
        # Beyond this distance the stopping cap cannot bind at free speed.
        self._cruise_dist = cfg.free_speed * cfg.dt + cfg.free_speed ** 2 * self._inv_2a

    # -- commands -----------------------------------------------------------

    def apply_signal(self, signal: TrafficSignal, now: float) -> None:
        """Issue a gesture: start the arm motion and apply its delta."""
        target = signal_target_pose(signal)
        self.current_signal = signal
        self.target_pose = target
        if any(abs(target[j] - self.pose.get(j, 0.0)) > DONE_TOL for j in target):
            self.motion_pending = True
        else:
            self.pose = dict(target)
            self.motion_pending = False
            self._finish_motion(now)
        self._apply_permission_changes(signal_definition(signal).delta, now)

    def apply_grant(self, approaches: Tuple[Approach, ...], now: float) -> None:
        """Internal Go grant accompanying a gesture (no gesture of its own)."""
        self._apply_permission_changes({a: Permission.GO for a in approaches}, now)

    def _apply_permission_changes(self, delta, now: float) -> None:
        for a, perm in delta.items():
            self.commanded[a] = perm
            if perm is Permission.STOP:
                self._pending_go.pop(a, None)
                if self.effective[a] is Permission.GO:
                    self.effective[a] = Permission.STOP
                    self.effective_since[a] = now
                    self._mark_committed(a)
            else:  # GO
                if self.effective[a] is Permission.GO:
                    self._pending_go.pop(a, None)
                elif self.motion_pending:
                    self._pending_go[a] = None
                else:
                    gate = max(now, self.motion_done_time) + self.cfg.reaction_delay
                    self._pending_go[a] = gate

    def _finish_motion(self, done_time: float) -> None:
        self.motion_done_time = done_time
        gate = done_time + self.cfg.reaction_delay
        for a, pending in self._pending_go.items():
            if pending is None:
                self._pending_go[a] = gate

    def _mark_committed(self, approach: Approach) -> None:
        # Vehicles inside their braking distance when Stop takes effect may
        # proceed through; they are counted, not treated as violations.
        inv_2a = self._inv_2a
        for v in self.vehicles[approach]:
            if 0.0 < v.s < v.speed * v.speed * inv_2a:
                v.committed = True

    # -- stepping -----------------------------------------------------------

    def step(self) -> None:
        self._step_index += 1
        clock = self._step_index * self._dt
        self.clock = clock

        if self.motion_pending:
            self.pose, done = interpolate(
                self.pose, self.target_pose, self.cfg.joint_speed, self._dt)
            if done:
                self.motion_pending = False
                self._finish_motion(clock)

        if self._pending_go:
            for a in list(self._pending_go):
                gate = self._pending_go[a]
                if gate is None or clock < gate - 1e-12:
                    continue
                crossing_busy = (self._box_count_lr
                                 if a in (Approach.FRONT, Approach.BEHIND)
                                 else self._box_count_fb)
                if crossing_busy:
                    continue  # hold the Go until the crossing streams clear
                self.effective[a] = Permission.GO
                self.effective_since[a] = gate if clock - self._dt < gate else clock
                del self._pending_go[a]

        self._spawn(clock)

        box_fb: List[int] = []
        box_lr: List[int] = []
        total_queue = 0
        for a in APPROACHES:
            in_box = box_fb if a in (Approach.FRONT, Approach.BEHIND) else box_lr
            q = self._advance_approach(a, clock, in_box)
            self.queue_counts[a] = q
            if q > self.max_queue[a]:
                self.max_queue[a] = q
            total_queue += q
        if total_queue > self.max_queue_total:
            self.max_queue_total = total_queue
        self._box_count_fb = len(box_fb)
        self._box_count_lr = len(box_lr)

        if box_fb and box_lr:
            pairs = self._conflict_pairs
            for i in box_fb:
                for j in box_lr:
                    key = (i, j)
                    if key not in pairs:
                        pairs.add(key)
                        self.conflicts += 1

    def _spawn(self, clock: float) -> None:
        uniform = self._rng.uniform
        cfg = self.cfg
        entrance_block = cfg.approach_length - self._slot
        for a in APPROACHES:
            u = uniform()  # one draw per approach per step, blocked or not
            if u < self._p_arrival[a]:
                self.attempted[a] += 1
                lane = self.vehicles[a]
                if lane and lane[-1].s > entrance_block:
                    self.blocked[a] += 1
                else:
                    self._next_vid += 1
                    lane.append(Vehicle(
                        vid=self._next_vid, approach=a,
                        s=cfg.approach_length, speed=cfg.free_speed,
                        spawn_time=clock))
                    self.spawned[a] += 1

    def _advance_approach(self, a: Approach, clock: float,
                          in_box: List[int]) -> int:
        """Move every vehicle on one approach, front (smallest s) first.

        Returns the queued-vehicle count; appends ids of vehicles inside
        the box to in_box.  Retired vehicles are dropped from the lane.
        """
        lane = self.vehicles[a]
        if not lane:
            return 0
        cfg = self.cfg
        dt = self._dt
        a_dt = cfg.accel * dt
        vf = cfg.free_speed
        go = self.effective[a] is Permission.GO
        slot = self._slot
        veh_len = cfg.vehicle_length
        queue = 0
        retained: List[Vehicle] = []
        prev: Optional[Vehicle] = None
        freeflow = (cfg.approach_length + self._box_exit) / vf

        for v in lane:
            if v.s <= 0.0:
                s_new = v.s - v.box_speed * dt
                if prev is not None and s_new < prev.s + veh_len:
                    s_new = prev.s + veh_len  # no overtaking inside the box
                if s_new <= -self._box_exit:
                    v.cross_complete_time = clock
                    self.crossed[a] += 1
                    delay = (clock - v.spawn_time) - freeflow
                    if delay > 0.0:
                        self._delay_sum[a] += delay
                    continue
                v.s = s_new
                in_box.append(v.vid)
                retained.append(v)
                prev = v
                continue

            # Nearest stopping barrier, as a position on the s axis.
            barrier = -math.inf
            if prev is not None:
                barrier = prev.s + slot
            if not go and not v.committed and barrier < 0.0:
                barrier = 0.0
            dist = v.s - barrier
            speed = v.speed + a_dt
            if speed > vf:
                speed = vf
            if dist < self._cruise_dist:
                if dist <= 0.0:
                    cap = 0.0
                else:
                    # Largest speed that still stops by the barrier after
                    # moving for one step: cap*dt + cap^2/(2a) <= dist.
                    cap = cfg.accel * (math.sqrt(dt * dt + 2.0 * dist / cfg.accel) - dt)
                if speed > cap:
                    speed = cap
                    if speed < 0.0:
                        speed = 0.0
            s_new = v.s - speed * dt
            if s_new <= 0.0 and (go or v.committed):
                # Crossing the stop line: box speed is fixed at entry.
                if v.committed:
                    self.committed_crossings += 1
                v.box_speed = speed if speed > BOX_MIN_SPEED else BOX_MIN_SPEED
                if prev is not None and s_new < prev.s + veh_len:
                    s_new = prev.s + veh_len
                v.s = s_new
                v.speed = speed
                in_box.append(v.vid)
            else:
                if s_new <= 0.0:
                    # Numerical creep against a binding stop line: hold.
                    s_new = v.s
                    speed = 0.0
                v.s = s_new
                v.speed = speed
                if speed < QUEUE_SPEED:
                    queue += 1
            retained.append(v)
            prev = v

        self.vehicles[a] = retained
        return queue

    # -- observation --------------------------------------------------------

    def detect_conflicts(self) -> int:
        """Cumulative count of distinct crossing-stream pairs in the box."""
        return self.conflicts

    def queue_estimates(self) -> Dict[Approach, int]:
        """Per-approach queue reading, with configured Gaussian noise."""
        sigma = self.cfg.sensor_sigma
        if sigma <= 0.0:
            return dict(self.queue_counts)
        est: Dict[Approach, int] = {}
        for a in APPROACHES:
            noisy = self.queue_counts[a] + sigma * self._noise_rng.gauss()
            est[a] = max(0, round(noisy))
        return est

    def effective_view(self) -> EffectivePermission:
        return EffectivePermission(dict(self.effective),
                                   dict(self.effective_since))

    def in_system(self) -> int:
        return sum(len(lane) for lane in self.vehicles.values())

    def frame(self):
        return forward_kinematics(self.pose, self.links)

    def collect_metrics(self, trace_length: int = 0) -> MetricsReport:
        per: Dict[Approach, ApproachMetrics] = {}
        freeflow = (self.cfg.approach_length + self._box_exit) / self.cfg.free_speed
        tot_attempted = tot_spawned = tot_blocked = tot_crossed = 0
        tot_delay = 0.0
        for a in APPROACHES:
            delay_sum = self._delay_sum[a]
            for v in self.vehicles[a]:
                residual = (self.clock - v.spawn_time) - freeflow
                if residual > 0.0:
                    delay_sum += residual
            spawned = self.spawned[a]
            mean = delay_sum / spawned if spawned else 0.0
            per[a] = ApproachMetrics(
                arrivals=self.attempted[a], spawned=spawned,
                blocked=self.blocked[a], crossed=self.crossed[a],
                mean_delay=mean, max_queue=self.max_queue[a])
            tot_attempted += self.attempted[a]
            tot_spawned += spawned
            tot_blocked += self.blocked[a]
            tot_crossed += self.crossed[a]
            tot_delay += delay_sum
        total = ApproachMetrics(
            arrivals=tot_attempted, spawned=tot_spawned, blocked=tot_blocked,
            crossed=tot_crossed,
            mean_delay=tot_delay / tot_spawned if tot_spawned else 0.0,
            max_queue=self.max_queue_total)
        return MetricsReport(
            per_approach=per, total=total, conflicts=self.conflicts,
            committed_crossings=self.committed_crossings,
            trace_length=trace_length)
