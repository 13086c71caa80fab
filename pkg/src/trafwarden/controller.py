"""Signal sources: operator pass-through validation and the two policies.

A controller is a deterministic state machine polled by the simulation
loop.  Phase changes go through the change-sign clearance interval; a
two-direction Go (front+behind or left+right) has no gesture of its own,
so entering such a phase pairs the opposite stop gesture with an internal
Go grant that is logged in the trace like any other command.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

from .gestures import (
    Approach,
    Permission,
    PermissionState,
    SignalRole,
    TrafficSignal,
    apply_delta,
    is_conflicting,
    signal_definition,
)


class Mode(Enum):
    WIZARD_OF_OZ = "wizard_of_oz"
    ROUND_ROBIN = "round_robin"
    QUEUE_PRIORITY = "queue_priority"


@dataclass(frozen=True)
class GestureAction:
    signal: TrafficSignal

    @property
    def name(self) -> str:
        return self.signal.value


_GRANT_NAMES = {
    (Approach.FRONT, Approach.BEHIND): "grant_front_behind_go",
    (Approach.LEFT, Approach.RIGHT): "grant_left_right_go",
}


@dataclass(frozen=True)
class GrantAction:
    approaches: Tuple[Approach, ...]

    @property
    def name(self) -> str:
        return _GRANT_NAMES[self.approaches]


Action = Union[GestureAction, GrantAction]


def parse_action(name: str) -> Action:
    for approaches, grant_name in _GRANT_NAMES.items():
        if name == grant_name:
            return GrantAction(approaches)
    return GestureAction(TrafficSignal(name))


@dataclass
class PolicyConfig:
    mode: Mode
    min_green: float = 8.0
    max_green: float = 30.0
    interim: float = 3.0
    sensor_sigma: float = 0.0

    def validate(self) -> None:
        if not 0.0 < self.min_green <= self.max_green:
            raise ValueError("require 0 < min_green <= max_green")
        if self.interim <= 0.0:
            raise ValueError("interim must be positive")
        if self.sensor_sigma < 0.0:
            raise ValueError("sensor noise must be non-negative")


@dataclass(frozen=True)
class SensorReading:
    """Queue-length estimates per approach (vehicles) at a timestamp."""

    queues: Dict[Approach, int]
    timestamp: float


class Phase(Enum):
    FB_GO = "fb_go"
    LR_GO = "lr_go"
    LEFT_GO = "left_go"
    RIGHT_GO = "right_go"
    ALL_STOP = "all_stop"
    INTERIM = "interim"


@dataclass(frozen=True)
class ControllerState:
    phase: Phase
    phase_start: float
    next_phase: Optional[Phase] = None  # set iff phase is INTERIM

    def __post_init__(self) -> None:
        if (self.phase is Phase.INTERIM) != (self.next_phase is not None):
            raise ValueError("INTERIM must (and only INTERIM may) carry a next phase")


_FB_PAIR = (Approach.FRONT, Approach.BEHIND)
_LR_PAIR = (Approach.LEFT, Approach.RIGHT)


def phase_entry_commands(phase: Phase) -> List[Action]:
    """Commands that realize a phase from the all-stop clearance state."""
    if phase is Phase.FB_GO:
        return [GestureAction(TrafficSignal.LEFT_RIGHT_STOP), GrantAction(_FB_PAIR)]
    if phase is Phase.LR_GO:
        return [GestureAction(TrafficSignal.FRONT_BEHIND_STOP), GrantAction(_LR_PAIR)]
    if phase is Phase.LEFT_GO:
        return [GestureAction(TrafficSignal.START_LEFT)]
    if phase is Phase.RIGHT_GO:
        return [GestureAction(TrafficSignal.START_RIGHT)]
    if phase is Phase.ALL_STOP:
        return [GestureAction(TrafficSignal.ALL_STOP)]
    raise ValueError(f"no entry commands for {phase}")


_EPS = 1e-9  # timing comparisons land exactly on the decision grid


class RoundRobinController:
    """Fixed-cycle alternation FB <-> LR at max_green, ignoring sensors."""

    def __init__(self, cfg: PolicyConfig, start: float = 0.0) -> None:
        cfg.validate()
        self.cfg = cfg
        self.state = ControllerState(Phase.ALL_STOP, start)

    def poll(self, now: float, reading: SensorReading) -> List[Action]:
        st = self.state
        if st.phase is Phase.ALL_STOP:
            return self._enter(Phase.FB_GO, now)
        if st.phase is Phase.INTERIM:
            if now - st.phase_start >= self.cfg.interim - _EPS:
                return self._enter(st.next_phase, now)
            return []
        if now - st.phase_start >= self.cfg.max_green - _EPS:
            nxt = Phase.LR_GO if st.phase is Phase.FB_GO else Phase.FB_GO
            self.state = ControllerState(Phase.INTERIM, now, nxt)
            return [GestureAction(TrafficSignal.CHANGE_SIGN)]
        return []

    def _enter(self, phase: Phase, now: float) -> List[Action]:
        self.state = ControllerState(phase, now)
        return phase_entry_commands(phase)


class QueuePriorityController:
    """Serve the approach pair with the heavier waiting queue.

    Decision points start at min_green phase age.  The running phase is
    retained on ties; at max_green the phase must yield if the other pair
    has any demand.  A pair with demand on only one side is served by the
    matching single-approach start gesture.
    """

    def __init__(self, cfg: PolicyConfig, start: float = 0.0) -> None:
        cfg.validate()
        self.cfg = cfg
        self.state = ControllerState(Phase.ALL_STOP, start)

    def poll(self, now: float, reading: SensorReading) -> List[Action]:
        st = self.state
        q = reading.queues
        q_fb = q[Approach.FRONT] + q[Approach.BEHIND]
        q_lr = q[Approach.LEFT] + q[Approach.RIGHT]

        if st.phase is Phase.INTERIM:
            if now - st.phase_start >= self.cfg.interim - _EPS:
                return self._enter(st.next_phase, now)
            return []
        if st.phase is Phase.ALL_STOP:
            if q_fb + q_lr == 0:
                return []
            return self._enter(self._pair_phase(q, prefer_fb=q_fb >= q_lr), now)

        age = now - st.phase_start
        if age < self.cfg.min_green - _EPS:
            return []
        serving_fb = st.phase is Phase.FB_GO
        served, other = (q_fb, q_lr) if serving_fb else (q_lr, q_fb)
        target: Optional[Phase] = None
        if other > served or (age >= self.cfg.max_green - _EPS and other > 0):
            target = self._pair_phase(q, prefer_fb=not serving_fb)
        elif st.phase is Phase.LEFT_GO and q[Approach.RIGHT] > 0:
            target = Phase.LR_GO if q[Approach.LEFT] > 0 else Phase.RIGHT_GO
        elif st.phase is Phase.RIGHT_GO and q[Approach.LEFT] > 0:
            target = Phase.LR_GO if q[Approach.RIGHT] > 0 else Phase.LEFT_GO
        if target is None or target is st.phase:
            return []
        self.state = ControllerState(Phase.INTERIM, now, target)
        return [GestureAction(TrafficSignal.CHANGE_SIGN)]

    def _pair_phase(self, q: Dict[Approach, int], prefer_fb: bool) -> Phase:
        if prefer_fb:
            return Phase.FB_GO
        q_l, q_r = q[Approach.LEFT], q[Approach.RIGHT]
        if q_l > 0 and q_r == 0:
            return Phase.LEFT_GO
        if q_r > 0 and q_l == 0:
            return Phase.RIGHT_GO
        return Phase.LR_GO

    def _enter(self, phase: Phase, now: float) -> List[Action]:
        self.state = ControllerState(phase, now)
        return phase_entry_commands(phase)


Controller = Union[RoundRobinController, QueuePriorityController]


def make_policy(cfg: PolicyConfig, start: float = 0.0) -> Optional[Controller]:
    if cfg.mode is Mode.WIZARD_OF_OZ:
        return None
    if cfg.mode is Mode.ROUND_ROBIN:
        return RoundRobinController(cfg, start)
    return QueuePriorityController(cfg, start)


class ValidationResult(Enum):
    ACCEPT = "accept"
    ACCEPT_WITH_WARNING = "accept_with_warning"
    REJECT = "reject"


def validate_command(
    state: PermissionState,
    action: Action,
    mode: Mode,
    now: float,
    last_clearance: Optional[float],
    interim: float,
) -> Tuple[ValidationResult, str]:
    """Safety interlock for a proposed command.

    Autonomous modes reject commands that would permit crossing streams,
    and reject Go-carrying commands issued without a recent change-sign
    clearance (an all-stop commanded state counts as cleared: there is
    nothing to clear).  Wizard-of-Oz mode accepts everything but raises
    the same conditions as warnings; the operator stays authoritative.
    """
    if isinstance(action, GestureAction):
        defn = signal_definition(action.signal)
        resulting = apply_delta(state, defn.delta)
        go_carrying = defn.role is SignalRole.GO_CLASS
    else:
        resulting = apply_delta(state, {a: Permission.GO for a in action.approaches})
        go_carrying = True

    problems = []
    if is_conflicting(resulting):
        problems.append("resulting permissions allow crossing streams")
    if go_carrying:
        cleared_recently = (last_clearance is not None
                            and now - last_clearance <= interim + 5.0 + _EPS)
        halted = all(p is Permission.STOP for p in state.values())
        if not (cleared_recently or halted):
            problems.append("go issued without a recent change-sign clearance")
    if not problems:
        return ValidationResult.ACCEPT, ""
    reason = "; ".join(problems)
    if mode is Mode.WIZARD_OF_OZ:
        return ValidationResult.ACCEPT_WITH_WARNING, reason
    return ValidationResult.REJECT, reason
