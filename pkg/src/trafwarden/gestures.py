"""Arm primitives, the eight traffic signals, and their permission semantics.

Every joint constant below is a device target of the original robot
controller script; signals are compositions of one left-arm and one
right-arm primitive plus a head orientation.  A signal carries a
permission *delta*: it reassigns only the approaches it addresses, the
rest keep their previous permission.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Mapping

from .kinematics import (
    ARM_ROLES,
    JointId,
    RobotPose,
    Side,
    arm_joint,
    home_pose,
    merge_partial,
)


class Approach(Enum):
    """Incoming roads, named relative to the robot's facing."""

    FRONT = "front"
    BEHIND = "behind"
    LEFT = "left"
    RIGHT = "right"


APPROACHES = (Approach.FRONT, Approach.BEHIND, Approach.LEFT, Approach.RIGHT)


class Permission(Enum):
    GO = "go"
    STOP = "stop"


PermissionState = Dict[Approach, Permission]
# Delta: assigned approaches overwrite; absent approaches are unchanged.
PermissionDelta = Mapping[Approach, Permission]


def all_stop_state() -> PermissionState:
    return {a: Permission.STOP for a in APPROACHES}


def apply_delta(state: PermissionState, delta: PermissionDelta) -> PermissionState:
    out = dict(state)
    out.update(delta)
    return out


def is_conflicting(state: PermissionState) -> bool:
    """True when crossing streams are simultaneously permitted."""
    fb = (state[Approach.FRONT] is Permission.GO
          or state[Approach.BEHIND] is Permission.GO)
    lr = (state[Approach.LEFT] is Permission.GO
          or state[Approach.RIGHT] is Permission.GO)
    return fb and lr


class ArmPrimitive(Enum):
    UP = "up"
    DOWN = "down"
    STRAIGHT = "straight"
    HALF = "half"
    HALF_UP = "half_up"
    HALF_FOLD = "half_fold"
    REST = "rest"


class HeadOrientation(Enum):
    """Head yaw targets, radians."""

    CENTER = 0.0
    LOOK_LEFT = 1.1
    LOOK_RIGHT = -1.1


class TrafficSignal(Enum):
    """The eight signals; values are the wire / trace names."""

    FRONT_STOP = "front_stop"
    BEHIND_STOP = "behind_stop"
    FRONT_BEHIND_STOP = "front_behind_stop"
    LEFT_RIGHT_STOP = "left_right_stop"
    ALL_STOP = "all_stop"
    START_LEFT = "start_left"
    START_RIGHT = "start_right"
    CHANGE_SIGN = "change_sign"


def signal_from_name(name: str) -> TrafficSignal:
    try:
        return TrafficSignal(name)
    except ValueError:
        raise ValueError(f"unknown signal name: {name!r}") from None


class SignalRole(Enum):
    STOP_CLASS = "stop"
    GO_CLASS = "go"
    INTERIM = "interim"


# Non-zero joint targets per (primitive, side), by arm role name.  All
# remaining arm joints of that side are explicit zeros in the partial pose.
_PARTIALS: Dict[tuple[ArmPrimitive, Side], Dict[str, float]] = {
    (ArmPrimitive.UP, Side.LEFT): {"half_arm": -1.11, "arm": 0.7},
    (ArmPrimitive.UP, Side.RIGHT): {"half_arm": -1.11, "arm": 0.7},
    (ArmPrimitive.DOWN, Side.LEFT): {"half_arm": 1.5},
    (ArmPrimitive.DOWN, Side.RIGHT): {"half_arm": 1.5},
    (ArmPrimitive.STRAIGHT, Side.LEFT): {"shoulder": -0.5},
    (ArmPrimitive.STRAIGHT, Side.RIGHT): {"shoulder": 0.5},
    (ArmPrimitive.HALF, Side.LEFT): {"shoulder": 0.5, "arm": 2.29, "mid_arm": 1.5},
    (ArmPrimitive.HALF, Side.RIGHT): {"shoulder": 0.5, "arm": 2.29, "mid_arm": 1.5},
    (ArmPrimitive.HALF_UP, Side.LEFT): {
        "shoulder": 0.5, "half_arm": -1.0, "half_hand": -1.5},
    (ArmPrimitive.HALF_UP, Side.RIGHT): {
        "shoulder": -0.5, "half_arm": -1.0, "half_hand": -1.5},
    (ArmPrimitive.HALF_FOLD, Side.LEFT): {
        "shoulder": 0.5, "half_arm": -0.7, "arm": 1.8, "half_hand": -1.5},
    (ArmPrimitive.HALF_FOLD, Side.RIGHT): {
        "shoulder": -0.5, "half_arm": -0.7, "arm": 1.8, "half_hand": -1.5},
    (ArmPrimitive.REST, Side.LEFT): {},
    (ArmPrimitive.REST, Side.RIGHT): {},
}


def primitive_partial(primitive: ArmPrimitive, side: Side) -> RobotPose:
    """Partial pose assigning all six joints of one arm."""
    named = _PARTIALS[(primitive, side)]
    return {arm_joint(side, role): named.get(role, 0.0) for role in ARM_ROLES}


@dataclass(frozen=True)
class SignalDefinition:
    left: ArmPrimitive
    right: ArmPrimitive
    head: HeadOrientation
    delta: PermissionDelta
    role: SignalRole


_GO = Permission.GO
_STOP = Permission.STOP
_ALL_STOP_DELTA: PermissionDelta = {a: _STOP for a in APPROACHES}

_SIGNALS: Dict[TrafficSignal, SignalDefinition] = {
    TrafficSignal.FRONT_STOP: SignalDefinition(
        left=ArmPrimitive.DOWN, right=ArmPrimitive.UP,
        head=HeadOrientation.CENTER,
        delta={Approach.FRONT: _STOP}, role=SignalRole.STOP_CLASS),
    TrafficSignal.BEHIND_STOP: SignalDefinition(
        left=ArmPrimitive.STRAIGHT, right=ArmPrimitive.DOWN,
        head=HeadOrientation.CENTER,
        delta={Approach.BEHIND: _STOP}, role=SignalRole.STOP_CLASS),
    TrafficSignal.FRONT_BEHIND_STOP: SignalDefinition(
        left=ArmPrimitive.STRAIGHT, right=ArmPrimitive.UP,
        head=HeadOrientation.CENTER,
        delta={Approach.FRONT: _STOP, Approach.BEHIND: _STOP},
        role=SignalRole.STOP_CLASS),
    TrafficSignal.LEFT_RIGHT_STOP: SignalDefinition(
        left=ArmPrimitive.HALF_UP, right=ArmPrimitive.HALF_UP,
        head=HeadOrientation.CENTER,
        delta={Approach.LEFT: _STOP, Approach.RIGHT: _STOP},
        role=SignalRole.STOP_CLASS),
    TrafficSignal.ALL_STOP: SignalDefinition(
        left=ArmPrimitive.UP, right=ArmPrimitive.UP,
        head=HeadOrientation.CENTER,
        delta=_ALL_STOP_DELTA, role=SignalRole.STOP_CLASS),
    TrafficSignal.START_LEFT: SignalDefinition(
        left=ArmPrimitive.HALF, right=ArmPrimitive.UP,
        head=HeadOrientation.LOOK_LEFT,
        # The raised right arm is the front-stop component, so starting the
        # left flow also stops the front flow.
        delta={Approach.LEFT: _GO, Approach.FRONT: _STOP},
        role=SignalRole.GO_CLASS),
    TrafficSignal.START_RIGHT: SignalDefinition(
        left=ArmPrimitive.STRAIGHT, right=ArmPrimitive.HALF,
        head=HeadOrientation.LOOK_RIGHT,
        delta={Approach.RIGHT: _GO}, role=SignalRole.GO_CLASS),
    TrafficSignal.CHANGE_SIGN: SignalDefinition(
        left=ArmPrimitive.HALF_FOLD, right=ArmPrimitive.HALF_FOLD,
        head=HeadOrientation.CENTER,
        delta=_ALL_STOP_DELTA, role=SignalRole.INTERIM),
}


def signal_definition(signal: TrafficSignal) -> SignalDefinition:
    return _SIGNALS[signal]


def permission_delta(signal: TrafficSignal) -> PermissionDelta:
    return _SIGNALS[signal].delta


def signal_target_pose(signal: TrafficSignal) -> RobotPose:
    """Full target pose: both arm partials plus head yaw over the home pose."""
    defn = _SIGNALS[signal]
    pose = merge_partial(home_pose(), primitive_partial(defn.left, Side.LEFT))
    pose = merge_partial(pose, primitive_partial(defn.right, Side.RIGHT))
    pose[JointId.HEAD_YAW] = defn.head.value
    return pose
