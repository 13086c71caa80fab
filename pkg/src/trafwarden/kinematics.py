"""Robot joint inventory, pose arithmetic, rate-limited motion, planar FK.

Angles are radians, the torso lift is metres.  A pose is a plain
``{JointId: value}`` dict: a *full* pose assigns all 14 joints, a *partial*
pose assigns a subset (e.g. one arm) and is merged onto a full pose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Tuple

DONE_TOL = 1e-6          # rad; convergence tolerance for interpolate()
TORSO_HOME_LIFT = 0.35   # m; trunk is raised once at startup and stays there


class Side(Enum):
    LEFT = "left"
    RIGHT = "right"


class JointId(Enum):
    """The 14 driven joints; enum values are the simulator device names."""

    LEFT_SHOULDER = "arm_left_1_joint"
    LEFT_HALF_ARM = "arm_left_2_joint"
    LEFT_MID_ARM = "arm_left_3_joint"
    LEFT_ARM = "arm_left_4_joint"
    LEFT_HALF_HAND = "arm_left_5_joint"
    LEFT_HAND = "arm_left_6_joint"
    RIGHT_SHOULDER = "arm_right_1_joint"
    RIGHT_HALF_ARM = "arm_right_2_joint"
    RIGHT_MID_ARM = "arm_right_3_joint"
    RIGHT_ARM = "arm_right_4_joint"
    RIGHT_HALF_HAND = "arm_right_5_joint"
    RIGHT_HAND = "arm_right_6_joint"
    TORSO_LIFT = "torso_lift_joint"
    HEAD_YAW = "head_1_joint"


RobotPose = Dict[JointId, float]

ARM_ROLES = ("shoulder", "half_arm", "mid_arm", "arm", "half_hand", "hand")


def arm_joint(side: Side, role: str) -> JointId:
    """Joint id for an arm role ('shoulder'..'hand') on a given side."""
    return JointId[f"{side.name}_{role.upper()}"]


ARM_JOINTS: Dict[Side, Tuple[JointId, ...]] = {
    side: tuple(arm_joint(side, role) for role in ARM_ROLES) for side in Side
}


def zero_pose() -> RobotPose:
    return {j: 0.0 for j in JointId}


def home_pose(lift: float = TORSO_HOME_LIFT) -> RobotPose:
    """Startup pose: arms and head at zero, trunk raised."""
    pose = zero_pose()
    pose[JointId.TORSO_LIFT] = lift
    return pose


@dataclass(frozen=True)
class JointLimits:
    """Per-joint [min, max] bounds plus the shared joint speed limit."""

    bounds: Dict[JointId, Tuple[float, float]]
    omega_max: float = 1.0  # rad/s (m/s for the torso lift)

    def __post_init__(self) -> None:
        for joint, (lo, hi) in self.bounds.items():
            if not lo < hi:
                raise ValueError(f"empty limit range for {joint.name}: [{lo}, {hi}]")

    def contains(self, pose: RobotPose) -> bool:
        return all(
            self.bounds[j][0] <= v <= self.bounds[j][1] for j, v in pose.items()
        )


def default_limits(omega_max: float = 1.0) -> JointLimits:
    """Permissive bounds covering every gesture target with margin."""
    bounds: Dict[JointId, Tuple[float, float]] = {
        j: (-2.5, 2.5) for j in JointId
    }
    bounds[JointId.HEAD_YAW] = (-1.3, 1.3)
    bounds[JointId.TORSO_LIFT] = (0.0, 0.35)
    return JointLimits(bounds=bounds, omega_max=omega_max)


def clamp_pose(pose: RobotPose, limits: JointLimits) -> RobotPose:
    """Clamp every assigned joint into its limit range (idempotent)."""
    out: RobotPose = {}
    for joint, value in pose.items():
        lo, hi = limits.bounds[joint]
        out[joint] = lo if value < lo else hi if value > hi else value
    return out


def merge_partial(base: RobotPose, partial: RobotPose) -> RobotPose:
    """Overlay a partial pose onto a base pose; unassigned joints keep base values."""
    merged = dict(base)
    merged.update(partial)
    return merged


def motion_duration(start: RobotPose, target: RobotPose, omega: float) -> float:
    """Seconds for a rate-limited move: max per-joint |delta| / omega.

    The torso lift is excluded; it is raised once at startup and never
    commanded again.
    """
    if omega <= 0.0:
        raise ValueError(f"joint speed must be positive, got {omega}")
    worst = 0.0
    for joint in start.keys() | target.keys():
        if joint is JointId.TORSO_LIFT:
            continue
        a = start.get(joint, target.get(joint, 0.0))
        b = target.get(joint, a)
        gap = abs(b - a)
        if gap > worst:
            worst = gap
    return worst / omega


def interpolate(
    current: RobotPose, target: RobotPose, omega: float, dt: float
) -> Tuple[RobotPose, bool]:
    """Move every joint toward its target by at most omega*dt, never overshooting.

    Returns the new pose and whether all joints are within DONE_TOL of
    their targets.  A joint whose remaining gap fits in one step lands on
    the target exactly.
    """
    if omega <= 0.0:
        raise ValueError(f"joint speed must be positive, got {omega}")
    if dt <= 0.0:
        raise ValueError(f"time step must be positive, got {dt}")
    step = omega * dt
    out = dict(current)
    done = True
    for joint, goal in target.items():
        start = current.get(joint, 0.0)
        delta = goal - start
        if abs(delta) <= step:
            out[joint] = goal
        else:
            out[joint] = start + math.copysign(step, delta)
            done = False
    return out, done


@dataclass(frozen=True)
class LinkModel:
    """Frontal-plane segment lengths, metres."""

    shoulder_width: float = 0.40
    upper_arm: float = 0.30
    forearm: float = 0.30
    hand: float = 0.15
    trunk_base: float = 0.80
    lift_range: float = 0.35
    head_radius: float = 0.12

    def __post_init__(self) -> None:
        for name in ("shoulder_width", "upper_arm", "forearm", "hand",
                     "trunk_base", "head_radius"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"link length {name} must be positive")

    def standing_height(self, lift: float) -> float:
        return self.trunk_base + lift + 2.0 * self.head_radius


Point = Tuple[float, float]


@dataclass(frozen=True)
class ArmFrame:
    shoulder: Point
    elbow: Point
    wrist: Point
    fingertip: Point


@dataclass(frozen=True)
class PoseFrame:
    """Frontal-plane stick figure: x positive toward the robot's left, y up."""

    left: ArmFrame
    right: ArmFrame
    head_yaw: float
    torso_top: float
    head_center: Point = field(default=(0.0, 0.0))


def _chain(origin: Point, outward: float, phi1: float, phi2: float, phi3: float,
           links: LinkModel) -> ArmFrame:
    # outward is +1 for the left arm, -1 for the right; angles are measured
    # from the outward horizontal, counterclockwise in the outward frame.
    ox, oy = origin
    ex = ox + outward * links.upper_arm * math.cos(phi1)
    ey = oy + links.upper_arm * math.sin(phi1)
    wx = ex + outward * links.forearm * math.cos(phi2)
    wy = ey + links.forearm * math.sin(phi2)
    fx = wx + outward * links.hand * math.cos(phi3)
    fy = wy + links.hand * math.sin(phi3)
    return ArmFrame(shoulder=origin, elbow=(ex, ey), wrist=(wx, wy),
                    fingertip=(fx, fy))


def forward_kinematics(pose: RobotPose, links: LinkModel | None = None) -> PoseFrame:
    """Planar stick-figure positions for a pose.

    Joint-to-plane mapping: the shoulder joint abducts about the shoulder
    point (positive-left / negative-right raises the arm outward), the
    half-arm joint lowers the arm as it grows, the arm joint flexes the
    elbow toward the body midline, the half-hand joint flexes the wrist
    the other way.  Mid-arm and hand joints are axial rolls and do not
    move frontal-plane points.
    """
    if links is None:
        links = LinkModel()
    g = pose.get
    top = links.trunk_base + g(JointId.TORSO_LIFT, 0.0)
    half_w = links.shoulder_width / 2.0

    phi1 = g(JointId.LEFT_SHOULDER, 0.0) - g(JointId.LEFT_HALF_ARM, 0.0)
    phi2 = phi1 + g(JointId.LEFT_ARM, 0.0)
    phi3 = phi2 + g(JointId.LEFT_HALF_HAND, 0.0)
    left = _chain((half_w, top), +1.0, phi1, phi2, phi3, links)

    phi1 = -g(JointId.RIGHT_SHOULDER, 0.0) - g(JointId.RIGHT_HALF_ARM, 0.0)
    phi2 = phi1 + g(JointId.RIGHT_ARM, 0.0)
    phi3 = phi2 + g(JointId.RIGHT_HALF_HAND, 0.0)
    right = _chain((-half_w, top), -1.0, phi1, phi2, phi3, links)

    return PoseFrame(
        left=left,
        right=right,
        head_yaw=g(JointId.HEAD_YAW, 0.0),
        torso_top=top,
        head_center=(0.0, top + links.head_radius),
    )


_MIRROR_NEGATED_ROLES = frozenset({"shoulder"})


def mirror_pose(pose: RobotPose) -> RobotPose:
    """Swap left/right joint assignments with the matching sign convention.

    Shoulder angles negate when swapped (they mirror in the device frame,
    e.g. the two straight-stretch targets -0.5 / +0.5); the remaining arm
    joints carry over unchanged; head yaw negates; the torso is symmetric.
    """
    out: RobotPose = {}
    for joint, value in pose.items():
        name = joint.name
        if name.startswith("LEFT_") or name.startswith("RIGHT_"):
            side, _, role = name.partition("_")
            other = "RIGHT_" if side == "LEFT" else "LEFT_"
            sign = -1.0 if role.lower() in _MIRROR_NEGATED_ROLES else 1.0
            out[JointId[other + role]] = sign * value
        elif joint is JointId.HEAD_YAW:
            out[joint] = -value
        else:
            out[joint] = value
    return out
