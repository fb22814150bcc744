"""Agent-side and user-side virtual spaces.

The user-side space in duo mode is predictive: the agent pose comes from a
local copy of the agent's IK model, objects are dead-reckoned from the two
most recent ground-truth anchors, and periodic calibration messages from the
agent pull both back toward ground truth.

A calibration does not move the displayed pose directly. It re-anchors the
underlying model and leaves a correction offset (displayed minus corrected
pose) which the merge strategy then decays frame by frame. Each frame's
merge step is the distance the offset shrinks by, so a snap step is exactly
the merge-time jump.
"""

from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import (
    NS_PER_MS,
    NS_PER_S,
    NS_PER_US,
    Pose,
    PoseSource,
    SimTime,
    UnitQuaternion,
    Vec3,
    pose_distance,
    quat_slerp,
)
from .errors import ConfigError, EmptyHistory, StaleCalibration
from .kinematics import IkParams, JointVector, KinematicChain, forward_kinematics, inverse_kinematics

AGENT_ID = "agent"


def format_duration(ns: int) -> str:
    for unit, scale in (("s", NS_PER_S), ("ms", NS_PER_MS), ("us", NS_PER_US)):
        if ns != 0 and ns % scale == 0:
            return f"{ns // scale}{unit}"
    return f"{ns}ns"


_DURATION = re.compile(r"\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*(ns|us|ms|s)\s*")
_UNIT_NS = {"ns": 1, "us": NS_PER_US, "ms": NS_PER_MS, "s": NS_PER_S}


def parse_duration(value: object, key: str = "duration") -> int:
    """Integer nanoseconds from an int (ns) or a string such as ``"500ms"``."""
    if isinstance(value, bool):
        raise ConfigError(f"expected a duration, got {value!r}", key=key)
    if isinstance(value, int):
        ns = value
    elif isinstance(value, str):
        m = _DURATION.fullmatch(value)
        if m is None:
            raise ConfigError(f"cannot parse duration {value!r}", key=key)
        ns = int(round(float(m.group(1)) * _UNIT_NS[m.group(2)]))
    else:
        raise ConfigError(f"expected a duration, got {value!r}", key=key)
    if ns < 0:
        raise ConfigError("duration must be non-negative", key=key)
    return ns


@dataclass(frozen=True)
class MergeStrategy:
    kind: str = "snap"
    window: SimTime = 0
    alpha: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("snap", "interp", "blend"):
            raise ConfigError(f"unknown merge strategy {self.kind!r}", key="merge")
        if self.kind == "interp" and self.window <= 0:
            raise ConfigError("interp window must be > 0", key="merge")
        if self.kind == "blend" and not 0.0 < self.alpha <= 1.0:
            raise ConfigError("blend alpha must be in (0, 1]", key="merge")

    @classmethod
    def snap(cls) -> MergeStrategy:
        return cls("snap")

    @classmethod
    def interp(cls, window: SimTime) -> MergeStrategy:
        return cls("interp", window=window)

    @classmethod
    def blend(cls, alpha: float) -> MergeStrategy:
        return cls("blend", alpha=alpha)

    @classmethod
    def parse(cls, text: str) -> MergeStrategy:
        name, _, arg = str(text).strip().partition(":")
        if name == "snap" and not arg:
            return cls.snap()
        if name == "interp" and arg:
            return cls.interp(parse_duration(arg, key="merge"))
        if name == "blend" and arg:
            try:
                alpha = float(arg)
            except ValueError:
                raise ConfigError(f"bad blend factor {arg!r}", key="merge") from None
            return cls.blend(alpha)
        raise ConfigError(f"cannot parse merge strategy {text!r}", key="merge")

    def __str__(self) -> str:
        if self.kind == "interp":
            return f"interp:{format_duration(self.window)}"
        if self.kind == "blend":
            return f"blend:{self.alpha!r}"
        return "snap"

    def remaining(self, frames: int, frame_period: SimTime) -> float:
        """Fraction of the initial gap still left after ``frames`` merge frames."""
        if frames <= 0:
            return 1.0
        if self.kind == "snap":
            return 0.0
        if self.kind == "blend":
            return (1.0 - self.alpha) ** frames
        return max(0.0, 1.0 - frames * frame_period / self.window)


@dataclass
class MergeEvent:
    time: SimTime
    target_id: str
    pre_merge: Pose
    ground_truth: Pose
    delta_d: float
    strategy: str
    max_step: float = 0.0
    frames: int = 0
    complete: bool = False


@dataclass
class TrackedObject:
    pose: Pose
    source: PoseSource
    velocity: Vec3 = (0.0, 0.0, 0.0)


@dataclass
class VirtualSpace:
    user_head: Pose
    user_body: Pose
    user_hand: Pose
    agent_joints: JointVector
    agent_stamp: SimTime
    agent_ee: Pose
    agent_source: PoseSource = PoseSource.GROUND_TRUTH
    agent_origin: SimTime | None = None
    """Stamp of the user pose behind the current agent pose (``None`` before any)."""
    objects: dict[str, TrackedObject] = field(default_factory=dict)
    stale_transforms: int = 0

    @classmethod
    def initial(cls, chain: KinematicChain, joints: Sequence[float], objects: dict[str, Pose] | None = None,
                user: Pose | None = None) -> VirtualSpace:
        user = user or Pose()
        q = tuple(float(v) for v in joints)
        return cls(
            user_head=user, user_body=user, user_hand=user,
            agent_joints=q, agent_stamp=0, agent_ee=forward_kinematics(chain, q),
            objects={k: TrackedObject(p, PoseSource.GROUND_TRUTH) for k, p in (objects or {}).items()},
        )


@dataclass(frozen=True)
class Calibration:
    """Agent-side ground truth shipped to the user side."""

    stamp: SimTime
    joints: JointVector
    objects: tuple[tuple[str, Pose], ...] = ()
    origin_user_stamp: SimTime | None = None


def hand_target(hand: Pose, anchor: Sequence[float], origin: Sequence[float], scale: Sequence[float]) -> Pose:
    """Map a tracked hand pose into the agent's workspace.

    The target moves ``scale`` times as far as the hand has moved from
    ``anchor`` and is centered on ``origin``.
    """
    p = tuple(o + s * (h - a) for h, a, o, s in zip(hand.position, anchor, origin, scale))
    return Pose(p, hand.orientation, hand.stamp)


def predict_agent_pose(
    space: VirtualSpace,
    target: Pose,
    chain: KinematicChain,
    ik: IkParams,
    seed: Sequence[float] | None = None,
) -> tuple[JointVector, Pose, bool]:
    """Solve the mirrored agent IK locally and store the prediction in ``space``.

    On non-convergence the previous joints are kept and the returned flag is
    ``False``.
    """
    sol = inverse_kinematics(chain, target, space.agent_joints if seed is None else seed, ik)
    if sol.converged:
        space.agent_joints = sol.q
        space.agent_ee = forward_kinematics(chain, sol.q, target.stamp)
    space.agent_stamp = target.stamp
    space.agent_source = PoseSource.PREDICTED
    return space.agent_joints, space.agent_ee, sol.converged


def predict_object_pose(history: Sequence[tuple[Pose, SimTime]], t: SimTime) -> Pose:
    """Constant-velocity extrapolation from the two newest anchors.

    Orientation is held from the newest anchor; a single anchor is held still.
    """
    if not history:
        raise EmptyHistory("object has no anchors to predict from")
    latest, t1 = history[-1]
    if len(history) == 1:
        return latest.with_stamp(t)
    prev, t0 = history[-2]
    if t1 == t0:
        return latest.with_stamp(t)
    k = (t - t1) / (t1 - t0)
    p = tuple(b + (b - a) * k for a, b in zip(prev.position, latest.position))
    return Pose(p, latest.orientation, t)


def object_velocity(history: Sequence[tuple[Pose, SimTime]]) -> Vec3:
    if len(history) < 2 or history[-1][1] == history[-2][1]:
        return (0.0, 0.0, 0.0)
    (a, t0), (b, t1) = history[-2], history[-1]
    dt = (t1 - t0) / NS_PER_S
    return tuple((q - p) / dt for p, q in zip(a.position, b.position))


def update_baseline_space(
    space: VirtualSpace,
    chain: KinematicChain,
    transform: tuple[JointVector, SimTime, SimTime] | None = None,
    objects: Iterable[tuple[str, Pose]] | None = None,
) -> VirtualSpace:
    """Apply a decoded transform string and/or point-cloud object poses.

    Transforms whose origin stamp is older than the one already shown are
    discarded and counted in ``space.stale_transforms``.
    """
    if transform is not None:
        joints, stamp, origin = transform
        if space.agent_origin is not None and origin < space.agent_origin:
            space.stale_transforms += 1
        else:
            space.agent_joints = tuple(joints)
            space.agent_stamp = stamp
            space.agent_ee = forward_kinematics(chain, joints, stamp)
            space.agent_source = PoseSource.GROUND_TRUTH
            space.agent_origin = origin
    if objects is not None:
        for oid, pose in objects:
            space.objects[oid] = TrackedObject(pose, PoseSource.GROUND_TRUTH)
    return space


# ---------------------------------------------------------------------------
# predictive (duo-mode) user space


def _sub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _add(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


_ORIGIN: Vec3 = (0.0, 0.0, 0.0)


@dataclass
class _Correction:
    event: MergeEvent
    offset: Vec3
    rot: UnitQuaternion
    strategy: MergeStrategy
    frame_period: SimTime
    current: Vec3 = _ORIGIN
    current_rot: UnitQuaternion = UnitQuaternion()

    def __post_init__(self) -> None:
        self.current = self.offset
        self.current_rot = self.rot

    def advance(self) -> None:
        ev = self.event
        ev.frames += 1
        r = self.strategy.remaining(ev.frames, self.frame_period)
        nxt = (self.offset[0] * r, self.offset[1] * r, self.offset[2] * r) if r > 0.0 else _ORIGIN
        step = math.dist(self.current, nxt)
        ev.max_step = max(ev.max_step, step)
        self.current = nxt
        self.current_rot = quat_slerp(UnitQuaternion(), self.rot, r) if r > 0.0 else UnitQuaternion()
        if r == 0.0 or (self.strategy.kind == "blend" and ev.delta_d * r < 1e-9):
            ev.complete = True

    def apply(self, pose: Pose) -> Pose:
        return Pose(_add(pose.position, self.current), self.current_rot * pose.orientation, pose.stamp)


class PredictiveSpace:
    """User-side space that predicts locally and merges periodic calibrations."""

    def __init__(
        self,
        space: VirtualSpace,
        chain: KinematicChain,
        ik: IkParams,
        strategy: MergeStrategy = MergeStrategy(),
        frame_period: SimTime = NS_PER_S // 90,
    ) -> None:
        self.space = space
        self.chain = chain
        self.ik = ik
        self.strategy = strategy
        self.frame_period = frame_period
        self.history: dict[str, deque[tuple[Pose, SimTime]]] = {
            oid: deque([(obj.pose, obj.pose.stamp)], maxlen=2) for oid, obj in space.objects.items()
        }
        self.model_objects: dict[str, Pose] = {oid: obj.pose for oid, obj in space.objects.items()}
        self.target: Pose | None = None
        self.last_calibration: SimTime | None = None
        self.stale_calibrations = 0
        self.unconverged_frames = 0
        self.merges: list[MergeEvent] = []
        self._active: dict[str, _Correction] = {}

    # -- prediction ---------------------------------------------------------
    def predict_agent(self, target: Pose, origin: SimTime | None = None) -> bool:
        self.target = target
        _, _, ok = predict_agent_pose(self.space, target, self.chain, self.ik)
        if not ok:
            self.unconverged_frames += 1
        self.space.agent_origin = origin if origin is not None else target.stamp
        return ok

    def predict_objects(self, t: SimTime) -> None:
        for oid, hist in self.history.items():
            pose = predict_object_pose(hist, t)
            self.model_objects[oid] = pose
            self.space.objects[oid] = TrackedObject(pose, PoseSource.PREDICTED, object_velocity(hist))

    # -- what the user sees -------------------------------------------------
    def displayed_agent(self) -> Pose:
        c = self._active.get(AGENT_ID)
        return c.apply(self.space.agent_ee) if c else self.space.agent_ee

    def displayed_object(self, oid: str) -> Pose:
        pose = self.model_objects[oid]
        c = self._active.get(oid)
        return c.apply(pose) if c else pose

    # -- calibration --------------------------------------------------------
    def apply_calibration(self, gt: Calibration, now: SimTime) -> list[MergeEvent]:
        if self.last_calibration is not None and gt.stamp <= self.last_calibration:
            self.stale_calibrations += 1
            raise StaleCalibration(f"calibration stamped {gt.stamp} is not newer than {self.last_calibration}")
        self.last_calibration = gt.stamp
        events = []

        pre = self.displayed_agent()
        joints = tuple(gt.joints)
        if self.target is not None:
            sol = inverse_kinematics(self.chain, self.target, joints, self.ik)
            if sol.converged:
                joints = sol.q
        self.space.agent_joints = joints
        self.space.agent_ee = forward_kinematics(self.chain, joints, self.space.agent_stamp)
        self.space.agent_source = PoseSource.CALIBRATED
        events.append(self._start(AGENT_ID, pre, self.space.agent_ee, now))

        for oid, pose in gt.objects:
            pre = self.displayed_object(oid) if oid in self.model_objects else pose
            hist = self.history.setdefault(oid, deque(maxlen=2))
            hist.append((pose, gt.stamp))
            corrected = predict_object_pose(hist, now)
            self.model_objects[oid] = corrected
            self.space.objects[oid] = TrackedObject(corrected, PoseSource.CALIBRATED, object_velocity(hist))
            events.append(self._start(oid, pre, corrected, now))
        return events

    def _start(self, target_id: str, pre: Pose, corrected: Pose, now: SimTime) -> MergeEvent:
        old = self._active.pop(target_id, None)
        if old is not None:
            old.event.complete = True
        pre = pre.with_stamp(now)
        corrected = corrected.with_stamp(now)
        ev = MergeEvent(now, target_id, pre, corrected, pose_distance(pre, corrected), str(self.strategy))
        rot = pre.orientation * corrected.orientation.conjugate()
        self._active[target_id] = _Correction(ev, _sub(pre.position, corrected.position), rot,
                                              self.strategy, self.frame_period)
        self.merges.append(ev)
        return ev

    def advance_merges(self) -> None:
        """Step every active merge by one displayed frame."""
        for oid in list(self._active):
            c = self._active[oid]
            c.advance()
            if c.event.complete:
                del self._active[oid]

    def finish(self) -> None:
        for c in self._active.values():
            c.event.complete = True
        self._active.clear()


def apply_calibration(
    space: PredictiveSpace,
    gt: Calibration,
    strategy: MergeStrategy,
    frame_period: SimTime,
    now: SimTime | None = None,
) -> list[MergeEvent]:
    """Start merging ``gt`` into ``space``; one event per agent/object.

    Merge steps accrue as :meth:`PredictiveSpace.advance_merges` runs each
    frame; ``max_step`` is final once the event is ``complete``.
    """
    space.strategy = strategy
    space.frame_period = frame_period
    return space.apply_calibration(gt, gt.stamp if now is None else now)
