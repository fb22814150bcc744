"""Time, quaternion and pose primitives.

Simulation time is an integer count of nanoseconds since the start of a run.
Quaternions are stored ``(w, x, y, z)`` and kept in the canonical half-space
``w >= 0`` so that equal rotations compare equal in traces.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import OutOfRange, ZeroQuaternion

SimTime = int

NS_PER_US = 1_000
NS_PER_MS = 1_000_000
NS_PER_S = 1_000_000_000

_ZERO_NORM = 1e-12


def seconds(t: SimTime) -> float:
    return t / NS_PER_S


def from_seconds(s: float) -> SimTime:
    return int(round(s * NS_PER_S))


def ms(value: float) -> SimTime:
    return int(round(value * NS_PER_MS))


@dataclass(frozen=True)
class UnitQuaternion:
    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def identity(cls) -> UnitQuaternion:
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_axis_angle(cls, axis: Sequence[float], angle: float) -> UnitQuaternion:
        n = math.sqrt(sum(a * a for a in axis))
        if n <= _ZERO_NORM:
            return cls.identity()
        s = math.sin(angle / 2.0) / n
        return quat_normalize((math.cos(angle / 2.0), axis[0] * s, axis[1] * s, axis[2] * s))

    @classmethod
    def from_rotvec(cls, v: Sequence[float]) -> UnitQuaternion:
        angle = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
        return cls.from_axis_angle(v, angle)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w, self.x, self.y, self.z)

    def conjugate(self) -> UnitQuaternion:
        # The conjugate of a canonical quaternion is canonical too (w unchanged).
        return UnitQuaternion(self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other: UnitQuaternion) -> UnitQuaternion:
        """Hamilton product ``self ⊗ other``."""
        aw, ax, ay, az = self.as_tuple()
        bw, bx, by, bz = other.as_tuple()
        return quat_normalize((
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ))

    def rotate(self, v: Sequence[float]) -> tuple[float, float, float]:
        w, x, y, z = self.as_tuple()
        # v' = v + 2w(u×v) + 2u×(u×v), u = (x, y, z)
        cx = y * v[2] - z * v[1]
        cy = z * v[0] - x * v[2]
        cz = x * v[1] - y * v[0]
        return (
            v[0] + 2.0 * (w * cx + y * cz - z * cy),
            v[1] + 2.0 * (w * cy + z * cx - x * cz),
            v[2] + 2.0 * (w * cz + x * cy - y * cx),
        )

    def to_matrix(self) -> list[list[float]]:
        w, x, y, z = self.as_tuple()
        return [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]

    def angle_to(self, other: UnitQuaternion) -> float:
        """Geodesic rotation angle in radians between two orientations."""
        d = abs(self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z)
        return 2.0 * math.acos(min(1.0, d))

    def to_rotvec(self) -> tuple[float, float, float]:
        w, x, y, z = self.as_tuple()
        s = math.sqrt(x * x + y * y + z * z)
        if s < 1e-15:
            return (2.0 * x, 2.0 * y, 2.0 * z)
        angle = 2.0 * math.atan2(s, w)
        k = angle / s
        return (x * k, y * k, z * k)


def quat_normalize(q: Sequence[float]) -> UnitQuaternion:
    """Scale ``q`` to unit norm and flip it into the ``w >= 0`` half-space."""
    w, x, y, z = (float(c) for c in q)
    n = math.sqrt(w * w + x * x + y * y + z * z)
    if not n > _ZERO_NORM:
        raise ZeroQuaternion(f"cannot normalize quaternion with norm {n!r}")
    w, x, y, z = w / n, x / n, y / n, z / n
    if w < 0.0 or (w == 0.0 and (x, y, z) < (0.0, 0.0, 0.0)):
        w, x, y, z = -w, -x, -y, -z
    return UnitQuaternion(w + 0.0, x + 0.0, y + 0.0, z + 0.0)


def _check_unit_interval(t: float) -> None:
    if not 0.0 <= t <= 1.0:
        raise OutOfRange(f"interpolation parameter {t!r} outside [0, 1]")


def quat_slerp(a: UnitQuaternion, b: UnitQuaternion, t: float) -> UnitQuaternion:
    """Shortest-arc spherical interpolation from ``a`` (t=0) to ``b`` (t=1)."""
    _check_unit_interval(t)
    if t == 0.0:
        return a
    if t == 1.0:
        return b
    bw, bx, by, bz = b.as_tuple()
    dot = a.w * bw + a.x * bx + a.y * by + a.z * bz
    if dot < 0.0:
        bw, bx, by, bz, dot = -bw, -bx, -by, -bz, -dot
    if dot > 0.9995:
        # nearly parallel: normalized lerp is accurate and avoids 0/0
        s0, s1 = 1.0 - t, t
    else:
        theta = math.acos(dot)
        sin_theta = math.sin(theta)
        s0 = math.sin((1.0 - t) * theta) / sin_theta
        s1 = math.sin(t * theta) / sin_theta
    return quat_normalize((
        s0 * a.w + s1 * bw,
        s0 * a.x + s1 * bx,
        s0 * a.y + s1 * by,
        s0 * a.z + s1 * bz,
    ))


class PoseSource(enum.Enum):
    GROUND_TRUTH = "ground_truth"
    PREDICTED = "predicted"
    CALIBRATED = "calibrated"


Vec3 = tuple[float, float, float]


@dataclass(frozen=True)
class Pose:
    position: Vec3 = (0.0, 0.0, 0.0)
    orientation: UnitQuaternion = UnitQuaternion()
    stamp: SimTime = 0

    def __post_init__(self) -> None:
        pos = tuple(float(p) for p in self.position)
        if len(pos) != 3 or not all(math.isfinite(p) for p in pos):
            raise ValueError(f"pose position must be 3 finite values, got {self.position!r}")
        object.__setattr__(self, "position", pos)

    def with_stamp(self, stamp: SimTime) -> Pose:
        return Pose(self.position, self.orientation, stamp)


def pose_distance(a: Pose, b: Pose) -> float:
    """Euclidean distance between the positions of two poses, in meters."""
    return math.dist(a.position, b.position)


def pose_angle(a: Pose, b: Pose) -> float:
    """Geodesic angle between the orientations of two poses, in radians."""
    return a.orientation.angle_to(b.orientation)


def lerp3(a: Sequence[float], b: Sequence[float], t: float) -> Vec3:
    s = 1.0 - t
    # (1-t)*a + t*b keeps lerp(a, b, t) == lerp(b, a, 1-t) whenever 1-t is exact
    return (s * a[0] + t * b[0], s * a[1] + t * b[1], s * a[2] + t * b[2])


def pose_lerp(a: Pose, b: Pose, t: float) -> Pose:
    """Interpolate position linearly, orientation by slerp, stamp linearly."""
    _check_unit_interval(t)
    if t == 0.0:
        return a
    if t == 1.0:
        return b
    stamp = a.stamp + int(round(t * (b.stamp - a.stamp)))
    return Pose(lerp3(a.position, b.position, t), quat_slerp(a.orientation, b.orientation, t), stamp)
