"""Serial-arm kinematics and the joint-command wire codec.

Chains use standard Denavit-Hartenberg parameters: each link contributes
``Rz(theta + theta_offset) · Tz(d) · Tx(a) · Rx(alpha)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .core import Pose, SimTime, UnitQuaternion, quat_normalize
from .errors import ConfigError, DimensionMismatch, ParseError

JointVector = tuple[float, ...]


@dataclass(frozen=True)
class DHJoint:
    a: float
    alpha: float
    d: float
    theta_offset: float = 0.0
    lo: float = -math.pi
    hi: float = math.pi

    @cached_property
    def _alpha_cs(self) -> tuple[float, float]:
        return math.cos(self.alpha), math.sin(self.alpha)


@dataclass(frozen=True)
class KinematicChain:
    joints: tuple[DHJoint, ...]
    base_pose: Pose = field(default_factory=Pose)

    def __post_init__(self) -> None:
        object.__setattr__(self, "joints", tuple(self.joints))
        if not self.joints:
            raise ConfigError("a chain needs at least one joint", key="chain")
        for i, j in enumerate(self.joints):
            values = (j.a, j.alpha, j.d, j.theta_offset, j.lo, j.hi)
            if not all(math.isfinite(v) for v in values):
                raise ConfigError(f"joint {i} has non-finite parameters", key="chain")
            if not j.lo < j.hi:
                raise ConfigError(f"joint {i} limits need lo < hi", key="chain")

    @property
    def dof(self) -> int:
        return len(self.joints)

    def clamp(self, q: Sequence[float]) -> JointVector:
        return tuple(min(max(float(v), j.lo), j.hi) for v, j in zip(q, self.joints))

    @cached_property
    def _base_matrix(self) -> np.ndarray:
        t = _pose_matrix(self.base_pose)
        t.flags.writeable = False
        return t


def planar_chain(lengths: Sequence[float], limit: float = math.pi) -> KinematicChain:
    """Revolute arm moving in the base x-y plane."""
    return KinematicChain(tuple(DHJoint(a=float(a), alpha=0.0, d=0.0, lo=-limit, hi=limit) for a in lengths))


def desk_chain() -> KinematicChain:
    """Default desk-scale planar arm: links of 0.5, 0.4 and 0.3 m."""
    return planar_chain((0.5, 0.4, 0.3))


def kinova_j2n6s300() -> KinematicChain:
    """Approximate classic-DH model of a 6-DOF Kinova Jaco2 (60° wrist).

    Link lengths follow the vendor's published DH table; joint offsets and
    limits are simplified, so poses match the real arm only up to a
    per-joint zero shift.
    """
    d1, d2, d3, d4, d5, d6, e2 = 0.2755, 0.4100, 0.2073, 0.0741, 0.0741, 0.1600, 0.0098
    aa = math.radians(30.0)
    sa, s2a = math.sin(aa), math.sin(2 * aa)
    d4b = d3 + sa / s2a * d4
    d5b = sa / s2a * d4 + sa / s2a * d5
    d6b = sa / s2a * d5 + d6
    lim = 2 * math.pi
    rows = [
        (0.0, math.pi / 2, d1, 0.0),
        (d2, math.pi, 0.0, 0.0),
        (0.0, math.pi / 2, -e2, 0.0),
        (0.0, 2 * aa, -d4b, 0.0),
        (0.0, 2 * aa, -d5b, 0.0),
        (0.0, math.pi, -d6b, 0.0),
    ]
    joints = [DHJoint(a, alpha, d, off, -lim, lim) for a, alpha, d, off in rows]
    # joint 2 and 3 are mechanically restricted on the real arm
    joints[1] = DHJoint(d2, math.pi, 0.0, 0.0, math.radians(47), math.radians(313))
    joints[2] = DHJoint(0.0, math.pi / 2, -e2, 0.0, math.radians(19), math.radians(341))
    return KinematicChain(tuple(joints))


CHAIN_PRESETS = {
    "planar3": desk_chain,
    "kinova_j2n6s300": kinova_j2n6s300,
}


@dataclass(frozen=True)
class IkParams:
    damping: float = 0.05
    tol_pos: float = 1e-4
    tol_rot: float = 1e-3
    max_iters: int = 200
    step_clamp: float = 0.5
    rotation_weight: float = 0.5
    """Meters per radian applied to orientation error rows; 0 solves position only."""

    def __post_init__(self) -> None:
        if not self.damping > 0:
            raise ConfigError("damping must be > 0", key="ik.damping")
        if not self.tol_pos > 0:
            raise ConfigError("tol_pos must be > 0", key="ik.tol_pos")
        if not self.tol_rot > 0:
            raise ConfigError("tol_rot must be > 0", key="ik.tol_rot")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1", key="ik.max_iters")
        if not self.step_clamp > 0:
            raise ConfigError("step_clamp must be > 0", key="ik.step_clamp")
        if self.rotation_weight < 0:
            raise ConfigError("rotation_weight must be >= 0", key="ik.rotation_weight")


class IkSolution(NamedTuple):
    q: JointVector
    converged: bool
    iterations: int
    residual: float
    """Final position error in meters."""


def _check_dims(chain: KinematicChain, q: Sequence[float]) -> None:
    if len(q) != chain.dof:
        raise DimensionMismatch(f"chain has {chain.dof} joints, got {len(q)} angles")


def _pose_matrix(pose: Pose) -> np.ndarray:
    t = np.eye(4)
    t[:3, :3] = pose.orientation.to_matrix()
    t[:3, 3] = pose.position
    return t


def _dh_matrix(j: DHJoint, theta: float) -> np.ndarray:
    ct, st = math.cos(theta + j.theta_offset), math.sin(theta + j.theta_offset)
    ca, sa = j._alpha_cs
    return np.array([
        [ct, -st * ca, st * sa, j.a * ct],
        [st, ct * ca, -ct * sa, j.a * st],
        [0.0, sa, ca, j.d],
        [0.0, 0.0, 0.0, 1.0],
    ])


def _frames(chain: KinematicChain, q: Sequence[float]) -> list[np.ndarray]:
    """Base frame followed by the frame after each joint."""
    t = chain._base_matrix
    frames = [t]
    for j, theta in zip(chain.joints, q):
        t = t @ _dh_matrix(j, float(theta))
        frames.append(t)
    return frames


def _matrix_to_quat(r: np.ndarray) -> UnitQuaternion:
    # inputs are proper rotations from chain products; Shepperd branch choice keeps it stable
    (m00, m01, m02), (m10, m11, m12), (m20, m21, m22) = r.tolist()
    tr = m00 + m11 + m22
    if tr > 0.0:
        s = 2.0 * math.sqrt(tr + 1.0)
        q = (0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s)
    elif m00 > m11 and m00 > m22:
        s = 2.0 * math.sqrt(1.0 + m00 - m11 - m22)
        q = ((m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s)
    elif m11 > m22:
        s = 2.0 * math.sqrt(1.0 + m11 - m00 - m22)
        q = ((m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s)
    else:
        s = 2.0 * math.sqrt(1.0 + m22 - m00 - m11)
        q = ((m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s)
    return quat_normalize(q)


def forward_kinematics(chain: KinematicChain, q: Sequence[float], stamp: SimTime = 0) -> Pose:
    _check_dims(chain, q)
    t = _frames(chain, q)[-1]
    return Pose(tuple(t[:3, 3]), _matrix_to_quat(t[:3, :3]), stamp)


def _jacobian_from_frames(frames: list[np.ndarray]) -> np.ndarray:
    stacked = np.stack(frames[:-1])
    z = stacked[:, :3, 2]
    lever = frames[-1][:3, 3] - stacked[:, :3, 3]
    return np.vstack((np.cross(z, lever).T, z.T))


def jacobian(chain: KinematicChain, q: Sequence[float]) -> np.ndarray:
    """Geometric 6×N Jacobian: linear velocity rows, then angular velocity rows."""
    _check_dims(chain, q)
    return _jacobian_from_frames(_frames(chain, q))


def _rotation_error(target: np.ndarray, current: np.ndarray) -> np.ndarray:
    # axis-angle of the rotation taking current to target, in the base frame
    return np.array(_matrix_to_quat(target @ current.T).to_rotvec())


def inverse_kinematics(
    chain: KinematicChain,
    target: Pose,
    seed: Sequence[float],
    params: IkParams = IkParams(),
) -> IkSolution:
    """Damped-least-squares IK.

    Each iteration takes ``dq = Jᵀ (J Jᵀ + λ² I)⁻¹ e``, scales the step so no
    joint moves more than ``step_clamp`` and clamps to joint limits.
    Non-convergence is reported through ``converged``, never raised.
    """
    _check_dims(chain, seed)
    q = np.array(chain.clamp(seed), dtype=float)
    lo = np.array([j.lo for j in chain.joints])
    hi = np.array([j.hi for j in chain.joints])
    p_target = np.array(target.position)
    use_rot = params.rotation_weight > 0.0
    r_target = np.array(target.orientation.to_matrix()) if use_rot else None
    lam2 = params.damping * params.damping

    iterations = 0
    while True:
        frames = _frames(chain, q)
        t_end = frames[-1]
        e_pos = p_target - t_end[:3, 3]
        pos_err = float(np.linalg.norm(e_pos))
        if use_rot:
            e_rot = _rotation_error(r_target, t_end[:3, :3])
            rot_err = float(np.linalg.norm(e_rot))
        else:
            rot_err = 0.0
        if pos_err < params.tol_pos and rot_err < params.tol_rot:
            return IkSolution(tuple(float(v) for v in q), True, iterations, pos_err)
        if iterations >= params.max_iters:
            return IkSolution(tuple(float(v) for v in q), False, iterations, pos_err)

        jac = _jacobian_from_frames(frames)
        if use_rot:
            w = params.rotation_weight
            jac = np.vstack((jac[:3], w * jac[3:]))
            err = np.concatenate((e_pos, w * e_rot))
        else:
            jac = jac[:3]
            err = e_pos
        dq = jac.T @ np.linalg.solve(jac @ jac.T + lam2 * np.eye(jac.shape[0]), err)
        biggest = float(np.max(np.abs(dq)))
        if biggest > params.step_clamp:
            dq *= params.step_clamp / biggest
        q = np.clip(q + dq, lo, hi)
        iterations += 1


# ---------------------------------------------------------------------------
# transform string: TS|<stamp_ns>|<origin_user_stamp_ns>|<angle>(,<angle>)*

_UINT = re.compile(r"0|[1-9][0-9]*")
_ANGLE = re.compile(r"-?(?:0|[1-9][0-9]*)\.[0-9]{6}")


def _format_angle(a: float) -> str:
    s = f"{a:.6f}"
    return "0.000000" if s == "-0.000000" else s


def encode_transform_string(q: Sequence[float], stamp: SimTime, origin_user_stamp: SimTime) -> str:
    if not q:
        raise DimensionMismatch("transform string needs at least one joint angle")
    if stamp < 0 or origin_user_stamp < 0:
        raise ValueError("stamps must be non-negative")
    return f"TS|{int(stamp)}|{int(origin_user_stamp)}|" + ",".join(_format_angle(a) for a in q)


def _field(s: str, pos: int, pattern: re.Pattern, terminator: str | None, what: str) -> tuple[str, int]:
    m = pattern.match(s, pos)
    if m is None:
        raise ParseError(f"expected {what}", offset=pos)
    end = m.end()
    if terminator is not None:
        if end >= len(s) or s[end] != terminator:
            raise ParseError(f"expected {terminator!r} after {what}", offset=end)
        end += 1
    return m.group(0), end


def decode_transform_string(s: str | bytes) -> tuple[JointVector, SimTime, SimTime]:
    """Parse a transform string into ``(joints, stamp, origin_user_stamp)``."""
    if isinstance(s, bytes):
        try:
            s = s.decode("ascii")
        except UnicodeDecodeError as exc:
            raise ParseError("transform string is not ASCII", offset=exc.start) from None
    if not s.startswith("TS|"):
        raise ParseError("missing 'TS|' prefix", offset=0)
    stamp, pos = _field(s, 3, _UINT, "|", "stamp")
    origin, pos = _field(s, pos, _UINT, "|", "origin stamp")
    if pos >= len(s):
        raise ParseError("empty joint list", offset=pos)
    angles = []
    while True:
        text, pos = _field(s, pos, _ANGLE, None, "fixed-point angle")
        angles.append(float(text))
        if pos == len(s):
            break
        if s[pos] != ",":
            raise ParseError("expected ',' between angles", offset=pos)
        pos += 1
    return tuple(angles), int(stamp), int(origin)
