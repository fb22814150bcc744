"""Trajectory CSV loading and scenario configuration.

Trajectories use the EuRoC ground-truth layout: ``timestamp_ns, p_x, p_y,
p_z, q_w, q_x, q_y, q_z`` followed by any number of ignored columns.
Scenarios are TOML documents; see ``docs/scenario-format.md``.
"""

from __future__ import annotations

import bisect
import hashlib
import io
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Any, Mapping, Union

import tomli_w

from .core import NS_PER_MS, NS_PER_S, Pose, SimTime, UnitQuaternion, Vec3, lerp3, quat_normalize, quat_slerp
from .errors import ConfigError, NonMonotonicTimestamps, OutOfRange, ParseError, ZeroQuaternion
from .kinematics import CHAIN_PRESETS, DHJoint, IkParams, KinematicChain
from .network import ChannelModel, MessageKind, DEFAULT_PAYLOAD_BYTES, UniformJitter
from .pipeline.defaults import ALL_TASKS, DEFAULT_CAMERA_RATE_HZ, DEFAULT_SLAM_RATE_HZ
from .pipeline.engine import ExecTime, Fixed, Uniform
from .spaces import MergeStrategy, format_duration, parse_duration

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

Source = Union[bytes, str, IO[bytes], IO[str]]


def _read_text(source: Source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


# ---------------------------------------------------------------------------
# trajectories

@dataclass(frozen=True)
class Trajectory:
    stamps: tuple[SimTime, ...]
    positions: tuple[Vec3, ...]
    orientations: tuple[UnitQuaternion, ...]
    rate_hint: float = 0.0

    def __len__(self) -> int:
        return len(self.stamps)

    @property
    def duration(self) -> SimTime:
        return self.stamps[-1]

    def pose_at(self, i: int) -> Pose:
        return Pose(self.positions[i], self.orientations[i], self.stamps[i])


def load_trajectory(source: Source) -> Trajectory:
    """Parse an EuRoC-style ground-truth CSV, rebasing stamps to start at 0."""
    stamps: list[int] = []
    positions: list[Vec3] = []
    orientations: list[UnitQuaternion] = []
    for lineno, raw in enumerate(io.StringIO(_read_text(source)), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cols = [c.strip() for c in line.split(",")]
        if len(cols) < 8:
            raise ParseError(f"expected at least 8 columns, got {len(cols)}", line=lineno)
        try:
            stamp = int(cols[0])
            values = [float(c) for c in cols[1:8]]
        except ValueError as exc:
            raise ParseError(f"bad number: {exc}", line=lineno) from None
        if not all(math.isfinite(v) for v in values):
            raise ParseError("non-finite value", line=lineno)
        if stamps and stamp <= stamps[-1]:
            raise NonMonotonicTimestamps(f"timestamp {stamp} does not increase", line=lineno)
        try:
            q = quat_normalize(values[3:7])
        except ZeroQuaternion:
            raise ParseError("zero quaternion", line=lineno) from None
        stamps.append(stamp)
        positions.append((values[0], values[1], values[2]))
        orientations.append(q)
    if not stamps:
        raise ParseError("trajectory has no samples", line=0)
    t0 = stamps[0]
    rebased = tuple(s - t0 for s in stamps)
    rate = (len(rebased) - 1) * NS_PER_S / rebased[-1] if len(rebased) > 1 else 0.0
    return Trajectory(rebased, tuple(positions), tuple(orientations), rate)


def load_trajectory_file(path: str | Path) -> Trajectory:
    with open(path, "rb") as fh:
        return load_trajectory(fh)


def sample_pose(traj: Trajectory, t: SimTime) -> Pose:
    """Pose at ``t``: linear in position, slerp in orientation."""
    if t < 0 or t > traj.stamps[-1]:
        raise OutOfRange(f"time {t} outside trajectory span [0, {traj.stamps[-1]}]")
    i = bisect.bisect_left(traj.stamps, t)
    if traj.stamps[i] == t:
        return traj.pose_at(i)
    t0, t1 = traj.stamps[i - 1], traj.stamps[i]
    u = (t - t0) / (t1 - t0)
    return Pose(
        lerp3(traj.positions[i - 1], traj.positions[i], u),
        quat_slerp(traj.orientations[i - 1], traj.orientations[i], u),
        t,
    )


# ---------------------------------------------------------------------------
# scenarios

MODES = ("baseline", "duo")
REFERENCE_BASE_DELAY = 450 * NS_PER_MS
REFERENCE_JITTER = UniformJitter(0, 100 * NS_PER_MS)
REFERENCE_BANDWIDTH = 625_000
"""Effective per-message throughput of the reference channel in bytes/s."""

_PAYLOAD_KEYS = {k.value: k for k in MessageKind}


def reference_channel(direction: str = "") -> ChannelModel:
    return ChannelModel(REFERENCE_BASE_DELAY, REFERENCE_JITTER, REFERENCE_BANDWIDTH, 0.0, direction)


@dataclass(frozen=True)
class ExtraTask:
    """User-declared load task: publishes a token on each completion."""

    name: str
    trigger: str
    exec_time: ExecTime
    reads: tuple[str, ...] = ()
    writes: tuple[str, ...] = ()
    side: str = "xr"


@dataclass(frozen=True)
class Scenario:
    horizon: SimTime
    head: str
    hand: str | None = None
    hand_offset: Vec3 = (0.25, -0.2, -0.35)
    objects: tuple[tuple[str, str], ...] = ()
    frame_rate: float = 90.0
    mode: str = "baseline"
    seed: int = 0
    calibration_period: SimTime = 500 * NS_PER_MS
    merge: MergeStrategy = MergeStrategy()
    uplink: ChannelModel = field(default_factory=lambda: reference_channel("uplink"))
    downlink: ChannelModel = field(default_factory=lambda: reference_channel("downlink"))
    exec_overrides: tuple[tuple[str, ExecTime], ...] = ()
    camera_rate: float = DEFAULT_CAMERA_RATE_HZ
    slam_rate: float = DEFAULT_SLAM_RATE_HZ
    payload: tuple[tuple[str, int], ...] = tuple((k.value, v) for k, v in DEFAULT_PAYLOAD_BYTES.items())
    chain: KinematicChain = field(default_factory=CHAIN_PRESETS["planar3"])
    initial_joints: tuple[float, ...] | None = None
    ik: IkParams = IkParams(rotation_weight=0.0)
    mapping_origin: Vec3 = (0.7, 0.3, 0.0)
    mapping_scale: Vec3 = (0.1, 0.1, 0.0)
    extra_tasks: tuple[ExtraTask, ...] = ()
    base_dir: Path = field(default=Path("."), compare=False)
    trajectories: Mapping[str, Trajectory] = field(default_factory=dict, compare=False, repr=False)

    @property
    def frame_period(self) -> SimTime:
        return int(round(NS_PER_S / self.frame_rate))

    @property
    def joints0(self) -> tuple[float, ...]:
        if self.initial_joints is not None:
            return self.chain.clamp(self.initial_joints)
        return self.chain.clamp([0.0] * self.chain.dof)

    def payload_bytes(self, kind: MessageKind) -> int:
        return dict(self.payload)[kind.value]

    def exec_override(self, task: str) -> ExecTime | None:
        return dict(self.exec_overrides).get(task)

    def to_dict(self) -> dict[str, Any]:
        return scenario_to_dict(self)

    def dumps(self) -> str:
        return dump_scenario(self)

    def fingerprint(self, mode: str | None = None) -> str:
        text = self.dumps() + f"\n# mode={mode or self.mode}\n"
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def with_overrides(self, **changes: Any) -> Scenario:
        return replace(self, **changes)


# -- value codecs -----------------------------------------------------------

def _exec_from(value: object, key: str) -> ExecTime:
    if isinstance(value, str) and value.startswith("uniform:"):
        lo, sep, hi = value[len("uniform:"):].partition("..")
        if not sep:
            raise ConfigError(f"expected 'uniform:<lo>..<hi>', got {value!r}", key=key)
        return Uniform(parse_duration(lo, key), parse_duration(hi, key))
    return Fixed(parse_duration(value, key))


def _exec_to(e: ExecTime) -> str:
    if isinstance(e, Uniform):
        return f"uniform:{format_duration(e.lo)}..{format_duration(e.hi)}"
    return format_duration(e.ns)


def _jitter_from(value: object, key: str) -> UniformJitter | None:
    if value == "none":
        return None
    if isinstance(value, str) and value.startswith("uniform:"):
        lo, sep, hi = value[len("uniform:"):].partition("..")
        if sep:
            try:
                return UniformJitter(parse_duration(lo, key), parse_duration(hi, key))
            except ConfigError as exc:
                raise ConfigError(str(exc), key=key) from None
    raise ConfigError(f"expected 'none' or 'uniform:<lo>..<hi>', got {value!r}", key=key)


def _jitter_to(j: UniformJitter | None) -> str:
    return "none" if j is None else f"uniform:{format_duration(j.lo)}..{format_duration(j.hi)}"


def _vec3(value: object, key: str) -> Vec3:
    if not isinstance(value, list) or len(value) != 3:
        raise ConfigError("expected a list of 3 numbers", key=key)
    return tuple(_float(v, key) for v in value)


def _float(value: object, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", key=key)
    v = float(value)
    if not math.isfinite(v):
        raise ConfigError("expected a finite number", key=key)
    return v


def _int(value: object, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", key=key)
    return value


def _str(value: object, key: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"expected a string, got {value!r}", key=key)
    return value


def _floats(value: object, key: str) -> tuple[float, ...]:
    if not isinstance(value, list):
        raise ConfigError("expected a list of numbers", key=key)
    return tuple(_float(v, key) for v in value)


def _table(value: object, key: str) -> dict[str, Any]:
    if not isinstance(value, dict):
        raise ConfigError("expected a table", key=key)
    return value


def _reject_unknown(table: Mapping[str, Any], allowed: set[str], prefix: str = "") -> None:
    for k in table:
        if k not in allowed:
            raise ConfigError("unknown key", key=f"{prefix}{k}")


_TOP_KEYS = {
    "horizon", "frame_rate", "mode", "seed", "calibration_period", "merge", "camera_rate", "slam_rate",
    "uplink", "downlink", "exec", "payload", "chain", "ik", "trajectories", "objects", "mapping",
    "extra_tasks",
}
_CHANNEL_KEYS = {"base_delay", "jitter", "bandwidth", "drop_prob"}
_CHAIN_KEYS = {"preset", "a", "alpha", "d", "theta_offset", "lo", "hi", "base_position", "initial"}
_IK_KEYS = {"damping", "tol_pos", "tol_rot", "max_iters", "step_clamp", "rotation_weight"}
_TRAJ_KEYS = {"head", "hand", "hand_offset"}
_MAPPING_KEYS = {"origin", "scale"}
_EXTRA_KEYS = {"trigger", "exec", "reads", "writes", "side"}


def _channel_from(table: Mapping[str, Any], direction: str) -> ChannelModel:
    _reject_unknown(table, _CHANNEL_KEYS, f"{direction}.")
    ref = reference_channel(direction)
    try:
        return ChannelModel(
            base_delay=parse_duration(table.get("base_delay", ref.base_delay), f"{direction}.base_delay"),
            jitter=_jitter_from(table.get("jitter", _jitter_to(ref.jitter)), f"{direction}.jitter"),
            bandwidth=_int(table.get("bandwidth", ref.bandwidth), f"{direction}.bandwidth"),
            drop_prob=_float(table.get("drop_prob", ref.drop_prob), f"{direction}.drop_prob"),
            direction=direction,
        )
    except ConfigError as exc:
        if exc.key and not exc.key.startswith(direction):
            raise ConfigError(str(exc).split(": ", 1)[-1], key=f"{direction}.{exc.key}") from None
        raise


def _chain_from(table: Mapping[str, Any]) -> tuple[KinematicChain, tuple[float, ...] | None]:
    _reject_unknown(table, _CHAIN_KEYS, "chain.")
    initial = _floats(table["initial"], "chain.initial") if "initial" in table else None
    if "preset" in table:
        name = _str(table["preset"], "chain.preset")
        if name not in CHAIN_PRESETS:
            raise ConfigError(f"unknown preset {name!r}; choose from {sorted(CHAIN_PRESETS)}", key="chain.preset")
        if set(table) - {"preset", "initial"}:
            raise ConfigError("a preset chain cannot be combined with explicit DH parameters", key="chain")
        chain = CHAIN_PRESETS[name]()
    else:
        if "a" not in table:
            raise ConfigError("need 'preset' or explicit DH lists", key="chain")
        a = _floats(table["a"], "chain.a")
        n = len(a)

        def col(key: str, default: float) -> tuple[float, ...]:
            vals = _floats(table[key], f"chain.{key}") if key in table else (default,) * n
            if len(vals) != n:
                raise ConfigError(f"expected {n} values", key=f"chain.{key}")
            return vals

        alpha, d, off = col("alpha", 0.0), col("d", 0.0), col("theta_offset", 0.0)
        lo, hi = col("lo", -math.pi), col("hi", math.pi)
        base = _vec3(table.get("base_position", [0.0, 0.0, 0.0]), "chain.base_position")
        chain = KinematicChain(
            tuple(DHJoint(*row) for row in zip(a, alpha, d, off, lo, hi)),
            Pose(base),
        )
    if initial is not None and len(initial) != chain.dof:
        raise ConfigError(f"expected {chain.dof} initial angles", key="chain.initial")
    return chain, initial


def _ik_from(table: Mapping[str, Any]) -> IkParams:
    _reject_unknown(table, _IK_KEYS, "ik.")
    d = IkParams(rotation_weight=0.0)
    return IkParams(
        damping=_float(table.get("damping", d.damping), "ik.damping"),
        tol_pos=_float(table.get("tol_pos", d.tol_pos), "ik.tol_pos"),
        tol_rot=_float(table.get("tol_rot", d.tol_rot), "ik.tol_rot"),
        max_iters=_int(table.get("max_iters", d.max_iters), "ik.max_iters"),
        step_clamp=_float(table.get("step_clamp", d.step_clamp), "ik.step_clamp"),
        rotation_weight=_float(table.get("rotation_weight", d.rotation_weight), "ik.rotation_weight"),
    )


def _rate(value: object, key: str) -> float:
    r = _float(value, key)
    if not r > 0:
        raise ConfigError("must be > 0", key=key)
    return r


def scenario_from_dict(
    data: Mapping[str, Any],
    base_dir: str | Path = ".",
    load_trajectories: bool = True,
) -> Scenario:
    """Validate a parsed scenario document and apply defaults."""
    _reject_unknown(data, _TOP_KEYS)
    if "horizon" not in data:
        raise ConfigError("required", key="horizon")
    horizon = parse_duration(data["horizon"], "horizon")
    if horizon <= 0:
        raise ConfigError("must be > 0", key="horizon")
    frame_rate = _rate(data.get("frame_rate", 90.0), "frame_rate")
    mode = _str(data.get("mode", "baseline"), "mode")
    if mode not in MODES:
        raise ConfigError(f"must be one of {MODES}", key="mode")
    seed = _int(data.get("seed", 0), "seed")
    if seed < 0:
        raise ConfigError("must be >= 0", key="seed")
    cal = parse_duration(data.get("calibration_period", "500ms"), "calibration_period")
    if cal <= 0:
        raise ConfigError("must be > 0", key="calibration_period")
    merge = MergeStrategy.parse(_str(data.get("merge", "snap"), "merge"))

    trajs = _table(data.get("trajectories", {}), "trajectories")
    _reject_unknown(trajs, _TRAJ_KEYS, "trajectories.")
    if "head" not in trajs:
        raise ConfigError("required", key="trajectories.head")
    head = _str(trajs["head"], "trajectories.head")
    hand = _str(trajs["hand"], "trajectories.hand") if "hand" in trajs else None
    hand_offset = _vec3(trajs.get("hand_offset", [0.25, -0.2, -0.35]), "trajectories.hand_offset")
    objects = tuple(sorted(
        (oid, _str(p, f"objects.{oid}")) for oid, p in _table(data.get("objects", {}), "objects").items()
    ))

    exec_table = _table(data.get("exec", {}), "exec")
    overrides = []
    for name in sorted(exec_table):
        if name not in ALL_TASKS:
            raise ConfigError("unknown task", key=f"exec.{name}")
        overrides.append((name, _exec_from(exec_table[name], f"exec.{name}")))

    payload_table = _table(data.get("payload", {}), "payload")
    _reject_unknown(payload_table, set(_PAYLOAD_KEYS), "payload.")
    payload = []
    for kind in MessageKind:
        n = _int(payload_table.get(kind.value, DEFAULT_PAYLOAD_BYTES[kind]), f"payload.{kind.value}")
        if n <= 0:
            raise ConfigError("must be > 0", key=f"payload.{kind.value}")
        payload.append((kind.value, n))

    if "chain" in data:
        chain, initial = _chain_from(_table(data["chain"], "chain"))
    else:
        chain, initial = CHAIN_PRESETS["planar3"](), None

    mapping = _table(data.get("mapping", {}), "mapping")
    _reject_unknown(mapping, _MAPPING_KEYS, "mapping.")

    extra = []
    for name, spec in sorted(_table(data.get("extra_tasks", {}), "extra_tasks").items()):
        spec = _table(spec, f"extra_tasks.{name}")
        _reject_unknown(spec, _EXTRA_KEYS, f"extra_tasks.{name}.")
        if name in ALL_TASKS:
            raise ConfigError("name clashes with a built-in task", key=f"extra_tasks.{name}")
        side = _str(spec.get("side", "xr"), f"extra_tasks.{name}.side")
        if side not in ("xr", "agent"):
            raise ConfigError("must be 'xr' or 'agent'", key=f"extra_tasks.{name}.side")
        if "trigger" not in spec:
            raise ConfigError("required", key=f"extra_tasks.{name}.trigger")
        extra.append(ExtraTask(
            name=name,
            trigger=_str(spec["trigger"], f"extra_tasks.{name}.trigger"),
            exec_time=_exec_from(spec.get("exec", 0), f"extra_tasks.{name}.exec"),
            reads=tuple(_str(r, f"extra_tasks.{name}.reads") for r in spec.get("reads", [])),
            writes=tuple(_str(w, f"extra_tasks.{name}.writes") for w in spec.get("writes", [])),
            side=side,
        ))

    scenario = Scenario(
        horizon=horizon,
        head=head,
        hand=hand,
        hand_offset=hand_offset,
        objects=objects,
        frame_rate=frame_rate,
        mode=mode,
        seed=seed,
        calibration_period=cal,
        merge=merge,
        uplink=_channel_from(_table(data.get("uplink", {}), "uplink"), "uplink"),
        downlink=_channel_from(_table(data.get("downlink", {}), "downlink"), "downlink"),
        exec_overrides=tuple(overrides),
        camera_rate=_rate(data.get("camera_rate", DEFAULT_CAMERA_RATE_HZ), "camera_rate"),
        slam_rate=_rate(data.get("slam_rate", DEFAULT_SLAM_RATE_HZ), "slam_rate"),
        payload=tuple(payload),
        chain=chain,
        initial_joints=initial,
        ik=_ik_from(_table(data.get("ik", {}), "ik")),
        mapping_origin=_vec3(mapping.get("origin", [0.7, 0.3, 0.0]), "mapping.origin"),
        mapping_scale=_vec3(mapping.get("scale", [0.1, 0.1, 0.0]), "mapping.scale"),
        extra_tasks=tuple(extra),
        base_dir=Path(base_dir),
    )
    if load_trajectories:
        scenario = attach_trajectories(scenario)
    return scenario


def attach_trajectories(scenario: Scenario) -> Scenario:
    """Load every referenced trajectory and check it covers the horizon."""
    refs = [("trajectories.head", "head", scenario.head)]
    if scenario.hand:
        refs.append(("trajectories.hand", "hand", scenario.hand))
    refs += [(f"objects.{oid}", f"object:{oid}", p) for oid, p in scenario.objects]
    loaded = {}
    for key, name, rel in refs:
        path = Path(rel) if Path(rel).is_absolute() else scenario.base_dir / rel
        if not path.is_file():
            raise ConfigError(f"trajectory file {str(path)!r} not found", key=key)
        try:
            traj = load_trajectory_file(path)
        except ParseError as exc:
            raise ConfigError(f"cannot load {str(path)!r}: {exc}", key=key) from None
        if traj.duration < scenario.horizon:
            raise ConfigError(
                f"trajectory covers {traj.duration / NS_PER_S:.3f} s, horizon is {scenario.horizon / NS_PER_S:.3f} s",
                key=key,
            )
        loaded[name] = traj
    return replace(scenario, trajectories=loaded)


def load_scenario(source: Source, base_dir: str | Path | None = None, load_trajectories: bool = True) -> Scenario:
    """Parse and validate a scenario document.

    Relative trajectory paths resolve against ``base_dir`` (default: the
    directory of ``source`` when it is a named file, else the working dir).
    """
    if base_dir is None:
        name = getattr(source, "name", None)
        base_dir = Path(name).parent if isinstance(name, str) else Path(".")
    try:
        data = tomllib.loads(_read_text(source))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"not valid TOML: {exc}") from None
    except UnicodeDecodeError as exc:
        raise ConfigError(f"not UTF-8: {exc}") from None
    return scenario_from_dict(data, base_dir, load_trajectories)


def load_scenario_file(path: str | Path, load_trajectories: bool = True) -> Scenario:
    path = Path(path)
    try:
        text = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc.strerror}", key=str(path)) from None
    return load_scenario(text, path.parent, load_trajectories)


def _channel_to(c: ChannelModel) -> dict[str, Any]:
    return {
        "base_delay": format_duration(c.base_delay),
        "bandwidth": c.bandwidth,
        "drop_prob": c.drop_prob,
        "jitter": _jitter_to(c.jitter),
    }


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    """Canonical, fully-defaulted form (chains expanded to DH lists)."""
    chain: dict[str, Any] = {
        "a": [j.a for j in s.chain.joints],
        "alpha": [j.alpha for j in s.chain.joints],
        "base_position": list(s.chain.base_pose.position),
        "d": [j.d for j in s.chain.joints],
        "hi": [j.hi for j in s.chain.joints],
        "lo": [j.lo for j in s.chain.joints],
        "theta_offset": [j.theta_offset for j in s.chain.joints],
    }
    if s.initial_joints is not None:
        chain["initial"] = list(s.initial_joints)
    trajectories: dict[str, Any] = {"head": s.head, "hand_offset": list(s.hand_offset)}
    if s.hand is not None:
        trajectories["hand"] = s.hand
    out: dict[str, Any] = {
        "calibration_period": format_duration(s.calibration_period),
        "camera_rate": s.camera_rate,
        "frame_rate": s.frame_rate,
        "horizon": format_duration(s.horizon),
        "merge": str(s.merge),
        "mode": s.mode,
        "seed": s.seed,
        "slam_rate": s.slam_rate,
        "chain": chain,
        "downlink": _channel_to(s.downlink),
        "exec": {name: _exec_to(e) for name, e in s.exec_overrides},
        "extra_tasks": {
            t.name: {"exec": _exec_to(t.exec_time), "reads": list(t.reads), "side": t.side,
                     "trigger": t.trigger, "writes": list(t.writes)}
            for t in s.extra_tasks
        },
        "ik": {
            "damping": s.ik.damping, "max_iters": s.ik.max_iters, "rotation_weight": s.ik.rotation_weight,
            "step_clamp": s.ik.step_clamp, "tol_pos": s.ik.tol_pos, "tol_rot": s.ik.tol_rot,
        },
        "mapping": {"origin": list(s.mapping_origin), "scale": list(s.mapping_scale)},
        "objects": dict(s.objects),
        "payload": dict(sorted(s.payload)),
        "trajectories": trajectories,
        "uplink": _channel_to(s.uplink),
    }
    return out


def dump_scenario(s: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(s))


def set_key(data: dict[str, Any], dotted: str, value: Any) -> dict[str, Any]:
    """Copy of ``data`` with ``a.b.c`` set; intermediate tables must exist."""
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in data.items()}
    parts = dotted.split(".")
    node = out
    for p in parts[:-1]:
        if p not in node or not isinstance(node[p], dict):
            raise ConfigError("unknown key", key=dotted)
        node[p] = dict(node[p])
        node = node[p]
    node[parts[-1]] = value
    return out
