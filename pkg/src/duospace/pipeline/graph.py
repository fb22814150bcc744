"""Publisher-subscriber task graph for the XR and agent sides."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from ..core import NS_PER_S, SimTime
from ..errors import ConfigError
from ..ingest import Scenario
from ..spaces import parse_duration
from .defaults import DEFAULT_EXEC_NS
from .engine import Deadline, ExecTime, Fixed, OnMessage, Periodic, PreSubmit, Side, TaskSpec, Topic, Trigger


class Mode(enum.Enum):
    BASELINE = "baseline"
    DUO = "duo"

    @classmethod
    def of(cls, value: str | Mode) -> Mode:
        if isinstance(value, Mode):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ConfigError(f"unknown mode {value!r}", key="mode") from None


UPLINK = "uplink"
DOWNLINK = "downlink"

XR_REQUIRED = ("scene_reconstruction", "atw", "frame_submit")


@dataclass
class TaskGraph:
    tasks: list[TaskSpec]
    topics: dict[str, Topic]
    mode: Mode
    frame_period: SimTime
    subscribers: dict[str, list[TaskSpec]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.validate()
        subs: dict[str, list[TaskSpec]] = {}
        for t in self.tasks:
            if isinstance(t.trigger, OnMessage):
                subs.setdefault(t.trigger.topic, []).append(t)
        self.subscribers = subs

    def task(self, name: str) -> TaskSpec:
        for t in self.tasks:
            if t.name == name:
                return t
        raise KeyError(name)

    def names(self, side: Side | None = None) -> list[str]:
        return [t.name for t in self.tasks if side is None or t.side is side]

    def validate(self) -> None:
        seen = set()
        for t in self.tasks:
            if t.name in seen:
                raise ConfigError("duplicate task name", key=t.name)
            seen.add(t.name)
            for topic in t.reads + t.writes:
                if topic not in self.topics:
                    raise ConfigError(f"task {t.name!r} references unknown topic {topic!r}", key=t.name)
            if isinstance(t.trigger, OnMessage) and t.trigger.topic not in self.topics:
                raise ConfigError(f"task {t.name!r} triggers on unknown topic {t.trigger.topic!r}", key=t.name)
        xr = {t.name for t in self.tasks if t.side is Side.XR}
        missing = [n for n in XR_REQUIRED if n not in xr]
        if missing:
            raise ConfigError(f"XR task set lacks {missing}", key="tasks")


def _period(rate_hz: float) -> SimTime:
    return int(round(NS_PER_S / rate_hz))


def _exec(scenario: Scenario, name: str) -> ExecTime:
    return scenario.exec_override(name) or Fixed(DEFAULT_EXEC_NS[name])


def _aligned_phase(period: SimTime, exec_time: ExecTime) -> SimTime:
    """Phase making a periodic producer publish on the frame grid."""
    return int(-round(exec_time.mean)) % period


_TRIGGER = re.compile(r"(periodic|on):(.+)")


def _parse_trigger(text: str, key: str) -> Trigger:
    m = _TRIGGER.fullmatch(text.strip())
    if m is None:
        raise ConfigError(f"expected 'periodic:<duration>' or 'on:<topic>', got {text!r}", key=key)
    if m.group(1) == "on":
        return OnMessage(m.group(2))
    period = parse_duration(m.group(2), key)
    if period <= 0:
        raise ConfigError("period must be > 0", key=key)
    return Periodic(period)


def build_task_graph(scenario: Scenario, mode: str | Mode | None = None) -> TaskGraph:
    """Instantiate the task set for ``mode`` (default: the scenario's mode)."""
    mode = Mode.of(mode if mode is not None else scenario.mode)
    frame = scenario.frame_period
    ex = {name: _exec(scenario, name) for name in DEFAULT_EXEC_NS}
    xr, ag = Side.XR, Side.AGENT

    def perception(name: str, writes: tuple[str, ...]) -> TaskSpec:
        return TaskSpec(name, Periodic(frame, _aligned_phase(frame, ex[name])), ex[name], (), writes, xr)

    tasks = [
        perception("imu_integration", ("imu_pose",)),
        perception("vio", ("head_pose", "body_pose")),
        perception("hand_tracking", ("hand_pose",)),
        TaskSpec("ws_client_send", OnMessage("hand_pose"), ex["ws_client_send"],
                 ("hand_pose", "head_pose", "body_pose"), (UPLINK,), xr),
        TaskSpec("ws_client_recv", OnMessage(DOWNLINK), ex["ws_client_recv"], (DOWNLINK,),
                 ("transform_rx", "pointcloud_rx", "video_rx", "calibration_rx"), xr),
        TaskSpec("transform_listener", OnMessage("transform_rx"), ex["transform_listener"],
                 ("transform_rx",), ("agent_state",), xr),
        TaskSpec("pointcloud_update", OnMessage("pointcloud_rx"), ex["pointcloud_update"],
                 ("pointcloud_rx",), ("object_state",), xr),
    ]
    if mode is Mode.BASELINE:
        scene_reads = ("head_pose", "body_pose", "hand_pose", "agent_state", "object_state")
    else:
        scene_reads = ("head_pose", "body_pose", "hand_pose", "duo_state")
    tasks += [
        TaskSpec("scene_reconstruction", PreSubmit(0), ex["scene_reconstruction"], scene_reads, ("scene",), xr),
        TaskSpec("atw", PreSubmit(1), ex["atw"], ("scene", "imu_pose"), ("frame",), xr),
        TaskSpec("frame_submit", Deadline(), ex["frame_submit"], ("frame",), (), xr),
        TaskSpec("rosbridge_server", OnMessage(UPLINK), ex["rosbridge_server"], (UPLINK,), ("user_poses",), ag),
        TaskSpec("state_publisher", OnMessage("user_poses"), ex["state_publisher"],
                 ("user_poses",), ("robot_state",), ag),
        TaskSpec("ik_solver", OnMessage("robot_state"), ex["ik_solver"], ("robot_state",), ("joint_command",), ag),
        TaskSpec("transform_compress", OnMessage("joint_command"), ex["transform_compress"],
                 ("joint_command",), (DOWNLINK,), ag),
        TaskSpec("visual_slam", Periodic(_period(scenario.slam_rate)), ex["visual_slam"], (), (DOWNLINK,), ag),
        TaskSpec("cam_feed", Periodic(_period(scenario.camera_rate)), ex["cam_feed"], (), (DOWNLINK,), ag),
    ]
    if mode is Mode.DUO:
        tasks += [
            TaskSpec("local_ik_predict", OnMessage("hand_pose"), ex["local_ik_predict"],
                     ("hand_pose",), ("predicted_agent",), xr),
            TaskSpec("object_predict", OnMessage("predicted_agent"), ex["object_predict"],
                     ("predicted_agent",), ("predicted_objects",), xr),
            TaskSpec("calibration_merge", OnMessage("predicted_objects"), ex["calibration_merge"],
                     ("predicted_objects", "calibration_rx"), ("duo_state",), xr),
            TaskSpec("calibration_send", Periodic(scenario.calibration_period), ex["calibration_send"],
                     (), (DOWNLINK,), ag),
        ]

    topic_names = {
        "imu_pose", "head_pose", "body_pose", "hand_pose", "transform_rx", "pointcloud_rx", "video_rx",
        "calibration_rx", "agent_state", "object_state", "scene", "frame", "user_poses", "robot_state",
        "joint_command",
    }
    if mode is Mode.DUO:
        topic_names |= {"predicted_agent", "predicted_objects", "duo_state"}
    topics = {n: Topic(n) for n in sorted(topic_names)}
    topics[UPLINK] = Topic(UPLINK, channel=UPLINK)
    topics[DOWNLINK] = Topic(DOWNLINK, channel=DOWNLINK)

    builtin = set(topics)
    for t in scenario.extra_tasks:
        key = f"extra_tasks.{t.name}"
        for w in t.writes:
            if w in builtin:
                raise ConfigError(f"cannot write built-in topic {w!r}", key=f"{key}.writes")
            topics.setdefault(w, Topic(w))
    for t in scenario.extra_tasks:
        tasks.append(TaskSpec(t.name, _parse_trigger(t.trigger, f"extra_tasks.{t.name}.trigger"), t.exec_time,
                              t.reads, t.writes, Side(t.side)))

    return TaskGraph(tasks, topics, mode, frame)
