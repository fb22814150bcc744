"""Event loop and task transfer functions for one simulation run.

Tasks snapshot their inputs when released and publish outputs when they
finish. OnMessage tasks receive the exact message that triggered them, so two
deliveries at the same instant are both processed. Every other read sees the
latest value on its topic at release time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable

from ..core import Pose, SimTime, pose_angle, pose_distance
from ..errors import OutOfRange, StaleCalibration, TrajectoryExhausted
from ..ingest import Scenario, Trajectory, sample_pose
from ..kinematics import decode_transform_string, encode_transform_string, forward_kinematics, inverse_kinematics
from ..metrics import FrameRecord, RunTrace
from ..network import Channel, Envelope, MessageKind
from ..spaces import Calibration, PredictiveSpace, VirtualSpace, hand_target, update_baseline_space
from .engine import (
    Event,
    EventKind,
    EventQueue,
    OnMessage,
    Periodic,
    PreSubmit,
    TaskSpec,
    rng_stream,
)
from .graph import DOWNLINK, UPLINK, Mode, TaskGraph, build_task_graph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class UserPoses:
    head: Pose
    body: Pose
    hand: Pose


@dataclass(frozen=True)
class AgentView:
    """What a scene shows of the agent and the objects."""

    agent_ee: Pose
    origin: SimTime | None
    objects: tuple[tuple[str, Pose], ...] = ()


@dataclass(frozen=True)
class Scene:
    view: AgentView
    head: Pose | None


@dataclass
class _Job:
    task: TaskSpec
    release: SimTime
    inputs: dict[str, Any]
    capture: Any = None
    then: tuple[tuple[TaskSpec, SimTime], ...] = ()
    """Pre-submit tasks still to run, released when this one finishes."""


@dataclass
class AuditLog:
    """Optional record of reads, publications and task spans for trace checks."""

    reads: list[tuple[str, str, SimTime, SimTime | None]] = field(default_factory=list)
    publications: dict[str, list[SimTime]] = field(default_factory=dict)
    spans: list[tuple[str, SimTime, SimTime]] = field(default_factory=list)
    events: list[tuple[SimTime, int, int, str]] = field(default_factory=list)
    deliveries: dict[str, list[tuple[int, SimTime, SimTime]]] = field(default_factory=dict)


_BODY_DROP = (0.0, 0.0, -0.6)


class Simulation:
    def __init__(self, scenario: Scenario, mode: str | Mode | None = None, seed: int | None = None,
                 audit: bool = False) -> None:
        self.scenario = scenario
        self.mode = Mode.of(mode if mode is not None else scenario.mode)
        self.seed = scenario.seed if seed is None else seed
        self.graph: TaskGraph = build_task_graph(scenario, self.mode)
        self.topics = self.graph.topics
        self.queue = EventQueue()
        self.horizon = scenario.horizon
        self.frame_period = scenario.frame_period
        self.audit = AuditLog() if audit else None

        self.channels = {
            UPLINK: Channel(scenario.uplink, rng_jitter=rng_stream(self.seed, "jitter:uplink"),
                            rng_drop=rng_stream(self.seed, "drop:uplink")),
            DOWNLINK: Channel(scenario.downlink, rng_jitter=rng_stream(self.seed, "jitter:downlink"),
                              rng_drop=rng_stream(self.seed, "drop:downlink")),
        }
        self._exec_rng = {t.name: rng_stream(self.seed, f"exec:{t.name}") for t in self.graph.tasks}
        self._send_seq = {UPLINK: 0, DOWNLINK: 0}

        tr = scenario.trajectories
        self.head_traj: Trajectory = tr["head"]
        self.hand_traj: Trajectory | None = tr.get("hand")
        self.object_trajs: dict[str, Trajectory] = {oid: tr[f"object:{oid}"] for oid, _ in scenario.objects}

        chain = scenario.chain
        objects0 = {oid: self._sample(t, 0, f"object:{oid}") for oid, t in self.object_trajs.items()}
        hand0 = self._hand_at(0)
        self.hand_anchor = hand0.position
        q0 = scenario.joints0
        self.agent_space = VirtualSpace.initial(chain, q0, objects0, hand0)
        self.user_space = VirtualSpace.initial(chain, q0, objects0, hand0)
        self.predictive = PredictiveSpace(
            VirtualSpace.initial(chain, q0, objects0, hand0), chain, scenario.ik,
            scenario.merge, self.frame_period,
        )
        self.counters = {"agent_ik_unconverged": 0, "stale_calibrations": 0, "stale_transforms": 0,
                         "uplink_dropped": 0, "downlink_dropped": 0}
        self.frames: list[FrameRecord] = []
        self._presubmit = sorted((t for t in self.graph.tasks if isinstance(t.trigger, PreSubmit)),
                                 key=lambda t: t.trigger.order)
        self._handlers: dict[str, Callable[[_Job, SimTime], dict[str, Any]]] = {
            "imu_integration": self._imu_integration,
            "vio": self._vio,
            "hand_tracking": self._hand_tracking,
            "ws_client_send": self._ws_client_send,
            "ws_client_recv": self._ws_client_recv,
            "transform_listener": self._transform_listener,
            "pointcloud_update": self._pointcloud_update,
            "scene_reconstruction": self._scene_reconstruction,
            "atw": self._atw,
            "rosbridge_server": self._rosbridge_server,
            "state_publisher": self._state_publisher,
            "ik_solver": self._ik_solver,
            "transform_compress": self._transform_compress,
            "visual_slam": self._visual_slam,
            "cam_feed": self._cam_feed,
            "local_ik_predict": self._local_ik_predict,
            "object_predict": self._object_predict,
            "calibration_merge": self._calibration_merge,
            "calibration_send": self._calibration_send,
        }
        self._capturers: dict[str, Callable[[SimTime], Any]] = {
            "visual_slam": self._objects_at,
            "calibration_send": self._calibration_capture,
        }
        self._initial_topics()

    # -- world sampling -----------------------------------------------------
    def _sample(self, traj: Trajectory, t: SimTime, name: str) -> Pose:
        try:
            return sample_pose(traj, t)
        except OutOfRange:
            raise TrajectoryExhausted(f"{name} trajectory ends at {traj.duration} ns, needed {t} ns") from None

    def _head_at(self, t: SimTime) -> Pose:
        return self._sample(self.head_traj, t, "head")

    def _hand_at(self, t: SimTime) -> Pose:
        if self.hand_traj is not None:
            return self._sample(self.hand_traj, t, "hand")
        head = self._head_at(t)
        off = head.orientation.rotate(self.scenario.hand_offset)
        return Pose(tuple(h + o for h, o in zip(head.position, off)), head.orientation, t)

    def _objects_at(self, t: SimTime) -> tuple[tuple[str, Pose], ...]:
        return tuple((oid, self._sample(tr, t, f"object:{oid}")) for oid, tr in sorted(self.object_trajs.items()))

    def _target(self, hand: Pose) -> Pose:
        s = self.scenario
        return hand_target(hand, self.hand_anchor, s.mapping_origin, s.mapping_scale)

    def _initial_topics(self) -> None:
        head = self._head_at(0)
        objects = self._objects_at(0)
        view = AgentView(self.agent_space.agent_ee, None, objects)
        initial = {
            "imu_pose": head,
            "head_pose": head,
            "body_pose": head,
            "hand_pose": self._hand_at(0),
            "agent_state": view,
            "object_state": objects,
        }
        if self.mode is Mode.DUO:
            initial["duo_state"] = view
        for name, value in initial.items():
            self.topics[name].publish(value, 0)
            if self.audit:
                self.audit.publications.setdefault(name, []).append(0)

    # -- scheduling ---------------------------------------------------------
    def _push(self, time: SimTime, kind: EventKind, payload: Any) -> Event | None:
        if time > self.horizon:
            return None
        return self.queue.push(time, kind, payload)

    def _schedule_frame(self, k: int) -> list[Event]:
        deadline = k * self.frame_period
        if deadline > self.horizon:
            return []
        # the pre-submit chain runs back to back and ends at the deadline
        chain = tuple((t, t.exec_time.sample(self._exec_rng[t.name])) for t in self._presubmit)
        events = []
        if chain:
            start = max(deadline - sum(ex for _, ex in chain), self.queue.now)
            ev = self._push(start, EventKind.TASK_RELEASE, (chain[0][0], None, chain[0][1], chain[1:]))
            if ev:
                events.append(ev)
        ev = self._push(deadline, EventKind.FRAME_DEADLINE, k)
        if ev:
            events.append(ev)
        return events

    def release_task(self, task: TaskSpec, now: SimTime, message: Any = None,
                     exec_ns: SimTime | None = None,
                     then: tuple[tuple[TaskSpec, SimTime], ...] = ()) -> list[Event]:
        """Release ``task`` at ``now``: snapshot inputs and schedule its finish."""
        inputs: dict[str, Any] = {}
        trigger_topic = task.trigger.topic if isinstance(task.trigger, OnMessage) else None
        for name in task.reads:
            if name == trigger_topic:
                inputs[name] = message
                continue
            topic = self.topics[name]
            inputs[name] = topic.latest
            if self.audit:
                self.audit.reads.append((task.name, name, now, topic.stamp))
        capture = self._capturers[task.name](now) if task.name in self._capturers else None
        if exec_ns is None:
            exec_ns = task.exec_time.sample(self._exec_rng[task.name])
        events = []
        ev = self._push(now + exec_ns, EventKind.TASK_FINISH, _Job(task, now, inputs, capture, then))
        if ev:
            events.append(ev)
        if isinstance(task.trigger, Periodic):
            nxt = self._push(now + task.trigger.period, EventKind.TASK_RELEASE, (task, None, None, ()))
            if nxt:
                events.append(nxt)
        return events

    def _publish(self, topic_name: str, value: Any, now: SimTime) -> None:
        topic = self.topics[topic_name]
        if topic.channel is not None:
            channel = self.channels[topic.channel]
            seq = self._send_seq[topic.channel]
            self._send_seq[topic.channel] += 1
            delivery = channel.transmit(value, now)
            if delivery is None:
                self.counters[f"{topic.channel}_dropped"] += 1
                return
            if self.audit:
                self.audit.deliveries.setdefault(topic.channel, []).append((seq, now, delivery.arrival))
            self._push(delivery.arrival, EventKind.NETWORK_DELIVERY, (topic_name, value))
            return
        topic.publish(value, now)
        if self.audit:
            self.audit.publications.setdefault(topic_name, []).append(now)
        for sub in self.graph.subscribers.get(topic_name, ()):
            self._push(now, EventKind.TASK_RELEASE, (sub, value, None, ()))

    # -- main loop ----------------------------------------------------------
    def run(self) -> RunTrace:
        for task in self.graph.tasks:
            if isinstance(task.trigger, Periodic):
                self._push(task.trigger.phase, EventKind.TASK_RELEASE, (task, None, None, ()))
        self._schedule_frame(1)

        while self.queue:
            ev = self.queue.pop()
            if self.audit:
                self.audit.events.append((ev.time, int(ev.kind), ev.seq, self._describe(ev)))
            if ev.kind is EventKind.TASK_RELEASE:
                task, message, exec_ns, then = ev.payload
                self.release_task(task, ev.time, message, exec_ns, then)
            elif ev.kind is EventKind.TASK_FINISH:
                self._finish(ev.payload, ev.time)
            elif ev.kind is EventKind.NETWORK_DELIVERY:
                topic_name, env = ev.payload
                topic = self.topics[topic_name]
                topic.publish(env, ev.time)
                if self.audit:
                    self.audit.publications.setdefault(topic_name, []).append(ev.time)
                for sub in self.graph.subscribers.get(topic_name, ()):
                    self._push(ev.time, EventKind.TASK_RELEASE, (sub, env, None, ()))
            else:
                self._frame_submit(ev.time)
                self._schedule_frame(ev.payload + 1)

        self.predictive.finish()
        self.counters["stale_transforms"] = self.user_space.stale_transforms
        self.counters["stale_calibrations"] = self.predictive.stale_calibrations
        self.counters["local_ik_unconverged"] = self.predictive.unconverged_frames
        return RunTrace(
            frames=self.frames,
            merges=list(self.predictive.merges),
            fingerprint=self.scenario.fingerprint(self.mode.value),
            seed=self.seed,
            mode=self.mode.value,
            counters=dict(self.counters),
        )

    @staticmethod
    def _describe(ev: Event) -> str:
        if ev.kind in (EventKind.TASK_RELEASE,):
            return ev.payload[0].name
        if ev.kind is EventKind.TASK_FINISH:
            return ev.payload.task.name
        if ev.kind is EventKind.NETWORK_DELIVERY:
            return ev.payload[1].kind.value
        return f"frame{ev.payload}"

    def _finish(self, job: _Job, now: SimTime) -> None:
        if self.audit:
            self.audit.spans.append((job.task.name, job.release, now))
        handler = self._handlers.get(job.task.name, self._token)
        outputs = handler(job, now)
        for topic_name, value in outputs.items():
            self._publish(topic_name, value, now)
        if job.then:
            (task, ex), rest = job.then[0], job.then[1:]
            self._push(now, EventKind.TASK_RELEASE, (task, None, ex, rest))

    # -- XR tasks -----------------------------------------------------------
    def _token(self, job: _Job, now: SimTime) -> dict[str, Any]:
        return {w: (job.task.name, now) for w in job.task.writes}

    def _imu_integration(self, job: _Job, now: SimTime) -> dict[str, Any]:
        return {"imu_pose": self._head_at(now)}

    def _vio(self, job: _Job, now: SimTime) -> dict[str, Any]:
        head = self._head_at(now)
        body = Pose(tuple(h + d for h, d in zip(head.position, _BODY_DROP)), head.orientation, now)
        return {"head_pose": head, "body_pose": body}

    def _hand_tracking(self, job: _Job, now: SimTime) -> dict[str, Any]:
        return {"hand_pose": self._hand_at(now)}

    def _ws_client_send(self, job: _Job, now: SimTime) -> dict[str, Any]:
        hand: Pose = job.inputs["hand_pose"]
        poses = UserPoses(job.inputs["head_pose"], job.inputs["body_pose"], hand)
        env = Envelope(MessageKind.USER_POSE, self.scenario.payload_bytes(MessageKind.USER_POSE), now,
                       hand.stamp, poses)
        return {UPLINK: env}

    _RX_TOPIC = {
        MessageKind.TRANSFORM_STRING: "transform_rx",
        MessageKind.POINT_CLOUD: "pointcloud_rx",
        MessageKind.VIDEO: "video_rx",
        MessageKind.CALIBRATION: "calibration_rx",
    }

    def _ws_client_recv(self, job: _Job, now: SimTime) -> dict[str, Any]:
        env: Envelope = job.inputs[DOWNLINK]
        return {self._RX_TOPIC[env.kind]: env.body}

    def _transform_listener(self, job: _Job, now: SimTime) -> dict[str, Any]:
        decoded = decode_transform_string(job.inputs["transform_rx"])
        update_baseline_space(self.user_space, self.scenario.chain, transform=decoded)
        s = self.user_space
        return {"agent_state": AgentView(s.agent_ee, s.agent_origin)}

    def _pointcloud_update(self, job: _Job, now: SimTime) -> dict[str, Any]:
        objects = job.inputs["pointcloud_rx"]
        update_baseline_space(self.user_space, self.scenario.chain, objects=objects)
        return {"object_state": tuple(objects)}

    def _scene_reconstruction(self, job: _Job, now: SimTime) -> dict[str, Any]:
        if self.mode is Mode.DUO:
            view = job.inputs["duo_state"]
        else:
            agent: AgentView = job.inputs["agent_state"]
            view = AgentView(agent.agent_ee, agent.origin, job.inputs["object_state"])
        return {"scene": Scene(view, job.inputs["head_pose"])}

    def _atw(self, job: _Job, now: SimTime) -> dict[str, Any]:
        # reprojection uses the freshest head orientation; content is unchanged
        scene: Scene = job.inputs["scene"]
        return {"frame": Scene(scene.view, job.inputs["imu_pose"])}

    def _frame_submit(self, now: SimTime) -> None:
        frame: Scene | None = self.topics["frame"].latest
        gt = self.agent_space.agent_ee
        if frame is None:
            shown, origin = self.user_space.agent_ee, None
        else:
            shown, origin = frame.view.agent_ee, frame.view.origin
        if self.audit:
            self.audit.reads.append(("frame_submit", "frame", now, self.topics["frame"].stamp))
        self.frames.append(FrameRecord(now, origin, shown, gt, pose_distance(shown, gt), pose_angle(shown, gt)))

    # -- agent tasks --------------------------------------------------------
    def _rosbridge_server(self, job: _Job, now: SimTime) -> dict[str, Any]:
        env: Envelope = job.inputs[UPLINK]
        return {"user_poses": (env.body, env.origin_user_stamp)}

    def _state_publisher(self, job: _Job, now: SimTime) -> dict[str, Any]:
        poses, origin = job.inputs["user_poses"]
        return {"robot_state": (self._target(poses.hand), origin)}

    def _ik_solver(self, job: _Job, now: SimTime) -> dict[str, Any]:
        target, origin = job.inputs["robot_state"]
        space = self.agent_space
        sol = inverse_kinematics(self.scenario.chain, target, space.agent_joints, self.scenario.ik)
        if sol.converged:
            space.agent_joints = sol.q
            space.agent_ee = forward_kinematics(self.scenario.chain, sol.q, now)
        else:
            self.counters["agent_ik_unconverged"] += 1
        space.agent_stamp = now
        space.agent_origin = origin
        return {"joint_command": (space.agent_joints, origin)}

    def _transform_compress(self, job: _Job, now: SimTime) -> dict[str, Any]:
        joints, origin = job.inputs["joint_command"]
        text = encode_transform_string(joints, now, origin)
        env = Envelope(MessageKind.TRANSFORM_STRING, self.scenario.payload_bytes(MessageKind.TRANSFORM_STRING),
                       now, origin, text)
        return {DOWNLINK: env}

    def _visual_slam(self, job: _Job, now: SimTime) -> dict[str, Any]:
        env = Envelope(MessageKind.POINT_CLOUD, self.scenario.payload_bytes(MessageKind.POINT_CLOUD), now,
                       None, job.capture)
        return {DOWNLINK: env}

    def _cam_feed(self, job: _Job, now: SimTime) -> dict[str, Any]:
        env = Envelope(MessageKind.VIDEO, self.scenario.payload_bytes(MessageKind.VIDEO), now, None, job.release)
        return {DOWNLINK: env}

    def _calibration_capture(self, t: SimTime) -> Calibration:
        s = self.agent_space
        return Calibration(t, s.agent_joints, self._objects_at(t), s.agent_origin)

    def _calibration_send(self, job: _Job, now: SimTime) -> dict[str, Any]:
        env = Envelope(MessageKind.CALIBRATION, self.scenario.payload_bytes(MessageKind.CALIBRATION), now,
                       None, job.capture)
        return {DOWNLINK: env}

    # -- duo XR tasks -------------------------------------------------------
    def _local_ik_predict(self, job: _Job, now: SimTime) -> dict[str, Any]:
        hand: Pose = job.inputs["hand_pose"]
        self.predictive.predict_agent(self._target(hand), origin=hand.stamp)
        return {"predicted_agent": hand.stamp}

    def _object_predict(self, job: _Job, now: SimTime) -> dict[str, Any]:
        self.predictive.predict_objects(now)
        return {"predicted_objects": job.inputs["predicted_agent"]}

    def _calibration_merge(self, job: _Job, now: SimTime) -> dict[str, Any]:
        p = self.predictive
        cal: Calibration | None = job.inputs["calibration_rx"]
        if cal is not None and (p.last_calibration is None or cal.stamp != p.last_calibration):
            try:
                p.apply_calibration(cal, now)
            except StaleCalibration:
                log.debug("discarded stale calibration stamped %d", cal.stamp)
        p.advance_merges()
        objects = tuple((oid, p.displayed_object(oid)) for oid in sorted(p.model_objects))
        return {"duo_state": AgentView(p.displayed_agent(), p.space.agent_origin, objects)}


def run_simulation(scenario: Scenario, mode: str | Mode | None = None, seed: int | None = None) -> RunTrace:
    """Run ``scenario`` to its horizon; identical arguments give identical traces."""
    return Simulation(scenario, mode, seed).run()
