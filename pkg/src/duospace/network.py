"""XR <-> agent WebSocket channel model.

Channels are in-order (TCP semantics): a message never arrives before the one
sent ahead of it, so each arrival is clamped to the channel's previous one.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core import NS_PER_S, SimTime
from .errors import ConfigError, MissingProvenance


class MessageKind(enum.Enum):
    USER_POSE = "user_pose"
    TRANSFORM_STRING = "transform_string"
    POINT_CLOUD = "point_cloud"
    VIDEO = "video"
    CALIBRATION = "calibration"


DEFAULT_PAYLOAD_BYTES = {
    MessageKind.USER_POSE: 256,
    MessageKind.TRANSFORM_STRING: 128,
    MessageKind.POINT_CLOUD: 64 * 1024,
    MessageKind.VIDEO: 128 * 1024,
    MessageKind.CALIBRATION: 512,
}

_NEEDS_PROVENANCE = (MessageKind.USER_POSE, MessageKind.TRANSFORM_STRING)


@dataclass(frozen=True)
class Envelope:
    kind: MessageKind
    payload_bytes: int
    send_stamp: SimTime
    origin_user_stamp: SimTime | None = None
    body: Any = None

    def __post_init__(self) -> None:
        if self.payload_bytes <= 0:
            raise ValueError("payload_bytes must be positive")
        if self.kind in _NEEDS_PROVENANCE and self.origin_user_stamp is None:
            raise MissingProvenance(f"{self.kind.value} envelope needs an origin user stamp")


def provenance_of(env: Envelope) -> SimTime:
    """Stamp of the user pose this message descends from."""
    if env.kind not in _NEEDS_PROVENANCE or env.origin_user_stamp is None:
        raise MissingProvenance(f"{env.kind.value} messages carry no user-pose provenance")
    return env.origin_user_stamp


@dataclass(frozen=True)
class UniformJitter:
    lo: SimTime
    hi: SimTime

    def __post_init__(self) -> None:
        if not 0 <= self.lo <= self.hi:
            raise ConfigError("jitter needs 0 <= lo <= hi", key="jitter")

    @property
    def mean(self) -> float:
        return (self.lo + self.hi) / 2

    def draw(self, rng: np.random.Generator) -> SimTime:
        if self.lo == self.hi:
            return self.lo
        return int(rng.integers(self.lo, self.hi, endpoint=True))


@dataclass(frozen=True)
class ChannelModel:
    base_delay: SimTime = 0
    jitter: UniformJitter | None = None
    bandwidth: int = 0
    """Bytes per second; 0 means serialization takes no time."""
    drop_prob: float = 0.0
    direction: str = ""

    def __post_init__(self) -> None:
        if self.base_delay < 0:
            raise ConfigError("base_delay must be >= 0", key="base_delay")
        if self.bandwidth < 0:
            raise ConfigError("bandwidth must be >= 0", key="bandwidth")
        if not 0.0 <= self.drop_prob < 1.0:
            raise ConfigError("drop_prob must be in [0, 1)", key="drop_prob")

    def serialization_ns(self, payload_bytes: int) -> SimTime:
        if self.bandwidth == 0:
            return 0
        return payload_bytes * NS_PER_S // self.bandwidth


@dataclass(frozen=True)
class Delivery:
    arrival: SimTime
    envelope: Envelope


@dataclass
class Channel:
    """A channel model plus its FIFO state for one simulation run."""

    model: ChannelModel
    last_arrival: SimTime = 0
    sent: int = 0
    dropped: int = 0
    rng_jitter: np.random.Generator | None = field(default=None, repr=False)
    rng_drop: np.random.Generator | None = field(default=None, repr=False)

    def transmit(self, env: Envelope, now: SimTime) -> Delivery | None:
        return transmit(self, env, now)


def transmit(channel: Channel, env: Envelope, now: SimTime, rng: np.random.Generator | None = None) -> Delivery | None:
    """Push ``env`` onto ``channel`` at ``now``; ``None`` if the message is lost.

    ``rng`` overrides both of the channel's own jitter and drop streams.
    """
    model = channel.model
    channel.sent += 1
    if model.drop_prob > 0.0:
        r = rng or channel.rng_drop
        if r.random() < model.drop_prob:
            channel.dropped += 1
            return None
    jitter = model.jitter.draw(rng or channel.rng_jitter) if model.jitter is not None else 0
    arrival = now + model.base_delay + jitter + model.serialization_ns(env.payload_bytes)
    arrival = max(arrival, channel.last_arrival)
    channel.last_arrival = arrival
    return Delivery(arrival, env)
