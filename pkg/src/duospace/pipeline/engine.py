"""Discrete-event core: ordered event queue, latest-value topics, task specs."""

from __future__ import annotations

import enum
import heapq
import zlib
from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np

from ..core import SimTime
from ..errors import ConfigError


class EventKind(enum.IntEnum):
    # same-instant priority: deliveries are visible to tasks released at that instant
    NETWORK_DELIVERY = 0
    TASK_RELEASE = 1
    TASK_FINISH = 2
    FRAME_DEADLINE = 3


@dataclass(frozen=True)
class Event:
    time: SimTime
    kind: EventKind
    seq: int
    payload: Any = field(default=None, compare=False)

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.time, int(self.kind), self.seq)


class EventQueue:
    """Min-heap keyed by ``(time, kind, seq)``; ``seq`` makes the order total."""

    def __init__(self) -> None:
        self._heap: list[tuple[int, int, int, Event]] = []
        self._seq = 0
        self.now: SimTime = 0

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, time: SimTime, kind: EventKind, payload: Any = None) -> Event:
        if time < self.now:
            raise ValueError(f"cannot schedule at {time} before current time {self.now}")
        ev = Event(time, kind, self._seq, payload)
        self._seq += 1
        heapq.heappush(self._heap, (time, int(kind), ev.seq, ev))
        return ev

    def peek_time(self) -> SimTime | None:
        return self._heap[0][0] if self._heap else None

    def pop(self) -> Event:
        ev = heapq.heappop(self._heap)[3]
        self.now = ev.time
        return ev


@dataclass
class Topic:
    """Latest-value slot: reads see the newest publication and never block."""

    name: str
    latest: Any = None
    stamp: SimTime | None = None
    channel: str | None = None
    """Set for topics carried over a network channel."""
    publications: int = 0

    def publish(self, value: Any, stamp: SimTime) -> None:
        self.latest = value
        self.stamp = stamp
        self.publications += 1


# triggers ---------------------------------------------------------------

@dataclass(frozen=True)
class Periodic:
    period: SimTime
    phase: SimTime = 0

    def __post_init__(self) -> None:
        if self.period <= 0:
            raise ConfigError("period must be > 0", key="period")
        if self.phase < 0:
            raise ConfigError("phase must be >= 0", key="phase")

    def release_time(self, k: int) -> SimTime:
        return self.phase + k * self.period


@dataclass(frozen=True)
class OnMessage:
    topic: str


@dataclass(frozen=True)
class PreSubmit:
    """Released so that it finishes just before the next frame deadline.

    Pre-submit tasks chain backwards from the deadline in descending
    ``order``: the highest order finishes at the deadline itself.
    """

    order: int = 0


@dataclass(frozen=True)
class Deadline:
    """Runs at each frame deadline."""


Trigger = Union[Periodic, OnMessage, PreSubmit, Deadline]


# execution time ---------------------------------------------------------

@dataclass(frozen=True)
class Fixed:
    ns: SimTime

    def __post_init__(self) -> None:
        if self.ns < 0:
            raise ConfigError("execution time must be >= 0", key="exec")

    @property
    def mean(self) -> float:
        return float(self.ns)

    def sample(self, rng: np.random.Generator | None) -> SimTime:
        return self.ns


@dataclass(frozen=True)
class Uniform:
    lo: SimTime
    hi: SimTime

    def __post_init__(self) -> None:
        if not 0 <= self.lo <= self.hi:
            raise ConfigError("execution time range needs 0 <= lo <= hi", key="exec")

    @property
    def mean(self) -> float:
        return (self.lo + self.hi) / 2

    def sample(self, rng: np.random.Generator) -> SimTime:
        return int(rng.integers(self.lo, self.hi, endpoint=True))


ExecTime = Union[Fixed, Uniform]


class Side(enum.Enum):
    XR = "xr"
    AGENT = "agent"


@dataclass(frozen=True)
class TaskSpec:
    name: str
    trigger: Trigger
    exec_time: ExecTime
    reads: tuple[str, ...] = ()
    writes: tuple[str, ...] = ()
    side: Side = Side.XR


def rng_stream(seed: int, name: str) -> np.random.Generator:
    """Independent counter-based (Philox) stream for one named consumer.

    Keeping one stream per task or channel means a draw depends only on the
    seed, the consumer, and how many draws it made before.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(zlib.crc32(name.encode()),))
    return np.random.Generator(np.random.Philox(ss))
