"""Frame records, end-to-end latency statistics and trace serialization.

End-to-end latency is the age of information at frame submission: the time
since the user pose behind the displayed agent pose was produced.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .core import NS_PER_S, Pose, SimTime
from .errors import EmptyTrace, MissingProvenance
from .spaces import MergeEvent

FRAME_HEADER = "submit_ns,origin_ns,aoi_ns,pose_error_m"
MERGE_HEADER = "time_ns,id,delta_d_m,max_step_m,strategy"


@dataclass(frozen=True)
class FrameRecord:
    submit_time: SimTime
    visualized_origin_user_stamp: SimTime | None
    agent_ee_displayed: Pose | None = None
    agent_ee_ground_truth: Pose | None = None
    pose_error: float = 0.0
    angle_error: float = 0.0

    @property
    def aoi_latency(self) -> SimTime | None:
        if self.visualized_origin_user_stamp is None:
            return None
        return self.submit_time - self.visualized_origin_user_stamp


@dataclass
class RunTrace:
    frames: list[FrameRecord]
    merges: list[MergeEvent] = field(default_factory=list)
    fingerprint: str = ""
    seed: int = 0
    mode: str = ""
    counters: dict[str, int] = field(default_factory=dict)


def aoi_latency(frame: FrameRecord) -> float:
    """Age of the visualized user pose at submission, in seconds."""
    if frame.visualized_origin_user_stamp is None:
        raise MissingProvenance(f"frame at {frame.submit_time} shows no user-derived agent pose")
    return (frame.submit_time - frame.visualized_origin_user_stamp) / NS_PER_S


def nearest_rank(sorted_values: Sequence[float], p: float) -> float:
    """Nearest-rank percentile of an ascending sequence (no interpolation)."""
    if not sorted_values:
        raise EmptyTrace("percentile of an empty sample")
    rank = max(1, math.ceil(p / 100.0 * len(sorted_values)))
    return sorted_values[rank - 1]


@dataclass(frozen=True)
class Distribution:
    count: int
    mean: float
    median: float
    p95: float
    max: float

    @classmethod
    def of(cls, values: Iterable[float]) -> Distribution:
        v = sorted(values)
        if not v:
            return cls(0, 0.0, 0.0, 0.0, 0.0)
        return cls(len(v), math.fsum(v) / len(v), nearest_rank(v, 50), nearest_rank(v, 95), v[-1])


@dataclass(frozen=True)
class Report:
    frame_count: int
    latency_frame_count: int
    mean_aoi_s: float
    median_aoi_s: float
    p95_aoi_s: float
    p99_aoi_s: float
    mean_pose_error_m: float
    max_pose_error_m: float
    merge_delta_d_m: Distribution
    merge_max_step_m: Distribution

    def to_dict(self) -> dict:
        return asdict(self)


def summarize(trace: RunTrace | Sequence[FrameRecord], merges: Sequence[MergeEvent] | None = None) -> Report:
    """Aggregate statistics; percentiles use the nearest-rank rule.

    Frames shown before any user-derived agent pose reached the display carry
    no provenance and are left out of the latency figures only.
    """
    if isinstance(trace, RunTrace):
        frames, merges = trace.frames, trace.merges if merges is None else merges
    else:
        frames = list(trace)
    merges = merges or []
    if not frames:
        raise EmptyTrace("trace has no frames")
    lat = sorted(f.aoi_latency / NS_PER_S for f in frames if f.aoi_latency is not None)
    if not lat:
        raise EmptyTrace("no frame displays a user-derived agent pose")
    errs = [f.pose_error for f in frames]
    return Report(
        frame_count=len(frames),
        latency_frame_count=len(lat),
        mean_aoi_s=math.fsum(lat) / len(lat),
        median_aoi_s=nearest_rank(lat, 50),
        p95_aoi_s=nearest_rank(lat, 95),
        p99_aoi_s=nearest_rank(lat, 99),
        mean_pose_error_m=math.fsum(errs) / len(errs),
        max_pose_error_m=max(errs),
        merge_delta_d_m=Distribution.of(m.delta_d for m in merges),
        merge_max_step_m=Distribution.of(m.max_step for m in merges),
    )


def latency_reduction(baseline: Report, duo: Report) -> float:
    """Percentage drop of mean latency from ``baseline`` to ``duo``."""
    if baseline.mean_aoi_s == 0:
        raise ZeroDivisionError("baseline mean latency is zero")
    return 100.0 * (1.0 - duo.mean_aoi_s / baseline.mean_aoi_s)


# ---------------------------------------------------------------------------
# export / import


@dataclass(frozen=True)
class FrameRow:
    submit_ns: int
    origin_ns: int | None
    aoi_ns: int | None
    pose_error_m: float


@dataclass(frozen=True)
class MergeRow:
    time_ns: int
    id: str
    delta_d_m: float
    max_step_m: float
    strategy: str


def _fix9(x: float) -> str:
    return f"{x:.9f}"


def frame_rows(trace: RunTrace) -> list[FrameRow]:
    """Frames projected onto the export schema (pose error rounded to 1 nm)."""
    return [
        FrameRow(f.submit_time, f.visualized_origin_user_stamp, f.aoi_latency, float(_fix9(f.pose_error)))
        for f in trace.frames
    ]


def merge_rows(trace: RunTrace) -> list[MergeRow]:
    return [
        MergeRow(m.time, m.target_id, float(_fix9(m.delta_d)), float(_fix9(m.max_step)), m.strategy)
        for m in trace.merges
    ]


def _opt(v: int | None) -> str:
    return "" if v is None else str(v)


def _frame_json(r: FrameRow) -> str:
    def num(v: int | None) -> str:
        return "null" if v is None else str(v)

    return (f'{{"submit_ns": {r.submit_ns}, "origin_ns": {num(r.origin_ns)}, '
            f'"aoi_ns": {num(r.aoi_ns)}, "pose_error_m": {_fix9(r.pose_error_m)}}}')


def _merge_json(r: MergeRow) -> str:
    return (f'{{"time_ns": {r.time_ns}, "id": {json.dumps(r.id)}, "delta_d_m": {_fix9(r.delta_d_m)}, '
            f'"max_step_m": {_fix9(r.max_step_m)}, "strategy": {json.dumps(r.strategy)}}}')


def frames_text(trace: RunTrace, fmt: str = "csv") -> str:
    rows = frame_rows(trace)
    if fmt == "jsonl":
        return "".join(_frame_json(r) + "\n" for r in rows)
    lines = [FRAME_HEADER]
    lines += [f"{r.submit_ns},{_opt(r.origin_ns)},{_opt(r.aoi_ns)},{_fix9(r.pose_error_m)}" for r in rows]
    return "\n".join(lines) + "\n"


def merges_text(trace: RunTrace, fmt: str = "csv") -> str:
    rows = merge_rows(trace)
    if fmt == "jsonl":
        return "".join(_merge_json(r) + "\n" for r in rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    buf.write(MERGE_HEADER + "\n")
    for r in rows:
        w.writerow([r.time_ns, r.id, _fix9(r.delta_d_m), _fix9(r.max_step_m), r.strategy])
    return buf.getvalue()


def report_dict(report: Report, trace: RunTrace | None = None) -> dict:
    out = report.to_dict()
    if trace is not None:
        out = {"mode": trace.mode, "seed": trace.seed, "fingerprint": trace.fingerprint,
               "counters": dict(sorted(trace.counters.items())), **out}
    return out


def dumps_json(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def export_trace(trace: RunTrace, fmt: str, destination: str | Path) -> dict[str, Path]:
    """Write frames, merges and report files into ``destination``."""
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"unknown format {fmt!r}")
    dest = Path(destination)
    dest.mkdir(parents=True, exist_ok=True)
    paths = {
        "frames": dest / f"frames.{fmt}",
        "merges": dest / f"merges.{fmt}",
        "report": dest / "report.json",
    }
    paths["frames"].write_text(frames_text(trace, fmt), encoding="utf-8")
    paths["merges"].write_text(merges_text(trace, fmt), encoding="utf-8")
    paths["report"].write_text(dumps_json(report_dict(summarize(trace), trace)), encoding="utf-8")
    return paths


def _opt_int(s: str) -> int | None:
    return None if s == "" else int(s)


def import_frames(text: str, fmt: str = "csv") -> list[FrameRow]:
    if fmt == "jsonl":
        rows = []
        for line in text.splitlines():
            if line.strip():
                d = json.loads(line)
                rows.append(FrameRow(d["submit_ns"], d["origin_ns"], d["aoi_ns"], float(d["pose_error_m"])))
        return rows
    lines = text.splitlines()
    if not lines or lines[0] != FRAME_HEADER:
        raise ValueError("missing frame CSV header")
    rows = []
    for line in lines[1:]:
        s, o, a, e = line.split(",")
        rows.append(FrameRow(int(s), _opt_int(o), _opt_int(a), float(e)))
    return rows


def import_merges(text: str, fmt: str = "csv") -> list[MergeRow]:
    if fmt == "jsonl":
        return [MergeRow(**json.loads(line)) for line in text.splitlines() if line.strip()]
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or ",".join(header) != MERGE_HEADER:
        raise ValueError("missing merge CSV header")
    return [MergeRow(int(t), i, float(d), float(m), s) for t, i, d, m, s in reader]
