from __future__ import annotations

from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"
ORACLES = Path(__file__).resolve().parent / "oracles"
DATA = Path(__file__).resolve().parent / "data"


def write_trajectory(path: Path, duration_s: float, fn, rate_hz: int = 100) -> Path:
    """Write an 8-column trajectory; ``fn(t) -> (x, y, z)`` with identity orientation."""
    n = int(round(duration_s * rate_hz))
    rows = []
    for i in range(n + 1):
        t = i / rate_hz
        x, y, z = fn(t)
        rows.append(f"{i * (1_000_000_000 // rate_hz)},{x!r},{y!r},{z!r},1,0,0,0")
    path.write_text("\n".join(rows) + "\n")
    return path


@pytest.fixture
def static_world(tmp_path: Path) -> Path:
    """Directory with a motionless head and a motionless object."""
    write_trajectory(tmp_path / "head.csv", 4.0, lambda t: (0.0, 0.0, 1.6))
    write_trajectory(tmp_path / "box.csv", 4.0, lambda t: (0.5, 0.2, 0.7))
    return tmp_path


def scenario_text(head: str = "head.csv", **top) -> str:
    lines = [f"{k} = {v}" for k, v in top.items()]
    lines += ["", "[trajectories]", f'head = "{head}"']
    return "\n".join(lines) + "\n"


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
