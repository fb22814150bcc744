"""Regenerate the bundled synthetic ground-truth trajectories.

Files use the 17-column EuRoC ground-truth layout: timestamp in ns, position,
orientation quaternion (w, x, y, z), velocity, gyro bias, accel bias. Motions
are smooth closed-form curves so the output is identical on every machine.

    python3 scripts/make_trajectories.py [output_dir]
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

HEADER = (
    "#timestamp [ns],p_RS_R_x [m],p_RS_R_y [m],p_RS_R_z [m],q_RS_w [],q_RS_x [],q_RS_y [],q_RS_z [],"
    "v_RS_R_x [m s^-1],v_RS_R_y [m s^-1],v_RS_R_z [m s^-1],b_w_RS_S_x [rad s^-1],b_w_RS_S_y [rad s^-1],"
    "b_w_RS_S_z [rad s^-1],b_a_RS_S_x [m s^-2],b_a_RS_S_y [m s^-2],b_a_RS_S_z [m s^-2]"
)
RATE_HZ = 200
DURATION_S = 32.0
T0_NS = 1_403_636_580_838_555_648


def _write(path: Path, t: np.ndarray, pos: np.ndarray, euler: np.ndarray) -> None:
    quat = Rotation.from_euler("zyx", euler).as_quat()  # x, y, z, w
    quat = quat[:, [3, 0, 1, 2]]
    quat[quat[:, 0] < 0] *= -1
    vel = np.gradient(pos, t, axis=0)
    stamps = T0_NS + np.round(t * 1e9).astype(np.int64)
    lines = [HEADER]
    for i in range(len(t)):
        cols = [str(stamps[i])]
        cols += [f"{v:.9f}" for v in pos[i]]
        cols += [f"{v:.9f}" for v in quat[i]]
        cols += [f"{v:.9f}" for v in vel[i]]
        cols += ["0.000000000"] * 6
        lines.append(",".join(cols))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def _time(duration: float = DURATION_S) -> np.ndarray:
    return np.arange(int(duration * RATE_HZ) + 1) / RATE_HZ


def head_sway(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Standing user, slow lateral sway and gentle nodding."""
    pos = np.stack([0.05 * np.sin(2 * np.pi * 0.25 * t), 0.03 * np.sin(2 * np.pi * 0.4 * t),
                    1.6 + 0.01 * np.sin(2 * np.pi * 0.5 * t)], axis=1)
    euler = np.stack([0.15 * np.sin(2 * np.pi * 0.2 * t), 0.08 * np.sin(2 * np.pi * 0.3 * t),
                      np.zeros_like(t)], axis=1)
    return pos, euler


def head_walk(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pacing back and forth with step bounce."""
    pos = np.stack([0.6 * np.sin(2 * np.pi * 0.1 * t), 0.2 * np.sin(2 * np.pi * 0.05 * t),
                    1.65 + 0.02 * np.sin(2 * np.pi * 1.8 * t)], axis=1)
    euler = np.stack([0.4 * np.sin(2 * np.pi * 0.1 * t + 0.5), 0.05 * np.sin(2 * np.pi * 0.9 * t),
                      0.03 * np.sin(2 * np.pi * 0.9 * t)], axis=1)
    return pos, euler


def head_scan(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Seated user looking around quickly."""
    pos = np.stack([0.02 * np.sin(2 * np.pi * 0.3 * t), 0.02 * np.cos(2 * np.pi * 0.3 * t),
                    1.2 + 0.005 * np.sin(2 * np.pi * 0.7 * t)], axis=1)
    euler = np.stack([0.7 * np.sin(2 * np.pi * 0.35 * t), 0.25 * np.sin(2 * np.pi * 0.6 * t + 1.0),
                      0.1 * np.sin(2 * np.pi * 0.45 * t)], axis=1)
    return pos, euler


def object_circle(t: np.ndarray, radius: float = 0.5, freq: float = 0.2) -> tuple[np.ndarray, np.ndarray]:
    w = 2 * np.pi * freq
    pos = np.stack([0.8 + radius * np.cos(w * t), radius * np.sin(w * t), np.full_like(t, 0.75)], axis=1)
    euler = np.stack([w * t + np.pi / 2, np.zeros_like(t), np.zeros_like(t)], axis=1)
    return pos, euler


def object_static(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pos = np.tile([0.6, -0.3, 0.75], (len(t), 1))
    return pos, np.zeros((len(t), 3))


def main(out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    t = _time()
    for name, fn in [("head_sway", head_sway), ("head_walk", head_walk), ("head_scan", head_scan),
                     ("object_circle", object_circle), ("object_static", object_static)]:
        _write(out / f"{name}.csv", t, *fn(t))
    short = _time(199 / RATE_HZ)
    _write(out / "head_excerpt.csv", short, *head_sway(short))


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "scenarios" / "trajectories")
