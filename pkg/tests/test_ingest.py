import io
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from duospace.core import NS_PER_MS, NS_PER_S
from duospace.errors import ConfigError, NonMonotonicTimestamps, OutOfRange, ParseError
from duospace.ingest import (
    REFERENCE_BASE_DELAY,
    REFERENCE_JITTER,
    Trajectory,
    dump_scenario,
    load_scenario,
    load_scenario_file,
    load_trajectory,
    load_trajectory_file,
    sample_pose,
)
from duospace.core import UnitQuaternion
from duospace.spaces import MergeStrategy

from .conftest import DATA, SCENARIOS, scenario_text, write_trajectory


class TestTrajectory:
    def test_two_lines(self):
        t = load_trajectory(b"0,0,0,0,1,0,0,0\n1000000,1,0,0,1,0,0,0\n")
        assert len(t) == 2 and t.stamps == (0, 1_000_000)

    def test_euroc_17_columns(self):
        row = "1403636580838555648,4.688319,-1.786938,0.783338,0.534108,-0.153029,-0.827383,-0.082152," \
              "-0.027876,0.033207,0.800006,-0.003172,0.021267,0.078502,-0.025266,0.136696,0.075593"
        t = load_trajectory("#timestamp,...\n" + row + "\n")
        assert t.positions[0] == (4.688319, -1.786938, 0.783338)
        assert t.stamps == (0,)

    def test_decreasing(self):
        with pytest.raises(NonMonotonicTimestamps) as info:
            load_trajectory("5,0,0,0,1,0,0,0\n3,0,0,0,1,0,0,0\n")
        assert info.value.line == 2

    @pytest.mark.parametrize("text, line", [("0,0,0\n", 1), ("# h\n0,0,0,0,1,0,0,0\nx,0,0,0,1,0,0,0\n", 3),
                                            ("0,0,0,0,0,0,0,0\n", 1), ("", 0)])
    def test_malformed(self, text, line):
        with pytest.raises(ParseError) as info:
            load_trajectory(text)
        assert info.value.line == line

    def test_normalizes_and_rebases(self):
        t = load_trajectory(io.BytesIO(b"100,0,0,0,2,0,0,0\n200,0,0,0,0,0,0,-3\n"))
        assert t.stamps == (0, 100)
        assert t.orientations[0] == UnitQuaternion()
        assert t.orientations[1].as_tuple() == (0.0, 0.0, 0.0, 1.0)

    def test_bundled_excerpt(self):
        text = (DATA / "euroc_excerpt.csv").read_text()
        rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        t = load_trajectory_file(DATA / "euroc_excerpt.csv")
        assert len(t) == len(rows) == 200
        assert t.rate_hint == pytest.approx(200.0)

    def test_sample_exact_and_midpoint(self):
        t = load_trajectory("0,0,0,0,1,0,0,0\n1000,1,0,0,1,0,0,0\n")
        assert sample_pose(t, 1000) == t.pose_at(1)
        assert sample_pose(t, 500).position == (0.5, 0.0, 0.0)

    def test_sample_out_of_range(self):
        t = load_trajectory("0,0,0,0,1,0,0,0\n1000,1,0,0,1,0,0,0\n")
        with pytest.raises(OutOfRange):
            sample_pose(t, 1001)
        with pytest.raises(OutOfRange):
            sample_pose(t, -1)

    @settings(max_examples=50)
    @given(st.lists(st.tuples(st.integers(1, 10**7), st.floats(-5, 5), st.floats(-5, 5)), min_size=2, max_size=30),
           st.floats(0, 1))
    def test_continuity(self, rows, u):
        stamp, lines = 0, []
        for gap, x, y in rows:
            stamp += gap
            lines.append(f"{stamp},{x!r},{y!r},0,1,0,0,0")
        t = load_trajectory("\n".join(lines))
        at = int(u * (t.duration - 1))
        a, b = sample_pose(t, at), sample_pose(t, at + 1)
        i = max(1, min(len(t) - 1, __import__("bisect").bisect_right(t.stamps, at)))
        span = t.stamps[i] - t.stamps[i - 1]
        jump = math.dist(t.positions[i], t.positions[i - 1])
        assert math.dist(a.position, b.position) <= jump / span + 1e-9


class TestScenario:
    def test_minimal_defaults(self, static_world):
        s = load_scenario(scenario_text(horizon='"2s"'), static_world)
        assert s.frame_rate == 90.0 and s.frame_period == 11_111_111
        assert s.merge == MergeStrategy.snap()
        assert s.calibration_period == 500 * NS_PER_MS
        assert s.uplink.base_delay == REFERENCE_BASE_DELAY and s.downlink.jitter == REFERENCE_JITTER
        assert s.mode == "baseline" and s.seed == 0
        assert "head" in s.trajectories

    @pytest.mark.parametrize(
        "extra, key",
        [
            ("frame_rate = 0", "frame_rate"),
            ('callibration_period = "1s"', "callibration_period"),
            ('mode = "hybrid"', "mode"),
            ('merge = "teleport"', "merge"),
            ('horizon = "-2s"', "horizon"),
            ("seed = -1", "seed"),
        ],
    )
    def test_rejects(self, static_world, extra, key):
        text = scenario_text(**{}) + "\n"
        text = extra + "\n" + ('horizon = "1s"\n' if not extra.startswith("horizon") else "") + text
        with pytest.raises(ConfigError) as info:
            load_scenario(text, static_world)
        assert key in str(info.value)

    @pytest.mark.parametrize(
        "section, key",
        [
            ('[uplink]\nbase_dely = "1ms"', "uplink.base_dely"),
            ('[downlink]\njitter = "gauss:1ms"', "downlink.jitter"),
            ('[exec]\nwarp_drive = "1ms"', "exec.warp_drive"),
            ('[payload]\nvideo = 0', "payload.video"),
            ('[chain]\npreset = "octopus"', "chain"),
            ('[ik]\ndamping = 0', "ik"),
        ],
    )
    def test_rejects_sections(self, static_world, section, key):
        text = scenario_text(horizon='"1s"') + "\n" + section + "\n"
        with pytest.raises(ConfigError) as info:
            load_scenario(text, static_world)
        assert key in str(info.value)

    def test_missing_trajectory_file(self, tmp_path):
        with pytest.raises(ConfigError, match="trajectories.head"):
            load_scenario(scenario_text(horizon='"1s"'), tmp_path)

    def test_trajectory_too_short(self, tmp_path):
        write_trajectory(tmp_path / "head.csv", 1.0, lambda t: (0, 0, 0))
        with pytest.raises(ConfigError, match="covers"):
            load_scenario(scenario_text(horizon='"2s"'), tmp_path)

    def test_not_toml(self, tmp_path):
        with pytest.raises(ConfigError):
            load_scenario("horizon = = 1", tmp_path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_scenario_file(tmp_path / "nope.toml")

    @pytest.mark.parametrize("name", sorted(p.name for p in SCENARIOS.glob("*.toml")))
    def test_canonical_idempotent(self, name):
        s = load_scenario_file(SCENARIOS / name, load_trajectories=False)
        once = dump_scenario(s)
        again = load_scenario(once, s.base_dir, load_trajectories=False)
        assert again == s
        assert dump_scenario(again) == once
        assert again.fingerprint() == s.fingerprint()

    def test_fingerprint_sensitive(self, static_world):
        a = load_scenario(scenario_text(horizon='"2s"'), static_world)
        b = load_scenario(scenario_text(horizon='"2s"', seed=1), static_world)
        assert a.fingerprint() != b.fingerprint()
        assert a.fingerprint("baseline") != a.fingerprint("duo")

    def test_exec_and_chain(self, static_world):
        text = scenario_text(horizon='"1s"') + (
            '\n[exec]\nik_solver = "uniform:5ms..9ms"\nvio = "3ms"\n'
            '\n[chain]\npreset = "kinova_j2n6s300"\n'
        )
        s = load_scenario(text, static_world)
        assert s.chain.dof == 6
        assert dict(s.exec_overrides)["vio"].ns == 3 * NS_PER_MS
        assert "uniform:5ms..9ms" in dump_scenario(s)

    def test_durations_accept_integers(self, static_world):
        s = load_scenario(scenario_text(horizon=NS_PER_S, calibration_period=11_111_111), static_world)
        assert s.horizon == NS_PER_S and s.calibration_period == 11_111_111


def test_trajectory_type_is_immutable():
    t = Trajectory((0,), ((0.0, 0.0, 0.0),), (UnitQuaternion(),))
    with pytest.raises(AttributeError):
        t.stamps = (1,)
