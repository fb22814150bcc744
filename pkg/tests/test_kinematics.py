import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from duospace.core import Pose, UnitQuaternion
from duospace.errors import ConfigError, DimensionMismatch, ParseError
from duospace.kinematics import (
    DHJoint,
    IkParams,
    KinematicChain,
    decode_transform_string,
    desk_chain,
    encode_transform_string,
    forward_kinematics,
    inverse_kinematics,
    jacobian,
    kinova_j2n6s300,
    planar_chain,
)

TWO_LINK = planar_chain((1.0, 1.0))


def planar_fk(lengths, q):
    """Closed-form planar forward kinematics used as the oracle."""
    x = y = phi = 0.0
    for a, qi in zip(lengths, q):
        phi += qi
        x += a * math.cos(phi)
        y += a * math.sin(phi)
    return x, y, phi


def fd_linear_jacobian(chain, q, h=1e-6):
    cols = []
    for i in range(len(q)):
        qp, qm = list(q), list(q)
        qp[i] += h
        qm[i] -= h
        p = np.array(forward_kinematics(chain, qp).position)
        m = np.array(forward_kinematics(chain, qm).position)
        cols.append((p - m) / (2 * h))
    return np.stack(cols, axis=1)


class TestForward:
    @pytest.mark.parametrize(
        "q, expected",
        [((0.0, 0.0), (2.0, 0.0, 0.0)), ((math.pi / 2, 0.0), (0.0, 2.0, 0.0)), ((math.pi / 2, -math.pi / 2), (1.0, 1.0, 0.0))],
    )
    def test_two_link_table(self, q, expected):
        got = forward_kinematics(TWO_LINK, q).position
        assert got == pytest.approx(expected, abs=1e-12)

    def test_extended_desk_chain(self):
        assert forward_kinematics(desk_chain(), (0, 0, 0)).position == pytest.approx((1.2, 0, 0), abs=1e-12)

    @given(st.lists(st.floats(-math.pi, math.pi), min_size=3, max_size=3))
    def test_matches_closed_form(self, q):
        x, y, phi = planar_fk((0.5, 0.4, 0.3), q)
        pose = forward_kinematics(desk_chain(), q)
        assert pose.position == pytest.approx((x, y, 0.0), abs=1e-12)
        expected = UnitQuaternion.from_axis_angle((0, 0, 1), phi)
        assert pose.orientation.angle_to(expected) == pytest.approx(0.0, abs=1e-7)

    def test_base_pose_applied(self):
        base = Pose((1.0, 2.0, 3.0), UnitQuaternion.from_axis_angle((0, 0, 1), math.pi / 2))
        chain = KinematicChain(TWO_LINK.joints, base)
        assert forward_kinematics(chain, (0, 0)).position == pytest.approx((1.0, 4.0, 3.0), abs=1e-12)

    def test_stamp_passthrough(self):
        assert forward_kinematics(TWO_LINK, (0, 0), stamp=42).stamp == 42

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            forward_kinematics(TWO_LINK, (0.0,))

    def test_chain_validation(self):
        with pytest.raises(ConfigError):
            KinematicChain(())
        with pytest.raises(ConfigError):
            KinematicChain((DHJoint(1, 0, 0, lo=1.0, hi=1.0),))
        with pytest.raises(ConfigError):
            KinematicChain((DHJoint(float("nan"), 0, 0),))


class TestJacobian:
    def test_two_link_at_zero(self):
        j = jacobian(TWO_LINK, (0.0, 0.0))
        assert j.shape == (6, 2)
        assert j[1, 0] == pytest.approx(2.0, abs=1e-12)
        assert j[1, 1] == pytest.approx(1.0, abs=1e-12)
        assert j[5].tolist() == [1.0, 1.0]

    def test_one_link(self):
        j = jacobian(planar_chain((1.0,)), (0.0,))
        assert j[:3, 0] == pytest.approx((0.0, 1.0, 0.0), abs=1e-12)

    @pytest.mark.parametrize("chain", [desk_chain(), kinova_j2n6s300()], ids=["planar3", "kinova"])
    def test_finite_differences(self, chain):
        rng = np.random.default_rng(5)
        for _ in range(100):
            q = [rng.uniform(j.lo, j.hi) for j in chain.joints]
            analytic = jacobian(chain, q)[:3]
            assert np.max(np.abs(analytic - fd_linear_jacobian(chain, q))) <= 1e-5

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            jacobian(TWO_LINK, (0.0, 0.0, 0.0))


class TestInverse:
    def test_target_equals_seed(self):
        seed = (0.3, -0.4, 0.5)
        sol = inverse_kinematics(desk_chain(), forward_kinematics(desk_chain(), seed), seed)
        assert sol.converged and sol.iterations <= 1
        assert sol.q == pytest.approx(seed, abs=1e-9)

    def test_two_link_reach(self):
        params = IkParams(rotation_weight=0.0)
        sol = inverse_kinematics(TWO_LINK, Pose((1.0, 1.0, 0.0)), (0.1, 0.1), params)
        assert sol.converged
        x, y, _ = planar_fk((1.0, 1.0), sol.q)
        assert math.hypot(x - 1.0, y - 1.0) < params.tol_pos

    def test_unreachable(self):
        params = IkParams(rotation_weight=0.0)
        sol = inverse_kinematics(TWO_LINK, Pose((3.0, 0.0, 0.0)), (0.1, 0.1), params)
        assert not sol.converged
        assert sol.residual >= 1.0 - params.tol_pos
        assert sol.iterations == params.max_iters

    def test_respects_joint_limits(self):
        chain = planar_chain((1.0, 1.0), limit=0.5)
        sol = inverse_kinematics(chain, Pose((0.0, 2.0, 0.0)), (0.0, 0.0), IkParams(rotation_weight=0.0))
        assert all(-0.5 <= v <= 0.5 for v in sol.q)

    def test_deterministic(self):
        target = Pose((0.6, 0.5, 0.0))
        a = inverse_kinematics(desk_chain(), target, (0.1, 0.2, 0.3))
        b = inverse_kinematics(desk_chain(), target, (0.1, 0.2, 0.3))
        assert a == b

    def test_full_pose_kinova(self):
        chain = kinova_j2n6s300()
        rng = np.random.default_rng(8)
        q = [rng.uniform(max(j.lo, -2.0), min(j.hi, 4.0)) for j in chain.joints]
        target = forward_kinematics(chain, q)
        seed = chain.clamp([v + rng.normal(0, 0.1) for v in q])
        sol = inverse_kinematics(chain, target, seed)
        assert sol.converged
        got = forward_kinematics(chain, sol.q)
        assert math.dist(got.position, target.position) < 1e-4
        assert got.orientation.angle_to(target.orientation) < 1e-3

    def test_params_validated(self):
        with pytest.raises(ConfigError):
            IkParams(damping=0.0)
        with pytest.raises(ConfigError):
            IkParams(max_iters=0)
        with pytest.raises(ConfigError):
            IkParams(tol_pos=-1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            inverse_kinematics(TWO_LINK, Pose(), (0.0,))


class TestTransformString:
    def test_zeros(self):
        assert encode_transform_string((0, 0), 1000, 500) == "TS|1000|500|0.000000,0.000000"

    def test_formatting(self):
        s = encode_transform_string((1.5707963, -0.5), 2_000_000, 1_500_000)
        assert s == "TS|2000000|1500000|1.570796,-0.500000"

    def test_negative_zero_canonical(self):
        assert encode_transform_string((-1e-9,), 0, 0) == "TS|0|0|0.000000"

    def test_decode(self):
        assert decode_transform_string("TS|1000|500|0.000000,0.000000") == ((0.0, 0.0), 1000, 500)

    @pytest.mark.parametrize(
        "text, offset",
        [
            ("TS|1|2|", 7),
            ("XS|1|2|0.000000", 0),
            ("TS|01|2|0.000000", 4),
            ("TS|1|2|+0.100000", 7),
            ("TS|1|2|0.10000", 7),
            ("TS|1|2|0.100000,", 16),
            ("TS|1|2| 0.100000", 7),
            ("TS|1|2|0.100000 ", 15),
            ("TS|-1|2|0.100000", 3),
        ],
    )
    def test_malformed(self, text, offset):
        with pytest.raises(ParseError) as info:
            decode_transform_string(text)
        assert info.value.offset == offset

    def test_non_ascii(self):
        with pytest.raises(ParseError):
            decode_transform_string("TS|1|2|0.1000µ0".encode())

    @settings(max_examples=300)
    @given(
        st.lists(st.integers(-10**7, 10**7), min_size=1, max_size=8),
        st.integers(0, 2**63),
        st.integers(0, 2**63),
    )
    def test_codec_bijection_on_quantized_domain(self, micro, stamp, origin):
        q = tuple(m / 1e6 for m in micro)
        text = encode_transform_string(q, stamp, origin)
        joints, s, o = decode_transform_string(text)
        assert (s, o) == (stamp, origin)
        assert joints == q
        assert encode_transform_string(joints, s, o) == text


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1))
def test_matrix_to_quat_matches_scipy(seed):
    from scipy.spatial.transform import Rotation

    from duospace.kinematics import _matrix_to_quat

    r = Rotation.random(random_state=seed)
    x, y, z, w = r.as_quat()
    got = _matrix_to_quat(r.as_matrix()).as_tuple()
    assert abs(np.dot(got, (w, x, y, z))) == pytest.approx(1.0, abs=1e-12)
