import math

import numpy as np
import pytest

from twinworld.errors import InvalidGateError
from twinworld.gates import (
    GateSpec,
    StochasticMatrix,
    apply_matrix,
    controlled_lift,
    extraction_norm,
    q_matrix,
    r2_amplitude_reduction,
    realify_unitary,
    rotation_matrix,
    s_cnot,
    s_hadamard,
    s_q,
    s_rotation,
    s_x,
    stochastic_from_real,
)
from twinworld.states import GrabitState, extraction_matrix

E1 = extraction_matrix(1)
E2 = extraction_matrix(2)


def assert_emulates(stochastic, real_gate, atol=1e-12):
    """extract . S == c * (real_gate . extract) with one shared c > 0."""
    k = real_gate.shape[0].bit_length() - 1
    e = extraction_matrix(k)
    lhs = e @ stochastic.entries
    rhs = real_gate @ e
    scale = np.abs(lhs).max() / np.abs(rhs).max()
    assert scale > 0
    assert np.allclose(lhs, scale * rhs, atol=atol)


def test_realify_identity():
    assert np.array_equal(realify_unitary(np.eye(2)), np.eye(4))


def test_realify_phase_gate_block_form():
    phi = 0.7
    c, s = math.cos(phi), math.sin(phi)
    out = realify_unitary(np.diag([1.0, np.exp(1j * phi)]))
    expected = np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, c, -s], [0, 0, s, c]]
    )
    assert np.allclose(out, expected, atol=1e-15)


def test_realify_random_unitary_is_orthogonal():
    rng = np.random.default_rng(2)
    for _ in range(10):
        m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        u, _ = np.linalg.qr(m)
        r = realify_unitary(u)
        assert np.max(np.abs(r.T @ r - np.eye(8))) < 1e-10


def test_realify_rejects_non_unitary():
    with pytest.raises(InvalidGateError):
        realify_unitary(np.ones((2, 2)))


def test_hadamard_matrix_and_worked_example():
    expected = 0.5 * np.array(
        [[1, 0, 1, 0], [0, 1, 0, 1], [1, 0, 0, 1], [0, 1, 1, 0]]
    )
    sh = s_hadamard()
    assert np.array_equal(sh.entries, expected)
    e0 = np.array([1.0, 0.0, 0.0, 0.0])
    twice = sh.entries @ (sh.entries @ e0)
    assert np.array_equal(twice, np.array([2, 0, 1, 1]) / 4)


Q_QUADRANT_ANGLES = {
    1: 0.35,            # both sin, cos positive
    2: math.pi / 2 + 0.35,
    3: -math.pi + 0.35,
    4: -0.35,
}


def expected_q_quadrant(quadrant: int, q: float) -> np.ndarray:
    forms = {
        1: [[1, 0, q, 0], [0, 1, 0, q], [q, 0, 0, 1], [0, q, 1, 0]],
        2: [[1, 0, 0, q], [0, 1, q, 0], [0, q, 0, 1], [q, 0, 1, 0]],
        3: [[0, 1, 0, q], [1, 0, q, 0], [0, q, 1, 0], [q, 0, 0, 1]],
        4: [[0, 1, q, 0], [1, 0, 0, q], [q, 0, 1, 0], [0, q, 0, 1]],
    }
    return np.array(forms[quadrant], dtype=float) / (1 + q)


@pytest.mark.parametrize("quadrant", [1, 2, 3, 4])
def test_q_gate_quadrant_matrices(quadrant):
    theta = Q_QUADRANT_ANGLES[quadrant]
    q = abs(1 / math.tan(theta))
    assert np.allclose(
        s_q(theta).entries, expected_q_quadrant(quadrant, q), atol=1e-14
    )


def test_q_quadrants_related_by_sigma_permutations():
    # same q in every quadrant: per column the same multiset of
    # (target blv, weight), only the sigma routing changes
    thetas = [0.35, math.pi - 0.35, -math.pi + 0.35, -0.35]
    mats = [s_q(t).entries for t in thetas]
    for col in range(4):
        keys = []
        for m in mats:
            rows = np.nonzero(m[:, col])[0]
            keys.append(sorted((r >> 1, round(m[r, col], 12)) for r in rows))
        assert all(k == keys[0] for k in keys)


def test_q_gate_at_right_angle_acts_as_z():
    z = np.array([[1.0, 0.0], [0.0, -1.0]])
    gate = s_q(math.pi / 2)
    assert_emulates(gate, z)
    assert np.array_equal(np.sort(gate.entries, axis=0)[-1], np.ones(4))


def test_q_gate_at_zero_is_blv_swap():
    assert np.array_equal(s_q(0.0).entries, s_x().entries)


def test_rotation_quarter_turn_is_exact_permutation():
    gate = s_rotation(math.pi / 2)
    perm = np.zeros((4, 4))
    perm[2, 0] = perm[3, 1] = perm[1, 2] = perm[0, 3] = 1.0
    assert np.array_equal(gate.entries, perm)
    assert_emulates(gate, rotation_matrix(math.pi / 2))


def test_rotation_eighth_turn_matrix():
    expected = 0.5 * np.array(
        [[1, 0, 0, 1], [0, 1, 1, 0], [1, 0, 1, 0], [0, 1, 0, 1]]
    )
    assert np.allclose(s_rotation(math.pi / 4).entries, expected, atol=1e-15)


def test_rotation_zero_angle_is_identity():
    assert np.array_equal(s_rotation(0.0).entries, np.eye(4))


def test_amplitude_reduction_values():
    assert np.array_equal(r2_amplitude_reduction(math.pi / 2), np.eye(2))
    r2 = r2_amplitude_reduction(math.pi / 4)
    r0 = (1 - math.sqrt(2) / 2) / 2
    assert np.allclose(r2, [[1 - r0, r0], [r0, 1 - r0]], atol=1e-15)
    assert abs(r2[0, 1] - 0.14644660940672627) < 1e-15


@pytest.mark.parametrize("phi", [0.3, math.pi / 4, 2.0, -1.2])
def test_extraction_norm_matches_amplitude_reduction(phi):
    gate = s_rotation(phi)
    n = extraction_norm(gate)
    c, s = math.cos(phi), math.sin(phi)
    assert abs(n - 1.0 / (abs(c) + abs(s))) < 1e-12
    r2 = r2_amplitude_reduction(phi)
    assert abs((r2[0, 0] - r2[1, 0]) - n) < 1e-12


def test_controlled_lift_idle_branch():
    lifted = controlled_lift(s_rotation(math.pi / 2))
    assert np.array_equal(lifted.entries[:8, :8], np.eye(8))
    lifted = controlled_lift(s_rotation(math.pi / 4))
    r0 = (1 - math.sqrt(2) / 2) / 2
    assert abs(lifted.entries[4, 0] - r0) < 1e-15


@pytest.mark.parametrize("theta", [0.3, 1.2, -2.0, math.pi / 4])
def test_controlled_lift_equalizes_extraction_norms(theta):
    lifted = controlled_lift(s_q(theta))
    norms = np.linalg.norm(E2 @ lifted.entries, axis=0)
    assert np.max(norms) - np.min(norms) < 1e-12
    # emulation of the realified controlled gate, shared constant
    u_full = np.eye(4)
    u_full[2:, 2:] = q_matrix(theta)
    assert_emulates(lifted, u_full)


def test_x_gate():
    gate = s_x()
    assert np.array_equal(gate.entries @ np.eye(4)[0], np.eye(4)[2])
    assert_emulates(gate, np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert set(np.unique(gate.entries)) == {0.0, 1.0}


def test_cnot_gate():
    gate = s_cnot()
    cnot = np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=float
    )
    assert_emulates(gate, cnot)
    assert set(np.unique(gate.entries)) == {0.0, 1.0}
    # per-sigma action: sigma strings pass through unchanged
    for col in range(16):
        row = np.nonzero(gate.entries[:, col])[0][0]
        assert row & 0b0101 == col & 0b0101


@pytest.mark.parametrize(
    "make",
    [
        s_x,
        s_cnot,
        s_hadamard,
        lambda: s_q(0.77),
        lambda: s_q(-2.3),
        lambda: s_rotation(1.9),
        lambda: controlled_lift(s_q(0.6)),
        lambda: controlled_lift(s_rotation(-0.9)),
    ],
)
def test_constructed_gates_are_column_stochastic(make):
    entries = make().entries
    assert np.max(np.abs(entries.sum(axis=0) - 1.0)) < 1e-12
    assert entries.min() >= 0.0 and entries.max() <= 1.0


def test_apply_hadamard_on_zero_state():
    state = GrabitState.zero_state(2)
    out = GrabitState(2, apply_matrix(state.probs, 2, s_hadamard(), (1,)))
    phi = out.extract().values
    assert np.allclose(phi, [0.5, 0.5, 0.0, 0.0])


def test_apply_identity_is_bit_exact():
    rng = np.random.default_rng(9)
    p = rng.random(16)
    p /= p.sum()
    identity = StochasticMatrix(np.eye(4))
    assert np.array_equal(apply_matrix(p, 2, identity, (0,)), p)


def test_apply_rejects_bad_axes():
    state = GrabitState.zero_state(2)
    with pytest.raises(InvalidGateError):
        apply_matrix(state.probs, 2, s_hadamard(), (2,))
    with pytest.raises(InvalidGateError):
        apply_matrix(state.probs, 2, s_cnot(), (0,))


def test_gate_spec_validation():
    with pytest.raises(InvalidGateError):
        GateSpec("bogus", targets=(0,))
    with pytest.raises(InvalidGateError):
        GateSpec("cnot", targets=(0,), controls=(0,))


def test_stochastic_from_real_rejects_unequal_column_norms():
    with pytest.raises(InvalidGateError):
        stochastic_from_real(np.array([[1.0, 0.5], [0.0, 0.1]]))


def test_stochastic_matrix_validation():
    with pytest.raises(InvalidGateError):
        StochasticMatrix(np.array([[0.5, 0.0], [0.6, 1.0]]))
    with pytest.raises(InvalidGateError):
        StochasticMatrix(np.array([[1.5, 0.0], [-0.5, 1.0]]))
