import math

import numpy as np
import pytest

from twinworld.locality import (
    minimize_q,
    project_columns_to_simplex,
    reduce_problem,
    swap_gate,
    verify_swap_lemma,
)
from twinworld.twin import chsh_refresh_problem


def random_stochastic(rng, rows, cols):
    m = rng.random((rows, cols))
    return m / m.sum(axis=0)


def test_reduce_full_support_keeps_all_variables():
    rng = np.random.default_rng(0)
    p_in = rng.random(256)
    p_in /= p_in.sum()
    p_out = rng.random(256)
    p_out /= p_out.sum()
    problem = reduce_problem(p_in, p_out, 16, 16)
    assert problem.n_free_a == 240
    assert problem.n_free_b == 240
    assert problem.n_free == 480
    assert problem.rows_a == tuple(range(16))
    assert problem.cols_b == tuple(range(16))


def test_reduce_records_zero_sets_exactly():
    p_in = np.zeros(4)
    p_in[0] = 1.0
    p_out = np.array([0.0, 0.5, 0.5, 0.0])
    problem = reduce_problem(p_in, p_out, 2, 2)
    assert problem.rows_a == (0, 1)
    assert problem.rows_b == (0, 1)
    assert problem.cols_a == (0,)
    assert problem.cols_b == (0,)


def test_reduce_degenerate_single_support_row():
    p_in = np.array([0.25, 0.25, 0.25, 0.25])
    p_out = np.array([0.0, 1.0, 0.0, 0.0])
    problem = reduce_problem(p_in, p_out, 2, 2)
    assert problem.rows_a == (0,)
    assert problem.rows_b == (1,)
    assert problem.n_free == 0
    result = minimize_q(problem, restarts=5, seed=0)
    assert result.q_min >= 0.0


def test_chsh_first_setting_reduction_counts():
    p_in, p_out = chsh_refresh_problem(math.pi / 2, math.pi / 4)
    problem = reduce_problem(p_in, p_out, 16, 16)
    assert len(problem.rows_a) == 2
    assert len(problem.rows_b) == 6
    assert problem.n_free_a == 16
    assert problem.n_free_b == 80
    assert problem.n_free == 96


def test_planted_product_map_recovers_near_zero():
    rng = np.random.default_rng(3)
    s_a = random_stochastic(rng, 16, 16)
    s_b = random_stochastic(rng, 16, 16)
    p_in = rng.random(256)
    p_in /= p_in.sum()
    p_out = np.kron(s_a, s_b) @ p_in
    problem = reduce_problem(p_in, p_out, 16, 16)
    result = minimize_q(problem, restarts=2, seed=11, max_rounds=700,
                        inner_steps=120, tol=1e-18)
    assert result.q_min < 1e-10


def test_minimizer_output_satisfies_constraints():
    p_in, p_out = chsh_refresh_problem(math.pi / 2, math.pi / 4)
    problem = reduce_problem(p_in, p_out, 16, 16)
    result = minimize_q(problem, restarts=5, seed=2)
    for s in (result.s_a, result.s_b):
        assert s.min() >= -1e-10
        assert np.max(np.abs(s.sum(axis=0) - 1.0)) < 1e-10


def test_chsh_first_setting_q_floor_and_ceiling():
    p_in, p_out = chsh_refresh_problem(math.pi / 2, math.pi / 4)
    problem = reduce_problem(p_in, p_out, 16, 16)
    result = minimize_q(problem, restarts=60, seed=7)
    assert 1e-3 < result.q_min < 0.022


def test_q_min_monotone_in_restarts():
    p_in, p_out = chsh_refresh_problem(math.pi / 2, math.pi / 4)
    problem = reduce_problem(p_in, p_out, 16, 16)
    q_few = minimize_q(problem, restarts=3, seed=5).q_min
    q_more = minimize_q(problem, restarts=9, seed=5).q_min
    assert q_more <= q_few + 1e-18


def test_feasible_point_keeps_zero_residual_after_reduction():
    rng = np.random.default_rng(8)
    s_a = random_stochastic(rng, 16, 16)
    s_b = random_stochastic(rng, 16, 16)
    p_in = rng.random(256)
    p_in /= p_in.sum()
    p_out = np.kron(s_a, s_b) @ p_in
    problem = reduce_problem(p_in, p_out, 16, 16)
    # full support: the reduced parametrization contains the planted point
    a = s_a[list(problem.rows_a), :]
    b = s_b[list(problem.rows_b), :]
    m = p_in.reshape(16, 16)
    residual = p_out.reshape(16, 16) - a @ m @ b.T
    assert np.max(np.abs(residual)) < 1e-15


def test_swap_gate_matrix():
    gate = swap_gate(0.25)
    assert np.allclose(gate.sum(axis=0), 1.0)
    assert gate[1, 2] == 0.25 and gate[2, 1] == 0.25
    with pytest.raises(ValueError):
        swap_gate(1.5)


def test_swap_lemma_identity_is_factorizable():
    report = verify_swap_lemma(0.0, restarts=20, seed=5)
    assert report.factorizable
    assert report.q_min < 1e-10


def test_swap_lemma_half_mixing_contradiction():
    report = verify_swap_lemma(0.5, restarts=100, seed=5)
    assert not report.factorizable
    assert report.q_min > 1e-4
    assert len(report.certificate) == 3
    assert "contradiction" in report.certificate[-1]


def test_swap_lemma_full_swap_not_factorizable():
    report = verify_swap_lemma(1.0, restarts=10, seed=5)
    assert not report.factorizable
    assert report.q_min > 1e-4


def test_single_pair_swap_on_product_input_is_infeasible():
    # full-support product input with distinct marginals: the swapped
    # output is correlated, which no product map can reach
    p_in = np.kron([0.7, 0.3], [0.2, 0.8])
    p_out = swap_gate(0.5) @ p_in
    problem = reduce_problem(p_in, p_out, 2, 2)
    result = minimize_q(problem, restarts=100, seed=5)
    assert result.q_min > 1e-4


def test_simplex_projection():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((8, 5)) * 3
    p = project_columns_to_simplex(x)
    assert np.allclose(p.sum(axis=0), 1.0)
    assert p.min() >= 0.0
    already = np.array([[0.2], [0.8]])
    assert np.allclose(project_columns_to_simplex(already), already)
