import numpy as np
import pytest
from scipy import stats

from twinworld.errors import DegenerateStateError
from twinworld.refresh import (
    Ensemble,
    GrabitSpace,
    PpvSpace,
    estimate_phi,
    is_interference_free,
    refresh_distribution,
    refresh_ensemble,
)
from twinworld.states import GrabitState, PpvDistribution


def test_refresh_worked_example():
    state = GrabitState(1, np.array([2, 0, 1, 1]) / 4)
    out = refresh_distribution(state)
    assert np.array_equal(out.probs, [1.0, 0.0, 0.0, 0.0])


def test_interference_free_state_is_fixed_point():
    state = GrabitState(1, [0.7, 0.0, 0.0, 0.3])
    out = refresh_distribution(state)
    assert out is state  # unchanged, bit-exact


def test_refresh_is_idempotent_bit_exact():
    rng = np.random.default_rng(4)
    for n in (1, 2, 3):
        for _ in range(10):
            p = rng.random(4**n)
            p /= p.sum()
            once = refresh_distribution(GrabitState(n, p))
            twice = refresh_distribution(once)
            assert np.array_equal(once.probs, twice.probs)


def test_refresh_preserves_signs():
    rng = np.random.default_rng(8)
    for _ in range(10):
        p = rng.random(16)
        p /= p.sum()
        state = GrabitState(2, p)
        phi = state.extract().values
        phi_out = refresh_distribution(state).extract().values
        mask = phi != 0.0
        assert np.array_equal(np.sign(phi_out[mask]), np.sign(phi[mask]))


def test_refresh_marginal_matches_absolute_amplitudes():
    rng = np.random.default_rng(15)
    p = rng.random(16)
    p /= p.sum()
    state = GrabitState(2, p)
    phi = state.extract().values
    marginal = refresh_distribution(state).blv_marginal()
    assert np.allclose(marginal, np.abs(phi) / np.abs(phi).sum(), atol=1e-14)


def test_refresh_zero_amplitudes_raise():
    state = GrabitState(1, [0.25, 0.25, 0.25, 0.25])
    with pytest.raises(DegenerateStateError):
        refresh_distribution(state)


def test_refresh_ppv_zero_amplitude_site_gets_no_mass():
    # (rho=0, x=0) carries equal mass on both signs and cancels exactly
    probs = np.array([0.2, 0.0, 0.2, 0.0, 0.6, 0.0, 0.0, 0.0])
    dist = PpvDistribution(2, probs)
    out = refresh_distribution(dist).as_rho_sigma_x()
    assert out[0, 0, 0] == 0.0 and out[0, 1, 0] == 0.0
    assert out[1, 0, 0] == 1.0  # remaining amplitude renormalized to unit mass


def test_refresh_ppv_places_negative_amplitudes_on_sign_one():
    # phi_{0,x=0} = 0.1 - 0.5 < 0, phi_{0,x=1} = 0.4 > 0
    probs = np.array([0.1, 0.4, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0])
    out = refresh_distribution(PpvDistribution(2, probs)).as_rho_sigma_x()
    assert out[0, 1, 0] == 0.5 and out[0, 0, 0] == 0.0
    assert out[0, 0, 1] == 0.5 and out[0, 1, 1] == 0.0


def test_estimate_from_counted_ensemble():
    ensemble = Ensemble([0, 0, 2, 3], GrabitSpace(1))
    hist = ensemble.histogram()
    assert np.array_equal(hist.probs, [0.5, 0.0, 0.25, 0.25])
    assert np.array_equal(estimate_phi(ensemble).values, [0.5, 0.0])


def test_estimate_single_sample():
    ensemble = Ensemble([1], GrabitSpace(1))
    assert np.array_equal(estimate_phi(ensemble).values, [-1.0, 0.0])


def test_estimate_converges_statistically():
    rng = np.random.default_rng(123)
    n = 100_000
    p = np.array([0.4, 0.1, 0.2, 0.3])
    configs = rng.choice(4, size=n, p=p)
    phi_hat = estimate_phi(Ensemble(configs, GrabitSpace(1))).values
    expected = np.array([p[0] - p[1], p[2] - p[3]])
    bands = 3 * np.sqrt(np.array([p[0] + p[1], p[2] + p[3]]) / n)
    assert np.all(np.abs(phi_hat - expected) <= bands)


def test_refresh_ensemble_collapses_worked_example():
    k = 1000
    configs = np.array([0] * (2 * k) + [2] * k + [3] * k)
    ensemble = Ensemble(configs, GrabitSpace(1))
    out = refresh_ensemble(ensemble, np.random.default_rng(0))
    assert np.all(out.configs == 0)
    assert out.n_samples == ensemble.n_samples


def test_refresh_ensemble_preserves_interference_free_distribution():
    rng = np.random.default_rng(77)
    p = np.array([0.35, 0.0, 0.0, 0.65])
    old = rng.choice(4, size=20_000, p=p)
    out = refresh_ensemble(Ensemble(old, GrabitSpace(1)), rng)
    assert stats.ks_2samp(old, out.configs).pvalue > 0.01


def test_refresh_ensemble_single_sample():
    ensemble = Ensemble([2], GrabitSpace(1))
    out = refresh_ensemble(ensemble, np.random.default_rng(1))
    assert out.configs.tolist() == [2]


def test_refresh_ensemble_is_deterministic():
    rng = np.random.default_rng(5)
    configs = rng.choice(16, size=500)
    a = refresh_ensemble(Ensemble(configs, GrabitSpace(2)), np.random.default_rng(9))
    b = refresh_ensemble(Ensemble(configs, GrabitSpace(2)), np.random.default_rng(9))
    assert np.array_equal(a.configs, b.configs)


def test_interference_free_predicate():
    assert is_interference_free(GrabitState(1, [0.7, 0.0, 0.0, 0.3]))
    assert not is_interference_free(GrabitState(1, [0.7, 0.1, 0.0, 0.2]))
    assert is_interference_free(PpvDistribution(1, [0.5, 0.0, 0.0, 0.5]))
    assert not is_interference_free(PpvDistribution(1, [0.5, 0.5, 0.0, 0.0]))


def test_ensemble_validation():
    with pytest.raises(ValueError):
        Ensemble([], GrabitSpace(1))
    with pytest.raises(ValueError):
        Ensemble([4], GrabitSpace(1))
    with pytest.raises(ValueError):
        Ensemble([-1], PpvSpace(2))
