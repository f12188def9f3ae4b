"""The non-linear refreshment operator, exact and finite-ensemble.

A refreshment makes a distribution interference-free: for every blv string
(or every (rho, x) in dynamics mode) only one sigma assignment keeps mass,
chosen by the sign of the extracted amplitude, and that mass equals the
absolute amplitude.  The raw map would leave total mass ||phi||_1 <= 1, so
the result is renormalized to unit mass; extraction commutes with this up
to the positive renormalization constant, and afterwards the per-world
physical probabilities are exactly |phi| / ||phi||_1.

Circuit-mode sign convention: a negative amplitude parks its mass at the
sigma string with a single 1 on the *last* grabit.  Any odd-parity string
would do; this one is fixed for determinism and reproduces the reduced
refreshment-map structure of the Bell-test study.

Ensembles carry a flat configuration index per sample plus a seed lineage.
Finite-ensemble refreshment estimates the amplitudes from the histogram and
redraws all samples i.i.d. from the refreshed estimate, which attains the
exact behaviour in the infinite-sample limit.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DegenerateStateError
from .states import (
    GrabitState,
    PpvDistribution,
    RealifiedState,
    spread_bits,
)

State = Union[GrabitState, PpvDistribution]


@dataclass(frozen=True)
class GrabitSpace:
    n_grabits: int

    @property
    def dim(self) -> int:
        return 4**self.n_grabits

    def state(self, probs) -> GrabitState:
        return GrabitState(self.n_grabits, probs)


@dataclass(frozen=True)
class PpvSpace:
    n_sites: int

    @property
    def dim(self) -> int:
        return 4 * self.n_sites

    def state(self, probs) -> PpvDistribution:
        return PpvDistribution(self.n_sites, probs)


@dataclass(frozen=True)
class Ensemble:
    """Multiset of sampled configurations with its generating seed lineage."""

    configs: np.ndarray
    space: GrabitSpace | PpvSpace
    lineage: tuple = ()

    def __post_init__(self):
        configs = np.asarray(self.configs, dtype=np.int64)
        if configs.ndim != 1 or configs.size < 1:
            raise ValueError("ensemble needs at least one sample")
        if configs.min() < 0 or configs.max() >= self.space.dim:
            raise ValueError("configuration index out of range")
        configs = configs.copy()
        configs.setflags(write=False)
        object.__setattr__(self, "configs", configs)

    @property
    def n_samples(self) -> int:
        return self.configs.size

    def histogram(self) -> State:
        """Relative frequencies as a distribution over configurations."""
        counts = np.bincount(self.configs, minlength=self.space.dim)
        return self.space.state(counts / self.n_samples)


def is_interference_free(state: State) -> bool:
    """True when at most one sigma assignment carries mass per amplitude slot."""
    if isinstance(state, GrabitState):
        view = state.blv_sigma_matrix()
        return bool(np.all((view != 0.0).sum(axis=1) <= 1))
    p = state.as_rho_sigma_x()
    return not bool(np.any((p[:, 0, :] != 0.0) & (p[:, 1, :] != 0.0)))


def interference_free_from_amplitudes(
    phi: RealifiedState | np.ndarray, space: GrabitSpace | PpvSpace
) -> State:
    """Unit-mass interference-free distribution whose extraction is
    proportional to ``phi`` (componentwise |phi| / ||phi||_1 with matching
    signs)."""
    values = phi.values if isinstance(phi, RealifiedState) else np.asarray(phi)
    mass = np.abs(values)
    total = mass.sum()
    if total == 0.0:
        raise DegenerateStateError("extracted amplitudes vanish everywhere")
    mass = mass / total
    negative = values < 0.0
    probs = np.zeros(space.dim)
    if isinstance(space, GrabitSpace):
        n = space.n_grabits
        blv = np.arange(2**n)
        # odd-parity placement: sigma bit set on the last grabit
        idx = 2 * spread_bits(blv, n) + negative.astype(np.int64)
        probs[idx] = mass
    else:
        half = space.n_sites
        base = np.tile(np.arange(half), 2) + np.repeat([0, 2 * half], half)
        idx = base + negative.astype(np.int64) * half
        probs[idx] = mass
    return space.state(probs)


def _space_of(state: State) -> GrabitSpace | PpvSpace:
    if isinstance(state, GrabitState):
        return GrabitSpace(state.n_grabits)
    return PpvSpace(state.n_sites)


def refresh_distribution(state: State) -> State:
    """Exact refreshment with unit-mass renormalization.

    Interference-free inputs are fixed points and are returned unchanged
    (bit-exact), which also makes the map idempotent.
    """
    if is_interference_free(state):
        return state
    return interference_free_from_amplitudes(state.extract(), _space_of(state))


def estimate_phi(ensemble: Ensemble) -> RealifiedState:
    """Amplitude estimator from relative frequencies, exactly as extraction
    acts on probabilities."""
    return ensemble.histogram().extract()


def refresh_ensemble(ensemble: Ensemble, rng: np.random.Generator) -> Ensemble:
    """Redistribute samples i.i.d. from the refreshed histogram estimate."""
    refreshed = refresh_distribution(ensemble.histogram())
    configs = rng.choice(
        ensemble.space.dim, size=ensemble.n_samples, p=refreshed.probs
    )
    return Ensemble(configs, ensemble.space, ensemble.lineage + ("refresh",))
