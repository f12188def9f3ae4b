"""Two independent replica worlds and Born-2 coincidence statistics.

Each world evolves the same grabit program; the worlds never exchange
state.  After the final refreshment the per-world physical distribution
over full blv configurations is p = |phi| / ||phi||_1, and post-selecting
sample pairs whose full blv configurations coincide (sigma values are
excluded: after a refreshment they are a function of the configuration)
yields outcome statistics proportional to p^2 -- the squared-amplitude
rule.  Coincidence is checked on the *full* configuration before
marginalizing onto the measured grabits; marginal-level coincidence would
square the marginals instead and give different statistics.

Acceptance rates are always reported: the coincidence mass can be small
and silently low acceptance is a usability trap.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import GrabitProgram, chsh_circuit
from .errors import DegenerateStateError, InvalidGateError
from .gates import StochasticMatrix
from .refresh import Ensemble, GrabitSpace, refresh_distribution, refresh_ensemble
from .states import GrabitState


def born2_distribution(p: np.ndarray, n_rho: int = 1) -> np.ndarray:
    """Coincidence distribution: squares summed over the ReIm index,
    renormalized.

    ``p`` is indexed (outcome, rho) with rho least significant when
    ``n_rho > 1``.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim == 1 and n_rho > 1:
        p = p.reshape(-1, n_rho)
    sq = p**2
    if p.ndim > 1:
        sq = sq.sum(axis=1)
    total = sq.sum()
    if total == 0.0:
        raise DegenerateStateError("coincidence mass is zero")
    return sq / total


def evolve_distribution(program: GrabitProgram,
                        stop_before_final_refresh: bool = False) -> GrabitState:
    """Exact single-world evolution of the program from |0...0>."""
    state = GrabitState.zero_state(program.n_grabits)
    gates = list(program.gates)
    if stop_before_final_refresh:
        ops = [g for g in gates if g.kind != "measure"]
        if not ops or ops[-1].kind != "refresh":
            raise InvalidGateError("program does not end with a refreshment")
        last_refresh = max(i for i, g in enumerate(gates) if g.kind == "refresh")
        gates = gates[:last_refresh]
    for gate in gates:
        if gate.kind == "measure":
            continue
        if gate.kind == "refresh":
            state = refresh_distribution(state)
            continue
        matrix, axes = program.resolve(gate)
        from .gates import apply_matrix

        state = GrabitState(
            program.n_grabits,
            apply_matrix(state.probs, program.n_grabits, matrix, axes),
        )
    return state


def _marginalize_measured(joint: np.ndarray, n_grabits: int,
                          measured: tuple[int, ...]) -> np.ndarray:
    t = joint.reshape((2,) * n_grabits)
    drop = tuple(a for a in range(n_grabits) if a not in measured)
    marg = t.sum(axis=drop) if drop else t
    order = np.argsort(np.argsort(measured))
    return np.transpose(marg, axes=tuple(order)).reshape(-1)


@dataclass(frozen=True)
class ExactTwinResult:
    outcome_probs: np.ndarray
    acceptance_probability: float
    world_marginal: np.ndarray


def run_twin_distribution(program: GrabitProgram) -> ExactTwinResult:
    """Exact Born-2 outcome distribution of the twin-world protocol."""
    if not program.ends_with_refresh():
        raise InvalidGateError(
            "twin-world readout requires a refreshment before measurement"
        )
    state = evolve_distribution(program)
    marginal = state.blv_marginal()
    joint = marginal * marginal  # identical, independent worlds
    acceptance = float(joint.sum())
    if acceptance == 0.0:
        raise DegenerateStateError("coincidence mass is zero")
    outcome = _marginalize_measured(
        joint / acceptance, program.n_grabits, program.measured
    )
    return ExactTwinResult(outcome, acceptance, marginal)


# ---------------------------------------------------------------------------
# Sampled (finite-ensemble) mode


def _digits_from_flat(flat: np.ndarray, n: int) -> np.ndarray:
    out = np.empty((flat.size, n), dtype=np.int64)
    for nu in range(n):
        out[:, n - 1 - nu] = (flat // 4**nu) % 4
    return out


def _flat_from_digits(digits: np.ndarray) -> np.ndarray:
    n = digits.shape[1]
    weights = 4 ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return digits @ weights


def _apply_gate_sampled(digits: np.ndarray, matrix: StochasticMatrix,
                        axes: tuple[int, ...], rng: np.random.Generator) -> None:
    """Per-sample Markov transition for one gate; digits updated in place."""
    k = len(axes)
    dim = 4**k
    weights = 4 ** np.arange(k - 1, -1, -1, dtype=np.int64)
    sub = digits[:, list(axes)] @ weights
    new = np.empty_like(sub)
    for value in range(dim):
        mask = sub == value
        count = int(mask.sum())
        if count == 0:
            continue
        new[mask] = rng.choice(dim, size=count, p=matrix.entries[:, value])
    for pos, axis in enumerate(axes):
        digits[:, axis] = (new // 4 ** (k - 1 - pos)) % 4


def evolve_ensemble(program: GrabitProgram, n_samples: int,
                    rng: np.random.Generator,
                    lineage: tuple = ()) -> Ensemble:
    """Single-world stochastic evolution of ``n_samples`` trajectories."""
    n = program.n_grabits
    digits = np.zeros((n_samples, n), dtype=np.int64)
    space = GrabitSpace(n)
    for gate in program.gates:
        if gate.kind == "measure":
            continue
        if gate.kind == "refresh":
            ensemble = Ensemble(_flat_from_digits(digits), space, lineage)
            ensemble = refresh_ensemble(ensemble, rng)
            digits = _digits_from_flat(ensemble.configs, n)
            continue
        matrix, axes = program.resolve(gate)
        _apply_gate_sampled(digits, matrix, axes, rng)
    return Ensemble(_flat_from_digits(digits), space, lineage)


@dataclass(frozen=True)
class SampledTwinResult:
    counts: np.ndarray
    n_accepted: int
    n_drawn: int
    outcomes: np.ndarray  # accepted measured-blv indices, one per accepted pair

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.n_accepted


def run_twin_sampled(program: GrabitProgram, n_samples: int,
                     seed) -> SampledTwinResult:
    """Draw configuration pairs from two independently evolved worlds and
    keep those whose full blv configurations coincide."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    if not program.ends_with_refresh():
        raise InvalidGateError(
            "twin-world readout requires a refreshment before measurement"
        )
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    child_i, child_ii = seq.spawn(2)
    world_i = evolve_ensemble(
        program, n_samples, np.random.default_rng(child_i), ("world-I",)
    )
    world_ii = evolve_ensemble(
        program, n_samples, np.random.default_rng(child_ii), ("world-II",)
    )
    n = program.n_grabits
    blv_i, _ = _split_blv(world_i.configs, n)
    blv_ii, _ = _split_blv(world_ii.configs, n)
    accepted = blv_i == blv_ii
    n_accepted = int(accepted.sum())
    if n_accepted == 0:
        raise DegenerateStateError(
            f"no coincident pairs among {n_samples} drawn"
        )
    outcomes = _measured_index(blv_i[accepted], n, program.measured)
    counts = np.bincount(outcomes, minlength=2 ** len(program.measured))
    return SampledTwinResult(counts, n_accepted, n_samples, outcomes)


def _split_blv(flat: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    from .states import split_b4v_string

    return split_b4v_string(flat, n)


def _measured_index(blv_strings: np.ndarray, n: int,
                    measured: tuple[int, ...]) -> np.ndarray:
    out = np.zeros_like(blv_strings)
    m = len(measured)
    for pos, grabit in enumerate(measured):
        bit = (blv_strings >> (n - 1 - grabit)) & 1
        out += bit << (m - 1 - pos)
    return out


def outcome_permutation_test(outcomes_a: np.ndarray, outcomes_b: np.ndarray,
                             n_outcomes: int, n_permutations: int = 500,
                             seed: int = 0) -> float:
    """p-value for 'both outcome samples come from one distribution'.

    Chi-square-style statistic on the two histograms, null distribution by
    random reassignment of the pooled outcomes.
    """
    rng = np.random.default_rng(seed)
    pooled = np.concatenate([outcomes_a, outcomes_b])
    n_a = outcomes_a.size

    def statistic(a, b):
        ha = np.bincount(a, minlength=n_outcomes) / a.size
        hb = np.bincount(b, minlength=n_outcomes) / b.size
        return float(np.sum((ha - hb) ** 2))

    observed = statistic(outcomes_a, outcomes_b)
    hits = 0
    for _ in range(n_permutations):
        perm = rng.permutation(pooled.size)
        if statistic(pooled[perm[:n_a]], pooled[perm[n_a:]]) >= observed:
            hits += 1
    return (hits + 1) / (n_permutations + 1)


def chsh_refresh_problem(theta1: float, theta2: float,
                         noise_floor: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Input/output pair of the final refreshment of the Bell-test circuit.

    The refreshment is non-linear, but for a known program the distribution
    before (P_in) and after (P_out) the final refreshment are both known
    exactly, which poses the question whether a bipartite stochastic map
    S with S P_in = P_out can factor into local maps for the two sides.

    Amplitudes below ``noise_floor`` times the largest one are rounding
    residue of algebraically-zero components; they are snapped to zero so
    the zero sets of the exported pair are structural.
    """
    from .refresh import GrabitSpace, interference_free_from_amplitudes

    program, _ = chsh_circuit(theta1, theta2)
    before = evolve_distribution(program, stop_before_final_refresh=True)
    phi = before.extract().values.copy()
    phi[np.abs(phi) < noise_floor * np.max(np.abs(phi))] = 0.0
    after = interference_free_from_amplitudes(
        phi, GrabitSpace(program.n_grabits)
    )
    return np.asarray(before.probs), np.asarray(after.probs)
