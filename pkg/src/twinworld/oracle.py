"""Exact quantum-mechanical reference implementations.

Complex state-vector simulation for the circuit experiments, exact lattice
Schroedinger stepping (first-order Euler matching the emulator's truncation,
or eigendecomposition for exact propagation), the analytic singlet
correlators for the Bell test, and the comparison metrics used by the
figure-reproduction experiments.
"""
from __future__ import annotations

import numpy as np

from .circuits import CHSH_SIGNS, UnitaryProgram, chsh_settings
from .errors import InvalidGateError
from .gates import q_matrix
from .states import ComplexState, RealifiedState, complexify

SINGLET = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / np.sqrt(2)


def _apply_unitary(state: np.ndarray, n: int, u: np.ndarray,
                   axes: tuple[int, ...]) -> np.ndarray:
    k = len(axes)
    t = state.reshape((2,) * n)
    g = u.reshape((2,) * (2 * k))
    t = np.tensordot(g, t, axes=(tuple(range(k, 2 * k)), axes))
    t = np.moveaxis(t, tuple(range(k)), axes)
    return np.ascontiguousarray(t).reshape(-1)


def simulate_circuit(program: UnitaryProgram,
                     psi0: np.ndarray | None = None) -> ComplexState:
    """Run the complex program on |0...0> (or a supplied start state)."""
    n = program.n_qubits
    if psi0 is None:
        psi = np.zeros(2**n, dtype=complex)
        psi[0] = 1.0
    else:
        psi = np.asarray(psi0, dtype=complex).copy()
        if psi.shape != (2**n,):
            raise InvalidGateError("start state has the wrong dimension")
    for u, axes in program.gates:
        psi = _apply_unitary(psi, n, np.asarray(u, dtype=complex), axes)
    return ComplexState(psi)


def outcome_probabilities(psi: ComplexState | np.ndarray, n_qubits: int,
                          measured: tuple[int, ...]) -> np.ndarray:
    """|Psi|^2 marginalized onto the measured qubits (their declared order)."""
    amps = psi.amplitudes if isinstance(psi, ComplexState) else np.asarray(psi)
    probs = np.abs(amps.reshape((2,) * n_qubits)) ** 2
    keep = list(measured)
    drop = tuple(a for a in range(n_qubits) if a not in keep)
    marg = probs.sum(axis=drop) if drop else probs
    order = np.argsort(np.argsort(keep))
    # axes of marg correspond to sorted(measured); restore declared order
    marg = np.transpose(marg, axes=tuple(order))
    return marg.reshape(-1)


def chsh_correlator(theta1: float, theta2: float) -> float:
    """<Q(theta1) x Q(theta2)> on the singlet via 4x4 matrix algebra."""
    observable = np.kron(q_matrix(theta1), q_matrix(theta2))
    return float(np.real(SINGLET.conj() @ observable @ SINGLET))


def chsh_value(phi: float) -> float:
    """Combined CHSH quantity for the standard angle parameterization."""
    return float(
        sum(
            sign * chsh_correlator(t1, t2)
            for sign, (t1, t2) in zip(CHSH_SIGNS, chsh_settings(phi))
        )
    )


# ---------------------------------------------------------------------------
# Lattice Schroedinger reference


def lattice_hamiltonian(spec, potential) -> np.ndarray:
    """Dense discrete Hamiltonian 2*D*M - sum of neighbor couplings + W."""
    from .dynamics import neighbor_coupling_sum  # local import, no cycle at runtime

    dm = spec.D * spec.M
    k = neighbor_coupling_sum(spec).toarray()
    w = np.zeros(spec.n_sites) if potential is None else np.asarray(potential.values)
    return 2.0 * dm * np.eye(spec.n_sites) - k + np.diag(w)


def schrodinger_step_euler(phi: RealifiedState | np.ndarray, spec, potential,
                           dt: float) -> RealifiedState:
    """One first-order step of the realified lattice evolution.

    Matches the truncation order of the stochastic emulation, so per-step
    agreement with the emulator is O(dt^2).
    """
    values = phi.values if isinstance(phi, RealifiedState) else np.asarray(phi)
    h = lattice_hamiltonian(spec, potential)
    re, im = values[: spec.n_sites], values[spec.n_sites:]
    return RealifiedState(
        np.concatenate([re + dt * (h @ im), im - dt * (h @ re)])
    )


class ExactPropagator:
    """Eigendecomposition-based exact propagator for the discrete Hamiltonian."""

    def __init__(self, spec, potential):
        h = lattice_hamiltonian(spec, potential)
        self.eigvals, self.eigvecs = np.linalg.eigh(h)
        self.n_sites = spec.n_sites

    def propagate(self, phi0: RealifiedState | np.ndarray, t: float) -> RealifiedState:
        values = phi0.values if isinstance(phi0, RealifiedState) else np.asarray(phi0)
        psi0 = complexify(values).amplitudes
        coeff = self.eigvecs.T @ psi0
        psi_t = self.eigvecs @ (np.exp(-1j * self.eigvals * t) * coeff)
        return RealifiedState(np.concatenate([psi_t.real, psi_t.imag]))


def exact_propagate(phi0, spec, potential, times) -> list[RealifiedState]:
    prop = ExactPropagator(spec, potential)
    return [prop.propagate(phi0, float(t)) for t in times]


# ---------------------------------------------------------------------------
# Comparison metrics


def align_sign(phi: np.ndarray, reference: np.ndarray) -> tuple[np.ndarray, int]:
    """Flip the overall sign of ``phi`` to maximize overlap with ``reference``.

    The emulated state is defined up to a real nonzero prefactor; the sign
    is a gauge and is reported so outputs can record the choice.
    """
    sign = -1 if float(np.dot(phi, reference)) < 0.0 else 1
    return sign * phi, sign


def density_from_realified(phi: np.ndarray) -> np.ndarray:
    """Site probabilities sum_rho phi^2 / ||phi||_2^2 from a rho-major vector."""
    half = phi.size // 2
    sq = phi[:half] ** 2 + phi[half:] ** 2
    return sq / sq.sum()


def _site_variance(density: np.ndarray) -> float:
    x = np.arange(density.size, dtype=float)
    mean = float(density @ x)
    return float(density @ x**2) - mean**2


def compare(phi_exact: np.ndarray | RealifiedState,
            phi_emulated: np.ndarray | RealifiedState,
            metric: str = "two_norm_diff",
            density_floor: float = 1e-20) -> float:
    """Distance between the exact state and the (2-normalized) emulation.

    Sign-sensitive by design; apply :func:`align_sign` first when the gauge
    should be fixed.  Metrics: ``two_norm_diff``, ``log10_density_diff``
    (max absolute log10 gap where the exact density exceeds the floor) and
    ``variance`` (absolute difference of site variances).
    """
    exact = np.asarray(
        phi_exact.values if isinstance(phi_exact, RealifiedState) else phi_exact
    )
    emul = np.asarray(
        phi_emulated.values
        if isinstance(phi_emulated, RealifiedState)
        else phi_emulated
    )
    if exact.shape != emul.shape:
        raise ValueError("states must have equal dimensions")
    emul = emul / np.linalg.norm(emul)
    if metric == "two_norm_diff":
        return float(np.linalg.norm(exact - emul))
    if metric == "log10_density_diff":
        p_exact = density_from_realified(exact)
        p_emul = density_from_realified(emul)
        mask = p_exact > density_floor
        with np.errstate(divide="ignore"):
            gap = np.abs(np.log10(p_emul[mask]) - np.log10(p_exact[mask]))
        return float(np.max(gap))
    if metric == "variance":
        return abs(
            _site_variance(density_from_realified(exact))
            - _site_variance(density_from_realified(emul))
        )
    raise ValueError(f"unknown metric {metric!r}")
