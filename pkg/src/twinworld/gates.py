"""Stochastic gate matrices acting on grabit registers.

Every quantum gate used here is real in the computational basis (the complex
phase gate enters as a controlled rotation of the ReIm grabit), so each gate
is specified by a real matrix ``m`` on blv strings.  The corresponding
column-stochastic map on b4v strings routes ``|m[i, j]|`` of the mass from
input ``(j, tau)`` to output blv ``i``, flipping the leading sigma bit when
``m[i, j] < 0`` so that extraction reproduces ``m`` up to one positive
constant shared by all basis vectors.  Columns are divided by their common
1-norm; that constant (the extraction 2-norm of every image) is matched on
the idle branch of controlled gates by the amplitude-reduction map

    R2 = [[1 - r0, r0], [r0, 1 - r0]],   r0 = (1 - N) / 2.

Angles that are exact multiples of pi/2 produce exact permutation matrices;
cos/sin are snapped to {0, +-1} there instead of evaluating cotangents.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidGateError
from .states import EXTRACT_1, spread_bits

_STOCHASTIC_ATOL = 1e-12


def cos_sin_exact(angle: float) -> tuple[float, float]:
    """(cos, sin) snapped at multiples of pi/4.

    Right angles give exact permutation gates; diagonal angles share one
    sqrt(1/2) representation so that e.g. the Hadamard map has entries of
    exactly 1/2 (libm cos and sin differ by one ulp at pi/4).
    """
    k = round(angle / (math.pi / 4))
    if abs(angle - k * math.pi / 4) < 1e-12:
        if k % 2 == 0:
            quarter = (k // 2) % 4
            return (
                [1.0, 0.0, -1.0, 0.0][quarter],
                [0.0, 1.0, 0.0, -1.0][quarter],
            )
        half = math.sqrt(0.5)
        return (
            math.copysign(half, math.cos(angle)),
            math.copysign(half, math.sin(angle)),
        )
    return math.cos(angle), math.sin(angle)


@dataclass(frozen=True)
class StochasticMatrix:
    """Dense column-stochastic matrix acting on probability vectors."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InvalidGateError("stochastic matrix must be square")
        if entries.min() < -_STOCHASTIC_ATOL or entries.max() > 1.0 + _STOCHASTIC_ATOL:
            raise InvalidGateError("entries must lie in [0, 1]")
        colsums = entries.sum(axis=0)
        if np.max(np.abs(colsums - 1.0)) > _STOCHASTIC_ATOL * max(1, entries.shape[0]):
            raise InvalidGateError("columns must sum to one")
        entries = entries.copy()
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def realify_unitary(u) -> np.ndarray:
    """Real matrix equivalent of a complex unitary.

    Each element ``u[i, j]`` becomes the 2x2 block ``[[Re, -Im], [Im, Re]]``
    in interleaved (index, ReIm) ordering; the result is orthogonal.
    """
    u = np.asarray(u, dtype=np.complex128)
    d = u.shape[0]
    if u.shape != (d, d) or np.max(np.abs(u.conj().T @ u - np.eye(d))) > 1e-10:
        raise InvalidGateError("input must be unitary")
    out = np.zeros((2 * d, 2 * d))
    out[0::2, 0::2] = u.real
    out[0::2, 1::2] = -u.imag
    out[1::2, 0::2] = u.imag
    out[1::2, 1::2] = u.real
    return out


def stochastic_from_real(m) -> StochasticMatrix:
    """Column-stochastic b4v-string map emulating a real gate matrix.

    Requires all columns of ``m`` to share the same 1-norm, otherwise the
    emulation constant would differ between basis vectors.
    """
    m = np.asarray(m, dtype=np.float64)
    d = m.shape[0]
    if m.shape != (d, d) or d & (d - 1):
        raise InvalidGateError("gate must be square with power-of-two size")
    k = d.bit_length() - 1
    colnorms = np.abs(m).sum(axis=0)
    if np.max(colnorms) - np.min(colnorms) > 1e-12 * max(1.0, np.max(colnorms)):
        raise InvalidGateError("columns must share a common 1-norm")
    scale = colnorms[0]
    if scale == 0.0:
        raise InvalidGateError("gate has a zero column")
    msb = 1 << (k - 1)
    dim = 4**k
    out = np.zeros((dim, dim))
    for j in range(d):
        for tau in range(d):
            col = 2 * int(spread_bits(j, k)) + int(spread_bits(tau, k))
            for i in range(d):
                v = m[i, j]
                if v == 0.0:
                    continue
                tau_out = tau ^ msb if v < 0.0 else tau
                row = 2 * int(spread_bits(i, k)) + int(spread_bits(tau_out, k))
                out[row, col] += abs(v) / scale
    return StochasticMatrix(out)


def extraction_norm(gate: StochasticMatrix) -> float:
    """Common 2-norm of the extracted images of all basis vectors.

    This is the per-gate emulation constant; controlled lifts use it to set
    the matched amplitude reduction on the idle branch.
    """
    if gate.dim != 4:
        raise InvalidGateError("extraction norm is defined for 4x4 gates")
    norms = np.linalg.norm(EXTRACT_1 @ gate.entries, axis=0)
    if np.max(norms) - np.min(norms) > 1e-12:
        raise InvalidGateError("gate does not equalize extraction norms")
    return float(norms[0])


def q_matrix(theta: float) -> np.ndarray:
    """Hermitian-unitary observable cos(theta) X + sin(theta) Z."""
    c, s = cos_sin_exact(theta)
    return np.array([[s, c], [c, -s]])


def rotation_matrix(phi: float) -> np.ndarray:
    c, s = cos_sin_exact(phi)
    return np.array([[c, -s], [s, c]])


def s_x() -> StochasticMatrix:
    """blv swap (0<->2, 1<->3); exact permutation."""
    return stochastic_from_real(np.array([[0.0, 1.0], [1.0, 0.0]]))


def s_q(theta: float) -> StochasticMatrix:
    """Stochastic map of the observable gate Q(theta)."""
    return stochastic_from_real(q_matrix(theta))


def s_hadamard() -> StochasticMatrix:
    """Hadamard; identical to Q(pi/4) since (X + Z)/sqrt(2) = H."""
    return s_q(math.pi / 4)


def s_rotation(phi: float) -> StochasticMatrix:
    """Stochastic map of the plane rotation by phi (the ReIm-grabit action
    of a phase gate)."""
    return stochastic_from_real(rotation_matrix(phi))


def s_cnot() -> StochasticMatrix:
    """Controlled blv flip, acting per sigma; exact 16x16 permutation."""
    cnot = np.zeros((4, 4))
    cnot[0, 0] = cnot[1, 1] = cnot[3, 2] = cnot[2, 3] = 1.0
    return stochastic_from_real(cnot)


def r2_amplitude_reduction(phi: float) -> np.ndarray:
    """Symmetric bistochastic 2x2 with off-diagonal r0 matched to angle phi."""
    c, s = cos_sin_exact(phi)
    norm_factor = 1.0 / (abs(c) + abs(s))
    r0 = (1.0 - norm_factor) / 2.0
    return np.array([[1.0 - r0, r0], [r0, 1.0 - r0]])


def r2_from_norm(norm_factor: float) -> np.ndarray:
    r0 = (1.0 - norm_factor) / 2.0
    return np.array([[1.0 - r0, r0], [r0, 1.0 - r0]])


def sigma_flip_gate(r0: float) -> StochasticMatrix:
    """Standalone amplitude reduction on one grabit: flip sigma with rate r0."""
    if not 0.0 <= r0 <= 0.5:
        raise InvalidGateError("r0 must lie in [0, 1/2]")
    r2 = np.array([[1.0 - r0, r0], [r0, 1.0 - r0]])
    return StochasticMatrix(np.kron(np.eye(2), r2))


def controlled_lift(gate: StochasticMatrix) -> StochasticMatrix:
    """Two-grabit lift: apply ``gate`` when the control blv is 1, and the
    matched sigma-flip amplitude reduction when it is 0.

    The returned 16x16 map is control-major; extracted images of all basis
    vectors share one 2-norm, so branch weights of superpositions are
    preserved.
    """
    norm_factor = extraction_norm(gate)
    r2 = r2_from_norm(norm_factor)
    out = np.zeros((16, 16))
    out[:8, :8] = np.kron(r2, np.eye(4))
    out[8:, 8:] = np.kron(np.eye(2), gate.entries)
    return StochasticMatrix(out)


@dataclass(frozen=True)
class GateSpec:
    """One instruction of a grabit program.

    kinds: x, h, q(theta), phase(phi), cnot, controlled_phase(phi),
    controlled_q(theta), amplitude_reduction(r0), refresh, measure.
    ``refresh`` acts on the whole register; ``measure`` marks readout targets.
    """

    kind: str
    targets: tuple[int, ...] = ()
    controls: tuple[int, ...] = ()
    param: float | None = None

    KINDS = (
        "x",
        "h",
        "q",
        "phase",
        "cnot",
        "controlled_phase",
        "controlled_q",
        "amplitude_reduction",
        "refresh",
        "measure",
    )

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise InvalidGateError(f"unknown gate kind {self.kind!r}")
        if set(self.targets) & set(self.controls):
            raise InvalidGateError("targets and controls must be disjoint")


def apply_matrix(probs: np.ndarray, n_grabits: int, gate: StochasticMatrix,
                 axes: tuple[int, ...]) -> np.ndarray:
    """Apply a gate on the given grabit axes of a raw probability vector."""
    k = len(axes)
    if gate.dim != 4**k:
        raise InvalidGateError(
            f"gate of dim {gate.dim} does not fit {k} grabits"
        )
    if any(a < 0 or a >= n_grabits for a in axes) or len(set(axes)) != k:
        raise InvalidGateError(f"bad gate axes {axes} for {n_grabits} grabits")
    t = probs.reshape((4,) * n_grabits)
    g = gate.entries.reshape((4,) * (2 * k))
    t = np.tensordot(g, t, axes=(tuple(range(k, 2 * k)), axes))
    t = np.moveaxis(t, tuple(range(k)), axes)
    return np.ascontiguousarray(t).reshape(-1)
