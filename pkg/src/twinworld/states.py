"""State types for the twin-world emulation and the maps between them.

Two index conventions are used throughout:

* Circuit mode: a register of ``n`` grabits.  Each grabit carries a
  byte-four value (b4v) ``I = 2*blv + sigma`` where ``blv`` is the
  byte-logical value (the computational-basis bit) and ``sigma`` is the
  gradient value that decides the sign with which probability mass enters
  the extracted amplitude.  A register configuration is the base-4 string
  of per-grabit b4vs, packed big-endian (grabit 0 is the most significant
  digit), so a ``GrabitState`` holds ``4**n`` probabilities.

* Dynamics mode: a particle configuration ``x`` on a lattice together with
  a ReIm bit ``rho`` and a sign bit ``sigma``, packed as ``(rho, sigma, x)``
  with ``rho`` most significant, so a ``PpvDistribution`` over ``L`` lattice
  configurations holds ``4*L`` probabilities.

Extraction is the linear map from probabilities to the emulated realified
amplitudes: each configuration contributes ``+P`` for even sigma-parity and
``-P`` for odd.  Distribution-level equalities are asserted to ``1e-12``
(double precision accumulated over at most ~1e5 entries).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStateError

ATOL = 1e-12

# Per-grabit contractions: b4vs (rows of the state tensor) -> blv with signed
# or plain sigma sum.
EXTRACT_1 = np.array([[1.0, -1.0, 0.0, 0.0], [0.0, 0.0, 1.0, -1.0]])
MARGINAL_1 = np.array([[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]])


def b4v_pack(blv: int, grad: int) -> int:
    """Packed index 2*blv + grad of a single byte-four value."""
    return 2 * blv + grad


def b4v_unpack(index: int) -> tuple[int, int]:
    """Inverse of :func:`b4v_pack`."""
    return index >> 1, index & 1


@dataclass(frozen=True)
class B4V:
    """One byte-four value: byte-logical bit plus gradient bit."""

    blv: int
    grad: int

    def __post_init__(self):
        if self.blv not in (0, 1) or self.grad not in (0, 1):
            raise ValueError("blv and grad must be bits")

    @property
    def index(self) -> int:
        return b4v_pack(self.blv, self.grad)


def spread_bits(values, n_bits: int):
    """Send bit ``nu`` of each value to base-4 digit ``nu`` (both LSB-aligned).

    Used to build b4v-string indices: a register configuration with blv
    string ``i`` and sigma string ``s`` sits at ``2*spread(i) + spread(s)``.
    """
    values = np.asarray(values, dtype=np.int64)
    out = np.zeros_like(values)
    for nu in range(n_bits):
        out += ((values >> nu) & 1) * 4**nu
    return out


def b4v_string_index(blv_string, sigma_string, n_grabits: int):
    """Packed base-4 index of a register configuration."""
    return 2 * spread_bits(blv_string, n_grabits) + spread_bits(
        sigma_string, n_grabits
    )


def split_b4v_string(index, n_grabits: int):
    """Inverse of :func:`b4v_string_index`: (blv_string, sigma_string)."""
    index = np.asarray(index, dtype=np.int64)
    blv = np.zeros_like(index)
    sig = np.zeros_like(index)
    for nu in range(n_grabits):
        digit = (index // 4**nu) % 4
        blv += (digit >> 1) * 2**nu
        sig += (digit & 1) * 2**nu
    return blv, sig


def _contract_per_grabit(probs: np.ndarray, n: int, mat: np.ndarray) -> np.ndarray:
    """Apply a (2,4) contraction to every grabit axis of a 4**n vector."""
    t = probs.reshape((4,) * n)
    for axis in range(n):
        t = np.moveaxis(np.tensordot(mat, t, axes=([1], [axis])), 0, axis)
    return t.reshape(-1)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RealifiedState:
    """Signed real amplitude vector extracted from a probability distribution.

    Circuit mode indexes by blv string; dynamics mode by (rho, x) with rho
    most significant.
    """

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))

    def norm(self, kind: str = "two") -> float:
        if kind == "one":
            return float(np.abs(self.values).sum())
        if kind == "two":
            return float(np.linalg.norm(self.values))
        raise ValueError(f"unknown norm {kind!r}")


@dataclass(frozen=True)
class GrabitState:
    """Probability distribution over the b4v strings of a grabit register."""

    n_grabits: int
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if self.n_grabits < 1:
            raise ValueError("need at least one grabit")
        if probs.shape != (4**self.n_grabits,):
            raise ValueError(
                f"expected {4**self.n_grabits} entries, got {probs.shape}"
            )
        if probs.min(initial=0.0) < -ATOL:
            raise ValueError("negative probability mass")
        if abs(probs.sum() - 1.0) > 1e-9 * max(1.0, probs.size**0.5):
            raise ValueError("probabilities must sum to one")
        object.__setattr__(self, "probs", _readonly(probs))

    @classmethod
    def zero_state(cls, n_grabits: int) -> "GrabitState":
        """All grabits in b4v 0 (blv 0, positive sign)."""
        probs = np.zeros(4**n_grabits)
        probs[0] = 1.0
        return cls(n_grabits, probs)

    @classmethod
    def from_basis(cls, n_grabits: int, index: int) -> "GrabitState":
        probs = np.zeros(4**n_grabits)
        probs[index] = 1.0
        return cls(n_grabits, probs)

    def extract(self) -> RealifiedState:
        """Signed sigma-difference, one amplitude per blv string."""
        return RealifiedState(
            _contract_per_grabit(self.probs, self.n_grabits, EXTRACT_1)
        )

    def blv_marginal(self) -> np.ndarray:
        """Physical per-world probabilities: plain sum over sigma strings."""
        return _contract_per_grabit(self.probs, self.n_grabits, MARGINAL_1)

    def blv_sigma_matrix(self) -> np.ndarray:
        """Reshape to a (2**n, 2**n) matrix indexed (blv string, sigma string)."""
        n = self.n_grabits
        t = self.probs.reshape((2,) * (2 * n))
        perm = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
        return t.transpose(perm).reshape(2**n, 2**n)


@dataclass(frozen=True)
class PpvDistribution:
    """Probability distribution over phased position variables (rho, sigma, x)."""

    n_sites: int
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if self.n_sites < 1:
            raise ValueError("need at least one lattice configuration")
        if probs.shape != (4 * self.n_sites,):
            raise ValueError(f"expected {4 * self.n_sites} entries")
        if probs.min(initial=0.0) < -ATOL:
            raise ValueError("negative probability mass")
        if abs(probs.sum() - 1.0) > 1e-9 * max(1.0, probs.size**0.5):
            raise ValueError("probabilities must sum to one")
        object.__setattr__(self, "probs", _readonly(probs))

    def as_rho_sigma_x(self) -> np.ndarray:
        return self.probs.reshape(2, 2, self.n_sites)

    def extract(self) -> RealifiedState:
        """Signed sigma-difference per (rho, x), flattened rho-major."""
        p = self.as_rho_sigma_x()
        return RealifiedState((p[:, 0, :] - p[:, 1, :]).reshape(-1))


@dataclass(frozen=True)
class ComplexState:
    """Complex amplitude vector over the computational basis or lattice sites."""

    amplitudes: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.normalized and abs(np.linalg.norm(amps) - 1.0) > ATOL:
            raise ValueError("state flagged normalized but 2-norm differs from 1")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)


def realify(psi: ComplexState | np.ndarray) -> RealifiedState:
    """Split a complex vector into (Re, Im), rho-major."""
    amps = psi.amplitudes if isinstance(psi, ComplexState) else np.asarray(psi)
    return RealifiedState(np.concatenate([amps.real, amps.imag]))


def complexify(phi: RealifiedState | np.ndarray) -> ComplexState:
    """Inverse of :func:`realify`; exact round trip."""
    values = phi.values if isinstance(phi, RealifiedState) else np.asarray(phi)
    half = values.size // 2
    if values.size != 2 * half:
        raise ValueError("realified vector must have even length")
    return ComplexState(values[:half] + 1j * values[half:])


def normalize(values, norm: str = "one"):
    """Scale a vector to unit 1- or 2-norm; direction is preserved.

    Accepts plain arrays or a :class:`RealifiedState` (returned as the same
    type).  Raises :class:`DegenerateStateError` on zero input.
    """
    if isinstance(values, RealifiedState):
        return RealifiedState(normalize(values.values, norm))
    values = np.asarray(values, dtype=np.float64)
    if norm == "one":
        scale = np.abs(values).sum()
    elif norm == "two":
        scale = np.linalg.norm(values)
    else:
        raise ValueError(f"unknown norm {norm!r}")
    if scale == 0.0:
        raise DegenerateStateError("cannot normalize a zero vector")
    return values / scale


def extraction_matrix(n_grabits: int) -> np.ndarray:
    """Dense (2**n, 4**n) extraction map; mainly for tests and diagnostics."""
    mat = EXTRACT_1
    for _ in range(n_grabits - 1):
        mat = np.kron(mat, EXTRACT_1)
    return mat
