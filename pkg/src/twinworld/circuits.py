"""Circuit IR for grabit programs and the two built-in experiments.

A ``GrabitProgram`` is an ordered gate list over a register, with an
optional declared ReIm grabit (an ordinary grabit at a fixed position) and
a set of measured grabits.  ``phase`` gates are sugar for a controlled
rotation of the ReIm grabit controlled by their target.

``phase_circuit`` prepares (|0> + e^{i phi} |1>)/sqrt(2) on a work qubit
and reads it out in the X basis through an ancilla; ``chsh_circuit``
prepares a singlet and measures Q(theta) on each half through one ancilla
per side.  Both come with a mirrored complex-unitary program for the exact
reference simulator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidGateError
from .gates import (
    GateSpec,
    StochasticMatrix,
    controlled_lift,
    q_matrix,
    s_cnot,
    s_hadamard,
    s_q,
    s_rotation,
    s_x,
    sigma_flip_gate,
)

H_COMPLEX = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2)
X_COMPLEX = np.array([[0.0, 1.0], [1.0, 0.0]])
CNOT_COMPLEX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=float
)


def _controlled(u: np.ndarray) -> np.ndarray:
    d = u.shape[0]
    out = np.eye(2 * d, dtype=complex)
    out[d:, d:] = u
    return out


@dataclass(frozen=True)
class GrabitProgram:
    """Gate sequence on a grabit register, plus register metadata."""

    n_grabits: int
    gates: tuple[GateSpec, ...]
    measured: tuple[int, ...]
    reim: int | None = None

    def __post_init__(self):
        for g in self.gates:
            for idx in g.targets + g.controls:
                if not 0 <= idx < self.n_grabits:
                    raise InvalidGateError(
                        f"gate {g.kind} touches grabit {idx} outside register"
                    )
        for idx in self.measured:
            if not 0 <= idx < self.n_grabits:
                raise InvalidGateError(f"measured grabit {idx} out of range")
        if self.reim is not None and not 0 <= self.reim < self.n_grabits:
            raise InvalidGateError("ReIm grabit out of range")
        if self.reim is not None and self.reim in self.measured:
            raise InvalidGateError("the ReIm grabit is not a readout target")

    def resolve(self, gate: GateSpec) -> tuple[StochasticMatrix, tuple[int, ...]] | None:
        """Stochastic matrix and grabit axes for one instruction.

        Returns None for refresh/measure, which are not linear maps.
        """
        kind = gate.kind
        if kind in ("refresh", "measure"):
            return None
        if kind == "x":
            return s_x(), gate.targets
        if kind == "h":
            return s_hadamard(), gate.targets
        if kind == "q":
            return s_q(gate.param), gate.targets
        if kind == "amplitude_reduction":
            return sigma_flip_gate(gate.param), gate.targets
        if kind == "cnot":
            return s_cnot(), (gate.controls[0], gate.targets[0])
        if kind == "controlled_q":
            return controlled_lift(s_q(gate.param)), (
                gate.controls[0],
                gate.targets[0],
            )
        if kind == "controlled_phase":
            return controlled_lift(s_rotation(gate.param)), (
                gate.controls[0],
                gate.targets[0],
            )
        if kind == "phase":
            if self.reim is None:
                raise InvalidGateError(
                    "phase gate needs a declared ReIm grabit"
                )
            return controlled_lift(s_rotation(gate.param)), (
                gate.targets[0],
                self.reim,
            )
        raise InvalidGateError(f"unresolvable gate kind {kind!r}")

    def ends_with_refresh(self) -> bool:
        ops = [g for g in self.gates if g.kind != "measure"]
        return bool(ops) and ops[-1].kind == "refresh"


@dataclass(frozen=True)
class UnitaryProgram:
    """Complex mirror of a grabit program for the exact reference simulator."""

    n_qubits: int
    gates: tuple[tuple[np.ndarray, tuple[int, ...]], ...]
    measured: tuple[int, ...]

    def __post_init__(self):
        for u, axes in self.gates:
            d = 2 ** len(axes)
            if u.shape != (d, d):
                raise InvalidGateError("gate dimension does not match its axes")
            if np.max(np.abs(u.conj().T @ u - np.eye(d))) > 1e-12:
                raise InvalidGateError("non-unitary gate in program")
            for a in axes:
                if not 0 <= a < self.n_qubits:
                    raise InvalidGateError("gate axis out of range")


def phase_circuit(phi: float) -> tuple[GrabitProgram, UnitaryProgram]:
    """Bloch-vector rotation readout: grabits (ancilla, work, ReIm)."""
    grabit = GrabitProgram(
        n_grabits=3,
        gates=(
            GateSpec("h", targets=(1,)),
            GateSpec("phase", targets=(1,), param=phi),
            GateSpec("h", targets=(0,)),
            GateSpec("cnot", targets=(1,), controls=(0,)),
            GateSpec("h", targets=(0,)),
            GateSpec("refresh"),
            GateSpec("measure", targets=(0,)),
        ),
        measured=(0,),
        reim=2,
    )
    u_phi = np.diag([1.0, np.exp(1j * phi)])
    unitary = UnitaryProgram(
        n_qubits=2,
        gates=(
            (H_COMPLEX.astype(complex), (1,)),
            (u_phi, (1,)),
            (H_COMPLEX.astype(complex), (0,)),
            (CNOT_COMPLEX.astype(complex), (0, 1)),
            (H_COMPLEX.astype(complex), (0,)),
        ),
        measured=(0,),
    )
    return grabit, unitary


def chsh_circuit(theta1: float, theta2: float) -> tuple[GrabitProgram, UnitaryProgram]:
    """Singlet preparation plus one Q(theta) readout ancilla per side.

    Register order: (ancilla A, qubit A, ancilla B, qubit B).  All states
    stay real, so no ReIm grabit is declared.
    """
    grabit = GrabitProgram(
        n_grabits=4,
        gates=(
            GateSpec("x", targets=(1,)),
            GateSpec("h", targets=(1,)),
            GateSpec("cnot", targets=(3,), controls=(1,)),
            GateSpec("x", targets=(3,)),
            GateSpec("h", targets=(0,)),
            GateSpec("h", targets=(2,)),
            GateSpec("controlled_q", targets=(1,), controls=(0,), param=theta1),
            GateSpec("controlled_q", targets=(3,), controls=(2,), param=theta2),
            GateSpec("h", targets=(0,)),
            GateSpec("h", targets=(2,)),
            GateSpec("refresh"),
            GateSpec("measure", targets=(0, 2)),
        ),
        measured=(0, 2),
    )
    unitary = UnitaryProgram(
        n_qubits=4,
        gates=(
            (X_COMPLEX.astype(complex), (1,)),
            (H_COMPLEX.astype(complex), (1,)),
            (CNOT_COMPLEX.astype(complex), (1, 3)),
            (X_COMPLEX.astype(complex), (3,)),
            (H_COMPLEX.astype(complex), (0,)),
            (H_COMPLEX.astype(complex), (2,)),
            (_controlled(q_matrix(theta1)), (0, 1)),
            (_controlled(q_matrix(theta2)), (2, 3)),
            (H_COMPLEX.astype(complex), (0,)),
            (H_COMPLEX.astype(complex), (2,)),
        ),
        measured=(0, 2),
    )
    return grabit, unitary


# Alice/Bob angle pairs for the four CHSH correlators as a function of the
# scan angle; the combination below is C1 + C2 + C3 - C4.
def chsh_settings(phi: float) -> tuple[tuple[float, float], ...]:
    return (
        (math.pi / 2, math.pi / 2 + phi),
        (0.0, math.pi / 2 + phi),
        (0.0, phi),
        (math.pi / 2, phi),
    )


CHSH_SIGNS = (1.0, 1.0, 1.0, -1.0)
