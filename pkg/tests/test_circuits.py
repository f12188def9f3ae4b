import math

import numpy as np
import pytest

from twinworld.circuits import (
    GrabitProgram,
    UnitaryProgram,
    chsh_circuit,
    chsh_settings,
    phase_circuit,
)
from twinworld.errors import InvalidGateError
from twinworld.gates import GateSpec


def test_phase_circuit_layout():
    program, unitary = phase_circuit(0.4)
    assert program.n_grabits == 3
    assert program.reim == 2
    assert program.measured == (0,)
    assert program.ends_with_refresh()
    assert unitary.n_qubits == 2
    assert unitary.measured == (0,)


def test_phase_gate_resolves_to_reim_rotation():
    program, _ = phase_circuit(0.4)
    phase = next(g for g in program.gates if g.kind == "phase")
    matrix, axes = program.resolve(phase)
    assert axes == (1, 2)
    assert matrix.dim == 16


def test_chsh_circuit_layout():
    program, unitary = chsh_circuit(math.pi / 2, math.pi / 4)
    assert program.n_grabits == 4
    assert program.reim is None
    assert program.measured == (0, 2)
    assert program.ends_with_refresh()
    assert unitary.n_qubits == 4


def test_chsh_settings_combination():
    phi = -math.pi / 4
    settings = chsh_settings(phi)
    assert settings[0] == (math.pi / 2, math.pi / 2 + phi)
    assert settings[2] == (0.0, phi)


def test_program_rejects_out_of_range_targets():
    with pytest.raises(InvalidGateError):
        GrabitProgram(2, (GateSpec("h", targets=(2,)),), measured=(0,))
    with pytest.raises(InvalidGateError):
        GrabitProgram(2, (), measured=(5,))


def test_program_rejects_measured_reim():
    with pytest.raises(InvalidGateError):
        GrabitProgram(3, (), measured=(2,), reim=2)


def test_phase_gate_requires_reim_register():
    program = GrabitProgram(
        2, (GateSpec("phase", targets=(0,), param=0.5),), measured=(0,)
    )
    with pytest.raises(InvalidGateError):
        program.resolve(program.gates[0])


def test_refresh_and_measure_resolve_to_none():
    program, _ = phase_circuit(0.1)
    assert program.resolve(GateSpec("refresh")) is None
    assert program.resolve(GateSpec("measure", targets=(0,))) is None


def test_unitary_program_rejects_non_unitary_gates():
    with pytest.raises(InvalidGateError):
        UnitaryProgram(
            1, ((np.ones((2, 2), dtype=complex), (0,)),), measured=(0,)
        )


def test_ends_with_refresh_detection():
    program = GrabitProgram(
        1,
        (GateSpec("h", targets=(0,)), GateSpec("refresh"),
         GateSpec("measure", targets=(0,))),
        measured=(0,),
    )
    assert program.ends_with_refresh()
    program = GrabitProgram(1, (GateSpec("h", targets=(0,)),), measured=(0,))
    assert not program.ends_with_refresh()
