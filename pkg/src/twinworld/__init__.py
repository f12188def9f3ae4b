"""Twin-world stochastic emulation of quantum circuits and lattice dynamics.

Quantum states are encoded as signed differences of classical probability
distributions (grabits), evolved with column-stochastic maps plus a
non-linear refreshment, and squared-amplitude statistics are recovered by
coincidence post-selection between two independent replica worlds.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateStateError,
    InvalidGateError,
    InvalidPotentialError,
    StepTooLargeError,
    TwinWorldError,
)
from .states import (
    B4V,
    ComplexState,
    GrabitState,
    PpvDistribution,
    RealifiedState,
    complexify,
    normalize,
    realify,
)
from .gates import (
    GateSpec,
    StochasticMatrix,
    controlled_lift,
    r2_amplitude_reduction,
    realify_unitary,
    s_cnot,
    s_hadamard,
    s_q,
    s_rotation,
    s_x,
)
from .refresh import (
    Ensemble,
    GrabitSpace,
    PpvSpace,
    estimate_phi,
    refresh_distribution,
    refresh_ensemble,
)
from .twin import (
    born2_distribution,
    chsh_refresh_problem,
    run_twin_distribution,
    run_twin_sampled,
)
from .circuits import GrabitProgram, UnitaryProgram, chsh_circuit, phase_circuit
from .dynamics import (
    Generator,
    LatticeSpec,
    PotentialField,
    gaussian_packet,
    kinetic_generator,
    potential_generator,
    propagate,
    step_matrix,
)
from .oracle import (
    chsh_correlator,
    chsh_value,
    compare,
    exact_propagate,
    simulate_circuit,
)
from .locality import (
    FactorizationProblem,
    minimize_q,
    reduce_problem,
    swap_gate,
    verify_swap_lemma,
)
