"""Conditional squeezing of atomic alignment by off-resonant light.

Submodules
----------
tensor_algebra
    Wigner symbols, spin matrices and irreducible tensor operators.
polarizability
    Hyperfine polarizabilities and cross-sections.
couplings
    Coupling strengths, noise parameters and detuning sweeps.
gaussian
    Labelled Gaussian states, channels and homodyne conditioning.
scenarios
    Input-output maps of each probing geometry.
kernel_solver
    Exact thick-medium kernels and an independent grid solver.
"""

from .couplings import CouplingSet, ExperimentParams, coupling_set, default_params
from .gaussian import GaussianState, LinearChannel, ModeLabel
from .polarizability import TransitionManifold, build_table, rb87_d2
from .scenarios import ScenarioConfig, ScenarioResult, run_scenario
from .tensor_algebra import HalfInteger, build_spin_space, clebsch_gordan, wigner3j, wigner6j

__version__ = "0.1.0"

__all__ = [
    "CouplingSet",
    "ExperimentParams",
    "GaussianState",
    "HalfInteger",
    "LinearChannel",
    "ModeLabel",
    "ScenarioConfig",
    "ScenarioResult",
    "TransitionManifold",
    "build_spin_space",
    "build_table",
    "clebsch_gordan",
    "coupling_set",
    "default_params",
    "rb87_d2",
    "run_scenario",
    "wigner3j",
    "wigner6j",
]
