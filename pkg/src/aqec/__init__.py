"""Dissipative stabilization of bosonic states via conditional Gaussian gates.

A simulator and compiler for autonomous stabilization of a single bosonic
mode coupled to an ancilla qubit: nullifier construction for squeezed-vacuum,
cubic-phase, trisqueezed, cat, and squeezed-cat targets, Trotterized
compilation of their dissipators into conditional Gaussian gate sequences,
noisy open-system simulation in truncated Fock space, and a scenario runner
producing deterministic CSV/JSON tables with companion figures.
"""

__version__ = "0.1.0"

from . import analysis, circuit, config, fock, gaussian, lindblad, states  # noqa: F401
from .errors import (  # noqa: F401
    AqecError, CompileError, ConfigError, CutoffError, IntegrationError,
    NumericError, SteadyStateError,
)
