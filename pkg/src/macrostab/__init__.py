"""Stability analysis of pure states of finite spin-1/2 chains.

Exact state-vector tools for classifying fluctuations of additive
observables (NFS/AFS), measuring the finite-volume cluster property,
predicting and simulating decoherence rates under weak classical noise,
and probing stability against projective local measurements.
"""

from macrostab.statecore import (
    SpinState,
    SiteOperator,
    AdditiveOperator,
    apply_site_operator,
    expectation,
    connected_correlator,
    additive_fluctuation,
    wavevector_grid,
)
from macrostab.models import ModelSpec, StateFamily, build_state, ising_afm_hamiltonian

__version__ = "0.1.0"

__all__ = [
    "SpinState",
    "SiteOperator",
    "AdditiveOperator",
    "apply_site_operator",
    "expectation",
    "connected_correlator",
    "additive_fluctuation",
    "wavevector_grid",
    "ModelSpec",
    "StateFamily",
    "build_state",
    "ising_afm_hamiltonian",
    "__version__",
]
