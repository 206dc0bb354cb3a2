"""Finite-volume cluster-property measure Omega(eps, x) and verdicts.

normalized_correlation(x, y) is the supremum over unit-variance local
probes of the connected cross-correlation between sites x and y,
computed as the largest singular value of the whitened 3x3 Pauli
cross-correlation matrix.  Directions with (numerically) zero local
variance satisfy the cluster bound trivially and are projected out.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from macrostab.statecore import PAULI_X, PAULI_Y, PAULI_Z, SpinState, _apply_matrix

_PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)

# local variance eigenvalues below this count as deterministic directions
VARIANCE_CUTOFF = 1e-10
CORRELATION_CLAMP = 1.0 + 1e-9

DEFAULT_EPSILON_GRID = (0.5, 0.25, 0.1, 0.05)


def _delta_vectors(state: SpinState, site: int) -> list:
    psi = state.amplitudes
    out = []
    for pauli in _PAULIS:
        v = _apply_matrix(psi, pauli, site, state.n_sites)
        v = v - complex(np.vdot(psi, v)) * psi
        out.append(v)
    return out


def _gram(vectors) -> np.ndarray:
    g = np.empty((3, 3), dtype=complex)
    for i in range(3):
        for j in range(3):
            g[i, j] = np.vdot(vectors[i], vectors[j])
    return 0.5 * (g + g.conj().T)


def _whitener(gram: np.ndarray) -> np.ndarray:
    """Pseudo-inverse square root restricted to the positive-variance subspace.

    Returns a (3, r) matrix W with W^dag G W = I_r; r may be 0.
    """
    evals, evecs = np.linalg.eigh(gram)
    keep = evals > VARIANCE_CUTOFF
    if not np.any(keep):
        return np.zeros((3, 0))
    return evecs[:, keep] / np.sqrt(evals[keep])


def normalized_correlation(state: SpinState, x: int, y: int) -> float:
    """Worst-case |<da(x) db(y)>| / (std_a std_b) over single-site probes.

    Returns 0 when either site is locally deterministic in every
    direction.  Clamped to [0, 1 + 1e-9] (Cauchy-Schwarz).
    """
    if x == y:
        raise ValueError("normalized correlation requires distinct sites")
    vx = _delta_vectors(state, x)
    vy = _delta_vectors(state, y)
    wx = _whitener(_gram(vx))
    wy = _whitener(_gram(vy))
    if wx.shape[1] == 0 or wy.shape[1] == 0:
        return 0.0
    cross = np.empty((3, 3), dtype=complex)
    for i in range(3):
        for j in range(3):
            cross[i, j] = np.vdot(vx[i], vy[j])
    whitened = wx.conj().T @ cross @ wy
    smax = float(np.linalg.svd(whitened, compute_uv=False)[0])
    return min(max(smax, 0.0), CORRELATION_CLAMP)


def omega_region(state: SpinState, x: int, epsilon: float) -> int:
    """Number of sites y != x whose normalized correlation with x exceeds epsilon."""
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    return sum(1 for y in range(state.n_sites)
               if y != x and normalized_correlation(state, x, y) > epsilon)


@dataclass(frozen=True)
class ClusterReport:
    epsilon: float
    per_x: Tuple[Tuple[int, int], ...]  # (x, omega_x)
    omega: int

    CSV_HEADER = ["epsilon", "x", "omega_x"]


def cluster_report(state: SpinState, epsilon: float) -> ClusterReport:
    per_x = tuple((x, omega_region(state, x, epsilon)) for x in range(state.n_sites))
    return ClusterReport(epsilon, per_x, max(w for _, w in per_x))


class CpClass(enum.Enum):
    HAS_CP = "HAS_CP"
    NO_CP = "NO_CP"


@dataclass(frozen=True)
class CpVerdict:
    verdict: CpClass
    slope: float
    ambiguous: bool = False


def cp_verdict(series: Sequence[Tuple[int, int]]) -> CpVerdict:
    """HAS_CP when Omega is constant over the largest volumes, NO_CP when it
    grows with V; ambiguous growth is flagged and reported NO_CP."""
    pts = sorted(series)
    if len(pts) < 3:
        raise ValueError("need at least 3 volumes for a CP verdict")
    volumes = np.array([v for v, _ in pts], dtype=float)
    omegas = np.array([w for _, w in pts], dtype=float)
    slope = float(np.polyfit(volumes, omegas, 1)[0])
    tail = omegas[len(pts) // 2:]
    if np.all(tail == tail[0]):
        return CpVerdict(CpClass.HAS_CP, slope)
    if slope > 0.5:
        return CpVerdict(CpClass.NO_CP, slope)
    return CpVerdict(CpClass.NO_CP, slope, ambiguous=True)


def ring_distance(n_sites: int, x: int, y: int) -> int:
    """Separation on the periodic ring."""
    d = abs(x - y) % n_sites
    return min(d, n_sites - d)
