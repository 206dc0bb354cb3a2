"""Worst-case additive-operator fluctuations and NFS/AFS classification.

For a fixed wavevector k the supremum of <dA_k^dag dA_k> over unit-norm
traceless Hermitian single-site operators a = sum_mu c_mu sigma_mu
(real c) reduces to the largest eigenvalue of the real part of the 3x3
Gram matrix of the vectors dSigma_mu(k)|psi>, where
Sigma_mu(k) = sum_x sigma_mu(x) e^{-ikx}.  Identity components of a
commute into <A_k> and contribute nothing.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from macrostab.statecore import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    SpinState,
    _apply_matrix,
    wavevector_grid,
)

_PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


class ScalingClass(enum.Enum):
    NFS = "NFS"
    AFS = "AFS"
    INTERMEDIATE = "INTERMEDIATE"


def _delta_pauli_vectors(state: SpinState, k: float) -> list:
    """The three vectors dSigma_mu(k)|psi>, mu in {x, y, z}."""
    n = state.n_sites
    psi = state.amplitudes
    phases = np.exp(-1.0j * k * np.arange(n))
    vecs = []
    for pauli in _PAULIS:
        out = np.zeros_like(psi)
        for x in range(n):
            out += phases[x] * _apply_matrix(psi, pauli, x, n)
        mean = complex(np.vdot(psi, out))
        vecs.append(out - mean * psi)
    return vecs


def correlation_gram(state: SpinState, k: float) -> np.ndarray:
    """3x3 symmetric PSD matrix C_mn = Re <dSigma_m(k)^dag dSigma_n(k)>.

    For a Hermitian probe a = sum_mu c_mu sigma_mu with real coefficients,
    <dA_k^dag dA_k> = c^T C c; the antisymmetric imaginary part of the
    complex Gram cancels in that quadratic form, so taking the real part
    restricts the supremum to Hermitian site operators.
    """
    vecs = _delta_pauli_vectors(state, k)
    c = np.empty((3, 3))
    for i in range(3):
        for j in range(i, 3):
            c[i, j] = c[j, i] = np.vdot(vecs[i], vecs[j]).real
    return c


@dataclass(frozen=True)
class FluctuationPoint:
    k: float
    max_fluct: float
    # unit-norm coefficients of the argmax operator on (sigma_x, sigma_y, sigma_z)
    argmax_op: Tuple[complex, complex, complex]


@dataclass(frozen=True)
class FluctuationSpectrum:
    per_k: Tuple[FluctuationPoint, ...]

    @property
    def peak(self) -> FluctuationPoint:
        return max(self.per_k, key=lambda p: p.max_fluct)

    def csv_rows(self) -> List[List]:
        rows = []
        for p in self.per_k:
            row = [p.k, p.max_fluct]
            for c in p.argmax_op:
                row.extend([c.real, c.imag])
            rows.append(row)
        return rows

    CSV_HEADER = ["k", "max_fluct",
                  "op_cx_re", "op_cx_im", "op_cy_re", "op_cy_im", "op_cz_re", "op_cz_im"]


def max_fluctuation(state: SpinState) -> FluctuationSpectrum:
    """Largest Gram eigenvalue and its operator at every grid wavevector."""
    points = []
    for k in wavevector_grid(state.n_sites):
        c = correlation_gram(state, k)
        evals, evecs = np.linalg.eigh(c)
        lam = max(float(evals[-1]), 0.0)
        vec = evecs[:, -1]
        points.append(FluctuationPoint(float(k), lam, tuple(complex(v) for v in vec)))
    return FluctuationSpectrum(tuple(points))


@dataclass(frozen=True)
class ScalingVerdict:
    exponent: float
    r_squared: float
    scaling_class: ScalingClass


def classify_scaling(series: Sequence[Tuple[int, float]],
                     tol: float = 0.2) -> ScalingVerdict:
    """Fit log(max_fluct) vs log(V) and classify NFS/AFS/INTERMEDIATE.

    Zero fluctuation entries are dropped; an all-zero series is an
    eigenstate family and classified NFS with exponent 0.
    """
    usable = [(v, f) for v, f in series if f > 0.0]
    if not usable:
        if len(list(series)) < 3:
            raise ValueError("need at least 3 points to classify scaling")
        return ScalingVerdict(0.0, 1.0, ScalingClass.NFS)
    if len(usable) < 3 or len({v for v, _ in usable}) < 3:
        raise ValueError("need at least 3 distinct usable volumes to classify scaling")
    logv = np.log([v for v, _ in usable])
    logf = np.log([f for _, f in usable])
    slope, intercept = np.polyfit(logv, logf, 1)
    pred = slope * logv + intercept
    ss_res = float(np.sum((logf - pred) ** 2))
    ss_tot = float(np.sum((logf - logf.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    p = float(slope)
    if p <= 1.0 + tol:
        cls = ScalingClass.NFS
    elif p >= 2.0 - tol:
        cls = ScalingClass.AFS
    else:
        cls = ScalingClass.INTERMEDIATE
    return ScalingVerdict(p, r2, cls)


def write_spectrum_csv(path, volumes_and_spectra: Iterable[Tuple[int, FluctuationSpectrum]],
                       float_fmt=lambda x: format(x, ".17g")) -> int:
    """Write per-(V, k) rows; returns the number of data rows."""
    count = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["V"] + FluctuationSpectrum.CSV_HEADER)
        for volume, spectrum in volumes_and_spectra:
            for row in spectrum.csv_rows():
                writer.writerow([volume] + [float_fmt(x) for x in row])
                count += 1
    return count
