"""Decoherence under weak classical noise: rate formula and trajectories.

The noise couples through H_int = lambda * sum_x f(x, t) a(x), with f a
stationary zero-mean Gaussian field whose covariance factorizes into a
spatial kernel on the ring and a temporal part (white, or
Ornstein-Uhlenbeck with correlation time tau_c).

Fourier convention: C(x - x', t - t') = sum_k int (dw/2pi) g(k, w)
e^{ik(x-x') - iw(t-t')}, so sum_k g(k) equals the single-site temporal
intensity int C(0, t) dt independently of the volume.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm

from macrostab.fluctuation import ScalingVerdict, classify_scaling
from macrostab.models import site_spin_values
from macrostab.statecore import (
    AdditiveOperator,
    SiteOperator,
    SpinState,
    additive_fluctuation,
    wavevector_grid,
)

KERNEL_PSD_TOL = 1e-12
DENSE_EVOLVE_MAX_SITES = 10


def derive_seed(master_seed: int, index: int) -> int:
    """Deterministic per-trajectory seed: first 8 bytes (little endian) of
    blake2b over the two integers rendered as '<master>:<index>'."""
    digest = hashlib.blake2b(f"{master_seed}:{index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class SpatialKernel(enum.Enum):
    WHITE = "WHITE"          # delta_{xx'}
    UNIFORM = "UNIFORM"      # all ones
    STAGGERED = "STAGGERED"  # (-1)^{x-x'}
    CUSTOM = "CUSTOM"


class TemporalKind(enum.Enum):
    WHITE = "WHITE"
    OU = "OU"


@dataclass(frozen=True)
class TemporalModel:
    kind: TemporalKind
    intensity: float = 1.0       # c~ = int C(0,t) dt, white noise
    variance: float = 1.0        # OU stationary variance
    tau_c: float = 0.0           # OU correlation time

    def __post_init__(self):
        if self.kind is TemporalKind.WHITE and self.intensity <= 0:
            raise ValueError("white temporal intensity must be positive")
        if self.kind is TemporalKind.OU and (self.variance <= 0 or self.tau_c <= 0):
            raise ValueError("OU noise needs positive variance and tau_c")

    @property
    def effective_intensity(self) -> float:
        """int C_temporal(t) dt."""
        if self.kind is TemporalKind.WHITE:
            return self.intensity
        return 2.0 * self.variance * self.tau_c


@dataclass(frozen=True)
class SpectralIntensity:
    wavevectors: np.ndarray
    g_of_k: np.ndarray

    def total(self) -> float:
        return float(np.sum(self.g_of_k))


@dataclass(frozen=True)
class NoiseModel:
    lam: float
    coupling_op: SiteOperator
    spatial: SpatialKernel
    temporal: TemporalModel
    custom_kernel: Optional[Tuple[float, ...]] = None  # C_sp(x), x = 0..N-1

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("coupling strength lambda must be positive")
        if self.spatial is SpatialKernel.CUSTOM:
            if self.custom_kernel is None:
                raise ValueError("CUSTOM spatial kernel requires explicit values")
            spec = np.fft.fft(np.asarray(self.custom_kernel, dtype=float)).real
            if np.min(spec) < -KERNEL_PSD_TOL * max(1.0, np.max(np.abs(spec))):
                raise ValueError("custom spatial kernel is not positive semidefinite")

    def spatial_covariance(self, n_sites: int) -> np.ndarray:
        """First row C_sp(x) of the circulant spatial covariance, C_sp(0) = 1."""
        if self.spatial is SpatialKernel.WHITE:
            row = np.zeros(n_sites)
            row[0] = 1.0
        elif self.spatial is SpatialKernel.UNIFORM:
            row = np.ones(n_sites)
        elif self.spatial is SpatialKernel.STAGGERED:
            if n_sites % 2 != 0:
                raise ValueError("staggered kernel needs an even ring")
            row = (-1.0) ** np.arange(n_sites)
        else:
            row = np.asarray(self.custom_kernel, dtype=float)
            if row.size != n_sites:
                raise ValueError(f"custom kernel length {row.size} != n_sites {n_sites}")
        return row

    def spectral_intensity(self, n_sites: int) -> SpectralIntensity:
        """g(k) = c~ * (1/N) sum_x C_sp(x) e^{-ikx} on the grid."""
        row = self.spatial_covariance(n_sites)
        spec = np.fft.fft(row).real / n_sites
        if np.min(spec) < -1e-12:
            raise ValueError("spatial kernel is not positive semidefinite")
        spec = np.clip(spec, 0.0, None)
        g = self.temporal.effective_intensity * spec
        return SpectralIntensity(wavevector_grid(n_sites), g)


def gamma_formula(state: SpinState, noise: NoiseModel) -> float:
    """Predicted rate: lambda^2 sum_k g(k) <dA_k^dag dA_k>."""
    spec = noise.spectral_intensity(state.n_sites)
    total = 0.0
    for k, g in zip(spec.wavevectors, spec.g_of_k):
        if g == 0.0:
            continue
        total += g * additive_fluctuation(state, AdditiveOperator(noise.coupling_op, float(k)))
    return noise.lam**2 * total


def _spatial_factor(noise: NoiseModel, n_sites: int) -> np.ndarray:
    """L with L L^T equal to the circulant spatial covariance (PSD factor)."""
    row = noise.spatial_covariance(n_sites)
    cov = np.empty((n_sites, n_sites))
    for x in range(n_sites):
        cov[x] = np.roll(row, x)
    evals, evecs = np.linalg.eigh(cov)
    evals = np.clip(evals, 0.0, None)
    return evecs * np.sqrt(evals)


def sample_noise_field(noise: NoiseModel, n_sites: int, dt: float, n_steps: int,
                       seed: int) -> np.ndarray:
    """One realization f[x, j] of the field, piecewise constant per step.

    White temporal noise uses per-step variance c~/dt so that the
    integrated field reproduces the white-noise covariance exactly.
    OU noise uses the exact one-step autoregression, which requires
    dt well below tau_c only for resolving the system dynamics.
    """
    rng = np.random.default_rng(seed)
    factor = _spatial_factor(noise, n_sites)
    temporal = noise.temporal
    if temporal.kind is TemporalKind.WHITE:
        scale = np.sqrt(temporal.intensity / dt)
        white = rng.standard_normal((n_steps, n_sites))
        return scale * (white @ factor.T).T
    # OU: one unit-variance process per spatial mode, exact discretization
    a = np.exp(-dt / temporal.tau_c)
    b = np.sqrt(1.0 - a * a)
    modes = np.empty((n_steps, n_sites))
    current = rng.standard_normal(n_sites)
    for j in range(n_steps):
        modes[j] = current
        current = a * current + b * rng.standard_normal(n_sites)
    return np.sqrt(temporal.variance) * (modes @ factor.T).T


def _coupling_diag_table(op: SiteOperator, n_sites: int) -> np.ndarray:
    """(n_sites, 2^N) table of a(x) diagonal values when a is diagonal."""
    s = site_spin_values(n_sites)  # +1 spin-up, -1 spin-down
    up = op.matrix[0, 0].real
    down = op.matrix[1, 1].real
    return np.where(s > 0, up, down)


def _embed_site_matrix(matrix: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    left = np.eye(2**site)
    right = np.eye(2 ** (n_sites - 1 - site))
    return np.kron(np.kron(left, matrix), right)


def evolve_trajectory(state: SpinState, hamiltonian: Optional[np.ndarray],
                      noise: NoiseModel, field: np.ndarray, dt: float,
                      store_every: int = 1) -> List[SpinState]:
    """Exact step-frozen unitary evolution under H + lambda sum_x f(x,t_j) a(x).

    `hamiltonian` is either a diagonal vector in the z-basis, a dense
    matrix (N <= 10), or None for H = 0.  Returns states at times
    0, store_every*dt, 2*store_every*dt, ...
    """
    n = state.n_sites
    n_steps = field.shape[1]
    if field.shape[0] != n:
        raise ValueError("noise field has the wrong number of sites")
    diag_coupling = noise.coupling_op.is_diagonal
    diag_h = hamiltonian is None or hamiltonian.ndim == 1
    stored = [state]
    psi = state.amplitudes.copy()
    if diag_coupling and diag_h:
        table = _coupling_diag_table(noise.coupling_op, n)
        h_diag = np.zeros(2**n) if hamiltonian is None else np.asarray(hamiltonian, dtype=float)
        for j in range(n_steps):
            d = h_diag + noise.lam * (field[:, j] @ table)
            psi = psi * np.exp(-1.0j * d * dt)
            if (j + 1) % store_every == 0:
                stored.append(SpinState(n, psi))
        return stored
    if n > DENSE_EVOLVE_MAX_SITES:
        raise ValueError(f"dense evolution limited to {DENSE_EVOLVE_MAX_SITES} sites")
    if hamiltonian is None:
        h_dense = np.zeros((2**n, 2**n), dtype=complex)
    elif hamiltonian.ndim == 1:
        h_dense = np.diag(hamiltonian.astype(complex))
    else:
        h_dense = np.asarray(hamiltonian, dtype=complex)
    site_mats = [_embed_site_matrix(noise.coupling_op.matrix, x, n) for x in range(n)]
    for j in range(n_steps):
        h_step = h_dense.copy()
        for x in range(n):
            h_step += noise.lam * field[x, j] * site_mats[x]
        psi = expm(-1.0j * h_step * dt) @ psi
        nrm = np.linalg.norm(psi)
        if abs(nrm - 1.0) > 1e-8:
            raise RuntimeError(f"step unitary lost norm ({nrm}); reduce dt")
        psi = psi / nrm
        if (j + 1) % store_every == 0:
            stored.append(SpinState(n, psi))
    return stored


@dataclass(frozen=True)
class PurityCurve:
    times: np.ndarray
    purity: np.ndarray
    stderr: np.ndarray

    CSV_HEADER = ["t", "purity", "stderr"]


def ensemble_purity(trajectories: Sequence[Sequence[SpinState]],
                    dt_between_stored: float) -> PurityCurve:
    """Tr[rho(t)^2] from M independent trajectories.

    Estimator: Tr rho^2 = (1/M^2) (M + sum_{i != j} |<psi_i|psi_j>|^2),
    exact for the empirical mixture; jackknife standard errors.
    """
    m = len(trajectories)
    if m < 2:
        raise ValueError("need at least 2 trajectories")
    n_times = len(trajectories[0])
    if any(len(t) != n_times for t in trajectories):
        raise ValueError("trajectories must share the stored time grid")
    times = dt_between_stored * np.arange(n_times)
    purity = np.empty(n_times)
    stderr = np.empty(n_times)
    for t in range(n_times):
        mat = np.stack([traj[t].amplitudes for traj in trajectories])
        g2 = np.abs(mat @ mat.conj().T) ** 2
        total = float(np.sum(g2))
        row = np.sum(g2, axis=1)
        off = total - float(np.trace(g2))
        purity[t] = (m + off) / m**2
        # leave-one-out estimates
        off_i = off - 2.0 * (row - np.diag(g2))
        p_i = ((m - 1) + off_i) / (m - 1) ** 2
        stderr[t] = np.sqrt((m - 1) / m * np.sum((p_i - np.mean(p_i)) ** 2))
    return PurityCurve(times, purity, stderr)


def gamma_measured(curve: PurityCurve, window: Tuple[float, float]) -> Tuple[float, float]:
    """Slope of -0.5 ln(purity) vs t over [t_lo, t_hi], with its stderr.

    Weighted least squares when the curve carries nonzero error bars,
    ordinary least squares otherwise.
    """
    t_lo, t_hi = window
    if t_hi <= t_lo:
        raise ValueError("fit window must satisfy t_lo < t_hi")
    mask = (curve.times >= t_lo) & (curve.times <= t_hi)
    if np.count_nonzero(mask) < 2:
        raise ValueError("fit window contains fewer than 2 points")
    t = curve.times[mask]
    p = curve.purity[mask]
    sig_p = curve.stderr[mask]
    y = -0.5 * np.log(p)
    design = np.column_stack([t, np.ones_like(t)])
    if np.all(sig_p > 0):
        sig_y = sig_p / (2.0 * p)
        w = 1.0 / sig_y**2
        cov = np.linalg.inv(design.T @ (design * w[:, None]))
        beta = cov @ (design.T @ (w * y))
        return float(beta[0]), float(np.sqrt(cov[0, 0]))
    beta, res, _, _ = np.linalg.lstsq(design, y, rcond=None)
    dof = max(len(t) - 2, 1)
    s2 = float(res[0]) / dof if res.size else 0.0
    cov = s2 * np.linalg.inv(design.T @ design)
    return float(beta[0]), float(np.sqrt(max(cov[0, 0], 0.0)))


@dataclass(frozen=True)
class FragilityResult:
    points: Tuple[Tuple[int, float], ...]  # (V, gamma_formula)
    verdict: ScalingVerdict
    fragile: bool

    CSV_HEADER = ["V", "gamma_formula"]


def fragility_scan(state_family: Callable[[int], SpinState], noise: NoiseModel,
                   volumes: Sequence[int], fragile_delta: float = 0.2) -> FragilityResult:
    """Gamma(V) from the rate formula plus a fitted volume exponent 1 + delta."""
    if len(volumes) < 3:
        raise ValueError("need at least 3 volumes for a fragility scan")
    points = tuple((v, gamma_formula(state_family(v), noise)) for v in volumes)
    verdict = classify_scaling(points, tol=fragile_delta)
    return FragilityResult(points, verdict, verdict.exponent > 1.0 + fragile_delta)
