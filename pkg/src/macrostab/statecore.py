"""Exact pure states of spin-1/2 chains and additive-operator fluctuations.

A chain of N sites is stored as a dense complex vector over the 2^N
spin-z configurations.  Site x corresponds to bit (N-1-x) of the basis
index, with bit 0 meaning spin up, so the configuration string reads
left to right as sites 0..N-1.  Rings are periodic and the wavevector
grid is {2*pi*m/N : m = 0..N-1}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

# Dense storage means 2^N amplitudes; keep desk-scale.
MAX_SITES = 20
NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


def wavevector_grid(n_sites: int) -> np.ndarray:
    """Discrete wavevectors 2*pi*m/N of the periodic ring."""
    return 2.0 * np.pi * np.arange(n_sites) / n_sites


@dataclass(frozen=True)
class SiteOperator:
    """A 2x2 operator acting at a single site."""

    matrix: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"site operator must be 2x2, got shape {m.shape}")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def is_hermitian(self) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= HERMITIAN_TOL)

    def require_hermitian(self) -> None:
        if not self.is_hermitian:
            raise ValueError(f"operator {self.label!r} is not Hermitian")

    @property
    def is_diagonal(self) -> bool:
        return bool(abs(self.matrix[0, 1]) + abs(self.matrix[1, 0]) <= 1e-14)

    @staticmethod
    def sigma_x() -> "SiteOperator":
        return SiteOperator(PAULI_X, "sx")

    @staticmethod
    def sigma_y() -> "SiteOperator":
        return SiteOperator(PAULI_Y, "sy")

    @staticmethod
    def sigma_z() -> "SiteOperator":
        return SiteOperator(PAULI_Z, "sz")

    @staticmethod
    def from_label(label: str) -> "SiteOperator":
        try:
            return {"sx": SiteOperator.sigma_x,
                    "sy": SiteOperator.sigma_y,
                    "sz": SiteOperator.sigma_z}[label]()
        except KeyError:
            raise ValueError(f"unknown operator label {label!r}") from None

    @staticmethod
    def from_direction(theta: float, phi: float) -> "SiteOperator":
        """Spin component n.sigma along the unit direction (theta, phi)."""
        n = (np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta))
        m = n[0] * PAULI_X + n[1] * PAULI_Y + n[2] * PAULI_Z
        return SiteOperator(m, f"dir({theta:.4f},{phi:.4f})")


@dataclass(frozen=True)
class SpinState:
    """Normalized pure state of an N-site spin-1/2 ring.

    One site per unit cell, so the volume V equals n_sites.
    """

    n_sites: int
    amplitudes: np.ndarray

    def __post_init__(self):
        n = self.n_sites
        if n < 1:
            raise ValueError(f"need at least 1 site, got {n}")
        if n > MAX_SITES:
            raise ValueError(f"n_sites={n} exceeds dense-storage cap {MAX_SITES}")
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (2**n,):
            raise ValueError(f"amplitude vector must have length {2**n}, got {amp.shape}")
        norm2 = float(np.vdot(amp, amp).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: |psi|^2 = {norm2!r}")
        amp = amp.copy()
        amp.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)

    @property
    def volume(self) -> int:
        return self.n_sites

    @staticmethod
    def from_vector(vec: np.ndarray, normalize: bool = False) -> "SpinState":
        vec = np.asarray(vec, dtype=complex)
        n = int(round(np.log2(vec.size)))
        if 2**n != vec.size:
            raise ValueError(f"vector length {vec.size} is not a power of two")
        if normalize:
            nrm = np.linalg.norm(vec)
            if nrm == 0.0:
                raise ValueError("cannot normalize the zero vector")
            vec = vec / nrm
        return SpinState(n, vec)

    def fidelity(self, other: "SpinState") -> float:
        """|<self|other>|^2."""
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)

    # --- serialization: n_sites + interleaved re/im float64, little endian ---

    def to_bytes(self) -> bytes:
        header = np.array([self.n_sites], dtype="<u8").tobytes()
        inter = np.empty(2 * self.amplitudes.size, dtype="<f8")
        inter[0::2] = self.amplitudes.real
        inter[1::2] = self.amplitudes.imag
        return header + inter.tobytes()

    @staticmethod
    def from_bytes(raw: bytes) -> "SpinState":
        n = int(np.frombuffer(raw[:8], dtype="<u8")[0])
        inter = np.frombuffer(raw[8:], dtype="<f8")
        if inter.size != 2 * 2**n:
            raise ValueError("byte payload length inconsistent with n_sites")
        return SpinState(n, inter[0::2] + 1.0j * inter[1::2])

    def to_json(self) -> str:
        inter = np.empty(2 * self.amplitudes.size, dtype=float)
        inter[0::2] = self.amplitudes.real
        inter[1::2] = self.amplitudes.imag
        return json.dumps({"n_sites": self.n_sites, "amplitudes": inter.tolist()})

    @staticmethod
    def from_json(text: str) -> "SpinState":
        obj = json.loads(text)
        inter = np.asarray(obj["amplitudes"], dtype=float)
        return SpinState(int(obj["n_sites"]), inter[0::2] + 1.0j * inter[1::2])


@dataclass(frozen=True)
class AdditiveOperator:
    """A_k = sum_x a(x) e^{-ikx} built from one single-site operator."""

    base: SiteOperator
    wavevector: float
    grid_tol: float = field(default=1e-9, repr=False)

    def validate_grid(self, n_sites: int) -> None:
        k = self.wavevector
        m = k * n_sites / (2.0 * np.pi)
        if abs(m - round(m)) > self.grid_tol * n_sites:
            raise ValueError(f"wavevector {k} not on the 2*pi*m/{n_sites} grid")


def _check_site(n_sites: int, site: int) -> None:
    if not 0 <= site < n_sites:
        raise ValueError(f"site {site} out of range for {n_sites} sites")


def _apply_matrix(vec: np.ndarray, matrix: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    """matrix acting at `site` on a raw amplitude vector."""
    left = 2**site
    right = 2 ** (n_sites - 1 - site)
    v = vec.reshape(left, 2, right)
    return np.einsum("ab,ibj->iaj", matrix, v).reshape(vec.size)


def apply_site_operator(state: SpinState, op: SiteOperator, site: int):
    """op(site)|psi>, generally unnormalized.  Returns (vector, norm)."""
    _check_site(state.n_sites, site)
    out = _apply_matrix(state.amplitudes, op.matrix, site, state.n_sites)
    return out, float(np.linalg.norm(out))


def expectation(state: SpinState, ops) -> complex:
    """<psi| op_1(x_1) op_2(x_2) ... |psi> with the product in listed order."""
    vec = state.amplitudes
    for op, site in reversed(list(ops)):
        _check_site(state.n_sites, site)
        vec = _apply_matrix(vec, op.matrix, site, state.n_sites)
    return complex(np.vdot(state.amplitudes, vec))


def connected_correlator(state: SpinState, a: SiteOperator, x: int,
                         b: SiteOperator, y: int) -> complex:
    """<a(x) b(y)> - <a(x)><b(y)> for distinct sites x != y."""
    if x == y:
        raise ValueError("connected correlator requires distinct sites")
    ab = expectation(state, [(a, x), (b, y)])
    return ab - expectation(state, [(a, x)]) * expectation(state, [(b, y)])


def apply_additive_operator(state: SpinState, addop: AdditiveOperator) -> np.ndarray:
    """Raw vector A_k|psi> = sum_x e^{-ikx} a(x)|psi>."""
    addop.validate_grid(state.n_sites)
    n = state.n_sites
    phases = np.exp(-1.0j * addop.wavevector * np.arange(n))
    out = np.zeros_like(state.amplitudes)
    for x in range(n):
        out += phases[x] * _apply_matrix(state.amplitudes, addop.base.matrix, x, n)
    return out


def additive_fluctuation(state: SpinState, addop: AdditiveOperator) -> float:
    """<psi| dA_k^dag dA_k |psi> with dA_k = A_k - <A_k>.  Real, >= 0."""
    phi = apply_additive_operator(state, addop)
    mean = complex(np.vdot(state.amplitudes, phi))
    dvec = phi - mean * state.amplitudes
    return float(np.vdot(dvec, dvec).real)
