"""Named model states and the antiferromagnetic Ising Hamiltonian."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from macrostab.statecore import SpinState


class StateFamily(enum.Enum):
    NEEL_PLUS = "NEEL_PLUS"
    NEEL_MINUS = "NEEL_MINUS"
    CAT = "CAT"
    PRODUCT_Z = "PRODUCT_Z"
    PRODUCT_X = "PRODUCT_X"
    SINGLET_PAIR_PRODUCT = "SINGLET_PAIR_PRODUCT"
    RANDOM_PRODUCT = "RANDOM_PRODUCT"
    RANDOM_STATE = "RANDOM_STATE"


_EVEN_ONLY = {StateFamily.NEEL_PLUS, StateFamily.NEEL_MINUS, StateFamily.CAT}


@dataclass(frozen=True)
class ModelSpec:
    family: StateFamily
    n_sites: int
    seed: Optional[int] = None

    def __post_init__(self):
        if self.family in _EVEN_ONLY and self.n_sites % 2 != 0:
            raise ValueError(f"{self.family.value} requires even n_sites, got {self.n_sites}")


def _neel_index(n_sites: int, down_on_even: bool) -> int:
    """Basis index of the alternating configuration (bit set = spin down)."""
    idx = 0
    for x in range(n_sites):
        down = (x % 2 == 0) if down_on_even else (x % 2 == 1)
        if down:
            idx |= 1 << (n_sites - 1 - x)
    return idx


def neel_plus(n_sites: int) -> SpinState:
    """|up down up ... down>."""
    vec = np.zeros(2**n_sites, dtype=complex)
    vec[_neel_index(n_sites, down_on_even=False)] = 1.0
    return SpinState(n_sites, vec)


def neel_minus(n_sites: int) -> SpinState:
    """|down up down ... up>."""
    vec = np.zeros(2**n_sites, dtype=complex)
    vec[_neel_index(n_sites, down_on_even=True)] = 1.0
    return SpinState(n_sites, vec)


def cat_state(n_sites: int) -> SpinState:
    """Equal superposition of the two alternating configurations."""
    vec = np.zeros(2**n_sites, dtype=complex)
    vec[_neel_index(n_sites, down_on_even=False)] = 1.0 / np.sqrt(2.0)
    vec[_neel_index(n_sites, down_on_even=True)] = 1.0 / np.sqrt(2.0)
    return SpinState(n_sites, vec)


def product_state(single_site_kets) -> SpinState:
    """Tensor product of normalized single-site kets (2-vectors)."""
    vec = np.array([1.0], dtype=complex)
    for ket in single_site_kets:
        ket = np.asarray(ket, dtype=complex)
        ket = ket / np.linalg.norm(ket)
        vec = np.kron(vec, ket)
    return SpinState(len(single_site_kets), vec)


def build_state(spec: ModelSpec) -> SpinState:
    n = spec.n_sites
    fam = spec.family
    if fam is StateFamily.NEEL_PLUS:
        return neel_plus(n)
    if fam is StateFamily.NEEL_MINUS:
        return neel_minus(n)
    if fam is StateFamily.CAT:
        return cat_state(n)
    if fam is StateFamily.PRODUCT_Z:
        return product_state([(1.0, 0.0)] * n)
    if fam is StateFamily.PRODUCT_X:
        return product_state([(1.0, 1.0)] * n)
    if fam is StateFamily.SINGLET_PAIR_PRODUCT:
        if n < 3:
            raise ValueError("singlet-pair product needs at least 3 sites")
        pair = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / np.sqrt(2.0)
        rest = np.zeros(2 ** (n - 2), dtype=complex)
        rest[0] = 1.0
        return SpinState(n, np.kron(pair, rest))
    if fam is StateFamily.RANDOM_PRODUCT:
        rng = np.random.default_rng(spec.seed)
        kets = []
        for _ in range(n):
            # Haar-uniform direction on the Bloch sphere
            theta = np.arccos(rng.uniform(-1.0, 1.0))
            phi = rng.uniform(0.0, 2.0 * np.pi)
            kets.append((np.cos(theta / 2.0), np.exp(1.0j * phi) * np.sin(theta / 2.0)))
        return product_state(kets)
    if fam is StateFamily.RANDOM_STATE:
        rng = np.random.default_rng(spec.seed)
        vec = rng.normal(size=2**n) + 1.0j * rng.normal(size=2**n)
        return SpinState.from_vector(vec, normalize=True)
    raise ValueError(f"unknown family {fam!r}")


def site_spin_values(n_sites: int) -> np.ndarray:
    """(n_sites, 2^N) array of sigma_z eigenvalues per site and basis index."""
    idx = np.arange(2**n_sites, dtype=np.int64)
    shifts = n_sites - 1 - np.arange(n_sites)
    bits = (idx[None, :] >> shifts[:, None]) & 1
    return 1.0 - 2.0 * bits


def ising_afm_hamiltonian(n_sites: int, coupling: float) -> np.ndarray:
    """Diagonal of H = J sum_x sigma_z(x) sigma_z(x+1) on the periodic ring."""
    if coupling <= 0:
        raise ValueError("antiferromagnetic coupling must be positive")
    s = site_spin_values(n_sites)
    return coupling * np.sum(s * np.roll(s, -1, axis=0), axis=0)
