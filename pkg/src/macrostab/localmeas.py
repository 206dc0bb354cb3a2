"""Projective local measurements and stability against them.

Conditional statistics are taken in the simultaneous limit: the two
projectors act at different sites and commute, so P(a, b) is evaluated
directly on the pre-measurement state.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from macrostab.cluster import normalized_correlation
from macrostab.fluctuation import max_fluctuation
from macrostab.statecore import SiteOperator, SpinState, _apply_matrix, _check_site

NULL_EVENT_TOL = 1e-14
DEGENERACY_GAP = 1e-9
DEFAULT_GRID_SIZE = 26


def spectral_projectors(op: SiteOperator) -> List[Tuple[float, np.ndarray]]:
    """(eigenvalue, 2x2 projector) pairs, degenerate eigenvalues merged."""
    op.require_hermitian()
    evals, evecs = np.linalg.eigh(op.matrix)
    groups: List[Tuple[float, np.ndarray]] = []
    for lam, vec in zip(evals, evecs.T):
        proj = np.outer(vec, vec.conj())
        if groups and abs(lam - groups[-1][0]) < DEGENERACY_GAP:
            prev_lam, prev_proj = groups[-1]
            groups[-1] = (prev_lam, prev_proj + proj)
        else:
            groups.append((float(lam), proj))
    return groups


@dataclass(frozen=True)
class MeasurementOutcome:
    eigenvalue: float
    probability: float
    posterior: SpinState


def outcome_probabilities(state: SpinState, obs: SiteOperator, site: int):
    """[(eigenvalue, probability, projected raw vector)] for a site observable."""
    _check_site(state.n_sites, site)
    out = []
    for lam, proj in spectral_projectors(obs):
        vec = _apply_matrix(state.amplitudes, proj, site, state.n_sites)
        out.append((lam, float(np.vdot(vec, vec).real), vec))
    return out


def measure_local(state: SpinState, obs: SiteOperator, site: int,
                  outcome: Optional[float] = None,
                  rng: Optional[np.random.Generator] = None) -> MeasurementOutcome:
    """Ideal von Neumann measurement of a Hermitian site observable.

    Either fix `outcome` to a target eigenvalue, or pass `rng` to draw
    one with Born weights.
    """
    branches = outcome_probabilities(state, obs, site)
    if outcome is not None:
        match = [b for b in branches if abs(b[0] - outcome) < DEGENERACY_GAP]
        if not match:
            raise ValueError(f"{outcome} is not an eigenvalue of {obs.label!r}")
        lam, prob, vec = match[0]
        if prob < NULL_EVENT_TOL:
            raise ValueError(f"conditioning on a null event: P({outcome}) = {prob}")
    else:
        if rng is None:
            raise ValueError("pass either a fixed outcome or an rng")
        probs = np.array([b[1] for b in branches])
        idx = rng.choice(len(branches), p=probs / probs.sum())
        lam, prob, vec = branches[idx]
    posterior = SpinState(state.n_sites, vec / np.sqrt(prob))
    return MeasurementOutcome(lam, prob, posterior)


def conditional_probability(state: SpinState, a_obs: SiteOperator, x: int, a: float,
                            b_obs: SiteOperator, y: int, b: float) -> Tuple[float, float, float]:
    """(P(a), P(b), P(b; a)) for commuting projective measurements at x != y."""
    if x == y:
        raise ValueError("conditional statistics need distinct sites")
    first = measure_local(state, a_obs, x, outcome=a)
    p_b = _branch_probability(state, b_obs, y, b)
    p_b_given_a = _branch_probability(first.posterior, b_obs, y, b)
    return first.probability, p_b, p_b_given_a


def _branch_probability(state: SpinState, obs: SiteOperator, site: int, value: float) -> float:
    for lam, prob, _ in outcome_probabilities(state, obs, site):
        if abs(lam - value) < DEGENERACY_GAP:
            return prob
    raise ValueError(f"{value} is not an eigenvalue of {obs.label!r}")


def direction_grid(n_directions: int = DEFAULT_GRID_SIZE) -> List[SiteOperator]:
    """Pauli axes plus n roughly uniform spin directions (Fibonacci sphere)."""
    ops = [SiteOperator.sigma_x(), SiteOperator.sigma_y(), SiteOperator.sigma_z()]
    golden = np.pi * (3.0 - np.sqrt(5.0))
    for i in range(n_directions):
        z = 1.0 - 2.0 * (i + 0.5) / n_directions
        theta = np.arccos(z)
        phi = (golden * i) % (2.0 * np.pi)
        ops.append(SiteOperator.from_direction(theta, phi))
    return ops


@dataclass(frozen=True)
class LMStabilityReport:
    x: int
    y: int
    epsilon: float
    deviation: float
    argmax_a_label: str = ""
    argmax_b_label: str = ""


def _measurement_branches(state: SpinState, ops: Sequence[SiteOperator], site: int):
    """Per grid operator: outcomes with probabilities and projected vectors."""
    return [outcome_probabilities(state, op, site) for op in ops]


def lm_stability_deviation(state: SpinState, x: int, y: int, epsilon: float,
                           search_grid: Optional[Sequence[SiteOperator]] = None) -> LMStabilityReport:
    """Worst |P(b; a) - P(b)| over grid observables, subject to P(a) >= epsilon."""
    if x == y:
        raise ValueError("need distinct measurement sites")
    grid = list(search_grid) if search_grid is not None else direction_grid()
    branches_x = _measurement_branches(state, grid, x)
    branches_y = _measurement_branches(state, grid, y)
    best = 0.0
    best_a = best_b = ""
    for op_a, bx in zip(grid, branches_x):
        for lam_a, p_a, vec_a in bx:
            if p_a < epsilon:
                continue
            cond = SpinState(state.n_sites, vec_a / np.sqrt(p_a))
            for op_b, by in zip(grid, branches_y):
                cond_branches = outcome_probabilities(cond, op_b, y)
                for (lam_b, p_b, _), (_, p_ba, _) in zip(by, cond_branches):
                    dev = abs(p_ba - p_b)
                    if dev > best:
                        best, best_a, best_b = dev, op_a.label, op_b.label
    return LMStabilityReport(x, y, epsilon, min(best, 1.0), best_a, best_b)


@dataclass(frozen=True)
class TheoremBoundCheck:
    lhs: float       # worst |P(b;a) - P(b)| over admissible projector pairs
    rhs: float       # sqrt(epsilon)
    holds: bool
    skipped: bool    # precondition (correlation <= epsilon) not met
    correlation: float


def theorem_bound_check(state: SpinState, x: int, y: int, epsilon: float,
                        search_grid: Optional[Sequence[SiteOperator]] = None,
                        slack: float = 1e-9) -> TheoremBoundCheck:
    """Check |P(b;a) - P(b)| <= sqrt(eps) whenever the normalized correlation
    between x and y is at most eps and P(a) >= eps."""
    corr = normalized_correlation(state, x, y)
    if corr > epsilon:
        return TheoremBoundCheck(np.nan, np.sqrt(epsilon), False, True, corr)
    report = lm_stability_deviation(state, x, y, epsilon, search_grid)
    rhs = float(np.sqrt(epsilon))
    return TheoremBoundCheck(report.deviation, rhs, report.deviation <= rhs + slack,
                             False, corr)


class CascadePolicy(enum.Enum):
    RANDOM_SITE_RANDOM_AXIS = "RANDOM_SITE_RANDOM_AXIS"
    RANDOM_SITE_Z = "RANDOM_SITE_Z"
    SEQUENTIAL_Z = "SEQUENTIAL_Z"


@dataclass(frozen=True)
class CascadeStep:
    step: int
    site: int
    axis_theta: float
    axis_phi: float
    outcome: float
    max_fluct: float

    CSV_HEADER = ["step", "site", "axis_theta", "axis_phi", "outcome", "max_fluct"]


@dataclass(frozen=True)
class CascadeTrace:
    steps: Tuple[CascadeStep, ...]
    count: int
    converged: bool
    final_state: SpinState
    final_max_fluct: float


def _peak_fluctuation(state: SpinState) -> float:
    return max_fluctuation(state).peak.max_fluct


def measurement_cascade(state: SpinState, policy: CascadePolicy, seed: int,
                        stop_threshold: float = 2.0,
                        max_steps: Optional[int] = None) -> CascadeTrace:
    """Repeat local measurements until the worst additive fluctuation drops
    to NFS level (<= stop_threshold * V), capping at N^2 steps."""
    rng = np.random.default_rng(seed)
    n = state.n_sites
    cap = max_steps if max_steps is not None else n * n
    current = state
    fluct = _peak_fluctuation(current)
    steps: List[CascadeStep] = []
    while fluct > stop_threshold * n and len(steps) < cap:
        if policy is CascadePolicy.SEQUENTIAL_Z:
            site = len(steps) % n
        else:
            site = int(rng.integers(n))
        if policy is CascadePolicy.RANDOM_SITE_RANDOM_AXIS:
            theta = float(np.arccos(rng.uniform(-1.0, 1.0)))
            phi = float(rng.uniform(0.0, 2.0 * np.pi))
            obs = SiteOperator.from_direction(theta, phi)
        else:
            theta, phi = 0.0, 0.0
            obs = SiteOperator.sigma_z()
        outcome = measure_local(current, obs, site, rng=rng)
        current = outcome.posterior
        fluct = _peak_fluctuation(current)
        steps.append(CascadeStep(len(steps), site, theta, phi, outcome.eigenvalue, fluct))
    converged = fluct <= stop_threshold * n
    return CascadeTrace(tuple(steps), len(steps), converged, current, fluct)
