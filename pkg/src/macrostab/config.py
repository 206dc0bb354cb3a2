"""Flat key-value experiment configuration with dotted section keys.

Format: one `key = value` per line, `#` starts a comment, blank lines
ignored.  Lists are comma separated.  The full schema is documented in
docs/formats.md; unknown keys are rejected so manifests stay exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from macrostab.cluster import DEFAULT_EPSILON_GRID
from macrostab.decoherence import (
    NoiseModel,
    SpatialKernel,
    TemporalKind,
    TemporalModel,
)
from macrostab.localmeas import CascadePolicy
from macrostab.models import ModelSpec, StateFamily
from macrostab.statecore import SiteOperator

EXPERIMENTS = ("scaling", "cluster", "gamma", "lm", "cascade")

_KNOWN_KEYS = {
    "experiment",
    "model.family", "model.n_sites", "model.seed",
    "volumes",
    "noise.lambda", "noise.coupling", "noise.spatial", "noise.temporal",
    "noise.intensity", "noise.variance", "noise.tau_c", "noise.custom_kernel",
    "epsilon",
    "trajectories", "dt", "n_steps", "store_every",
    "fit.t_lo", "fit.t_hi",
    "lm.epsilon", "lm.n_grid",
    "cascade.policy", "cascade.runs", "cascade.stop_threshold",
    "master_seed",
}


class ConfigError(ValueError):
    """Invalid configuration; maps to CLI exit code 2."""


def parse_flat(text: str) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def render_flat(entries: Dict[str, str]) -> str:
    return "\n".join(f"{k} = {entries[k]}" for k in sorted(entries)) + "\n"


def _get_int(entries, key, default=None):
    if key not in entries:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return int(entries[key])
    except ValueError:
        raise ConfigError(f"{key}: expected integer, got {entries[key]!r}") from None


def _get_float(entries, key, default=None):
    if key not in entries:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return float(entries[key])
    except ValueError:
        raise ConfigError(f"{key}: expected number, got {entries[key]!r}") from None


def _get_list(entries, key, cast, default=None):
    if key not in entries:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return [cast(part.strip()) for part in entries[key].split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"{key}: bad list {entries[key]!r}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    model: ModelSpec
    volumes: Tuple[int, ...]
    noise: Optional[NoiseModel]
    epsilon_values: Tuple[float, ...]
    trajectories: int
    dt: float
    n_steps: int
    store_every: int
    fit_window: Tuple[float, float]
    lm_epsilon: float
    lm_n_grid: int
    cascade_policy: CascadePolicy
    cascade_runs: int
    cascade_stop_threshold: float
    master_seed: int
    raw: Dict[str, str] = field(default_factory=dict, compare=False)


def _build_noise(entries: Dict[str, str]) -> Optional[NoiseModel]:
    if "noise.lambda" not in entries:
        return None
    lam = _get_float(entries, "noise.lambda")
    coupling = entries.get("noise.coupling", "sz")
    try:
        op = SiteOperator.from_label(coupling)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    try:
        spatial = SpatialKernel(entries.get("noise.spatial", "WHITE"))
    except ValueError:
        raise ConfigError(f"noise.spatial: unknown kernel {entries['noise.spatial']!r}") from None
    try:
        kind = TemporalKind(entries.get("noise.temporal", "WHITE"))
    except ValueError:
        raise ConfigError(f"noise.temporal: unknown kind {entries['noise.temporal']!r}") from None
    temporal = TemporalModel(
        kind,
        intensity=_get_float(entries, "noise.intensity", 1.0),
        variance=_get_float(entries, "noise.variance", 1.0),
        tau_c=_get_float(entries, "noise.tau_c", 1.0 if kind is TemporalKind.OU else 0.0),
    )
    custom = None
    if spatial is SpatialKernel.CUSTOM:
        custom = tuple(_get_list(entries, "noise.custom_kernel", float))
    try:
        return NoiseModel(lam, op, spatial, temporal, custom)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(text: str, seed_override: Optional[int] = None) -> ExperimentConfig:
    entries = parse_flat(text)
    experiment = entries.get("experiment", "")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {experiment!r}")
    try:
        family = StateFamily(entries.get("model.family", ""))
    except ValueError:
        raise ConfigError(f"model.family: unknown family {entries.get('model.family')!r}") from None
    n_sites = _get_int(entries, "model.n_sites", 8)
    seed = _get_int(entries, "model.seed", 0) if "model.seed" in entries else None
    try:
        model = ModelSpec(family, n_sites, seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    volumes = tuple(_get_list(entries, "volumes", int, default=[]))
    if family in (StateFamily.NEEL_PLUS, StateFamily.NEEL_MINUS, StateFamily.CAT):
        for v in volumes:
            if v % 2 != 0:
                raise ConfigError(f"volumes: {family.value} needs even volumes, got {v}")
    master_seed = _get_int(entries, "master_seed", 0)
    if seed_override is not None:
        master_seed = seed_override
        entries = dict(entries)
        entries["master_seed"] = str(master_seed)
    t_lo = _get_float(entries, "fit.t_lo", 0.0)
    t_hi = _get_float(entries, "fit.t_hi", 0.0)
    if "fit.t_lo" in entries and "fit.t_hi" in entries and t_hi <= t_lo:
        raise ConfigError("fit window must satisfy t_lo < t_hi")
    try:
        policy = CascadePolicy(entries.get("cascade.policy", "RANDOM_SITE_Z"))
    except ValueError:
        raise ConfigError(f"cascade.policy: unknown policy {entries['cascade.policy']!r}") from None
    return ExperimentConfig(
        experiment=experiment,
        model=model,
        volumes=volumes,
        noise=_build_noise(entries),
        epsilon_values=tuple(_get_list(entries, "epsilon", float,
                                       default=list(DEFAULT_EPSILON_GRID))),
        trajectories=_get_int(entries, "trajectories", 0),
        dt=_get_float(entries, "dt", 0.01),
        n_steps=_get_int(entries, "n_steps", 0),
        store_every=_get_int(entries, "store_every", 1),
        fit_window=(t_lo, t_hi),
        lm_epsilon=_get_float(entries, "lm.epsilon", 0.01),
        lm_n_grid=_get_int(entries, "lm.n_grid", 26),
        cascade_policy=policy,
        cascade_runs=_get_int(entries, "cascade.runs", 100),
        cascade_stop_threshold=_get_float(entries, "cascade.stop_threshold", 2.0),
        master_seed=master_seed,
        raw=dict(entries),
    )
