"""Experiment drivers: run a validated config, write manifest and tables.

All randomness flows from the master seed through blake2b-derived
per-task seeds, and every reduction runs in a fixed order, so outputs
are byte-identical for any thread count.
"""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from macrostab import __version__
from macrostab.cluster import cluster_report, cp_verdict
from macrostab.config import ConfigError, ExperimentConfig
from macrostab.decoherence import (
    TemporalKind,
    derive_seed,
    ensemble_purity,
    evolve_trajectory,
    fragility_scan,
    gamma_formula,
    gamma_measured,
    sample_noise_field,
)
from macrostab.fluctuation import classify_scaling, max_fluctuation, FluctuationSpectrum
from macrostab.localmeas import lm_stability_deviation, measurement_cascade
from macrostab.models import ModelSpec, StateFamily, build_state, ising_afm_hamiltonian


def fmt(x) -> str:
    """17 significant digits: round-trips float64 exactly."""
    return format(float(x), ".17g")


@dataclass
class ExperimentRecord:
    manifest_path: str
    tables: List[Tuple[str, int]] = field(default_factory=list)
    summary: Dict = field(default_factory=dict)
    flags: List[str] = field(default_factory=list)


class _TableWriter:
    def __init__(self, out_dir: str, record: ExperimentRecord):
        self.out_dir = out_dir
        self.record = record

    def write(self, name: str, header: List[str], rows) -> None:
        path = os.path.join(self.out_dir, name)
        count = 0
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow(row)
                count += 1
        self.record.tables.append((name, count))


def _family_state(config: ExperimentConfig, n_sites: int):
    return build_state(ModelSpec(config.model.family, n_sites, config.model.seed))


def _spectrum_rows(volume: int, spectrum: FluctuationSpectrum):
    for row in spectrum.csv_rows():
        yield [volume] + [fmt(x) for x in row]


def _require_volumes(config: ExperimentConfig, minimum: int = 3):
    if len(config.volumes) < minimum:
        raise ConfigError(f"{config.experiment}: need at least {minimum} volumes")


def run_scaling(config: ExperimentConfig, writer: _TableWriter, record: ExperimentRecord):
    _require_volumes(config)
    spectra = [(v, max_fluctuation(_family_state(config, v))) for v in config.volumes]
    rows = [r for v, s in spectra for r in _spectrum_rows(v, s)]
    writer.write("scaling.csv", ["V"] + FluctuationSpectrum.CSV_HEADER, rows)
    verdict = classify_scaling([(v, s.peak.max_fluct) for v, s in spectra])
    writer.write("scaling_summary.csv", ["exponent", "r_squared", "class"],
                 [[fmt(verdict.exponent), fmt(verdict.r_squared), verdict.scaling_class.value]])
    record.summary["exponent"] = verdict.exponent
    record.summary["r_squared"] = verdict.r_squared
    record.summary["class"] = verdict.scaling_class.value


def run_cluster(config: ExperimentConfig, writer: _TableWriter, record: ExperimentRecord):
    _require_volumes(config)
    rows = []
    summary_rows = []
    per_eps: Dict[float, List[Tuple[int, int]]] = {}
    for v in config.volumes:
        state = _family_state(config, v)
        for eps in config.epsilon_values:
            report = cluster_report(state, eps)
            for x, omega_x in report.per_x:
                rows.append([v, fmt(eps), x, omega_x])
            summary_rows.append([fmt(eps), v, report.omega])
            per_eps.setdefault(eps, []).append((v, report.omega))
    writer.write("cluster.csv", ["V", "epsilon", "x", "omega_x"], rows)
    writer.write("cluster_summary.csv", ["epsilon", "V", "omega"], summary_rows)
    verdicts = {}
    for eps, series in per_eps.items():
        v = cp_verdict(series)
        verdicts[fmt(eps)] = {"verdict": v.verdict.value, "slope": v.slope,
                              "ambiguous": v.ambiguous}
        if v.ambiguous:
            record.flags.append(f"ambiguous CP growth at epsilon={eps}")
    record.summary["cp_verdicts"] = verdicts


def _simulate_trajectories(config: ExperimentConfig, threads: int):
    """Ensemble purity decay at model.n_sites under the configured noise."""
    state = _family_state(config, config.model.n_sites)
    noise = config.noise
    n = config.model.n_sites
    # Neel and cat states are exact eigenstates of the Ising ring, so the
    # bare dynamics contributes only a global phase; other families run
    # noise-only so the rate formula's eigenstate premise still holds.
    eigenstate_families = (StateFamily.NEEL_PLUS, StateFamily.NEEL_MINUS, StateFamily.CAT)
    hamiltonian = (ising_afm_hamiltonian(n, 1.0)
                   if config.model.family in eigenstate_families else None)

    def one(index: int):
        seed = derive_seed(config.master_seed, index)
        f = sample_noise_field(noise, n, config.dt, config.n_steps, seed)
        return evolve_trajectory(state, hamiltonian, noise, f, config.dt,
                                 store_every=config.store_every)

    indices = range(config.trajectories)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trajectories = list(pool.map(one, indices))
    else:
        trajectories = [one(i) for i in indices]
    return ensemble_purity(trajectories, config.dt * config.store_every)


def run_gamma(config: ExperimentConfig, writer: _TableWriter, record: ExperimentRecord,
              threads: int):
    if config.noise is None:
        raise ConfigError("gamma experiment requires a noise.* section")
    volumes = config.volumes or (config.model.n_sites,)
    rows = []
    for v in volumes:
        rows.append([v, fmt(gamma_formula(_family_state(config, v), config.noise))])
    writer.write("gamma.csv", ["V", "gamma_formula"], rows)
    if len(volumes) >= 3:
        result = fragility_scan(lambda v: _family_state(config, v), config.noise, volumes)
        record.summary["exponent"] = result.verdict.exponent
        record.summary["fragile"] = result.fragile
    if config.trajectories > 0:
        if config.n_steps <= 0:
            raise ConfigError("gamma trajectories need n_steps > 0")
        t_lo, t_hi = config.fit_window
        if config.noise.temporal.kind is TemporalKind.OU:
            if t_lo < 5.0 * config.noise.temporal.tau_c:
                raise ConfigError("fit.t_lo must be at least 5 * tau_c for OU noise")
        elif t_lo < 2.0 * config.dt:
            raise ConfigError("fit.t_lo must be at least 2 * dt for white noise")
        curve = _simulate_trajectories(config, threads)
        writer.write("purity.csv", ["t", "purity", "stderr"],
                     ([fmt(t), fmt(p), fmt(s)]
                      for t, p, s in zip(curve.times, curve.purity, curve.stderr)))
        gm, gm_err = gamma_measured(curve, config.fit_window)
        gf = gamma_formula(_family_state(config, config.model.n_sites), config.noise)
        writer.write("gamma_summary.csv",
                     ["gamma_formula", "gamma_measured", "gamma_stderr", "t_lo", "t_hi"],
                     [[fmt(gf), fmt(gm), fmt(gm_err), fmt(t_lo), fmt(t_hi)]])
        record.summary["gamma_formula"] = gf
        record.summary["gamma_measured"] = gm
        record.summary["gamma_stderr"] = gm_err
        mask = curve.times <= t_hi
        if np.any(curve.purity[mask] < 0.7):
            record.flags.append("purity fell below 0.7 inside the fit window")


def run_lm(config: ExperimentConfig, writer: _TableWriter, record: ExperimentRecord):
    state = _family_state(config, config.model.n_sites)
    rows = []
    worst = 0.0
    for x in range(state.n_sites):
        for y in range(state.n_sites):
            if x == y:
                continue
            report = lm_stability_deviation(state, x, y, config.lm_epsilon)
            rows.append([x, y, fmt(report.deviation)])
            worst = max(worst, report.deviation)
    writer.write("lm.csv", ["x", "y", "deviation"], rows)
    record.summary["max_deviation"] = worst
    record.summary["epsilon"] = config.lm_epsilon


def run_cascade(config: ExperimentConfig, writer: _TableWriter, record: ExperimentRecord):
    state = _family_state(config, config.model.n_sites)
    rows = []
    trace_rows = []
    counts = []
    for run_idx in range(config.cascade_runs):
        seed = derive_seed(config.master_seed, run_idx)
        trace = measurement_cascade(state, config.cascade_policy, seed,
                                    config.cascade_stop_threshold)
        rows.append([run_idx, seed, trace.count, int(trace.converged),
                     fmt(trace.final_max_fluct)])
        for step in trace.steps:
            trace_rows.append([run_idx, step.step, step.site, fmt(step.axis_theta),
                               fmt(step.axis_phi), fmt(step.outcome), fmt(step.max_fluct)])
        counts.append(trace.count)
        if not trace.converged:
            record.flags.append(f"cascade run {run_idx} hit the step cap")
    writer.write("cascade.csv", ["run", "seed", "count", "converged", "final_max_fluct"], rows)
    writer.write("cascade_trace.csv",
                 ["run", "step", "site", "axis_theta", "axis_phi", "outcome", "max_fluct"],
                 trace_rows)
    record.summary["median_count"] = float(np.median(counts)) if counts else 0.0


def run(config: ExperimentConfig, out_dir: str, threads: int = 1) -> ExperimentRecord:
    os.makedirs(out_dir, exist_ok=True)
    record = ExperimentRecord(manifest_path=os.path.join(out_dir, "manifest.json"))
    writer = _TableWriter(out_dir, record)
    start = time.monotonic()
    if config.experiment == "scaling":
        run_scaling(config, writer, record)
    elif config.experiment == "cluster":
        run_cluster(config, writer, record)
    elif config.experiment == "gamma":
        run_gamma(config, writer, record, threads)
    elif config.experiment == "lm":
        run_lm(config, writer, record)
    elif config.experiment == "cascade":
        run_cascade(config, writer, record)
    else:
        raise ConfigError(f"unknown experiment {config.experiment!r}")
    manifest = {
        "version": __version__,
        "experiment": config.experiment,
        "master_seed": config.master_seed,
        "config": config.raw,
        "tables": [{"filename": name, "rows": rows} for name, rows in record.tables],
        "summary": record.summary,
        "flags": record.flags,
        "wall_time_s": time.monotonic() - start,
    }
    with open(record.manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return record
