"""Seeded Monte Carlo harness: channel -> decoders -> metrics -> aggregates.

Every trial draws from its own counter-based stream keyed by
``(seed, trial_index)``, and per-trial results are reduced in index order,
so aggregates do not depend on execution order or thread count.
"""

from __future__ import annotations

import enum
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from bromimo import asymptotics, channel, decoder
from bromimo.decoder import Decoder
from bromimo.errors import ConfigValidationError, SolverError

THREADS_ENV = "BRO_MIMO_THREADS"

log = logging.getLogger(__name__)


class SamplingPath(str, enum.Enum):
    PILOT_SIMULATION = "pilot_simulation"
    DIRECT_STATISTICAL = "direct_statistical"


class SweepParameter(str, enum.Enum):
    RHO_DB = "rho_db"
    R = "r"
    ALPHA = "alpha"
    BETA = "beta"


@dataclass(frozen=True)
class ExperimentConfig:
    system: channel.SystemConfig
    trials: int = 100
    decoders: tuple = (Decoder.BRO,)
    sampling_path: SamplingPath = SamplingPath.DIRECT_STATISTICAL
    tol: float = decoder.DEFAULT_TOL
    max_iters: int = decoder.DEFAULT_MAX_ITERS

    def __post_init__(self):
        object.__setattr__(self, "decoders", tuple(Decoder(d) for d in self.decoders))
        object.__setattr__(self, "sampling_path", SamplingPath(self.sampling_path))
        problems = []
        if not (isinstance(self.trials, (int, np.integer)) and self.trials >= 1):
            problems.append(f"trials must be a positive integer, got {self.trials!r}")
        if not self.decoders:
            problems.append("decoder set must not be empty")
        if len(set(self.decoders)) != len(self.decoders):
            problems.append("decoder set contains duplicates")
        if not self.tol > 0:
            problems.append(f"tol must be positive, got {self.tol!r}")
        if not self.max_iters >= 1:
            problems.append(f"max_iters must be >= 1, got {self.max_iters!r}")
        if problems:
            raise ConfigValidationError(problems)


@dataclass(frozen=True)
class TrialMetrics:
    mse: float
    ber: float
    converged: bool


@dataclass(frozen=True)
class DecoderStats:
    mean_mse: float
    mean_ber: float
    std_err_mse: float
    std_err_ber: float
    n_trials: int
    n_nonconverged: int


@dataclass(frozen=True)
class AggregateResult:
    """Per-decoder aggregates plus the large-system prediction for BRO.

    Standard errors are ``std(ddof=1) / sqrt(trials)``; with one trial they
    are ``nan`` (not applicable).
    """

    decoders: dict
    theory: asymptotics.AsymptoticSolution | None
    m: int
    n: int
    system: channel.SystemConfig = field(repr=False)


def worker_count():
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        k = int(raw)
    except ValueError:
        k = 0
    if k <= 0:
        k = os.cpu_count() or 1
    return k


def _realization(config: ExperimentConfig, stats, trial_index):
    if config.sampling_path is SamplingPath.PILOT_SIMULATION:
        return channel.sample_realization(config.system, stats, trial_index)
    return channel.sample_realization_direct(config.system, stats, trial_index)


def run_trial(config: ExperimentConfig, trial_index, stats=None):
    """Run every configured decoder on one shared realization.

    Returns ``{Decoder: TrialMetrics}``.
    """
    if stats is None:
        stats = channel.stats_for_config(config.system)
    real = _realization(config, stats, trial_index)
    problem = decoder.DecodeProblem(
        y=real.y, A_hat=real.A_hat, rho_d=config.system.powers().rho_d, n=config.system.n
    )
    out = {}
    for dec in config.decoders:
        if dec is Decoder.BRO:
            res = decoder.bro_solve(problem, tol=config.tol, max_iters=config.max_iters)
        else:
            res = decoder.ls_solve(problem)
        out[dec] = TrialMetrics(
            mse=decoder.mse_metric(res.x_relaxed, real.x0),
            ber=decoder.ber_metric(res.x_detected, real.x0),
            converged=res.converged,
        )
    return out


def theory_for(system: channel.SystemConfig, stats=None):
    """Large-system prediction using the realized ``m`` and the config's spectra."""
    if stats is None:
        stats = channel.stats_for_config(system)
    split = system.powers()
    inp = asymptotics.AsymptoticInput(lam=stats.lam, delta=stats.delta, rho_d=split.rho_d, n=system.n)
    return asymptotics.solve_minmax(inp)


def _summarize(metrics):
    k = len(metrics)
    mse = np.array([t.mse for t in metrics])
    ber = np.array([t.ber for t in metrics])
    if k > 1:
        se_mse = float(mse.std(ddof=1) / math.sqrt(k))
        se_ber = float(ber.std(ddof=1) / math.sqrt(k))
    else:
        se_mse = se_ber = math.nan
    return DecoderStats(
        mean_mse=float(mse.mean()),
        mean_ber=float(ber.mean()),
        std_err_mse=se_mse,
        std_err_ber=se_ber,
        n_trials=k,
        n_nonconverged=sum(not t.converged for t in metrics),
    )


def aggregate(config: ExperimentConfig, per_trial, theory=None):
    """Reduce a list of ``run_trial`` outputs (in trial-index order)."""
    decs = {dec: _summarize([t[dec] for t in per_trial]) for dec in config.decoders}
    return AggregateResult(decoders=decs, theory=theory, m=config.system.m, n=config.system.n, system=config.system)


def run_experiment(config: ExperimentConfig, workers=None, trial_indices=None):
    """Run ``config.trials`` trials and aggregate.

    ``trial_indices`` may reorder execution; results are always reduced in
    sorted index order. The prediction is ``None`` when the saddle solver
    cannot bracket a minimizer (degenerate SNR).
    """
    stats = channel.stats_for_config(config.system)
    indices = list(range(config.trials)) if trial_indices is None else list(trial_indices)
    if sorted(indices) != list(range(config.trials)):
        raise ValueError("trial_indices must be a permutation of range(trials)")
    workers = worker_count() if workers is None else max(1, int(workers))
    if workers == 1:
        results = {i: run_trial(config, i, stats) for i in indices}
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {i: pool.submit(run_trial, config, i, stats) for i in indices}
            results = {i: f.result() for i, f in futures.items()}
    ordered = [results[i] for i in range(config.trials)]
    try:
        theory = theory_for(config.system, stats)
    except SolverError as exc:
        # e.g. extreme SNR pushes mu* past the search range; the simulation still stands
        log.warning("no large-system prediction for this point: %s", exc)
        theory = None
    return aggregate(config, ordered, theory)


@dataclass(frozen=True)
class SweepPoint:
    value: float
    result: AggregateResult | None
    error: str | None = None


def with_parameter(system: channel.SystemConfig, parameter, value):
    parameter = SweepParameter(parameter)
    value = float(value)
    if parameter is SweepParameter.RHO_DB:
        return replace(system, rho=10.0 ** (value / 10.0))
    if parameter is SweepParameter.R:
        return replace(system, r=value)
    if parameter is SweepParameter.ALPHA:
        return replace(system, alpha=value)
    return replace(system, beta=value)


def sweep(config: ExperimentConfig, parameter, values, workers=None):
    """Run one experiment per value of ``parameter``; failures are recorded, not raised."""
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    points = []
    for v in values:
        try:
            system = with_parameter(config.system, parameter, v)
            res = run_experiment(replace(config, system=system), workers=workers)
            points.append(SweepPoint(value=float(v), result=res))
        except Exception as exc:  # noqa: BLE001 - recorded per point
            points.append(SweepPoint(value=float(v), result=None, error=f"{type(exc).__name__}: {exc}"))
    return points
