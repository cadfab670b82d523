"""Pilot/data energy split and optimization of the data power fraction.

Energy over a coherence block is conserved: ``rho_p tau_p + rho_d tau_d = rho tau``
with ``rho_d tau_d = alpha rho tau``. The optimal ``alpha`` is found from the
large-system predictions only (no Monte Carlo).
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from bromimo import asymptotics
from bromimo import channel
from bromimo.errors import DomainError

ALPHA_EPS = 1e-3
ALPHA_TOL = 1e-4
DEFAULT_GRID = 41


class Objective(str, enum.Enum):
    MSE = "mse"
    BER = "ber"


@dataclass(frozen=True)
class PowerSplit:
    alpha: float
    rho_p: float
    rho_d: float


def powers_from_alpha(alpha, rho, tau, tau_p):
    """Per-symbol pilot and data powers for data energy fraction ``alpha``."""
    tau_d = tau - tau_p
    if not tau_d > 0:
        raise DomainError(f"tau_d = tau - tau_p must be positive, got {tau_d!r}")
    if not tau_p >= 1:
        raise DomainError(f"tau_p must be >= 1, got {tau_p!r}")
    if not rho > 0:
        raise DomainError(f"rho must be positive, got {rho!r}")
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha!r}")
    return PowerSplit(
        alpha=float(alpha),
        rho_p=(1.0 - alpha) * rho * tau / tau_p,
        rho_d=alpha * rho * tau / tau_d,
    )


@dataclass(frozen=True)
class AllocationCurve:
    """Predicted MSE/BER over a grid of ``alpha`` plus the refined optima.

    ``alpha_star_mse`` minimizes the predicted MSE and ``alpha_star_ber``
    maximizes ``mu*`` (equivalently minimizes ``Q(mu*/2)``); both are refined
    off-grid, so ``mse_star <= mse_values.min()``.
    """

    alphas: np.ndarray
    mse_values: np.ndarray
    ber_values: np.ndarray
    mu_values: np.ndarray
    alpha_star_mse: float
    alpha_star_ber: float
    mse_star: float
    ber_star: float
    mu_star_mse: float
    mu_star_ber: float
    unimodal_mse: bool
    unimodal_ber: bool


def _is_unimodal(values):
    d = np.sign(np.diff(values))
    d = d[d != 0]
    return int(np.count_nonzero(np.diff(d) != 0)) <= 1


def predict_at_alpha(config, alpha, eigvals_R):
    """Large-system solution for ``config`` with its ``alpha`` replaced."""
    split = powers_from_alpha(alpha, config.rho, config.tau, config.tau_p)
    rho_p = split.rho_p if config.rho_p_override is None else config.rho_p_override
    lam, delta = channel.estimate_spectra(eigvals_R, config.tau_p, rho_p)
    inp = asymptotics.AsymptoticInput(lam=lam, delta=delta, rho_d=split.rho_d, n=config.n)
    return asymptotics.solve_minmax(inp)


def optimize_alpha(config, objective=Objective.MSE, grid_points=DEFAULT_GRID):
    """Scan ``alpha`` on ``[eps, 1 - eps]`` and refine both optima by golden section.

    Both the MSE and the BER optimum are computed since they share the grid;
    ``objective`` is validated here and used by callers to pick the headline.
    """
    Objective(objective)
    if grid_points < 3:
        raise DomainError(f"grid_points must be >= 3, got {grid_points!r}")
    R = channel.build_correlation(config.corr_model, config.m, config.r)
    eigvals_R = np.clip(np.linalg.eigvalsh(R), 0.0, None)
    alphas = np.linspace(ALPHA_EPS, 1.0 - ALPHA_EPS, grid_points)
    sols = [predict_at_alpha(config, a, eigvals_R) for a in alphas]
    mu = np.array([s.mu_star for s in sols])
    mse = np.array([s.mse for s in sols])
    ber = np.array([s.ber for s in sols])

    def refine(values, sign):
        k = int(np.argmin(sign * values))
        lo = alphas[max(k - 1, 0)]
        hi = alphas[min(k + 1, grid_points - 1)]

        def f(a):
            s = predict_at_alpha(config, a, eigvals_R)
            return sign * (s.mse if sign > 0 else s.mu_star)

        a_star, _ = asymptotics.golden_section_min(f, lo, hi, rtol=0.0, atol=ALPHA_TOL)
        return a_star

    alpha_mse = refine(mse, 1.0)
    alpha_ber = refine(mu, -1.0)
    uni_mse, uni_ber = _is_unimodal(mse), _is_unimodal(ber)
    if not (uni_mse and uni_ber):
        warnings.warn("allocation curve is not unimodal on the grid", RuntimeWarning, stacklevel=2)
    best_mse = predict_at_alpha(config, alpha_mse, eigvals_R)
    best_ber = predict_at_alpha(config, alpha_ber, eigvals_R)
    return AllocationCurve(
        alphas=alphas,
        mse_values=mse,
        ber_values=ber,
        mu_values=mu,
        alpha_star_mse=float(alpha_mse),
        alpha_star_ber=float(alpha_ber),
        mse_star=best_mse.mse,
        ber_star=best_ber.ber,
        mu_star_mse=best_mse.mu_star,
        mu_star_ber=best_ber.mu_star,
        unimodal_mse=uni_mse,
        unimodal_ber=uni_ber,
    )
