"""Box-relaxation (BRO) and least-squares detection of BPSK symbols, plus metrics."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from bromimo import kernels
from bromimo.errors import DomainError

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 20000
LS_RCOND = 1e-10


class Decoder(str, enum.Enum):
    BRO = "BRO"
    LS = "LS"


@dataclass(frozen=True)
class DecodeProblem:
    """Received vector ``y``, channel estimate ``A_hat`` and data power ``rho_d``."""

    y: np.ndarray
    A_hat: np.ndarray
    rho_d: float
    n: int

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        A = np.asarray(self.A_hat, dtype=float)
        if A.ndim != 2 or y.ndim != 1 or A.shape != (y.shape[0], int(self.n)):
            raise DomainError(f"inconsistent shapes: y {y.shape}, A_hat {A.shape}, n={self.n}")
        if not self.rho_d > 0:
            raise DomainError(f"rho_d must be positive, got {self.rho_d!r}")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "A_hat", A)
        object.__setattr__(self, "n", int(self.n))

    @property
    def scale(self):
        return math.sqrt(self.rho_d / self.n)


@dataclass(frozen=True)
class DecodeResult:
    x_relaxed: np.ndarray
    x_detected: np.ndarray
    iterations: int
    final_gradient_norm: float
    converged: bool = True
    objective_history: np.ndarray | None = None


def bro_objective(problem: DecodeProblem, x):
    """``(1/n) ||y - sqrt(rho_d/n) A_hat x||^2``."""
    r = problem.y - problem.scale * (problem.A_hat @ np.asarray(x, dtype=float))
    return float(r @ r) / problem.n


def bro_gradient(problem: DecodeProblem, x):
    c = problem.scale
    r = problem.y - c * (problem.A_hat @ x)
    return -(2.0 * c / problem.n) * (problem.A_hat.T @ r)


def _quadratic_form(problem):
    # (1/n)||y - cAx||^2 = 0.5 x'Px - q'x + const
    c, n = problem.scale, problem.n
    P = (2.0 * c * c / n) * (problem.A_hat.T @ problem.A_hat)
    P = 0.5 * (P + P.T)
    q = (2.0 * c / n) * (problem.A_hat.T @ problem.y)
    return P, q


def bro_solve(problem: DecodeProblem, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS, x_init=None):
    """Solve ``min_{-1 <= x <= 1} (1/n)||y - sqrt(rho_d/n) A_hat x||^2`` and take signs.

    Accelerated projected gradient with step ``1/L``, ``L = 2 rho_d sigma_max(A_hat)^2 / n^2``,
    and a momentum reset whenever the objective would increase. Stops once the
    projected-gradient norm is at most ``tol``; hitting ``max_iters`` returns the
    current iterate with ``converged=False``.
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    n = problem.n
    P, q = _quadratic_form(problem)
    lipschitz = float(scipy.linalg.eigh(P, eigvals_only=True, subset_by_index=[n - 1, n - 1])[0])
    x0 = np.zeros(n) if x_init is None else np.asarray(x_init, dtype=float)
    if lipschitz <= 0.0:
        # A_hat == 0: objective is constant, every feasible point is optimal
        x = np.clip(x0, -1.0, 1.0)
        pg = kernels.projected_gradient_norm(x, P @ x - q)
        return DecodeResult(x, sign_detect(x), 0, pg, True, np.array([0.5 * x @ P @ x - q @ x]))
    # tiny inflation guards against eigensolver round-off below the true L
    lipschitz *= 1.0 + 1e-12
    x, iters, pg, history = kernels.box_qp_apg(P, q, x0, lipschitz, float(tol), int(max_iters))
    return DecodeResult(
        x_relaxed=x,
        x_detected=sign_detect(x),
        iterations=int(iters),
        final_gradient_norm=float(pg),
        converged=bool(pg <= tol),
        objective_history=history,
    )


def sign_detect(x_relaxed):
    """Elementwise sign with ``sign(0) = +1``."""
    x = np.asarray(x_relaxed, dtype=float)
    return np.where(x >= 0.0, 1.0, -1.0)


def ls_solve(problem: DecodeProblem):
    """Minimum-norm least-squares (zero-forcing) solution, not box-clipped.

    Singular values at or below ``1e-10 * sigma_max`` are discarded.
    """
    M = problem.scale * problem.A_hat
    x = np.linalg.pinv(M, rcond=LS_RCOND) @ problem.y
    g = bro_gradient(problem, x)
    return DecodeResult(
        x_relaxed=x,
        x_detected=sign_detect(x),
        iterations=0,
        final_gradient_norm=float(np.linalg.norm(g)),
    )


def mse_metric(x_relaxed, x0):
    """``(1/n)||x_relaxed - x0||^2``."""
    a = np.asarray(x_relaxed, dtype=float)
    b = np.asarray(x0, dtype=float)
    if a.shape != b.shape:
        raise DomainError(f"length mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(d @ d) / a.shape[0]


def ber_metric(x_detected, x0):
    """Fraction of positions where two ``{+-1}`` vectors disagree."""
    a = np.asarray(x_detected, dtype=float)
    b = np.asarray(x0, dtype=float)
    if a.shape != b.shape:
        raise DomainError(f"length mismatch: {a.shape} vs {b.shape}")
    if not (np.all(np.abs(a) == 1.0) and np.all(np.abs(b) == 1.0)):
        raise DomainError("ber_metric expects entries in {-1, +1}")
    return float(np.count_nonzero(a != b)) / a.shape[0]
