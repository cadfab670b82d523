"""Receive correlation, channel sampling and LMMSE estimation.

The true channel is ``A = R^{1/2} H`` with ``H`` iid standard normal. The
estimate and its error have column covariances ``R_hat = R (R + s I)^{-1} R``
and ``R_delta = R - R_hat`` with ``s = 1 / (tau_p rho_p)``. Both are functions
of ``R`` alone, so all three matrices share the eigenvectors of ``R``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from bromimo.errors import ConfigValidationError, DomainError, NotPSDError
from bromimo import power

PSD_TOL = 1e-10


class CorrelationModel(str, enum.Enum):
    SQUARED_EXPONENTIAL = "squared_exponential"
    EXPONENTIAL = "exponential"
    IDENTITY = "identity"


@dataclass(frozen=True)
class SystemConfig:
    """Everything that defines one experiment point.

    ``m`` is derived as ``round(beta * n)``; ``beta_realized`` is the ratio
    actually simulated. ``rho_p_override`` replaces the pilot power obtained
    from the energy budget (used for perfect-CSI reference runs).
    """

    n: int
    beta: float
    tau: float
    tau_p: float
    rho: float
    alpha: float
    corr_model: CorrelationModel = CorrelationModel.SQUARED_EXPONENTIAL
    r: float = 0.0
    seed: int = 0
    rho_p_override: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "corr_model", CorrelationModel(self.corr_model))
        problems = self.violations()
        if problems:
            raise ConfigValidationError(problems)

    def violations(self):
        out = []
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            out.append(f"n must be a positive integer, got {self.n!r}")
        if not self.beta > 0.5:
            out.append(f"beta must exceed 1/2 (BRO recovery threshold), got {self.beta!r}")
        elif isinstance(self.n, (int, np.integer)) and self.n >= 1 and round(self.beta * self.n) < 1:
            out.append("beta * n rounds to zero receive antennas")
        if not self.tau_p >= 1:
            out.append(f"tau_p must be >= 1 (at least n pilot symbols), got {self.tau_p!r}")
        if not self.tau > self.tau_p:
            out.append(
                f"tau must exceed tau_p so that tau_d = tau - tau_p > 0, got tau={self.tau!r}, tau_p={self.tau_p!r}"
            )
        if not self.rho > 0:
            out.append(f"rho must be positive, got {self.rho!r}")
        if not 0.0 <= self.alpha <= 1.0:
            out.append(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if not 0.0 <= self.r < 1.0:
            out.append(f"r must lie in [0, 1), got {self.r!r}")
        if not (isinstance(self.seed, (int, np.integer)) and 0 <= self.seed < 2**64):
            out.append(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.rho_p_override is not None and not self.rho_p_override > 0:
            out.append(f"rho_p_override must be positive, got {self.rho_p_override!r}")
        return out

    @property
    def m(self):
        return int(round(self.beta * self.n))

    @property
    def beta_realized(self):
        return self.m / self.n

    @property
    def tau_d(self):
        return self.tau - self.tau_p

    @property
    def rho_db(self):
        return 10.0 * math.log10(self.rho)

    @property
    def n_pilots(self):
        return int(round(self.tau_p * self.n))

    def powers(self) -> power.PowerSplit:
        split = power.powers_from_alpha(self.alpha, self.rho, self.tau, self.tau_p)
        if self.rho_p_override is not None:
            split = power.PowerSplit(alpha=split.alpha, rho_p=float(self.rho_p_override), rho_d=split.rho_d)
        return split


def build_correlation(model, m, r):
    """Receive correlation matrix for the given model.

    ``squared_exponential``: ``R_ij = r^{|i-j|^2}``; ``exponential``:
    ``R_ij = r^{|i-j|}``; ``identity``: ``I_m``. ``0^0`` is taken as 1.
    Eigenvalues in ``[-1e-10, 0)`` are clamped to zero.
    """
    model = CorrelationModel(model)
    if not 0.0 <= r < 1.0:
        raise DomainError(f"correlation coefficient must lie in [0, 1), got {r!r}")
    if m < 1:
        raise DomainError(f"m must be positive, got {m!r}")
    if model is CorrelationModel.IDENTITY:
        return np.eye(m)
    idx = np.arange(m)
    dist = np.abs(np.subtract.outer(idx, idx)).astype(float)
    if model is CorrelationModel.SQUARED_EXPONENTIAL:
        dist = dist * dist
    with np.errstate(divide="ignore"):
        R = np.power(float(r), dist)
    np.fill_diagonal(R, 1.0)
    evals, evecs = np.linalg.eigh(R)
    if evals[0] < -PSD_TOL:
        raise NotPSDError(f"correlation matrix has eigenvalue {evals[0]!r}")
    if evals[0] < 0:
        R = (evecs * np.clip(evals, 0.0, None)) @ evecs.T
        R = 0.5 * (R + R.T)
    return R


def _psd_eigh(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError("matrix must be square")
    evals, evecs = np.linalg.eigh(0.5 * (M + M.T))
    if evals.size and evals[0] < -PSD_TOL:
        raise NotPSDError(f"matrix has eigenvalue {evals[0]!r} < -{PSD_TOL}")
    return np.clip(evals, 0.0, None), evecs


def matrix_sqrt_psd(M):
    """Symmetric PSD square root ``U diag(sqrt(l)) U'``."""
    evals, evecs = _psd_eigh(M)
    return (evecs * np.sqrt(evals)) @ evecs.T


def estimate_spectra(eigvals_R, tau_p, rho_p):
    """Eigenvalues ``(lam, delta)`` of ``R_hat`` and ``R_delta`` given those of ``R``."""
    energy = tau_p * rho_p
    if not energy > 0:
        raise DomainError(f"tau_p * rho_p must be positive, got {energy!r}")
    nu = np.clip(np.asarray(eigvals_R, dtype=float), 0.0, None)
    lam = nu * nu / (nu + 1.0 / energy)
    delta = np.clip(nu - lam, 0.0, None)
    return lam, delta


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ChannelStats:
    """Second-order statistics of the channel, its estimate and the error.

    ``eigvecs`` diagonalizes ``R``, ``R_hat`` and ``R_delta`` simultaneously.
    ``estimator_gain`` is ``R (R + s I)^{-1}`` with ``s = 1/(tau_p rho_p)``.
    """

    R: np.ndarray
    R_hat: np.ndarray
    R_delta: np.ndarray
    eigvals_R: np.ndarray
    lam: np.ndarray
    delta: np.ndarray
    eigvecs: np.ndarray
    tau_p: float
    rho_p: float
    R_sqrt: np.ndarray = field(repr=False)
    R_hat_sqrt: np.ndarray = field(repr=False)
    R_delta_sqrt: np.ndarray = field(repr=False)
    estimator_gain: np.ndarray = field(repr=False)

    @property
    def m(self):
        return self.R.shape[0]


def derive_stats(R, tau_p, rho_p):
    """Covariances of the LMMSE estimate and its error for correlation ``R``."""
    if not tau_p * rho_p > 0:
        raise DomainError(f"tau_p * rho_p must be positive, got {tau_p * rho_p!r}")
    R = np.asarray(R, dtype=float)
    nu, U = _psd_eigh(R)
    lam, delta = estimate_spectra(nu, tau_p, rho_p)
    R_hat = (U * lam) @ U.T
    R_hat = 0.5 * (R_hat + R_hat.T)
    R_delta = R - R_hat
    gain = (U * (nu / (nu + 1.0 / (tau_p * rho_p)))) @ U.T
    return ChannelStats(
        R=_frozen(R.copy()),
        R_hat=_frozen(R_hat),
        R_delta=_frozen(R_delta),
        eigvals_R=_frozen(nu),
        lam=_frozen(lam),
        delta=_frozen(delta),
        eigvecs=_frozen(U),
        tau_p=float(tau_p),
        rho_p=float(rho_p),
        R_sqrt=_frozen((U * np.sqrt(nu)) @ U.T),
        R_hat_sqrt=_frozen((U * np.sqrt(lam)) @ U.T),
        R_delta_sqrt=_frozen((U * np.sqrt(delta)) @ U.T),
        estimator_gain=_frozen(gain),
    )


def stats_for_config(config: SystemConfig, R=None):
    """Build ``ChannelStats`` for a config (``R`` may be passed to skip rebuilding it)."""
    if R is None:
        R = build_correlation(config.corr_model, config.m, config.r)
    split = config.powers()
    return derive_stats(R, config.tau_p, split.rho_p)


# ---------------------------------------------------------------------------
# sampling


def trial_rng(seed, trial_index):
    """Independent counter-based stream for one trial.

    The stream depends only on ``(seed, trial_index)`` so trials can run in any
    order or in parallel.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trial_index),))
    return np.random.Generator(np.random.Philox(ss))


def orthogonal_pilots(n, n_pilots, rng):
    """``n x T_p`` pilot matrix with ``X X' = T_p I_n``.

    Rows are the first ``n`` rows of a random ``T_p x T_p`` orthogonal matrix,
    scaled by ``sqrt(T_p)``.
    """
    if n_pilots < n:
        raise DomainError(f"need at least n={n} pilot symbols, got {n_pilots}")
    G = rng.standard_normal((n_pilots, n))
    Q, Rq = np.linalg.qr(G)
    Q = Q * np.sign(np.diag(Rq))
    return math.sqrt(n_pilots) * Q.T


@dataclass(frozen=True)
class ChannelRealization:
    A: np.ndarray
    A_hat: np.ndarray
    Delta: np.ndarray
    x0: np.ndarray
    y: np.ndarray
    z: np.ndarray
    X_p: np.ndarray | None = None


def lmmse_estimate(Y_p, X_p, stats: ChannelStats, n):
    """LMMSE channel estimate from pilot observations.

    ``A_hat = sqrt(n/rho_p) / T_p * R (R + n/(T_p rho_p) I)^{-1} Y_p X_p'``.
    The gain in ``stats`` uses ``tau_p``; this uses the realized ``T_p``.
    """
    n_pilots = X_p.shape[1]
    rho_p = stats.rho_p
    if abs(n_pilots / n - stats.tau_p) < 1e-12:
        gain = stats.estimator_gain
    else:
        nu, U = stats.eigvals_R, stats.eigvecs
        gain = (U * (nu / (nu + n / (n_pilots * rho_p)))) @ U.T
    return math.sqrt(n / rho_p) / n_pilots * (gain @ (Y_p @ X_p.T))


def sample_estimated_pair_direct(stats: ChannelStats, n, rng):
    """Draw ``(A_hat, Delta)`` straight from their Gaussian laws.

    Columns of ``A_hat`` are ``N(0, R_hat)``, columns of ``Delta`` are
    independent ``N(0, R_delta)``. The true channel is ``A_hat - Delta``.
    """
    m = stats.m
    A_hat = stats.R_hat_sqrt @ rng.standard_normal((m, n))
    Delta = stats.R_delta_sqrt @ rng.standard_normal((m, n))
    return A_hat, Delta


def _data_phase(A, rho_d, n, rng):
    x0 = rng.choice(np.array([-1.0, 1.0]), size=n)
    z = rng.standard_normal(A.shape[0])
    y = math.sqrt(rho_d / n) * (A @ x0) + z
    return x0, y, z


def sample_realization(config: SystemConfig, stats: ChannelStats, trial_index):
    """Simulate one coherence block: pilot phase, LMMSE estimate, data phase."""
    rng = trial_rng(config.seed, trial_index)
    n, m = config.n, config.m
    split = config.powers()
    H = rng.standard_normal((m, n))
    A = stats.R_sqrt @ H
    X_p = orthogonal_pilots(n, config.n_pilots, rng)
    Z_p = rng.standard_normal((m, X_p.shape[1]))
    Y_p = math.sqrt(stats.rho_p / n) * (A @ X_p) + Z_p
    A_hat = lmmse_estimate(Y_p, X_p, stats, n)
    Delta = A_hat - A
    x0, y, z = _data_phase(A, split.rho_d, n, rng)
    return ChannelRealization(A=A, A_hat=A_hat, Delta=Delta, x0=x0, y=y, z=z, X_p=X_p)


def sample_realization_direct(config: SystemConfig, stats: ChannelStats, trial_index):
    """Same block as :func:`sample_realization` without simulating pilots."""
    rng = trial_rng(config.seed, trial_index)
    split = config.powers()
    A_hat, Delta = sample_estimated_pair_direct(stats, config.n, rng)
    A = A_hat - Delta
    # recompute so that Delta == A_hat - A holds bit for bit
    Delta = A_hat - A
    x0, y, z = _data_phase(A, split.rho_d, config.n, rng)
    return ChannelRealization(A=A, A_hat=A_hat, Delta=Delta, x0=x0, y=y, z=z)
