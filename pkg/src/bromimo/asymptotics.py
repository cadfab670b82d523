"""Large-system predictions for the box-relaxation decoder.

Scalar special functions (Q, phi, F, Upsilon), the xi <-> mu fixed-point map,
the two-level scalar min-max whose saddle point predicts MSE and BER, and the
closed-form inner minimization over the sphere-box intersection.

All functions are pure; nothing here keeps state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from bromimo.errors import BracketError, DomainError, InfeasibleError, SolverError
from bromimo.kernels import saddle_sum

SQRT2 = math.sqrt(2.0)
SQRT_2PI = math.sqrt(2.0 * math.pi)
SERIES_THRESHOLD = 1e-4
PHI_SERIES_THRESHOLD = 0.05

MU_LOWER = 1e-6
MU_UPPER = 64.0
MU_UPPER_MAX = 512.0
GOLDEN_RTOL = 1e-9
BISECT_FTOL = 1e-10

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


# ---------------------------------------------------------------------------
# scalar special functions


def q_function(x):
    """Standard normal tail probability ``P(Z > x)``.

    Evaluated as ``erfc(x / sqrt(2)) / 2`` which keeps full relative accuracy
    in the upper tail. Accepts scalars or arrays.
    """
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / SQRT2)[()]


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return (np.exp(-0.5 * x * x) / SQRT_2PI)[()]


def _phi_series(mu):
    # integral of t^2 pdf(t) from 0 to mu, alternating series
    mu2 = mu * mu
    return mu * mu2 * (1.0 / 3.0 - mu2 / 10.0 + mu2 * mu2 / 56.0 - mu2 * mu2 * mu2 / 432.0) / SQRT_2PI


def varphi(mu):
    """``1/2 - Q(mu) - mu * pdf(mu)``, i.e. the truncated second moment on ``[0, mu]``."""
    mu = np.asarray(mu, dtype=float)
    direct = 0.5 * special.erf(mu / SQRT2) - mu * np.exp(-0.5 * mu * mu) / SQRT_2PI
    return np.where(mu < PHI_SERIES_THRESHOLD, _phi_series(mu), direct)[()]


def big_f(mu):
    """``F(mu) = 4 (Q(mu) + phi(mu) / mu^2)``, strictly decreasing from 2 to 0.

    Below ``SERIES_THRESHOLD`` the small-argument expansion
    ``2 - (8/3) mu / sqrt(2 pi) + (4/15) mu^3 / sqrt(2 pi)`` is used.
    """
    mu = np.asarray(mu, dtype=float)
    small = mu < SERIES_THRESHOLD
    safe = np.where(small, 1.0, mu)
    direct = 4.0 * (q_function(safe) + varphi(safe) / (safe * safe))
    series = 2.0 - (8.0 / 3.0) * mu / SQRT_2PI + (4.0 / 15.0) * mu**3 / SQRT_2PI
    return np.where(small, series, direct)[()]


def upsilon(mu):
    """``(1 - 2 Q(mu)) / mu``; tends to ``sqrt(2/pi)`` as ``mu -> 0``."""
    mu = np.asarray(mu, dtype=float)
    small = mu < SERIES_THRESHOLD
    safe = np.where(small, 1.0, mu)
    direct = special.erf(safe / SQRT2) / safe
    series = math.sqrt(2.0 / math.pi) * (1.0 - mu * mu / 6.0)
    return np.where(small, series, direct)[()]


def big_f_prime(mu):
    """``dF/dmu = -8 phi(mu) / mu^3``."""
    mu = np.asarray(mu, dtype=float)
    small = mu < SERIES_THRESHOLD
    safe = np.where(small, 1.0, mu)
    direct = -8.0 * varphi(safe) / safe**3
    series = -(8.0 / 3.0) / SQRT_2PI + (4.0 / 5.0) * mu * mu / SQRT_2PI
    return np.where(small, series, direct)[()]


def upsilon_prime(mu):
    """``dUpsilon/dmu = (2 pdf(mu) - Upsilon(mu)) / mu``."""
    mu = np.asarray(mu, dtype=float)
    small = mu < SERIES_THRESHOLD
    safe = np.where(small, 1.0, mu)
    direct = (2.0 * normal_pdf(safe) - upsilon(safe)) / safe
    series = -math.sqrt(2.0 / math.pi) * mu / 3.0
    return np.where(small, series, direct)[()]


# ---------------------------------------------------------------------------
# one-dimensional search helpers


def bisect_decreasing(g, lo, hi, max_iter=200):
    """Root of a decreasing function with ``g(lo) > 0 >= g(hi)``, to machine precision."""
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def golden_section_min(f, lo, hi, rtol=GOLDEN_RTOL, atol=0.0, max_iter=200):
    """Golden-section search for the minimizer of a unimodal ``f`` on ``[lo, hi]``.

    Stops when the bracket width falls below ``atol + rtol * max(|c|, |d|)``.
    Returns ``(x, f(x))`` for the best evaluated point.
    """
    a, b = float(lo), float(hi)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= atol + rtol * max(abs(c), abs(d)) + 1e-300:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def solve_mu_of_xi(xi):
    """Return the unique ``mu > 0`` with ``F(mu) = xi^2``.

    Bisection on ``log(mu)`` from the bracket ``[1e-8, 64]``, widened by factors
    of two until it encloses the root.
    """
    xi = float(xi)
    target = xi * xi
    if not (xi > 0.0 and target < 2.0):
        raise DomainError(f"xi must satisfy 0 < xi^2 < 2, got xi={xi!r}")
    lo, hi = 1e-8, 64.0
    while big_f(lo) < target:
        lo *= 0.5
        if lo < 1e-300:
            raise DomainError(f"xi^2={target!r} is numerically indistinguishable from 2")
    while big_f(hi) > target:
        hi *= 2.0
        if hi > 1e150:
            raise DomainError(f"xi={xi!r} too small to bracket")
    for _ in range(400):
        mid = math.sqrt(lo * hi)
        fm = big_f(mid)
        if fm > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4.0 * np.finfo(float).eps * hi:
            break
    mu = math.sqrt(lo * hi)
    if abs(big_f(mu) - target) > BISECT_FTOL:
        raise SolverError(f"fixed-point bisection did not reach tolerance for xi={xi!r}")
    return mu


# ---------------------------------------------------------------------------
# the scalar min-max


@dataclass(frozen=True)
class AsymptoticInput:
    """Spectral data entering the scalar min-max.

    ``lam`` and ``delta`` are the eigenvalues of the estimate and error
    covariances in a shared eigenbasis, so ``lam[j] + delta[j]`` is the j-th
    eigenvalue of the true receive correlation.
    """

    lam: np.ndarray
    delta: np.ndarray
    rho_d: float
    n: int

    def __post_init__(self):
        lam = np.ascontiguousarray(self.lam, dtype=float)
        delta = np.ascontiguousarray(self.delta, dtype=float)
        problems = []
        if lam.ndim != 1 or lam.shape != delta.shape:
            problems.append("lam and delta must be 1-D of equal length")
        if np.any(lam < 0) or np.any(delta < 0):
            problems.append("eigenvalues must be non-negative")
        if not self.rho_d > 0:
            problems.append(f"rho_d must be positive, got {self.rho_d!r}")
        if int(self.n) < 1:
            problems.append(f"n must be a positive integer, got {self.n!r}")
        if problems:
            raise DomainError("; ".join(problems))
        lam.setflags(write=False)
        delta.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "rho_d", float(self.rho_d))
        object.__setattr__(self, "n", int(self.n))

    @property
    def m(self):
        return self.lam.shape[0]


@dataclass(frozen=True)
class AsymptoticSolution:
    mu_star: float
    gamma_star: float
    mse: float
    ber: float
    objective: float


def _numerators(mu, inp):
    rd = inp.rho_d
    return rd * inp.lam * float(big_f(mu)) + rd * inp.delta + 1.0


def minmax_objective(mu, gamma, inp):
    """Saddle objective evaluated at ``(mu, gamma)``.

    ``(1/2n) sum_j (rho_d lam_j F(mu) + rho_d delta_j + 1) / (1/2 + lam_j sqrt(rho_d)/gamma)
    - (sqrt(rho_d)/2) Upsilon(mu)^2 gamma``
    """
    sqrt_rd = math.sqrt(inp.rho_d)
    total, _ = saddle_sum(inp.lam, _numerators(mu, inp), sqrt_rd, float(gamma))
    return total / (2.0 * inp.n) - 0.5 * sqrt_rd * float(upsilon(mu)) ** 2 * gamma


def _gamma_derivative(gamma, num, inp, penalty):
    _, deriv = saddle_sum(inp.lam, num, math.sqrt(inp.rho_d), gamma)
    return deriv / (2.0 * inp.n) - penalty


def inner_max_gamma(mu, inp):
    """Maximize the saddle objective over ``gamma > 0`` at fixed ``mu``.

    The objective is concave in gamma. The bracket starts at ``[0, 1]`` and is
    doubled until the derivative turns negative, then golden-section search
    (on the negated objective) locates the maximizer.

    Returns ``(gamma_star, value)``.
    """
    if not mu > 0:
        raise DomainError(f"mu must be positive, got {mu!r}")
    if not np.any(inp.lam > 0):
        raise DomainError("at least one estimate eigenvalue must be positive")
    sqrt_rd = math.sqrt(inp.rho_d)
    ups = float(upsilon(mu))
    penalty = 0.5 * sqrt_rd * ups * ups
    if not penalty > 0:
        raise BracketError(f"linear penalty vanished at mu={mu!r}; objective unbounded in gamma")
    num = _numerators(mu, inp)
    # derivative at gamma -> 0+ is sum(num_j / s_j) / 2n over s_j > 0
    pos = inp.lam > 0
    slope0 = float(np.sum(num[pos] / (inp.lam[pos] * sqrt_rd))) / (2.0 * inp.n)
    if slope0 <= penalty:
        # maximizer sits at the gamma -> 0 boundary
        return 0.0, minmax_objective(mu, 1e-300, inp)

    hi = 1.0
    lo = 0.0
    while _gamma_derivative(hi, num, inp, penalty) > 0.0:
        lo = hi
        hi *= 2.0
        if hi > 1e200:
            raise BracketError(f"gamma maximizer not bracketed at mu={mu!r}")
    gamma, _ = golden_section_min(lambda g: -minmax_objective(mu, g, inp), lo, hi)
    # polish: the objective is concave, so its gamma-derivative crosses zero once
    deriv = lambda g: _gamma_derivative(g, num, inp, penalty)  # noqa: E731
    a, b = gamma * (1.0 - 1e-6), gamma * (1.0 + 1e-6)
    if deriv(a) > 0.0 >= deriv(b):
        gamma = bisect_decreasing(deriv, a, b)
    elif deriv(lo if lo > 0 else hi * 1e-300) > 0.0:
        gamma = bisect_decreasing(deriv, max(lo, 1e-300), hi)
    return gamma, minmax_objective(mu, gamma, inp)


def minmax_mu_derivative(mu, gamma, inp):
    """Partial derivative of :func:`minmax_objective` in ``mu`` at fixed ``gamma``.

    At ``gamma = gamma*(mu)`` this is the derivative of the inner maximum
    (envelope theorem).
    """
    sqrt_rd = math.sqrt(inp.rho_d)
    num = inp.rho_d * inp.lam * float(big_f_prime(mu))
    total, _ = saddle_sum(inp.lam, num, sqrt_rd, float(gamma))
    return total / (2.0 * inp.n) - sqrt_rd * float(upsilon(mu)) * float(upsilon_prime(mu)) * gamma


def _outer_derivative(inp):
    def deriv(log_mu):
        mu = math.exp(log_mu)
        gamma, _ = inner_max_gamma(mu, inp)
        return -minmax_mu_derivative(mu, gamma, inp)

    return deriv


def _outer(inp):
    def value(log_mu):
        return inner_max_gamma(math.exp(log_mu), inp)[1]

    return value


def solve_minmax(inp):
    """Solve ``min_{mu>0} max_{gamma>0}`` of :func:`minmax_objective`.

    Golden-section search on ``log(mu)`` over ``[1e-6, 64]``. If the minimum
    lands on the upper edge the bracket is doubled (up to 512) and the search
    repeated; a minimum still on the edge raises :class:`BracketError`.
    """
    value = _outer(inp)
    hi_mu = MU_UPPER
    lo, hi = math.log(MU_LOWER), math.log(hi_mu)
    while True:
        log_mu, _ = golden_section_min(value, lo, hi, rtol=0.0, atol=GOLDEN_RTOL)
        # edge test: the minimizer is interior if a point just inside beats the edge
        width = hi - lo
        at_edge = hi - log_mu < 1e-6 * width
        if not at_edge:
            break
        if hi_mu >= MU_UPPER_MAX:
            raise BracketError(
                f"saddle minimizer not interior up to mu={MU_UPPER_MAX}; "
                f"rho_d={inp.rho_d!r} may be degenerate"
            )
        # track the edge in mu, exp(log(x)) need not round-trip
        hi_mu = min(2.0 * hi_mu, MU_UPPER_MAX)
        hi = math.log(hi_mu)
    # polish: golden section only resolves a flat minimum to ~sqrt(eps)
    neg_slope = _outer_derivative(inp)
    for step in (1e-7, 1e-5, 1e-3):
        a, b = log_mu - step, log_mu + step
        if neg_slope(a) > 0.0 >= neg_slope(b):
            log_mu = bisect_decreasing(neg_slope, a, b)
            break
    mu_star = math.exp(log_mu)
    if mu_star - MU_LOWER < 1e-6 * MU_LOWER:
        raise BracketError("saddle minimizer at the lower edge mu=1e-6")
    gamma_star, obj = inner_max_gamma(mu_star, inp)
    return AsymptoticSolution(
        mu_star=mu_star,
        gamma_star=gamma_star,
        mse=float(big_f(mu_star)),
        ber=float(q_function(mu_star / 2.0)),
        objective=obj,
    )


# ---------------------------------------------------------------------------
# closed-form inner minimization over {||e|| = sqrt(n) xi, -a <= e <= 0}


@dataclass(frozen=True)
class SphereBoxResult:
    value: float
    mu_hat: float
    e_star: np.ndarray


def _budget(mu, h_neg_abs, a, n):
    full = h_neg_abs >= mu
    partial = ~full
    return a * a / n * (np.count_nonzero(full) + np.sum(h_neg_abs[partial] ** 2) / (mu * mu))


def sphere_box_inner_min(h, a, xi):
    """Minimize ``-(1/n) h'e`` over ``||e|| = sqrt(n) xi`` and ``-a <= e <= 0``.

    The threshold ``mu_hat`` solves the norm-budget equation by bisection;
    the minimizer then follows the three-branch rule

    * ``e_i = 0``              if ``h_i >= 0``
    * ``e_i = (a/mu) h_i``     if ``-mu < h_i < 0``
    * ``e_i = -a``             if ``h_i <= -mu``

    When the budget equals its maximum ``a^2 k / n`` (box active on every
    negative coordinate) any ``mu <= min|h_i|`` is admissible and
    ``min|h_i|`` over the negative entries is returned. For ``xi = 0`` the
    minimizer is ``e = 0`` and ``mu_hat`` is ``inf``.
    """
    h = np.asarray(h, dtype=float)
    a = float(a)
    xi = float(xi)
    n = h.shape[0]
    if not a > 0:
        raise DomainError(f"box size a must be positive, got {a!r}")
    if xi < 0:
        raise DomainError(f"xi must be non-negative, got {xi!r}")
    neg = h < 0
    k = int(np.count_nonzero(neg))
    target = xi * xi
    cap = a * a * k / n
    if xi == 0.0:
        return SphereBoxResult(value=0.0, mu_hat=math.inf, e_star=np.zeros(n))
    if k == 0:
        raise InfeasibleError("all h_i >= 0: no non-zero e satisfies the sign constraint")
    if target > cap * (1.0 + 1e-12):
        raise InfeasibleError(f"xi^2={target!r} exceeds the feasible maximum a^2 k/n={cap!r}")

    habs = -h[neg]
    if target >= cap * (1.0 - 1e-14):
        mu = float(habs.min())
    else:
        lo = float(habs.min())
        hi = 2.0 * float(habs.max())
        while _budget(hi, habs, a, n) > target:
            hi *= 2.0
        for _ in range(300):
            mid = 0.5 * (lo + hi)
            if _budget(mid, habs, a, n) > target:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 2.0 * np.finfo(float).eps * hi:
                break
        mu = 0.5 * (lo + hi)

    e = np.zeros(n)
    full = neg & (h <= -mu)
    partial = neg & ~full
    e[full] = -a
    e[partial] = (a / mu) * h[partial]
    value = -(a / n) * np.sum(np.abs(h[full])) - (a / (mu * n)) * np.sum(h[partial] ** 2)
    return SphereBoxResult(value=float(value), mu_hat=mu, e_star=e)
