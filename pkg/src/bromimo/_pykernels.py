"""Pure-Python (numpy) implementations of the hot kernels.

These mirror ``bromimo._ext`` operation for operation and are used when the
compiled extension is unavailable or ``BROMIMO_PURE_PYTHON=1`` is set.
"""

import math

import numpy as np


def projected_gradient_norm(x, g):
    pg = np.where(x <= -1.0, np.minimum(g, 0.0), np.where(x >= 1.0, np.maximum(g, 0.0), g))
    return float(math.sqrt(pg @ pg))


def box_qp_apg(P, q, x0, lipschitz, tol, max_iters):
    """Minimize ``0.5 x'Px - q'x`` over ``[-1, 1]^n`` by accelerated projected gradient.

    One matrix-vector product per iteration: ``P @ x`` is carried along and the
    product at the extrapolated point follows by linearity. When an accelerated
    step would increase the objective it is discarded, momentum is reset and a
    plain projected-gradient step is taken instead, so the accepted objective
    sequence never increases.

    Returns ``(x, iterations, pg_norm, history)`` where ``history`` holds the
    objective at every accepted iterate (``iterations + 1`` entries).
    """
    P = np.ascontiguousarray(P, dtype=float)
    q = np.ascontiguousarray(q, dtype=float)
    x = np.clip(np.asarray(x0, dtype=float), -1.0, 1.0)
    inv_l = 1.0 / lipschitz
    w = P @ x
    f = 0.5 * (x @ w) - q @ x
    history = [f]
    x_prev = x.copy()
    w_prev = w.copy()
    t = 1.0
    pg = projected_gradient_norm(x, w - q)
    it = 0
    while pg > tol and it < max_iters:
        it += 1
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        theta = (t - 1.0) / t_next
        v = x + theta * (x - x_prev)
        pv = w + theta * (w - w_prev)
        x_new = np.clip(v - inv_l * (pv - q), -1.0, 1.0)
        w_new = P @ x_new
        f_new = 0.5 * (x_new @ w_new) - q @ x_new
        if f_new > f:
            t_next = 1.0
            x_new = np.clip(x - inv_l * (w - q), -1.0, 1.0)
            w_new = P @ x_new
            f_new = 0.5 * (x_new @ w_new) - q @ x_new
        x_prev, w_prev = x, w
        x, w, f = x_new, w_new, f_new
        t = t_next
        history.append(f)
        pg = projected_gradient_norm(x, w - q)
    return x, it, pg, np.asarray(history)


def saddle_sum(lam, num, sqrt_rd, gamma):
    """Return ``sum_j num_j / (1/2 + lam_j sqrt_rd / gamma)`` and its gamma-derivative."""
    s = lam * sqrt_rd
    den = 0.5 * gamma + s
    value = float(np.sum(num * gamma / den))
    deriv = float(np.sum(num * s / (den * den)))
    return value, deriv
