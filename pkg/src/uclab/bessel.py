"""Bessel functions of the first kind and their positive zeros.

Small arguments use the power series (60 terms, Neumaier-compensated sum).
Beyond the switch point the value comes from Miller's backward recurrence,
normalized with the Neumann-type identity

    (x/2)**mu = sum_k (mu + 2k) Gamma(mu + k) / k! * J_{mu+2k}(x),   0 <= mu < 1,

which reduces to ``1 = J_0 + 2 sum J_2k`` when ``mu = 0``.
"""

from __future__ import annotations

import math

import numpy as np

SERIES_TERMS = 60
ZERO_TOL = 1e-12


# Cancellation in the series grows like exp(r); past 12 the loss exceeds
# 1e-11 for every order, so large orders switch at the same point.
SERIES_SWITCH = 12.0


def _check(nu, r):
    nu = float(nu)
    if not math.isfinite(nu) or nu < 0:
        raise ValueError(f"order must be finite and >= 0, got {nu}")
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)):
        raise ValueError("argument must be finite")
    if np.any(r < 0):
        raise ValueError("argument must be >= 0")
    return nu, r


def _series(nu: float, r: np.ndarray) -> np.ndarray:
    """Power series with Neumaier summation, vectorized over r."""
    half = r / 2.0
    q = -half * half
    # term_0 = (r/2)^nu / Gamma(nu+1)
    with np.errstate(divide="ignore"):
        lead = np.where(r > 0, np.exp(nu * np.log(np.where(r > 0, half, 1.0)) - math.lgamma(nu + 1)),
                        1.0 if nu == 0 else 0.0)
    term = np.ones_like(r)
    total = np.ones_like(r)
    comp = np.zeros_like(r)
    for k in range(1, SERIES_TERMS):
        term = term * q / (k * (k + nu))
        t = total + term
        comp += np.where(np.abs(total) >= np.abs(term), (total - t) + term, (term - t) + total)
        total = t
    return lead * (total + comp)


def _miller(nu: float, x: np.ndarray) -> np.ndarray:
    """Backward recurrence from a high start index, vectorized over x > 0."""
    m = int(math.floor(nu))
    mu = nu - m
    top = max(m, float(np.max(x)))
    start = 2 * (int(top + 30 + 10 * top ** (1 / 3)) // 2) + 2
    # normalization weights c_k for the even indices 2k
    ck = np.empty(start // 2 + 1)
    ck[0] = math.gamma(mu + 1)
    g = math.gamma(mu + 1)  # Gamma(mu + k) / k! at k = 1
    for k in range(1, len(ck)):
        if k > 1:
            g *= (mu + k - 1) / k
        ck[k] = (mu + 2 * k) * g

    f_next = np.zeros_like(x)
    f = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    target = np.zeros_like(x)
    if start % 2 == 0:
        norm += ck[start // 2] * f
    if start == m:
        target = f.copy()
    for k in range(start, 0, -1):
        f_prev = 2.0 * (mu + k) / x * f - f_next
        f_next, f = f, f_prev
        idx = k - 1
        if idx == m:
            target = f.copy()
        if idx % 2 == 0:
            norm += ck[idx // 2] * f
        big = np.abs(f) > 1e200
        if big.any():
            scale = np.where(big, 1e-200, 1.0)
            f *= scale
            f_next *= scale
            norm *= scale
            target *= scale
    return target * np.power(x / 2.0, mu) / norm


def bessel_j(nu: float, r) -> np.ndarray:
    """J_nu evaluated elementwise on an array of non-negative arguments."""
    nu, r = _check(nu, r)
    out = np.empty_like(r)
    small = r <= SERIES_SWITCH
    if small.any():
        out[small] = _series(nu, r[small])
    if (~small).any():
        out[~small] = _miller(nu, r[~small])
    return out


def eval_bessel(nu: float, r: float) -> float:
    return float(bessel_j(nu, np.array([r]))[0])


def bessel_zero(nu: float, k: int, max_r: float = 1e4) -> float:
    """k-th positive zero of J_nu by sign-change bracketing then bisection."""
    if k < 1:
        raise ValueError("zero index k must be >= 1")
    nu, _ = _check(nu, 0.0)
    step = math.pi / 8
    a = max(nu, 0.5)
    fa = eval_bessel(nu, a)
    found = 0
    while a < max_r:
        # grow the window in blocks so the vectorized evaluator does the work
        grid = a + step * np.arange(1, 257)
        vals = bessel_j(nu, grid)
        prev_x, prev_v = a, fa
        for x, v in zip(grid, vals):
            if prev_v == 0.0:
                found += 1
                if found == k:
                    return float(prev_x)
            elif prev_v * v < 0:
                found += 1
                if found == k:
                    return _bisect(nu, prev_x, x, prev_v)
            prev_x, prev_v = x, v
        a, fa = prev_x, prev_v
    raise RuntimeError(f"bracketing exhausted window [0, {max_r}] after {found} zeros of J_{nu}")


def _bisect(nu: float, lo: float, hi: float, flo: float) -> float:
    while hi - lo > ZERO_TOL:
        mid = 0.5 * (lo + hi)
        fm = eval_bessel(nu, mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)

