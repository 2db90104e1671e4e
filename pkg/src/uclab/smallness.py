"""Sublevel-set decay, Remez-type bounds for solutions, propagation of smallness,
and the certified closure of the two-parameter recursion

    M(N, a) <= M(N/2, a - N a0) + s M(N, a - N a0),   s = (J^d - 1) / J^d,

into a bound M(N, a) <= C exp(-beta a / N).  The closure needs
``exp(-beta a0 (k - 2)) + s exp(beta a0) <= 1`` for every k >= k0; the left
side decreases in k, so checking k0 plus a monotone trace certifies it.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .fields import DomainError, ScalarField
from .growth import _box_slices, _sup_box

BETA_MAX = 10.0
BETA_TOL = 1e-9


# -- sublevel sets -------------------------------------------------------------

@dataclass(frozen=True)
class SublevelStatistic:
    a: float
    N: float
    m: float


def _cube_values(u: ScalarField, center, side: float) -> np.ndarray:
    sl = _box_slices(u, center, side / 2)
    vals = u.values[sl][u.defined[sl]]
    if vals.size == 0:
        raise DomainError("cube holds no defined nodes")
    return vals


def sublevel_measure(u: ScalarField, center: Sequence[float], side: float, a: float, N: float = float("nan")) -> SublevelStatistic:
    """Fraction of nodes of Q with |u| < e^{-a} sup_Q |u|."""
    v = np.abs(_cube_values(u, center, side))
    top = v.max()
    if top == 0:
        raise ValueError("u vanishes on Q")
    return SublevelStatistic(float(a), float(N), float(np.mean(v < math.exp(-a) * top)))


@dataclass(frozen=True)
class DecayFit:
    beta: float
    C: float
    r2: float
    used: int


def decay_fit(u: ScalarField, center: Sequence[float], side: float, a_grid: Sequence[float], N: float = 1.0) -> DecayFit:
    """Least squares of log m against a/N over the a's with 0 < m < 1: m ~ C e^{-beta a/N}."""
    if N <= 0:
        raise ValueError("N must be positive")
    a = np.asarray(a_grid, dtype=float)
    m = np.array([sublevel_measure(u, center, side, ai).m for ai in a])
    use = (m > 0) & (m < 1)
    if use.sum() < 2:
        raise ValueError("no decay range: fewer than two a values with 0 < m < 1")
    x = a[use] / N
    y = np.log(m[use])
    slope, icpt = np.polyfit(x, y, 1)
    pred = slope * x + icpt
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - pred) ** 2)) / ss if ss > 0 else 1.0
    return DecayFit(float(-slope), float(math.exp(icpt)), r2, int(use.sum()))


# -- Remez inequality for solutions and propagation of smallness ----------------------

@dataclass(frozen=True)
class RemezSolutionCheck:
    lhs: float
    rhs: float
    sup_E: float
    ratio_QE: float
    passed: bool


def remez_solutions_check(u: ScalarField, E: np.ndarray, center: Sequence[float], side: float,
                          N: float, C: float) -> RemezSolutionCheck:
    """sup_Q|u| <= C sup_E|u| (C |Q|/|E|)^{C N}, E a node mask inside Q."""
    Q = u.cube(center, side) & u.defined
    E = E & Q
    if not E.any():
        raise ValueError("|E| = 0")
    sup_Q = float(np.abs(u.values[Q]).max())
    sup_E = float(np.abs(u.values[E]).max())
    ratio = Q.sum() / E.sum()
    if sup_E == 0:
        return RemezSolutionCheck(sup_Q, 0.0, 0.0, float(ratio), sup_Q == 0)
    log_rhs = math.log(C) + math.log(sup_E) + C * N * math.log(C * ratio)
    rhs = math.exp(log_rhs) if log_rhs < 700 else math.inf
    passed = sup_Q == 0 or math.log(sup_Q) <= log_rhs + 1e-12
    return RemezSolutionCheck(sup_Q, rhs, sup_E, float(ratio), bool(passed))


def derived_propagation_constants(C: float, a1: float, a2: float, E_fraction: float) -> tuple[float, float, float]:
    """(alpha, C0, C1) obtained from the Remez-type constant C and the inverse doubling fit.

    C1 = (C / a1) log(C |Q| / |E|), alpha = 1 / (C1 + 1) and
    C0 = (C e^{a2 C1})^alpha, for K = Q and Omega = 2Q.
    """
    if not 0 < E_fraction <= 1:
        raise ValueError("|E|/|Q| must lie in (0, 1]")
    C1 = C / a1 * math.log(C / E_fraction)
    alpha = 1.0 / (C1 + 1.0)
    C0 = (C * math.exp(a2 * C1)) ** alpha
    return alpha, C0, C1


@dataclass(frozen=True)
class PropagationCheck:
    max_K: float
    sup_Omega: float
    eps: float
    bound: float
    alpha: float
    C0: float
    passed: bool


def propagation_constant(u: ScalarField, E: np.ndarray, K: np.ndarray, Omega: np.ndarray, eps: float,
                         C0: float, alpha: float) -> PropagationCheck:
    """max_K|u| <= C0 sup_Omega|u|^{1-alpha} eps^alpha, given |u| <= eps on E."""
    E = E & u.defined
    if not E.any():
        raise ValueError("|E| = 0")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if float(np.abs(u.values[E]).max()) > eps * (1 + 1e-9):
        raise ValueError("|u| exceeds eps on E")
    max_K = float(np.abs(u.values[K & u.defined]).max())
    sup_O = float(np.abs(u.values[Omega & u.defined]).max())
    bound = C0 * sup_O ** (1 - alpha) * eps**alpha
    return PropagationCheck(max_K, sup_O, eps, bound, alpha, C0, bool(max_K <= bound * (1 + 1e-12)))


def propagation_exponent(max_K: float, sup_Omega: float, sup_E: float) -> float:
    """The alpha giving equality with C0 = 1: log(max_K/sup_O) / log(sup_E/sup_O)."""
    if sup_E >= sup_Omega:
        return 1.0
    return math.log(max_K / sup_Omega) / math.log(sup_E / sup_Omega)


# -- base of the induction ---------------------------------------------------------------

@dataclass(frozen=True)
class BaseCheck:
    b: float
    m: float
    q0: tuple[float, ...]
    N: float
    passed: bool


def base_partition_check(u: ScalarField, center: Sequence[float], side: float, K: int,
                         N0: float | None = None, N: float | None = None) -> BaseCheck:
    """Split Q into K^d subcubes; b = min_q sup_q|u| / sup_Q|u|, m = inf_{q0}|u| / sup_Q|u|.

    q0 is a subcube containing a maximum point of |u| on Q/2; ties go to the
    candidate with the largest inf.  Requires N(Q) <= N0 when both are given.
    """
    if N0 is not None and N is not None and N > N0:
        raise ValueError(f"doubling index {N:.3g} exceeds N0 = {N0:.3g}")
    center = tuple(float(c) for c in center)
    d = len(center)
    sup_Q = _sup_box(u, center, side / 2)
    if sup_Q == 0:
        raise ValueError("u vanishes on Q")
    s = side / K
    offs = (np.arange(K) + 0.5) * s - side / 2
    subs = [tuple(center[i] + offs[idx[i]] for i in range(d)) for idx in np.ndindex(*(K,) * d)]
    b = min(_sup_box(u, c, s / 2) for c in subs) / sup_Q

    half = u.cube(center, side / 2) & u.defined
    vals = np.abs(u.values)
    top = vals[half].max()
    pts = [p[half & (vals >= top * (1 - 1e-12))] for p in u.domain.mesh()]
    best = (-1.0, None)
    for k in range(len(pts[0])):
        x = [p[k] for p in pts]
        for c in subs:
            if all(abs(x[i] - c[i]) <= s / 2 + 1e-9 * u.h for i in range(d)):
                sl = _box_slices(u, c, s / 2)
                inf = float(np.abs(u.values[sl][u.defined[sl]]).min())
                if inf > best[0] or (inf == best[0] and c > best[1]):
                    best = (inf, c)
    m = best[0] / sup_Q
    return BaseCheck(float(b), float(m), best[1], float("nan") if N is None else float(N), bool(m > 0))


# -- induction engine -------------------------------------------------------------------

@dataclass(frozen=True)
class RecursionParams:
    s: float
    a0: float
    C_base: float = 1.0
    N0: float = 1.0
    k0_max: int = 1000
    c0: float = 1.0

    @classmethod
    def from_J(cls, J: int, d: int = 2, **kw) -> "RecursionParams":
        return cls(s=(J**d - 1) / J**d, **kw)

    def __post_init__(self):
        if not 0 < self.s < 1:
            raise ValueError("s must lie in (0, 1)")
        if self.a0 <= 0:
            raise ValueError("a0 must be > 0")


def closure_lhs(beta: float, a0: float, s: float, k: int) -> float:
    return math.exp(-beta * a0 * (k - 2)) + s * math.exp(beta * a0)


def smallest_k0(beta: float, a0: float, s: float) -> int | None:
    """Smallest k >= 2 with e^{-beta a0 (k-2)} + s e^{beta a0} <= 1, or None."""
    slack = 1.0 - s * math.exp(beta * a0)
    if slack <= 0 or beta <= 0:
        return None
    k = 2 + max(0, math.ceil(-math.log(slack) / (beta * a0)))
    # floating-point guard: step to the exact smallest k
    while k > 2 and closure_lhs(beta, a0, s, k - 1) <= 1.0:
        k -= 1
    while closure_lhs(beta, a0, s, k) > 1.0:
        k += 1
    return k


@dataclass(frozen=True)
class BoundCertificate:
    C: float
    log_C: float
    beta: float
    k0: int
    a0: float
    s: float
    C_base: float
    trace: list = field(default_factory=list)
    trace_hash: str = ""

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "BoundCertificate":
        return cls(**{**data, "trace": [list(r) for r in data["trace"]]})


TRACE_SPAN = 64


def _trace(beta: float, a0: float, s: float, k0: int) -> list:
    ks = range(max(2, k0 - 1), k0 + TRACE_SPAN)
    return [[k, closure_lhs(beta, a0, s, k)] for k in ks]


def _hash(trace: list) -> str:
    return hashlib.sha256(json.dumps([[k, repr(v)] for k, v in trace]).encode()).hexdigest()


def induction_engine(params: RecursionParams, beta_max: float = BETA_MAX, tol: float = BETA_TOL) -> BoundCertificate:
    """Largest beta in (0, beta_max] whose k0 is at most ``k0_max``, with its certificate.

    k0(beta) blows up both as beta -> 0 and as beta approaches ln(1/s)/a0, so
    the search first locates a feasible beta near the minimum of k0 and then
    bisects towards the upper end of the feasible interval.
    """
    s, a0 = params.s, params.a0
    beta_crit = min(math.log(1.0 / s) / a0, beta_max)
    grid = beta_crit * np.linspace(0.01, 0.99, 99)
    ks = [smallest_k0(b, a0, s) for b in grid]
    feas = [(b, k) for b, k in zip(grid, ks) if k is not None and k <= params.k0_max]
    assert feas, "no feasible beta: raise k0_max"
    lo = max(b for b, _ in feas)
    hi = beta_crit
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        k = smallest_k0(mid, a0, s)
        if k is not None and k <= params.k0_max:
            lo = mid
        else:
            hi = mid
    beta = lo
    k0 = smallest_k0(beta, a0, s)
    # the base region a <= c0 N needs k0 a0 >= c0 as well
    k0 = max(k0, math.ceil(params.c0 / a0))
    log_C = beta * k0 * a0 + math.log(params.C_base)
    trace = _trace(beta, a0, s, k0)
    return BoundCertificate(math.exp(log_C) if log_C < 700 else float("inf"), log_C, beta, k0, a0, s,
                            params.C_base, trace, _hash(trace))


def verify_certificate(cert: BoundCertificate) -> bool:
    """Recompute the trace bit for bit and re-check the closure inequality."""
    trace = _trace(cert.beta, cert.a0, cert.s, cert.k0)
    if _hash(trace) != cert.trace_hash or trace != [list(r) for r in cert.trace]:
        return False
    vals = [v for k, v in trace if k >= cert.k0]
    ok = all(v <= 1.0 for v in vals) and all(b <= a for a, b in zip(vals, vals[1:]))
    return ok and cert.s * math.exp(cert.beta * cert.a0) < 1.0


def simulate_recursion(cert: BoundCertificate, levels: int = 6, k_max: int | None = None) -> tuple[bool, float]:
    """Worst-case table M(l, k) = min(1, M(l-1, 2(k-1)) + s M(l, k-1)) against C e^{-beta a0 k}.

    Level l stands for N = 2^l N0 and k for a = k a0 N; the bottom level and
    k <= k0 carry the trivial bound 1 (or the base bound when smaller).
    Returns (dominated everywhere, worst log-ratio table/bound).
    """
    k_max = 2 * cert.k0 if k_max is None else k_max
    width = k_max * 2 ** (levels + 1) + 2
    ks = np.arange(width)
    bound_log = cert.log_C - cert.beta * cert.a0 * ks
    # compare only where the bound is a normal double; below that both sides underflow
    usable = bound_log > -700.0

    def excess(vals: np.ndarray) -> float:
        sel = usable[: len(vals)] & (vals > 0)
        if not sel.any():
            return -np.inf
        return float(np.max(np.log(vals[sel]) - bound_log[: len(vals)][sel]))

    M = np.minimum(1.0, cert.C_base * np.exp(-cert.beta * cert.a0 * ks))
    worst = excess(M)
    for level in range(1, levels + 1):
        span = k_max * 2 ** (levels - level + 1) + 2
        new = np.ones(span)
        for k in range(cert.k0 + 1, span):
            new[k] = min(1.0, M[2 * (k - 1)] + cert.s * new[k - 1])
        worst = max(worst, excess(new))
        M = new
    return worst <= 1e-12, worst


# -- recursion table ------------------------------------------------------------------

@dataclass(frozen=True)
class RecursionTable:
    m: np.ndarray  # m[k-1, j] for k = 1..k_max, j = 0..j_max
    C_prime: float
    C_prime_global: float
    holds: bool


def recursion_oracle(C: float = 1.0, k_max: int = 20, j_max: int = 60, j_cut: int = 800) -> RecursionTable:
    """Worst case of m(k, j) <= m(k-1, 2(j-1)) + m(k, j-1)/4 with m(k, j) = C (j < 4, k >= 2)
    and m(1, j) = e^{-j}.

    Works with w = m e^{j}, for which the recursion reads
    w(k, j) = e^{2-j} w(k-1, 2j-2) + (e/4) w(k, j-1).  Columns are computed to
    ``j_cut``; beyond it each row is bounded by
    B_k = max(max_j w(k, j), e^{2-j_cut} B_{k-1} / (1 - e/4)), which the
    recursion preserves, and lookups past the cut use B_{k-1}.
    """
    if j_max >= j_cut // 2:
        raise ValueError("j_cut must exceed 2 * j_max")
    q = math.e / 4
    j = np.arange(j_cut + 1)
    w_prev = np.ones(j_cut + 1)  # k = 1: m = e^{-j}
    B_prev = 1.0
    rows = [w_prev[: j_max + 1].copy()]
    B_all = [B_prev]
    for _ in range(2, k_max + 1):
        w = np.empty(j_cut + 1)
        w[:4] = C * np.exp(j[:4])
        for jj in range(4, j_cut + 1):
            src = 2 * jj - 2
            prev = w_prev[src] if src <= j_cut else B_prev
            w[jj] = math.exp(2 - jj) * prev + q * w[jj - 1]
        B = max(float(w.max()), math.exp(2 - j_cut) * B_prev / (1 - q))
        rows.append(w[: j_max + 1].copy())
        w_prev, B_prev = w, B
        B_all.append(B)
    W = np.array(rows)
    m = W * np.exp(-j[: j_max + 1])[None, :]
    C_prime = float(W.max())
    holds = bool(np.all(m <= C_prime * np.exp(-j[: j_max + 1])[None, :] * (1 + 1e-12)))
    return RecursionTable(m, C_prime, float(max(B_all)), holds)
