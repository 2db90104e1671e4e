"""Finite-difference Dirichlet Laplacian and div(A grad .) on masked grids.

Sign convention, used everywhere in the package: an assembled operator ``M``
is the *positive* semidefinite matrix of ``-div(A grad u)``, so the 1x1 grid
with ``h = 1`` gives ``[4]`` and eigenpairs satisfy ``M u = lam u``.

Assembly goes through the discrete energy ``sum_edges a (du)^2 / h^2`` plus,
for off-diagonal coefficients, a per-cell cross term.  Writing the matrix as a
sum of rank-one edge/cell contributions makes it symmetric by construction and
makes ``A = I`` reproduce the 5-point stencil exactly.  Nodes outside the mask
carry Dirichlet data (zero for eigenproblems).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fields import DomainError, GridDomain, ScalarField


class EllipticityError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (attained residual {residual:.3e})")
        self.residual = residual


# -- coefficient fields ----------------------------------------------------

@dataclass(frozen=True, eq=False)
class CoefficientMatrixField:
    """Symmetric 2x2 matrix field sampled on the grid nodes."""
    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray
    h: float
    origin: tuple[float, float]
    func: Callable | None = None

    @classmethod
    def identity(cls, domain: GridDomain, scale: float = 1.0) -> "CoefficientMatrixField":
        return cls.constant(domain, [[scale, 0.0], [0.0, scale]])

    @classmethod
    def constant(cls, domain: GridDomain, matrix) -> "CoefficientMatrixField":
        m = np.asarray(matrix, dtype=float)
        if not np.allclose(m, m.T):
            raise EllipticityError("coefficient matrix must be symmetric")
        ones = np.ones(domain.shape)

        def func(x, y):
            x = np.asarray(x, dtype=float)
            return (np.full(x.shape, m[0, 0]), np.full(x.shape, m[0, 1]), np.full(x.shape, m[1, 1]))

        return cls(m[0, 0] * ones, m[0, 1] * ones, m[1, 1] * ones, domain.h, domain.origin, func)

    @classmethod
    def from_function(cls, f: Callable, domain: GridDomain) -> "CoefficientMatrixField":
        """``f(x, y) -> (a11, a12, a22)`` arrays."""
        x, y = domain.mesh()
        a11, a12, a22 = (np.broadcast_to(np.asarray(v, dtype=float), x.shape).copy() for v in f(x, y))
        return cls(a11, a12, a22, domain.h, domain.origin, f)

    def at(self, x, y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self.func is not None:
            x = np.asarray(x, dtype=float)
            return tuple(np.broadcast_to(np.asarray(v, dtype=float), x.shape) for v in self.func(x, y))
        from scipy.interpolate import RegularGridInterpolator
        axes = tuple(o + self.h * np.arange(n) for o, n in zip(self.origin, self.a11.shape))
        pts = np.stack([np.asarray(x, dtype=float), np.asarray(y, dtype=float)], axis=-1)
        return tuple(RegularGridInterpolator(axes, a)(pts) for a in (self.a11, self.a12, self.a22))

    def eig_bounds(self) -> tuple[float, float]:
        tr = 0.5 * (self.a11 + self.a22)
        disc = np.sqrt(0.25 * (self.a11 - self.a22) ** 2 + self.a12**2)
        return float(np.min(tr - disc)), float(np.max(tr + disc))

    @property
    def ellipticity(self) -> float:
        lo, hi = self.eig_bounds()
        if lo <= 0:
            return float("inf")
        return max(hi, 1.0 / lo)

    @property
    def lipschitz(self) -> float:
        worst = 0.0
        for a in (self.a11, self.a12, self.a22):
            for ax in range(a.ndim):
                if a.shape[ax] > 1:
                    worst = max(worst, float(np.max(np.abs(np.diff(a, axis=ax)))) / self.h)
        return worst

    def validate(self, Lam: float | None = None) -> float:
        lo, hi = self.eig_bounds()
        if lo <= 0:
            raise EllipticityError(f"coefficient field not positive definite (min eigenvalue {lo:.3g})")
        lam = max(hi, 1.0 / lo)
        if Lam is not None and lam > Lam * (1 + 1e-12):
            raise EllipticityError(f"ellipticity {lam:.4g} exceeds declared bound {Lam:.4g}")
        return lam


# -- operators ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SparseSymmetricOperator:
    domain: GridDomain
    full: sp.csr_matrix
    interior: np.ndarray
    matrix: sp.csr_matrix = field(init=False)
    coupling: sp.csr_matrix = field(init=False)

    def __post_init__(self):
        idx = self.interior
        object.__setattr__(self, "matrix", self.full[idx][:, idx].tocsr())
        object.__setattr__(self, "coupling", self.full[idx].tocsr())

    @property
    def dimension(self) -> int:
        return int(self.interior.size)

    def is_symmetric(self) -> bool:
        diff = self.matrix - self.matrix.T
        return diff.nnz == 0 or float(abs(diff).max()) == 0.0

    def to_field(self, vec: np.ndarray, boundary: np.ndarray | None = None, **meta) -> ScalarField:
        """Interior vector as a grid field; with boundary data every node is defined."""
        vals = np.zeros(self.domain.shape) if boundary is None else np.array(boundary, dtype=float)
        vals.reshape(-1)[self.interior] = vec
        if boundary is None:
            defined = self.domain.mask | self.domain.ring()
        else:
            defined = np.ones(self.domain.shape, dtype=bool)
        return ScalarField(np.where(defined, vals, 0.0), self.domain, defined, meta)

    def to_matrix_market(self, path: str | Path) -> None:
        scipy.io.mmwrite(str(path), self.matrix, comment="uclab: -div(A grad) on interior nodes",
                         symmetry="symmetric")


def _edges(domain: GridDomain, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Flat index pairs of neighbours along an axis (wrapping when periodic)."""
    ids = np.arange(np.prod(domain.shape)).reshape(domain.shape)
    if domain.periodic[axis]:
        nxt = np.roll(ids, -1, axis=axis)
        return ids.ravel(), nxt.ravel()
    lo = [slice(None)] * domain.ndim
    hi = [slice(None)] * domain.ndim
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    return ids[tuple(lo)].ravel(), ids[tuple(hi)].ravel()


def _edge_matrix(n: int, p: np.ndarray, q: np.ndarray, w: np.ndarray) -> sp.csr_matrix:
    rows = np.concatenate([p, q, p, q])
    cols = np.concatenate([p, q, q, p])
    vals = np.concatenate([w, w, -w, -w])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _check_interior(domain: GridDomain) -> np.ndarray:
    interior = np.flatnonzero(domain.mask.ravel())
    if interior.size == 0:
        raise DomainError("empty interior")
    return interior


def assemble_dirichlet(domain: GridDomain) -> SparseSymmetricOperator:
    """5-point (2D) or 3-point (1D) Dirichlet Laplacian, positive convention."""
    interior = _check_interior(domain)
    n = int(np.prod(domain.shape))
    full = sp.csr_matrix((n, n))
    for ax in range(domain.ndim):
        p, q = _edges(domain, ax)
        full = full + _edge_matrix(n, p, q, np.full(p.size, 1.0 / domain.h**2))
    return SparseSymmetricOperator(domain, full.tocsr(), interior)


def assemble_divergence_form(domain: GridDomain, A: CoefficientMatrixField, Lam: float | None = None) -> SparseSymmetricOperator:
    """Flux form of -div(A grad u); half-grid coefficients are arithmetic means."""
    if domain.ndim != 2:
        raise ValueError("divergence-form assembly is 2D only")
    if A.a11.shape != domain.shape:
        raise ValueError("coefficient field does not match the grid")
    A.validate(Lam)
    interior = _check_interior(domain)
    n = int(np.prod(domain.shape))
    h2 = domain.h**2
    full = sp.csr_matrix((n, n))
    for ax, a in ((0, A.a11), (1, A.a22)):
        p, q = _edges(domain, ax)
        flat = a.ravel()
        full = full + _edge_matrix(n, p, q, 0.5 * (flat[p] + flat[q]) / h2)
    if np.any(A.a12 != 0):
        full = full + _cross_terms(domain, A.a12)
    return SparseSymmetricOperator(domain, full.tocsr(), interior)


def _cross_terms(domain: GridDomain, a12: np.ndarray) -> sp.csr_matrix:
    """Per-cell 2 a12 u_x u_y with cell-averaged one-sided differences."""
    if any(domain.periodic):
        raise ValueError("off-diagonal coefficients on periodic grids are not supported")
    ids = np.arange(np.prod(domain.shape)).reshape(domain.shape)
    c00, c10 = ids[:-1, :-1].ravel(), ids[1:, :-1].ravel()
    c01, c11 = ids[:-1, 1:].ravel(), ids[1:, 1:].ravel()
    a = 0.25 * (a12[:-1, :-1] + a12[1:, :-1] + a12[:-1, 1:] + a12[1:, 1:]).ravel()
    corners = [c00, c10, c01, c11]
    gx = [-0.5, 0.5, -0.5, 0.5]
    gy = [-0.5, -0.5, 0.5, 0.5]
    rows, cols, vals = [], [], []
    for i, ci in enumerate(corners):
        for j, cj in enumerate(corners):
            coef = gx[i] * gy[j] + gy[i] * gx[j]
            if coef:
                rows.append(ci)
                cols.append(cj)
                vals.append(a * coef / domain.h**2)
    n = int(np.prod(domain.shape))
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


# -- eigenpairs ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EigenPair:
    eigenvalue: float
    vector: ScalarField
    residual: float


def _weighted_probes(domain: GridDomain, interior: np.ndarray, m: int) -> np.ndarray:
    """Fixed smooth functions in physical coordinates, resolution independent."""
    rng = np.random.default_rng(20240611)
    pts = [p.ravel()[interior] for p in domain.mesh()]
    cols = []
    for _ in range(m):
        freq = rng.normal(size=len(pts)) * 2.0
        phase = rng.uniform(0, 2 * np.pi)
        cols.append(np.cos(sum(f * p for f, p in zip(freq, pts)) + phase) + 0.3 * rng.normal())
    return np.column_stack(cols)


def _canonicalize(vals: np.ndarray, vecs: np.ndarray, domain: GridDomain, interior: np.ndarray,
                  rel_gap: float) -> np.ndarray:
    """Pick a grid-independent basis inside numerically degenerate clusters."""
    vecs = vecs.copy()
    i = 0
    while i < len(vals):
        j = i + 1
        while j < len(vals) and vals[j] - vals[i] <= rel_gap * max(abs(vals[i]), 1e-300):
            j += 1
        if j - i > 1:
            block = vecs[:, i:j]
            probes = _weighted_probes(domain, interior, j - i)
            coef = block.T @ probes
            q, _ = np.linalg.qr(coef)
            vecs[:, i:j] = block @ q
        i = j
    return vecs


def eigensolve(L: SparseSymmetricOperator, k: int = 1, tol: float = 1e-8, cluster_gap: float = 1e-6,
               maxiter: int | None = None) -> list[EigenPair]:
    """k smallest eigenpairs by shift-invert Lanczos (ARPACK) around zero.

    Vectors are normalized so that h^d sum u^2 = 1 and signed so their sum is
    positive.  Degenerate clusters are rotated onto a fixed probe family so
    that the returned basis does not depend on the grid.
    """
    n = L.dimension
    if k < 1:
        raise ValueError("k must be >= 1")
    M = L.matrix.astype(float)
    if n <= max(k + 1, 200):
        vals, vecs = scipy.linalg.eigh(M.toarray())
        vals, vecs = vals[:k], vecs[:, :k]
    else:
        try:
            vals, vecs = spla.eigsh(M.tocsc(), k=k, sigma=0.0, which="LM", tol=tol * 1e-3, maxiter=maxiter)
        except spla.ArpackNoConvergence as exc:
            got = exc.eigenvalues
            raise ConvergenceError(f"eigsh converged {len(got)} of {k} pairs", float("nan")) from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    vecs = _canonicalize(vals, vecs, L.domain, L.interior, cluster_gap)
    scale = L.domain.h ** (L.domain.ndim / 2)
    out = []
    for lam, v in zip(vals, vecs.T):
        v = v / np.linalg.norm(v)
        res = float(np.linalg.norm(M @ v - lam * v)) / max(abs(lam), 1.0)
        if res > tol:
            raise ConvergenceError(f"eigenpair lambda={lam:.6g} above tolerance {tol:g}", res)
        if v.sum() < 0:
            v = -v
        out.append(EigenPair(float(lam), L.to_field(v / scale, eigenvalue=float(lam)), res))
    return out


def eigen_report(pairs: Sequence[EigenPair], path: str | Path | None = None) -> dict:
    dom = pairs[0].vector.domain if pairs else None
    rep = {
        "eigenvalues": [p.eigenvalue for p in pairs],
        "residuals": [p.residual for p in pairs],
        "grid": None if dom is None else {"shape": list(dom.shape), "h": dom.h, "origin": list(dom.origin),
                                          "interior": int(dom.mask.sum())},
    }
    if path is not None:
        Path(path).write_text(json.dumps(rep, indent=2))
    return rep


# -- boundary value problems -----------------------------------------------

def solve_dirichlet(L: SparseSymmetricOperator, boundary, check: float = 1e-10) -> ScalarField:
    """Solve -div(A grad u) = 0 on the interior with data on the non-interior nodes.

    ``boundary`` is a callable of the node coordinates or an array on the full grid.
    """
    dom = L.domain
    if callable(boundary):
        g = np.asarray(boundary(*dom.mesh()), dtype=float)
        g = np.broadcast_to(g, dom.shape).copy()
    else:
        g = np.array(boundary.values if isinstance(boundary, ScalarField) else boundary, dtype=float)
    g[dom.mask] = 0.0
    if not (dom.ring().any() or not all(dom.periodic)):
        raise DomainError("no boundary nodes: Dirichlet problem is singular")
    rhs = -(L.coupling @ g.ravel())
    lu = spla.splu(L.matrix.tocsc())
    u = lu.solve(rhs)
    res = np.linalg.norm(L.matrix @ u - rhs) / max(np.linalg.norm(rhs), 1e-300)
    assert res <= check or np.linalg.norm(rhs) == 0, f"linear solve residual {res:.2e}"
    return L.to_field(u, boundary=g)


def rayleigh_quotient(u: ScalarField, L: SparseSymmetricOperator | None = None) -> float:
    """Discrete int|grad u|^2 / int u^2 with forward differences, zero outside the mask."""
    vals = np.where(u.domain.mask, u.values, 0.0)
    if L is not None:
        v = vals.ravel()[L.interior]
        return float(v @ (L.matrix @ v) / (v @ v))
    num = 0.0
    for ax in range(vals.ndim):
        if u.domain.periodic[ax]:
            d = np.roll(vals, -1, axis=ax) - vals
        else:
            d = np.diff(vals, axis=ax)
        num += float(np.sum(d**2)) / u.h**2
    return num / float(np.sum(vals**2))


def first_eigenvalue(domain: GridDomain) -> float:
    return eigensolve(assemble_dirichlet(domain), 1)[0].eigenvalue


def domain_monotonicity_check(inner: GridDomain, outer: GridDomain, tol: float = 1e-9) -> tuple[float, float, bool]:
    if inner.shape != outer.shape or inner.h != outer.h:
        raise ValueError("domains must share a grid")
    if np.any(inner.mask & ~outer.mask):
        raise ValueError("first domain is not contained in the second")
    l1, l2 = first_eigenvalue(inner), first_eigenvalue(outer)
    return l1, l2, bool(l1 >= l2 - tol * max(l2, 1.0))


def minmax_check(L: SparseSymmetricOperator, k: int, basis: np.ndarray, rng: np.random.Generator,
                 trials: int = 400, decay: np.ndarray | None = None) -> float:
    """min over random k-dim subspaces of the max Rayleigh quotient.

    ``basis`` columns span a trial space on the interior nodes (independent of
    the eigensolver); ``decay`` weights the random coefficients so subspaces
    favour low frequencies.  Each subspace's max quotient is its top Ritz value.
    """
    M = L.matrix
    weights = np.ones(basis.shape[1]) if decay is None else np.asarray(decay)
    MB = basis.T @ (M @ basis)
    GB = basis.T @ basis
    best = np.inf
    for _ in range(trials):
        c = rng.normal(size=(basis.shape[1], k)) * weights[:, None]
        a = c.T @ MB @ c
        b = c.T @ GB @ c
        best = min(best, float(scipy.linalg.eigh(a, b, eigvals_only=True)[-1]))
    return best


# -- appendix inequalities ---------------------------------------------------

def _region_ok(u: ScalarField, region: np.ndarray, center, extent) -> None:
    if not u.covers(region, center, extent):
        raise DomainError("region exceeds the field's defined data")


def harnack_ratio(u: ScalarField, center: Sequence[float], r: float) -> float:
    """sup_B u / inf_B u for a solution positive on 2B."""
    big = u.ball(center, 2 * r)
    _region_ok(u, big, center, 2 * r)
    if np.any(u.values[big] <= 0):
        raise ValueError("field must be positive on 2B")
    b = u.ball(center, r)
    return float(u.values[b].max() / u.values[b].min())


def oscillation_ratio(u: ScalarField, center: Sequence[float], side: float, s: float) -> tuple[float, bool]:
    """(osc_{sQ} u / osc_Q u, degenerate flag); 0/0 returns (0, True)."""
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    q = u.cube(center, side)
    _region_ok(u, q, center, side / 2)
    osc_q = float(np.ptp(u.values[q]))
    osc_s = float(np.ptp(u.values[u.cube(center, s * side)]))
    if osc_q == 0.0:
        return 0.0, True
    return osc_s / osc_q, False


@dataclass(frozen=True)
class CaccioppoliResult:
    lhs: float
    rhs: float
    ratio: float
    passed: bool


def caccioppoli_check(u: ScalarField, center: Sequence[float], r: float, R: float,
                      C: float = float("inf")) -> CaccioppoliResult:
    """int_{B_r} |grad u|^2 against int_{B_R} u^2 / (R - r)^2 by cell quadrature."""
    if not 0 < r < R:
        raise ValueError("need 0 < r < R")
    big = u.ball(center, R)
    _region_ok(u, big, center, R + u.h)
    grads = u.gradient()
    cell = u.h**u.ndim
    small = u.ball(center, r)
    lhs = float(sum(np.sum(g[small] ** 2) for g in grads) * cell)
    rhs = float(np.sum(u.values[big] ** 2) * cell / (R - r) ** 2)
    ratio = lhs / rhs if rhs > 0 else 0.0
    return CaccioppoliResult(lhs, rhs, ratio, bool(ratio <= C))


def norm_equivalence(u: ScalarField, center: Sequence[float], r: float) -> tuple[float, float, float]:
    """(sup_B |u|, L2 average on B, L2 average on 2B)."""
    b, b2 = u.ball(center, r), u.ball(center, 2 * r)
    _region_ok(u, b2, center, 2 * r)
    avg = lambda sel: float(np.sqrt(np.mean(u.values[sel] ** 2)))  # noqa: E731
    return u.sup(b), avg(b), avg(b2)
