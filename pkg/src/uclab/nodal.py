"""Zero sets, nodal domains and their geometry on grid fields.

Sign rule: a node is positive, negative or zero (``|u| <= zero_tol``).  Zero
nodes belong to no nodal domain; for contouring they count as nonnegative.
Components use 4-connectivity and wrap across periodic axes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .discrete_laplace import assemble_dirichlet, eigensolve
from .fields import GridDomain, ScalarField
from .growth import _sup_box, doubling_cube
from .model_spectra import ModelEigenfunction, disk_eigenfunction, torus_combination


# -- contouring --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NodalSet:
    segments: np.ndarray  # (m, 2, 2): segment, endpoint, coordinate
    length: float
    plateau: bool = False

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x0", "y0", "x1", "y1"])
            for (a, b) in self.segments:
                w.writerow([repr(float(a[0])), repr(float(a[1])), repr(float(b[0])), repr(float(b[1]))])

    def to_svg(self, path: str | Path, size: int = 512) -> None:
        if len(self.segments) == 0:
            lo, hi = np.zeros(2), np.ones(2)
        else:
            pts = self.segments.reshape(-1, 2)
            lo, hi = pts.min(axis=0), pts.max(axis=0)
        span = float(max(hi - lo)) or 1.0
        scale = size / span
        lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">']
        for a, b in self.segments:
            x0, y0 = (a - lo) * scale
            x1, y1 = (b - lo) * scale
            lines.append(f'<polyline points="{x0:.3f},{size - y0:.3f} {x1:.3f},{size - y1:.3f}" '
                         'stroke="black" fill="none" stroke-width="1"/>')
        lines.append("</svg>")
        Path(path).write_text("\n".join(lines) + "\n")


def _default_region(u: ScalarField) -> np.ndarray:
    return u.defined & u.domain.mask


def _wrapped(u: ScalarField, region: np.ndarray):
    """Values, region and axes padded by one node along periodic axes."""
    vals, reg = u.values, region
    axes = u.domain.axes()
    for ax, per in enumerate(u.domain.periodic):
        if per:
            first = np.take(vals, [0], axis=ax)
            vals = np.concatenate([vals, first], axis=ax)
            reg = np.concatenate([reg, np.take(reg, [0], axis=ax)], axis=ax)
            axes[ax] = np.append(axes[ax], axes[ax][-1] + u.h)
    return vals, reg, axes


def extract_zero_set(u: ScalarField, region: np.ndarray | None = None, zero_tol: float = 0.0) -> NodalSet:
    """Marching squares on cells whose four corners lie in ``region``.

    Crossings are linear interpolation points on cell edges; saddle cells
    (four crossings) are resolved by the sign of the cell-center average.
    """
    if u.ndim != 2:
        raise ValueError("zero-set extraction is 2D")
    region = _default_region(u) if region is None else region
    vals, reg, (xs, ys) = _wrapped(u, region)
    v = np.where(np.abs(vals) <= zero_tol, 0.0, vals)
    v00, v10, v01, v11 = v[:-1, :-1], v[1:, :-1], v[:-1, 1:], v[1:, 1:]
    cell_ok = reg[:-1, :-1] & reg[1:, :-1] & reg[:-1, 1:] & reg[1:, 1:]
    plateau = bool(np.any(cell_ok & (v00 == 0) & (v10 == 0) & (v01 == 0) & (v11 == 0)))
    X, Y = np.meshgrid(xs[:-1], ys[:-1], indexing="ij")
    h = u.h
    s = [a >= 0 for a in (v00, v10, v01, v11)]

    def cross(va, vb, sa, sb, pa, pb):
        hit = sa != sb
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(hit, va / (va - vb), np.nan)
        return hit, pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])

    c00 = (X, Y)
    c10 = (X + h, Y)
    c01 = (X, Y + h)
    c11 = (X + h, Y + h)
    edges = [
        cross(v00, v10, s[0], s[1], c00, c10),  # bottom
        cross(v10, v11, s[1], s[3], c10, c11),  # right
        cross(v01, v11, s[2], s[3], c01, c11),  # top
        cross(v00, v01, s[0], s[2], c00, c01),  # left
    ]
    hits = np.stack([e[0] for e in edges]) & cell_ok
    count = hits.sum(axis=0)
    pts = [np.stack([e[1], e[2]], axis=-1) for e in edges]
    segs = []
    two = count == 2
    if two.any():
        idx = np.argsort(~hits[:, two], axis=0, kind="stable")[:2]
        cand = np.stack([p[two] for p in pts])  # (4, m, 2)
        cols = np.arange(two.sum())
        segs.append(np.stack([cand[idx[0], cols], cand[idx[1], cols]], axis=1))
    four = count == 4
    if four.any():
        center = 0.25 * (v00 + v10 + v01 + v11)[four]
        joined = (center >= 0) == s[0][four]
        P = [p[four] for p in pts]
        # center shares v00's sign: separate corners 10 and 01
        a = np.where(joined[:, None], P[0], P[0])
        b = np.where(joined[:, None], P[1], P[3])
        c = np.where(joined[:, None], P[2], P[1])
        d = np.where(joined[:, None], P[3], P[2])
        segs.append(np.stack([a, b], axis=1))
        segs.append(np.stack([c, d], axis=1))
    segments = np.concatenate(segs) if segs else np.zeros((0, 2, 2))
    # drop zero-length pieces produced by exact-zero corners
    lengths = np.linalg.norm(segments[:, 1] - segments[:, 0], axis=1) if len(segments) else np.zeros(0)
    keep = lengths > 0
    return NodalSet(segments[keep], float(lengths[keep].sum()), plateau)


# -- nodal domains --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NodalDomainLabeling:
    labels: np.ndarray  # 0 = no domain
    count: int
    signs: np.ndarray  # sign per label 1..count


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _wrap_labels(labels: np.ndarray, periodic) -> np.ndarray:
    for ax, per in enumerate(periodic):
        if per:
            labels = np.concatenate([labels, np.take(labels, [0], axis=ax)], axis=ax)
    return labels


def label_nodal_domains(u: ScalarField, region: np.ndarray | None = None, zero_tol: float = 0.0,
                        saddle: bool = False) -> NodalDomainLabeling:
    """Components of {u > tol} and {u < -tol} under 4-connectivity.

    With ``saddle`` (2D only), a checkerboard cell also joins the diagonal pair
    whose sign matches the cell-center average, the same rule the contour
    extractor uses, so the labeling agrees with the extracted zero set.
    """
    region = _default_region(u) if region is None else region
    v = u.values
    pos = region & (v > zero_tol)
    neg = region & (v < -zero_tol)
    structure = ndimage.generate_binary_structure(u.ndim, 1)
    lab_p, n_p = ndimage.label(pos, structure)
    lab_n, n_n = ndimage.label(neg, structure)
    labels = np.where(pos, lab_p, 0) + np.where(neg, lab_n + n_p, 0)
    total = n_p + n_n
    uf = _UnionFind(total + 1)
    for ax, per in enumerate(u.domain.periodic):
        if per:
            a = np.take(labels, 0, axis=ax)
            b = np.take(labels, -1, axis=ax)
            both = (a > 0) & (b > 0)
            for la, lb in zip(a[both], b[both]):
                same_sign = (la <= n_p) == (lb <= n_p)
                if same_sign:
                    uf.union(int(la), int(lb))
    if saddle and u.ndim == 2:
        vals, _, _ = _wrapped(u, region)
        lab = _wrap_labels(labels, u.domain.periodic)
        a, b, c, d = lab[:-1, :-1], lab[1:, 1:], lab[:-1, 1:], lab[1:, :-1]
        va, vb, vc, vd = vals[:-1, :-1], vals[1:, 1:], vals[:-1, 1:], vals[1:, :-1]
        pos_ab = (va > 0) & (vb > 0) & (vc < 0) & (vd < 0)
        neg_ab = (va < 0) & (vb < 0) & (vc > 0) & (vd > 0)
        cb = (pos_ab | neg_ab) & (a > 0) & (b > 0) & (c > 0) & (d > 0)
        mid = 0.25 * (va + vb + vc + vd)
        for i, j in zip(*np.nonzero(cb)):
            m = mid[i, j]
            if m == 0:
                continue
            if (m > 0) == bool(pos_ab[i, j]):
                uf.union(int(a[i, j]), int(b[i, j]))
            else:
                uf.union(int(c[i, j]), int(d[i, j]))
    roots = np.array([uf.find(i) for i in range(total + 1)])
    uniq = np.unique(roots[1:]) if total else np.zeros(0, dtype=int)
    remap = np.zeros(total + 1, dtype=int)
    for new, r in enumerate(uniq, start=1):
        remap[roots == r] = new
    remap[0] = 0
    out = remap[labels]
    signs = np.array([1 if r <= n_p else -1 for r in uniq], dtype=int)
    return NodalDomainLabeling(out, int(len(uniq)), signs)


def count_nodal_domains(u: ScalarField, region: np.ndarray | None = None, zero_tol: float = 0.0,
                        saddle: bool = False) -> int:
    return label_nodal_domains(u, region, zero_tol, saddle).count


def circle_nodal_intervals(values: np.ndarray) -> int:
    """Sign-change count of a periodic 1D sample, i.e. its nodal intervals."""
    s = np.sign(values)
    s = s[s != 0]
    if s.size == 0:
        return 0
    changes = int(np.sum(s != np.roll(s, 1)))
    return max(changes, 1)


# -- zero density -----------------------------------------------------------------

def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = np.maximum(np.sum(ab * ab, axis=-1), 1e-300)
    t = np.clip(np.sum((p - a) * ab, axis=-1) / denom, 0.0, 1.0)
    return np.linalg.norm(p - (a + t[..., None] * ab), axis=-1)


def _bisect(f, lo: float, hi: float, tol: float = 1e-13) -> float:
    flo = f(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def zero_density_radius(phi: ModelEigenfunction) -> float:
    """Largest distance from a sample point to the zero set.

    On the circle the zeros are located by bisection on the closed form and the
    result is half the largest gap between consecutive zeros (the sup over all
    points).  On the torus it is the max over grid nodes of the exact distance
    to the contoured zero set, with periodic wrap.
    """
    if phi.eigenvalue <= 0:
        raise ValueError("zero density needs lambda > 0 (constant eigenfunctions have no zeros)")
    if phi.domain == "circle":
        th = phi.axes[0]
        vals = phi.values
        period = 2 * math.pi
        zeros = []
        for i in range(len(th)):
            j = (i + 1) % len(th)
            a, b = th[i], th[j] + (period if j == 0 else 0.0)
            if vals[i] == 0:
                zeros.append(a)
            elif vals[i] * vals[j] < 0:
                zeros.append(_bisect(lambda t: float(phi.func(t)), a, b))
        zeros = np.sort(np.mod(zeros, period))
        gaps = np.diff(np.append(zeros, zeros[0] + period))
        return float(gaps.max() / 2)
    if phi.domain != "torus" or len(phi.axes) != 2:
        raise ValueError("zero density is implemented for the circle and the 2-torus")
    u = phi.field()
    Z = extract_zero_set(u)
    if len(Z.segments) == 0:
        raise ValueError("eigenfunction has no zero set on this grid")
    period = 2 * math.pi
    lo = np.array([a[0] for a in phi.axes])
    mids = np.mod(Z.segments.mean(axis=1) - lo, period)
    tree = cKDTree(mids, boxsize=period)
    pts = np.stack([np.mod(m.ravel() - l, period) for m, l in zip(u.domain.mesh(), lo)], axis=-1)
    k = min(12, len(mids))
    _, idx = tree.query(pts, k=k)
    idx = idx.reshape(len(pts), k)
    a = np.mod(Z.segments[idx, 0] - lo, period)
    b = np.mod(Z.segments[idx, 1] - lo, period)
    wrap = lambda v: np.mod(v + period / 2, period) - period / 2  # noqa: E731
    da = wrap(a - pts[:, None, :])
    db = da + wrap(b - a)
    d = _point_segment_distance(np.zeros(2), da, db).min(axis=1)
    return float(d.max())


# -- Yau scaling ----------------------------------------------------------------------

@dataclass(frozen=True)
class YauFit:
    lams: np.ndarray
    lengths: np.ndarray
    slope: float
    C1: float
    C2: float


def lattice_modes(lam: int) -> list[tuple[int, int]]:
    """Integer frequencies (p, q) with p^2 + q^2 = lam, one per +- pair."""
    out = []
    r = int(math.isqrt(lam))
    for p in range(-r, r + 1):
        q2 = lam - p * p
        q = int(math.isqrt(q2))
        for qq in {q, -q}:
            if qq * qq == q2 and (p > 0 or (p == 0 and qq > 0)):
                out.append((p, qq))
    return sorted(out)


def torus_random_wave(lam: int, rng: np.random.Generator, points: int = 256) -> ModelEigenfunction:
    """Seeded random combination of every cos/sin plane wave with frequency |k|^2 = lam."""
    modes = lattice_modes(lam)
    if not modes:
        raise ValueError(f"{lam} is not a sum of two squares")
    terms = []
    for k in modes:
        a, b = rng.normal(size=2)
        terms += [(float(a), k, "cos"), (float(b), k, "sin")]
    return torus_combination(terms, points=points)


def yau_scaling_fit(lams: Sequence[int], family: str = "torus", seed: int = 0, points: int = 512,
                    disk_h: float = 1 / 256) -> YauFit:
    """Log-log regression of nodal length against lambda.

    torus: random waves on [-pi, pi)^2 (integer lambda, sum of two squares).
    disk: ``lams`` are (n, k) index pairs of J_n(j_{n,k} r) cos(n theta).
    """
    if len(lams) < 2:
        raise ValueError("need at least two eigenvalues for a slope")
    rng = np.random.default_rng(seed)
    vals, lengths = [], []
    for lam in lams:
        if family == "torus":
            phi = torus_random_wave(int(lam), rng, points)
            u = phi.field()
        elif family == "disk":
            n, k = lam
            phi = disk_eigenfunction(n, k)
            u = phi.cartesian(disk_h)
        else:
            raise ValueError(f"unknown family {family!r}")
        vals.append(phi.eigenvalue)
        lengths.append(extract_zero_set(u).length)
    vals = np.array(vals)
    lengths = np.array(lengths)
    if np.unique(vals).size < 2:
        raise ValueError("need at least two distinct eigenvalues for a slope")
    if np.any(lengths <= 0):
        raise ValueError("a mode in the sweep has no interior zero set (e.g. the first disk mode)")
    slope = float(np.polyfit(np.log(vals), np.log(lengths), 1)[0])
    ratio = lengths / np.sqrt(vals)
    return YauFit(vals, lengths, slope, float(ratio.min()), float(ratio.max()))


# -- nodal domains as Dirichlet domains -----------------------------------------------

def nodal_domain_eigenvalue_check(u: ScalarField, lam: float, component: int,
                                  labeling: NodalDomainLabeling | None = None,
                                  zero_tol: float | None = None) -> tuple[float, float]:
    """(lambda_1 of the component, relative gap to lambda)."""
    if zero_tol is None:
        zero_tol = 1e-10 * float(np.max(np.abs(u.values)))
    labeling = label_nodal_domains(u, zero_tol=zero_tol) if labeling is None else labeling
    if not 1 <= component <= labeling.count:
        raise ValueError(f"component {component} out of range 1..{labeling.count}")
    dom = GridDomain(labeling.labels == component, u.h, u.domain.origin, u.domain.periodic)
    lam1 = eigensolve(assemble_dirichlet(dom), 1)[0].eigenvalue
    return lam1, abs(lam1 - lam) / lam


# -- nodal measure against doubling ---------------------------------------------------

@dataclass(frozen=True)
class NodalScatter:
    doubling: np.ndarray
    length: np.ndarray
    lower_envelope: np.ndarray
    upper_envelope: np.ndarray

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["doubling", "length", "f_hat", "F_hat"])
            for row in zip(self.doubling, self.length, self.lower_envelope, self.upper_envelope):
                w.writerow([repr(float(v)) for v in row])


def _cube_region(u: ScalarField, center, side: float) -> np.ndarray:
    return u.cube(center, side) & u.defined


def nodal_measure_vs_doubling(fields: Sequence[ScalarField], center: Sequence[float], side: float,
                              vanish_tol: float = 1e-8, depth: int = 3, jitter: int = 16) -> NodalScatter:
    """(cube doubling index, nodal length in Q) for fields vanishing at the center.

    Envelopes: f_hat(N) = min length over records with index >= N and
    F_hat(N) = max length over records with index <= N, both nondecreasing.
    """
    dbl, lens = [], []
    for u in fields:
        c0 = float(u.interpolator("linear")(np.asarray(center, dtype=float)[None, :])[0])
        if abs(c0) > vanish_tol * u.sup():
            raise ValueError("field does not vanish at the cube center")
        dbl.append(doubling_cube(u, center, side, depth=depth, jitter=jitter).value)
        lens.append(extract_zero_set(u, _cube_region(u, center, side)).length)
    dbl = np.array(dbl)
    lens = np.array(lens)
    order = np.argsort(dbl)
    lo = np.empty_like(lens)
    hi = np.empty_like(lens)
    lo[order] = np.minimum.accumulate(lens[order][::-1])[::-1]
    hi[order] = np.maximum.accumulate(lens[order])
    return NodalScatter(dbl, lens, lo, hi)


def zero_cube_growth(u: ScalarField, center: Sequence[float], side: float, q_side: float, K: float) -> float:
    """min over cubes q (a q_side grid in Q) meeting the zero set of log(max_{Kq}|u| / max_q|u|)."""
    n = int(round(side / q_side))
    offs = (np.arange(n) + 0.5) * q_side - side / 2
    worst = float("inf")
    for a in offs:
        for b in offs:
            c = (center[0] + a, center[1] + b)
            sel = u.cube(c, q_side) & u.defined
            v = u.values[sel]
            if v.size == 0 or not (v.min() < 0 < v.max()):
                continue
            big = _sup_box(u, c, K * q_side / 2, require=True)
            worst = min(worst, math.log(big / float(np.abs(v).max())))
    return worst


def calibrate_zero_cube_factor(fields: Sequence[ScalarField], center, side: float, q_side: float,
                               target: float = 2.0, K_max: float = 64.0) -> float:
    """Smallest K on a half-integer grid with min growth >= target on every field."""
    K = 2.0
    while K <= K_max:
        if all(zero_cube_growth(u, center, side, q_side, K) >= target for u in fields):
            return K
        K += 0.5
    return float("inf")


# -- Courant bound over a computed spectrum -------------------------------------------

@dataclass(frozen=True)
class CourantTable:
    eigenvalues: np.ndarray
    counts: np.ndarray
    bounds: np.ndarray       # smallest index sharing the eigenvalue (1-based)
    combo_max: np.ndarray    # largest count over random combinations inside the cluster, 0 if simple
    passed: bool

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "lambda", "count", "bound", "combo_max"])
            for i, row in enumerate(zip(self.eigenvalues, self.counts, self.bounds, self.combo_max), start=1):
                w.writerow([i, repr(float(row[0])), int(row[1]), int(row[2]), int(row[3])])


def courant_table(domain: GridDomain, k: int = 20, combos: int = 8, seed: int = 0,
                  cluster_gap: float = 1e-6, zero_rel: float = 1e-8, saddle: bool = False) -> CourantTable:
    """Nodal-domain counts of the first k Dirichlet eigenfunctions of a grid domain.

    Each returned vector must have at most k domains; inside a numerically
    degenerate cluster, random unit combinations are also checked against the
    cluster's first index.  Values below zero_rel * max|u| count as zeros, so
    round-off on lattice symmetry lines cannot bridge opposite domains.
    """
    pairs = eigensolve(assemble_dirichlet(domain), k, cluster_gap=cluster_gap)
    lams = np.array([p.eigenvalue for p in pairs])
    def count(v: ScalarField) -> int:
        return count_nodal_domains(v, zero_tol=zero_rel * float(np.abs(v.values).max()), saddle=saddle)

    counts = np.array([count(p.vector) for p in pairs])
    bounds = np.arange(1, k + 1)
    i = 0
    while i < k:
        j = i + 1
        while j < k and lams[j] - lams[i] <= cluster_gap * lams[i]:
            j += 1
        bounds[i:j] = i + 1
        i = j
    combo_max = np.zeros(k, dtype=int)
    rng = np.random.default_rng(seed)
    for first in np.unique(bounds):
        members = np.flatnonzero(bounds == first)
        if members.size < 2:
            continue
        best = 0
        for _ in range(combos):
            c = rng.normal(size=members.size)
            c /= np.linalg.norm(c)
            vals = sum(ci * pairs[m].vector.values for ci, m in zip(c, members))
            v = ScalarField(vals, pairs[0].vector.domain, pairs[0].vector.defined)
            best = max(best, count(v))
        combo_max[members] = best
    passed = bool(np.all(counts <= np.arange(1, k + 1)) and np.all(combo_max <= bounds))
    return CourantTable(lams, counts, bounds, combo_max, passed)
