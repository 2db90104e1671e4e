"""Sampled grids and scalar fields.

Every field in the package lives on a uniform node grid: node ``i`` along an
axis sits at ``origin + i * h``.  A :class:`GridDomain` marks which nodes are
interior unknowns; a :class:`ScalarField` carries values on all nodes plus a
``defined`` mask for the nodes whose values are meaningful (interior plus the
Dirichlet ring for solver output, everything for closed-form samples).

Balls and cubes are index sets: "max over a ball" is the max over defined nodes
whose coordinates lie in the closed ball (with a 1e-9*h slack so that nodes
sitting exactly on the sphere are included).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage
from scipy.interpolate import RegularGridInterpolator


class DomainError(ValueError):
    """Raised when a region or radius does not fit the available data."""


@dataclass(frozen=True, eq=False)
class GridDomain:
    mask: np.ndarray
    h: float
    origin: tuple[float, ...]
    periodic: tuple[bool, ...] = ()

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        object.__setattr__(self, "mask", mask)
        if self.h <= 0:
            raise ValueError("spacing must be positive")
        if len(self.origin) != mask.ndim:
            raise ValueError("origin dimension does not match mask")
        if not self.periodic:
            object.__setattr__(self, "periodic", (False,) * mask.ndim)

    @property
    def ndim(self) -> int:
        return self.mask.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.mask.shape

    def axes(self) -> list[np.ndarray]:
        return [o + self.h * np.arange(n) for o, n in zip(self.origin, self.shape)]

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij")

    def n_components(self) -> int:
        _, n = ndimage.label(self.mask)
        return int(n)

    def ring(self) -> np.ndarray:
        """Non-interior nodes adjacent (4-neighbour) to the interior."""
        grown = ndimage.binary_dilation(self.mask, structure=ndimage.generate_binary_structure(self.ndim, 1))
        return grown & ~self.mask

    def with_mask(self, mask: np.ndarray) -> "GridDomain":
        return GridDomain(np.asarray(mask, dtype=bool), self.h, self.origin, self.periodic)


def box_domain(lo: Sequence[float], hi: Sequence[float], h: float) -> GridDomain:
    """All-interior grid covering the box with nodes on ``lo + i*h``."""
    counts = [int(round((b - a) / h)) + 1 for a, b in zip(lo, hi)]
    return GridDomain(np.ones(counts, dtype=bool), h, tuple(float(a) for a in lo))


def square_domain(n: int, lo: float = 0.0, hi: float = 1.0) -> GridDomain:
    """Square with ``n`` intervals per side; boundary nodes are exterior."""
    h = (hi - lo) / n
    mask = np.zeros((n + 1, n + 1), dtype=bool)
    mask[1:-1, 1:-1] = True
    return GridDomain(mask, h, (lo, lo))


def disk_domain(h: float, radius: float = 1.0, center: Sequence[float] = (0.0, 0.0)) -> GridDomain:
    n = int(np.ceil(radius / h)) + 1
    axis = h * np.arange(-n, n + 1)
    x, y = np.meshgrid(axis, axis, indexing="ij")
    mask = x**2 + y**2 < radius**2 * (1 - 1e-12)
    return GridDomain(mask, h, (center[0] - n * h, center[1] - n * h))


def level_set_domain(phi: Callable, lo: Sequence[float], hi: Sequence[float], h: float) -> GridDomain:
    """Interior = nodes with ``phi < 0`` strictly inside the box, largest component kept."""
    box = box_domain(lo, hi, h)
    pts = box.mesh()
    mask = np.asarray(phi(*pts)) < 0
    edge = np.zeros_like(mask)
    for ax in range(mask.ndim):
        sl = [slice(None)] * mask.ndim
        sl[ax] = 0
        edge[tuple(sl)] = True
        sl[ax] = -1
        edge[tuple(sl)] = True
    mask &= ~edge
    lab, n = ndimage.label(mask)
    if n == 0:
        raise DomainError("empty interior")
    sizes = ndimage.sum(mask, lab, index=np.arange(1, n + 1))
    mask = lab == (1 + int(np.argmax(sizes)))
    return box.with_mask(mask)


@dataclass(frozen=True, eq=False)
class ScalarField:
    values: np.ndarray
    domain: GridDomain
    defined: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.domain.shape:
            raise ValueError(f"values shape {vals.shape} != grid {self.domain.shape}")
        object.__setattr__(self, "values", vals)
        if self.defined is None:
            object.__setattr__(self, "defined", np.ones(vals.shape, dtype=bool))
        if not np.all(np.isfinite(vals[self.defined])):
            raise ValueError("non-finite field values")

    @classmethod
    def from_function(cls, f: Callable, lo, hi, h: float, **meta) -> "ScalarField":
        dom = box_domain(lo, hi, h)
        return cls(np.asarray(f(*dom.mesh()), dtype=float), dom, meta=dict(meta))

    @property
    def h(self) -> float:
        return self.domain.h

    @property
    def ndim(self) -> int:
        return self.domain.ndim

    def sup(self, region: np.ndarray | None = None) -> float:
        sel = self.defined if region is None else (region & self.defined)
        if not sel.any():
            raise DomainError("region contains no defined nodes")
        return float(np.max(np.abs(self.values[sel])))

    def l2norm(self, region: np.ndarray | None = None) -> float:
        sel = self.defined if region is None else (region & self.defined)
        return float(np.sqrt(np.sum(self.values[sel] ** 2) * self.h**self.ndim))

    def ball(self, center: Sequence[float], r: float) -> np.ndarray:
        pts = self.domain.mesh()
        d2 = sum((p - c) ** 2 for p, c in zip(pts, center))
        return d2 <= (r + 1e-9 * self.h) ** 2

    def cube(self, center: Sequence[float], side: float) -> np.ndarray:
        """Closed cube of given side length as a node mask."""
        sel = np.ones(self.domain.shape, dtype=bool)
        half = side / 2 + 1e-9 * self.h
        for p, c in zip(self.domain.mesh(), center):
            sel &= np.abs(p - c) <= half
        return sel

    def covers(self, region: np.ndarray, center: Sequence[float], extent: float) -> bool:
        """True when the closed box ``center +- extent`` lies inside the defined grid."""
        for ax, c in zip(self.domain.axes(), center):
            if c - extent < ax[0] - 1e-9 * self.h or c + extent > ax[-1] + 1e-9 * self.h:
                return False
        return bool(self.defined[region].all())

    def interpolator(self, method: str = "linear") -> RegularGridInterpolator:
        return RegularGridInterpolator(tuple(self.domain.axes()), self.values, method=method,
                                       bounds_error=True)

    def gradient(self) -> list[np.ndarray]:
        """Central-difference gradient (one-sided at the grid edge)."""
        grads = np.gradient(self.values, self.h)
        return list(grads) if self.ndim > 1 else [grads]

    def with_values(self, values: np.ndarray, **meta) -> "ScalarField":
        return ScalarField(values, self.domain, self.defined, {**self.meta, **meta})

    # -- serialization -------------------------------------------------
    def save_npz(self, path: str | Path) -> None:
        """Self-describing binary grid file plus a JSON metadata sidecar."""
        path = Path(path)
        np.savez(path, values=self.values, mask=self.domain.mask, defined=self.defined,
                 h=self.h, origin=np.asarray(self.domain.origin),
                 periodic=np.asarray(self.domain.periodic))
        path.with_suffix(".json").write_text(json.dumps(_jsonable(self.meta), indent=2, sort_keys=True))

    @classmethod
    def load_npz(cls, path: str | Path) -> "ScalarField":
        path = Path(path)
        data = np.load(path if path.suffix == ".npz" else path.with_suffix(".npz"))
        dom = GridDomain(data["mask"], float(data["h"]), tuple(float(v) for v in data["origin"]),
                         tuple(bool(v) for v in data["periodic"]))
        sidecar = path.with_suffix(".json")
        meta = json.loads(sidecar.read_text()) if sidecar.exists() else {}
        return cls(data["values"], dom, data["defined"], meta)

    def to_csv(self, path: str | Path) -> None:
        pts = self.domain.mesh()
        sel = self.defined
        names = ["x", "y", "z"][: self.ndim]
        cols = [p[sel] for p in pts] + [self.values[sel]]
        np.savetxt(path, np.column_stack(cols), delimiter=",", header=",".join(names + ["value"]),
                   comments="", fmt="%.17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj
