"""Cantor-type regular sets, their natural measures, regularity checks and covers.

Cantor constructions keep exact integer data (cylinder indices on the grid
``M**-k``) next to the floating point endpoints, so that alignment questions
such as "does this cover cell meet the set" are answered by integer arithmetic
whenever possible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Interval",
    "IntervalSet",
    "CantorSpec",
    "MeasuredSet",
    "RegularityReport",
    "RegularityError",
    "DiscreteSet",
    "cantor_digit_indices",
    "cantor_intervals",
    "cantor_dimension",
    "cantor_measure",
    "verify_regularity",
    "cover",
    "cover_bound",
    "thicken",
    "discretize",
]

# relative slack used when snapping floating point endpoints to a grid
_GRID_SLACK = 1e-9


class RegularityError(ValueError):
    """Raised when a measured set contradicts a claimed regularity bound."""

    def __init__(self, message, *, count=None, bound=None):
        super().__init__(message)
        self.count = count
        self.bound = bound


@dataclass(frozen=True, order=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError(f"interval endpoints must be finite, got [{lo}, {hi}]")
        if lo > hi:
            raise ValueError(f"interval requires lo <= hi, got [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def intersect(self, other: "Interval") -> "Interval | None":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval(lo, hi) if lo <= hi else None


def _as_interval(obj) -> Interval:
    if isinstance(obj, Interval):
        return obj
    lo, hi = obj
    return Interval(lo, hi)


class IntervalSet:
    """Finite union of closed intervals, sorted, with pairwise disjoint interiors.

    Intervals may share an endpoint (two Cantor cylinders sitting side by side
    are kept apart so the cylinder structure survives). Pass ``merge=True`` to
    fuse overlapping and touching pieces into maximal intervals instead.
    """

    __slots__ = ("_intervals", "_lo", "_hi")

    def __init__(self, intervals: Iterable = (), *, merge: bool = False):
        items = sorted(_as_interval(iv) for iv in intervals)
        if merge:
            items = _merge(items, touching=True)
        for a, b in zip(items, items[1:]):
            if b.lo < a.hi:
                raise ValueError(f"intervals overlap: {a} and {b}")
        self._intervals = tuple(items)
        self._lo = np.array([iv.lo for iv in items], dtype=float)
        self._hi = np.array([iv.hi for iv in items], dtype=float)

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls(())

    @property
    def intervals(self) -> tuple:
        return self._intervals

    @property
    def los(self) -> np.ndarray:
        return self._lo.copy()

    @property
    def his(self) -> np.ndarray:
        return self._hi.copy()

    def __len__(self):
        return len(self._intervals)

    def __iter__(self):
        return iter(self._intervals)

    def __getitem__(self, i):
        return self._intervals[i]

    def __eq__(self, other):
        return isinstance(other, IntervalSet) and self._intervals == other._intervals

    def __hash__(self):
        return hash(self._intervals)

    def __repr__(self):
        body = ", ".join(f"[{iv.lo:.6g}, {iv.hi:.6g}]" for iv in self._intervals[:6])
        more = "" if len(self) <= 6 else f", ... ({len(self)} intervals)"
        return f"IntervalSet({body}{more})"

    @property
    def is_empty(self) -> bool:
        return not self._intervals

    @property
    def hull(self) -> Interval:
        if self.is_empty:
            raise ValueError("empty set has no hull")
        return Interval(self._lo[0], self._hi[-1])

    def measure(self) -> float:
        """Lebesgue measure (total length)."""
        return float(np.sum(self._hi - self._lo))

    def contains(self, x):
        """Vectorised membership test."""
        x = np.asarray(x, dtype=float)
        i = np.searchsorted(self._lo, x, side="right") - 1
        ok = i >= 0
        ic = np.clip(i, 0, max(len(self) - 1, 0))
        res = ok & (x <= self._hi[ic]) if len(self) else np.zeros_like(x, dtype=bool)
        return bool(res) if res.ndim == 0 else res

    def intersect(self, region: Interval) -> "IntervalSet":
        pieces = []
        for iv in self._intervals:
            piece = iv.intersect(region)
            if piece is not None:
                pieces.append(piece)
        return IntervalSet(pieces)

    def subset_of(self, other: "IntervalSet", tol: float = 0.0) -> bool:
        """True when every interval lies inside a single interval of ``other``."""
        for iv in self._intervals:
            j = np.searchsorted(other._lo, iv.lo + tol, side="right") - 1
            if j < 0 or other._hi[j] < iv.hi - tol:
                return False
        return True

    def to_json(self) -> list:
        return [[iv.lo, iv.hi] for iv in self._intervals]

    @classmethod
    def from_json(cls, data) -> "IntervalSet":
        return cls([tuple(pair) for pair in data])


def _merge(items: Sequence[Interval], touching: bool) -> list:
    out: list = []
    for iv in items:
        if out and (iv.lo < out[-1].hi or (touching and iv.lo == out[-1].hi)):
            if iv.hi > out[-1].hi:
                out[-1] = Interval(out[-1].lo, iv.hi)
        else:
            out.append(iv)
    return out


@dataclass(frozen=True)
class CantorSpec:
    base: int
    alphabet: tuple
    depth: int

    def __post_init__(self):
        base = int(self.base)
        if base != self.base or base < 2:
            raise ValueError(f"base must be an integer >= 2, got {self.base!r}")
        letters = [int(a) for a in self.alphabet]
        if not letters:
            raise ValueError("alphabet must be nonempty")
        if len(set(letters)) != len(letters):
            raise ValueError(f"alphabet has repeated digits: {list(self.alphabet)}")
        if any(a < 0 or a >= base for a in letters):
            raise ValueError(f"alphabet digits must lie in [0, {base - 1}]")
        depth = int(self.depth)
        if depth != self.depth or depth < 0:
            raise ValueError(f"depth must be an integer >= 0, got {self.depth!r}")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "alphabet", tuple(sorted(letters)))
        object.__setattr__(self, "depth", depth)

    @property
    def is_full(self) -> bool:
        return len(self.alphabet) == self.base

    @property
    def dimension(self) -> float:
        return cantor_dimension(self)

    def to_json(self) -> dict:
        return {"base": self.base, "alphabet": list(self.alphabet), "depth": self.depth}

    @classmethod
    def from_json(cls, data: dict) -> "CantorSpec":
        extra = set(data) - {"base", "alphabet", "depth"}
        if extra:
            raise ValueError(f"unknown CantorSpec keys: {sorted(extra)}")
        return cls(data["base"], tuple(data["alphabet"]), data["depth"])


def cantor_digit_indices(base: int, alphabet: Iterable[int], depth: int) -> np.ndarray:
    """Sorted integers ``j < base**depth`` whose base-``base`` digits all lie in ``alphabet``."""
    letters = np.array(sorted(int(a) for a in alphabet), dtype=np.int64)
    idx = np.zeros(1, dtype=np.int64)
    for _ in range(depth):
        idx = np.add.outer(idx * base, letters).ravel()
    return idx


def cantor_dimension(spec: CantorSpec) -> float:
    return math.log(len(spec.alphabet)) / math.log(spec.base)


def cantor_intervals(spec: CantorSpec) -> IntervalSet:
    if spec.is_full:
        return IntervalSet([Interval(0.0, 1.0)])
    scale = spec.base ** spec.depth
    idx = cantor_digit_indices(spec.base, spec.alphabet, spec.depth)
    return IntervalSet(Interval(j / scale, (j + 1) / scale) for j in idx.tolist())


@dataclass(frozen=True, eq=False)
class MeasuredSet:
    """A support set carrying equal mass ``weight`` on each of a list of cells.

    Cell ``j`` is the interval ``[origin + j*cell, origin + (j+1)*cell]``. For a
    Cantor set the cells are the depth-k cylinders and ``cell = M**-k``.
    """

    support: IntervalSet
    cells: np.ndarray
    origin: float
    cell: float
    weight: float
    base: int | None = None
    depth: int | None = None
    _lo: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        cells = np.array(self.cells, dtype=np.int64)
        if cells.ndim != 1:
            raise ValueError("cells must be a 1-D integer array")
        if cells.size and np.any(np.diff(cells) <= 0):
            raise ValueError("cells must be strictly increasing")
        if not self.cell > 0:
            raise ValueError("cell length must be positive")
        if not self.weight > 0:
            raise ValueError("cell weight must be positive")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        lo = self.origin + cells * self.cell
        lo.setflags(write=False)
        object.__setattr__(self, "_lo", lo)
        if cells.size:
            cyl = IntervalSet(Interval(a, a + self.cell) for a in np.unique(lo[[0, -1]]))
            if not cyl.subset_of(self.support, tol=1e-12 * max(1.0, abs(self.cell))):
                raise ValueError("weighted cylinders must lie inside the support")

    @property
    def total_mass(self) -> float:
        return self.weight * len(self.cells)

    @property
    def cylinder_weight(self) -> dict:
        return {int(j): self.weight for j in self.cells}

    @property
    def cell_los(self) -> np.ndarray:
        return self._lo

    @property
    def endpoints(self) -> np.ndarray:
        """Sorted distinct cylinder endpoints."""
        return np.unique(np.concatenate([self._lo, self._lo + self.cell]))

    def cdf(self, x):
        """Mass of ``(-inf, x]``; vectorised, exact piecewise-linear interpolation."""
        x = np.asarray(x, dtype=float)
        i = np.searchsorted(self._lo, x, side="right") - 1
        ic = np.clip(i, 0, None)
        frac = np.clip((x - self._lo[ic]) / self.cell, 0.0, 1.0)
        out = np.where(i >= 0, self.weight * (ic + frac), 0.0)
        return float(out) if out.ndim == 0 else out

    def mass(self, lo, hi):
        return self.cdf(hi) - self.cdf(lo)

    def affine(self, scale: float, shift: float = 0.0, mass_factor: float = 1.0) -> "MeasuredSet":
        """Image under ``x -> scale*x + shift`` (scale > 0) with masses scaled by ``mass_factor``."""
        if not scale > 0:
            raise ValueError("scale must be positive")
        support = IntervalSet(Interval(scale * iv.lo + shift, scale * iv.hi + shift) for iv in self.support)
        return MeasuredSet(support, self.cells, scale * self.origin + shift, scale * self.cell,
                           self.weight * mass_factor, self.base, self.depth)

    def to_json(self) -> dict:
        return {
            "intervals": self.support.to_json(),
            "measure": {
                "depth": self.depth,
                "weight": self.weight,
                "base": self.base,
                "origin": self.origin,
                "cell": self.cell,
                "cells": self.cells.tolist(),
            },
        }

    @classmethod
    def from_json(cls, data: dict) -> "MeasuredSet":
        support = IntervalSet.from_json(data["intervals"])
        meas = data.get("measure")
        if meas is None:
            raise ValueError("set document has no measure")
        if "cells" in meas:
            return cls(support, np.array(meas["cells"], dtype=np.int64), meas["origin"], meas["cell"],
                       meas["weight"], meas.get("base"), meas.get("depth"))
        lengths = {round(iv.length, 15) for iv in support}
        if len(lengths) != 1:
            raise ValueError("without explicit cells every interval must be one cylinder of equal length")
        cell = support[0].length
        origin = support[0].lo
        cells = np.rint((support.los - origin) / cell).astype(np.int64)
        return cls(support, cells, origin, cell, meas["weight"], None, meas.get("depth"))

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def cantor_measure(spec: CantorSpec) -> MeasuredSet:
    idx = cantor_digit_indices(spec.base, spec.alphabet, spec.depth)
    return MeasuredSet(
        support=cantor_intervals(spec),
        cells=idx,
        origin=0.0,
        cell=float(spec.base) ** (-spec.depth),
        weight=float(len(spec.alphabet)) ** (-spec.depth),
        base=spec.base,
        depth=spec.depth,
    )


@dataclass(frozen=True)
class RegularityReport:
    delta: float
    scale_lo: float
    scale_hi: float
    cr_estimate: float
    worst_upper_violation: tuple
    worst_lower_violation: tuple
    passed: bool
    requested_cr: float
    n_intervals: int
    mode: str

    def to_json(self) -> dict:
        up, low = self.worst_upper_violation, self.worst_lower_violation
        return {
            "delta": self.delta,
            "scale_lo": self.scale_lo,
            "scale_hi": self.scale_hi,
            "cr_estimate": self.cr_estimate,
            "requested_cr": self.requested_cr,
            "worst_upper": {"interval": [up[0].lo, up[0].hi], "ratio": up[1]},
            "worst_lower": {"interval": [low[0].lo, low[0].hi], "ratio": low[1]},
            "passed": self.passed,
            "n_intervals": self.n_intervals,
            "mode": self.mode,
        }


def _geometric_scales(lo: float, hi: float) -> np.ndarray:
    scales = [hi]
    while scales[-1] / 2 >= lo * (1 + 1e-12):
        scales.append(scales[-1] / 2)
    if scales[-1] > lo * (1 + 1e-12):
        scales.append(lo)
    return np.array(scales)


def _strided(a: np.ndarray, cap: int) -> np.ndarray:
    if a.size <= cap:
        return a
    return a[np.linspace(0, a.size - 1, cap).round().astype(np.int64)]


def verify_regularity(ms: MeasuredSet, delta: float, cr: float, scale_lo: float, scale_hi: float,
                      *, mode: str = "sampled", n_offsets: int = 64,
                      max_centers: int = 20000) -> RegularityReport:
    """Deterministic sampled check of the two-sided regularity bounds.

    ``mode="sampled"`` (the default) works scale by scale over a geometric
    sequence of ratio 2 from ``scale_hi`` down to ``scale_lo``. At each scale
    ``r`` it tests:

    * upper bound ``mu(I) <= cr |I|^delta`` on intervals of length ``r``
      centered at every cylinder endpoint, at ``n_offsets`` uniform points
      spanning the hull, and anchored left and right at each cylinder endpoint;
    * lower bound ``mu(I) >= |I|^delta / cr`` on intervals of length ``r``
      centered at cylinder endpoints and cylinder midpoints (support points).

    More than ``max_centers`` endpoints are thinned by an even stride. With
    ``scale_lo == 0`` the finest scale is taken to be the cell length.

    ``mode="cylinders"`` tests exactly the cylinders of every depth whose
    length lies in the scale range, which requires a set built with a known
    base (all ratios equal 1 for the natural Cantor measure).

    Returns
    -------
    RegularityReport
        ``cr_estimate`` is the largest ratio seen (at least 1) and ``passed``
        records ``cr_estimate <= cr``.
    """
    if ms.support.is_empty or len(ms.cells) == 0:
        raise ValueError("regularity check needs a nonempty support")
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    if cr < 1:
        raise ValueError(f"cr must be >= 1, got {cr}")
    if not 0 <= scale_lo <= scale_hi or scale_hi <= 0:
        raise ValueError("need 0 <= scale_lo <= scale_hi and scale_hi > 0")
    lo_eff = scale_lo if scale_lo > 0 else min(ms.cell, scale_hi)

    if mode == "cylinders":
        lows, highs, centered = _cylinder_intervals(ms, lo_eff, scale_hi)
    elif mode == "sampled":
        lows, highs, centered = _sampled_intervals(ms, lo_eff, scale_hi, n_offsets, max_centers)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if lows.size == 0:
        raise ValueError("no sample intervals fall in the requested scale range")

    lengths = highs - lows
    mu = ms.mass(lows, highs)
    power = lengths ** delta
    upper = mu / power
    with np.errstate(divide="ignore"):
        lower = np.where(centered, power / np.where(mu > 0, mu, np.nan), -np.inf)
    lower = np.nan_to_num(lower, nan=np.inf, neginf=-np.inf)
    iu, il = int(np.argmax(upper)), int(np.argmax(lower))
    est = max(1.0, float(upper[iu]), float(lower[il]))
    return RegularityReport(
        delta=float(delta),
        scale_lo=float(scale_lo),
        scale_hi=float(scale_hi),
        cr_estimate=est,
        worst_upper_violation=(Interval(lows[iu], highs[iu]), float(upper[iu])),
        worst_lower_violation=(Interval(lows[il], highs[il]), float(lower[il])),
        passed=bool(est <= cr * (1 + 1e-12)),
        requested_cr=float(cr),
        n_intervals=int(lows.size),
        mode=mode,
    )


def _cylinder_intervals(ms, lo, hi):
    if ms.base is None or ms.depth is None:
        raise ValueError("cylinder mode needs a set with known base and depth")
    lows, highs = [], []
    for j in range(ms.depth + 1):
        length = ms.cell * ms.base ** (ms.depth - j)
        if not lo * (1 - 1e-12) <= length <= hi * (1 + 1e-12):
            continue
        parents = np.unique(ms.cells // ms.base ** (ms.depth - j))
        a = ms.origin + parents * length
        lows.append(a)
        highs.append(a + length)
    if not lows:
        return np.empty(0), np.empty(0), np.empty(0, dtype=bool)
    lows, highs = np.concatenate(lows), np.concatenate(highs)
    return lows, highs, np.ones(lows.size, dtype=bool)


def _sampled_intervals(ms, lo, hi, n_offsets, max_centers):
    ends = _strided(ms.endpoints, max_centers)
    mids = _strided(ms.cell_los + 0.5 * ms.cell, max_centers)
    hull = ms.support.hull
    lows, highs, centered = [], [], []
    for r in _geometric_scales(lo, hi):
        grid = np.linspace(hull.lo - r / 2, hull.hi + r / 2, n_offsets)
        upper_centers = np.concatenate([ends, grid])
        blocks = [
            (upper_centers - r / 2, False),
            (ends, False),
            (ends - r, False),
            (ends - r / 2, True),
            (mids - r / 2, True),
        ]
        for start, is_centered in blocks:
            lows.append(start)
            highs.append(start + r)
            centered.append(np.full(start.size, is_centered))
    return np.concatenate(lows), np.concatenate(highs), np.concatenate(centered)


def cover_bound(region_length: float, rho: float, delta: float, cr: float) -> float:
    return 12.0 * cr ** 2 * (region_length / rho) ** delta


def _grid_cells(pieces: Iterable[Interval], rho: float) -> np.ndarray:
    """Indices j with [rho*j, rho*(j+1)] meeting a piece in positive length.

    A degenerate piece (a point) maps to the cell(s) containing it.
    """
    cells = set()
    for iv in pieces:
        a, b = iv.lo / rho, iv.hi / rho
        if b - a > _GRID_SLACK:
            j0 = math.floor(a + _GRID_SLACK)
            j1 = math.ceil(b - _GRID_SLACK) - 1
        else:
            j0 = math.floor(a + _GRID_SLACK)
            j1 = j0
            if abs(a - round(a)) <= _GRID_SLACK:
                j0 = round(a) - 1
                j1 = round(a)
        cells.update(range(j0, j1 + 1))
    return np.array(sorted(cells), dtype=np.int64)


def cover(ms: MeasuredSet, region: Interval, rho: float, delta: float, cr: float,
          *, check: bool = True) -> list:
    """Grid cover of ``support ∩ region`` by cells ``rho*[j, j+1]``.

    A cell counts when it meets the intersection in positive length, or contains
    an isolated point of it. When ``check`` is set the number of cells must not
    exceed ``12 cr^2 (|region|/rho)^delta``; otherwise ``RegularityError`` is raised
    with the offending count.
    """
    region = _as_interval(region)
    if not rho > 0:
        raise ValueError("rho must be positive")
    if rho > region.length * (1 + 1e-12) and region.length > 0:
        raise ValueError("cover needs rho <= |region|")
    pieces = ms.support.intersect(region)
    idx = _grid_cells(pieces, rho)
    if check and idx.size:
        bound = cover_bound(region.length, rho, delta, cr)
        if idx.size > bound:
            raise RegularityError(
                f"cover of {region} at rho={rho:g} needs {idx.size} cells, above the regularity bound {bound:.6g}",
                count=int(idx.size), bound=bound)
    return [Interval(rho * j, rho * (j + 1)) for j in idx.tolist()]


def thicken(s: IntervalSet, eps: float) -> IntervalSet:
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps == 0 or s.is_empty:
        return s
    grown = [Interval(iv.lo - eps, iv.hi + eps) for iv in s]
    return IntervalSet(_merge(grown, touching=True))


@dataclass(frozen=True, eq=False)
class DiscreteSet:
    """A subset of Z_n stored as a sorted array of distinct residues."""

    n: int
    indices: np.ndarray

    def __post_init__(self):
        n = int(self.n)
        if n != self.n or n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        idx = np.unique(np.asarray(self.indices, dtype=np.int64).ravel())
        if idx.size and (idx[0] < 0 or idx[-1] >= n):
            raise ValueError(f"indices must lie in [0, {n - 1}]")
        idx.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return int(self.indices.size)

    def __eq__(self, other):
        return (isinstance(other, DiscreteSet) and self.n == other.n
                and np.array_equal(self.indices, other.indices))

    def __repr__(self):
        return f"DiscreteSet(n={self.n}, size={len(self)})"

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.n, dtype=bool)
        m[self.indices] = True
        return m

    def complement(self) -> "DiscreteSet":
        return DiscreteSet(self.n, np.flatnonzero(~self.mask))

    def shift(self, k: int) -> "DiscreteSet":
        return DiscreteSet(self.n, (self.indices + int(k)) % self.n)

    def thicken(self, margin: int) -> "DiscreteSet":
        """Cyclic neighbourhood of radius ``margin``."""
        offs = np.arange(-int(margin), int(margin) + 1)
        return DiscreteSet(self.n, (self.indices[:, None] + offs[None, :]).ravel() % self.n)

    def to_json(self) -> dict:
        return {"n": self.n, "indices": self.indices.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "DiscreteSet":
        return cls(data["n"], data["indices"])


def discretize(s: IntervalSet, n: int) -> DiscreteSet:
    """Cells ``[j/n, (j+1)/n]`` of the unit interval meeting ``s``.

    Shared endpoints of adjacent cells are not counted as an intersection, so a
    depth-k Cantor set at ``n = M**k`` maps to its digit-string indices.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not s.is_empty and (s.hull.lo < -1e-12 or s.hull.hi > 1 + 1e-12):
        raise ValueError("discretize expects a subset of [0, 1]")
    idx = _grid_cells(s, 1.0 / n)
    return DiscreteSet(n, np.clip(idx, 0, n - 1))
