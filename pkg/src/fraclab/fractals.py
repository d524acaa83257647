"""Self-similar sets and their dyadic grid covers.

Covers are outer approximations: the attractor is enclosed in a ball that every
map sends into itself, the maps are iterated on that ball until the image balls
have diameter below the cell width, and every cell meeting an image ball is
marked.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetExceeded, ContractViolation, UnknownFractal
from .geometry import Direction

MAX_PRECISION = 24
MAX_NODES = 1 << 25
# margin (in cells) of the boundary layer kept by the aligned cover counter
_LAYER = 4


@dataclass(frozen=True)
class SimilarityMap:
    """x -> ratio * Q x + translation."""

    ratio: float
    orthogonal: tuple[tuple[float, ...], ...]
    translation: tuple[float, ...]

    def __post_init__(self):
        if not 0.0 < self.ratio < 1.0:
            raise ContractViolation(f"ratio must lie in (0, 1), got {self.ratio}")
        q = np.asarray(self.orthogonal, dtype=float)
        n = len(self.translation)
        if q.shape != (n, n):
            raise ContractViolation("orthogonal part must be n x n")
        if not np.allclose(q.T @ q, np.eye(n), atol=1e-10, rtol=0):
            raise ContractViolation("orthogonal part is not orthonormal")
        object.__setattr__(self, "orthogonal", tuple(tuple(float(v) for v in row) for row in q))
        object.__setattr__(self, "translation", tuple(float(v) for v in self.translation))

    @classmethod
    def homothety(cls, ratio: float, translation: Sequence[float]) -> SimilarityMap:
        n = len(translation)
        return cls(ratio, tuple(tuple(float(i == j) for j in range(n)) for i in range(n)), tuple(translation))

    @property
    def dimension(self) -> int:
        return len(self.translation)

    @property
    def linear(self) -> np.ndarray:
        return self.ratio * np.asarray(self.orthogonal)

    @property
    def is_homothety(self) -> bool:
        return np.array_equal(np.asarray(self.orthogonal), np.eye(self.dimension))

    def __call__(self, x) -> np.ndarray:
        return self.linear @ np.asarray(x, dtype=float) + np.asarray(self.translation)

    def fixed_point(self) -> np.ndarray:
        n = self.dimension
        return np.linalg.solve(np.eye(n) - self.linear, np.asarray(self.translation))


@dataclass(frozen=True)
class IFSSpec:
    maps: tuple[SimilarityMap, ...]
    name: str = "ifs"
    open_set_condition: bool = True
    # directions known to give a smaller projection (axis directions of products)
    exceptional: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self):
        maps = tuple(self.maps)
        if not maps:
            raise ContractViolation("an IFS needs at least one map")
        if len({m.dimension for m in maps}) != 1:
            raise ContractViolation("all maps must share one dimension")
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "exceptional", tuple(tuple(float(v) for v in d) for d in self.exceptional))

    @property
    def dimension(self) -> int:
        return self.maps[0].dimension

    @property
    def moran_dimension(self) -> float:
        return similarity_dimension(self)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "open_set_condition": self.open_set_condition,
            "maps": [
                {"ratio": m.ratio, "matrix": [list(r) for r in m.orthogonal], "translation": list(m.translation)}
                for m in self.maps
            ],
            "exceptional": [list(d) for d in self.exceptional],
        }


@dataclass(frozen=True)
class GridCover:
    """Occupied cells of the 2^-r grid; a row c stands for prod [c_i 2^-r, (c_i+1) 2^-r)."""

    precision: int
    dimension: int
    cells: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.cells, dtype=np.int64).reshape(-1, self.dimension)
        arr = np.unique(arr, axis=0) if len(arr) else arr
        arr.setflags(write=False)
        object.__setattr__(self, "cells", arr)

    def __len__(self):
        return len(self.cells)

    def cell_set(self) -> set[tuple[int, ...]]:
        return {tuple(int(v) for v in row) for row in self.cells}

    def coarsen(self, r: int) -> GridCover:
        if r > self.precision:
            raise ContractViolation("can only coarsen to a smaller precision")
        return GridCover(r, self.dimension, self.cells >> (self.precision - r))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "n"] + [f"cell_index_{i}" for i in range(self.dimension)])
            for row in self.cells:
                w.writerow([self.precision, self.dimension, *map(int, row)])

    @classmethod
    def from_csv(cls, path) -> GridCover:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        n = len(header) - 2
        if not body:
            raise ContractViolation("cannot infer precision from an empty cover file")
        r = int(body[0][0])
        cells = np.array([[int(v) for v in row[2:]] for row in body], dtype=np.int64)
        return cls(r, n, cells)


def similarity_dimension(ifs: IFSSpec, tol: float = 1e-12) -> float:
    """The s >= 0 with sum ratio_i^s = 1, by bisection."""
    ratios = [m.ratio for m in ifs.maps]
    if len(ratios) == 1:
        return 0.0

    def f(s):
        return math.fsum(c**s for c in ratios) - 1.0

    lo, hi = 0.0, 1.0
    while f(hi) > 0:
        hi *= 2
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bounding_ball(ifs: IFSSpec) -> tuple[np.ndarray, float]:
    """A ball (center, radius) mapped into itself by every map of the IFS."""
    center = np.mean([m.fixed_point() for m in ifs.maps], axis=0)
    cmax = max(m.ratio for m in ifs.maps)
    reach = max(float(np.linalg.norm(m(center) - center)) for m in ifs.maps)
    radius = reach / (1.0 - cmax)
    if radius == 0.0:
        # single fixed point; any positive radius is invariant
        radius = 0.5
    return center, radius


# ---------------------------------------------------------------------------
# catalog


def _product_maps(ratio, offsets, n):
    grids = np.array(np.meshgrid(*[offsets] * n, indexing="ij")).reshape(n, -1).T
    return tuple(SimilarityMap.homothety(ratio, tuple(t)) for t in grids)


def _axes(n):
    return tuple(tuple(float(i == j) for j in range(n)) for i in range(n))


def _build_catalog() -> dict[str, IFSSpec]:
    h = SimilarityMap.homothety
    entries = [
        IFSSpec((h(1 / 3, (0.0,)), h(1 / 3, (2 / 3,))), "cantor3"),
        IFSSpec((h(1 / 4, (0.0,)), h(1 / 4, (3 / 4,))), "cantor4"),
        IFSSpec(_product_maps(1 / 4, [0.0, 0.75], 2), "fourcorner", exceptional=_axes(2)),
        IFSSpec((h(0.5, (0.0, 0.0)), h(0.5, (0.5, 0.0)), h(0.5, (0.0, 0.5))), "sierpinski"),
        IFSSpec(_product_maps(1 / 3, [0.0, 2 / 3], 2), "cantor3x3", exceptional=_axes(2)),
        IFSSpec(_product_maps(1 / 3, [0.0, 2 / 3], 3), "dust3", exceptional=_axes(3)),
        IFSSpec(_product_maps(0.5, [0.0, 0.5], 2), "square"),
        IFSSpec((h(1 / 3, (0.0, 0.0)), h(1 / 3, (2 / 3, 0.0))), "cantor3_line", exceptional=((0.0, 1.0),)),
        IFSSpec((h(0.5, (0.0, 0.0)),), "point"),
    ]
    return {e.name: e for e in entries}


_CATALOG = _build_catalog()


def catalog() -> list[IFSSpec]:
    return list(_CATALOG.values())


def lookup(name: str) -> IFSSpec:
    try:
        return _CATALOG[name]
    except KeyError:
        raise UnknownFractal(f"no catalog fractal named {name!r}; known: {sorted(_CATALOG)}") from None


def ifs_from_dict(data: dict) -> IFSSpec:
    maps = []
    for m in data["maps"]:
        t = tuple(float(v) for v in m["translation"])
        n = len(t)
        if "matrix" in m:
            q = tuple(tuple(float(v) for v in row) for row in m["matrix"])
        elif "rotation_degrees" in m:
            if n != 2:
                raise ContractViolation("rotation_degrees is only meaningful in the plane")
            th = math.radians(float(m["rotation_degrees"]))
            q = ((math.cos(th), -math.sin(th)), (math.sin(th), math.cos(th)))
        else:
            q = _axes(n)
        maps.append(SimilarityMap(float(m["ratio"]), q, t))
    return IFSSpec(
        tuple(maps),
        data.get("name", "custom"),
        bool(data.get("open_set_condition", True)),
        tuple(tuple(d) for d in data.get("exceptional", ())),
    )


def load_ifs(path) -> IFSSpec:
    with open(path) as fh:
        return ifs_from_dict(json.load(fh))


def resolve(name_or_path: str) -> IFSSpec:
    """Catalog name, or a path to an IFS JSON file."""
    if name_or_path in _CATALOG:
        return _CATALOG[name_or_path]
    if name_or_path.endswith(".json"):
        return load_ifs(name_or_path)
    return lookup(name_or_path)


# ---------------------------------------------------------------------------
# cover generation by ball images


def _check_precision(r: int, max_precision: int) -> None:
    if r < 0:
        raise ContractViolation("precision must be nonnegative")
    if r > max_precision:
        raise BudgetExceeded("cover precision", r, max_precision)


def _ball_cells(centers: np.ndarray, radii: np.ndarray, r: int) -> np.ndarray:
    """Cells of the 2^-r grid meeting balls whose diameter is below the cell width."""
    n = centers.shape[1]
    scale = float(2**r)
    cu = centers * scale
    ru = (radii * scale)[:, None]
    lo = np.floor(cu - ru).astype(np.int64)
    span = np.floor(cu + ru).astype(np.int64) - lo
    out = []
    for offs in np.ndindex(*(2,) * n):
        off = np.array(offs, dtype=np.int64)
        cand = lo + off
        ok = np.all(off <= span, axis=1)
        gap = np.maximum(np.maximum(cand - cu, 0.0), cu - (cand + 1))
        ok &= np.sum(gap * gap, axis=1) <= (ru[:, 0] ** 2)
        out.append(cand[ok])
    return np.concatenate(out) if out else np.empty((0, n), dtype=np.int64)


def _walk_covers(ifs: IFSSpec, rs: Sequence[int], max_nodes: int) -> dict[int, np.ndarray]:
    lin = [m.linear for m in ifs.maps]
    tr = [np.asarray(m.translation) for m in ifs.maps]
    ratios = [m.ratio for m in ifs.maps]
    center, radius = bounding_ball(ifs)
    n = ifs.dimension
    if len(ifs.maps) == 1:
        # the attractor is the fixed point itself: one half-open cell holds it
        fp = np.asarray(ifs.maps[0].fixed_point(), dtype=float)
        return {r: np.floor(fp * 2.0**r).astype(np.int64)[None, :] for r in rs}
    centers = center[None, :]
    radii = np.array([radius])
    parents = np.array([np.inf])
    finest = 2.0 ** -max(rs)
    found: dict[int, list[np.ndarray]] = {r: [] for r in rs}
    while len(centers):
        for r in rs:
            h = 2.0**-r
            leaf = (2 * radii < h) & (2 * parents >= h)
            if leaf.any():
                found[r].append(_ball_cells(centers[leaf], radii[leaf], r))
        live = 2 * radii >= finest
        centers, radii = centers[live], radii[live]
        if not len(centers):
            break
        kids_c = np.concatenate([centers @ a.T + t for a, t in zip(lin, tr)])
        kids_r = np.concatenate([radii * c for c in ratios])
        kids_p = np.tile(radii, len(lin))
        # identical balls have identical subtrees
        key = np.column_stack([kids_c, kids_r])
        key, idx = np.unique(key, axis=0, return_index=True)
        kids_p = kids_p[idx]
        if len(key) > max_nodes:
            raise BudgetExceeded("cover nodes", len(key), max_nodes)
        centers, radii, parents = key[:, :n], key[:, n], kids_p
    return {
        r: (np.unique(np.concatenate(v), axis=0) if v else np.empty((0, n), dtype=np.int64))
        for r, v in found.items()
    }


def generate_cover(ifs: IFSSpec, r: int, max_precision: int = MAX_PRECISION, max_nodes: int = MAX_NODES) -> GridCover:
    """All 2^-r cells meeting the attractor (outer approximation)."""
    _check_precision(r, max_precision)
    cells = _walk_covers(ifs, [r], max_nodes)[r]
    return GridCover(r, ifs.dimension, cells)


# ---------------------------------------------------------------------------
# cover counts at many precisions


def _aligned_step(ifs: IFSSpec) -> int | None:
    """k if every map is x -> 2^-k x + t with t on the 2^-k grid, else None."""
    k = None
    for m in ifs.maps:
        if not m.is_homothety:
            return None
        e = -math.log2(m.ratio)
        if abs(e - round(e)) > 0 or round(e) < 1:
            return None
        if k is not None and round(e) != k:
            return None
        k = round(e)
        scaled = np.asarray(m.translation) * 2.0**k
        if not np.array_equal(scaled, np.round(scaled)):
            return None
    return k


class _NotAligned(Exception):
    pass


@dataclass
class _Record:
    count: int
    lo: np.ndarray
    hi: np.ndarray
    layer: np.ndarray


def _layer_mask(cells, lo, hi):
    return np.any(cells - lo < _LAYER, axis=1) | np.any(hi - cells < _LAYER, axis=1)


def _record_from_cells(cells: np.ndarray) -> _Record:
    lo, hi = cells.min(axis=0), cells.max(axis=0)
    return _Record(len(cells), lo, hi, cells[_layer_mask(cells, lo, hi)])


def _inside_layer(ilo, ihi, lo, hi) -> bool:
    for a in range(len(lo)):
        if ihi[a] - ilo[a] < _LAYER and (ilo[a] >= hi[a] - _LAYER + 1 or ihi[a] <= lo[a] + _LAYER - 1):
            return True
    return False


def _rows_unique(rows: np.ndarray, return_counts=False):
    if not len(rows):
        return (rows, np.empty(0, dtype=np.int64)) if return_counts else rows
    return np.unique(rows, axis=0, return_counts=return_counts)


def _aligned_union(prev: _Record, shifts: np.ndarray) -> _Record:
    """Cover of the union of shifted copies, using only the copies' boundary layers."""
    m = len(shifts)
    los, his = prev.lo + shifts, prev.hi + shifts
    ulo, uhi = los.min(axis=0), his.max(axis=0)
    boxes = []
    for i in range(m):
        for j in range(i + 1, m):
            ilo, ihi = np.maximum(los[i], los[j]), np.minimum(his[i], his[j])
            if np.any(ilo > ihi):
                continue
            if not (_inside_layer(ilo, ihi, los[i], his[i]) and _inside_layer(ilo, ihi, los[j], his[j])):
                raise _NotAligned
            boxes.append((ilo, ihi))
    shifted = [prev.layer + s for s in shifts]
    if boxes:
        in_overlap = []
        for cells in shifted:
            mask = np.zeros(len(cells), dtype=bool)
            for ilo, ihi in boxes:
                mask |= np.all((cells >= ilo) & (cells <= ihi), axis=1)
            in_overlap.append(mask)
        shared = np.concatenate([c[mk] for c, mk in zip(shifted, in_overlap)])
        shared_u, mult = _rows_unique(shared, return_counts=True)
        dup = int(np.sum(mult - 1))
        rest = np.concatenate([c[~mk] for c, mk in zip(shifted, in_overlap)])
        union_layer = np.concatenate([rest, shared_u])
    else:
        dup = 0
        union_layer = np.concatenate(shifted)
    layer = union_layer[_layer_mask(union_layer, ulo, uhi)]
    return _Record(m * prev.count - dup, ulo, uhi, layer)


def _aligned_counts(ifs: IFSSpec, rs: Sequence[int], k: int, max_nodes: int) -> dict[int, int]:
    _, radius = bounding_ball(ifs)
    shifts_unit = np.array([np.round(np.asarray(m.translation) * 2.0**k) for m in ifs.maps], dtype=np.int64)
    r_max = max(rs)
    # levels below `base` are enumerated directly
    base = min(r_max, max(k + 6, 8))
    while base < r_max and 2 * radius < 2.0**-base:
        base += 1
    direct = _walk_covers(ifs, list(range(0, base + 1)), max_nodes)
    recs: dict[int, _Record] = {}
    for r in range(0, base + 1):
        if len(direct[r]):
            recs[r] = _record_from_cells(direct[r])
    for r in range(base + 1, r_max + 1):
        shifts = shifts_unit << (r - k)
        recs[r] = _aligned_union(recs[r - k], shifts)
    return {r: recs[r].count for r in rs}


def cover_counts(ifs: IFSSpec, rs: Iterable[int], max_precision: int = MAX_PRECISION, max_nodes: int = MAX_NODES) -> dict[int, int]:
    """Number of occupied cells of generate_cover(ifs, r) for each r.

    Dyadic-aligned IFSs (homotheties with ratio 2^-k and translations on the
    2^-k grid) are counted structurally from boundary layers, so cell sets far
    too large to hold in memory still get exact counts.
    """
    rs = sorted(set(int(r) for r in rs))
    for r in rs:
        _check_precision(r, max_precision)
    k = _aligned_step(ifs)
    if k is not None and len(ifs.maps) > 1:
        try:
            return _aligned_counts(ifs, rs, k, max_nodes)
        except _NotAligned:
            pass
    covers = _walk_covers(ifs, rs, max_nodes)
    return {r: len(covers[r]) for r in rs}


# ---------------------------------------------------------------------------
# projections


def project_cover(cover: GridCover, e: Direction) -> GridCover:
    """Rasterize e . x over every occupied cell onto the 1-D grid of the same precision."""
    ev = np.asarray(e.components if isinstance(e, Direction) else e, dtype=float)
    if ev.shape != (cover.dimension,):
        raise ContractViolation("direction dimension does not match the cover")
    c = cover.cells.astype(float)
    a, b = c * ev, (c + 1) * ev
    lo = np.minimum(a, b).sum(axis=1)
    hi = np.maximum(a, b).sum(axis=1)
    first = np.floor(lo).astype(np.int64)
    # the top of a half-open cell is only reached when no component of e is positive
    hi_open = bool(np.any(ev > 0))
    last = (np.ceil(hi).astype(np.int64) - 1) if hi_open else np.floor(hi).astype(np.int64)
    last = np.maximum(last, first)
    lengths = last - first + 1
    starts = np.repeat(first, lengths)
    steps = np.arange(lengths.sum()) - np.repeat(np.cumsum(lengths) - lengths, lengths)
    return GridCover(cover.precision, 1, (starts + steps)[:, None])


def projected_ifs(ifs: IFSSpec, e: Direction, tol: float = 1e-12) -> list[tuple[float, float]] | None:
    """1-D maps y -> a y + b with proj_e o f_i = g_i o proj_e, or None if some map rotates e."""
    ev = np.asarray(e.components)
    out = []
    for m in ifs.maps:
        qe = np.asarray(m.orthogonal).T @ ev
        if np.allclose(qe, ev, atol=tol, rtol=0):
            sign = 1.0
        elif np.allclose(qe, -ev, atol=tol, rtol=0):
            sign = -1.0
        else:
            return None
        out.append((sign * m.ratio, float(ev @ np.asarray(m.translation))))
    return out


def projected_counts(ifs: IFSSpec, e: Direction, rs: Iterable[int], max_precision: int = MAX_PRECISION,
                     max_nodes: int = MAX_NODES) -> dict[int, int] | None:
    """Cell counts of a cover of proj_e E built from the projected 1-D IFS.

    Node centers are snapped to a grid of a quarter of the finest cell width,
    and the accumulated snapping error widens every rasterized interval, so
    the result is still an outer cover. Returns None when the maps do not commute with the
    projection (use project_cover on a full cover instead).
    """
    rs = sorted(set(int(r) for r in rs))
    for r in rs:
        _check_precision(r, max_precision)
    maps = projected_ifs(ifs, e)
    if maps is None:
        return None
    ratios = {abs(a) for a, _ in maps}
    if len(ratios) != 1:
        return None
    ratio = ratios.pop()
    ev = np.asarray(e.components)
    center, radius = bounding_ball(ifs)
    r_max = rs[-1]
    # integer units of the snapping grid, one bit finer than half the finest cell
    unit = 2.0 ** (r_max + 2)
    mid = float(ev @ center) * unit
    span = int(math.ceil(radius * unit)) + 8 * (r_max + 8)
    # align the origin to the coarsest cell so grid cells match absolute cells
    coarse = 1 << (r_max + 2 - rs[0])
    origin = (int(math.floor(mid)) - span) // coarse * coarse
    size = int(math.floor(mid)) + span + 1 - origin
    # child of node u under map i is floor(a_i u + b_i + 1/2), all in grid units
    shifts = [(a, b * unit - origin + a * origin) for a, b in maps]
    k = -math.log2(ratio)
    dyadic = k == round(k) and 1 <= k <= 8
    mark = np.zeros(size, dtype=bool)
    mark[int(math.floor(mid + 0.5)) - origin] = True
    live = 1
    # rho decides the leaf depth; slack collects the snapping error and only
    # widens the rasterized intervals
    rho, slack = radius * unit, 0.5
    counts: dict[int, int] = {}
    pending = list(rs)
    while pending:
        while pending and 2 * rho < unit * 2.0 ** -pending[0]:
            r = pending.pop(0)
            counts[r] = _occupied_cells(mark, 2.0 ** (r_max + 2 - r), rho + slack)
        if not pending:
            break
        if dyadic and live * len(shifts) * 8 > size:
            mark = _dyadic_children(mark, shifts, round(k))
        else:
            u = np.flatnonzero(mark).astype(float)
            mark = np.zeros(size, dtype=bool)
            for a, b in shifts:
                mark[np.floor(a * u + (b + 0.5)).astype(np.int64)] = True
        live = int(np.count_nonzero(mark))
        if live > max_nodes:
            raise BudgetExceeded("projection nodes", live, max_nodes)
        rho *= ratio
        slack = ratio * slack + 0.5
    return counts


def _occupied_cells(mark: np.ndarray, step: float, w: float) -> int:
    """Cells [c step, (c+1) step) meeting some interval [u - w, u + w] with mark[u] set."""
    size = len(mark)
    u = np.flatnonzero(mark)
    if len(u) * 8 < size:
        # sparse nodes: rasterize each interval directly
        lo = np.floor((u - w) / step).astype(np.int64)
        hi = np.floor((u + w) / step).astype(np.int64)
        cells = np.concatenate([lo + j for j in range(int((hi - lo).max()) + 1)])
        cells = np.minimum(cells, np.tile(hi, len(cells) // len(hi)))
        return int(len(np.unique(cells)))
    cum = np.concatenate([[0], np.cumsum(mark, dtype=np.int32)])
    c = np.arange(math.floor(-w / step), math.floor((size - 1 + w) / step) + 1)
    # node u covers cell c iff c step - w <= u < (c+1) step + w
    lo = np.clip(np.ceil(c * step - w), 0, size).astype(np.int64)
    hi = np.clip(np.ceil((c + 1) * step + w), 0, size).astype(np.int64)
    return int(np.count_nonzero(cum[hi] > cum[lo]))


def _or_into(out: np.ndarray, start: int, src: np.ndarray) -> None:
    lo, hi = max(start, 0), min(start + len(src), len(out))
    if (lo > start and src[: lo - start].any()) or (hi < start + len(src) and src[hi - start:].any()):
        raise ContractViolation("projected node left the bounding interval")
    if hi > lo:
        out[lo:hi] |= src[lo - start: hi - start]


def _dyadic_children(mark: np.ndarray, shifts, k: int) -> np.ndarray:
    """Child bitmap for maps u -> +-2^-k u + b, by strided slices instead of per-node work."""
    q = 1 << k
    out = np.zeros_like(mark)
    for a, b in shifts:
        whole = math.floor(b)
        frac = b - whole
        for j in range(q):
            # u = q v + j for v = 0, 1, ...
            src = mark[j::q]
            if a > 0:
                _or_into(out, whole + math.floor(j / q + frac + 0.5), src)
            else:
                top = whole + math.floor(-j / q + frac + 0.5)
                _or_into(out, top - len(src) + 1, src[::-1])
    return out
