"""Box-counting dimension estimates from cover counts."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import ContractViolation
from .fractals import (
    MAX_PRECISION,
    GridCover,
    IFSSpec,
    cover_counts,
    generate_cover,
    project_cover,
    projected_counts,
)
from .geometry import Direction

DEFAULT_WINDOW = (8, 20)
MODES = ("ls", "liminf", "limsup")


@dataclass(frozen=True)
class CountSeries:
    rs: tuple[int, ...]
    counts: tuple[int, ...]
    # ambient dimension, when known; enables the log2 N_r <= n (r + 1) sanity check
    dimension: int | None = None

    def __post_init__(self):
        rs = tuple(int(r) for r in self.rs)
        counts = tuple(int(c) for c in self.counts)
        if len(rs) != len(counts):
            raise ContractViolation("rs and counts differ in length")
        if any(b <= a for a, b in zip(rs, rs[1:])):
            raise ContractViolation("precisions must be strictly increasing")
        if any(c < 1 for c in counts):
            raise ContractViolation("cell counts must be positive")
        if self.dimension is not None:
            # outer covers of closed sets may touch one extra cell per axis
            for r, c in zip(rs, counts):
                if math.log2(c) > self.dimension * (r + 1):
                    raise ContractViolation(f"count {c} at r={r} exceeds the grid size")
        object.__setattr__(self, "rs", rs)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_dict(cls, counts: dict[int, int], dimension: int | None = None) -> CountSeries:
        rs = sorted(counts)
        return cls(tuple(rs), tuple(counts[r] for r in rs), dimension)

    def log_counts(self) -> np.ndarray:
        return np.log2(np.asarray(self.counts, dtype=float))


@dataclass(frozen=True)
class DimensionEstimate:
    slope: float
    intercept: float
    rms: float
    r_min: int
    r_max: int
    mode: str

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> DimensionEstimate:
        return cls(**json.loads(text))


def _line_rms(r, y, slope, intercept) -> float:
    resid = y - (slope * r + intercept)
    return float(np.sqrt(np.mean(resid * resid)))


def box_dimension(series: CountSeries, window: Sequence[int] = DEFAULT_WINDOW, mode: str = "ls") -> DimensionEstimate:
    """Slope of log2 N_r against r over the window.

    ls is the least-squares slope. liminf and limsup take the smallest and
    largest slope of the chords from the first window point to the points in
    the second half of the window, and are widened to include the ls slope so
    that liminf <= ls <= limsup always holds.
    """
    if mode not in MODES:
        raise ContractViolation(f"mode must be one of {MODES}, got {mode!r}")
    r_min, r_max = int(window[0]), int(window[1])
    rs = np.asarray(series.rs, dtype=float)
    y = series.log_counts()
    sel = (rs >= r_min) & (rs <= r_max)
    if sel.sum() < 4:
        raise ContractViolation(f"window [{r_min}, {r_max}] holds {int(sel.sum())} samples; need at least 4")
    r, y = rs[sel], y[sel]
    if np.all(y == y[0]):
        slope, intercept = 0.0, float(y[0])
    else:
        slope, intercept = (float(v) for v in np.polyfit(r, y, 1))
    if mode != "ls":
        tail = slice(len(r) // 2, None)
        chords = (y[tail] - y[0]) / (r[tail] - r[0])
        pick = min if mode == "liminf" else max
        chord = float(pick(chords.min(), chords.max()))
        slope = pick(chord, slope)
        intercept = float(y[0] - slope * r[0])
    return DimensionEstimate(slope, intercept, _line_rms(r, y, slope, intercept), r_min, r_max, mode)


def cover_series(ifs: IFSSpec, window: Sequence[int] = DEFAULT_WINDOW, max_precision: int = MAX_PRECISION) -> CountSeries:
    rs = range(int(window[0]), int(window[1]) + 1)
    return CountSeries.from_dict(cover_counts(ifs, rs, max_precision=max_precision), ifs.dimension)


def set_dimension(ifs: IFSSpec, window: Sequence[int] = DEFAULT_WINDOW, mode: str = "ls") -> DimensionEstimate:
    return box_dimension(cover_series(ifs, window), window, mode)


def composed_projection_counts(ifs: IFSSpec, e: Direction, rs, max_precision: int = MAX_PRECISION) -> dict[int, int]:
    """Counts of project_cover(generate_cover(ifs, r), e), one full cover per r."""
    out = {}
    for r in rs:
        cover: GridCover = generate_cover(ifs, r, max_precision=max_precision)
        out[r] = len(project_cover(cover, e))
    return out


def projection_series(ifs: IFSSpec, e: Direction, window: Sequence[int] = DEFAULT_WINDOW, method: str = "auto",
                      max_precision: int = MAX_PRECISION) -> CountSeries:
    if e.dimension != ifs.dimension:
        raise ContractViolation("direction dimension does not match the IFS")
    rs = range(int(window[0]), int(window[1]) + 1)
    counts = None
    if method in ("auto", "projected"):
        counts = projected_counts(ifs, e, rs, max_precision=max_precision)
        if counts is None and method == "projected":
            raise ContractViolation("the maps of this IFS do not commute with the projection")
    if counts is None:
        counts = composed_projection_counts(ifs, e, rs, max_precision)
    return CountSeries.from_dict(counts, 1)


def projection_dimension(ifs: IFSSpec, e: Direction, window: Sequence[int] = DEFAULT_WINDOW, mode: str = "ls",
                         method: str = "auto") -> DimensionEstimate:
    """Box-counting estimate of dim(proj_e E).

    method "composed" rasterizes full covers of E; "projected" iterates the
    1-D IFS induced on the line, which gives the same kind of outer cover
    without materializing E; "auto" uses the latter when available.
    """
    series = projection_series(ifs, e, window, method)
    return box_dimension(series, window, mode)
