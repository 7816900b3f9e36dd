"""Search grids and greedy local-maximum selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ResolutionFailure


@dataclass(frozen=True)
class GridAxis:
    """Uniform axis from ``start`` to ``stop`` inclusive (radians)."""

    start: float
    stop: float
    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("grid step must be positive")
        if self.stop < self.start:
            raise ValueError("grid stop must not precede start")

    @classmethod
    def degrees(cls, start: float, stop: float, step: float) -> "GridAxis":
        return cls(np.deg2rad(start), np.deg2rad(stop), np.deg2rad(step))

    @property
    def points(self) -> np.ndarray:
        n = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(n)


@dataclass(frozen=True)
class SpectrumGrid:
    """Spectrum values sampled on the outer product of one or two axes."""

    axes: tuple
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        shape = tuple(len(a) for a in self.axes)
        if vals.shape != shape:
            raise ValueError(f"values shape {vals.shape} does not match axes {shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("spectrum values must be finite")
        object.__setattr__(self, "values", vals)

    def coordinates(self, index) -> tuple:
        index = np.atleast_1d(index)
        return tuple(float(ax[i]) for ax, i in zip(self.axes, index))


def local_maxima(values: np.ndarray) -> np.ndarray:
    """Boolean mask of strict local maxima (2 neighbors in 1-D, 8 in 2-D); edges allowed."""
    v = np.asarray(values, dtype=float)
    if v.ndim not in (1, 2):
        raise ValueError("only 1-D and 2-D grids are supported")
    pad = np.pad(v, 1, mode="constant", constant_values=-np.inf)
    mask = np.ones(v.shape, dtype=bool)
    if v.ndim == 1:
        n = v.shape[0]
        for off in (0, 2):
            mask &= v > pad[off:off + n]
        return mask
    n0, n1 = v.shape
    for d0 in (0, 1, 2):
        for d1 in (0, 1, 2):
            if d0 == 1 and d1 == 1:
                continue
            mask &= v > pad[d0:d0 + n0, d1:d1 + n1]
    return mask


def find_peaks(grid, count: int, min_separation: int = 2, distinct=None) -> list:
    """The ``count`` largest strict local maxima, greedily spaced.

    Candidates are visited by descending value (ties by lower flat index) and accepted
    when their Chebyshev distance to every accepted peak is at least ``min_separation``
    cells.

    Args:
        grid: a ``SpectrumGrid`` or a raw 1-D/2-D array.
        count: number of peaks wanted.
        min_separation: minimum spacing in grid cells.
        distinct: optional ``f(index, accepted) -> bool`` applying an extra rejection
            rule, for example aliases of the same direction on the domain edge.

    Returns:
        Accepted indices sorted ascending; ints in 1-D, ``(i, j)`` tuples in 2-D.

    Raises:
        ResolutionFailure: fewer than ``count`` peaks qualify; ``found`` holds them.
    """
    values = grid.values if isinstance(grid, SpectrumGrid) else np.asarray(grid, dtype=float)
    if count < 1:
        raise ValueError("count must be >= 1")
    mask = local_maxima(values)
    flat = np.flatnonzero(mask)
    order = np.lexsort((flat, -values.ravel()[flat]))
    picked = []
    for f in flat[order]:
        idx = np.array(np.unravel_index(f, values.shape))
        if all(np.max(np.abs(idx - p)) >= min_separation for p in picked) and (
            distinct is None or distinct(tuple(int(i) for i in idx), [tuple(int(i) for i in p) for p in picked])
        ):
            picked.append(idx)
            if len(picked) == count:
                break
    out = sorted(int(p[0]) if values.ndim == 1 else (int(p[0]), int(p[1])) for p in picked)
    if len(out) < count:
        raise ResolutionFailure(f"found {len(out)} of {count} requested peaks", found=out)
    return out
