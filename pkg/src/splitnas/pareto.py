"""Nondominated archive over (error, latency, energy) and exact 3-D hypervolume.

All objectives are minimized.  A point dominates another when it is no worse
in every objective and strictly better in at least one; the archive keeps the
mutually nondominated subset of everything streamed into it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator

import numpy as np


def dominates(a: np.ndarray, b: np.ndarray) -> bool:
    """True when ``a`` dominates ``b`` (<= everywhere, < somewhere)."""
    return bool(np.all(a <= b) and np.any(a < b))


@dataclass(frozen=True)
class ArchiveEntry:
    """One nondominated point with its provenance."""

    objectives: tuple[float, ...]
    genome: Any = None
    evaluation: Any = None

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.objectives, dtype=float)


class ParetoArchive:
    """Streaming nondominated set.

    ``update`` leaves the archive unchanged when the candidate is dominated
    or duplicates an existing point exactly; otherwise it inserts the
    candidate and evicts everything the candidate dominates.
    """

    def __init__(self, entries: list[ArchiveEntry] | None = None):
        self.entries: list[ArchiveEntry] = []
        for entry in entries or []:
            self.update(entry)

    def update(self, entry: ArchiveEntry) -> bool:
        """Insert ``entry`` if nondominated; returns True when inserted."""
        vec = entry.vector
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"objectives must be finite, got {entry.objectives}")
        for existing in self.entries:
            if np.all(existing.vector <= vec):  # dominated, or an exact duplicate
                return False
        self.entries = [e for e in self.entries if not dominates(vec, e.vector)]
        self.entries.append(entry)
        return True

    def objectives_array(self) -> np.ndarray:
        if not self.entries:
            return np.empty((0, 0))
        return np.array([e.objectives for e in self.entries], dtype=float)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[ArchiveEntry]:
        return iter(self.entries)


def _hv2d(points: np.ndarray, ref: np.ndarray) -> float:
    """Area dominated by ``points`` up to ``ref`` (minimization, 2-D)."""
    order = np.argsort(points[:, 0], kind="stable")
    pts = points[order]
    area = 0.0
    best_y = np.inf
    for i, (x, y) in enumerate(pts):
        x_next = pts[i + 1, 0] if i + 1 < len(pts) else ref[0]
        best_y = min(best_y, y)
        area += max(0.0, x_next - x) * max(0.0, ref[1] - best_y)
    return area


def hypervolume(points: np.ndarray | ParetoArchive, reference: np.ndarray) -> float:
    """Exact volume of objective space dominated by ``points`` up to ``reference``.

    Three objectives, minimization: the volume of the union of boxes
    [p, reference] is accumulated by sweeping slabs between consecutive
    third-coordinate values and measuring the dominated area inside each
    slab.  The reference must be strictly worse than every point in every
    objective.
    """
    if isinstance(points, ParetoArchive):
        points = points.objectives_array()
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ref = np.asarray(reference, dtype=float).ravel()
    if pts.size == 0:
        return 0.0
    if pts.shape[1] != 3 or ref.shape != (3,):
        raise ValueError(f"expected 3-objective points, got shape {pts.shape}")
    if not np.all(pts < ref):
        offending = pts[~np.all(pts < ref, axis=1)][0]
        raise ValueError(
            f"reference {ref.tolist()} is not strictly worse than point {offending.tolist()}"
        )

    z_levels = np.unique(pts[:, 2])
    breaks = np.append(z_levels, ref[2])
    volume = 0.0
    for k, z in enumerate(z_levels):
        height = breaks[k + 1] - breaks[k]
        if height <= 0:
            continue
        active = pts[pts[:, 2] <= z, :2]
        volume += height * _hv2d(active, ref[:2])
    return volume
