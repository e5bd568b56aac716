"""Diversity and acceptance metrics over evaluation-space embeddings.

Diversity is the number of occupied cells of a uniform grid over the
embedding space; the constrained variant counts cells reached by ROI
inliers only.  Bin-count targets are quoted as totals (e.g. 200,000) and
realized as ⌊target^(1/d)⌋ bins per dimension.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .explorer import History

GLOBAL_BINS_TARGET = 200_000
CONSTRAINED_BINS_TARGET = 100_000


class InsufficientHistory(ValueError):
    """Acceptance rate is undefined without post-bootstrap samples."""


@dataclass(frozen=True)
class BinningSpec:
    """Uniform grid over an axis-aligned box in embedding space."""

    lower: np.ndarray
    upper: np.ndarray
    bins_per_dim: int

    def __post_init__(self) -> None:
        lo = np.asarray(self.lower, dtype=np.float64)
        hi = np.asarray(self.upper, dtype=np.float64)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("bounds must be 1-D arrays of equal length")
        if np.any(hi < lo):
            raise ValueError("upper bounds must be >= lower bounds")
        if self.bins_per_dim < 1:
            raise ValueError("bins_per_dim must be >= 1")

    @property
    def n_dims(self) -> int:
        return len(self.lower)

    @classmethod
    def from_points(cls, points: np.ndarray,
                    n_bins_target: int) -> "BinningSpec":
        """Bounds from the pooled points, bins_per_dim = ⌊target^(1/d)⌋."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        d = pts.shape[1]
        per_dim = int(np.floor(n_bins_target ** (1.0 / d) + 1e-9))
        return cls(lower=pts.min(axis=0), upper=pts.max(axis=0),
                   bins_per_dim=max(per_dim, 1))


def bin_indices(points: np.ndarray, spec: BinningSpec) -> np.ndarray:
    """Flat grid-cell index per point; out-of-bounds coordinates clamp to
    the edge cells."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    span = spec.upper - spec.lower
    # Degenerate dimensions collapse to a single bin.
    safe = np.where(span > 0, span, 1.0)
    cells = np.floor((pts - spec.lower) / safe * spec.bins_per_dim)
    cells = np.clip(cells, 0, spec.bins_per_dim - 1).astype(np.int64)
    flat = np.zeros(len(pts), dtype=np.int64)
    for d in range(spec.n_dims):
        flat = flat * spec.bins_per_dim + cells[:, d]
    return flat


def bin_index(point: np.ndarray, spec: BinningSpec) -> int:
    return int(bin_indices(np.asarray(point)[None, :], spec)[0])


def diversity(points: np.ndarray, spec: BinningSpec) -> int:
    """Number of grid cells hit by at least one point."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        return 0
    return int(np.unique(bin_indices(pts, spec)).size)


def constrained_diversity(history: History, spec: BinningSpec,
                          embeddings: np.ndarray) -> int:
    """Diversity restricted to ROI inliers (classification = +1)."""
    embeddings = np.atleast_2d(np.asarray(embeddings, dtype=np.float64))
    if len(embeddings) != len(history):
        raise ValueError("one embedding per history entry required")
    mask = history.classifications() == 1
    if not mask.any():
        return 0
    return diversity(embeddings[mask], spec)


def acceptance_rate(history: History, n_init: int) -> float:
    """Inlier fraction among post-bootstrap samples."""
    n = len(history)
    if n <= n_init:
        raise InsufficientHistory(
            f"history length {n} has no samples past n_init {n_init}")
    cls = history.classifications()[n_init:]
    return float((cls == 1).mean())


class DiversityTracker:
    """Incremental occupied-cell counter for live per-sample reporting."""

    def __init__(self, global_spec: BinningSpec,
                 constrained_spec: BinningSpec) -> None:
        self.global_spec = global_spec
        self.constrained_spec = constrained_spec
        self._global_cells: set[int] = set()
        self._constrained_cells: set[int] = set()

    @property
    def global_diversity(self) -> int:
        return len(self._global_cells)

    @property
    def constrained_diversity(self) -> int:
        return len(self._constrained_cells)

    def add(self, embedding: np.ndarray, inlier: bool) -> tuple[int, int]:
        self._global_cells.add(bin_index(embedding, self.global_spec))
        if inlier:
            self._constrained_cells.add(
                bin_index(embedding, self.constrained_spec))
        return self.global_diversity, self.constrained_diversity


def diversity_series(embeddings: np.ndarray, inlier_flags: Sequence[bool],
                     global_spec: BinningSpec,
                     constrained_spec: BinningSpec) -> list[tuple[int, int, int, int]]:
    """(sample_index, global_diversity, constrained_diversity, inlier_flag)
    rows, one per sample, in order."""
    embeddings = np.atleast_2d(np.asarray(embeddings, dtype=np.float64))
    if len(embeddings) != len(inlier_flags):
        raise ValueError("one inlier flag per embedding required")
    tracker = DiversityTracker(global_spec, constrained_spec)
    rows = []
    for i, (emb, inlier) in enumerate(zip(embeddings, inlier_flags)):
        g, c = tracker.add(emb, bool(inlier))
        rows.append((i, g, c, int(bool(inlier))))
    return rows


def write_diversity_csv(path: Path | str,
                        rows: Iterable[Sequence],
                        extra_columns: Sequence[str] = ()) -> None:
    """CSV with the canonical series columns, optionally prefixed by
    run-identifying columns (e.g. method, seed)."""
    header = list(extra_columns) + [
        "sample_index", "global_diversity", "constrained_diversity",
        "inlier_flag"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
