"""Goal-directed exploration with ROI-aware candidate selection.

The loop keeps an augmented history of (params, observation, behavior,
constraint features, inlier/outlier classification).  Each step samples a
goal uniformly from the bounding box of all behaviors seen so far, picks
the nearest history entry on a (possibly random) subset of behavior axes,
and mutates its parameters.  The NRAB method flips a balance coin to decide
whether the nearest-neighbor search is restricted to ROI inliers, which is
what concentrates sampling inside the ROI without abandoning global
coverage.  Re-classifying the history against an edited ROI costs no new
rollouts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .features import (BEHAVIOR_DIM, CONSTRAINT_FEATURES, behavior_vector,
                       constraint_features)
from .systems import DivergentRollout, System, ZeroKernel

METHODS = ("R", "N", "NRA", "NRAB")


class UnknownFeature(KeyError):
    """ROI constraint names a feature that is not extracted."""


# --------------------------------------------------------------------------
# ROI and classification

@dataclass(frozen=True)
class Constraint:
    feature: str
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if self.feature not in CONSTRAINT_FEATURES:
            raise UnknownFeature(self.feature)
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise ValueError("constraint bounds must be finite")
        if self.lo > self.hi:
            raise ValueError(f"{self.feature}: lo {self.lo} > hi {self.hi}")


@dataclass(frozen=True)
class Roi:
    """Conjunction of closed intervals over constraint features.  An empty
    ROI classifies everything as an inlier."""

    constraints: tuple[Constraint, ...] = ()

    @classmethod
    def from_dict(cls, d: dict[str, Sequence[float]]) -> "Roi":
        return cls(tuple(Constraint(name, float(lo), float(hi))
                         for name, (lo, hi) in d.items()))

    def to_dict(self) -> dict[str, list[float]]:
        return {c.feature: [c.lo, c.hi] for c in self.constraints}


def classify(features: dict[str, float], roi: Roi) -> int:
    """+1 iff every constraint interval contains its feature value."""
    for c in roi.constraints:
        if c.feature not in features:
            raise UnknownFeature(c.feature)
        v = features[c.feature]
        if not (c.lo <= v <= c.hi):
            return -1
    return 1


# --------------------------------------------------------------------------
# History

@dataclass
class HistoryEntry:
    index: int
    params: np.ndarray
    behavior: np.ndarray
    constraint_features: dict[str, float]
    classification: int
    observation: np.ndarray | None = None


@dataclass
class History:
    """Append-only run record; only classifications may be rewritten."""

    entries: list[HistoryEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i: int) -> HistoryEntry:
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    def append(self, entry: HistoryEntry) -> None:
        if entry.index != len(self.entries):
            raise ValueError("history indices must be contiguous")
        self.entries.append(entry)

    def behaviors(self) -> np.ndarray:
        return np.stack([e.behavior for e in self.entries])

    def classifications(self) -> np.ndarray:
        return np.array([e.classification for e in self.entries])


def update_roi(history: History, roi: Roi) -> int:
    """Re-classify every entry against ``roi``; returns the inlier count.
    No rollouts happen; this is what makes live ROI edits cheap."""
    count = 0
    for e in history:
        e.classification = classify(e.constraint_features, roi)
        if e.classification == 1:
            count += 1
    return count


# --------------------------------------------------------------------------
# Policy primitives

def sample_goal(history: History, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the axis-aligned bounding box of all history
    behaviors (inliers and outliers alike)."""
    if len(history) == 0:
        raise ValueError("cannot sample a goal from an empty history")
    b = history.behaviors()
    lo = b.min(axis=0)
    hi = b.max(axis=0)
    return rng.uniform(lo, hi)


def select_candidate(history: History, goal: np.ndarray,
                     axes: Sequence[int], constrained: bool) -> int:
    """Index of the history entry nearest to the goal.

    Distances use per-dimension standardization over the full history
    restricted to ``axes``; dimensions with std < 1e-12 contribute nothing.
    Constrained mode searches inliers only, falling back to the global set
    when no inlier exists yet.  Ties break to the lowest index.
    """
    if len(history) == 0:
        raise ValueError("cannot select from an empty history")
    axes = np.asarray(axes, dtype=np.intp)
    if axes.size == 0:
        raise ValueError("axes must be non-empty")

    b = history.behaviors()[:, axes]
    g = np.asarray(goal, dtype=np.float64)[axes]
    mean = b.mean(axis=0)
    std = b.std(axis=0)
    live = std >= 1e-12
    bz = np.where(live, (b - mean) / np.where(live, std, 1.0), 0.0)
    gz = np.where(live, (g - mean) / np.where(live, std, 1.0), 0.0)
    d2 = ((bz - gz) ** 2).sum(axis=1)

    if constrained:
        inliers = np.flatnonzero(history.classifications() == 1)
        if inliers.size > 0:
            return int(inliers[np.argmin(d2[inliers])])
    return int(np.argmin(d2))


def mutate(params: np.ndarray, sigmas: np.ndarray, lower: np.ndarray,
           upper: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Per-dimension Gaussian perturbation in raw units, clipped to
    bounds."""
    perturbed = params + rng.normal(0.0, 1.0, size=len(params)) * sigmas
    return np.clip(perturbed, lower, upper)


# --------------------------------------------------------------------------
# The explorer

@dataclass(frozen=True)
class ExplorerConfig:
    method: str = "NRAB"
    budget: int = 1000
    n_init: int = 250
    balance_prob: float = 0.5
    subspace_dims: int = 3
    seed: int = 0
    keep_observations: bool = True
    # None = use the system's per-parameter defaults.
    mutation_sigmas: tuple[float, ...] | None = None
    # "range_fraction": sigmas are fractions of each parameter's range;
    # "raw": sigmas are in raw parameter units.  Range fractions keep
    # mutation local on every axis, which the nearest-neighbor methods
    # depend on (a raw sigma the size of the whole range degrades them
    # all to random search).
    mutation_units: str = "range_fraction"

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.n_init < 1:
            raise ValueError("n_init must be >= 1")
        if self.n_init > self.budget:
            raise ValueError("n_init must not exceed budget")
        if not 0.0 <= self.balance_prob <= 1.0:
            raise ValueError("balance_prob must lie in [0, 1]")
        if not 1 <= self.subspace_dims <= BEHAVIOR_DIM:
            raise ValueError(
                f"subspace_dims must lie in [1, {BEHAVIOR_DIM}]")
        if self.mutation_units not in ("range_fraction", "raw"):
            raise ValueError(
                "mutation_units must be 'range_fraction' or 'raw'")


class Explorer:
    """One exploration run: call ``step()`` exactly ``budget`` times.

    Six independent rng streams (init sampling, goal, axes, balance coin,
    mutation, rollout init) are spawned from the seed so that methods
    consuming different draws stay comparable; in particular NRAB with
    balance_prob = 0 reproduces NRA sample-for-sample.  The rollout seed is
    drawn once, so every rollout of a run starts from the same initial
    state.
    """

    def __init__(self, system: System, config: ExplorerConfig,
                 roi: Roi | None = None) -> None:
        self.system = system
        self.config = config
        self.roi = roi if roi is not None else Roi()
        self.history = History()

        streams = np.random.SeedSequence(config.seed).spawn(6)
        self._rng_init = np.random.default_rng(streams[0])
        self._rng_goal = np.random.default_rng(streams[1])
        self._rng_axes = np.random.default_rng(streams[2])
        self._rng_balance = np.random.default_rng(streams[3])
        self._rng_mutation = np.random.default_rng(streams[4])
        rollout_seed = int(np.random.default_rng(streams[5])
                           .integers(0, 2 ** 31 - 1))
        self._rollout_config = system.default_config.with_seed(rollout_seed)

        sigmas = (config.mutation_sigmas
                  if config.mutation_sigmas is not None
                  else system.mutation_sigmas)
        self._sigmas = np.asarray(sigmas, dtype=np.float64)
        if self._sigmas.shape != (system.n_params,):
            raise ValueError("mutation_sigmas length must match parameters")
        if config.mutation_units == "range_fraction":
            self._sigmas = self._sigmas * (system.upper - system.lower)

    @property
    def done(self) -> bool:
        return len(self.history) >= self.config.budget

    def _sample_params(self) -> np.ndarray:
        cfg = self.config
        if len(self.history) < cfg.n_init or cfg.method == "R":
            return self._rng_init.uniform(self.system.lower,
                                          self.system.upper)

        goal = sample_goal(self.history, self._rng_goal)
        if cfg.method == "N":
            axes = np.arange(BEHAVIOR_DIM)
        else:
            axes = self._rng_axes.choice(BEHAVIOR_DIM,
                                         size=cfg.subspace_dims,
                                         replace=False)
        constrained = (cfg.method == "NRAB"
                       and self._rng_balance.random() < cfg.balance_prob)
        idx = select_candidate(self.history, goal, axes, constrained)
        return mutate(self.history[idx].params, self._sigmas,
                      self.system.lower, self.system.upper,
                      self._rng_mutation)

    def step(self) -> HistoryEntry:
        if self.done:
            raise RuntimeError("budget exhausted")
        params = self._sample_params()
        try:
            obs = self.system.rollout(params, self._rollout_config)
        except (DivergentRollout, ZeroKernel):
            # Invalid rollouts are recorded as homogeneous constant-0
            # observations so the history stays contiguous.
            obs = np.zeros((1, 1))
        entry = HistoryEntry(
            index=len(self.history),
            params=params,
            behavior=behavior_vector(obs),
            constraint_features=constraint_features(obs),
            classification=0,
            observation=obs if self.config.keep_observations else None,
        )
        entry.classification = classify(entry.constraint_features, self.roi)
        self.history.append(entry)
        return entry

    def update_roi(self, roi: Roi) -> int:
        """Swap the ROI and re-classify the whole history; returns the new
        inlier count."""
        self.roi = roi
        return update_roi(self.history, roi)


def run_exploration(
    system: System,
    config: ExplorerConfig,
    roi: Roi | None = None,
    callback: Callable[[HistoryEntry], bool] | None = None,
) -> History:
    """Run a full budget of steps.  The callback sees each new entry and may
    return False to stop early; the partial history is returned as-is."""
    explorer = Explorer(system, config, roi)
    while not explorer.done:
        entry = explorer.step()
        if callback is not None and callback(entry) is False:
            break
    return explorer.history
