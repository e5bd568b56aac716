"""Shared rollout plumbing: config, grid helpers, system interface."""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from PIL import Image


class DivergentRollout(Exception):
    """A simulation produced non-finite values."""


class ZeroKernel(Exception):
    """Degenerate kernel whose pre-normalization sum is ~0."""


@dataclass(frozen=True)
class RolloutConfig:
    steps: int = 2000
    gray_scott_dt: float = 1.0
    # Eq. 1 as printed uses -(f - k)v; the classical model uses -(f + k)v.
    kill_term: str = "classical"
    # 1/dx^2 grid-spacing factor on the 5-point Laplacian.  At 0.25 the
    # scheme is unconditionally stable for D_u=0.5, D_v=0.25 at dt=1.
    laplacian_scale: float = 0.25
    # Which concentration field is rendered as the observation.
    observed_channel: str = "v"
    clip_to_unit: bool = True
    # Snap the final observation to the 8-bit export lattice (k/255), so
    # in-memory values equal their PNG rendering.
    quantize_observation: bool = True
    perlin_cell_size: int = 8
    perlin_threshold: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.gray_scott_dt <= 0:
            raise ValueError("gray_scott_dt must be > 0")
        if self.kill_term not in ("classical", "as_printed"):
            raise ValueError("kill_term must be 'classical' or 'as_printed'")
        if self.laplacian_scale <= 0:
            raise ValueError("laplacian_scale must be > 0")
        if self.observed_channel not in ("u", "v"):
            raise ValueError("observed_channel must be 'u' or 'v'")
        if self.perlin_cell_size < 1:
            raise ValueError("perlin_cell_size must be >= 1")

    def with_seed(self, seed: int) -> "RolloutConfig":
        return replace(self, seed=seed)


def is_homogeneous(obs: np.ndarray, tol: float = 1e-4) -> bool:
    """True iff the max - min spread of cell values is within tol."""
    obs = np.asarray(obs)
    return bool(obs.max() - obs.min() <= tol)


def quantize_to_export(obs: np.ndarray) -> np.ndarray:
    """Project onto the 8-bit grayscale lattice used for PNG export."""
    return np.round(255.0 * np.clip(obs, 0.0, 1.0)) / 255.0


def grid_to_png(obs: np.ndarray) -> bytes:
    """8-bit grayscale PNG; value v maps to round(255 * clip(v, 0, 1))."""
    arr = np.clip(np.asarray(obs, dtype=np.float64), 0.0, 1.0)
    img = Image.fromarray(np.round(255.0 * arr).astype(np.uint8), mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


@dataclass(frozen=True)
class System:
    """A parameterized grid system the explorer can roll out.

    ``rollout(values, config)`` must be a pure function of its arguments;
    the config's seed fixes the initial state.
    """

    name: str
    param_names: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray
    mutation_sigmas: np.ndarray
    default_config: RolloutConfig
    rollout: Callable[[np.ndarray, RolloutConfig], np.ndarray] = field(repr=False)

    @property
    def n_params(self) -> int:
        return len(self.param_names)
