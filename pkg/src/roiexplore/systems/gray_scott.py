"""Gray-Scott reaction-diffusion on a 32x32 toroidal grid.

Two concentration fields: u is replenished at the feed rate f, v is removed
at the kill rate k and grows autocatalytically through u*v^2.  Forward Euler
with a 5-point toroidal Laplacian; diffusion fixed at D_u=0.5, D_v=0.25.
The observation is the final u field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .base import DivergentRollout, RolloutConfig, System, quantize_to_export
from .perlin import perlin_noise

GRID_SIZE = 32
D_U = 0.5
D_V = 0.25

F_RANGE = (0.001, 0.2)
K_RANGE = (0.01, 0.075)
MUTATION_SIGMAS = {"f": 0.2, "k": 0.001}


@dataclass(frozen=True)
class GrayScottParams:
    f: float
    k: float

    def __post_init__(self):
        if not F_RANGE[0] <= self.f <= F_RANGE[1]:
            raise ValueError(f"f={self.f} outside {F_RANGE}")
        if not K_RANGE[0] <= self.k <= K_RANGE[1]:
            raise ValueError(f"k={self.k} outside {K_RANGE}")

    def as_array(self) -> np.ndarray:
        return np.array([self.f, self.k])


def init_gray_scott(config: RolloutConfig, width: int = GRID_SIZE,
                    height: int = GRID_SIZE) -> tuple[np.ndarray, np.ndarray]:
    """u uniformly 1; v = 1 where thresholded Perlin noise exceeds the cut."""
    u = np.ones((height, width))
    noise = perlin_noise(width, height, config.perlin_cell_size, config.seed)
    v = (noise > config.perlin_threshold).astype(np.float64)
    return u, v


def step_gray_scott(u: np.ndarray, v: np.ndarray, params: GrayScottParams | np.ndarray,
                    dt: float, kill_term: str = "classical",
                    laplacian_scale: float = 0.25,
                    clip_to_unit: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """One forward-Euler step.  Reference numpy path; rollouts use the
    compiled loop, which matches this bit-for-bit."""
    if isinstance(params, GrayScottParams):
        f, k = params.f, params.k
    else:
        f, k = float(params[0]), float(params[1])
    kill = f + k if kill_term == "classical" else f - k
    du = D_U * laplacian_scale
    dv = D_V * laplacian_scale

    lap_u = (np.roll(u, 1, 0) + np.roll(u, -1, 0)
             + np.roll(u, 1, 1) + np.roll(u, -1, 1)) - 4.0 * u
    lap_v = (np.roll(v, 1, 0) + np.roll(v, -1, 0)
             + np.roll(v, 1, 1) + np.roll(v, -1, 1)) - 4.0 * v
    uvv = u * v * v
    u_new = u + dt * ((du * lap_u - uvv) + f * (1.0 - u))
    v_new = v + dt * ((dv * lap_v + uvv) - kill * v)
    if clip_to_unit:
        u_new = np.clip(u_new, 0.0, 1.0)
        v_new = np.clip(v_new, 0.0, 1.0)
    return u_new, v_new


@numba.njit(cache=True)
def _evolve(u, v, f, k, kill, du, dv, dt, steps, clip_to_unit):  # pragma: no cover
    h, w = u.shape
    u_next = np.empty_like(u)
    v_next = np.empty_like(v)
    for _ in range(steps):
        for i in range(h):
            im = i - 1 if i > 0 else h - 1
            ip = i + 1 if i < h - 1 else 0
            for j in range(w):
                jm = j - 1 if j > 0 else w - 1
                jp = j + 1 if j < w - 1 else 0
                lap_u = (((u[im, j] + u[ip, j]) + u[i, jm]) + u[i, jp]) - 4.0 * u[i, j]
                lap_v = (((v[im, j] + v[ip, j]) + v[i, jm]) + v[i, jp]) - 4.0 * v[i, j]
                uvv = u[i, j] * v[i, j] * v[i, j]
                un = u[i, j] + dt * ((du * lap_u - uvv) + f * (1.0 - u[i, j]))
                vn = v[i, j] + dt * ((dv * lap_v + uvv) - kill * v[i, j])
                if clip_to_unit:
                    un = min(max(un, 0.0), 1.0)
                    vn = min(max(vn, 0.0), 1.0)
                u_next[i, j] = un
                v_next[i, j] = vn
        u, u_next = u_next, u
        v, v_next = v_next, v
    return u, v


def rollout_gray_scott(params: GrayScottParams | np.ndarray,
                       config: RolloutConfig) -> np.ndarray:
    """Final observed concentration grid after ``config.steps`` Euler steps;
    pure in (params, seed).

    Raises DivergentRollout if any value went non-finite (only possible with
    clipping disabled).
    """
    if isinstance(params, GrayScottParams):
        f, k = params.f, params.k
    else:
        f, k = float(params[0]), float(params[1])
    kill = f + k if config.kill_term == "classical" else f - k
    u, v = init_gray_scott(config)
    u, v = _evolve(u, v, f, k, kill, D_U * config.laplacian_scale,
                   D_V * config.laplacian_scale, config.gray_scott_dt,
                   config.steps, config.clip_to_unit)
    if not (np.isfinite(u).all() and np.isfinite(v).all()):
        raise DivergentRollout(f"gray_scott f={f} k={k}")
    obs = u if config.observed_channel == "u" else v
    return quantize_to_export(obs) if config.quantize_observation else obs


GRAY_SCOTT_CONFIG = RolloutConfig(steps=2000, gray_scott_dt=1.0)


def gray_scott_system(config: RolloutConfig = GRAY_SCOTT_CONFIG) -> System:
    return System(
        name="gray_scott",
        param_names=("f", "k"),
        lower=np.array([F_RANGE[0], K_RANGE[0]]),
        upper=np.array([F_RANGE[1], K_RANGE[1]]),
        mutation_sigmas=np.array([MUTATION_SIGMAS["f"], MUTATION_SIGMAS["k"]]),
        default_config=config,
        rollout=lambda values, cfg: rollout_gray_scott(values, cfg),
    )
