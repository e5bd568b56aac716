"""Single-channel Lenia on a 64x64 toroidal grid.

Update rule: A' = clip(A + dt * sum_k h_k * G_k(K_k * A), 0, 1) with
dt = 1/T.  Each of the 3 kernels is a radial profile of 3 overlapping
gaussian bumps, truncated at radius r_k*R and normalized to unit sum;
the growth function G_k is a gaussian rescaled to (-1, 1].
41 scalar parameters: 3 kernels x (3 bumps x 3 + 4) + 2 globals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .base import RolloutConfig, System, ZeroKernel, quantize_to_export
from .perlin import perlin_noise

GRID_SIZE = 64
N_KERNELS = 3
N_BUMPS = 3
N_PARAMS = 41

# Per-parameter bounds (Fig-3-style exploration box).
R_RANGE = (2.0, 40.0)
T_RANGE = (2.0, 20.0)
MU_RANGE = (0.05, 0.5)
SIGMA_RANGE = (0.001, 0.18)
H_RANGE = (0.01, 1.0)
RK_RANGE = (0.2, 1.0)
B_RANGE = (0.001, 1.0)
W_RANGE = (0.01, 0.5)
A_RANGE = (0.0, 1.0)


def _param_layout():
    """Flat (name, lo, hi, mutation_sigma) rows in canonical order."""
    rows = [("R", *R_RANGE, 0.2), ("T", *T_RANGE, 0.5)]
    for k in range(N_KERNELS):
        rows.append((f"mu_{k}", *MU_RANGE, 0.2))
        rows.append((f"sigma_{k}", *SIGMA_RANGE, 0.01))
        rows.append((f"h_{k}", *H_RANGE, 0.2))
        rows.append((f"r_{k}", *RK_RANGE, 0.2))
        for i in range(N_BUMPS):
            rows.append((f"b_{k}{i}", *B_RANGE, 0.2))
            rows.append((f"w_{k}{i}", *W_RANGE, 0.2))
            rows.append((f"a_{k}{i}", *A_RANGE, 0.2))
    return rows

_LAYOUT = _param_layout()
PARAM_NAMES = tuple(r[0] for r in _LAYOUT)
LOWER = np.array([r[1] for r in _LAYOUT])
UPPER = np.array([r[2] for r in _LAYOUT])
MUTATION_SIGMAS = np.array([r[3] for r in _LAYOUT])


@dataclass(frozen=True)
class KernelParams:
    mu: float
    sigma: float
    h: float
    r: float
    b: tuple[float, float, float]
    w: tuple[float, float, float]
    a: tuple[float, float, float]


@dataclass(frozen=True)
class LeniaParams:
    R: float
    T: float
    kernels: tuple[KernelParams, ...]

    def __post_init__(self):
        if len(self.kernels) != N_KERNELS:
            raise ValueError(f"expected {N_KERNELS} kernels")
        arr = self.as_array()
        if not ((LOWER <= arr) & (arr <= UPPER)).all():
            bad = [PARAM_NAMES[i] for i in np.where((arr < LOWER) | (arr > UPPER))[0]]
            raise ValueError(f"parameters out of bounds: {bad}")

    def as_array(self) -> np.ndarray:
        vals = [self.R, self.T]
        for kp in self.kernels:
            vals.extend([kp.mu, kp.sigma, kp.h, kp.r])
            for i in range(N_BUMPS):
                vals.extend([kp.b[i], kp.w[i], kp.a[i]])
        return np.array(vals)

    @classmethod
    def from_array(cls, values: np.ndarray) -> "LeniaParams":
        values = np.asarray(values, dtype=float)
        if values.shape != (N_PARAMS,):
            raise ValueError(f"expected {N_PARAMS} values, got {values.shape}")
        kernels = []
        for k in range(N_KERNELS):
            base = 2 + k * 13
            bumps = values[base + 4:base + 13].reshape(N_BUMPS, 3)
            kernels.append(KernelParams(
                mu=values[base], sigma=values[base + 1], h=values[base + 2],
                r=values[base + 3],
                b=tuple(bumps[:, 0]), w=tuple(bumps[:, 1]), a=tuple(bumps[:, 2]),
            ))
        return cls(R=values[0], T=values[1], kernels=tuple(kernels))


def growth(x, mu: float, sigma: float):
    """Gaussian growth, peak value 1 at x=mu, floor -1 in the tails."""
    return 2.0 * np.exp(-((x - mu) ** 2) / (2.0 * sigma ** 2)) - 1.0


def lenia_kernel(kp: KernelParams, R: float, width: int = GRID_SIZE,
                 height: int = GRID_SIZE) -> np.ndarray:
    """Radial bump-sum kernel on the torus, centered at cell (0, 0) so the
    FFT product implements the convolution without shifting.  Unit sum."""
    ii = np.arange(height)
    jj = np.arange(width)
    dy = np.minimum(ii, height - ii)[:, None]
    dx = np.minimum(jj, width - jj)[None, :]
    dist = np.sqrt(dy * dy + dx * dx)

    radius = kp.r * R
    scaled = dist / radius
    kernel = np.zeros((height, width))
    for i in range(N_BUMPS):
        kernel += kp.b[i] * np.exp(-((scaled - kp.a[i]) ** 2) / (2.0 * kp.w[i] ** 2))
    kernel[dist > radius] = 0.0

    total = kernel.sum()
    if total < 1e-12:
        raise ZeroKernel(f"kernel sum {total:.3e} with radius {radius:.2f}")
    return kernel / total


def _kernel_ffts(params: LeniaParams, shape: tuple[int, int]):
    return [scipy.fft.rfft2(lenia_kernel(kp, params.R, shape[1], shape[0]))
            for kp in params.kernels]


def step_lenia(A: np.ndarray, params: LeniaParams,
               kernel_ffts=None) -> np.ndarray:
    """One Lenia update; output clipped to [0, 1]."""
    if kernel_ffts is None:
        kernel_ffts = _kernel_ffts(params, A.shape)
    dt = 1.0 / params.T
    a_fft = scipy.fft.rfft2(A)
    field = np.zeros_like(A)
    for kp, k_fft in zip(params.kernels, kernel_ffts):
        conv = scipy.fft.irfft2(k_fft * a_fft, s=A.shape)
        field += kp.h * growth(conv, kp.mu, kp.sigma)
    return np.clip(A + dt * field, 0.0, 1.0)


LENIA_CONFIG = RolloutConfig(steps=200)


def init_lenia(config: RolloutConfig, width: int = GRID_SIZE,
               height: int = GRID_SIZE) -> np.ndarray:
    """Non-thresholded Perlin initial state."""
    return perlin_noise(width, height, config.perlin_cell_size, config.seed)


def rollout_lenia(params: LeniaParams | np.ndarray,
                  config: RolloutConfig) -> np.ndarray:
    """Final A after ``config.steps`` updates; pure in (params, seed)."""
    if not isinstance(params, LeniaParams):
        params = LeniaParams.from_array(params)
    A = init_lenia(config)
    kernel_ffts = _kernel_ffts(params, A.shape)
    for _ in range(config.steps):
        A = step_lenia(A, params, kernel_ffts)
    return quantize_to_export(A) if config.quantize_observation else A


def lenia_system(config: RolloutConfig = LENIA_CONFIG) -> System:
    return System(
        name="lenia",
        param_names=PARAM_NAMES,
        lower=LOWER.copy(),
        upper=UPPER.copy(),
        mutation_sigmas=MUTATION_SIGMAS.copy(),
        default_config=config,
        rollout=lambda values, cfg: rollout_lenia(values, cfg),
    )
