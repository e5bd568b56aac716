"""Seeded single-octave gradient noise on a toroidal grid."""

from __future__ import annotations

import numpy as np


def _fade(t: np.ndarray) -> np.ndarray:
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def perlin_noise(width: int, height: int, cell_size: int, seed: int) -> np.ndarray:
    """Smooth gradient noise, min-max normalized to [0, 1] over the grid.

    One lattice point every ``cell_size`` pixels; gradients wrap so the
    field is seamless on the torus.  Deterministic for a fixed seed.
    """
    if width < 1 or height < 1:
        raise ValueError("grid sides must be >= 1")
    if cell_size < 1:
        raise ValueError("cell_size must be >= 1")

    nx = max(1, -(-width // cell_size))   # lattice cells per axis, ceil
    ny = max(1, -(-height // cell_size))
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0.0, 2.0 * np.pi, size=(ny, nx))
    gx = np.cos(angles)
    gy = np.sin(angles)

    ys, xs = np.mgrid[0:height, 0:width]
    x = xs / cell_size
    y = ys / cell_size
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = x - x0
    fy = y - y0

    def dot_corner(ix, iy, dx, dy):
        g_col = (ix % nx).astype(np.int64)
        g_row = (iy % ny).astype(np.int64)
        return gx[g_row, g_col] * dx + gy[g_row, g_col] * dy

    n00 = dot_corner(x0, y0, fx, fy)
    n10 = dot_corner(x0 + 1, y0, fx - 1.0, fy)
    n01 = dot_corner(x0, y0 + 1, fx, fy - 1.0)
    n11 = dot_corner(x0 + 1, y0 + 1, fx - 1.0, fy - 1.0)

    u = _fade(fx)
    v = _fade(fy)
    top = n00 + u * (n10 - n00)
    bottom = n01 + u * (n11 - n01)
    field = top + v * (bottom - top)

    lo = field.min()
    hi = field.max()
    if hi - lo < 1e-12:
        return np.zeros((height, width))
    return (field - lo) / (hi - lo)
