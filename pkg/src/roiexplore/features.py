"""Feature extraction from observation grids.

Three feature families serve three distinct roles:

* behavior vector (7 signed-log Hu invariants + mean pixel + volume) —
  goal space for the explorer;
* constraint features (volume, mean pixel, Tamura coarseness / contrast /
  directionality) — the space user ROIs are expressed in;
* evaluation embedding (13 Haralick features -> standardize -> 4-D PCA) —
  the space diversity is measured in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.ndimage

VOLUME_EPS = 1e-5
GLCM_LEVELS = 32
# (drow, dcol) offsets at distance 1: 0, 45, 90, 135 degrees.
GLCM_OFFSETS = ((0, 1), (-1, 1), (-1, 0), (-1, -1))

CONSTRAINT_FEATURES = (
    "volume",
    "mean_pixel",
    "tamura_coarseness",
    "tamura_contrast",
    "tamura_directionality",
)

BEHAVIOR_DIM = 9


def volume(obs: np.ndarray, eps: float = VOLUME_EPS) -> float:
    """Fraction of cells whose value exceeds eps."""
    return float((np.asarray(obs) > eps).mean())


def mean_pixel(obs: np.ndarray) -> float:
    return float(np.asarray(obs).mean())


# --------------------------------------------------------------------------
# Hu moment invariants

def hu_moments(obs: np.ndarray) -> np.ndarray:
    """The 7 classical moment invariants of the grid viewed as a density
    image.  Zero-mass grids map to the zero vector."""
    img = np.asarray(obs, dtype=np.float64)
    m00 = img.sum()
    if m00 < 1e-12:
        return np.zeros(7)

    h, w = img.shape
    ys = np.arange(h, dtype=np.float64)[:, None]
    xs = np.arange(w, dtype=np.float64)[None, :]
    xc = (img * xs).sum() / m00
    yc = (img * ys).sum() / m00
    dx = xs - xc
    dy = ys - yc

    def mu(p, q):
        return (img * dx ** p * dy ** q).sum()

    def eta(p, q):
        return mu(p, q) / m00 ** (1.0 + (p + q) / 2.0)

    n20, n02, n11 = eta(2, 0), eta(0, 2), eta(1, 1)
    n30, n03 = eta(3, 0), eta(0, 3)
    n21, n12 = eta(2, 1), eta(1, 2)

    s1 = n30 + n12
    s2 = n21 + n03
    h1 = n20 + n02
    h2 = (n20 - n02) ** 2 + 4.0 * n11 ** 2
    h3 = (n30 - 3.0 * n12) ** 2 + (3.0 * n21 - n03) ** 2
    h4 = s1 ** 2 + s2 ** 2
    h5 = ((n30 - 3.0 * n12) * s1 * (s1 ** 2 - 3.0 * s2 ** 2)
          + (3.0 * n21 - n03) * s2 * (3.0 * s1 ** 2 - s2 ** 2))
    h6 = (n20 - n02) * (s1 ** 2 - s2 ** 2) + 4.0 * n11 * s1 * s2
    h7 = ((3.0 * n21 - n03) * s1 * (s1 ** 2 - 3.0 * s2 ** 2)
          - (n30 - 3.0 * n12) * s2 * (3.0 * s1 ** 2 - s2 ** 2))
    return np.array([h1, h2, h3, h4, h5, h6, h7])


def signed_log(x: np.ndarray) -> np.ndarray:
    """Order-of-magnitude compression that is continuous through 0 and maps
    0 to 0: sign(x) * (log10(|x| + 1e-30) + 30)."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * (np.log10(np.abs(x) + 1e-30) + 30.0)


def behavior_vector(obs: np.ndarray) -> np.ndarray:
    """9-D behavior descriptor: signed-log Hu invariants, mean, volume."""
    return np.concatenate([signed_log(hu_moments(obs)),
                           [mean_pixel(obs), volume(obs)]])


# --------------------------------------------------------------------------
# Haralick texture features

def glcm(obs: np.ndarray, offset: tuple[int, int],
         levels: int = GLCM_LEVELS) -> np.ndarray:
    """Symmetric, normalized gray-level co-occurrence matrix at the given
    (drow, dcol) offset; values quantized to ``levels`` bins over [0, 1]."""
    img = np.clip(np.asarray(obs, dtype=np.float64), 0.0, 1.0)
    q = np.minimum((img * levels).astype(np.int64), levels - 1)
    di, dj = offset
    h, w = q.shape
    r0 = max(0, -di)
    r1 = h - max(0, di)
    c0 = max(0, -dj)
    c1 = w - max(0, dj)
    a = q[r0:r1, c0:c1].ravel()
    b = q[r0 + di:r1 + di, c0 + dj:c1 + dj].ravel()
    counts = np.bincount(a * levels + b, minlength=levels * levels)
    mat = counts.reshape(levels, levels).astype(np.float64)
    mat = mat + mat.T
    total = mat.sum()
    if total > 0:
        mat /= total
    return mat


def haralick_of_glcm(p: np.ndarray) -> np.ndarray:
    """Haralick features 1-13 of one normalized co-occurrence matrix."""
    eps = 1e-12
    n = p.shape[0]
    idx = np.arange(n, dtype=np.float64)
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    mu_x = (idx * px).sum()
    mu_y = (idx * py).sum()
    sd_x = np.sqrt(((idx - mu_x) ** 2 * px).sum())
    sd_y = np.sqrt(((idx - mu_y) ** 2 * py).sum())

    ii = idx[:, None]
    jj = idx[None, :]
    sum_idx = (ii + jj).astype(np.int64)
    diff_idx = np.abs(ii - jj).astype(np.int64)
    p_sum = np.bincount(sum_idx.ravel(), weights=p.ravel(), minlength=2 * n - 1)
    p_diff = np.bincount(diff_idx.ravel(), weights=p.ravel(), minlength=n)
    ks = np.arange(2 * n - 1, dtype=np.float64)
    kd = np.arange(n, dtype=np.float64)

    asm = (p ** 2).sum()
    contrast = (kd ** 2 * p_diff).sum()
    if sd_x * sd_y > eps:
        correlation = ((ii * jj * p).sum() - mu_x * mu_y) / (sd_x * sd_y)
    else:
        correlation = 0.0
    variance = ((ii - mu_x) ** 2 * p).sum()
    idm = (p / (1.0 + (ii - jj) ** 2)).sum()
    sum_avg = (ks * p_sum).sum()
    sum_var = ((ks - sum_avg) ** 2 * p_sum).sum()
    sum_entropy = -(p_sum * np.log(p_sum + eps)).sum()
    entropy = -(p * np.log(p + eps)).sum()
    diff_avg = (kd * p_diff).sum()
    diff_var = ((kd - diff_avg) ** 2 * p_diff).sum()
    diff_entropy = -(p_diff * np.log(p_diff + eps)).sum()

    hx = -(px * np.log(px + eps)).sum()
    hy = -(py * np.log(py + eps)).sum()
    pxpy = px[:, None] * py[None, :]
    hxy1 = -(p * np.log(pxpy + eps)).sum()
    hxy2 = -(pxpy * np.log(pxpy + eps)).sum()
    denom = max(hx, hy)
    imc1 = (entropy - hxy1) / denom if denom > eps else 0.0
    imc2 = np.sqrt(max(0.0, 1.0 - np.exp(-2.0 * (hxy2 - entropy))))

    return np.array([asm, contrast, correlation, variance, idm, sum_avg,
                     sum_var, sum_entropy, entropy, diff_var, diff_entropy,
                     imc1, imc2])


def haralick13(obs: np.ndarray, levels: int = GLCM_LEVELS) -> np.ndarray:
    """13 Haralick features averaged over the 4 distance-1 offsets."""
    feats = [haralick_of_glcm(glcm(obs, off, levels)) for off in GLCM_OFFSETS]
    return np.mean(feats, axis=0)


# --------------------------------------------------------------------------
# Tamura texture features

def _tamura_coarseness(img: np.ndarray, max_scale: int = 5) -> float:
    best = np.zeros_like(img)
    chosen = np.ones_like(img)
    for k in range(1, max_scale + 1):
        size = 2 ** k
        avg = scipy.ndimage.uniform_filter(img, size=size, mode="wrap")
        half = 2 ** (k - 1)
        e_h = np.abs(np.roll(avg, -half, axis=1) - np.roll(avg, half, axis=1))
        e_v = np.abs(np.roll(avg, -half, axis=0) - np.roll(avg, half, axis=0))
        e = np.maximum(e_h, e_v)
        better = e > best
        best = np.where(better, e, best)
        chosen = np.where(better, float(size), chosen)
    return float(chosen.mean())


def _tamura_contrast(img: np.ndarray) -> float:
    sd = img.std()
    if sd < 1e-12:
        return 0.0
    m4 = ((img - img.mean()) ** 4).mean()
    kurtosis = m4 / sd ** 4
    return float(sd / kurtosis ** 0.25)


def _tamura_directionality(img: np.ndarray, n_bins: int = 16) -> float:
    """Sharpness of the gradient-orientation histogram: 1 for a single
    dominant orientation, ~0 for isotropic texture, 0 for flat images."""
    prewitt_h = np.array([[-1.0, 0.0, 1.0]] * 3)
    gh = scipy.ndimage.convolve(img, prewitt_h, mode="wrap")
    gv = scipy.ndimage.convolve(img, prewitt_h.T, mode="wrap")
    mag = (np.abs(gh) + np.abs(gv)) / 2.0
    mask = mag > 1e-9
    if not mask.any():
        return 0.0
    theta = np.mod(np.arctan2(gv[mask], gh[mask]), np.pi)
    hist, _ = np.histogram(theta, bins=n_bins, range=(0.0, np.pi))
    hist = hist / hist.sum()
    centers = (np.arange(n_bins) + 0.5) * np.pi / n_bins
    peak = centers[np.argmax(hist)]
    d = np.abs(centers - peak)
    d = np.minimum(d, np.pi - d)
    spread = (hist * d ** 2).sum()
    return float(np.clip(1.0 - spread / (np.pi ** 2 / 12.0), 0.0, 1.0))


def tamura_features(obs: np.ndarray) -> tuple[float, float, float]:
    """(coarseness, contrast, directionality)."""
    img = np.asarray(obs, dtype=np.float64)
    return (_tamura_coarseness(img), _tamura_contrast(img),
            _tamura_directionality(img))


def constraint_features(obs: np.ndarray) -> dict[str, float]:
    """Features the user's ROI constraints are written against."""
    coarse, contrast, direction = tamura_features(obs)
    return {
        "volume": volume(obs),
        "mean_pixel": mean_pixel(obs),
        "tamura_coarseness": coarse,
        "tamura_contrast": contrast,
        "tamura_directionality": direction,
    }


# --------------------------------------------------------------------------
# Standardization and PCA

@dataclass(frozen=True)
class StandardizationStats:
    mean: np.ndarray
    std: np.ndarray  # floored at 1e-12


def standardize(data: np.ndarray) -> tuple[np.ndarray, StandardizationStats]:
    """Per-dimension (x - mean) / std with std floored at 1e-12; stats are
    recomputed from scratch on every call."""
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    mean = data.mean(axis=0)
    std = np.maximum(data.std(axis=0), 1e-12)
    return (data - mean) / std, StandardizationStats(mean=mean, std=std)


@dataclass(frozen=True)
class PcaBasis:
    mean: np.ndarray
    std: np.ndarray
    components: np.ndarray        # (out_dims, n_features)
    explained_variance: np.ndarray

    @property
    def out_dims(self) -> int:
        return self.components.shape[0]


def pca_fit(data: np.ndarray, out_dims: int = 4) -> PcaBasis:
    """Top principal directions of the standardized data.

    Rank-deficient data gets zero-padded components, so projections onto
    the missing directions are exactly 0.
    """
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    n, d = data.shape
    if n < 5:
        raise ValueError(f"need at least 5 vectors to fit, got {n}")
    if out_dims > d:
        raise ValueError(f"out_dims {out_dims} exceeds feature dim {d}")

    z, stats = standardize(data)
    _, s, vt = np.linalg.svd(z, full_matrices=False)
    explained = s[:out_dims] ** 2 / n
    comps = vt[:out_dims].copy()
    degenerate = s[:out_dims] <= 1e-12 * max(s[0], 1.0)
    comps[degenerate] = 0.0
    # Fix the sign ambiguity: largest-|.| coefficient positive.
    for row in comps:
        if row.any():
            pivot = np.argmax(np.abs(row))
            if row[pivot] < 0:
                row *= -1.0
    return PcaBasis(mean=stats.mean, std=stats.std, components=comps,
                    explained_variance=explained)


def pca_project(basis: PcaBasis, vectors: np.ndarray) -> np.ndarray:
    """Affine map into the fitted low-dimensional space; accepts a single
    vector or a batch."""
    arr = np.asarray(vectors, dtype=np.float64)
    single = arr.ndim == 1
    z = (np.atleast_2d(arr) - basis.mean) / basis.std
    coords = z @ basis.components.T
    return coords[0] if single else coords
