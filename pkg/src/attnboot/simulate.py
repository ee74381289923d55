"""Noise-injection protocol: square patches, diffuse clustered noise, and the
mean-z region filter.

Injected pixels are drawn from per-channel gaussians matching the original
image's channel statistics, so the noise is distributionally aligned with
the parametric bootstrap null.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bootstrap import channel_stats, standard_normal
from .core_io import Image
from .errors import InputError

NOISE_KINDS = ("square", "diffuse")


@dataclass(frozen=True)
class NoiseSpec:
    """Noise shape and scale: a single square or diffuse clustered spots."""

    kind: str = "square"
    square_size: int = 100
    clustering: float = 20.0  # spectral width of the diffuse low-pass filter
    n_pixels: int = 10_000  # diffuse mask size
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise InputError(f"noise kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if self.square_size < 1:
            raise InputError("square size must be >= 1")
        if self.n_pixels < 1:
            raise InputError("diffuse pixel count must be >= 1")
        if self.clustering < 0:
            raise InputError("clustering parameter must be >= 0")


class RoiMask:
    """Boolean H×W mask of the injected-noise pixels."""

    __slots__ = ("member",)

    def __init__(self, member: np.ndarray):
        arr = np.array(member, dtype=bool)
        if arr.ndim != 2:
            raise InputError(f"mask must be 2-D, got shape {arr.shape}")
        if not arr.any():
            raise InputError("mask must select at least one pixel")
        arr.setflags(write=False)
        self.member = arr

    @property
    def count(self) -> int:
        return int(self.member.sum())


def _channel_noise(image: Image, rng: np.random.Generator, n: int) -> np.ndarray:
    """(n, 3) gaussian draws matching the image's channel stats, clamped to [0, 1]."""
    stats = channel_stats(image)
    z = standard_normal(rng, (n, 3))
    out = np.empty((n, 3), dtype=np.float64)
    for c in range(3):
        if stats.sigma[c] == 0.0:
            out[:, c] = stats.mu[c]
        else:
            out[:, c] = stats.mu[c] + stats.sigma[c] * z[:, c]
    np.clip(out, 0.0, 1.0, out=out)
    return out


def inject_square(image: Image, spec: NoiseSpec) -> tuple[Image, RoiMask]:
    """Replace a uniformly placed square with channel-matched gaussian noise.

    The top-left corner is uniform over all placements where the square fits
    entirely inside the image; pixels outside the square are untouched.
    """
    s = spec.square_size
    h, w = image.height, image.width
    if h < s or w < s:
        raise InputError(f"square of size {s} does not fit in a {h}x{w} image")
    rng = np.random.default_rng(spec.seed)
    row0 = int(rng.integers(0, h - s + 1))
    col0 = int(rng.integers(0, w - s + 1))
    noise = _channel_noise(image, rng, s * s).reshape(s, s, 3)
    out = image.data.copy()
    out[row0 : row0 + s, col0 : col0 + s] = noise
    mask = np.zeros((h, w), dtype=bool)
    mask[row0 : row0 + s, col0 : col0 + s] = True
    return Image(out), RoiMask(mask)


def _smooth_field(field: np.ndarray, clustering: float) -> np.ndarray:
    """Low-pass a field in the frequency domain: multiply by exp(-d^2 c^2),
    d being the radial frequency distance in cycles/pixel."""
    h, w = field.shape
    fy = np.fft.fftfreq(h)
    fx = np.fft.fftfreq(w)
    d2 = fy[:, None] ** 2 + fx[None, :] ** 2
    gain = np.exp(-d2 * clustering**2)
    return np.real(np.fft.ifft2(np.fft.fft2(field) * gain))


def top_k_mask(values: np.ndarray, k: int) -> np.ndarray:
    """Boolean mask of the k largest values; ties broken by row-major index.

    Depends only on the ordering of ``values``, so it is invariant to any
    increasing affine rescaling of the field.
    """
    flat = values.ravel()
    if not 1 <= k <= flat.size:
        raise InputError(f"k must be in [1, {flat.size}], got {k}")
    order = np.argsort(-flat, kind="stable")
    mask = np.zeros(flat.size, dtype=bool)
    mask[order[:k]] = True
    return mask.reshape(values.shape)


def diffuse_roi(image: Image, spec: NoiseSpec) -> tuple[Image, RoiMask]:
    """Scatter channel-matched noise over the top-n pixels of a smoothed
    gaussian random field, producing multiple small clusters."""
    h, w = image.height, image.width
    if spec.n_pixels > h * w:
        raise InputError(f"{spec.n_pixels} noise pixels exceed the {h * w}-pixel image")
    rng = np.random.default_rng(spec.seed)
    field = standard_normal(rng, (h, w))
    smooth = _smooth_field(field, spec.clustering)
    lo, hi = smooth.min(), smooth.max()
    norm = (smooth - lo) / (hi - lo) if hi > lo else np.zeros_like(smooth)
    mask = top_k_mask(norm, spec.n_pixels)
    noise = _channel_noise(image, rng, spec.n_pixels)
    out = image.data.copy()
    out[mask] = noise
    return Image(out), RoiMask(mask)


def inject(image: Image, spec: NoiseSpec) -> tuple[Image, RoiMask]:
    """Dispatch on the configured noise kind."""
    if spec.kind == "square":
        return inject_square(image, spec)
    return diffuse_roi(image, spec)


def mean_roi_z(z: np.ndarray, mask: RoiMask) -> float:
    """Arithmetic mean of the z-statistics over the masked pixels."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != mask.member.shape:
        raise InputError(f"z shape {z.shape} does not match mask shape {mask.member.shape}")
    return float(z[mask.member].mean())


def passes_z_filter(mean_z: float) -> bool:
    """Keep images whose mean region z lies within one null standard deviation."""
    return abs(mean_z) <= 1.0
