"""Bootstrap null images: parametric (per-channel gaussian) and nonparametric
(whole-pixel resampling with replacement).

Replicate seeds are derived with a splitmix64-style mix so ensembles are
reproducible and independent of generation order; normal variates come from
the inverse CDF applied to the uniform stream, keeping draw sequences
platform-independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .core_io import Image
from .errors import InputError

_MASK64 = (1 << 64) - 1
# splitmix64 constants (Steele, Lea & Flood 2014)
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

BOOTSTRAP_MODES = ("parametric", "nonparametric")


def mix_seed(seed: int, index: int) -> int:
    """Derive the 64-bit seed for replicate ``index`` from a base seed."""
    z = (int(seed) + index * _GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def standard_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Inverse-CDF standard normal draws from the generator's uniform stream."""
    return ndtri(rng.random(shape))


@dataclass(frozen=True)
class ChannelStats:
    """Per-channel population mean and standard deviation of an image."""

    mu: np.ndarray  # (3,)
    sigma: np.ndarray  # (3,)

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        sigma = np.asarray(self.sigma, dtype=np.float64)
        if mu.shape != (3,) or sigma.shape != (3,):
            raise InputError("channel stats must have one entry per RGB channel")
        if mu.min() < 0.0 or mu.max() > 1.0:
            raise InputError("channel means must lie in [0, 1]")
        if sigma.min() < 0.0 or sigma.max() > 0.5 + 1e-12:
            raise InputError("channel standard deviations must lie in [0, 0.5]")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)


@dataclass(frozen=True)
class BootstrapConfig:
    """How to build the null ensemble: mode, replicate count B, width multiplier, seed."""

    mode: str = "parametric"
    replicates: int = 1
    width: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in BOOTSTRAP_MODES:
            raise InputError(f"mode must be one of {BOOTSTRAP_MODES}, got {self.mode!r}")
        if self.replicates < 1:
            raise InputError("replicate count must be >= 1")
        if not self.width > 0:
            raise InputError("width multiplier must be positive")


def channel_stats(image: Image) -> ChannelStats:
    """Population mean and standard deviation of each channel (divide by N)."""
    data = image.data
    mu = data.mean(axis=(0, 1))
    sigma = data.std(axis=(0, 1))  # ddof=0
    return ChannelStats(mu=mu, sigma=sigma)


def parametric_null(image: Image, stats: ChannelStats, width: float, seed: int) -> Image:
    """Draw every pixel of channel c i.i.d. from N(mu_c, (width*sigma_c)^2), clamped to [0, 1]."""
    if not width > 0:
        raise InputError("width multiplier must be positive")
    h, w = image.height, image.width
    rng = np.random.default_rng(seed)
    z = standard_normal(rng, (h, w, 3))
    out = np.empty((h, w, 3), dtype=np.float64)
    for c in range(3):
        scale = width * stats.sigma[c]
        if scale == 0.0:
            out[:, :, c] = stats.mu[c]
        else:
            out[:, :, c] = stats.mu[c] + scale * z[:, :, c]
    np.clip(out, 0.0, 1.0, out=out)
    return Image(out)


def nonparametric_null(image: Image, seed: int) -> Image:
    """Fill every position with a whole pixel drawn uniformly with replacement
    from the original pixel multiset."""
    h, w = image.height, image.width
    flat = image.data.reshape(h * w, 3)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, h * w, size=h * w)
    return Image(flat[idx].reshape(h, w, 3))


def generate_ensemble(image: Image, config: BootstrapConfig) -> list[Image]:
    """Generate the B null images; replicate b uses seed mix_seed(config.seed, b).

    The result is independent of generation order, so replicates may be
    produced in parallel without changing the ensemble.
    """
    if config.mode == "parametric":
        stats = channel_stats(image)
        return [
            parametric_null(image, stats, config.width, mix_seed(config.seed, b))
            for b in range(1, config.replicates + 1)
        ]
    return [
        nonparametric_null(image, mix_seed(config.seed, b))
        for b in range(1, config.replicates + 1)
    ]
