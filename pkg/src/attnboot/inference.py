"""Uncertainty statistics for attention scores against a bootstrap null.

Observed scores are standardized by the pooled null ensemble's moments,
compared against the pooled null for empirical right-tail p-values, and
assigned local false discovery rates from a shared-support histogram
density ratio.  The proportion of null scores pi0 is estimated from the
p-value distribution (Storey-style lambda grid, median over the grid).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .attention import AttentionSource, attention_for, null_attention_maps
from .bootstrap import BootstrapConfig, generate_ensemble
from .core_io import Image, PixelAttentionMap, write_dump
from .errors import DegenerateNullError, InputError

DEFAULT_LFDR_BINS = 101
DEFAULT_LAMBDA_GRID = np.round(np.arange(0.05, 0.96, 0.05), 2)

# Floor density assigned to empty null histogram bins, as a fraction of one
# null count: 1 / (10 * n_null * binwidth).
EMPTY_NULL_BIN_FLOOR = 0.1


class NullEnsemble:
    """B replicate score vectors of length m, flattened for moment estimation."""

    __slots__ = ("scores",)

    def __init__(self, scores: np.ndarray):
        arr = np.array(scores, dtype=np.float64)
        if arr.ndim != 2:
            raise InputError(f"null ensemble must be (B, m), got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InputError("null ensemble must be nonempty")
        arr.setflags(write=False)
        self.scores = arr

    @classmethod
    def from_maps(cls, maps: list[PixelAttentionMap]) -> "NullEnsemble":
        return cls(np.stack([m.scores.ravel() for m in maps]))

    @property
    def replicates(self) -> int:
        return self.scores.shape[0]

    @property
    def size_per_replicate(self) -> int:
        return self.scores.shape[1]


def null_moments(ensemble: NullEnsemble) -> tuple[float, float]:
    """Mean and population standard deviation over all replicate scores.

    Raises DegenerateNullError when the ensemble is constant: no
    standardization is possible and the caller must abort the analysis.
    """
    flat = ensemble.scores.ravel()
    if flat.size < 2:
        raise InputError("need at least two null scores to estimate moments")
    mu = float(flat.mean())
    sigma = float(flat.std())  # ddof=0
    if sigma == 0.0:
        raise DegenerateNullError("null ensemble is constant (sigma = 0)")
    return mu, sigma


def z_stats(scores: np.ndarray, mu: float, sigma: float) -> np.ndarray:
    """Standardize scores by the null moments: (a - mu) / sigma."""
    if sigma <= 0.0:
        raise InputError("sigma must be positive")
    return (np.asarray(scores, dtype=np.float64) - mu) / sigma


def p_values(z_obs: np.ndarray, z_null: np.ndarray) -> np.ndarray:
    """Empirical right-tail p-values against the pooled null set.

    p_i = #{null z strictly greater than z_i} / (null count); no +1
    smoothing, so p = 0 is attainable at the top of the null support.
    """
    null_flat = np.asarray(z_null, dtype=np.float64).ravel()
    if null_flat.size == 0:
        raise InputError("null set must be nonempty")
    obs = np.asarray(z_obs, dtype=np.float64)
    sorted_null = np.sort(null_flat)
    counts = _kernels.count_greater(sorted_null, obs.ravel())
    return (counts / null_flat.size).reshape(obs.shape)


def lfdr(z_obs: np.ndarray, z_null: np.ndarray, bins: int = DEFAULT_LFDR_BINS) -> np.ndarray:
    """Local false discovery rate per observed score, clipped to [0, 1].

    Null and observed densities are estimated on a shared equal-width
    histogram spanning the union of both supports; the rate is the null to
    observed density ratio at each observed score's bin, with the most
    conservative null proportion (1).  Empty null bins receive the floor
    density ``EMPTY_NULL_BIN_FLOOR / (n_null * binwidth)``.
    """
    obs = np.asarray(z_obs, dtype=np.float64)
    null_flat = np.asarray(z_null, dtype=np.float64).ravel()
    obs_flat = obs.ravel()
    if obs_flat.size == 0 or null_flat.size == 0:
        raise InputError("both observed and null sets must be nonempty")
    lo = min(obs_flat.min(), null_flat.min())
    hi = max(obs_flat.max(), null_flat.max())
    if hi == lo:
        return np.ones(obs.shape)
    width = (hi - lo) / bins
    null_counts = _kernels.bin_counts(_kernels.bin_indices(null_flat, lo, width, bins), bins)
    obs_counts = _kernels.bin_counts(_kernels.bin_indices(obs_flat, lo, width, bins), bins)
    null_density = null_counts / (null_flat.size * width)
    floor = EMPTY_NULL_BIN_FLOOR / (null_flat.size * width)
    null_density = np.where(null_counts == 0, floor, null_density)
    obs_density = obs_counts / (obs_flat.size * width)
    obs_bins = _kernels.bin_indices(obs_flat, lo, width, bins)
    # an observed point always occupies its own bin, so obs_density > 0 there
    ratio = null_density[obs_bins] / obs_density[obs_bins]
    return np.minimum(ratio, 1.0).reshape(obs.shape)


def estimate_pi0(p: np.ndarray, lambda_grid: np.ndarray | None = None) -> float:
    """Proportion of null scores, estimated from the p-value distribution.

    For each lambda, pi0(lambda) = #{p > lambda} / (m (1 - lambda)); the
    estimate is the median over the grid, clipped to [0, 1].
    """
    flat = np.asarray(p, dtype=np.float64).ravel()
    if flat.size == 0:
        raise InputError("p-value set must be nonempty")
    grid = DEFAULT_LAMBDA_GRID if lambda_grid is None else np.asarray(lambda_grid, dtype=np.float64)
    if grid.size == 0 or grid.min() < 0.0 or grid.max() >= 1.0:
        raise InputError("lambda grid must lie in [0, 1)")
    estimates = [
        np.count_nonzero(flat > lam) / (flat.size * (1.0 - lam)) for lam in grid
    ]
    return float(np.clip(np.median(estimates), 0.0, 1.0))


@dataclass(frozen=True)
class UncertaintyReport:
    """Per-pixel uncertainty statistics for one image.

    ``z`` / ``p`` / ``local_fdr`` share the attention map's H×W shape;
    ``z_null`` is (B, m) over the flattened replicates.
    """

    attention: np.ndarray
    z: np.ndarray
    z_null: np.ndarray
    p: np.ndarray
    local_fdr: np.ndarray
    pi0: float
    mu_hat: float
    sigma_hat: float

    def save(self, out_dir: str | Path, stem: str = "report") -> dict:
        """Write the map dumps plus a JSON scalar record; returns written paths."""
        import json

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {}
        for name, arr in (
            ("attention", self.attention),
            ("z", self.z),
            ("p", self.p),
            ("lfdr", self.local_fdr),
            ("z_null", self.z_null),
        ):
            paths[name] = str(
                write_dump(arr, out / f"{stem}_{name}", role="pixel_attention")
            )
        scalars = {"mu_hat": self.mu_hat, "sigma_hat": self.sigma_hat, "pi0": self.pi0}
        scalar_path = out / f"{stem}_scalars.json"
        scalar_path.write_text(json.dumps(scalars, indent=2) + "\n")
        paths["scalars"] = str(scalar_path)
        return paths


def analyze(
    image: Image,
    source: AttentionSource,
    config: BootstrapConfig,
    bins: int = DEFAULT_LFDR_BINS,
    lambda_grid: np.ndarray | None = None,
) -> UncertaintyReport:
    """Full pipeline for one image: observed map, null ensemble, z / p / LFDR / pi0.

    Deterministic given (image, source, config); raises DegenerateNullError
    when the null attention is constant.
    """
    observed = attention_for(image, source)
    null_images = generate_ensemble(image, config)
    null_maps = null_attention_maps(null_images, source)
    ensemble = NullEnsemble.from_maps(null_maps)
    if ensemble.size_per_replicate != observed.scores.size:
        raise InputError("null maps and observed map disagree in size")
    mu, sigma = null_moments(ensemble)
    z_obs = z_stats(observed.scores, mu, sigma)
    z_null = z_stats(ensemble.scores, mu, sigma)
    p = p_values(z_obs, z_null)
    l = lfdr(z_obs, z_null, bins=bins)
    pi0 = estimate_pi0(p, lambda_grid)
    return UncertaintyReport(
        attention=observed.scores,
        z=z_obs,
        z_null=z_null,
        p=p,
        local_fdr=l,
        pi0=pi0,
        mu_hat=mu,
        sigma_hat=sigma,
    )
