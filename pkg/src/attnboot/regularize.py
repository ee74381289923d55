"""Shrinkage rules for attention maps.

All rules are zero-masks: a score either survives unchanged or is set to
zero, never rescaled.  The z-zeroing pre-step (drop scores at or below the
null mean) composes with each rule and is on by default.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from .errors import InputError
from .inference import UncertaintyReport

SHRINKAGE_METHODS = ("p_threshold", "l_threshold", "pi0_threshold")


@dataclass(frozen=True)
class ShrinkageSpec:
    """Which rule to apply; ``threshold`` is ignored for pi0_threshold."""

    method: str
    threshold: float = 0.5
    apply_z_zeroing: bool = True

    def __post_init__(self):
        if self.method not in SHRINKAGE_METHODS:
            raise InputError(f"method must be one of {SHRINKAGE_METHODS}, got {self.method!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise InputError("threshold must lie in [0, 1]")


def _check_shapes(a: np.ndarray, stat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    stat = np.asarray(stat, dtype=np.float64)
    if a.shape != stat.shape:
        raise InputError(f"map shape {a.shape} does not match statistic shape {stat.shape}")
    return a, stat


def z_zeroing(a: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Zero every score whose z-statistic is at or below zero (boundary included)."""
    a, z = _check_shapes(a, z)
    return np.where(z <= 0.0, 0.0, a)


def threshold_p(a: np.ndarray, p: np.ndarray, p_th: float) -> np.ndarray:
    """Zero scores whose p-value strictly exceeds the threshold (survive at equality)."""
    a, p = _check_shapes(a, p)
    return np.where(p > p_th, 0.0, a)


def threshold_l(a: np.ndarray, l: np.ndarray, l_th: float) -> np.ndarray:
    """Zero scores whose local FDR strictly exceeds the threshold."""
    a, l = _check_shapes(a, l)
    return np.where(l > l_th, 0.0, a)


def threshold_pi0(a: np.ndarray, p: np.ndarray, pi0: float) -> np.ndarray:
    """Zero the ceil(pi0 * m) pixels with the largest p-values.

    Ties in p are broken by smaller attention score first, then by pixel
    index, so the survivor set is platform-stable.
    """
    a, p = _check_shapes(a, p)
    if not 0.0 <= pi0 <= 1.0:
        raise InputError("pi0 must lie in [0, 1]")
    m = a.size
    k = min(m, int(ceil(pi0 * m)))
    if k == 0:
        return a.copy()
    flat_a = a.ravel()
    flat_p = p.ravel()
    # primary: p descending; secondary: attention ascending; tertiary: index
    order = np.lexsort((np.arange(m), flat_a, -flat_p))
    out = flat_a.copy()
    out[order[:k]] = 0.0
    return out.reshape(a.shape)


def apply_shrinkage(a: np.ndarray, report: UncertaintyReport, spec: ShrinkageSpec) -> np.ndarray:
    """Apply one rule (plus the optional z-zeroing pre-step) to a map."""
    a = np.asarray(a, dtype=np.float64)
    if spec.apply_z_zeroing:
        a = z_zeroing(a, report.z)
    if spec.method == "p_threshold":
        return threshold_p(a, report.p, spec.threshold)
    if spec.method == "l_threshold":
        return threshold_l(a, report.local_fdr, spec.threshold)
    return threshold_pi0(a, report.p, report.pi0)
