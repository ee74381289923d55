"""Hot counting and binning kernels with numba and pure-numpy implementations.

The numba path and the numpy path return bit-identical integer results, so
the active backend never changes pipeline output.  Selection is controlled
by the ``ATTNBOOT_BACKEND`` environment variable, read at import time:

    auto   (default) use numba when importable, else numpy
    numba  require the jit path, fail if numba is missing
    numpy  force the pure-numpy fallback

``benchmarks/bench_kernels.py`` compares the two paths.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_VAR = "ATTNBOOT_BACKEND"


def _resolve_backend() -> str:
    choice = os.environ.get(_ENV_VAR, "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"{_ENV_VAR} must be auto, numba, or numpy (got {choice!r})")
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise
        return "numpy"
    return "numba"


BACKEND = _resolve_backend()


# ---------------------------------------------------------------------------
# numpy reference implementations
# ---------------------------------------------------------------------------

def count_greater_np(sorted_ref: np.ndarray, values: np.ndarray) -> np.ndarray:
    """For each value, count reference entries strictly greater than it.

    ``sorted_ref`` must be sorted ascending.
    """
    pos = np.searchsorted(sorted_ref, values, side="right")
    return (sorted_ref.size - pos).astype(np.int64)


def count_less_np(sorted_ref: np.ndarray, values: np.ndarray) -> np.ndarray:
    """For each value, count reference entries strictly less than it."""
    return np.searchsorted(sorted_ref, values, side="left").astype(np.int64)


def bin_indices_np(values: np.ndarray, lo: float, width: float, nbins: int) -> np.ndarray:
    """Equal-width bin index per value; values at/above the top edge land in the last bin."""
    idx = np.floor((values - lo) / width).astype(np.int64)
    return np.clip(idx, 0, nbins - 1)


def bin_counts_np(indices: np.ndarray, nbins: int) -> np.ndarray:
    return np.bincount(indices, minlength=nbins).astype(np.int64)


# ---------------------------------------------------------------------------
# numba implementations (same contracts, loop-based)
# ---------------------------------------------------------------------------

if BACKEND == "numba":
    from numba import njit

    @njit(cache=True)
    def _count_greater_nb(sorted_ref, values):  # pragma: no cover - jit body
        n = sorted_ref.size
        out = np.empty(values.size, dtype=np.int64)
        for i in range(values.size):
            v = values[i]
            lo, hi = 0, n
            while lo < hi:  # bisect right
                mid = (lo + hi) // 2
                if sorted_ref[mid] <= v:
                    lo = mid + 1
                else:
                    hi = mid
            out[i] = n - lo
        return out

    @njit(cache=True)
    def _count_less_nb(sorted_ref, values):  # pragma: no cover - jit body
        n = sorted_ref.size
        out = np.empty(values.size, dtype=np.int64)
        for i in range(values.size):
            v = values[i]
            lo, hi = 0, n
            while lo < hi:  # bisect left
                mid = (lo + hi) // 2
                if sorted_ref[mid] < v:
                    lo = mid + 1
                else:
                    hi = mid
            out[i] = lo
        return out

    @njit(cache=True)
    def _bin_indices_nb(values, lo, width, nbins):  # pragma: no cover - jit body
        out = np.empty(values.size, dtype=np.int64)
        for i in range(values.size):
            k = int(np.floor((values[i] - lo) / width))
            if k < 0:
                k = 0
            elif k > nbins - 1:
                k = nbins - 1
            out[i] = k
        return out

    @njit(cache=True)
    def _bin_counts_nb(indices, nbins):  # pragma: no cover - jit body
        out = np.zeros(nbins, dtype=np.int64)
        for i in range(indices.size):
            out[indices[i]] += 1
        return out

    def count_greater(sorted_ref, values):
        return _count_greater_nb(
            np.ascontiguousarray(sorted_ref, dtype=np.float64),
            np.ascontiguousarray(values, dtype=np.float64),
        )

    def count_less(sorted_ref, values):
        return _count_less_nb(
            np.ascontiguousarray(sorted_ref, dtype=np.float64),
            np.ascontiguousarray(values, dtype=np.float64),
        )

    def bin_indices(values, lo, width, nbins):
        return _bin_indices_nb(
            np.ascontiguousarray(values, dtype=np.float64), float(lo), float(width), int(nbins)
        )

    def bin_counts(indices, nbins):
        return _bin_counts_nb(np.ascontiguousarray(indices, dtype=np.int64), int(nbins))

else:
    count_greater = count_greater_np
    count_less = count_less_np
    bin_indices = bin_indices_np
    bin_counts = bin_counts_np


def warmup() -> None:
    """Trigger jit compilation (no-op on the numpy backend)."""
    ref = np.array([0.0, 1.0, 2.0])
    vals = np.array([0.5, 1.5])
    count_greater(ref, vals)
    count_less(ref, vals)
    bin_counts(bin_indices(vals, 0.0, 0.5, 4), 4)
