"""Attention map production and post-processing.

Maps come either from a built-in deterministic toy model (patch-variance
softmax, so the suite runs with no pretrained network) or from external
patch-attention dumps produced by a transformer extractor.  Post-processing
is head averaging, nearest-neighbor upsampling to pixel resolution, and
min-max normalization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core_io import Image, PatchAttention, PixelAttentionMap, read_dump
from .errors import InputError

# Softmax temperature for the toy model: the mean patch variance, floored to
# keep the division defined on constant images.
TOY_TEMPERATURE_FLOOR = 1e-12


@dataclass(frozen=True)
class AttentionSource:
    """Where attention maps come from.

    ``toy``: the built-in patch-variance model at ``patch_size``.
    ``external``: read ``dump_path`` (role=patch_attention) for the observed
    image and ``null_dump_paths`` for the bootstrap replicates.
    """

    kind: str = "toy"
    patch_size: int = 8
    dump_path: str | Path | None = None
    null_dump_paths: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in ("toy", "external"):
            raise InputError(f"attention source kind must be toy or external, got {self.kind!r}")
        if self.patch_size < 1:
            raise InputError("patch size must be >= 1")
        if self.kind == "external" and self.dump_path is None:
            raise InputError("external attention source requires a dump path")


def toy_attention(image: Image, patch_size: int) -> PatchAttention:
    """Single-head attention over patches: softmax of patch grayscale variance.

    Per-patch score is the population variance of (r+g+b)/3 inside the patch;
    weights are softmax(score / tau) with tau = max(mean score, floor).  The
    model is intentionally texture-sensitive so injected i.i.d. noise draws
    nonzero attention.
    """
    h, w = image.height, image.width
    if h % patch_size or w % patch_size:
        raise InputError(
            f"patch size {patch_size} does not tile image dimensions {h}x{w}"
        )
    gh, gw = h // patch_size, w // patch_size
    gray = image.data.mean(axis=2)
    patches = gray.reshape(gh, patch_size, gw, patch_size)
    variances = patches.var(axis=(1, 3))  # population variance per patch
    tau = max(variances.mean(), TOY_TEMPERATURE_FLOOR)
    logits = variances / tau
    logits -= logits.max()
    expv = np.exp(logits)
    weights = expv / expv.sum()
    return PatchAttention(weights[None, :, :])


def postprocess(pa: PatchAttention, target_h: int, target_w: int) -> PixelAttentionMap:
    """Head-average, nearest-neighbor upsample to pixels, min-max normalize.

    A constant map normalizes to all zeros (degenerate min-max), which makes
    every downstream threshold a no-op on it.
    """
    if target_h % pa.grid_h or target_w % pa.grid_w:
        raise InputError(
            f"target {target_h}x{target_w} is not a multiple of grid {pa.grid_h}x{pa.grid_w}"
        )
    ps_h = target_h // pa.grid_h
    ps_w = target_w // pa.grid_w
    if ps_h != ps_w:
        raise InputError(
            f"implied patch size differs by axis ({ps_h} vs {ps_w}); patches must be square"
        )
    mean_map = pa.weights.mean(axis=0)
    up = np.repeat(np.repeat(mean_map, ps_h, axis=0), ps_w, axis=1)
    lo, hi = up.min(), up.max()
    if hi > lo:
        up = (up - lo) / (hi - lo)
    else:
        up = np.zeros_like(up)
    return PixelAttentionMap(up)


def _patch_attention_from_dump(path: str | Path, image: Image, patch_size: int) -> PatchAttention:
    arr, manifest = read_dump(path, expect_role="patch_attention")
    if arr.ndim != 3:
        raise InputError(f"patch attention dump must be 3-D (heads, gh, gw), got {arr.shape}")
    pa = PatchAttention(arr.astype(np.float64))
    ps = int(manifest.get("patch_size", patch_size))
    if pa.grid_h * ps != image.height or pa.grid_w * ps != image.width:
        raise InputError(
            f"dump grid {pa.grid_h}x{pa.grid_w} at patch {ps} does not tile "
            f"image {image.height}x{image.width}"
        )
    return pa


def attention_for(image: Image, source: AttentionSource) -> PixelAttentionMap:
    """Observed pixel attention map for one image, per the configured source."""
    if source.kind == "toy":
        pa = toy_attention(image, source.patch_size)
    else:
        pa = _patch_attention_from_dump(source.dump_path, image, source.patch_size)
    return postprocess(pa, image.height, image.width)


def null_attention_maps(null_images: list[Image], source: AttentionSource) -> list[PixelAttentionMap]:
    """Pixel attention maps for the bootstrap replicates.

    Toy sources run the model on each replicate; external sources require one
    pre-extracted dump per replicate.
    """
    if source.kind == "toy":
        return [attention_for(img, source) for img in null_images]
    if len(source.null_dump_paths) != len(null_images):
        raise InputError(
            f"external source has {len(source.null_dump_paths)} null dumps "
            f"for {len(null_images)} replicates"
        )
    maps = []
    for img, path in zip(null_images, source.null_dump_paths):
        pa = _patch_attention_from_dump(path, img, source.patch_size)
        maps.append(postprocess(pa, img.height, img.width))
    return maps
