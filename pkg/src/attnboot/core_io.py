"""Domain containers, PNG decoding, and the manifest + raw-f32 tensor dump format.

The dump format is deliberately minimal so any language can produce or
consume it: a JSON manifest ``<name>.json`` describing shape/dtype/role and
a sibling ``<name>.f32`` holding the raw little-endian 32-bit floats in
row-major order.  Round-trips are bit-exact at 32-bit precision.
"""

from __future__ import annotations

import json
from pathlib import Path

import cv2
import numpy as np

from .errors import DumpError, InputError

DUMP_ROLES = ("image", "patch_attention", "pixel_attention", "mask", "scalar_series")


class Image:
    """H×W×3 pixel grid with every value in [0, 1].

    Grayscale sources are stored with the single channel replicated into all
    three channels.  The backing array is frozen after construction so
    instances can be shared freely across threads.
    """

    __slots__ = ("data",)

    def __init__(self, data: np.ndarray):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise InputError(f"image data must be (H, W, 3), got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InputError("image must have at least one pixel")
        if not np.isfinite(arr).all():
            raise InputError("image contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise InputError("image values must lie in [0, 1]")
        arr.setflags(write=False)
        self.data = arr

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


class PixelAttentionMap:
    """Nonnegative per-pixel attention scores, same spatial shape as the image."""

    __slots__ = ("scores",)

    def __init__(self, scores: np.ndarray):
        arr = np.array(scores, dtype=np.float64)
        if arr.ndim != 2:
            raise InputError(f"attention map must be 2-D, got shape {arr.shape}")
        if not np.isfinite(arr).all() or arr.min() < 0.0:
            raise InputError("attention scores must be finite and nonnegative")
        arr.setflags(write=False)
        self.scores = arr

    @property
    def height(self) -> int:
        return self.scores.shape[0]

    @property
    def width(self) -> int:
        return self.scores.shape[1]


class PatchAttention:
    """Per-head, per-patch attention weights on a grid_h × grid_w patch grid."""

    __slots__ = ("weights",)

    def __init__(self, weights: np.ndarray):
        arr = np.array(weights, dtype=np.float64)
        if arr.ndim != 3:
            raise InputError(f"patch attention must be (heads, grid_h, grid_w), got {arr.shape}")
        if not np.isfinite(arr).all() or arr.min() < 0.0:
            raise InputError("patch attention weights must be finite and nonnegative")
        arr.setflags(write=False)
        self.weights = arr

    @property
    def heads(self) -> int:
        return self.weights.shape[0]

    @property
    def grid_h(self) -> int:
        return self.weights.shape[1]

    @property
    def grid_w(self) -> int:
        return self.weights.shape[2]


def load_image(path: str | Path) -> Image:
    """Decode an 8- or 16-bit PNG (1 or 3 channels) to a unit-interval Image.

    Integer samples are mapped to [0, 1] by dividing by the sample-type
    maximum (255 or 65535); single-channel inputs are replicated to three
    channels.
    """
    path = Path(path)
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise InputError(f"cannot read image file: {path}")
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise InputError(f"unsupported sample type {raw.dtype} in {path}")
    if raw.ndim == 2:
        data = np.repeat(raw[:, :, None], 3, axis=2)
    elif raw.ndim == 3 and raw.shape[2] == 3:
        data = raw[:, :, ::-1]  # BGR -> RGB
    else:
        nchan = raw.shape[2] if raw.ndim == 3 else raw.ndim
        raise InputError(f"unsupported channel count {nchan} in {path}")
    return Image(data.astype(np.float64) / scale)


def write_image_png(image: Image, path: str | Path) -> None:
    """Write an Image as an 8-bit RGB PNG."""
    u8 = np.rint(image.data * 255.0).astype(np.uint8)
    if not cv2.imwrite(str(path), u8[:, :, ::-1]):
        raise OSError(f"failed to write PNG: {path}")


def write_heatmap_png(scores: np.ndarray, path: str | Path, colormap: bool = False) -> None:
    """Render a score map to PNG, re-normalized to [0, 255] for display only."""
    arr = np.asarray(scores, dtype=np.float64)
    span = arr.max() - arr.min()
    disp = (arr - arr.min()) / span if span > 0 else np.zeros_like(arr)
    u8 = np.rint(disp * 255.0).astype(np.uint8)
    if colormap:
        u8 = cv2.applyColorMap(u8, cv2.COLORMAP_VIRIDIS)
    if not cv2.imwrite(str(path), u8):
        raise OSError(f"failed to write PNG: {path}")


def _payload_path(manifest_path: Path) -> Path:
    return manifest_path.with_suffix(".f32")


def write_dump(
    tensor: np.ndarray,
    base_path: str | Path,
    role: str,
    model: dict | None = None,
    seed: int | None = None,
    extra: dict | None = None,
) -> Path:
    """Write ``<base>.json`` + ``<base>.f32`` for a tensor; returns the manifest path.

    The manifest records the row-major shape, the dtype tag ``f32``, the
    role, free-form model metadata, and an optional seed.  Extra keys (e.g.
    ``patch_size`` for patch attention) are merged in.
    """
    if role not in DUMP_ROLES:
        raise DumpError(f"unknown dump role {role!r}; expected one of {DUMP_ROLES}")
    arr = np.ascontiguousarray(tensor, dtype="<f4")
    base = Path(base_path)
    manifest_path = base.with_suffix(".json")
    manifest = {
        "shape": [int(s) for s in arr.shape],
        "dtype": "f32",
        "role": role,
        "model": model or {},
    }
    if seed is not None:
        manifest["seed"] = int(seed)
    if extra:
        manifest.update(extra)
    _payload_path(manifest_path).write_bytes(arr.tobytes())
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest_path


def read_dump(manifest_path: str | Path, expect_role: str | None = None):
    """Read a dump pair; returns ``(array, manifest)`` with the manifest shape.

    Raises DumpError on a missing payload, an element-count mismatch, or a
    role that differs from ``expect_role``.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise DumpError(f"missing manifest: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise DumpError(f"unparseable manifest {manifest_path}: {exc}") from exc
    if manifest.get("dtype") != "f32":
        raise DumpError(f"unsupported dtype tag {manifest.get('dtype')!r} in {manifest_path}")
    role = manifest.get("role")
    if role not in DUMP_ROLES:
        raise DumpError(f"unknown role {role!r} in {manifest_path}")
    if expect_role is not None and role != expect_role:
        raise DumpError(f"{manifest_path}: role is {role!r}, caller expected {expect_role!r}")
    shape = tuple(int(s) for s in manifest.get("shape", []))
    payload = _payload_path(manifest_path)
    if not payload.exists():
        raise DumpError(f"missing payload: {payload}")
    flat = np.frombuffer(payload.read_bytes(), dtype="<f4")
    expected = int(np.prod(shape)) if shape else 0
    if flat.size != expected:
        raise DumpError(
            f"{payload}: payload has {flat.size} elements, manifest shape {list(shape)} "
            f"implies {expected}"
        )
    return flat.reshape(shape), manifest
