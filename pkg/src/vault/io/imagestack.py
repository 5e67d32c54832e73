"""Grayscale image-stack loading with optional block-mean down-sampling.

A stack is an ordered list of equally sized grayscale frames; each frame
becomes one dimension, each pixel one item. Items are ordered row-major
with the origin at the top-left and y increasing downward. Down-sampling
by factor ``f`` mean-pools ``f x f`` blocks with truncating division of
the extents (trailing rows/columns that do not fill a block are dropped).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from vault.errors import FormatError, ValidationError

STACK_EXTENSIONS = (".png", ".jpg", ".jpeg", ".tif", ".tiff")
_GRAYSCALE_MODES = {"L", "I", "I;16", "I;16B", "I;16L", "I;16N"}


@dataclass
class ImageStackOptions:
    file_paths: list = field(default_factory=list)
    subsample_factor: int = 1
    dim_names: list | None = None

    def __post_init__(self):
        self.file_paths = [Path(p) for p in self.file_paths]
        if not self.file_paths:
            raise ValidationError("image stack needs at least one file")
        if self.subsample_factor < 1:
            raise ValidationError(f"subsample factor must be >= 1, got {self.subsample_factor}")
        if self.dim_names is not None and len(self.dim_names) != len(self.file_paths):
            raise ValidationError(
                f"{len(self.dim_names)} dim names for {len(self.file_paths)} files")


def detect_stack(folder) -> list:
    """Image files in a folder, lexicographic filename order."""
    folder = Path(folder)
    if not folder.is_dir():
        raise ValidationError(f"not a folder: {folder}")
    return sorted(p for p in folder.iterdir()
                  if p.suffix.lower() in STACK_EXTENSIONS and p.is_file())


def _load_frame(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        if img.mode not in _GRAYSCALE_MODES:
            raise FormatError(
                f"{path.name}: unsupported pixel format {img.mode!r} "
                f"(grayscale 8/16-bit expected)")
        return np.asarray(img, dtype=np.float32)


def _pool(frame: np.ndarray, factor: int) -> np.ndarray:
    if factor == 1:
        return frame
    h, w = frame.shape
    ph, pw = h // factor, w // factor
    if ph < 1 or pw < 1:
        raise ValidationError(
            f"subsample factor {factor} leaves no pixels of a {w}x{h} frame")
    trimmed = frame[:ph * factor, :pw * factor]
    return trimmed.reshape(ph, factor, pw, factor).mean(axis=(1, 3))


def load_image_stack_values(opts: ImageStackOptions):
    """Load a stack into (values (pixels x frames), width, height, dim names)."""
    frames = []
    shape = None
    for path in opts.file_paths:
        frame = _load_frame(path)
        if shape is None:
            shape = frame.shape
        elif frame.shape != shape:
            raise FormatError(
                f"{path.name}: size {frame.shape[1]}x{frame.shape[0]} does not match "
                f"first frame {shape[1]}x{shape[0]}")
        frames.append(_pool(frame, opts.subsample_factor))
    height, width = frames[0].shape
    values = np.stack([f.reshape(-1) for f in frames], axis=1).astype(np.float32)
    names = (list(opts.dim_names) if opts.dim_names
             else [p.stem for p in opts.file_paths])
    return values, width, height, names
