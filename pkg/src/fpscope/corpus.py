"""Corpus iteration shared by the statistics and profile passes.

Images get fixed indices. Per-image work may run on a thread pool, but results
are always consumed in index order and summed along a binary tree whose shape
depends only on the image count, so outputs do not depend on the thread count.
"""

import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ContractError, CorpusError, FpscopeError
from .imgio import center_crop, read_image, to_luminance
from .residual import DEFAULT_DENOISER, DenoiserSpec

logger = logging.getLogger(__name__)

__all__ = ["CorpusSpec", "IMAGE_SUFFIXES", "list_images", "load_planes", "ordered_map",
           "tree_sum", "run_per_image"]

IMAGE_SUFFIXES = (".pgm", ".ppm", ".pnm")
COLOR_MODES = ("luminance", "per-channel")


@dataclass(frozen=True)
class CorpusSpec:
    """Where the images come from and how each one is standardized.

    ``sources`` holds file paths or in-memory arrays (already in [0, 1]).
    ``crop=None`` keeps the native geometry, which must then be uniform.
    """

    sources: tuple
    crop: Optional[int] = 256
    residual: Optional[DenoiserSpec] = DEFAULT_DENOISER
    max_images: int = 1000
    remove_mean: bool = True
    color_mode: str = "luminance"
    min_images: int = 1
    decoder: Optional[str] = None
    name: str = "corpus"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        if self.max_images < 1:
            raise ContractError(f"max_images must be >= 1, got {self.max_images}")
        if self.min_images < 1:
            raise ContractError(f"min_images must be >= 1, got {self.min_images}")
        if self.color_mode not in COLOR_MODES:
            raise ContractError(f"color_mode must be one of {COLOR_MODES}")
        if self.crop is not None and self.crop < 1:
            raise ContractError(f"crop must be >= 1, got {self.crop}")

    @property
    def selected(self):
        return self.sources[:self.max_images]

    def source_name(self, index):
        src = self.selected[index]
        if isinstance(src, (str, Path)):
            return Path(src).name
        return f"{self.name}[{index}]"

    def config(self):
        return {
            "name": self.name,
            "crop": self.crop,
            "residual": None if self.residual is None else self.residual.as_dict(),
            "max_images": self.max_images,
            "remove_mean": self.remove_mean,
            "color_mode": self.color_mode,
            "min_images": self.min_images,
        }


def list_images(directory):
    """Sorted PGM/PPM files in ``directory``."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ContractError(f"not a directory: {directory}")
    return sorted(p for p in directory.iterdir()
                  if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def load_planes(source, spec):
    """Load one source and return the list of 2-D planes to analyze."""
    if isinstance(source, (str, Path)):
        img = read_image(source, spec.decoder)
    else:
        img = np.asarray(source, dtype=np.float64)
    if img.ndim == 3 and spec.color_mode == "per-channel":
        planes = [img[..., c] for c in range(3)]
    else:
        planes = [to_luminance(img)]
    if spec.crop is not None:
        planes = [center_crop(p, spec.crop) for p in planes]
    return planes


def ordered_map(func, items, threads=1):
    """Like ``map`` but optionally threaded; results always come back in order."""
    if threads <= 1:
        for item in items:
            yield func(item)
        return
    window = 4 * threads
    with ThreadPoolExecutor(max_workers=threads) as pool:
        pending = deque()
        for item in items:
            pending.append(pool.submit(func, item))
            if len(pending) >= window:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()


def tree_sum(values):
    """Pairwise sum whose association order depends only on the number of terms.

    Works as a binary counter: equal-height partial sums are merged as soon as
    they appear, and leftovers are folded from the smallest upwards.
    """
    stack = []  # (height, partial)
    for v in values:
        height = 0
        while stack and stack[-1][0] == height:
            _, left = stack.pop()
            v = left + v
            height += 1
        stack.append((height, v))
    if not stack:
        raise ValueError("tree_sum of an empty sequence")
    _, total = stack.pop()
    while stack:
        _, left = stack.pop()
        total = left + total
    return total


def run_per_image(spec, func, threads=1):
    """Apply ``func(planes)`` to every source; yield ``(index, result)`` in order.

    Per-file failures are logged and collected in the returned list rather
    than aborting the run. The caller inspects it once iteration finishes.
    """
    errors = []

    def task(index):
        try:
            planes = load_planes(spec.selected[index], spec)
            return index, func(planes), None
        except (FpscopeError, OSError, ValueError) as exc:
            return index, None, f"{type(exc).__name__}: {exc}"

    def results():
        for index, value, err in ordered_map(task, range(len(spec.selected)), threads):
            if err is not None:
                name = spec.source_name(index)
                logger.warning("skipping %s: %s", name, err)
                errors.append({"source": name, "error": err})
                continue
            yield index, value

    return results(), errors


def check_usable(spec, used, errors):
    if used < spec.min_images:
        raise CorpusError(
            f"{spec.name}: {used} usable image(s), need at least {spec.min_images}", errors)
