"""Corpus-averaged power spectrum and autocorrelation.

Both averages are divided by the same constant, the mean bin value of the
averaged power spectrum (average power per pixel), so that the normalized
spectrum has unit mean and the two grids stay a transform pair.
"""

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dsp
from .corpus import CorpusSpec, check_usable, run_per_image, tree_sum
from .errors import ContractError, GeometryError
from .residual import DEFAULT_DENOISER, extract_residual

logger = logging.getLogger(__name__)

__all__ = ["Partial", "SpectralSummary", "image_grids", "corpus_summary", "summarize_arrays",
           "autocorr_crop", "save_summary", "load_summary", "write_grid_csv",
           "DEFAULT_CROP_LAGS"]

DEFAULT_CROP_LAGS = 65


@dataclass
class Partial:
    """Unnormalized sums over a subset of a corpus; ``a + b`` merges subsets."""

    power_sum: np.ndarray
    autocorr_sum: np.ndarray
    count: int

    def __add__(self, other):
        if self.power_sum.shape != other.power_sum.shape:
            raise GeometryError(
                f"cannot merge grids {self.power_sum.shape} and {other.power_sum.shape}")
        return Partial(self.power_sum + other.power_sum,
                       self.autocorr_sum + other.autocorr_sum,
                       self.count + other.count)

    @property
    def mean_power(self):
        return self.power_sum / self.count

    @property
    def mean_autocorr(self):
        return self.autocorr_sum / self.count

    def finalize(self, config=None, errors=()):
        power = self.mean_power
        autocorr = self.mean_autocorr
        norm = float(power.mean())
        if norm > 0:
            power = power / norm
            autocorr = autocorr / norm
        return SpectralSummary(power, autocorr, norm, self.count,
                               dict(config or {}), tuple(errors))


@dataclass(frozen=True)
class SpectralSummary:
    avg_power: np.ndarray
    avg_autocorr: np.ndarray
    norm_constant: float
    image_count: int
    config: dict = field(default_factory=dict)
    errors: tuple = ()

    @property
    def shape(self):
        return self.avg_power.shape


def image_grids(planes, residual=None, remove_mean=True):
    """Power spectrum and autocorrelation of one image (averaged over its planes)."""
    power = None
    for plane in planes:
        x = plane if residual is None else extract_residual(plane, residual).values
        if remove_mean:
            x = x - x.mean()
        p = dsp.power_spectrum(x)
        power = p if power is None else power + p
    if len(planes) > 1:
        power = power / len(planes)
    # Wiener-Khinchin: the autocorrelation is the inverse transform of the power.
    return power, dsp.autocorr_from_power(power)


def _uniform(items, errors, spec):
    shape = None
    for index, partial in items:
        if shape is None:
            shape = partial.power_sum.shape
        elif partial.power_sum.shape != shape:
            name = spec.source_name(index)
            msg = f"GeometryError: shape {partial.power_sum.shape} differs from {shape}"
            logger.warning("skipping %s: %s", name, msg)
            errors.append({"source": name, "error": msg})
            continue
        yield partial


def corpus_partial(spec, threads=1):
    """Unnormalized sums over the corpus plus the per-file error log."""
    def per_image(planes):
        p, r = image_grids(planes, spec.residual, spec.remove_mean)
        return Partial(p, r, 1)

    items, errors = run_per_image(spec, per_image, threads)
    try:
        total = tree_sum(_uniform(items, errors, spec))
    except ValueError:
        total = None
    check_usable(spec, 0 if total is None else total.count, errors)
    return total, errors


def corpus_summary(spec, threads=1):
    """Average power spectrum and autocorrelation of a corpus, normalized."""
    total, errors = corpus_partial(spec, threads)
    return total.finalize(spec.config(), errors)


def summarize_arrays(images, residual=DEFAULT_DENOISER, remove_mean=True, crop=None, threads=1,
                     **kw):
    """Convenience wrapper: summary of in-memory arrays (``residual=None`` for raw pixels)."""
    spec = CorpusSpec(tuple(images), crop=crop, residual=residual, remove_mean=remove_mean,
                      max_images=max(1, len(images)), **kw)
    return corpus_summary(spec, threads)


def autocorr_crop(summary, size=DEFAULT_CROP_LAGS):
    """Zero-lag-centered ``size x size`` window of the autocorrelation.

    Accepts a :class:`SpectralSummary` or a raw circular autocorrelation grid.
    """
    grid = summary.avg_autocorr if isinstance(summary, SpectralSummary) else np.asarray(summary)
    if size < 1 or size % 2 == 0:
        raise ContractError(f"crop size must be odd and >= 1, got {size}")
    M, N = grid.shape
    if size > M or size > N:
        raise ContractError(f"crop size {size} exceeds grid {M}x{N}")
    shifted = dsp.fftshift(grid)
    h = size // 2
    cm, cn = M // 2, N // 2
    return shifted[cm - h:cm + h + 1, cn - h:cn + h + 1]


def write_grid_csv(path, grid):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.asarray(grid):
            writer.writerow([repr(float(v)) for v in row])


def save_summary(summary, directory, prefix="summary", csv_export=True):
    """Write ``<prefix>.json`` plus little-endian float64 sidecar grids.

    Returns the JSON envelope written.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    M, N = summary.shape
    files = {}
    for key, grid in (("avg_power", summary.avg_power), ("avg_autocorr", summary.avg_autocorr)):
        name = f"{prefix}_{key}.f64"
        (directory / name).write_bytes(np.ascontiguousarray(grid, dtype="<f8").tobytes())
        files[key] = name
        if csv_export:
            write_grid_csv(directory / f"{prefix}_{key}.csv", grid)
    envelope = {
        "height": M,
        "width": N,
        "dtype": "float64-le",
        "layout": "row-major",
        "norm_constant": summary.norm_constant,
        "image_count": summary.image_count,
        "config": summary.config,
        "files": files,
    }
    text = json.dumps(envelope, indent=2, sort_keys=True) + "\n"
    (directory / f"{prefix}.json").write_text(text)
    return envelope


def load_summary(path):
    """Inverse of :func:`save_summary`; ``path`` is the JSON envelope."""
    path = Path(path)
    env = json.loads(path.read_text())
    shape = (env["height"], env["width"])
    grids = {}
    for key, name in env["files"].items():
        raw = (path.parent / name).read_bytes()
        grids[key] = np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)
    return SpectralSummary(grids["avg_power"], grids["avg_autocorr"], env["norm_constant"],
                           env["image_count"], env.get("config", {}))
