"""One-pass corpus analysis: summary grids, profiles and detector findings.

Every image is loaded once; its residual grids and its profile vector are
computed together, then reduced in index order (see :mod:`fpscope.corpus`).
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import detect, profiles, stats
from .corpus import check_usable, run_per_image, tree_sum
from .errors import ContractError, FpscopeError, GeometryError
from .residual import extract_residual

logger = logging.getLogger(__name__)

__all__ = ["Analysis", "analyze", "compare", "PROFILE_SOURCES"]

PROFILE_SOURCES = ("raw", "residual")


@dataclass
class Analysis:
    summary: stats.SpectralSummary
    profiles: profiles.CorpusProfiles
    peaks: detect.PeakReport
    grid: Optional[detect.GridScore]
    fit: Optional[profiles.PowerLawFit]
    errors: list
    timing: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)


def _per_image(spec, profile_source):
    def work(planes):
        power, autocorr = stats.image_grids(planes, spec.residual, spec.remove_mean)
        if profile_source == "residual":
            planes = [extract_residual(p, spec.residual).values for p in planes]
        return stats.Partial(power, autocorr, 1), profiles.image_profiles(planes)
    return work


def _reduce(spec, items, errors):
    shape = None
    partials, rows = [], []
    for index, (partial, vec) in items:
        shp = partial.power_sum.shape
        if shape is None:
            shape = shp
        elif shp != shape:
            name = spec.source_name(index)
            msg = f"GeometryError: shape {shp} differs from {shape}"
            logger.warning("skipping %s: %s", name, msg)
            errors.append({"source": name, "error": msg})
            continue
        partials.append(partial)
        rows.append(vec)
    check_usable(spec, len(partials), errors)
    return tree_sum(partials), np.array(rows), shape


def analyze(spec, threads=1, profile_source="raw", candidates=detect.DEFAULT_CANDIDATES,
            threshold=detect.DEFAULT_THRESHOLD, neighborhood=detect.DEFAULT_NEIGHBORHOOD,
            min_prominence=detect.DEFAULT_MIN_PROMINENCE):
    """Run the full analysis of one corpus. Raises ``CorpusError`` when unusable."""
    if profile_source not in PROFILE_SOURCES:
        raise ContractError(f"profile source must be one of {PROFILE_SOURCES}")
    if profile_source == "residual" and spec.residual is None:
        raise ContractError("residual profiles need a denoiser")
    timing = {}
    t0 = time.perf_counter()
    items, errors = run_per_image(spec, _per_image(spec, profile_source), threads)
    total, rows, shape = _reduce(spec, items, errors)
    timing["corpus_pass"] = time.perf_counter() - t0

    t1 = time.perf_counter()
    summary = total.finalize(spec.config(), errors)
    prof = profiles.split_profiles(rows, shape, spec.name, errors)
    notes = []
    peaks = detect.infer_upsampling(summary, candidates, threshold, neighborhood, min_prominence)
    try:
        grid = detect.jpeg_grid_score(summary)
    except ContractError as exc:
        grid = None
        notes.append(f"grid score unavailable: {exc}")
    try:
        fit = profiles.fit_power_law(prof.radial_power)
    except FpscopeError as exc:
        fit = None
        notes.append(f"power-law fit unavailable: {exc}")
    if summary.image_count < 2:
        notes.append("fewer than 2 images: per-bin variances undefined")
    timing["detectors"] = time.perf_counter() - t1
    return Analysis(summary, prof, peaks, grid, fit, errors, timing, notes)


def compare(subject, reference):
    """Fisher profile of the subject's angular profile against the reference's.

    Both analyses must share one geometry. Returns ``None`` when either side
    has fewer than 2 images (variances undefined).
    """
    if subject.summary.shape != reference.summary.shape:
        raise GeometryError(
            f"subject grid {subject.summary.shape} differs from reference {reference.summary.shape}")
    if subject.profiles.angular.count < 2 or reference.profiles.angular.count < 2:
        return None
    return profiles.fisher_profile(subject.profiles.angular, reference.profiles.angular)
