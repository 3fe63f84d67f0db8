"""Artifact findings from corpus summaries.

Two detectors:

* spectral peaks and an upsampling-factor estimate from the peak lattice at
  multiples of ``1/N`` in the averaged power spectrum;
* an 8-pixel grid score from the averaged autocorrelation (blockwise JPEG
  quantization leaves excess correlation at lags that are multiples of 8).

All thresholds are toolkit conventions calibrated on synthetic fixtures.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import dsp
from .errors import ContractError

logger = logging.getLogger(__name__)

__all__ = [
    "Peak", "PeakReport", "GridScore", "detect_peaks", "lattice_points", "lattice_scores",
    "infer_upsampling", "jpeg_grid_score", "DEFAULT_CANDIDATES", "DEFAULT_THRESHOLD",
    "DEFAULT_NEIGHBORHOOD", "DEFAULT_MIN_PROMINENCE", "GRID_LATTICE_LAGS", "GRID_CONTROL_LAGS",
]

DEFAULT_CANDIDATES = (2, 4, 8, 16)
DEFAULT_NEIGHBORHOOD = 5
DEFAULT_MIN_PROMINENCE = 10.0
DEFAULT_THRESHOLD = 3.0
BACKGROUND_HALF_WIDTH = 4

GRID_PERIOD = 8
GRID_LATTICE_LAGS = (8, 16, 24, 32)
GRID_CONTROL_LAGS = (11, 13, 19, 21, 27, 29, 35, 37)
GRID_MAX_LAG = 37


@dataclass(frozen=True)
class Peak:
    f_u: float  # horizontal frequency, cycles/pixel in [-0.5, 0.5)
    f_v: float  # vertical frequency
    prominence: float  # value / median of the neighborhood
    value: float


def _grid(summary_or_grid, attr):
    if hasattr(summary_or_grid, attr):
        return np.asarray(getattr(summary_or_grid, attr), dtype=np.float64)
    return np.asarray(summary_or_grid, dtype=np.float64)


def _neighbors(grid, half):
    """Stack of circularly shifted copies, center excluded: ``(k, M, N)``."""
    shifts = [(dy, dx) for dy in range(-half, half + 1) for dx in range(-half, half + 1)
              if (dy, dx) != (0, 0)]
    return np.stack([np.roll(grid, (-dy, -dx), axis=(0, 1)) for dy, dx in shifts])


def detect_peaks(summary, neighborhood=DEFAULT_NEIGHBORHOOD,
                 min_prominence=DEFAULT_MIN_PROMINENCE):
    """Strict local maxima of the averaged power spectrum.

    A bin is a peak when it exceeds every other bin in its
    ``neighborhood x neighborhood`` window (circular) and is at least
    ``min_prominence`` times the median of that window without the center.
    DC and its 8 neighbors are never reported. Sorted by prominence, largest
    first.
    """
    if neighborhood < 3 or neighborhood % 2 == 0:
        raise ContractError(f"neighborhood must be odd and >= 3, got {neighborhood}")
    S = _grid(summary, "avg_power")
    M, N = S.shape
    half = neighborhood // 2
    nb = _neighbors(S, half)
    med = np.median(nb, axis=0)
    is_max = S > nb.max(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        prom = np.where(med > 0, S / med, np.where(S > 0, np.inf, 0.0))
    mask = is_max & (prom >= min_prominence) & (S > 0)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            mask[dy % M, dx % N] = False
    fv, fu = dsp.frequency_grid((M, N))
    peaks = [Peak(float(fu[k, l]), float(fv[k, l]), float(prom[k, l]), float(S[k, l]))
             for k, l in zip(*np.nonzero(mask))]
    peaks.sort(key=lambda p: (-p.prominence, p.f_v, p.f_u))
    return peaks


def lattice_points(factor, candidates=DEFAULT_CANDIDATES):
    """Nonzero multiples ``(a/N, b/N)`` not on the lattice of a coarser candidate.

    Returned as ``(a, b)`` pairs in units of ``1/factor`` (a vertical, b horizontal).
    """
    coarser = [c for c in candidates if c < factor and factor % c == 0]
    pts = []
    for a in range(factor):
        for b in range(factor):
            if a == 0 and b == 0:
                continue
            if any((a * c) % factor == 0 and (b * c) % factor == 0 for c in coarser):
                continue
            pts.append((a, b))
    return pts


def _lattice_bin(a, factor, size):
    """Nearest bin to frequency ``a/factor`` and whether it is exact."""
    pos = a * size / factor
    return int(round(pos)) % size, (a * size) % factor == 0


def _occupied(shape, candidates):
    M, N = shape
    occ = np.zeros((M, N), dtype=bool)
    for c in candidates:
        for a in range(c):
            for b in range(c):
                k, _ = _lattice_bin(a, c, M)
                l, _ = _lattice_bin(b, c, N)
                occ[np.ix_((k + _CORE) % M, (l + _CORE) % N)] = True
    return occ


_CORE = np.array([-1, 0, 1])


def lattice_scores(summary, candidates=DEFAULT_CANDIDATES):
    """Lattice score per candidate factor.

    Each exclusive lattice point contributes the ratio of its spectrum value
    to the mean of its 9x9 surroundings, where bins within one bin of any
    candidate lattice point (DC included) are left out of the surroundings.
    The lattice value is the exact bin when the frequency falls on the grid,
    otherwise the largest bin within one bin of it. A candidate's score is the
    mean ratio over its exclusive points, so about 1 on a smooth spectrum.
    """
    S = _grid(summary, "avg_power")
    M, N = S.shape
    occupied = _occupied((M, N), candidates)
    fallback = float(S[~occupied].mean()) if (~occupied).any() else float(S.mean())
    win = np.arange(-BACKGROUND_HALF_WIDTH, BACKGROUND_HALF_WIDTH + 1)
    scores = {}
    for c in candidates:
        ratios = []
        for a, b in lattice_points(c, candidates):
            k, exact_k = _lattice_bin(a, c, M)
            l, exact_l = _lattice_bin(b, c, N)
            rows = (k + (np.array([0]) if exact_k else _CORE)) % M
            cols = (l + (np.array([0]) if exact_l else _CORE)) % N
            value = S[np.ix_(rows, cols)].max()
            wr, wc = (k + win) % M, (l + win) % N
            bg = S[np.ix_(wr, wc)][~occupied[np.ix_(wr, wc)]]
            ref = float(bg.mean()) if bg.size else fallback
            ratios.append(value / ref if ref > 0 else np.inf)
        scores[c] = float(np.mean(ratios)) if ratios else float("nan")
    return scores


@dataclass(frozen=True)
class PeakReport:
    peaks: list
    scores: dict
    inferred: Optional[int]
    threshold: float
    rule: str = "finest candidate whose exclusive-lattice score reaches the threshold"
    neighborhood: int = DEFAULT_NEIGHBORHOOD
    min_prominence: float = DEFAULT_MIN_PROMINENCE
    notes: list = field(default_factory=list)


def infer_upsampling(summary, candidates=DEFAULT_CANDIDATES, threshold=DEFAULT_THRESHOLD,
                     neighborhood=DEFAULT_NEIGHBORHOOD, min_prominence=DEFAULT_MIN_PROMINENCE):
    """Detect peaks and estimate the upsampling factor behind the peak lattice.

    A period-N pattern puts energy on every multiple of ``1/N``, including
    the coarser sub-lattices, but never on points exclusive to a finer factor.
    The estimate is therefore the finest candidate whose exclusive-lattice
    score reaches ``threshold``; ``None`` when no candidate does.
    """
    candidates = tuple(sorted(candidates))
    peaks = detect_peaks(summary, neighborhood, min_prominence)
    scores = lattice_scores(summary, candidates)
    active = [c for c in candidates if np.isfinite(scores[c]) and scores[c] >= threshold]
    inferred = max(active) if active else None
    return PeakReport(peaks, scores, inferred, threshold, neighborhood=neighborhood,
                      min_prominence=min_prominence)


@dataclass(frozen=True)
class GridScore:
    score: float
    horizontal: float
    vertical: float
    period: int = GRID_PERIOD


def _spike(profile, d):
    """Excess of lag ``d`` over the mean of its two neighbors (second difference)."""
    return profile[d] - 0.5 * (profile[d - 1] + profile[d + 1])


def _axis_score(profile):
    """``profile[d]`` is the normalized autocorrelation magnitude at lag ``d``.

    The smooth decay of the autocorrelation with lag is removed by comparing
    each lag with its immediate neighbors before contrasting lattice and
    control lags.
    """
    lattice = np.mean([_spike(profile, d) for d in GRID_LATTICE_LAGS])
    control = np.array([_spike(profile, d) for d in GRID_CONTROL_LAGS])
    spread = float(control.std(ddof=1))
    diff = float(lattice - control.mean())
    if spread == 0:
        return 0.0 if diff == 0 else float("inf") * np.sign(diff)
    return diff / spread


def jpeg_grid_score(summary):
    """8-pixel grid bias of the averaged autocorrelation.

    Per axis the profile ``p[d] = |R(d)| / R(0, 0)`` (mean of both signs of
    the lag) is turned into local excesses ``p[d] - (p[d-1] + p[d+1]) / 2``.
    The axis score is the mean excess at lags 8, 16, 24, 32 minus the mean at
    the control lags 11, 13, 19, ..., 37 (three lags either side of each
    lattice lag, beyond the reach of the denoiser footprint), in units of the
    control spread. The
    final score averages both axes and sits near 0 without a grid.
    """
    R = _grid(summary, "avg_autocorr")
    M, N = R.shape
    need = GRID_MAX_LAG + 2
    if M < 2 * need or N < 2 * need:
        raise ContractError(f"grid score needs lags up to {need - 1}; grid is {M}x{N}")
    r0 = R[0, 0]
    if r0 <= 0:
        return GridScore(0.0, 0.0, 0.0)
    lags = np.arange(need)
    horiz = 0.5 * (np.abs(R[0, lags]) + np.abs(R[0, (-lags) % N])) / r0
    vert = 0.5 * (np.abs(R[lags, 0]) + np.abs(R[(-lags) % M, 0])) / r0
    h = _axis_score(horiz)
    v = _axis_score(vert)
    return GridScore(0.5 * (h + v), h, v)
