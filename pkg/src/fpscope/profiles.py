"""Radial and angular spectral densities, Fisher discriminant profile, power-law fit.

Each image is divided by its own standard deviation before the transform, so
profiles are invariant to contrast. The spectrum is scaled by ``1/sqrt(M*N)``
(orthonormal), which makes unit-variance white noise have unit mean power in
every bin regardless of image size.

Binning uses nearest-center assignment:

* radial: 128 centers ``rho_j = (j + 1) / 256``; a frequency pair belongs to
  bin ``j`` when ``|rho - rho_j| <= 1/512``. DC and the corners beyond
  ``0.5 + 1/512`` fall in no bin.
* angular: 16 centers ``theta_j = j * pi / 16`` on the folded orientation
  ``atan2(f_v, f_u) mod pi`` (a double cone), with wrap-around so orientations
  near ``pi`` join bin 0. Only pairs with ``0.1 < rho`` that also lie in the
  radial domain are used.
"""

import functools
import logging
from dataclasses import dataclass, field

import numpy as np

from . import dsp
from .corpus import check_usable, run_per_image
from .errors import ContractError, DegenerateInputError, DomainError
from .residual import extract_residual

logger = logging.getLogger(__name__)

__all__ = [
    "RADIAL_BINS", "ANGULAR_BINS", "HIGHPASS_CUTOFF", "RadialProfile", "AngularProfile",
    "FisherProfile", "PowerLawFit", "radial_centers", "angular_centers", "radial_bins",
    "angular_bins", "standardized_spectrum", "radial_profile", "angular_profile",
    "image_profiles", "corpus_profiles", "corpus_radial", "corpus_angular",
    "profile_from_samples", "split_profiles", "fisher_profile", "fit_power_law",
]

RADIAL_BINS = 128
ANGULAR_BINS = 16
RHO_MAX = 0.5
HIGHPASS_CUTOFF = 0.1
RADIAL_STEP = RHO_MAX / RADIAL_BINS
ANGULAR_STEP = np.pi / ANGULAR_BINS
MODES = ("magnitude", "power")


def radial_centers():
    return RADIAL_STEP * np.arange(1, RADIAL_BINS + 1)


def angular_centers():
    return ANGULAR_STEP * np.arange(ANGULAR_BINS)


@functools.lru_cache(maxsize=16)
def radial_bins(shape):
    """Flat bin index per frequency pair (-1 = unassigned) and bin populations."""
    fv, fu = dsp.frequency_grid(shape)
    rho = np.hypot(fv, fu)
    idx = np.floor(rho / RADIAL_STEP + 0.5).astype(np.int64) - 1
    idx[(idx < 0) | (idx >= RADIAL_BINS)] = -1
    idx[0, 0] = -1
    idx = idx.ravel()
    idx.flags.writeable = False
    pop = np.bincount(idx[idx >= 0], minlength=RADIAL_BINS)
    pop.flags.writeable = False
    return idx, pop


@functools.lru_cache(maxsize=16)
def angular_bins(shape):
    """Like :func:`radial_bins` for the 16 double-cone orientation bins."""
    fv, fu = dsp.frequency_grid(shape)
    rho = np.hypot(fv, fu)
    theta = np.mod(np.arctan2(fv, fu), np.pi)
    idx = np.mod(np.floor(theta / ANGULAR_STEP + 0.5).astype(np.int64), ANGULAR_BINS)
    radial_idx, _ = radial_bins(shape)
    keep = (rho.ravel() > HIGHPASS_CUTOFF) & (radial_idx >= 0)
    idx = np.where(keep, idx.ravel(), -1)
    idx.flags.writeable = False
    pop = np.bincount(idx[idx >= 0], minlength=ANGULAR_BINS)
    pop.flags.writeable = False
    return idx, pop


def standardized_spectrum(img):
    """Orthonormal DFT of ``img / std(img)``."""
    x = np.asarray(img, dtype=np.float64)
    std = x.std()
    if not std > 0:
        raise DegenerateInputError("image has zero variance")
    X = dsp.dft2(x / std)
    return X / np.sqrt(x.size)


def _bin_mean(values, idx, pop):
    flat = values.ravel()
    sel = idx >= 0
    sums = np.bincount(idx[sel], weights=flat[sel], minlength=len(pop))
    out = np.full(len(pop), np.nan)
    nz = pop > 0
    out[nz] = sums[nz] / pop[nz]
    return out


def _mode_values(X, mode):
    if mode not in MODES:
        raise ContractError(f"mode must be one of {MODES}, got {mode!r}")
    power = X.real ** 2 + X.imag ** 2
    return power if mode == "power" else np.sqrt(power)


def radial_profile(img, mode="magnitude"):
    """128-bin radial density; empty bins are NaN."""
    X = standardized_spectrum(img)
    idx, pop = radial_bins(X.shape)
    return _bin_mean(_mode_values(X, mode), idx, pop)


def angular_profile(img, mode="magnitude"):
    """16-bin double-cone orientation density of the high-passed spectrum."""
    X = standardized_spectrum(img)
    idx, pop = angular_bins(X.shape)
    return _bin_mean(_mode_values(X, mode), idx, pop)


def image_profiles(planes):
    """Radial (magnitude, power) and angular profiles of one image, plane-averaged."""
    acc = None
    for plane in planes:
        X = standardized_spectrum(plane)
        mag = np.abs(X)
        ridx, rpop = radial_bins(X.shape)
        aidx, apop = angular_bins(X.shape)
        cur = np.concatenate([
            _bin_mean(mag, ridx, rpop),
            _bin_mean(mag * mag, ridx, rpop),
            _bin_mean(mag, aidx, apop),
        ])
        acc = cur if acc is None else acc + cur
    return acc / len(planes)


@dataclass(frozen=True)
class _Profile:
    centers: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    population: np.ndarray
    count: int
    mode: str = "magnitude"
    source: str = ""

    def rows(self):
        for c, m, v, p in zip(self.centers, self.mean, self.var, self.population):
            yield float(c), float(m), float(v), int(p)


@dataclass(frozen=True)
class RadialProfile(_Profile):
    pass


@dataclass(frozen=True)
class AngularProfile(_Profile):
    cutoff: float = HIGHPASS_CUTOFF


def profile_from_samples(samples, cls, centers, population, mode="magnitude", source="", **kw):
    """Per-bin mean and unbiased variance over stacked per-image profiles."""
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    count = samples.shape[0]
    with np.errstate(invalid="ignore"):
        mean = samples.mean(axis=0)
        var = samples.var(axis=0, ddof=1) if count > 1 else np.full(samples.shape[1], np.nan)
    return cls(np.asarray(centers), mean, var, np.asarray(population), count, mode, source, **kw)


@dataclass(frozen=True)
class CorpusProfiles:
    radial: RadialProfile
    radial_power: RadialProfile
    angular: AngularProfile
    errors: tuple = field(default=())


def corpus_profiles(spec, threads=1, source="raw"):
    """Per-bin corpus moments of radial (both modes) and angular profiles.

    ``source="residual"`` profiles the noise residual instead of the image.
    """
    if source not in ("raw", "residual"):
        raise ContractError(f"profile source must be 'raw' or 'residual', got {source!r}")
    denoiser = spec.residual if source == "residual" else None
    if source == "residual" and denoiser is None:
        raise ContractError("residual profiles need a denoiser")

    def per_image(planes):
        if denoiser is not None:
            planes = [extract_residual(p, denoiser).values for p in planes]
        return planes[0].shape, image_profiles(planes)

    items, errors = run_per_image(spec, per_image, threads)
    shape = None
    rows = []
    for index, (shp, vec) in items:
        if shape is None:
            shape = shp
        elif shp != shape:
            errors.append({"source": spec.source_name(index),
                           "error": f"GeometryError: shape {shp} differs from {shape}"})
            continue
        rows.append(vec)
    check_usable(spec, len(rows), errors)
    return split_profiles(np.array(rows), shape, spec.name, errors)


def split_profiles(samples, shape, name, errors=()):
    _, rpop = radial_bins(shape)
    _, apop = angular_bins(shape)
    r = RADIAL_BINS
    return CorpusProfiles(
        profile_from_samples(samples[:, :r], RadialProfile, radial_centers(), rpop,
                             "magnitude", name),
        profile_from_samples(samples[:, r:2 * r], RadialProfile, radial_centers(), rpop,
                             "power", name),
        profile_from_samples(samples[:, 2 * r:], AngularProfile, angular_centers(), apop,
                             "magnitude", name),
        tuple(errors),
    )


def corpus_radial(spec, mode="magnitude", threads=1, source="raw"):
    """Radial profile moments over a corpus."""
    prof = corpus_profiles(spec, threads, source)
    return prof.radial if mode == "magnitude" else prof.radial_power


def corpus_angular(spec, threads=1, source="raw"):
    return corpus_profiles(spec, threads, source).angular


@dataclass(frozen=True)
class FisherProfile:
    values: np.ndarray  # NaN where undefined
    defined: np.ndarray
    centers: np.ndarray
    subject: str = ""
    reference: str = ""


def fisher_profile(subject, reference):
    """Signed ratio ``(mu_s - mu_0) / sqrt(var_s + var_0)`` per orientation bin.

    Bins with zero (or undefined) combined variance are NaN and flagged in
    ``defined``.
    """
    if len(subject.mean) != len(reference.mean):
        raise ContractError("profiles have different bin structures")
    if subject.count < 2 or reference.count < 2:
        raise ContractError("Fisher profile needs at least 2 images per corpus")
    diff = subject.mean - reference.mean
    denom = np.sqrt(subject.var + reference.var)
    defined = np.isfinite(diff) & np.isfinite(denom) & (denom > 0)
    values = np.full(len(diff), np.nan)
    values[defined] = diff[defined] / denom[defined]
    return FisherProfile(values, defined, np.asarray(subject.centers),
                         subject.source, reference.source)


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    intercept: float
    rmse: float
    rho_min: float
    rho_max: float
    bins_used: int
    mode: str


def fit_power_law(profile, rho_min=0.2, rho_max=0.5):
    """Least-squares line through ``log mean`` vs ``log rho`` over ``[rho_min, rho_max]``.

    ``alpha`` is always the power-spectrum exponent: minus the slope in power
    mode, minus twice the slope in magnitude mode.
    """
    centers = np.asarray(profile.centers)
    mean = np.asarray(profile.mean)
    in_range = (centers >= rho_min - 1e-12) & (centers <= rho_max + 1e-12)
    usable = in_range & np.isfinite(mean)
    for j in np.flatnonzero(usable):
        if mean[j] <= 0:
            raise DomainError(f"bin {j} (rho={centers[j]:.6g}) has nonpositive mean {mean[j]!r}")
    if usable.sum() < 8:
        raise ContractError(f"need >= 8 non-empty bins in range, have {int(usable.sum())}")
    lx = np.log(centers[usable])
    ly = np.log(mean[usable])
    A = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    rmse = float(np.sqrt(np.mean(resid ** 2)))
    factor = 1.0 if profile.mode == "power" else 2.0
    alpha = -factor * float(slope)
    return PowerLawFit(alpha + 0.0, float(intercept), rmse, rho_min, rho_max,
                       int(usable.sum()), profile.mode)
