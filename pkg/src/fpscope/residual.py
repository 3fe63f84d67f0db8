"""Noise residuals: image minus a denoised copy of itself.

The default denoiser is a gaussian of std 1 pixel. Any program that reads a
16-bit binary PGM on stdin and writes a PGM of the same geometry on stdout can
be plugged in as an ``external`` denoiser.
"""

import math
import shlex
import subprocess
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy import ndimage

from .errors import ContractError, GeometryError
from .imgio import parse_pnm, write_pnm

__all__ = ["DenoiserSpec", "Residual", "gaussian_kernel", "gaussian_blur", "denoise",
           "extract_residual", "DEFAULT_DENOISER"]

KINDS = ("gaussian", "median", "bilateral-lite", "external")


@dataclass(frozen=True)
class DenoiserSpec:
    kind: str = "gaussian"
    strength: float = 1.0
    window: int = 3
    range_sigma: float = 0.1  # bilateral-lite only, in [0, 1] intensity units
    command: Optional[str] = None  # external only

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractError(f"unknown denoiser kind {self.kind!r}; expected one of {KINDS}")
        if not self.strength > 0:
            raise ContractError(f"denoiser strength must be > 0, got {self.strength}")
        if self.window < 3 or self.window % 2 == 0:
            raise ContractError(f"denoiser window must be odd and >= 3, got {self.window}")
        if not self.range_sigma > 0:
            raise ContractError(f"range_sigma must be > 0, got {self.range_sigma}")
        if self.kind == "external" and not self.command:
            raise ContractError("external denoiser needs a command")

    def as_dict(self):
        d = {"kind": self.kind, "strength": self.strength, "window": self.window}
        if self.kind == "bilateral-lite":
            d["range_sigma"] = self.range_sigma
        if self.kind == "external":
            d["command"] = self.command
        return d


DEFAULT_DENOISER = DenoiserSpec()


class Residual(NamedTuple):
    values: np.ndarray
    denoised: np.ndarray
    mean: float


def gaussian_kernel(sigma):
    """Normalized 1-D sampled gaussian with radius ``ceil(3 * sigma)``."""
    radius = int(math.ceil(3.0 * sigma))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (t / sigma) ** 2)
    return k / k.sum()


def _correlate_axis(x, taps, axis):
    radius = len(taps) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius, radius)
    padded = np.pad(x, pad, mode="reflect")
    n = x.shape[axis]
    out = np.zeros_like(x)
    for i, w in enumerate(taps):
        sl = [slice(None), slice(None)]
        sl[axis] = slice(i, i + n)
        out += w * padded[tuple(sl)]
    return out


def gaussian_blur(img, sigma):
    """Separable gaussian filter with mirror (edge-excluded) padding."""
    x = np.asarray(img, dtype=np.float64)
    if x.ndim != 2:
        raise GeometryError(f"expected a 2-D image, got shape {x.shape}")
    taps = gaussian_kernel(sigma)
    return _correlate_axis(_correlate_axis(x, taps, 0), taps, 1)


def _bilateral(x, spec):
    r = spec.window // 2
    padded = np.pad(x, r, mode="reflect")
    H, W = x.shape
    num = np.zeros_like(x)
    den = np.zeros_like(x)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            nb = padded[r + dy:r + dy + H, r + dx:r + dx + W]
            w = math.exp(-0.5 * (dy * dy + dx * dx) / spec.strength ** 2)
            w = w * np.exp(-0.5 * ((nb - x) / spec.range_sigma) ** 2)
            num += w * nb
            den += w
    return num / den


def _external(x, command):
    argv = shlex.split(command)
    proc = subprocess.run(argv, input=write_pnm(x, 65535), capture_output=True, check=False)
    if proc.returncode != 0:
        raise ContractError(
            f"external denoiser {argv[0]!r} exited with {proc.returncode}: "
            f"{proc.stderr.decode(errors='replace').strip()}")
    out = parse_pnm(proc.stdout)
    if out.shape != x.shape:
        raise GeometryError(f"external denoiser returned shape {out.shape}, expected {x.shape}")
    return out


def denoise(img, spec=DEFAULT_DENOISER):
    """Apply the denoiser described by ``spec``; output has the input's shape."""
    x = np.asarray(img, dtype=np.float64)
    if x.ndim != 2:
        raise GeometryError(f"expected a 2-D image, got shape {x.shape}")
    if spec.kind == "gaussian":
        return gaussian_blur(x, spec.strength)
    if spec.kind == "median":
        return ndimage.median_filter(x, size=spec.window, mode="mirror")
    if spec.kind == "bilateral-lite":
        return _bilateral(x, spec)
    return _external(x, spec.command)


def extract_residual(img, spec=DEFAULT_DENOISER):
    """``r = x - denoise(x)``, returned with the denoised image and ``mean(r)``."""
    x = np.asarray(img, dtype=np.float64)
    d = denoise(x, spec)
    r = x - d
    return Residual(r, d, float(r.mean()))
