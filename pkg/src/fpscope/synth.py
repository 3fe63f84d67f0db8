"""Deterministic fixture corpora with known spectral structure.

A fixture image is a power-law random field, optionally carrying an additive
periodic tile shared by the whole corpus, followed by a chain of
post-processing operations (blur, sharpen, resize round trip, JPEG-like
quantization).
"""

import json
import logging
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, model_validator

from . import rng
from .dsp import frequency_grid
from .errors import GeometryError
from .imgio import save_pnm
from .residual import gaussian_blur

logger = logging.getLogger(__name__)

__all__ = [
    "Blur", "Sharpen", "Resize", "Jpeg", "PostOp", "Artifact", "FixtureSpec",
    "gen_powerlaw_field", "inject_periodic", "periodic_tile", "post_process",
    "sharpen", "resize_roundtrip", "jpeg_simulate", "jpeg_quant_table",
    "generate_image", "generate_corpus", "write_fixture", "ANNEX_K_LUMINANCE",
    "DEFAULT_RESIZE_SCALES", "DEFAULT_JPEG_QUALITIES",
]

DEFAULT_RESIZE_SCALES = (0.5, 0.8, 1.25)
DEFAULT_JPEG_QUALITIES = (95, 85, 75)

FIELD_MEAN = 0.5
FIELD_STD = 0.1

# ITU-T T.81 Annex K, Table K.1 (luminance), natural row-major order.
ANNEX_K_LUMINANCE = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.int64)


class Blur(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    kind: Literal["blur"] = "blur"
    sigma: float = Field(gt=0)


class Sharpen(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    kind: Literal["sharpen"] = "sharpen"
    amount: float = Field(gt=0)


class Resize(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    kind: Literal["resize"] = "resize"
    scale: float = Field(gt=0, le=4)


class Jpeg(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    kind: Literal["jpeg"] = "jpeg"
    quality: int = Field(ge=1, le=100)


PostOp = Annotated[Union[Blur, Sharpen, Resize, Jpeg], Field(discriminator="kind")]
_POSTOP_ADAPTER = TypeAdapter(PostOp)


class Artifact(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    period: int = Field(ge=1)
    amplitude: float = Field(ge=0)
    pattern_seed: int = Field(default=0, ge=0)


class FixtureSpec(BaseModel):
    """Declarative description of a synthetic corpus."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    size: int = Field(ge=32)
    count: int = Field(ge=1)
    alpha: float = Field(default=2.0, ge=0)
    artifact: Optional[Artifact] = None
    chain: List[PostOp] = Field(default_factory=list)
    seed: int = Field(default=0, ge=0)
    diagonal_attenuation: float = Field(default=0.0, ge=0, lt=1)
    maxval: int = Field(default=255, ge=1, le=65535)

    @model_validator(mode="after")
    def _period_divides_size(self):
        if self.artifact is not None and self.size % self.artifact.period != 0:
            raise ValueError(
                f"artifact.period {self.artifact.period} must divide size {self.size}")
        return self


def _diagonal_cone(shape):
    """Frequencies within pi/32 of the pi/4 or 3pi/4 orientation (DC excluded)."""
    fv, fu = frequency_grid(shape)
    theta = np.mod(np.arctan2(fv, fu), np.pi)
    near = np.minimum(np.abs(theta - np.pi / 4), np.abs(theta - 3 * np.pi / 4))
    return (near < np.pi / 32) & ((fv != 0) | (fu != 0))


def gen_powerlaw_field(size, alpha, seed, diagonal_attenuation=0.0):
    """Gaussian random field whose power spectrum falls off as ``rho**-alpha``.

    The output is standardized to mean 0.5, std 0.1 and clamped to [0, 1].
    ``diagonal_attenuation`` scales power inside the diagonal cones by
    ``1 - diagonal_attenuation``.
    """
    if size < 1:
        raise GeometryError(f"size must be >= 1, got {size}")
    stream = rng.Stream(seed)
    n = size * size
    spec = (stream.normal(n) + 1j * stream.normal(n)).reshape(size, size)
    fv, fu = frequency_grid((size, size))
    rho = np.hypot(fv, fu)
    amp = np.zeros_like(rho)
    nz = rho > 0
    amp[nz] = rho[nz] ** (-alpha / 2.0)
    if diagonal_attenuation:
        amp[_diagonal_cone(rho.shape)] *= np.sqrt(1.0 - diagonal_attenuation)
    spec *= amp
    # Hermitian part: H(k, l) = (Z(k, l) + conj(Z(-k, -l))) / 2
    mirrored = np.conj(np.roll(spec[::-1, ::-1], 1, axis=(0, 1)))
    spec = 0.5 * (spec + mirrored)
    field = np.fft.ifft2(spec).real
    std = field.std()
    if std == 0:
        return np.full((size, size), FIELD_MEAN)
    field = (field - field.mean()) / std * FIELD_STD + FIELD_MEAN
    return np.clip(field, 0.0, 1.0)


def periodic_tile(period, amplitude, pattern_seed):
    """Zero-mean ``period x period`` tile with peak magnitude ``amplitude``."""
    stream = rng.Stream(rng.derive_seed(pattern_seed, 0))
    tile = stream.normal(period * period).reshape(period, period)
    tile -= tile.mean()
    peak = np.abs(tile).max()
    if peak == 0:
        return np.zeros((period, period))
    return tile * (amplitude / peak)


def inject_periodic(img, period, amplitude, pattern_seed=0):
    """Add the corpus-wide periodic tile to ``img``."""
    x = np.asarray(img, dtype=np.float64)
    H, W = x.shape
    if period < 1 or H % period or W % period:
        raise GeometryError(f"period {period} must divide image dimensions {H}x{W}")
    if amplitude == 0:
        return x.copy()
    tile = periodic_tile(period, amplitude, pattern_seed)
    return x + np.tile(tile, (H // period, W // period))


def sharpen(img, amount, sigma=1.0):
    """Unsharp mask ``x + amount * (x - blur(x))``, clamped to [0, 1]."""
    x = np.asarray(img, dtype=np.float64)
    return np.clip(x + amount * (x - gaussian_blur(x, sigma)), 0.0, 1.0)


def _bilinear_matrix(n_out, n_in):
    """Row-stochastic ``(n_out, n_in)`` bilinear interpolation, pixel-center aligned."""
    ratio = n_in / n_out
    src = (np.arange(n_out) + 0.5) * ratio - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = src - i0
    W = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    np.add.at(W, (rows, i0), 1.0 - frac)
    np.add.at(W, (rows, i1), frac)
    return W


def _bilinear(x, shape):
    Wr = _bilinear_matrix(shape[0], x.shape[0])
    Wc = _bilinear_matrix(shape[1], x.shape[1])
    return Wr @ x @ Wc.T


def resize_roundtrip(img, scale):
    """Bilinear resize by ``scale`` and back to the original geometry."""
    x = np.asarray(img, dtype=np.float64)
    H, W = x.shape
    inner = (max(1, int(round(H * scale))), max(1, int(round(W * scale))))
    return _bilinear(_bilinear(x, inner), (H, W))


def jpeg_quant_table(quality):
    """Annex-K luminance table scaled with the IJG quality rule."""
    if not 1 <= quality <= 100:
        raise ValueError(f"quality must be in [1, 100], got {quality}")
    quality = int(quality)
    scale = 5000 // quality if quality < 50 else 200 - 2 * quality
    return np.clip((ANNEX_K_LUMINANCE * scale + 50) // 100, 1, 255)


def _dct_matrix(n=8):
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    C = np.sqrt(2.0 / n) * np.cos(np.pi * (2 * i + 1) * k / (2 * n))
    C[0, :] = np.sqrt(1.0 / n)
    return C


_DCT8 = _dct_matrix(8)


def jpeg_simulate(img, quality):
    """Luminance-only JPEG quantization round trip.

    Pixels are mapped to [0, 255] and level-shifted by -128; each 8x8 block
    gets an orthonormal type-II DCT, coefficients are rounded (half away from
    zero) to multiples of the quality-scaled table, then inverted. No chroma,
    no entropy coding, no 8-bit rounding of samples. Dimensions that are not
    multiples of 8 are reflect-padded and cropped back.
    """
    x = np.asarray(img, dtype=np.float64)
    H, W = x.shape
    table = jpeg_quant_table(quality).astype(np.float64)
    ph, pw = (-H) % 8, (-W) % 8
    if ph or pw:
        x = np.pad(x, ((0, ph), (0, pw)), mode="symmetric")
    Hp, Wp = x.shape
    blocks = (x * 255.0 - 128.0).reshape(Hp // 8, 8, Wp // 8, 8).transpose(0, 2, 1, 3)
    coef = _DCT8 @ blocks @ _DCT8.T
    q = coef / table
    q = np.sign(q) * np.floor(np.abs(q) + 0.5) * table
    rec = _DCT8.T @ q @ _DCT8
    out = rec.transpose(0, 2, 1, 3).reshape(Hp, Wp)[:H, :W]
    return np.clip((out + 128.0) / 255.0, 0.0, 1.0)


def post_process(img, op):
    """Apply one post-processing operation."""
    if isinstance(op, dict):
        op = _POSTOP_ADAPTER.validate_python(op)
    if op.kind == "blur":
        return gaussian_blur(img, op.sigma)
    if op.kind == "sharpen":
        return sharpen(img, op.amount)
    if op.kind == "resize":
        return resize_roundtrip(img, op.scale)
    return jpeg_simulate(img, op.quality)


def generate_image(spec, index):
    """The ``index``-th image of the corpus described by ``spec``, quantized to ``maxval``."""
    seed = rng.derive_seed(spec.seed, index)
    x = gen_powerlaw_field(spec.size, spec.alpha, seed, spec.diagonal_attenuation)
    if spec.artifact is not None:
        a = spec.artifact
        x = inject_periodic(x, a.period, a.amplitude, a.pattern_seed)
    for op in spec.chain:
        x = post_process(x, op)
    # Same values a PGM round trip at spec.maxval would give.
    return np.floor(np.clip(x, 0.0, 1.0) * spec.maxval + 0.5) / spec.maxval


def generate_corpus(spec):
    """Yield every image of the fixture in index order."""
    for i in range(spec.count):
        yield generate_image(spec, i)


def write_fixture(spec, outdir):
    """Write the corpus as PGM files plus ``manifest.json``; return the file paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(spec.count - 1)))
    paths = []
    for i, img in enumerate(generate_corpus(spec)):
        p = outdir / f"img_{i:0{width}d}.pgm"
        save_pnm(p, img, spec.maxval)
        paths.append(p)
    manifest = {
        "fixture": spec.model_dump(mode="json"),
        "rng": rng.ALGORITHM,
        "files": [p.name for p in paths],
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    logger.info("wrote %d fixture images to %s", len(paths), outdir)
    return paths
