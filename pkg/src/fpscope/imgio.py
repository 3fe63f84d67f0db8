"""Netpbm (PGM/PPM) reading and writing, luminance conversion, cropping.

Images are plain numpy float64 arrays with nominal range [0, 1]:
``(height, width)`` for grayscale and ``(height, width, 3)`` for color.
"""

import logging
import re
import shlex
import subprocess
from pathlib import Path

import numpy as np

from .errors import ContractError, FormatError, GeometryError, UnsupportedFormatError

logger = logging.getLogger(__name__)

__all__ = [
    "parse_pnm",
    "decode_pnm",
    "write_pnm",
    "to_luminance",
    "center_crop",
    "read_image",
    "save_pnm",
    "validate_image",
]

_MAGICS = {b"P2": (1, False), b"P3": (3, False), b"P5": (1, True), b"P6": (3, True)}
_WHITESPACE = b" \t\n\r\v\f"
_DIGITS = re.compile(rb"\d+")
_COMMENT = re.compile(rb"#[^\n\r]*")

# BT.601 luma weights; green is implied as 1 - R - B.
LUMA_R = 0.299
LUMA_B = 0.114


def _next_token(data, pos):
    """Return ``(token, start, end)`` of the next header token, skipping comments."""
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c in _WHITESPACE:
            pos += 1
        elif c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            break
    if pos >= n:
        raise FormatError("truncated header", offset=pos)
    m = _DIGITS.match(data, pos)
    if m is None:
        raise FormatError("expected decimal integer in header", offset=pos)
    end = m.end()
    if end < n and data[end:end + 1] not in _WHITESPACE and data[end:end + 1] != b"#":
        raise FormatError("malformed header token", offset=end)
    return int(m.group()), pos, end


def decode_pnm(data):
    """Parse a PGM/PPM byte string.

    Returns:
        ``(pixels, maxval)`` where ``pixels`` is float64 scaled to [0, 1].

    Raises:
        UnsupportedFormatError: magic is not P2, P3, P5 or P6.
        FormatError: malformed or truncated payload.
    """
    data = bytes(data)
    magic = data[:2]
    if magic not in _MAGICS:
        raise UnsupportedFormatError(f"unsupported magic {magic!r}")
    channels, binary = _MAGICS[magic]
    if len(data) > 2 and data[2:3] not in _WHITESPACE and data[2:3] != b"#":
        raise FormatError("magic must be followed by whitespace", offset=2)

    pos = 2
    width, _, pos = _next_token(data, pos)
    height, _, pos = _next_token(data, pos)
    maxval, start, pos = _next_token(data, pos)
    if width < 1 or height < 1:
        raise FormatError(f"invalid dimensions {width}x{height}", offset=start)
    if not 1 <= maxval <= 65535:
        raise FormatError(f"maxval {maxval} outside [1, 65535]", offset=start)

    count = width * height * channels
    if binary:
        if pos >= len(data):
            raise FormatError("missing raster", offset=pos)
        if data[pos:pos + 1] not in _WHITESPACE:
            raise FormatError("expected single whitespace byte before raster", offset=pos)
        pos += 1
        bps = 1 if maxval < 256 else 2
        needed = count * bps
        if len(data) - pos < needed:
            raise FormatError(
                f"truncated raster: need {needed} bytes, have {len(data) - pos}",
                offset=len(data))
        dtype = np.uint8 if bps == 1 else np.dtype(">u2")
        samples = np.frombuffer(data, dtype=dtype, count=count, offset=pos).astype(np.int64)
    else:
        body = _COMMENT.sub(b"", data[pos:])
        tokens = body.split()
        if len(tokens) < count:
            raise FormatError(
                f"truncated raster: need {count} samples, have {len(tokens)}",
                offset=len(data))
        tokens = tokens[:count]
        for tok in tokens:
            if not tok.isdigit():
                raise FormatError(f"invalid sample token {tok[:16]!r}", offset=pos)
        samples = np.array([int(t) for t in tokens], dtype=np.int64)

    if samples.size and samples.max() > maxval:
        raise FormatError(f"sample {samples.max()} exceeds maxval {maxval}", offset=pos)
    pixels = samples.astype(np.float64) / maxval
    shape = (height, width) if channels == 1 else (height, width, 3)
    return pixels.reshape(shape), maxval


def parse_pnm(data):
    """Parse a PGM/PPM byte string into a [0, 1] float image."""
    return decode_pnm(data)[0]


def validate_image(img):
    """Check the image invariants; return the array as float64."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim not in (2, 3) or (arr.ndim == 3 and arr.shape[2] != 3):
        raise ContractError(f"expected (H, W) or (H, W, 3) array, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise GeometryError(f"empty image of shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError("image contains non-finite samples")
    return arr


def write_pnm(img, maxval=255):
    """Encode an image as binary PGM (P5) or PPM (P6).

    Values are clamped to [0, 1] and quantized with round-half-up.
    """
    if not 1 <= maxval <= 65535:
        raise ContractError(f"maxval {maxval} outside [1, 65535]")
    arr = validate_image(img)
    height, width = arr.shape[:2]
    magic = b"P5" if arr.ndim == 2 else b"P6"
    q = np.floor(np.clip(arr, 0.0, 1.0) * maxval + 0.5)
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    header = b"%s\n%d %d\n%d\n" % (magic, width, height, maxval)
    return header + q.astype(dtype).tobytes()


def to_luminance(img):
    """BT.601 luma of an ``(H, W, 3)`` image; grayscale input passes through."""
    arr = validate_image(img)
    if arr.ndim == 2:
        return arr
    r, g, b = arr[..., 0], arr[..., 1], arr[..., 2]
    # Written relative to G so equal channels reproduce their value exactly.
    return g + LUMA_R * (r - g) + LUMA_B * (b - g)


def center_crop(img, size):
    """Centered ``size x size`` crop; offsets are ``floor((dim - size) / 2)``."""
    arr = np.asarray(img)
    height, width = arr.shape[:2]
    if size < 1 or size > min(height, width):
        raise GeometryError(f"cannot crop {size}x{size} from {height}x{width}")
    top = (height - size) // 2
    left = (width - size) // 2
    return arr[top:top + size, left:left + size]


def read_image(path, decoder=None):
    """Load an image file.

    PGM/PPM files are parsed natively. Anything else requires ``decoder``, a
    command (string or argv list) that receives the file path as its last
    argument and writes a PGM/PPM to standard output.
    """
    path = Path(path)
    data = path.read_bytes()
    if data[:2] in _MAGICS:
        return parse_pnm(data)
    if decoder is None:
        raise UnsupportedFormatError(
            f"{path.name}: not a PGM/PPM file and no external decoder configured")
    argv = shlex.split(decoder) if isinstance(decoder, str) else list(decoder)
    proc = subprocess.run(argv + [str(path)], capture_output=True, check=False)
    if proc.returncode != 0:
        raise FormatError(
            f"{path.name}: external decoder exited with {proc.returncode}: "
            f"{proc.stderr.decode(errors='replace').strip()}")
    return parse_pnm(proc.stdout)


def save_pnm(path, img, maxval=255):
    Path(path).write_bytes(write_pnm(img, maxval))
