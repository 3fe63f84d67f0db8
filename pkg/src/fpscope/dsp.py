"""2-D DFT, quadrant shift and circular autocorrelation.

Conventions: forward transform is unnormalized, inverse carries ``1/(M*N)``.
Axis 0 (rows, index ``m``) pairs with frequency index ``k``; axis 1 (columns,
index ``n``) with ``l``.
"""

import numpy as np
import scipy.fft

from .errors import GeometryError

__all__ = ["dft2", "idft2", "fftshift", "ifftshift", "autocorr", "power_spectrum",
           "frequency_grid", "autocorr_from_power"]


def _check_2d(x):
    x = np.asarray(x)
    if x.ndim != 2:
        raise GeometryError(f"expected a 2-D grid, got shape {x.shape}")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise GeometryError(f"zero-sized grid {x.shape}")
    return x


def dft2(img):
    """Unnormalized forward 2-D DFT (complex128)."""
    return scipy.fft.fft2(_check_2d(img))


def idft2(grid):
    """Inverse of :func:`dft2` (includes the ``1/(M*N)`` factor)."""
    return scipy.fft.ifft2(_check_2d(grid))


def fftshift(grid):
    """Move bin (0, 0) to ``(M // 2, N // 2)``."""
    return np.fft.fftshift(np.asarray(grid), axes=(0, 1))


def ifftshift(grid):
    return np.fft.ifftshift(np.asarray(grid), axes=(0, 1))


def power_spectrum(img):
    """``|DFT(x)|**2``."""
    X = dft2(img)
    return X.real ** 2 + X.imag ** 2


def autocorr(img, remove_mean=True):
    """Circular autocorrelation ``IDFT(|DFT(x')|^2) / (M*N)``.

    ``x'`` is ``x`` minus its mean when ``remove_mean`` is set, so ``R[0, 0]``
    is the mean square of ``x'`` and lags are indexed circularly
    (``R[-1, 0]`` is lag ``(-1, 0)``).
    """
    x = _check_2d(img).astype(np.float64)
    if remove_mean:
        x = x - x.mean()
    return autocorr_from_power(power_spectrum(x))


def autocorr_from_power(power):
    """Circular autocorrelation from a power spectrum ``|X|**2``."""
    M, N = power.shape
    return scipy.fft.ifft2(power).real / (M * N)


def frequency_grid(shape):
    """Normalized frequencies ``(f_v, f_u)`` folded to [-0.5, 0.5).

    ``f_v`` varies along axis 0 (vertical), ``f_u`` along axis 1 (horizontal).
    """
    M, N = shape
    fv = np.fft.fftfreq(M)[:, None] * np.ones((1, N))
    fu = np.ones((M, 1)) * np.fft.fftfreq(N)[None, :]
    return fv, fu
