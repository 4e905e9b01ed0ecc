"""Numba-accelerated numeric kernels with pure-numpy fallbacks.

The hot inner loops of the package live here: the Walsh-Hadamard
transform used by the fastfood feature map, the interleaved sin/cos
feature assembly shared by both random-feature maps, and the pairwise
squared-distance kernel behind exact RBF Gram matrices.

Each kernel has two implementations that perform the same floating
point operations in the same order, so the two paths agree bitwise
for the transform kernels (sin/cos may differ in the last ulp between
libm and numpy's vectorized routines).

Backend selection: numba is used when importable unless the
environment variable ``SAMKL_NO_NUMBA`` is set to a truthy value
("1", "true", "yes"), in which case the numpy fallbacks are used.
``benchmarks/bench_accel.py`` times the two paths against each other.
"""

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        return wrap


def _env_disabled() -> bool:
    return os.environ.get("SAMKL_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")


USE_NUMBA = HAS_NUMBA and not _env_disabled()


def backend() -> str:
    """Name of the active backend: ``"numba"`` or ``"numpy"``."""
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# Walsh-Hadamard transform (unnormalized, in place, power-of-two length)
# ---------------------------------------------------------------------------


def _fwht_rows_np(a: np.ndarray) -> None:
    n, d = a.shape
    h = 1
    while h < d:
        view = a.reshape(n, d // (2 * h), 2, h)
        x = view[:, :, 0, :]
        y = view[:, :, 1, :]
        s = x + y
        t = x - y
        view[:, :, 0, :] = s
        view[:, :, 1, :] = t
        h *= 2


@njit(cache=True)
def _fwht_rows_nb(a):  # pragma: no cover - compiled
    n, d = a.shape
    for i in range(n):
        h = 1
        while h < d:
            start = 0
            while start < d:
                for j in range(start, start + h):
                    x = a[i, j]
                    y = a[i, j + h]
                    a[i, j] = x + y
                    a[i, j + h] = x - y
                start += 2 * h
            h *= 2


def fwht_rows(a: np.ndarray) -> None:
    """In-place unnormalized Walsh-Hadamard transform of each row.

    The row length must be a power of two.  Applying the transform twice
    multiplies a row by its length.
    """
    n, d = a.shape
    if d & (d - 1):
        raise ValueError(f"row length must be a power of two, got {d}")
    if USE_NUMBA:
        _fwht_rows_nb(a)
    else:
        _fwht_rows_np(a)


# ---------------------------------------------------------------------------
# Interleaved sin/cos feature assembly
# ---------------------------------------------------------------------------


def _interleave_sincos_np(z: np.ndarray, scale: float) -> np.ndarray:
    n, d = z.shape
    out = np.empty((n, 2 * d), dtype=np.float64)
    out[:, 0::2] = np.sin(z)
    out[:, 1::2] = np.cos(z)
    out *= scale
    return out


@njit(cache=True)
def _interleave_sincos_nb(z, scale):  # pragma: no cover - compiled
    n, d = z.shape
    out = np.empty((n, 2 * d), dtype=np.float64)
    for i in range(n):
        for j in range(d):
            out[i, 2 * j] = np.sin(z[i, j]) * scale
            out[i, 2 * j + 1] = np.cos(z[i, j]) * scale
    return out


def interleave_sincos(z: np.ndarray, scale: float) -> np.ndarray:
    """Return ``scale * [sin z_1, cos z_1, sin z_2, cos z_2, ...]`` per row."""
    z = np.ascontiguousarray(z, dtype=np.float64)
    if USE_NUMBA:
        return _interleave_sincos_nb(z, scale)
    return _interleave_sincos_np(z, scale)


# ---------------------------------------------------------------------------
# Pairwise squared distances
# ---------------------------------------------------------------------------


def _pairwise_sq_dists_np(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - y[None, :, :]
    return np.sum(diff * diff, axis=2)


@njit(cache=True)
def _pairwise_sq_dists_nb(x, y):  # pragma: no cover - compiled
    n, d = x.shape
    m = y.shape[0]
    out = np.empty((n, m), dtype=np.float64)
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for k in range(d):
                diff = x[i, k] - y[j, k]
                acc += diff * diff
            out[i, j] = acc
    return out


def pairwise_sq_dists(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Squared euclidean distances between rows of ``x`` and rows of ``y``.

    Both paths accumulate ``(x_k - y_k)**2`` over the feature axis, so the
    result is never negative (no ``x^2 + y^2 - 2xy`` cancellation).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"dim mismatch: {x.shape[1]} vs {y.shape[1]}")
    if USE_NUMBA:
        return _pairwise_sq_dists_nb(x, y)
    return _pairwise_sq_dists_np(x, y)
