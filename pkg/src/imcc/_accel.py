"""Numeric hot kernels with two interchangeable backends.

The inner loops that dominate runtime (pairwise squared distances for the
Gaussian kernel and the nearest-center scan inside Lloyd iterations) are
compiled with numba when it is available. Set ``IMCC_BACKEND=numpy`` to force
the pure-numpy fallback; ``IMCC_BACKEND=numba`` (or unset) selects the JIT
path. Both backends compute the same exact per-element arithmetic
(sum over features of squared differences), so results agree to floating
point rounding and argmin ties resolve to the lowest index on either path.

``benchmarks/bench_backends.py`` times the two implementations side by side.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

_ENV_FLAG = "IMCC_BACKEND"

try:
    from numba import njit, prange

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


def _pairwise_sq_dists_numpy(a, b, chunk=64):
    """Exact squared Euclidean distances, row_i(a) vs row_j(b).

    Chunked over rows of ``a`` so the (chunk, n, d) intermediate stays small.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    m = a.shape[0]
    out = np.empty((m, b.shape[0]), dtype=np.float64)
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        diff = a[start:stop, None, :] - b[None, :, :]
        out[start:stop] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def _nearest_centers_numpy(x, centers, chunk=64):
    """Index of the nearest center per row (lowest index on ties) and the
    squared distance to it."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    m = x.shape[0]
    assign = np.empty(m, dtype=np.int64)
    best = np.empty(m, dtype=np.float64)
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        d2 = _pairwise_sq_dists_numpy(x[start:stop], centers, chunk=chunk)
        assign[start:stop] = np.argmin(d2, axis=1)
        best[start:stop] = d2[np.arange(stop - start), assign[start:stop]]
    return assign, best


if _HAVE_NUMBA:

    @njit(parallel=True, cache=True)
    def _pairwise_sq_dists_numba(a, b):  # pragma: no cover - compiled
        m, d = a.shape
        n = b.shape[0]
        out = np.empty((m, n), dtype=np.float64)
        for i in prange(m):
            for j in range(n):
                acc = 0.0
                for k in range(d):
                    diff = a[i, k] - b[j, k]
                    acc += diff * diff
                out[i, j] = acc
        return out

    @njit(parallel=True, cache=True)
    def _nearest_centers_numba(x, centers):  # pragma: no cover - compiled
        m, d = x.shape
        c = centers.shape[0]
        assign = np.empty(m, dtype=np.int64)
        best = np.empty(m, dtype=np.float64)
        for i in prange(m):
            bj = 0
            bd = np.inf
            for j in range(c):
                acc = 0.0
                for k in range(d):
                    diff = x[i, k] - centers[j, k]
                    acc += diff * diff
                if acc < bd:
                    bd = acc
                    bj = j
            assign[i] = bj
            best[i] = bd
        return assign, best

    def _pairwise_numba_entry(a, b):
        a = np.ascontiguousarray(a, dtype=np.float64)
        b = np.ascontiguousarray(b, dtype=np.float64)
        return _pairwise_sq_dists_numba(a, b)

    def _nearest_numba_entry(x, centers):
        x = np.ascontiguousarray(x, dtype=np.float64)
        centers = np.ascontiguousarray(centers, dtype=np.float64)
        return _nearest_centers_numba(x, centers)

else:
    _pairwise_numba_entry = None
    _nearest_numba_entry = None


def _select_backend():
    requested = os.environ.get(_ENV_FLAG, "").strip().lower()
    if requested not in ("", "numba", "numpy"):
        warnings.warn(
            f"unknown {_ENV_FLAG}={requested!r}, expected 'numba' or 'numpy'; "
            "using the default",
            RuntimeWarning,
            stacklevel=2,
        )
        requested = ""
    if requested == "numpy":
        return "numpy"
    if requested == "numba" and not _HAVE_NUMBA:
        warnings.warn(
            f"{_ENV_FLAG}=numba requested but numba is not importable; "
            "falling back to numpy",
            RuntimeWarning,
            stacklevel=2,
        )
        return "numpy"
    return "numba" if _HAVE_NUMBA else "numpy"


BACKEND = _select_backend()

if BACKEND == "numba":
    pairwise_sq_dists = _pairwise_numba_entry
    nearest_centers = _nearest_numba_entry
else:
    pairwise_sq_dists = _pairwise_sq_dists_numpy
    nearest_centers = _nearest_centers_numpy


def backends():
    """Available implementations keyed by name, for tests and benchmarks."""
    out = {"numpy": (_pairwise_sq_dists_numpy, _nearest_centers_numpy)}
    if _HAVE_NUMBA:
        out["numba"] = (_pairwise_numba_entry, _nearest_numba_entry)
    return out


def warmup():
    """Trigger JIT compilation so timed sections do not pay for it."""
    a = np.zeros((2, 3))
    pairwise_sq_dists(a, a)
    nearest_centers(a, a)
