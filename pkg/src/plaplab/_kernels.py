"""Hot loops of the p-Laplacian, with numba and pure-numpy variants.

The backend is picked once at import time. Set ``PLAPLAB_BACKEND=numpy`` to
force the numpy path (numba is used by default when importable).
Both variants are always importable as ``plap_rows_numba`` /
``plap_rows_numpy`` etc. so they can be benchmarked and cross-checked.
"""
import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

_requested = os.environ.get("PLAPLAB_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"PLAPLAB_BACKEND must be 'numba' or 'numpy', got {_requested!r}")
BACKEND = "numba" if (_requested == "numba" and HAVE_NUMBA) else "numpy"


# numpy


def plap_rows_numpy(indptr, cols, w, mu, f_ext, f_row, p):
    """(1/mu_i) sum_k w_k |f_ext[c_k] - f_row[i]|^(p-2) (f_ext[c_k] - f_row[i])."""
    counts = np.diff(indptr)
    d = f_ext[cols] - np.repeat(f_row, counts)
    terms = w * np.abs(d) ** (p - 2.0) * d
    s = np.zeros(len(f_row))
    nz = counts > 0
    if terms.size:
        s[nz] = np.add.reduceat(terms, indptr[:-1][nz])
    return s / mu


def plap_rows_batch_numpy(indptr, cols, w, mu, F_ext, F_row, p):
    """Row-wise :func:`plap_rows_numpy` over the leading (time) axis."""
    counts = np.diff(indptr)
    d = F_ext[:, cols] - np.repeat(F_row, counts, axis=1)
    terms = w * np.abs(d) ** (p - 2.0) * d
    s = np.zeros(F_row.shape)
    nz = counts > 0
    if terms.size:
        s[:, nz] = np.add.reduceat(terms, indptr[:-1][nz], axis=1)
    return s / mu


# numba

if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _exponent_kind(p):
        # integer or half-integer p - 2 avoid the scalar pow call
        e = p - 2.0
        if e == np.floor(e) and e <= 16:
            return int(e), False
        if 2 * e == np.floor(2 * e) and e <= 16:
            return int(np.floor(e)), True
        return -1, False

    @numba.njit(cache=True)
    def _zpow(d, p, ie, half):
        if d == 0.0:
            return 0.0
        a = abs(d)
        if ie < 0:
            return a ** (p - 2.0) * d
        r = np.sqrt(a) if half else 1.0
        for _ in range(ie):
            r *= a
        return r * d

    @numba.njit(cache=True)
    def plap_rows_numba(indptr, cols, w, mu, f_ext, f_row, p):
        m = f_row.shape[0]
        ie, half = _exponent_kind(p)
        out = np.empty(m)
        for i in range(m):
            fi = f_row[i]
            s = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                s += w[k] * _zpow(f_ext[cols[k]] - fi, p, ie, half)
            out[i] = s / mu[i]
        return out

    @numba.njit(cache=True)
    def plap_rows_batch_numba(indptr, cols, w, mu, F_ext, F_row, p):
        nt, m = F_row.shape
        ie, half = _exponent_kind(p)
        out = np.empty((nt, m))
        for t in range(nt):
            for i in range(m):
                fi = F_row[t, i]
                s = 0.0
                for k in range(indptr[i], indptr[i + 1]):
                    s += w[k] * _zpow(F_ext[t, cols[k]] - fi, p, ie, half)
                out[t, i] = s / mu[i]
        return out

else:  # pragma: no cover
    plap_rows_numba = plap_rows_numpy
    plap_rows_batch_numba = plap_rows_batch_numpy


if BACKEND == "numba":
    plap_rows = plap_rows_numba
    plap_rows_batch = plap_rows_batch_numba
else:
    plap_rows = plap_rows_numpy
    plap_rows_batch = plap_rows_batch_numpy
