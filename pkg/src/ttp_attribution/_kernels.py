"""Numeric kernels for common-subsequence counting and LCS.

Two interchangeable backends:

* ``numba``  -- ``@njit`` loops, used by default when numba imports.
* ``numpy``  -- row-vectorised recurrences, used when numba is missing or
  ``TTP_ATTRIBUTION_DISABLE_NUMBA=1``.

Both take symbol codes as int64 arrays. Counting is stratified by length and
returned as ``counts[l]`` = number of distinct common subsequences of length
``l`` (``counts[0] == 1`` accounts for the empty string).

int64 is exact while ``min(m, n) <= INT64_SAFE_LENGTH``: every table cell is
bounded by C(min(i, j), l) <= C(64, 32) < 2**61 and intermediate sums stay
below 2**63. Longer pairs go through the numpy path with ``dtype=object``
(Python integers).
"""

from __future__ import annotations

import os

import numpy as np

DISABLE_ENV = "TTP_ATTRIBUTION_DISABLE_NUMBA"
INT64_SAFE_LENGTH = 64

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get(DISABLE_ENV, "").strip().lower() not in (
    "1",
    "true",
    "yes",
    "on",
)

if HAVE_NUMBA:
    njit = numba.njit(cache=True, nogil=True)
else:  # pragma: no cover

    def njit(fn):
        return fn


def _prev_occurrence(codes: np.ndarray) -> np.ndarray:
    """prev[i] = 1-based index of the previous occurrence of codes[i-1], 0 if none."""
    prev = np.zeros(len(codes) + 1, dtype=np.int64)
    last: dict[int, int] = {}
    for i, c in enumerate(codes.tolist(), start=1):
        prev[i] = last.get(c, 0)
        last[c] = i
    return prev


# --------------------------------------------------------------------------
# numba backend


@njit
def _prev_occurrence_nb(codes):
    n = codes.shape[0]
    prev = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        for k in range(i - 1, 0, -1):
            if codes[k - 1] == codes[i - 1]:
                prev[i] = k
                break
    return prev


@njit
def _css_table_nb(a, b):
    m = a.shape[0]
    n = b.shape[0]
    lmax = min(m, n)
    pa = _prev_occurrence_nb(a)
    pb = _prev_occurrence_nb(b)
    F = np.zeros((m + 1, n + 1, lmax + 1), dtype=np.int64)
    for i in range(m + 1):
        for j in range(n + 1):
            F[i, j, 0] = 1
    for i in range(1, m + 1):
        p = pa[i]
        for j in range(1, n + 1):
            top = min(i, j)
            for l in range(1, top + 1):
                F[i, j, l] = F[i, j - 1, l] + (F[i - 1, j, l] - F[i - 1, j - 1, l])
            if a[i - 1] == b[j - 1]:
                q = pb[j]
                for l in range(1, top + 1):
                    t = F[i - 1, j - 1, l - 1]
                    if p > 0:
                        t -= F[p - 1, j - 1, l - 1]
                        if q > 0:
                            t += F[p - 1, q - 1, l - 1]
                    if q > 0:
                        t -= F[i - 1, q - 1, l - 1]
                    F[i, j, l] += t
    return F[m, n, :].copy()


@njit
def _css_batch_nb(query, flat, offsets, width):
    count = offsets.shape[0] - 1
    out = np.zeros((count, width), dtype=np.int64)
    for k in range(count):
        row = _css_table_nb(query, flat[offsets[k] : offsets[k + 1]])
        for l in range(row.shape[0]):
            out[k, l] = row[l]
    return out


@njit
def _lcs_nb(a, b):
    m = a.shape[0]
    n = b.shape[0]
    prev = np.zeros(n + 1, dtype=np.int64)
    cur = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            if a[i - 1] == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        for j in range(n + 1):
            prev[j] = cur[j]
    return prev[n]


@njit
def _lcs_batch_nb(query, flat, offsets):
    count = offsets.shape[0] - 1
    out = np.zeros(count, dtype=np.int64)
    for k in range(count):
        out[k] = _lcs_nb(query, flat[offsets[k] : offsets[k + 1]])
    return out


# --------------------------------------------------------------------------
# numpy backend


def css_counts_numpy(a: np.ndarray, b: np.ndarray, exact: bool = False) -> np.ndarray:
    """Row-vectorised version of the same recurrence.

    Along a row, F[i, j] - F[i, j-1] depends only on earlier rows, so each row
    is a cumulative sum of increments. ``exact=True`` switches to Python ints.
    """
    m, n = len(a), len(b)
    lmax = min(m, n)
    dtype = object if exact else np.int64
    F = np.zeros((m + 1, n + 1, lmax + 1), dtype=dtype)
    F[:, :, 0] = 1
    pa = _prev_occurrence(a)
    pb = _prev_occurrence(b)
    for i in range(1, m + 1):
        inc = F[i - 1, 1:, :] - F[i - 1, :-1, :]
        js = np.flatnonzero(b == a[i - 1]) + 1
        if js.size:
            p = pa[i]
            q = pb[js]
            t = F[i - 1, js - 1, :-1].copy()
            if p:
                t -= F[p - 1, js - 1, :-1]
            hq = q > 0
            if hq.any():
                t[hq] -= F[i - 1, q[hq] - 1, :-1]
                if p:
                    t[hq] += F[p - 1, q[hq] - 1, :-1]
            inc[js - 1, 1:] += t
        F[i, 1:, :] = F[i, 0, :] + np.cumsum(inc, axis=0)
    return F[m, n, :].copy()


def lcs_numpy(a: np.ndarray, b: np.ndarray) -> int:
    n = len(b)
    prev = np.zeros(n + 1, dtype=np.int64)
    for x in a.tolist():
        match = np.zeros(n + 1, dtype=np.int64)
        match[1:] = np.where(b == x, prev[:-1] + 1, 0)
        # cur[j] = max(match[j], prev[j], cur[j-1]) is a running max
        prev = np.maximum.accumulate(np.maximum(match, prev))
    return int(prev[n])


# --------------------------------------------------------------------------
# dispatch


def css_counts(a: np.ndarray, b: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Distinct common-subsequence counts by length for one pair of code arrays."""
    a = np.ascontiguousarray(a, dtype=np.int64)
    b = np.ascontiguousarray(b, dtype=np.int64)
    if min(len(a), len(b)) > INT64_SAFE_LENGTH:
        return css_counts_numpy(a, b, exact=True)
    backend = backend or ("numba" if USE_NUMBA else "numpy")
    if backend == "numba":
        return _css_table_nb(a, b)
    return css_counts_numpy(a, b)


def css_counts_batch(
    query: np.ndarray, flat: np.ndarray, offsets: np.ndarray, backend: str | None = None
) -> np.ndarray:
    """Counts for ``query`` against every packed sequence ``flat[offsets[k]:offsets[k+1]]``.

    Returns an int64 matrix with one row per sequence, padded with zeros to
    ``len(query) + 1`` columns. The caller guarantees ``len(query)`` is int64-safe.
    """
    query = np.ascontiguousarray(query, dtype=np.int64)
    width = len(query) + 1
    backend = backend or ("numba" if USE_NUMBA else "numpy")
    if backend == "numba":
        return _css_batch_nb(query, flat, offsets, width)
    out = np.zeros((len(offsets) - 1, width), dtype=np.int64)
    for k in range(len(offsets) - 1):
        row = css_counts_numpy(query, flat[offsets[k] : offsets[k + 1]])
        out[k, : len(row)] = row
    return out


def lcs_length(a: np.ndarray, b: np.ndarray, backend: str | None = None) -> int:
    a = np.ascontiguousarray(a, dtype=np.int64)
    b = np.ascontiguousarray(b, dtype=np.int64)
    backend = backend or ("numba" if USE_NUMBA else "numpy")
    if backend == "numba":
        return int(_lcs_nb(a, b))
    return lcs_numpy(a, b)


def lcs_batch(
    query: np.ndarray, flat: np.ndarray, offsets: np.ndarray, backend: str | None = None
) -> np.ndarray:
    query = np.ascontiguousarray(query, dtype=np.int64)
    backend = backend or ("numba" if USE_NUMBA else "numpy")
    if backend == "numba":
        return _lcs_batch_nb(query, flat, offsets)
    return np.array(
        [lcs_numpy(query, flat[offsets[k] : offsets[k + 1]]) for k in range(len(offsets) - 1)],
        dtype=np.int64,
    )
