"""Bitmask witness kernels shared by the elimination procedures.

A witness query asks, for each source key pair (qa, qb), for the bitwise OR
of the value rows of all targets (ta, tb) with ``qa ⊆ ta`` and ``tb ⊆ qb``.
Every accessibility test used by the tableau reduces to this shape, with
``tb = 0`` when only one inclusion matters.

Set ``CKDECIDE_NO_NUMBA=1`` to force the pure numpy implementation.
"""

from __future__ import annotations

import os

import numpy as np

USE_NUMBA = os.environ.get("CKDECIDE_NO_NUMBA", "") not in ("1", "true", "yes")

_njit = None
if USE_NUMBA:
    try:
        from numba import njit as _njit
    except ImportError:  # pragma: no cover - numba is optional at runtime
        USE_NUMBA = False


def _or_pairwise_py(qa, qb, ta, tb, tv):
    nq, nt = qa.shape[0], ta.shape[0]
    w = tv.shape[1]
    out = np.zeros((nq, w), dtype=np.uint64)
    if nq == 0 or nt == 0:
        return out
    # bound the temporary (chunk x nt) boolean matrix to about 8M cells
    chunk = max(1, 8_000_000 // max(nt, 1))
    nta = ~ta
    for lo in range(0, nq, chunk):
        hi = min(nq, lo + chunk)
        ok = (qa[lo:hi, None] & nta[None, :]) == 0
        ok &= (tb[None, :] & ~qb[lo:hi, None]) == 0
        for c in range(w):
            vals = np.where(ok, tv[None, :, c], np.uint64(0))
            out[lo:hi, c] = np.bitwise_or.reduce(vals, axis=1)
    return out


if USE_NUMBA:

    @_njit(cache=True)
    def _or_pairwise_nb(qa, qb, ta, tb, tv):  # pragma: no cover - compiled
        nq = qa.shape[0]
        nt = ta.shape[0]
        w = tv.shape[1]
        out = np.zeros((nq, w), dtype=np.uint64)
        for i in range(nq):
            a = qa[i]
            nb = ~qb[i]
            for j in range(nt):
                if (a & ~ta[j]) == 0 and (tb[j] & nb) == 0:
                    for c in range(w):
                        out[i, c] |= tv[j, c]
        return out

    _or_pairwise = _or_pairwise_nb
else:
    _or_pairwise = _or_pairwise_py


def _group_or(keys: np.ndarray, vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unique rows of ``keys`` with the OR of the matching ``vals`` rows."""
    if keys.shape[0] == 0:
        return keys, vals
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    order = np.argsort(inv, kind="stable")
    starts = np.searchsorted(inv[order], np.arange(uniq.shape[0]))
    red = np.bitwise_or.reduceat(vals[order], starts, axis=0)
    return uniq, red


def witness_or(
    qa: np.ndarray, qb: np.ndarray, ta: np.ndarray, tb: np.ndarray, tv: np.ndarray, *, numpy_only: bool = False
) -> np.ndarray:
    """OR of ``tv`` rows over targets j with qa[i] ⊆ ta[j] and tb[j] ⊆ qb[i], per source i.

    Sources and targets are deduplicated before the quadratic scan.
    """
    qa = np.ascontiguousarray(qa, dtype=np.uint64)
    qb = np.ascontiguousarray(qb, dtype=np.uint64)
    tv = np.ascontiguousarray(tv, dtype=np.uint64)
    if tv.ndim == 1:
        tv = tv[:, None]
        squeeze = True
    else:
        squeeze = False
    w = tv.shape[1]
    if qa.shape[0] == 0 or ta.shape[0] == 0:
        out = np.zeros((qa.shape[0], w), dtype=np.uint64)
        return out[:, 0] if squeeze else out
    tkeys, tvals = _group_or(np.stack([np.asarray(ta, np.uint64), np.asarray(tb, np.uint64)], axis=1), tv)
    qkeys, qinv = np.unique(np.stack([qa, qb], axis=1), axis=0, return_inverse=True)
    fn = _or_pairwise_py if numpy_only else _or_pairwise
    red = fn(
        np.ascontiguousarray(qkeys[:, 0]),
        np.ascontiguousarray(qkeys[:, 1]),
        np.ascontiguousarray(tkeys[:, 0]),
        np.ascontiguousarray(tkeys[:, 1]),
        np.ascontiguousarray(tvals),
    )
    out = red[qinv.reshape(-1)]
    return out[:, 0] if squeeze else out


def equal_key_or(qkeys: np.ndarray, tkeys: np.ndarray, tv: np.ndarray) -> np.ndarray:
    """OR of ``tv`` rows over targets whose key equals the source key."""
    tv = np.asarray(tv, dtype=np.uint64)
    squeeze = tv.ndim == 1
    if squeeze:
        tv = tv[:, None]
    out = np.zeros((len(qkeys), tv.shape[1]), dtype=np.uint64)
    if len(tkeys) and len(qkeys):
        uk, uv = _group_or(np.asarray(tkeys, np.uint64)[:, None], tv)
        uk = uk[:, 0]
        pos = np.searchsorted(uk, qkeys)
        pos_c = np.minimum(pos, len(uk) - 1)
        hit = uk[pos_c] == qkeys
        out[hit] = uv[pos_c[hit]]
    return out[:, 0] if squeeze else out


def popcount64(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint64)
    out = np.zeros(x.shape, dtype=np.int64)
    for b in range(64):
        out += ((x >> np.uint64(b)) & np.uint64(1)).astype(np.int64)
    return out
