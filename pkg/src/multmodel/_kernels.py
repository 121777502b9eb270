"""Hot loops over clause bitmask matrices.

Clauses are laid out as rows of a ``uint64`` matrix, one column per
variable; an unconstrained column holds the variable's full mask.  A clause
``s`` is implied by a clause ``c`` iff ``c[u] & ~s[u] == 0`` for every column.

Two implementations exist for every kernel: numba ``@njit`` versions and
pure-numpy ones.  Numba is used when it imports and the environment variable
``MULTMODEL_DISABLE_NUMBA`` is unset (or ``0``); :func:`set_backend` switches
at runtime.
"""
from __future__ import annotations

import os

import numpy as np

_CHUNK = 4096

# ---------------------------------------------------------------- numpy path


def _np_eval_products(elem_masks, gammas, inst_vals):
    """Product of satisfied gammas for every instance row.

    Returns ``(products, multiplications)`` where multiplications counts
    every gamma folded into a product.
    """
    n_inst = inst_vals.shape[0]
    out = np.ones(n_inst)
    mults = 0
    if elem_masks.shape[0] == 0:
        return out, mults
    bits = np.left_shift(np.uint64(1), inst_vals.astype(np.uint64))
    for start in range(0, n_inst, _CHUNK):
        b = bits[start:start + _CHUNK]
        # (chunk, k): every column of the instance hits an allowed bit
        sat = np.all((b[:, None, :] & elem_masks[None, :, :]) != 0, axis=2)
        mults += int(sat.sum())
        acc = out[start:start + _CHUNK]
        for e in range(elem_masks.shape[0]):
            col = sat[:, e]
            acc[col] *= gammas[e]
    return out, mults


def _np_numerators(elem_masks, gammas, r_masks, vcol, card):
    """Sum over the eliminated column's values of products of implied gammas."""
    n_r = r_masks.shape[0]
    num = np.zeros(n_r)
    mults = 0
    notmask = ~elem_masks
    for v in range(card):
        c_all = r_masks.copy()
        c_all[:, vcol] = np.uint64(1) << np.uint64(v)
        for start in range(0, n_r, _CHUNK):
            c = c_all[start:start + _CHUNK]
            sat = np.all((c[:, None, :] & notmask[None, :, :]) == 0, axis=2)
            mults += int(sat.sum())
            term = np.ones(c.shape[0])
            for e in range(elem_masks.shape[0]):
                col = sat[:, e]
                term[col] *= gammas[e]
            num[start:start + _CHUNK] += term
    return num, mults


def _np_telescope(r_masks, num, tol):
    """Divide each numerator by the product of already-emitted predecessors.

    ``r_masks`` must be sorted as a linear extension of the clause order.
    Returns ``(gammas, emitted, multiplications, degenerate_row)``;
    ``degenerate_row`` is -1 unless a zero denominator met a non-zero
    numerator.
    """
    n_r = r_masks.shape[0]
    gam = np.ones(n_r)
    emitted = np.zeros(n_r, dtype=np.bool_)
    notmask = ~r_masks
    mults = 0
    for i in range(n_r):
        prev = np.flatnonzero(emitted[:i])
        zeros = 0
        denom = 1.0
        if prev.size:
            below = np.all((r_masks[i][None, :] & notmask[prev]) == 0, axis=1)
            idx = prev[below]
            mults += idx.size
            g = gam[idx]
            nz = g != 0.0
            zeros = int(idx.size - nz.sum())
            for x in g[nz]:
                denom *= x
        if zeros:
            if num[i] != 0.0:
                return gam, emitted, mults, i
            gam[i] = 1.0
        else:
            gam[i] = num[i] / denom
            mults += 1
        if abs(gam[i] - 1.0) > tol:
            emitted[i] = True
    return gam, emitted, mults, -1


# ---------------------------------------------------------------- numba path

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

if HAS_NUMBA:

    @njit(cache=True)
    def _nb_eval_products(elem_masks, gammas, inst_vals):
        n_inst, n_col = inst_vals.shape
        k = elem_masks.shape[0]
        out = np.ones(n_inst)
        mults = 0
        one = np.uint64(1)
        for i in range(n_inst):
            acc = 1.0
            for e in range(k):
                ok = True
                for u in range(n_col):
                    if (elem_masks[e, u] >> np.uint64(inst_vals[i, u])) & one == 0:
                        ok = False
                        break
                if ok:
                    acc *= gammas[e]
                    mults += 1
            out[i] = acc
        return out, mults

    @njit(cache=True)
    def _nb_numerators(elem_masks, gammas, r_masks, vcol, card):
        n_r, n_col = r_masks.shape
        k = elem_masks.shape[0]
        num = np.zeros(n_r)
        mults = 0
        zero = np.uint64(0)
        for i in range(n_r):
            total = 0.0
            for v in range(card):
                vbit = np.uint64(1) << np.uint64(v)
                term = 1.0
                for e in range(k):
                    ok = True
                    for u in range(n_col):
                        c = vbit if u == vcol else r_masks[i, u]
                        if c & ~elem_masks[e, u] != zero:
                            ok = False
                            break
                    if ok:
                        term *= gammas[e]
                        mults += 1
                total += term
            num[i] = total
        return num, mults

    @njit(cache=True)
    def _nb_telescope(r_masks, num, tol):
        n_r, n_col = r_masks.shape
        gam = np.ones(n_r)
        emitted = np.zeros(n_r, dtype=np.bool_)
        order = np.empty(n_r, dtype=np.int64)
        n_emit = 0
        mults = 0
        zero = np.uint64(0)
        for i in range(n_r):
            zeros = 0
            denom = 1.0
            for jj in range(n_emit):
                j = order[jj]
                ok = True
                for u in range(n_col):
                    if r_masks[i, u] & ~r_masks[j, u] != zero:
                        ok = False
                        break
                if ok:
                    mults += 1
                    if gam[j] == 0.0:
                        zeros += 1
                    else:
                        denom *= gam[j]
            if zeros > 0:
                if num[i] != 0.0:
                    return gam, emitted, mults, i
                gam[i] = 1.0
            else:
                gam[i] = num[i] / denom
                mults += 1
            if abs(gam[i] - 1.0) > tol:
                emitted[i] = True
                order[n_emit] = i
                n_emit += 1
        return gam, emitted, mults, -1


_IMPLS = {
    "numpy": (_np_eval_products, _np_numerators, _np_telescope),
}
if HAS_NUMBA:
    _IMPLS["numba"] = (_nb_eval_products, _nb_numerators, _nb_telescope)

BACKEND = "numpy"
eval_products = _np_eval_products
numerators = _np_numerators
telescope = _np_telescope


def set_backend(name: str) -> None:
    """Select ``"numba"`` or ``"numpy"`` kernels for subsequent calls."""
    global BACKEND, eval_products, numerators, telescope
    if name not in _IMPLS:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(_IMPLS)}")
    BACKEND = name
    eval_products, numerators, telescope = _IMPLS[name]


def available_backends() -> list[str]:
    return sorted(_IMPLS)


def _default_backend() -> str:
    flag = os.environ.get("MULTMODEL_DISABLE_NUMBA", "").strip().lower()
    if HAS_NUMBA and flag in ("", "0", "false", "no"):
        return "numba"
    return "numpy"


set_backend(_default_backend())
