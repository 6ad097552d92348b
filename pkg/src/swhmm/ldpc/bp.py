"""Syndrome-constrained belief propagation (flooding schedule).

Public LLRs follow the error-bit convention used across the package:
``llr = log P(bit=1) / P(bit=0)``. Internally messages are kept as
``log P(0)/P(1)`` so the usual tanh rule applies unchanged; a check whose
target syndrome bit is 1 flips the sign of everything it sends.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._accel import USE_NUMBA, njit
from ..errors import DimensionError
from .code import ParityCheckMatrix, Syndrome

MSG_CLIP = 40.0
TANH_CLIP = 1.0 - 1e-15
DEFAULT_MAX_ITERS = 100


@dataclass(frozen=True, eq=False)
class DecodeResult:
    estimate: np.ndarray
    converged: bool
    iterations: int


@njit
def _syndrome_ok(check_ptr, check_bits, hard, syn):
    m = check_ptr.shape[0] - 1
    for c in range(m):
        acc = syn[c]
        for e in range(check_ptr[c], check_ptr[c + 1]):
            acc ^= hard[check_bits[e]]
        if acc != 0:
            return False
    return True


@njit
def _bp_numba(check_ptr, check_bits, var_ptr, var_edges, ch, syn, max_iters, min_sum):
    n = ch.shape[0]
    m = check_ptr.shape[0] - 1
    E = check_bits.shape[0]
    vc = np.empty(E)
    cv = np.zeros(E)
    t = np.empty(E)
    hard = np.zeros(n, dtype=np.uint8)
    for v in range(n):
        hard[v] = 1 if ch[v] < 0 else 0
    for e in range(E):
        vc[e] = ch[check_bits[e]]
    if _syndrome_ok(check_ptr, check_bits, hard, syn):
        return hard, True, 0
    for it in range(1, max_iters + 1):
        for c in range(m):
            lo = check_ptr[c]
            hi = check_ptr[c + 1]
            flip = syn[c] != 0
            if min_sum:
                neg = flip
                m1 = np.inf
                m2 = np.inf
                arg = -1
                for e in range(lo, hi):
                    a = abs(vc[e])
                    if vc[e] < 0:
                        neg = not neg
                    if a < m1:
                        m2 = m1
                        m1 = a
                        arg = e
                    elif a < m2:
                        m2 = a
                for e in range(lo, hi):
                    mag = m2 if e == arg else m1
                    s = neg != (vc[e] < 0)
                    cv[e] = -mag if s else mag
            else:
                prod = 1.0
                zeros = 0
                for e in range(lo, hi):
                    x = vc[e]
                    if x > MSG_CLIP:
                        x = MSG_CLIP
                    elif x < -MSG_CLIP:
                        x = -MSG_CLIP
                    # tanh(x/2) and 2 atanh(p) through exp/log: scalar libm tanh is slow
                    ex = np.exp(-x)
                    tv = (1.0 - ex) / (1.0 + ex)
                    t[e] = tv
                    if tv == 0.0:
                        zeros += 1
                    else:
                        prod *= tv
                for e in range(lo, hi):
                    if t[e] == 0.0:
                        p = prod if zeros == 1 else 0.0
                    elif zeros > 0:
                        p = 0.0
                    else:
                        p = prod / t[e]
                    if p > TANH_CLIP:
                        p = TANH_CLIP
                    elif p < -TANH_CLIP:
                        p = -TANH_CLIP
                    msg = np.log((1.0 + p) / (1.0 - p))
                    cv[e] = -msg if flip else msg
        for v in range(n):
            total = ch[v]
            for k in range(var_ptr[v], var_ptr[v + 1]):
                total += cv[var_edges[k]]
            hard[v] = 1 if total < 0 else 0
            for k in range(var_ptr[v], var_ptr[v + 1]):
                e = var_edges[k]
                vc[e] = total - cv[e]
        if _syndrome_ok(check_ptr, check_bits, hard, syn):
            return hard, True, it
    return hard, False, max_iters


def _bp_numpy(check_ptr, check_bits, var_ptr, var_edges, ch, syn, max_iters, min_sum):
    n = ch.shape[0]
    starts = check_ptr[:-1]
    edge_check = np.repeat(np.arange(starts.size), np.diff(check_ptr))
    flip = syn[edge_check].astype(bool)

    def syndrome_ok(hard):
        return np.array_equal(np.bitwise_xor.reduceat(hard[check_bits], starts), syn)

    vc = ch[check_bits].copy()
    hard = (ch < 0).astype(np.uint8)
    if syndrome_ok(hard):
        return hard, True, 0
    for it in range(1, max_iters + 1):
        neg = vc < 0
        parity = np.bitwise_xor.reduceat(neg.astype(np.uint8), starts)[edge_check].astype(bool)
        out_neg = parity ^ neg ^ flip
        if min_sum:
            a = np.abs(vc)
            order = np.lexsort((a, edge_check))
            first = order[starts]
            second = order[np.minimum(starts + 1, check_ptr[1:] - 1)]
            m1 = a[first][edge_check]
            m2 = a[second][edge_check]
            is_min = np.zeros(a.size, dtype=bool)
            is_min[first] = True
            mag = np.where(is_min, m2, m1)
        else:
            tv = np.abs(np.tanh(0.5 * np.clip(vc, -MSG_CLIP, MSG_CLIP)))
            logt = np.log(np.maximum(tv, 1e-300))
            tot = np.add.reduceat(logt, starts)[edge_check]
            p = np.minimum(np.exp(tot - logt), TANH_CLIP)
            mag = 2.0 * np.arctanh(p)
        cv = np.where(out_neg, -mag, mag)
        total = ch + np.bincount(check_bits, weights=cv, minlength=n)
        hard = (total < 0).astype(np.uint8)
        vc = total[check_bits] - cv
        if syndrome_ok(hard):
            return hard, True, it
    return hard, False, max_iters


def decode_syndrome(code: ParityCheckMatrix, llrs, target, max_iters: int = DEFAULT_MAX_ITERS,
                    min_sum: bool = False) -> DecodeResult:
    """Find the most plausible vector whose syndrome equals ``target``.

    ``llrs[i] = log P(bit_i = 1) / P(bit_i = 0)``. Non-convergence is
    reported through ``DecodeResult.converged``.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    llrs = np.asarray(llrs, dtype=np.float64)
    syn = np.asarray(target.bits if isinstance(target, Syndrome) else target, dtype=np.uint8)
    if llrs.shape != (code.n,):
        raise DimensionError(f"expected {code.n} LLRs, got shape {llrs.shape}")
    if syn.shape != (code.m,):
        raise DimensionError(f"expected {code.m} syndrome bits, got shape {syn.shape}")
    kernel = _bp_numba if USE_NUMBA else _bp_numpy
    hard, ok, iters = kernel(code.check_ptr, code.check_bits, code.var_ptr, code.var_edges,
                             np.ascontiguousarray(-llrs), syn, int(max_iters), bool(min_sum))
    return DecodeResult(estimate=np.asarray(hard, dtype=np.uint8), converged=bool(ok),
                        iterations=int(iters))
