"""Greedy girth-aware parity-check construction.

Bits are filled one edge at a time. For each new edge a breadth-first
search from the bit measures how far every check currently is; the edge goes
to a check that is unreached (or failing that, farthest away), with ties
broken by lowest current check degree and then by a seeded pseudo-random
pick. The search depth is capped on large codes to keep construction linear.
"""
from __future__ import annotations

import numpy as np

from .._accel import njit
from ..errors import ConstructionError
from .code import DegreeDistribution, ParityCheckMatrix

AUTO_FULL_SEARCH_N = 20_000
CAPPED_DEPTH = 3


def _largest_remainder(total: int, weights: np.ndarray) -> np.ndarray:
    raw = total * weights / weights.sum()
    counts = np.floor(raw).astype(np.int64)
    short = total - int(counts.sum())
    # ties go to the later (higher-degree) class
    order = np.lexsort((-np.arange(len(raw)), -(raw - counts)))
    counts[order[:short]] += 1
    return counts


def degree_profile(dd: DegreeDistribution, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-bit and per-check target degrees realizing ``dd`` on ``n`` bits."""
    vd = np.array([d for d, _ in dd.variable_edges], dtype=np.int64)
    vf = np.array([f / d for d, f in dd.variable_edges])
    v_counts = _largest_remainder(n, vf)
    var_deg = np.repeat(vd, v_counts)
    edges = int(var_deg.sum())

    cd = np.array([d for d, _ in dd.check_edges], dtype=np.int64)
    cf = np.array([f / d for d, f in dd.check_edges])
    m = int(round(edges * cf.sum()))
    if m < 1:
        raise ConstructionError(f"n={n} too small: no checks")
    c_counts = _largest_remainder(m, cf)
    chk_deg = np.repeat(cd, c_counts)  # ascending degree
    residual = edges - int(chk_deg.sum())
    step = 1 if residual > 0 else -1
    i = m - 1
    while residual != 0:
        chk_deg[i] += step
        residual -= step
        i = i - 1 if i > 0 else m - 1
    if chk_deg.min() < 1:
        raise ConstructionError(f"n={n} too small to realize the check degrees")
    if var_deg.max() > m:
        raise ConstructionError(f"variable degree {var_deg.max()} exceeds {m} checks")
    if chk_deg.max() > n:
        raise ConstructionError(f"check degree {chk_deg.max()} exceeds {n} bits")
    return var_deg, chk_deg


@njit
def _fill_kernel(var_deg, chk_target, u, max_depth):
    n = var_deg.shape[0]
    m = chk_target.shape[0]
    maxdv = var_deg.max()
    slots = chk_target.max() + 4
    var_adj = np.full((n, maxdv), -1, dtype=np.int64)
    chk_adj = np.full((m, slots), -1, dtype=np.int64)
    cdeg = np.zeros(m, dtype=np.int64)

    nlev = slots + 1
    bucket = np.empty((nlev, m), dtype=np.int64)
    bsize = np.zeros(nlev, dtype=np.int64)
    bpos = np.full(m, -1, dtype=np.int64)
    for c in range(m):
        if chk_target[c] > 0:
            bucket[0, bsize[0]] = c
            bpos[c] = bsize[0]
            bsize[0] += 1

    cstamp = np.full(m, -1, dtype=np.int64)
    cdist = np.zeros(m, dtype=np.int64)
    vstamp = np.full(n, -1, dtype=np.int64)
    visited = np.empty(m, dtype=np.int64)
    frontier = np.empty(m, dtype=np.int64)
    nxt = np.empty(m, dtype=np.int64)
    reached_by_deg = np.zeros(nlev, dtype=np.int64)
    overflow = 0

    edge = 0
    for v in range(n):
        for k in range(var_deg[v]):
            total_cap = 0
            for d in range(nlev):
                total_cap += bsize[d]
            chosen = -1
            nvis = 0
            reached_cap = 0
            if k > 0:
                stamp = edge
                vstamp[v] = stamp
                nf = 0
                for j in range(k):
                    c = var_adj[v, j]
                    cstamp[c] = stamp
                    cdist[c] = 0
                    visited[nvis] = c
                    nvis += 1
                    frontier[nf] = c
                    nf += 1
                    if cdeg[c] < chk_target[c]:
                        reached_cap += 1
                        reached_by_deg[cdeg[c]] += 1
                depth = 0
                while nf > 0 and reached_cap < total_cap and (max_depth < 0 or depth < max_depth):
                    nn = 0
                    for fi in range(nf):
                        c = frontier[fi]
                        for s in range(cdeg[c]):
                            b = chk_adj[c, s]
                            if vstamp[b] == stamp:
                                continue
                            vstamp[b] = stamp
                            for t in range(maxdv):
                                c2 = var_adj[b, t]
                                if c2 < 0:
                                    break
                                if cstamp[c2] == stamp:
                                    continue
                                cstamp[c2] = stamp
                                cdist[c2] = depth + 1
                                visited[nvis] = c2
                                nvis += 1
                                nxt[nn] = c2
                                nn += 1
                                if cdeg[c2] < chk_target[c2]:
                                    reached_cap += 1
                                    reached_by_deg[cdeg[c2]] += 1
                    for fi in range(nn):
                        frontier[fi] = nxt[fi]
                    nf = nn
                    depth += 1
            else:
                stamp = -2

            if reached_cap < total_cap:
                # some check with spare capacity is out of reach: lowest degree first
                for d in range(nlev):
                    if bsize[d] - reached_by_deg[d] > 0:
                        size = bsize[d]
                        start = int(u[edge] * size)
                        for i in range(size):
                            c = bucket[d, (start + i) % size]
                            if cstamp[c] != stamp:
                                chosen = c
                                break
                        break
            else:
                best_dist = 0
                best_deg = 1 << 62
                for i in range(nvis):
                    c = visited[i]
                    if cdeg[c] < chk_target[c] and cdist[c] > 0:
                        if cdist[c] > best_dist or (cdist[c] == best_dist and cdeg[c] < best_deg):
                            best_dist = cdist[c]
                            best_deg = cdeg[c]
                if best_dist > 0:
                    count = 0
                    for i in range(nvis):
                        c = visited[i]
                        if cdeg[c] < chk_target[c] and cdist[c] == best_dist and cdeg[c] == best_deg:
                            count += 1
                    pick = int(u[edge] * count)
                    for i in range(nvis):
                        c = visited[i]
                        if cdeg[c] < chk_target[c] and cdist[c] == best_dist and cdeg[c] == best_deg:
                            if pick == 0:
                                chosen = c
                                break
                            pick -= 1
            for d in range(nlev):
                reached_by_deg[d] = 0

            if chosen < 0:
                # every check with spare capacity already touches v: overfill one
                best_deg = 1 << 62
                start = int(u[edge] * m)
                for i in range(m):
                    c = (start + i) % m
                    adjacent = False
                    for j in range(k):
                        if var_adj[v, j] == c:
                            adjacent = True
                    if not adjacent and cdeg[c] < slots and cdeg[c] < best_deg:
                        best_deg = cdeg[c]
                        chosen = c
                if chosen < 0:
                    return var_adj, chk_adj, cdeg, -1
                overflow += 1

            var_adj[v, k] = chosen
            d = cdeg[chosen]
            if bpos[chosen] >= 0:
                p = bpos[chosen]
                last = bucket[d, bsize[d] - 1]
                bucket[d, p] = last
                bpos[last] = p
                bsize[d] -= 1
                bpos[chosen] = -1
            chk_adj[chosen, d] = v
            cdeg[chosen] = d + 1
            if d + 1 < chk_target[chosen]:
                bucket[d + 1, bsize[d + 1]] = chosen
                bpos[chosen] = bsize[d + 1]
                bsize[d + 1] += 1
            edge += 1
    return var_adj, chk_adj, cdeg, overflow


def build_code(dd: DegreeDistribution, n: int, seed: int,
               max_depth: int | None = None) -> ParityCheckMatrix:
    """Construct a parity-check matrix following ``dd`` on ``n`` bits.

    ``max_depth`` caps the breadth-first search in check levels (``-1`` for
    unlimited). By default the search is unlimited for ``n <= 20000`` and
    capped at 3 levels above that, which still rules out cycles shorter than
    10 wherever the graph leaves room.
    """
    if n < 2:
        raise ConstructionError("n must be >= 2")
    var_deg, chk_deg = degree_profile(dd, n)
    if max_depth is None:
        max_depth = -1 if n <= AUTO_FULL_SEARCH_N else CAPPED_DEPTH
    rng = np.random.default_rng(seed)
    u = rng.random(int(var_deg.sum()))
    _, chk_adj, cdeg, overflow = _fill_kernel(var_deg, chk_deg, u, int(max_depth))
    if overflow < 0:
        raise ConstructionError("could not place every edge without duplicates")
    rows = [chk_adj[c, :cdeg[c]] for c in range(len(chk_deg))]
    return ParityCheckMatrix(n, rows)
