"""Sparse parity-check matrices, degree distributions and alist I/O."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..errors import ConstructionError, DimensionError, FormatError


@dataclass(frozen=True)
class DegreeDistribution:
    """Edge-perspective degree distribution of an LDPC ensemble.

    ``variable_edges`` and ``check_edges`` are tuples of ``(degree,
    fraction)`` pairs; fractions are the share of edges attached to nodes of
    that degree.
    """
    variable_edges: tuple[tuple[int, float], ...]
    check_edges: tuple[tuple[int, float], ...]
    name: str = ""
    note: str = field(default="", compare=False)

    def __post_init__(self):
        var = tuple((int(d), float(f)) for d, f in self.variable_edges if float(f) > 0)
        chk = tuple((int(d), float(f)) for d, f in self.check_edges if float(f) > 0)
        object.__setattr__(self, "variable_edges", var)
        object.__setattr__(self, "check_edges", chk)
        if not var or not chk:
            raise ConstructionError("both degree lists need at least one entry")
        for label, pairs, lo in (("variable", var, 1), ("check", chk, 2)):
            if abs(sum(f for _, f in pairs) - 1.0) > 1e-9:
                raise ConstructionError(f"{label} edge fractions must sum to 1")
            if any(d < lo for d, _ in pairs):
                raise ConstructionError(f"{label} degrees must be >= {lo}")
        r = self.design_rate
        if not 0.0 < r < 1.0:
            raise ConstructionError(f"design rate {r:.4f} outside (0, 1)")

    @property
    def design_rate(self) -> float:
        return 1.0 - _inv_avg(self.check_edges) / _inv_avg(self.variable_edges)

    def variable_node_fractions(self) -> dict[int, float]:
        return _node_fractions(self.variable_edges)

    def check_node_fractions(self) -> dict[int, float]:
        return _node_fractions(self.check_edges)

    @classmethod
    def regular(cls, dv: int, dc: int) -> "DegreeDistribution":
        return cls(((dv, 1.0),), ((dc, 1.0),), name=f"reg{dv}{dc}")

    @classmethod
    def concentrated(cls, variable_edges, rate: float, name: str = "") -> "DegreeDistribution":
        """Pair ``variable_edges`` with a check side on two adjacent degrees hitting ``rate``."""
        return cls(tuple(variable_edges), concentrated_check_edges(variable_edges, rate), name=name)

    def to_dict(self) -> dict:
        out = {"id": self.name,
               "variable_edges": [list(p) for p in self.variable_edges],
               "check_edges": [list(p) for p in self.check_edges]}
        if self.note:
            out["note"] = self.note
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "DegreeDistribution":
        try:
            return cls(tuple(tuple(p) for p in d["variable_edges"]),
                       tuple(tuple(p) for p in d["check_edges"]),
                       name=str(d.get("id", "")), note=str(d.get("note", "")))
        except KeyError as exc:
            raise FormatError(f"degree distribution missing {exc}") from None


def _inv_avg(pairs) -> float:
    return sum(f / d for d, f in pairs)


def _node_fractions(pairs) -> dict[int, float]:
    tot = _inv_avg(pairs)
    return {d: (f / d) / tot for d, f in pairs}


def concentrated_check_edges(variable_edges, rate: float) -> tuple[tuple[int, float], ...]:
    target = (1.0 - rate) * _inv_avg(variable_edges)  # sum(rho_d / d)
    if target <= 0 or target > 0.5:
        raise ConstructionError(f"rate {rate} not reachable with check degrees >= 2")
    k = int(np.floor(1.0 / target))
    rho_k = (target - 1.0 / (k + 1)) * k * (k + 1)
    rho_k = min(max(rho_k, 0.0), 1.0)
    pairs = [(k, rho_k), (k + 1, 1.0 - rho_k)]
    return tuple((d, f) for d, f in pairs if f > 1e-15)


def load_ensemble(spec: str | Path) -> DegreeDistribution:
    """Load a shipped ensemble by id (e.g. ``reg36``) or a JSON/TOML file."""
    p = Path(spec)
    if not p.exists():
        shipped = resources.files("swhmm") / "data" / "ensembles" / f"{spec}.json"
        if not shipped.is_file():
            raise FormatError(f"no ensemble file or shipped ensemble named {spec!r}")
        return DegreeDistribution.from_dict(json.loads(shipped.read_text()))
    from ..config import read_config
    return DegreeDistribution.from_dict(read_config(p))


def shipped_ensembles() -> list[str]:
    root = resources.files("swhmm") / "data" / "ensembles"
    return sorted(f.name[:-5] for f in root.iterdir() if f.name.endswith(".json"))


# ---------------------------------------------------------------------------


class ParityCheckMatrix:
    """Sparse binary parity-check matrix in compressed-row form.

    Edges are numbered check-major: edge ``e`` in
    ``check_ptr[c]:check_ptr[c+1]`` joins check ``c`` to bit
    ``check_bits[e]``. ``var_ptr``/``var_edges`` index the same edges by bit.
    """

    def __init__(self, n: int, rows: Sequence[Iterable[int]]):
        self.n = int(n)
        self.m = len(rows)
        clean = []
        for c, r in enumerate(rows):
            arr = np.asarray(sorted(int(b) for b in r), dtype=np.int64)
            if arr.size == 0:
                raise ConstructionError(f"check {c} has no bits")
            if np.any(arr[1:] == arr[:-1]):
                raise ConstructionError(f"check {c} repeats a bit")
            if arr[0] < 0 or arr[-1] >= self.n:
                raise ConstructionError(f"check {c} references a bit outside [0, {self.n})")
            clean.append(arr)
        lens = np.array([a.size for a in clean], dtype=np.int64)
        self.check_ptr = np.concatenate([[0], np.cumsum(lens)]).astype(np.int64)
        self.check_bits = np.concatenate(clean) if clean else np.zeros(0, np.int64)
        vdeg = np.bincount(self.check_bits, minlength=self.n)
        if self.n and vdeg.min() < 1:
            raise ConstructionError(f"bit {int(np.argmin(vdeg))} is in no check")
        self.var_edges = np.argsort(self.check_bits, kind="stable").astype(np.int64)
        self.var_ptr = np.concatenate([[0], np.cumsum(vdeg)]).astype(np.int64)
        self.edge_check = np.repeat(np.arange(self.m, dtype=np.int64), lens)
        for a in (self.check_ptr, self.check_bits, self.var_edges, self.var_ptr, self.edge_check):
            a.setflags(write=False)

    @property
    def num_edges(self) -> int:
        return int(self.check_bits.size)

    @property
    def rows(self) -> list[np.ndarray]:
        return [self.check_bits[self.check_ptr[c]:self.check_ptr[c + 1]] for c in range(self.m)]

    def check_degrees(self) -> np.ndarray:
        return np.diff(self.check_ptr)

    def variable_degrees(self) -> np.ndarray:
        return np.diff(self.var_ptr)

    def bit_checks(self, b: int) -> np.ndarray:
        return self.edge_check[self.var_edges[self.var_ptr[b]:self.var_ptr[b + 1]]]

    @classmethod
    def from_dense(cls, H) -> "ParityCheckMatrix":
        H = np.asarray(H)
        return cls(H.shape[1], [np.flatnonzero(row) for row in H])

    def to_dense(self) -> np.ndarray:
        H = np.zeros((self.m, self.n), dtype=np.uint8)
        H[self.edge_check, self.check_bits] = 1
        return H

    def __eq__(self, other):
        return (isinstance(other, ParityCheckMatrix) and self.n == other.n and self.m == other.m
                and np.array_equal(self.check_ptr, other.check_ptr)
                and np.array_equal(self.check_bits, other.check_bits))

    def __repr__(self):
        return f"ParityCheckMatrix(n={self.n}, m={self.m}, edges={self.num_edges})"

    # -- alist ---------------------------------------------------------------

    def to_alist(self) -> str:
        vdeg = self.variable_degrees()
        cdeg = self.check_degrees()
        lines = [f"{self.n} {self.m}", f"{vdeg.max()} {cdeg.max()}",
                 " ".join(map(str, vdeg)), " ".join(map(str, cdeg))]
        for b in range(self.n):
            lines.append(" ".join(str(c + 1) for c in np.sort(self.bit_checks(b))))
        for r in self.rows:
            lines.append(" ".join(str(b + 1) for b in r))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_alist(cls, text: str) -> "ParityCheckMatrix":
        try:
            tok = [int(t) for t in text.split()]
            n, m = tok[0], tok[1]
            pos = 4
            vdeg = tok[pos:pos + n]
            pos += n
            cdeg = tok[pos:pos + m]
            pos += m
            max_v, max_c = tok[2], tok[3]
        except (ValueError, IndexError) as exc:
            raise FormatError(f"malformed alist header: {exc}") from None
        if len(vdeg) != n or len(cdeg) != m:
            raise FormatError("alist truncated in degree lists")
        # Bit lists may be zero-padded to max_v entries; detect by length.
        remaining = len(tok) - pos
        padded = remaining == n * max_v + m * max_c
        bit_lists = []
        for d in vdeg:
            width = max_v if padded else d
            bit_lists.append([c - 1 for c in tok[pos:pos + width] if c != 0])
            pos += width
        rows = []
        for d in cdeg:
            width = max_c if padded else d
            rows.append([b - 1 for b in tok[pos:pos + width] if b != 0])
            pos += width
        if pos != len(tok):
            raise FormatError("alist has trailing or missing entries")
        code = cls(n, rows)
        from_bits = sorted((c, b) for b, cs in enumerate(bit_lists) for c in cs)
        from_rows = sorted(zip(code.edge_check.tolist(), code.check_bits.tolist()))
        if from_bits != from_rows:
            raise FormatError("alist bit lists disagree with check lists")
        return code

    def save_alist(self, path: str | Path) -> None:
        Path(path).write_text(self.to_alist())

    @classmethod
    def load_alist(cls, path: str | Path) -> "ParityCheckMatrix":
        return cls.from_alist(Path(path).read_text())

    def digest(self) -> bytes:
        """SHA-256 of the canonical alist text."""
        return hashlib.sha256(self.to_alist().encode()).digest()

    def git_hash(self) -> str:
        """Git blob-style SHA-1 of the canonical alist text."""
        data = self.to_alist().encode()
        return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Syndrome:
    bits: np.ndarray

    def __len__(self):
        return self.bits.shape[0]

    def __eq__(self, other):
        other_bits = other.bits if isinstance(other, Syndrome) else np.asarray(other)
        return np.array_equal(self.bits, other_bits)


def syndrome(code: ParityCheckMatrix, y) -> Syndrome:
    y = np.asarray(y, dtype=np.uint8)
    if y.shape != (code.n,):
        raise DimensionError(f"expected {code.n} bits, got shape {y.shape}")
    s = np.bitwise_xor.reduceat(y[code.check_bits], code.check_ptr[:-1])
    return Syndrome(s.astype(np.uint8))


def syndrome_columns(code: ParityCheckMatrix, Y: np.ndarray) -> np.ndarray:
    """Syndromes of every column of ``Y`` (shape ``(n, k)``) as an ``(m, k)`` array."""
    Y = np.asarray(Y, dtype=np.uint8)
    if Y.shape[0] != code.n:
        raise DimensionError(f"expected {code.n} rows, got {Y.shape[0]}")
    return np.bitwise_xor.reduceat(Y[code.check_bits], code.check_ptr[:-1], axis=0)


def rank_gf2(code: ParityCheckMatrix) -> int:
    """Rank of H over GF(2) using bit-packed Python ints as rows."""
    rows = []
    for r in code.rows:
        v = 0
        for b in r.tolist():
            v |= 1 << b
        rows.append(v)
    rows.sort(key=int.bit_length)
    basis: dict[int, int] = {}
    for v in rows:
        while v:
            lead = v.bit_length() - 1
            piv = basis.get(lead)
            if piv is None:
                basis[lead] = v
                break
            v ^= piv
    return len(basis)


def realized_rate(code: ParityCheckMatrix) -> float:
    """K/N with K = N - rank(H)."""
    return 1.0 - rank_gf2(code) / code.n


def has_four_cycle(code: ParityCheckMatrix) -> bool:
    """True if two bits share more than one check."""
    keys = []
    for r in code.rows:
        if r.size >= 2:
            a, b = np.triu_indices(r.size, 1)
            keys.append(r[a] * code.n + r[b])
    if not keys:
        return False
    k = np.concatenate(keys)
    return np.unique(k).size != k.size


def girth(code: ParityCheckMatrix, limit: int = 64) -> int:
    """Shortest cycle length in the Tanner graph (``limit`` caps the search; 0 if acyclic)."""
    n, m = code.n, code.m
    best = limit + 1
    adj_v = [code.bit_checks(b) for b in range(n)]
    rows = code.rows
    for src in range(n):
        # BFS over the bipartite graph; nodes: bits 0..n-1, checks n..n+m-1
        dist = {src: 0}
        parent = {src: -1}
        frontier = [src]
        while frontier:
            nxt = []
            for u in frontier:
                nbrs = adj_v[u] + n if u < n else rows[u - n]
                for w in nbrs.tolist():
                    if w == parent[u]:
                        continue
                    if w in dist:
                        best = min(best, dist[u] + dist[w] + 1)
                    else:
                        dist[w] = dist[u] + 1
                        parent[w] = u
                        nxt.append(w)
            if frontier and 2 * dist[frontier[0]] >= best:
                break
            frontier = nxt
    return 0 if best > limit else best
