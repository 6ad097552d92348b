"""Pilot-plus-syndrome encoder and decision-feedback decoder.

Source blocks are bit matrices of shape ``(block_length, run_length)``:
each row is one contiguous run of the error process, and each column is one
LDPC block. The first ``pilots`` columns travel uncompressed; every later
column is interleaved and replaced by its syndrome. Column indices in
reports are 0-based, so decoded columns are ``pilots .. run_length-1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import hmm
from .errors import DimensionError
from .hmm import HmmParams
from .ldpc import DEFAULT_MAX_ITERS, ParityCheckMatrix, decode_syndrome, syndrome_columns
from .ldpc.code import rank_gf2

HISTORY_MODES = ("full", "window")


@dataclass(frozen=True)
class FrameLayout:
    """Shape of one source block.

    ``run_length`` columns of ``block_length`` bits; the first ``pilots``
    columns are sent raw.
    """
    run_length: int
    block_length: int
    pilots: int

    def __post_init__(self):
        if self.block_length < 1:
            raise ValueError("block_length must be >= 1")
        if not 1 <= self.pilots < self.run_length:
            raise ValueError(f"need 1 <= pilots < run_length, got {self.pilots}, {self.run_length}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.block_length, self.run_length

    @property
    def coded_columns(self) -> int:
        return self.run_length - self.pilots

    @classmethod
    def parse(cls, text: str) -> "FrameLayout":
        """Parse ``"LxNxM"`` (run length, block length, pilots), e.g. ``100x2000x4``."""
        try:
            L, N, M = (int(t) for t in text.lower().split("x"))
        except ValueError:
            raise ValueError(f"layout must look like 100x2000x4, got {text!r}") from None
        return cls(L, N, M)

    def __str__(self):
        return f"{self.run_length}x{self.block_length}x{self.pilots}"


@dataclass(frozen=True, eq=False)
class SourcePair:
    x: np.ndarray
    y: np.ndarray
    e: np.ndarray


@dataclass(frozen=True, eq=False)
class CompressedStream:
    layout: FrameLayout
    pilot_columns: np.ndarray  # (block_length, pilots)
    syndromes: np.ndarray      # (checks, coded_columns)
    interleaver_seed: int
    code_digest: bytes = b""

    @property
    def syndrome_length(self) -> int:
        return self.syndromes.shape[0]

    @property
    def size_bits(self) -> int:
        return self.pilot_columns.size + self.syndromes.size

    def __eq__(self, other):
        return (isinstance(other, CompressedStream) and self.layout == other.layout
                and self.interleaver_seed == other.interleaver_seed
                and self.code_digest == other.code_digest
                and np.array_equal(self.pilot_columns, other.pilot_columns)
                and np.array_equal(self.syndromes, other.syndromes))


@dataclass(eq=False)
class DecodeReport:
    y_hat: np.ndarray
    failed_columns: list[int]
    per_column_iterations: list[int]
    distortion: float | None = None
    bit_errors: int | None = None
    gammas: np.ndarray | None = field(default=None, repr=False)


def column_permutation(interleaver_seed: int, column: int, n: int) -> np.ndarray:
    """Interleaver for one column, seeded by (master seed, column index)."""
    ss = np.random.SeedSequence(entropy=interleaver_seed, spawn_key=(column,))
    return np.random.default_rng(ss).permutation(n)


def generate_source_pair(params: HmmParams, layout: FrameLayout, seed) -> SourcePair:
    rng = np.random.default_rng(seed)
    N, L = layout.shape
    x = rng.integers(0, 2, size=(N, L), dtype=np.uint8)
    e = hmm.sample_rows(params, N, L, rng)
    return SourcePair(x=x, y=x ^ e, e=e)


def _check_shape(name: str, arr: np.ndarray, layout: FrameLayout) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.uint8)
    if arr.shape != layout.shape:
        raise DimensionError(f"{name} has shape {arr.shape}, layout needs {layout.shape}")
    return arr


def encode(y: np.ndarray, code: ParityCheckMatrix, layout: FrameLayout,
           interleaver_seed: int) -> CompressedStream:
    y = _check_shape("y", y, layout)
    if code.n != layout.block_length:
        raise DimensionError(f"code length {code.n} != block length {layout.block_length}")
    M, L = layout.pilots, layout.run_length
    inter = np.empty((code.n, L - M), dtype=np.uint8)
    for j in range(M, L):
        inter[:, j - M] = y[column_permutation(interleaver_seed, j, code.n), j]
    return CompressedStream(layout=layout, pilot_columns=y[:, :M].copy(),
                            syndromes=syndrome_columns(code, inter).astype(np.uint8),
                            interleaver_seed=int(interleaver_seed), code_digest=code.digest()[:16])


def compression_rate(layout: FrameLayout, code: ParityCheckMatrix,
                     include_pilots: bool = True, k: int | None = None) -> float:
    """1 - (K/N)(1 - M/L) with K = N - rank(H), or 1 - K/N without the pilot term."""
    if k is None:
        k = code.n - rank_gf2(code)
    return rate_formula(code.n, k, layout.run_length, layout.pilots if include_pilots else 0)


def rate_formula(n: int, k: int, run_length: int, pilots: int) -> float:
    return 1.0 - (k / n) * (1.0 - pilots / run_length)


def llr_from_gamma(gamma, x_bit):
    """Source-bit LLR from the error-bit LLR given the known side-information bit."""
    out = np.where(np.asarray(x_bit) == 1, -np.asarray(gamma, dtype=np.float64), gamma)
    return float(out) if out.ndim == 0 else out


def _tolerant_update(belief, bits, params, fallback):
    pred = belief @ params.transition
    mu = params.emission_zero
    post = pred * np.where(bits[:, None] == 0, mu, 1.0 - mu)
    total = post.sum(axis=1, keepdims=True)
    bad = total[:, 0] <= 0
    if np.any(bad):
        # a wrong fed-back decision can be impossible under the model: restart the row
        post[bad] = fallback
        total[bad] = 1.0
    return post / total


def decode(x: np.ndarray, stream: CompressedStream, code: ParityCheckMatrix, params: HmmParams,
           max_iters: int = DEFAULT_MAX_ITERS, truth: np.ndarray | None = None,
           history: str = "full", min_sum: bool = False, record_llrs: bool = False) -> DecodeReport:
    """Recover y column by column, feeding each decision back into the row beliefs.

    ``history="full"`` keeps the forward recursion running over everything
    decided so far; ``"window"`` restarts it from the stationary
    distribution over only the last ``pilots`` columns.
    """
    layout = stream.layout
    x = _check_shape("x", x, layout)
    if code.n != layout.block_length or stream.syndrome_length != code.m:
        raise DimensionError("stream does not match the code dimensions")
    if stream.code_digest and stream.code_digest != code.digest()[:16]:
        raise DimensionError("stream was encoded with a different code")
    if history not in HISTORY_MODES:
        raise ValueError(f"history must be one of {HISTORY_MODES}")
    N, L = layout.shape
    M = layout.pilots

    y_hat = np.empty((N, L), dtype=np.uint8)
    y_hat[:, :M] = stream.pilot_columns
    e_hat = np.empty((N, L), dtype=np.uint8)
    e_hat[:, :M] = x[:, :M] ^ stream.pilot_columns
    pi = hmm.stationary_distribution(params)
    belief = np.tile(pi, (N, 1))
    for j in range(M):
        belief = _tolerant_update(belief, e_hat[:, j], params, pi)

    gammas = np.zeros((N, L)) if record_llrs else None
    failed, iters = [], []
    for j in range(M, L):
        if history == "window":
            belief = np.tile(pi, (N, 1))
            for t in range(j - M, j):
                belief = _tolerant_update(belief, e_hat[:, t], params, pi)
        gamma = hmm.predictive_llr(belief, params)
        if record_llrs:
            gammas[:, j] = gamma
        lam = llr_from_gamma(gamma, x[:, j])
        perm = column_permutation(stream.interleaver_seed, j, N)
        res = decode_syndrome(code, lam[perm], stream.syndromes[:, j - M], max_iters, min_sum)
        y_col = np.empty(N, dtype=np.uint8)
        y_col[perm] = res.estimate
        y_hat[:, j] = y_col
        e_hat[:, j] = x[:, j] ^ y_col
        if not res.converged:
            failed.append(j)
        iters.append(res.iterations)
        if history == "full":
            belief = _tolerant_update(belief, e_hat[:, j], params, pi)

    report = DecodeReport(y_hat=y_hat, failed_columns=failed, per_column_iterations=iters,
                          gammas=gammas)
    if truth is not None:
        truth = _check_shape("truth", truth, layout)
        report.bit_errors = int(np.count_nonzero(y_hat != truth))
        report.distortion = report.bit_errors / truth.size
    return report
