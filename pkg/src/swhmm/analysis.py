"""Equivalent-channel analysis: LLR densities, capacity, density evolution.

Densities live on a uniform LLR grid symmetric about zero (bin centres
``k * step`` for ``k = -K..K``); values beyond the range saturate into the
end bins. Density evolution runs on the all-zero word with messages in
``log P(0)/P(1)`` form. Variable nodes convolve densities with FFTs; check
nodes work in the sign / ``-log tanh(|x|/2)`` domain where the tanh rule
becomes a convolution too.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import hmm
from .errors import FormatError
from .hmm import HmmParams
from .ldpc.code import DegreeDistribution, concentrated_check_edges

LLR_RANGE = 30.0
DEFAULT_BINS = 4097
G_BINS = 1 << 15
DEFAULT_TARGET_BER = 1e-5
SYMMETRY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class LlrDensity:
    bin_edges: np.ndarray
    mass_given_e0: np.ndarray
    mass_given_e1: np.ndarray
    prior_one: float = 0.5

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=np.float64)
        m0 = np.asarray(self.mass_given_e0, dtype=np.float64)
        m1 = np.asarray(self.mass_given_e1, dtype=np.float64)
        if edges.size != m0.size + 1 or m0.shape != m1.shape:
            raise ValueError("bin_edges must have one more entry than each mass vector")
        if np.any(np.diff(edges) <= 0):
            raise ValueError("bin_edges must increase")
        if not np.allclose(edges, -edges[::-1], atol=1e-9):
            raise ValueError("grid must be symmetric about 0")
        for m in (m0, m1):
            if m.min() < 0 or abs(m.sum() - 1.0) > 1e-9:
                raise ValueError("each conditional mass must be nonnegative and sum to 1")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "mass_given_e0", m0)
        object.__setattr__(self, "mass_given_e1", m1)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def bins(self) -> int:
        return self.mass_given_e0.size

    @property
    def step(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])

    def is_symmetric(self, tol: float = SYMMETRY_TOL) -> bool:
        return (abs(self.prior_one - 0.5) <= tol
                and np.max(np.abs(self.mass_given_e1 - self.mass_given_e0[::-1])) <= tol)

    # -- csv -----------------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# prior_one={self.prior_one:.12g} step={self.step:.12g}\n")
        buf.write("bin_center,mass_given_e0,mass_given_e1\n")
        for c, a, b in zip(self.centers, self.mass_given_e0, self.mass_given_e1):
            buf.write(f"{c:.10f},{a:.17g},{b:.17g}\n")
        return buf.getvalue()

    def save_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "LlrDensity":
        prior = 0.5
        rows = []
        for line in text.splitlines():
            if line.startswith("#"):
                for tok in line[1:].split():
                    key, _, val = tok.partition("=")
                    if key == "prior_one":
                        prior = float(val)
                continue
            if line.strip():
                rows.append(line)
        try:
            reader = csv.DictReader(rows)
            data = np.array([[float(r["bin_center"]), float(r["mass_given_e0"]),
                              float(r["mass_given_e1"])] for r in reader])
        except (KeyError, ValueError) as exc:
            raise FormatError(f"bad density csv: {exc}") from None
        centers = data[:, 0]
        step = centers[1] - centers[0]
        edges = np.concatenate([centers - step / 2, [centers[-1] + step / 2]])
        return cls(edges, data[:, 1] / data[:, 1].sum(), data[:, 2] / data[:, 2].sum(), prior)

    @classmethod
    def load_csv(cls, path: str | Path) -> "LlrDensity":
        return cls.from_csv(Path(path).read_text())


def llr_grid(bins: int = DEFAULT_BINS, llr_range: float = LLR_RANGE) -> np.ndarray:
    """Bin edges of an odd-sized grid with a bin centred on zero."""
    if bins < 3 or bins % 2 == 0:
        raise ValueError("bins must be odd and >= 3 so that zero is a bin centre")
    K = bins // 2
    step = llr_range / K
    return (np.arange(-K, K + 2) - 0.5) * step


def _bin_index(values: np.ndarray, bins: int, llr_range: float) -> np.ndarray:
    K = bins // 2
    step = llr_range / K
    return np.clip(np.rint(np.asarray(values) / step), -K, K).astype(np.int64) + K


def density_from_samples(gamma: np.ndarray, truth: np.ndarray, bins: int = DEFAULT_BINS,
                         llr_range: float = LLR_RANGE) -> LlrDensity:
    edges = llr_grid(bins, llr_range)
    idx = _bin_index(gamma, bins, llr_range)
    truth = np.asarray(truth).astype(bool)
    n1 = int(truth.sum())
    n0 = truth.size - n1
    if n0 == 0 or n1 == 0:
        raise ValueError("need samples of both error values")
    m1 = np.bincount(idx[truth], minlength=bins) / n1
    m0 = np.bincount(idx[~truth], minlength=bins) / n0
    return LlrDensity(edges, m0, m1, prior_one=n1 / truth.size)


def estimate_llr_density(params: HmmParams, M: int, samples: int = 200_000,
                         bins: int = DEFAULT_BINS, seed: int = 0) -> LlrDensity:
    """Monte Carlo density of the predictive LLR after M true past bits."""
    rng = np.random.default_rng(seed)
    runs = hmm.sample_rows(params, samples, M + 1, rng)
    belief = hmm.initial_belief(params, samples)
    for t in range(M):
        belief = hmm.forward_update(belief, runs[:, t], params)
    gamma = hmm.predictive_llr(belief, params)
    return density_from_samples(np.atleast_1d(gamma), runs[:, M], bins)


def bsc_density(p: float, bins: int = DEFAULT_BINS) -> LlrDensity:
    """Symmetric two-atom density of a binary symmetric channel with crossover ``p``."""
    if not 0.0 < p < 0.5:
        raise ValueError("crossover must be in (0, 0.5)")
    edges = llr_grid(bins)
    L = np.log((1.0 - p) / p)
    lo, hi = _bin_index(np.array([-L, L]), bins, LLR_RANGE)
    m1 = np.zeros(bins)
    m1[hi] += 1.0 - p
    m1[lo] += p
    return LlrDensity(edges, m1[::-1].copy(), m1, prior_one=0.5)


def symmetrize(density: LlrDensity) -> LlrDensity:
    """Average the two conditionals into one channel with f(x|1) = f(-x|0).

    The conditionals are weighted by the prior of the error bit; for a
    balanced source that is the plain average. The result is the density of
    the source-bit LLR given the source bit when the side information is
    uniform.
    """
    p1 = density.prior_one
    f1 = p1 * density.mass_given_e1 + (1.0 - p1) * density.mass_given_e0[::-1]
    f1 = f1 / f1.sum()
    return LlrDensity(density.bin_edges, f1[::-1].copy(), f1, prior_one=0.5)


def channel_capacity(density: LlrDensity) -> float:
    """1 - E[h(sigma(gamma))] under the mixture of the two conditionals."""
    mix = density.prior_one * density.mass_given_e1 + (1 - density.prior_one) * density.mass_given_e0
    p1 = 1.0 / (1.0 + np.exp(-density.centers))
    return float(1.0 - np.sum(mix * hmm.binary_entropy(p1)))


def mutual_information(density: LlrDensity) -> float:
    """I(e; binned gamma) in bits, computed straight from the conditionals."""
    p1 = density.prior_one
    f0, f1 = density.mass_given_e0, density.mass_given_e1
    mix = (1 - p1) * f0 + p1 * f1
    out = 0.0
    for w, f in ((1 - p1, f0), (p1, f1)):
        nz = f > 0
        out += w * np.sum(f[nz] * np.log2(f[nz] / mix[nz]))
    return float(out)


def blur(density: LlrDensity, sigma_bins: float) -> LlrDensity:
    """Convolve both conditionals with a discrete Gaussian (in bins); keeps symmetry."""
    half = int(np.ceil(6 * sigma_bins)) + 1
    k = np.exp(-0.5 * (np.arange(-half, half + 1) / sigma_bins) ** 2)
    k /= k.sum()

    def conv(f):
        g = np.convolve(f, k)
        out = g[half:half + f.size].copy()
        out[0] += g[:half].sum()
        out[-1] += g[half + f.size:].sum()
        return out

    return LlrDensity(density.bin_edges, conv(density.mass_given_e0),
                      conv(density.mass_given_e1), density.prior_one)


# ---------------------------------------------------------------------------
# density evolution


def _phi(x):
    with np.errstate(divide="ignore"):
        return -np.log(np.tanh(np.asarray(x, dtype=np.float64) / 2.0))


class _DEGrid:
    """Precomputed index maps between the LLR grid and the check-node domain."""

    def __init__(self, bins: int, llr_range: float, g_bins: int):
        self.K = K = bins // 2
        self.step = step = llr_range / K
        self.bins = bins
        # check domain covers phi up to the value that still rounds to a nonzero LLR
        self.phi_cut = float(_phi(step / 2))
        self.g_bins = g_bins
        self.g_step = self.phi_cut / (g_bins - 1)
        k = np.arange(1, K + 1)
        g = np.rint(_phi(k * step) / self.g_step).astype(np.int64)
        self.llr_to_g = np.minimum(g, g_bins - 1)
        phis = np.arange(g_bins) * self.g_step
        # bin 0 holds phi in [0, step/2): map it to the reliability at its upper
        # edge rather than to the saturation value, so messages stay consistent
        phis[0] = 0.5 * self.g_step
        mag = np.minimum(np.rint(_phi(phis) / step), K)
        self.g_to_llr = mag.astype(np.int64)
        self.fft_len = 1 << int(np.ceil(np.log2(2 * g_bins)))


@lru_cache(maxsize=4)
def _grid(bins: int, llr_range: float, g_bins: int) -> _DEGrid:
    return _DEGrid(bins, llr_range, g_bins)


def _fft_len(n: int) -> int:
    return 1 << int(np.ceil(np.log2(max(n, 2))))


class DensityEvolution:
    """Discretized density evolution for one ensemble on one symmetric channel."""

    def __init__(self, dd: DegreeDistribution, channel: LlrDensity, g_bins: int = G_BINS):
        if not channel.is_symmetric():
            raise ValueError("density evolution needs a symmetrized density")
        self.dd = dd
        K = channel.bins // 2
        llr_range = float(channel.centers[-1])
        self.grid = _grid(channel.bins, round(llr_range, 12), g_bins)
        # all-zero word: internal message = -gamma given bit 0
        self.a = channel.mass_given_e0[::-1].copy()
        self.var_deg = np.array([d for d, _ in dd.variable_edges])
        self.var_w = np.array([f for _, f in dd.variable_edges])
        node = dd.variable_node_fractions()
        self.node_w = np.array([node[d] for d in self.var_deg])
        self.chk_deg = np.array([d for d, _ in dd.check_edges])
        self.chk_w = np.array([f for _, f in dd.check_edges])
        dmax = int(self.var_deg.max())
        self.vlen = _fft_len((dmax + 1) * 2 * K + 1)
        self.A = np.fft.rfft(self._wrap(self.a))

    # circular layout: LLR index k sits at position k mod vlen
    def _wrap(self, f):
        K = self.grid.K
        out = np.zeros(self.vlen)
        out[:K + 1] = f[K:]
        out[-K:] = f[:K]
        return out

    def _unwrap(self, r):
        K = self.grid.K
        half = self.vlen // 2
        r = np.maximum(r, 0.0)
        f = np.empty(2 * K + 1)
        f[K:] = r[:K + 1]
        f[:K] = r[-K:]
        f[-1] += r[K + 1:half].sum()
        f[0] += r[half:self.vlen - K].sum()
        return f

    def _to_g(self, f):
        gr = self.grid
        K = gr.K
        pos = np.bincount(gr.llr_to_g, weights=f[K + 1:], minlength=gr.g_bins)
        neg = np.bincount(gr.llr_to_g, weights=f[:K][::-1], minlength=gr.g_bins)
        return pos + neg, pos - neg

    def _g_power(self, S, D, power):
        """Truncated (power)-fold check-domain convolution of (S, D)."""
        gr = self.grid
        n = gr.g_bins
        L = gr.fft_len

        def mul(x, y):
            return np.fft.irfft(np.fft.rfft(x, L) * np.fft.rfft(y, L), L)[:n]

        rS, rD = None, None
        bS, bD = S, D
        p = power
        while p:
            if p & 1:
                if rS is None:
                    rS, rD = bS, bD
                else:
                    rS, rD = mul(rS, bS), mul(rD, bD)
            p >>= 1
            if p:
                bS, bD = mul(bS, bS), mul(bD, bD)
        return np.maximum(rS, 0.0), rD

    def check_update(self, f):
        gr = self.grid
        K = gr.K
        S, D = self._to_g(f)
        outS = np.zeros(gr.g_bins)
        outD = np.zeros(gr.g_bins)
        for d, w in zip(self.chk_deg, self.chk_w):
            s, dd_ = self._g_power(S, D, int(d) - 1)
            outS += w * s
            outD += w * dd_
        pos = 0.5 * (outS + outD)
        neg = np.maximum(0.5 * (outS - outD), 0.0)
        pos = np.maximum(pos, 0.0)
        out = np.bincount(K + gr.g_to_llr, weights=pos, minlength=2 * K + 1)
        out += np.bincount(K - gr.g_to_llr, weights=neg, minlength=2 * K + 1)
        out[K] += max(0.0, 1.0 - out.sum())
        return out / out.sum()

    def variable_update(self, q):
        Q = np.fft.rfft(self._wrap(q))
        msg = np.zeros_like(Q)
        post = np.zeros_like(Q)
        for d, w, nw in zip(self.var_deg, self.var_w, self.node_w):
            Qd = Q ** (int(d) - 1)
            msg += w * Qd
            post += nw * Qd * Q
        out = self._unwrap(np.fft.irfft(self.A * msg, self.vlen))
        app = self._unwrap(np.fft.irfft(self.A * post, self.vlen))
        return out / out.sum(), app / app.sum()

    def error_probability(self, f) -> float:
        K = self.grid.K
        return float(f[:K].sum() + 0.5 * f[K])

    def run(self, target_ber: float = DEFAULT_TARGET_BER, max_iters: int = 1000,
            stall_window: int = 25, stall_ratio: float = 0.999) -> "DEResult":
        f = self.a.copy()
        history = []
        for it in range(1, max_iters + 1):
            q = self.check_update(f)
            f, app = self.variable_update(q)
            pe = self.error_probability(app)
            history.append(pe)
            if pe < target_ber:
                return DEResult(True, it, pe, history)
            if it > stall_window and pe > stall_ratio * history[-1 - stall_window]:
                break
        return DEResult(False, len(history), history[-1], history)


@dataclass
class DEResult:
    converged: bool
    iterations: int
    residual_error: float
    history: list[float] = field(repr=False)


@dataclass(frozen=True)
class ThresholdResult:
    achievable_rate: float
    converged: bool
    iterations_to_target: int
    residual_error: float
    code_rate: float = float("nan")


def de_run(dd: DegreeDistribution, density: LlrDensity, target_ber: float = DEFAULT_TARGET_BER,
           max_iters: int = 1000) -> DEResult:
    return DensityEvolution(dd, density).run(target_ber, max_iters)


def de_threshold(dd: DegreeDistribution, density: LlrDensity,
                 target_ber: float = DEFAULT_TARGET_BER, resolution: float = 1e-3,
                 max_iters: int = 1000) -> ThresholdResult:
    """Lowest compression rate at which the ensemble family reaches ``target_ber``.

    The family keeps ``dd``'s variable side and pairs it with check degrees
    concentrated on two neighbours, tuned to each trial code rate; bisection
    runs over the code rate. The compression rate excludes pilots, i.e. it is
    ``1 - code_rate``.
    """
    if not 0.0 < target_ber < 0.5:
        raise ValueError("target_ber must be in (0, 0.5)")
    if not density.is_symmetric():
        raise ValueError("de_threshold needs a symmetrized density")
    cap = channel_capacity(density)
    lam = dd.variable_edges
    min_rate = max(1e-3, 1.0 - 0.5 / sum(f / d for d, f in lam) + 1e-9)

    def attempt(rate):
        fam = DegreeDistribution(lam, concentrated_check_edges(lam, rate))
        return DensityEvolution(fam, density).run(target_ber, max_iters)

    lo, hi = min_rate, min(cap + 0.01, 0.999)
    best = attempt(lo)
    if not best.converged:
        return ThresholdResult(1.0, False, best.iterations, best.residual_error, 0.0)
    best_rate = lo
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        res = attempt(mid)
        if res.converged:
            lo, best, best_rate = mid, res, mid
        else:
            hi = mid
    return ThresholdResult(1.0 - best_rate, True, best.iterations, best.residual_error, best_rate)


def crossover_threshold(dd: DegreeDistribution, target_ber: float = DEFAULT_TARGET_BER,
                        lo: float = 0.01, hi: float = 0.2, tol: float = 1e-4,
                        max_iters: int = 2000) -> float:
    """Largest BSC crossover at which DE on ``dd`` still reaches ``target_ber``."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if de_run(dd, bsc_density(mid), target_ber, max_iters).converged:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def threshold_csv_row(model: str, M: int, ensemble_id: str, result: ThresholdResult,
                      target_ber: float) -> str:
    return ("model,M,ensemble,achievable_rate,target_ber\n"
            f"{model},{M},{ensemble_id},{result.achievable_rate:.6f},{target_ber:.3e}\n")
