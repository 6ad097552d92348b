"""Hidden Markov error source: sampling, forward recursion, entropies.

The model emits one bit per step. ``emission_zero[i]`` is P(e=0 | state i)
and ``transition[i, j]`` is P(state i -> state j).

A *belief* is the filtered posterior over the state that emitted the most
recent bit. A fresh row starts from the stationary distribution, so
``forward_update(stationary, e1)`` is the posterior after the first bit.
LLRs use the natural log with positive values favouring e=1; entropies are
in bits.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ._accel import njit, USE_NUMBA
from .errors import (
    DegenerateObservationError,
    EnumerationLimitError,
    InvalidModelError,
    NoUniqueStationaryError,
)

PROB_CLAMP = 1e-12
EXACT_MAX_M = 24
MC_MIN_SAMPLES = 10_000
_CHUNK = 1 << 18


@dataclass(frozen=True, eq=False)
class HmmParams:
    transition: np.ndarray
    emission_zero: np.ndarray

    def __post_init__(self):
        P = np.array(self.transition, dtype=np.float64)
        mu = np.array(self.emission_zero, dtype=np.float64).reshape(-1)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 1:
            raise InvalidModelError(f"transition must be square, got shape {P.shape}")
        if mu.shape[0] != P.shape[0]:
            raise InvalidModelError("emission_zero length must equal the number of states")
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(mu))):
            raise InvalidModelError("non-finite probability")
        if P.min() < 0 or P.max() > 1 or mu.min() < 0 or mu.max() > 1:
            raise InvalidModelError("probabilities must lie in [0, 1]")
        if np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-12:
            raise InvalidModelError("transition rows must sum to 1")
        P.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "emission_zero", mu)

    @property
    def num_states(self) -> int:
        return self.transition.shape[0]

    def __eq__(self, other):
        if not isinstance(other, HmmParams):
            return NotImplemented
        return (np.array_equal(self.transition, other.transition)
                and np.array_equal(self.emission_zero, other.emission_zero))

    def __hash__(self):
        return hash((self.transition.tobytes(), self.emission_zero.tobytes()))

    def to_dict(self) -> dict:
        return {
            "states": self.num_states,
            "transition": self.transition.tolist(),
            "emission_zero": self.emission_zero.tolist(),
        }


@dataclass(frozen=True)
class TwoStateSpec:
    """Four-number description of a two-state model.

    ``p00 = P(S0->S0)``, ``p11 = P(S1->S1)``, ``e0_given_s0 = P(0|S0)`` and
    ``e1_given_s1 = P(1|S1)``.
    """
    p00: float
    p11: float
    e0_given_s0: float
    e1_given_s1: float

    def __post_init__(self):
        for name in ("p00", "p11", "e0_given_s0", "e1_given_s1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidModelError(f"{name}={v} outside [0, 1]")

    def to_params(self) -> HmmParams:
        return HmmParams(
            transition=[[self.p00, 1.0 - self.p00], [1.0 - self.p11, self.p11]],
            emission_zero=[self.e0_given_s0, 1.0 - self.e1_given_s1],
        )


PRESETS: dict[str, TwoStateSpec] = {
    "M1": TwoStateSpec(0.01, 0.065, 0.95, 0.925),
    "M2": TwoStateSpec(0.97, 0.967, 0.93, 0.973),
    "M3": TwoStateSpec(0.99, 0.989, 0.945, 0.9895),
}


def preset(name: str) -> HmmParams:
    try:
        return PRESETS[name.upper()].to_params()
    except KeyError:
        raise InvalidModelError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def single_state(mu0: float) -> HmmParams:
    return HmmParams([[1.0]], [mu0])


def params_from_mapping(cfg: Mapping) -> HmmParams:
    """Build a model from a parsed config table.

    Accepts ``preset = "M1"``, ``two_state = [p00, p11, e0_given_s0,
    e1_given_s1]`` or the explicit ``states`` / ``transition`` /
    ``emission_zero`` triple.
    """
    if "preset" in cfg:
        return preset(str(cfg["preset"]))
    if "two_state" in cfg:
        vals = [float(v) for v in cfg["two_state"]]
        if len(vals) != 4:
            raise InvalidModelError("two_state needs exactly four numbers")
        return TwoStateSpec(*vals).to_params()
    try:
        params = HmmParams(cfg["transition"], cfg["emission_zero"])
    except KeyError as exc:
        raise InvalidModelError(f"model config missing field {exc}") from None
    if "states" in cfg and int(cfg["states"]) != params.num_states:
        raise InvalidModelError("'states' disagrees with the transition matrix size")
    return params


def load_model(spec: str | Path) -> HmmParams:
    """Resolve a preset name or read a TOML/JSON model file."""
    if isinstance(spec, str) and spec.upper() in PRESETS:
        return preset(spec)
    from .config import read_config
    cfg = read_config(spec)
    return params_from_mapping(cfg.get("model", cfg))


# ---------------------------------------------------------------------------
# stationary analysis


def stationary_distribution(params: HmmParams) -> np.ndarray:
    P = params.transition
    S = P.shape[0]
    A = np.vstack([P.T - np.eye(S), np.ones((1, S))])
    if np.linalg.matrix_rank(A, tol=1e-10) < S:
        raise NoUniqueStationaryError("no unique stationary distribution")
    b = np.zeros(S + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def marginal_error_zero_prob(params: HmmParams) -> float:
    return float(stationary_distribution(params) @ params.emission_zero)


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True, eq=False)
class ErrorSequence:
    bits: np.ndarray = field(repr=False)
    seed: int | None = None

    def __len__(self):
        return self.bits.shape[0]


@njit
def _sample_rows_kernel(cum_pi, cum_P, mu, u_state, u_emit):
    rows, length = u_state.shape
    S = cum_pi.shape[0]
    out = np.empty((rows, length), dtype=np.uint8)
    for r in range(rows):
        s = 0
        u = u_state[r, 0]
        while s < S - 1 and u >= cum_pi[s]:
            s += 1
        out[r, 0] = 0 if u_emit[r, 0] < mu[s] else 1
        for t in range(1, length):
            u = u_state[r, t]
            nxt = 0
            while nxt < S - 1 and u >= cum_P[s, nxt]:
                nxt += 1
            s = nxt
            out[r, t] = 0 if u_emit[r, t] < mu[s] else 1
    return out


def _sample_rows_numpy(cum_pi, cum_P, mu, u_state, u_emit):
    rows, length = u_state.shape
    S = cum_pi.shape[0]
    out = np.empty((rows, length), dtype=np.uint8)
    s = np.minimum((u_state[:, 0, None] >= cum_pi[None, :]).sum(axis=1), S - 1)
    out[:, 0] = u_emit[:, 0] >= mu[s]
    for t in range(1, length):
        s = np.minimum((u_state[:, t, None] >= cum_P[s]).sum(axis=1), S - 1)
        out[:, t] = u_emit[:, t] >= mu[s]
    return out


def sample_rows(params: HmmParams, rows: int, length: int,
                rng: np.random.Generator) -> np.ndarray:
    """Draw ``rows`` independent runs of ``length`` bits, each from a stationary start."""
    if rows < 0 or length < 1:
        raise ValueError("need rows >= 0 and length >= 1")
    pi = stationary_distribution(params)
    cum_pi = np.cumsum(pi)
    cum_P = np.cumsum(params.transition, axis=1)
    mu = np.ascontiguousarray(params.emission_zero)
    u_state = rng.random((rows, length))
    u_emit = rng.random((rows, length))
    kernel = _sample_rows_kernel if USE_NUMBA else _sample_rows_numpy
    return kernel(cum_pi, cum_P, mu, u_state, u_emit)


def sample(params: HmmParams, n: int, seed: int) -> ErrorSequence:
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    bits = sample_rows(params, 1, n, rng)[0]
    return ErrorSequence(bits=bits, seed=seed)


# ---------------------------------------------------------------------------
# forward recursion


def initial_belief(params: HmmParams, rows: int | None = None) -> np.ndarray:
    pi = stationary_distribution(params)
    if rows is None:
        return pi
    return np.tile(pi, (rows, 1))


def forward_update(belief: np.ndarray, observed_bit, params: HmmParams) -> np.ndarray:
    """One forward-recursion step; works on one belief or a stack of them.

    ``belief`` has shape ``(S,)`` or ``(rows, S)``; ``observed_bit`` is a
    scalar or a length-``rows`` array.
    """
    b = np.asarray(belief, dtype=np.float64)
    bit = np.asarray(observed_bit)
    mu = params.emission_zero
    pred = b @ params.transition
    lik = np.where(bit[..., None] == 0, mu, 1.0 - mu)
    post = pred * lik
    total = post.sum(axis=-1, keepdims=True)
    if np.any(total <= 0.0):
        raise DegenerateObservationError("observed bit has zero probability under the model")
    return post / total


def predictive_prob_one(belief: np.ndarray, params: HmmParams) -> np.ndarray:
    """P(next bit = 1 | past), unclamped."""
    pred = np.asarray(belief, dtype=np.float64) @ params.transition
    p1 = pred @ (1.0 - params.emission_zero)
    p0 = pred @ params.emission_zero
    return p1 / (p0 + p1)


def predictive_llr(belief: np.ndarray, params: HmmParams):
    """log P(e=1 | past) / P(e=0 | past), saturated at about +-27.6."""
    p1 = np.clip(predictive_prob_one(belief, params), PROB_CLAMP, 1.0 - PROB_CLAMP)
    gamma = np.log(p1) - np.log1p(-p1)
    return float(gamma) if np.ndim(gamma) == 0 else gamma


# ---------------------------------------------------------------------------
# entropies


def binary_entropy(p):
    p = np.asarray(p, dtype=np.float64)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(np.where(p > 0, p * np.log2(p), 0.0) + np.where(q > 0, q * np.log2(q), 0.0))
    return float(h) if h.ndim == 0 else h


def _enum_entropy(pred: np.ndarray, weight: np.ndarray, levels: int,
                  P: np.ndarray, mu: np.ndarray) -> float:
    """Sum over all ``levels``-bit continuations of weight * h(P(next=1)).

    ``pred`` holds predicted (pre-emission) state distributions, one per
    past; ``weight`` their probabilities.
    """
    if levels == 0:
        p1 = pred @ (1.0 - mu)
        return float(np.sum(weight * binary_entropy(p1)))
    if pred.shape[0] * 2 > _CHUNK and pred.shape[0] > 1:
        half = pred.shape[0] // 2
        return (_enum_entropy(pred[:half], weight[:half], levels, P, mu)
                + _enum_entropy(pred[half:], weight[half:], levels, P, mu))
    lik0 = pred * mu
    lik1 = pred * (1.0 - mu)
    p0 = lik0.sum(axis=1)
    p1 = lik1.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        f0 = np.where(p0[:, None] > 0, lik0 / p0[:, None], 0.0) @ P
        f1 = np.where(p1[:, None] > 0, lik1 / p1[:, None], 0.0) @ P
    new_pred = np.concatenate([f0, f1])
    new_w = np.concatenate([weight * p0, weight * p1])
    keep = new_w > 0
    return _enum_entropy(new_pred[keep], new_w[keep], levels - 1, P, mu)


def _exact_conditional_entropy(params: HmmParams, M: int, start: np.ndarray) -> float:
    return _enum_entropy(start[None, :].astype(np.float64), np.ones(1), M,
                         params.transition, params.emission_zero)


def conditional_entropy(params: HmmParams, M: int, mode: str = "exact",
                        samples: int = 200_000, seed: int = 0) -> float:
    """H(e_{M+1} | e_M, ..., e_1) in bits for a stationary-start run."""
    if M < 0:
        raise ValueError("M must be >= 0")
    if mode == "exact":
        if M > EXACT_MAX_M:
            raise EnumerationLimitError(f"exact mode supports M <= {EXACT_MAX_M}, got {M}")
        h = _exact_conditional_entropy(params, M, stationary_distribution(params))
    elif mode == "monte_carlo":
        if samples < MC_MIN_SAMPLES:
            raise ValueError(f"monte_carlo mode needs samples >= {MC_MIN_SAMPLES}")
        rng = np.random.default_rng(seed)
        belief = initial_belief(params, samples)
        if M > 0:
            bits = sample_rows(params, samples, M, rng)
            for t in range(M):
                belief = forward_update(belief, bits[:, t], params)
        h = float(np.mean(binary_entropy(predictive_prob_one(belief, params))))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return min(max(h, 0.0), 1.0)


def entropy_rate_sandwich(params: HmmParams, M: int) -> tuple[float, float]:
    """Bounds (lower, upper) on the entropy rate from an M-bit past.

    ``upper`` is H(e_{M+1}|e_M..e_1); ``lower`` also conditions on the state
    that emitted e_1.
    """
    if M > EXACT_MAX_M:
        raise EnumerationLimitError(f"exact mode supports M <= {EXACT_MAX_M}, got {M}")
    pi = stationary_distribution(params)
    upper = _exact_conditional_entropy(params, M, pi)
    S = params.num_states
    lower = 0.0
    for s in range(S):
        if pi[s] > 0:
            lower += pi[s] * _exact_conditional_entropy(params, M, np.eye(S)[s])
    return float(min(lower, upper)), float(upper)


def entropy_curve(params: HmmParams, M_max: int, mode: str = "exact",
                  samples: int = 200_000, seed: int = 0) -> list[tuple[int, float]]:
    if mode == "exact" and M_max > EXACT_MAX_M:
        raise EnumerationLimitError(f"exact mode supports M <= {EXACT_MAX_M}, got {M_max}")
    return [(M, conditional_entropy(params, M, mode, samples, seed)) for M in range(M_max + 1)]


def two_step_joint(params: HmmParams) -> np.ndarray:
    """Exact P(e_t = a, e_{t+1} = b) at stationarity as a 2x2 table."""
    pi = stationary_distribution(params)
    mu = params.emission_zero
    em = np.stack([mu, 1.0 - mu])  # em[bit, state]
    joint = np.empty((2, 2))
    for a in range(2):
        for b in range(2):
            joint[a, b] = np.sum(pi[:, None] * em[a][:, None] * params.transition * em[b][None, :])
    return joint
